#include "mf/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>

namespace mf {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const TokenSeq& seq, std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (seq.size() < n) return counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i)
    ++counts[Ngram(seq.begin() + static_cast<std::ptrdiff_t>(i),
                   seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

std::set<std::string> lexicon_overlap(const TokenSeq& seq, const Lexicon& lex) {
  std::set<std::string> out;
  for (const auto& w : seq)
    if (lex.entries.count(w)) out.insert(w);
  return out;
}

}  // namespace

double bleu(const std::vector<TokenSeq>& hypotheses,
            const std::vector<TokenSeq>& references, std::size_t max_n) {
  if (hypotheses.size() != references.size())
    throw ContractViolation("bleu: hypothesis/reference count mismatch");
  if (hypotheses.empty()) throw ContractViolation("bleu: empty corpus");

  std::vector<double> matched(max_n, 0.0), total(max_n, 0.0);
  std::size_t hyp_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += hypotheses[i].size();
    ref_len += references[i].size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      auto hc = ngram_counts(hypotheses[i], n);
      auto rc = ngram_counts(references[i], n);
      for (const auto& [gram, count] : hc) {
        total[n - 1] += static_cast<double>(count);
        auto it = rc.find(gram);
        if (it != rc.end())
          matched[n - 1] += static_cast<double>(std::min(count, it->second));
      }
    }
  }

  if (matched[0] == 0.0) return 0.0;
  bool smooth = false;
  for (std::size_t n = 0; n < max_n; ++n)
    if (matched[n] == 0.0) smooth = true;

  double log_prec = 0.0;
  for (std::size_t n = 0; n < max_n; ++n) {
    double m = matched[n], t = total[n];
    if (smooth && n >= 1) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0) return 0.0;  // unsmoothed unigram order
    log_prec += std::log(m / t);
  }
  log_prec /= static_cast<double>(max_n);

  const double bp = hyp_len >= ref_len
                        ? 1.0
                        : std::exp(1.0 - static_cast<double>(ref_len) /
                                             static_cast<double>(hyp_len));
  return bp * std::exp(log_prec);
}

Lexicon load_lexicon(const std::string& name, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open lexicon '" + path + "'");
  Lexicon lex;
  lex.name = name;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string word;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c)))
        word += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (!word.empty()) lex.entries.insert(word);
  }
  if (lex.entries.empty()) throw DataError("lexicon '" + path + "' is empty");
  return lex;
}

PrfReport lexicon_prf(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<TokenSeq>& references,
                      const Lexicon& lexicon, Averaging averaging) {
  if (hypotheses.size() != references.size())
    throw ContractViolation("lexicon_prf: hypothesis/reference count mismatch");
  if (lexicon.entries.empty()) throw DataError("lexicon_prf: empty lexicon");

  PrfReport report;
  report.averaging = averaging;
  double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  double micro_tp = 0.0, micro_pred = 0.0, micro_gold = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto gold = lexicon_overlap(references[i], lexicon);
    if (gold.empty()) continue;  // unscorable pair
    const auto pred = lexicon_overlap(hypotheses[i], lexicon);
    std::size_t tp = 0;
    for (const auto& w : pred)
      if (gold.count(w)) ++tp;
    const double p = pred.empty() ? 0.0
                                  : static_cast<double>(tp) /
                                        static_cast<double>(pred.size());
    const double r = static_cast<double>(tp) / static_cast<double>(gold.size());
    const double f = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    sum_p += p;
    sum_r += r;
    sum_f += f;
    micro_tp += static_cast<double>(tp);
    micro_pred += static_cast<double>(pred.size());
    micro_gold += static_cast<double>(gold.size());
    report.per_pair_f1.push_back(f);
    ++report.scored_pairs;
  }
  if (report.scored_pairs == 0)
    throw DataError("lexicon_prf: no scorable pairs (all gold sets empty)");

  if (averaging == Averaging::Macro) {
    const double n = static_cast<double>(report.scored_pairs);
    report.precision = sum_p / n;
    report.recall = sum_r / n;
    report.f1 = sum_f / n;
  } else {
    report.precision = micro_pred > 0.0 ? micro_tp / micro_pred : 0.0;
    report.recall = micro_gold > 0.0 ? micro_tp / micro_gold : 0.0;
    report.f1 = (report.precision + report.recall) > 0.0
                    ? 2.0 * report.precision * report.recall /
                          (report.precision + report.recall)
                    : 0.0;
  }
  return report;
}

double probe_recall(const std::vector<std::string>& top_k_words,
                    const std::vector<std::string>& planted) {
  if (planted.empty()) throw ContractViolation("probe_recall: no planted concepts");
  std::size_t found = 0;
  for (const auto& w : planted)
    if (std::find(top_k_words.begin(), top_k_words.end(), w) != top_k_words.end())
      ++found;
  return static_cast<double>(found) / static_cast<double>(planted.size());
}

double probe_recall(const ConceptBank& bank,
                    const std::vector<std::string>& planted, std::size_t k) {
  if (k < 1) throw ContractViolation("probe_recall: K must be >= 1");
  return probe_recall(bank.top_k(k), planted);
}

}  // namespace mf
