#include "mf/probe.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mf {

std::vector<std::string> ConceptBank::ranked() const {
  std::vector<std::string> words;
  words.reserve(entries.size());
  for (const auto& [w, s] : entries) words.push_back(w);
  std::sort(words.begin(), words.end(), [this](const auto& a, const auto& b) {
    const double ma = entries.at(a).mean(), mb = entries.at(b).mean();
    if (ma != mb) return ma > mb;
    return a < b;
  });
  return words;
}

std::vector<std::string> ConceptBank::top_k(std::size_t k) const {
  std::vector<std::string> words = ranked();
  if (words.size() > k) words.resize(k);
  return words;
}

Context mask_context(const Context& context, const std::set<int>& words) {
  Context out;
  out.reserve(context.size());
  for (const Ids& utt : context) {
    Ids kept;
    for (int t : utt)
      if (!words.count(t)) kept.push_back(t);
    out.push_back(std::move(kept));
  }
  return out;
}

namespace {

bool context_contains(const Context& context, int word) {
  for (const Ids& utt : context)
    for (int t : utt)
      if (t == word) return true;
  return false;
}

// Unique candidate word ids in ascending order; reserved ids and stopwords
// are never probed.
std::vector<int> candidate_words(const Context& context, const ProbeConfig& cfg) {
  std::set<int> uniq;
  for (const Ids& utt : context)
    for (int t : utt)
      if (t > Vocabulary::kEos && !cfg.stopwords.count(t)) uniq.insert(t);
  return {uniq.begin(), uniq.end()};
}

}  // namespace

double pmi_word(const ResponseScorer& scorer, const Context& context,
                const Ids& response, int word) {
  if (!context_contains(context, word)) return 0.0;
  const double full = scorer.log_prob(context, response);
  const double masked = scorer.log_prob(mask_context(context, {word}), response);
  return full - masked;
}

std::vector<Attribution> probe_pair(const ResponseScorer& scorer,
                                    const ContextResponsePair& pair,
                                    const ProbeConfig& config, Pcg32& rng) {
  std::vector<Attribution> out;
  const std::vector<int> words = candidate_words(pair.context, config);
  if (words.empty()) return out;
  const double full = scorer.log_prob(pair.context, pair.response);

  if (config.mode == ProbeMode::SingleWord) {
    for (int w : words) {
      const double masked =
          scorer.log_prob(mask_context(pair.context, {w}), pair.response);
      out.push_back({w, full - masked});
    }
    return out;
  }

  for (std::size_t p = 0; p < config.probes_per_pair; ++p) {
    std::set<int> mask;
    for (int w : words)
      if (rng.next_double() < config.mask_probability) mask.insert(w);
    if (mask.empty()) continue;  // nothing masked, nothing to attribute
    const double masked =
        scorer.log_prob(mask_context(pair.context, mask), pair.response);
    const double delta = full - masked;
    for (int w : mask) out.push_back({w, delta});
  }
  return out;
}

ConceptBank build_concept_bank(const ResponseScorer& scorer,
                               const std::vector<ContextResponsePair>& dataset,
                               const Vocabulary& vocab, const ProbeConfig& config,
                               std::uint64_t seed) {
  if (dataset.empty()) throw DataError("build_concept_bank: empty dataset");
  Pcg32 rng(seed, rng_stream::kProbe);
  std::map<std::string, ConceptStats> raw;
  for (const auto& pair : dataset) {
    for (const auto& attr : probe_pair(scorer, pair, config, rng)) {
      ConceptStats& s = raw[vocab.word(attr.word)];
      s.sum_delta += attr.delta;
      s.n += 1;
    }
  }
  ConceptBank bank;
  bank.seed = seed;
  bank.probe_config =
      config.mode == ProbeMode::SingleWord ? "single-word" : "multi-word";
  for (const auto& [word, s] : raw)
    if (s.mean() >= config.threshold && s.n >= config.min_count)
      bank.entries[word] = s;
  return bank;
}

Context extract_context_concepts(const Context& context, const ConceptBank& bank,
                                 const Vocabulary& vocab) {
  Context out;
  out.reserve(context.size());
  for (const Ids& utt : context) {
    Ids concepts;
    for (int t : utt)
      if (t > Vocabulary::kEos && bank.contains(vocab.word(t)))
        concepts.push_back(t);
    out.push_back(std::move(concepts));
  }
  return out;
}

void save_concept_bank(const ConceptBank& bank, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << "word\tmean\tn\tsum\n";
  char buf[64];
  for (const auto& word : bank.ranked()) {
    const ConceptStats& s = bank.entries.at(word);
    out << word << '\t';
    std::snprintf(buf, sizeof buf, "%.17g", s.mean());
    out << buf << '\t' << s.n << '\t';
    std::snprintf(buf, sizeof buf, "%.17g", s.sum_delta);
    out << buf << '\n';
  }
}

ConceptBank load_concept_bank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "word\tmean\tn\tsum")
    throw DataError(path + ": bad concept-bank header");
  ConceptBank bank;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string word, mean_str, n_str, sum_str;
    if (!std::getline(row, word, '\t') || !std::getline(row, mean_str, '\t') ||
        !std::getline(row, n_str, '\t') || !std::getline(row, sum_str, '\t'))
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed row");
    ConceptStats s;
    s.n = std::stoull(n_str);
    s.sum_delta = std::stod(sum_str);
    if (s.n == 0)
      throw DataError(path + ":" + std::to_string(lineno) + ": zero count");
    bank.entries[word] = s;
  }
  return bank;
}

}  // namespace mf
