#pragma once

#include <set>
#include <string>
#include <vector>

#include "mf/error.hpp"
#include "mf/probe.hpp"

namespace mf {

using TokenSeq = std::vector<std::string>;

// Corpus-level BLEU, single reference per hypothesis. Geometric mean of
// modified n-gram precisions times the brevity penalty. If any precision is
// zero, add-one smoothing is applied to orders n >= 2; a zero unigram
// precision makes the score 0.
double bleu(const std::vector<TokenSeq>& hypotheses,
            const std::vector<TokenSeq>& references, std::size_t max_n = 4);

struct Lexicon {
  std::string name;
  std::set<std::string> entries;  // lowercase
};

Lexicon load_lexicon(const std::string& name, const std::string& path);

enum class Averaging { Macro, Micro };

struct PrfReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t scored_pairs = 0;  // pairs with a non-empty gold set
  Averaging averaging = Averaging::Macro;
  std::vector<double> per_pair_f1;  // retained pairs only
};

// Set-intersection scoring against a lexicon; pairs whose reference shares no
// word with the lexicon are skipped. Throws when nothing is scorable.
PrfReport lexicon_prf(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<TokenSeq>& references,
                      const Lexicon& lexicon,
                      Averaging averaging = Averaging::Macro);

// Fraction of planted concepts found in the bank's top-K (by mean PMI).
double probe_recall(const std::vector<std::string>& top_k_words,
                    const std::vector<std::string>& planted);
double probe_recall(const ConceptBank& bank,
                    const std::vector<std::string>& planted, std::size_t k);

}  // namespace mf
