#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mf/corpus.hpp"
#include "mf/rng.hpp"
#include "mf/scorer.hpp"

namespace mf {

struct ConceptStats {
  double sum_delta = 0.0;
  std::size_t n = 0;
  double mean() const { return n ? sum_delta / static_cast<double>(n) : 0.0; }
};

// word -> accumulated PMI statistics, plus provenance of the run that built it.
struct ConceptBank {
  std::map<std::string, ConceptStats> entries;
  std::string scorer_id;
  std::string probe_config;
  std::uint64_t seed = 0;

  bool contains(const std::string& word) const { return entries.count(word) > 0; }
  // Words ranked by mean descending, ties by word ascending.
  std::vector<std::string> ranked() const;
  std::vector<std::string> top_k(std::size_t k) const;
};

enum class ProbeMode { SingleWord, MultiWord };

struct ProbeConfig {
  ProbeMode mode = ProbeMode::SingleWord;
  double mask_probability = 0.3;  // rho, multi-word mode
  std::size_t probes_per_pair = 4;  // P, multi-word mode
  double threshold = 0.1;  // tau on mean PMI
  std::size_t min_count = 1;
  std::set<int> stopwords;  // token ids; reserved ids are always excluded
};

// Delete every occurrence of the given word ids; utterances may become empty
// but stay in place.
Context mask_context(const Context& context, const std::set<int>& words);

// log p(r|c) - log p(r|c^-w); exactly 0 when w never occurs in the context.
double pmi_word(const ResponseScorer& scorer, const Context& context,
                const Ids& response, int word);

struct Attribution {
  int word = 0;
  double delta = 0.0;
};

std::vector<Attribution> probe_pair(const ResponseScorer& scorer,
                                    const ContextResponsePair& pair,
                                    const ProbeConfig& config, Pcg32& rng);

ConceptBank build_concept_bank(const ResponseScorer& scorer,
                               const std::vector<ContextResponsePair>& dataset,
                               const Vocabulary& vocab, const ProbeConfig& config,
                               std::uint64_t seed);

// Per-utterance subsequences of tokens present in the bank (duplicates kept).
Context extract_context_concepts(const Context& context, const ConceptBank& bank,
                                 const Vocabulary& vocab);

// TSV export/import: header "word\tmean\tn\tsum", sorted by mean desc, word asc.
void save_concept_bank(const ConceptBank& bank, const std::string& path);
ConceptBank load_concept_bank(const std::string& path);

}  // namespace mf
