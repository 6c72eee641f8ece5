#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mf/autograd.hpp"
#include "mf/corpus.hpp"
#include "mf/hred.hpp"
#include "mf/probe.hpp"

namespace mf {

struct FocusConfig {
  std::size_t embedding_dim = 64;
  std::size_t utterance_hidden = 128;
  std::size_t context_hidden = 256;
  std::size_t decoder_hidden = 256;
  std::size_t max_response_len = 20;
  std::size_t max_concepts = 8;
  std::size_t vocab_size = 0;

  static FocusConfig preset(const std::string& name);
};

// Word embeddings are shared by both encoders and both decoders.
ParameterSet init_focus_params(const FocusConfig& config, std::uint64_t seed);

struct EncodedContext {
  Var v = nullptr;                    // final context state, dim H_c
  std::vector<Var> utterance_states;  // one per turn, dim H_c
};

// Context GRU input per turn: [utterance bi-GRU final ++ concept bi-GRU final]
// (dim 4*H_u); an empty concept list contributes the zero vector.
EncodedContext encode_with_concepts(Tape& tape, ParameterSet& ps,
                                    const FocusConfig& config,
                                    const Context& context, const Context& z_c);

// Per response position: q = PMI/(1+PMI) when PMI > 0, else 0.
using QWeights = std::vector<double>;

inline double q_from_pmi(double pmi) { return pmi > 0.0 ? pmi / (1.0 + pmi) : 0.0; }

QWeights compute_q(ParameterSet& ps, const FocusConfig& config,
                   const Context& context, const Context& z_c,
                   const Ids& response);

// Independent Bernoulli inclusion per position; order preserved.
std::vector<std::size_t> sample_response_concept_positions(const QWeights& q,
                                                           Pcg32& rng);
Ids gather_positions(const Ids& response, const std::vector<std::size_t>& positions);

// Teacher-forced response scoring under the copy decoder for a fixed z_r.
// Empty z_r is the pure-generation path.
ScoredResponse focus_log_prob_response(ParameterSet& ps, const FocusConfig& config,
                                       const Context& context, const Context& z_c,
                                       const Ids& z_r, const Ids& response);

// Concept-decoder log p(w_l | w_{1:l-1}, c, z_c) for every response position.
std::vector<double> focus_concept_log_probs(ParameterSet& ps,
                                            const FocusConfig& config,
                                            const Context& context,
                                            const Context& z_c,
                                            const Ids& response);

struct FocusLoss {
  Var concept_loss = nullptr;   // -sum_l q_l log p_concept(w_l | ...)
  Var response_loss = nullptr;  // -log p_resp(r | z_r, c, z_c)
};

FocusLoss focus_loss_terms(Tape& tape, ParameterSet& ps, const FocusConfig& config,
                           const Context& context, const Context& z_c,
                           const Ids& response, const QWeights& q, const Ids& z_r);

struct FocusTrainResult {
  ParameterSet params;
  std::vector<EpochLog> log;  // val_nll is the total (concept+response) loss
  std::size_t best_epoch = 0;
  bool empty_bank = false;
};

// Alternating training: q is recomputed from the current model every batch
// and treated as a constant during backprop; one z_r sample per pair.
FocusTrainResult train_mask_focus(const std::vector<ContextResponsePair>& train,
                                  const std::vector<ContextResponsePair>& val,
                                  const Vocabulary& vocab, const ConceptBank& bank,
                                  const FocusConfig& config,
                                  const TrainOptions& opts, std::uint64_t seed);

struct GeneratedTriple {
  Context z_c;
  Ids z_r;
  Ids response;
};

// Two-stage greedy generation: concept decoder emits z_r, copy decoder emits
// the response. EOS terminates each stage and is not included.
GeneratedTriple focus_generate(ParameterSet& ps, const FocusConfig& config,
                               const Context& context, const ConceptBank& bank,
                               const Vocabulary& vocab, std::size_t max_concepts,
                               std::size_t max_len);

}  // namespace mf
