#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mf/autograd.hpp"
#include "mf/corpus.hpp"
#include "mf/scorer.hpp"

namespace mf {

struct HredConfig {
  std::size_t embedding_dim = 64;     // E
  std::size_t utterance_hidden = 128; // H_u per direction
  std::size_t context_hidden = 256;   // H_c
  std::size_t decoder_hidden = 256;   // H_d
  std::size_t max_response_len = 20;
  std::size_t vocab_size = 0;         // set from data

  // "ubuntu" (500,1000,2000,2000), "techsupport" halved, "small" for tests.
  static HredConfig preset(const std::string& name);
};

ParameterSet init_hred_params(const HredConfig& config, std::uint64_t seed);

// Hierarchical encoding: bi-GRU per utterance (PAD skipped, empty utterance
// contributes a zero embedding), uni-GRU across utterances. Returns v (H_c).
Var hred_encode_context(Tape& tape, ParameterSet& ps, const HredConfig& config,
                        const Context& context);

struct ScoredResponse {
  double total = 0.0;
  std::vector<double> per_token;
};

// Teacher-forced log p(response | context); forward only.
ScoredResponse hred_log_prob(ParameterSet& ps, const HredConfig& config,
                             const Context& context, const Ids& response);

// Summed teacher-forcing NLL of the pair, on the caller's tape (training).
Var hred_pair_nll(Tape& tape, ParameterSet& ps, const HredConfig& config,
                  const ContextResponsePair& pair);

// Greedy argmax decode; EOS terminates and is not included in the output.
Ids hred_generate(ParameterSet& ps, const HredConfig& config,
                  const Context& context, std::size_t max_len);

struct TrainOptions {
  double lr = 1.5e-4;
  std::size_t batch_size = 10;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_nll = 0.0;  // mean per-token
  double val_nll = 0.0;
};

struct HredTrainResult {
  ParameterSet params;
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
};

HredTrainResult train_hred(const std::vector<ContextResponsePair>& train,
                           const std::vector<ContextResponsePair>& val,
                           const HredConfig& config, const TrainOptions& opts,
                           std::uint64_t seed);

double mean_token_nll(ParameterSet& ps, const HredConfig& config,
                      const std::vector<ContextResponsePair>& pairs);

class HredScorer final : public ResponseScorer {
 public:
  HredScorer(ParameterSet params, HredConfig config)
      : params_(std::move(params)), config_(config) {}
  double log_prob(const Context& context, const Ids& response) const override {
    return hred_log_prob(params_, config_, context, response).total;
  }
  const ParameterSet& params() const { return params_; }
  const HredConfig& config() const { return config_; }

 private:
  mutable ParameterSet params_;  // tape access is non-const; scoring never mutates
  HredConfig config_;
};

}  // namespace mf
