#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "mf/focus.hpp"
#include "mf/hred.hpp"
#include "mf/probe.hpp"

namespace mf {

// Fully resolved run configuration. Precedence: command-line flags beat the
// config file, which beats the preset defaults; unknown keys are rejected.
struct RunConfig {
  std::string preset = "small";
  std::uint64_t seed = 1;

  // Model dimensions.
  std::size_t embedding_dim = 64;
  std::size_t utterance_hidden = 128;
  std::size_t context_hidden = 256;
  std::size_t decoder_hidden = 256;
  std::size_t max_response_len = 20;
  std::size_t vocab_size = 20000;  // cap for build_vocab
  std::size_t max_concepts = 8;

  // Probe.
  std::string probe_mode = "single";  // "single" | "multi"
  double mask_probability = 0.3;
  std::size_t probes_per_pair = 4;
  double threshold = 0.1;
  std::size_t min_count = 1;

  // Training.
  double learning_rate = 1.5e-4;
  std::size_t batch_size = 10;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  std::size_t train_size = 0;  // 0 = use every training pair
  double focus_learning_rate = 0.0;   // 0 = inherit learning_rate
  std::size_t focus_max_epochs = 0;   // 0 = inherit max_epochs

  // Synthetic data.
  std::size_t synth_concepts = 4;
  std::size_t synth_noise_vocab = 20;
  std::size_t synth_dialogues = 100;

  // Misc.
  std::size_t chat_turns = 8;  // REPL context truncation T
  std::string speaker_filter;  // empty = pairs at every turn boundary

  HredConfig hred(std::size_t vocab) const;
  FocusConfig focus(std::size_t vocab) const;
  ProbeConfig probe() const;

  // Every resolved key/value, for run logs and checkpoint config echo.
  std::map<std::string, std::string> echo() const;
};

// Flat `key = value` UTF-8 text; '#' starts a comment; blank lines ignored.
std::map<std::string, std::string> load_config_file(const std::string& path);

// Resolve preset defaults, then file entries, then flag entries. Unknown keys
// or unparseable values raise DataError naming the key.
RunConfig resolve_config(const std::string& preset,
                         const std::map<std::string, std::string>& file_kv,
                         const std::map<std::string, std::string>& flag_kv);

}  // namespace mf
