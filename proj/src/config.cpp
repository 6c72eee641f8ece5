#include "mf/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>

#include "mf/error.hpp"

namespace mf {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected a non-negative integer, got '" +
                    value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw DataError("config key '" + key + "': expected a number, got '" +
                    value + "'");
  }
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(RunConfig&, const std::string& key,
                                  const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.seed = parse_size(k, v);
       }},
      {"embedding_dim", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.embedding_dim = parse_size(k, v);
       }},
      {"utterance_hidden", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.utterance_hidden = parse_size(k, v);
       }},
      {"context_hidden", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.context_hidden = parse_size(k, v);
       }},
      {"decoder_hidden", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.decoder_hidden = parse_size(k, v);
       }},
      {"max_response_len", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.max_response_len = parse_size(k, v);
       }},
      {"vocab_size", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.vocab_size = parse_size(k, v);
       }},
      {"max_concepts", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.max_concepts = parse_size(k, v);
       }},
      {"probe_mode", [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v != "single" && v != "multi")
           throw DataError("config key '" + k + "': expected 'single' or 'multi', got '" +
                           v + "'");
         c.probe_mode = v;
       }},
      {"mask_probability", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.mask_probability = parse_real(k, v);
       }},
      {"probes_per_pair", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.probes_per_pair = parse_size(k, v);
       }},
      {"threshold", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.threshold = parse_real(k, v);
       }},
      {"min_count", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.min_count = parse_size(k, v);
       }},
      {"learning_rate", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.learning_rate = parse_real(k, v);
       }},
      {"batch_size", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.batch_size = parse_size(k, v);
       }},
      {"max_epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.max_epochs = parse_size(k, v);
       }},
      {"patience", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.patience = parse_size(k, v);
       }},
      {"train_size", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.train_size = parse_size(k, v);
       }},
      {"focus_learning_rate", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.focus_learning_rate = parse_real(k, v);
       }},
      {"focus_max_epochs", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.focus_max_epochs = parse_size(k, v);
       }},
      {"synth_concepts", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth_concepts = parse_size(k, v);
       }},
      {"synth_noise_vocab", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth_noise_vocab = parse_size(k, v);
       }},
      {"synth_dialogues", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.synth_dialogues = parse_size(k, v);
       }},
      {"chat_turns", [](RunConfig& c, const std::string& k, const std::string& v) {
         c.chat_turns = parse_size(k, v);
       }},
      {"speaker_filter", [](RunConfig& c, const std::string&, const std::string& v) {
         c.speaker_filter = v;
       }},
  };
  return table;
}

void apply(RunConfig& config, const std::map<std::string, std::string>& kv) {
  const auto& table = setters();
  for (const auto& [key, value] : kv) {
    auto it = table.find(key);
    if (it == table.end()) throw DataError("unknown config key '" + key + "'");
    it->second(config, key, value);
  }
}

RunConfig preset_defaults(const std::string& preset) {
  RunConfig c;
  c.preset = preset;
  const HredConfig dims = HredConfig::preset(preset);  // throws on bad name
  c.embedding_dim = dims.embedding_dim;
  c.utterance_hidden = dims.utterance_hidden;
  c.context_hidden = dims.context_hidden;
  c.decoder_hidden = dims.decoder_hidden;
  if (preset == "small") {
    // Desk-scale defaults: tiny dims train far from the quoted hyperparameters.
    c.learning_rate = 1e-2;
    c.vocab_size = 2000;
  }
  return c;
}

}  // namespace

HredConfig RunConfig::hred(std::size_t vocab) const {
  HredConfig c;
  c.embedding_dim = embedding_dim;
  c.utterance_hidden = utterance_hidden;
  c.context_hidden = context_hidden;
  c.decoder_hidden = decoder_hidden;
  c.max_response_len = max_response_len;
  c.vocab_size = vocab;
  return c;
}

FocusConfig RunConfig::focus(std::size_t vocab) const {
  FocusConfig c;
  c.embedding_dim = embedding_dim;
  c.utterance_hidden = utterance_hidden;
  c.context_hidden = context_hidden;
  c.decoder_hidden = decoder_hidden;
  c.max_response_len = max_response_len;
  c.max_concepts = max_concepts;
  c.vocab_size = vocab;
  return c;
}

ProbeConfig RunConfig::probe() const {
  ProbeConfig c;
  c.mode = probe_mode == "multi" ? ProbeMode::MultiWord : ProbeMode::SingleWord;
  c.mask_probability = mask_probability;
  c.probes_per_pair = probes_per_pair;
  c.threshold = threshold;
  c.min_count = min_count;
  return c;
}

std::map<std::string, std::string> RunConfig::echo() const {
  return {
      {"preset", preset},
      {"seed", std::to_string(seed)},
      {"embedding_dim", std::to_string(embedding_dim)},
      {"utterance_hidden", std::to_string(utterance_hidden)},
      {"context_hidden", std::to_string(context_hidden)},
      {"decoder_hidden", std::to_string(decoder_hidden)},
      {"max_response_len", std::to_string(max_response_len)},
      {"vocab_size", std::to_string(vocab_size)},
      {"max_concepts", std::to_string(max_concepts)},
      {"probe_mode", probe_mode},
      {"mask_probability", format_real(mask_probability)},
      {"probes_per_pair", std::to_string(probes_per_pair)},
      {"threshold", format_real(threshold)},
      {"min_count", std::to_string(min_count)},
      {"learning_rate", format_real(learning_rate)},
      {"batch_size", std::to_string(batch_size)},
      {"max_epochs", std::to_string(max_epochs)},
      {"patience", std::to_string(patience)},
      {"train_size", std::to_string(train_size)},
      {"focus_learning_rate", format_real(focus_learning_rate)},
      {"focus_max_epochs", std::to_string(focus_max_epochs)},
      {"synth_concepts", std::to_string(synth_concepts)},
      {"synth_noise_vocab", std::to_string(synth_noise_vocab)},
      {"synth_dialogues", std::to_string(synth_dialogues)},
      {"chat_turns", std::to_string(chat_turns)},
      {"speaker_filter", speaker_filter},
  };
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw DataError("config file '" + path + "' line " +
                      std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      throw DataError("config file '" + path + "' line " +
                      std::to_string(line_no) + ": empty key");
    if (kv.count(key))
      throw DataError("config file '" + path + "' line " +
                      std::to_string(line_no) + ": duplicate key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

RunConfig resolve_config(const std::string& preset,
                         const std::map<std::string, std::string>& file_kv,
                         const std::map<std::string, std::string>& flag_kv) {
  RunConfig config = preset_defaults(preset);
  apply(config, file_kv);
  apply(config, flag_kv);
  return config;
}

}  // namespace mf
