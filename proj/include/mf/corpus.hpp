#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mf/error.hpp"

namespace mf {

struct Turn {
  std::string speaker;
  std::string text;
};

struct Conversation {
  std::string id;
  std::vector<Turn> turns;
};

// Reserved ids are fixed: 0=PAD 1=UNK 2=SOS 3=EOS.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSos = 2;
  static constexpr int kEos = 3;

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& words);  // full id->word list

  int add(const std::string& word);
  int id(const std::string& word) const;  // kUnk when absent
  const std::string& word(int id) const;
  bool contains(const std::string& word) const { return map_.count(word) > 0; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> map_;
};

using Ids = std::vector<int>;
using Context = std::vector<Ids>;  // one id sequence per utterance

struct ContextResponsePair {
  Context context;
  Ids response;  // ends with EOS
  std::string conversation_id;
  std::size_t turn_index = 0;
};

std::vector<std::string> tokenize(const std::string& text);

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& streams,
                       std::size_t max_size);

Ids encode(const std::vector<std::string>& tokens, const Vocabulary& vocab);
std::vector<std::string> decode(const Ids& ids, const Vocabulary& vocab);

std::vector<ContextResponsePair> extract_pairs(
    const Conversation& conv, const Vocabulary& vocab,
    const std::optional<std::string>& speaker_filter = std::nullopt);

std::vector<Conversation> load_jsonl(const std::string& path);
void save_jsonl(const std::vector<Conversation>& corpus, const std::string& path);

// Synthetic planted-concept corpus. Each dialogue's context hides 1-3 concept
// words among noise; the response is "fix <mapped words> done". The mapping
// concept -> response word is the verification ground truth.
struct SynthSpec {
  std::size_t concept_count = 4;       // K
  std::size_t noise_vocab_size = 20;   // M >= K
  std::size_t dialogues = 100;         // N
  std::uint64_t seed = 1;
};

struct SynthCorpus {
  std::vector<Conversation> conversations;
  std::map<std::string, std::string> ground_truth;  // concept word -> response word
  std::uint64_t seed = 0;
};

SynthCorpus synth_generate(const SynthSpec& spec);

void save_ground_truth(const SynthCorpus& corpus, const std::string& path);
std::map<std::string, std::string> load_ground_truth(const std::string& path);

}  // namespace mf
