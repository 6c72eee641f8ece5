#include "mf/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mf/rng.hpp"

namespace mf {

using nlohmann::json;

namespace {
const char* kReserved[4] = {"<pad>", "<unk>", "<sos>", "<eos>"};
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }
}  // namespace

Vocabulary::Vocabulary() {
  for (const char* w : kReserved) add(w);
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  if (words.size() < 4)
    throw DataError("Vocabulary: word list shorter than the 4 reserved tokens");
  for (std::size_t i = 0; i < 4; ++i)
    if (words[i] != kReserved[i])
      throw DataError("Vocabulary: reserved token mismatch at id " +
                      std::to_string(i));
  for (const auto& w : words) add(w);
}

int Vocabulary::add(const std::string& word) {
  auto it = map_.find(word);
  if (it != map_.end()) return it->second;
  int id = static_cast<int>(words_.size());
  words_.push_back(word);
  map_[word] = id;
  return id;
}

int Vocabulary::id(const std::string& word) const {
  auto it = map_.find(word);
  return it == map_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size())
    throw ContractViolation("Vocabulary: id " + std::to_string(id) +
                            " out of range");
  return words_[static_cast<std::size_t>(id)];
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string chunk;
  std::istringstream in(text);
  while (in >> chunk) {
    for (char& c : chunk) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::size_t b = 0, e = chunk.size();
    while (b < e && is_punct(chunk[b])) ++b;
    std::size_t core_end = e;
    while (core_end > b && is_punct(chunk[core_end - 1])) --core_end;
    for (std::size_t i = 0; i < b; ++i) out.push_back(std::string(1, chunk[i]));
    if (core_end > b) out.push_back(chunk.substr(b, core_end - b));
    for (std::size_t i = core_end; i < e; ++i) out.push_back(std::string(1, chunk[i]));
  }
  return out;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& streams,
                       std::size_t max_size) {
  if (max_size < 5)
    throw ContractViolation("build_vocab: max_size must be at least 5");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : streams)
    for (const auto& w : s) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary vocab;
  for (const auto& [w, c] : ranked) {
    if (vocab.size() >= max_size) break;
    vocab.add(w);
  }
  return vocab;
}

Ids encode(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
  Ids out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(vocab.id(t));
  return out;
}

std::vector<std::string> decode(const Ids& ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(vocab.word(i));
  return out;
}

std::vector<ContextResponsePair> extract_pairs(
    const Conversation& conv, const Vocabulary& vocab,
    const std::optional<std::string>& speaker_filter) {
  std::vector<ContextResponsePair> pairs;
  if (conv.turns.size() < 2) return pairs;
  Context context;
  context.push_back(encode(tokenize(conv.turns[0].text), vocab));
  for (std::size_t t = 1; t < conv.turns.size(); ++t) {
    if (!speaker_filter || conv.turns[t].speaker == *speaker_filter) {
      ContextResponsePair pair;
      pair.context = context;
      pair.response = encode(tokenize(conv.turns[t].text), vocab);
      pair.response.push_back(Vocabulary::kEos);
      pair.conversation_id = conv.id;
      pair.turn_index = t;
      pairs.push_back(std::move(pair));
    }
    context.push_back(encode(tokenize(conv.turns[t].text), vocab));
  }
  return pairs;
}

std::vector<Conversation> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<Conversation> corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": malformed JSON: " + e.what());
    }
    auto need = [&](const json& obj, const char* field) -> const json& {
      auto it = obj.find(field);
      if (it == obj.end())
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": missing field '" + field + "'");
      return *it;
    };
    Conversation conv;
    conv.id = need(j, "id").get<std::string>();
    for (const auto& tj : need(j, "turns")) {
      Turn t;
      t.speaker = need(tj, "speaker").get<std::string>();
      t.text = need(tj, "text").get<std::string>();
      conv.turns.push_back(std::move(t));
    }
    if (conv.turns.empty())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": conversation has no turns");
    corpus.push_back(std::move(conv));
  }
  return corpus;
}

void save_jsonl(const std::vector<Conversation>& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& conv : corpus) {
    json j;
    j["id"] = conv.id;
    j["turns"] = json::array();
    for (const auto& t : conv.turns)
      j["turns"].push_back({{"speaker", t.speaker}, {"text", t.text}});
    out << j.dump() << "\n";
  }
}

SynthCorpus synth_generate(const SynthSpec& spec) {
  if (spec.concept_count < 1)
    throw ContractViolation("synth_generate: concept_count must be >= 1");
  if (spec.noise_vocab_size < spec.concept_count)
    throw ContractViolation("synth_generate: noise vocab smaller than K");
  const std::size_t K = spec.concept_count;

  SynthCorpus out;
  out.seed = spec.seed;
  std::vector<std::string> concepts(K), responses(K), noise(spec.noise_vocab_size);
  for (std::size_t i = 0; i < K; ++i) {
    concepts[i] = "cw" + std::to_string(i);
    responses[i] = "rw" + std::to_string(i);
    out.ground_truth[concepts[i]] = responses[i];
  }
  for (std::size_t i = 0; i < noise.size(); ++i)
    noise[i] = "nz" + std::to_string(i);

  Pcg32 rng(spec.seed, rng_stream::kCorpus);
  for (std::size_t d = 0; d < spec.dialogues; ++d) {
    const std::size_t n_utts = 1 + rng.next_below(3);
    std::vector<std::vector<std::string>> utts(n_utts);
    for (auto& u : utts) {
      const std::size_t len = 4 + rng.next_below(5);
      for (std::size_t i = 0; i < len; ++i)
        u.push_back(noise[rng.next_below(static_cast<std::uint32_t>(noise.size()))]);
    }
    const std::size_t max_plant = std::min<std::size_t>(3, K);
    const std::size_t n_concepts = 1 + rng.next_below(static_cast<std::uint32_t>(max_plant));
    std::vector<std::size_t> chosen;
    while (chosen.size() < n_concepts) {
      std::size_t c = rng.next_below(static_cast<std::uint32_t>(K));
      if (std::find(chosen.begin(), chosen.end(), c) == chosen.end())
        chosen.push_back(c);
    }
    for (std::size_t c : chosen) {
      auto& u = utts[rng.next_below(static_cast<std::uint32_t>(n_utts))];
      const std::size_t pos = rng.next_below(static_cast<std::uint32_t>(u.size() + 1));
      u.insert(u.begin() + static_cast<std::ptrdiff_t>(pos), concepts[c]);
    }
    // Response words follow first context occurrence order.
    std::vector<std::size_t> order;
    for (const auto& u : utts)
      for (const auto& w : u)
        for (std::size_t c : chosen)
          if (w == concepts[c] &&
              std::find(order.begin(), order.end(), c) == order.end())
            order.push_back(c);

    Conversation conv;
    conv.id = "synth-" + std::to_string(d);
    for (const auto& u : utts) {
      std::string text;
      for (std::size_t i = 0; i < u.size(); ++i) {
        if (i) text += ' ';
        text += u[i];
      }
      conv.turns.push_back({"user", text});
    }
    std::string resp = "fix";
    for (std::size_t c : order) resp += " " + responses[c];
    resp += " done";
    conv.turns.push_back({"agent", resp});
    out.conversations.push_back(std::move(conv));
  }
  return out;
}

void save_ground_truth(const SynthCorpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  json j;
  j["concepts"] = corpus.ground_truth;
  j["seed"] = corpus.seed;
  out << j.dump(2) << "\n";
}

std::map<std::string, std::string> load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path + ": malformed JSON: " + e.what());
  }
  if (!j.contains("concepts")) throw DataError(path + ": missing field 'concepts'");
  return j["concepts"].get<std::map<std::string, std::string>>();
}

}  // namespace mf
