#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>

#include "mf/corpus.hpp"

using namespace mf;

TEST_CASE("tokenize") {
  CHECK(tokenize("Install GParted!") ==
        std::vector<std::string>{"install", "gparted", "!"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a  b") == std::vector<std::string>{"a", "b"});
  CHECK(tokenize("((a)).") ==
        std::vector<std::string>{"(", "(", "a", ")", ")", "."});
  CHECK(tokenize("!!!") == std::vector<std::string>{"!", "!", "!"});
}

TEST_CASE("build_vocab frequency then lexicographic tie-break") {
  std::vector<std::vector<std::string>> streams{
      {"a", "a", "a", "b", "b", "c"}};
  Vocabulary v = build_vocab(streams, 6);
  CHECK(v.id("a") == 4);
  CHECK(v.id("b") == 5);
  CHECK(v.id("c") == Vocabulary::kUnk);

  Vocabulary empty = build_vocab({}, 10);
  CHECK(empty.size() == 4);

  Vocabulary tie = build_vocab({{"y", "x"}}, 5);
  CHECK(tie.id("x") == 4);
  CHECK(tie.id("y") == Vocabulary::kUnk);
}

TEST_CASE("encode/decode round trip and unk") {
  Vocabulary v = build_vocab({{"hello", "world"}}, 10);
  auto ids = encode({"hello", "world"}, v);
  CHECK(decode(ids, v) == std::vector<std::string>{"hello", "world"});
  CHECK(encode({"martian"}, v) == Ids{Vocabulary::kUnk});
  CHECK(encode({}, v).empty());
}

TEST_CASE("extract_pairs") {
  Vocabulary v = build_vocab({{"hi", "yo", "ok", "bye"}}, 10);
  Conversation conv{"c1",
                    {{"user", "hi"}, {"agent", "yo"}, {"user", "ok"}, {"agent", "bye"}}};
  auto all = extract_pairs(conv, v);
  CHECK(all.size() == 3);
  CHECK(all[0].context.size() == 1);
  CHECK(all[2].context.size() == 3);
  for (const auto& p : all) CHECK(p.response.back() == Vocabulary::kEos);

  auto agent = extract_pairs(conv, v, std::string("agent"));
  CHECK(agent.size() == 2);
  CHECK(agent[0].turn_index == 1);
  CHECK(agent[1].turn_index == 3);

  Conversation single{"c2", {{"user", "hi"}}};
  CHECK(extract_pairs(single, v).empty());
}

TEST_CASE("jsonl round trip and errors") {
  const std::string path = "corpus_test.jsonl";
  std::vector<Conversation> corpus{
      {"a", {{"user", "Install GParted!"}, {"agent", "ok"}}},
      {"b", {{"user", ""}}}};
  save_jsonl(corpus, path);
  auto loaded = load_jsonl(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "a");
  CHECK(loaded[0].turns[0].text == "Install GParted!");
  CHECK(loaded[1].turns[0].text.empty());

  {
    std::ofstream bad(path);
    bad << R"({"id":"x","turns":[{"speaker":"u","text":"t"}]})" << "\n";
    bad << R"({"id":"y","turns":[{"speaker":"u","text":"t"}]})" << "\n";
    bad << "not json\n";
  }
  try {
    load_jsonl(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }

  {
    std::ofstream bad(path);
    bad << R"({"id":"x","turns":[{"speaker":"u"}]})" << "\n";
  }
  try {
    load_jsonl(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("text") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("synthetic corpus plants concepts with a closed-form response") {
  SynthSpec spec;
  spec.concept_count = 4;
  spec.dialogues = 100;
  spec.seed = 1;
  SynthCorpus corpus = synth_generate(spec);
  REQUIRE(corpus.conversations.size() == 100);

  std::map<std::string, int> appearances;
  for (const auto& conv : corpus.conversations) {
    REQUIRE(conv.turns.size() >= 2);
    // Planted concepts in context order fully determine the response.
    std::vector<std::string> expected{"fix"};
    std::vector<std::string> seen;
    for (std::size_t t = 0; t + 1 < conv.turns.size(); ++t) {
      CHECK(conv.turns[t].speaker == "user");
      for (const auto& w : tokenize(conv.turns[t].text)) {
        auto it = corpus.ground_truth.find(w);
        if (it != corpus.ground_truth.end() &&
            std::find(seen.begin(), seen.end(), w) == seen.end()) {
          seen.push_back(w);
          expected.push_back(it->second);
        }
      }
    }
    CHECK(!seen.empty());
    CHECK(seen.size() <= 3);
    expected.push_back("done");
    CHECK(conv.turns.back().speaker == "agent");
    CHECK(tokenize(conv.turns.back().text) == expected);
    for (const auto& w : seen) ++appearances[w];
  }
  // Frozen from a generator run: with K=4, N=100, seed 1 every concept
  // appears in well over 10 dialogues.
  for (const auto& [w, n] : appearances) {
    INFO(w << " appeared " << n << " times");
    CHECK(n >= 10);
  }

  SynthCorpus again = synth_generate(spec);
  REQUIRE(again.conversations.size() == corpus.conversations.size());
  for (std::size_t i = 0; i < corpus.conversations.size(); ++i) {
    CHECK(again.conversations[i].id == corpus.conversations[i].id);
    REQUIRE(again.conversations[i].turns.size() ==
            corpus.conversations[i].turns.size());
    for (std::size_t t = 0; t < corpus.conversations[i].turns.size(); ++t)
      CHECK(again.conversations[i].turns[t].text ==
            corpus.conversations[i].turns[t].text);
  }
}

TEST_CASE("ground truth sidecar round trip") {
  SynthSpec spec;
  spec.concept_count = 3;
  spec.dialogues = 5;
  SynthCorpus corpus = synth_generate(spec);
  const std::string path = "gt_test.json";
  save_ground_truth(corpus, path);
  CHECK(load_ground_truth(path) == corpus.ground_truth);
  std::remove(path.c_str());
}
