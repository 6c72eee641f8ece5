#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "mf/checkpoint.hpp"
#include "mf/hred.hpp"
#include "mf/rng.hpp"

using namespace mf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

CheckpointHeader sample_header() {
  CheckpointHeader h;
  h.kind = "hred";
  h.config = {{"embedding_size", "8"}, {"preset", "small"}};
  h.vocab = Vocabulary({"<pad>", "<unk>", "<sos>", "<eos>", "fix", "done"});
  h.seed = 42;
  return h;
}

ParameterSet sample_params() {
  HredConfig cfg;
  cfg.vocab_size = 6;
  cfg.embedding_dim = 4;
  cfg.utterance_hidden = 5;
  cfg.context_hidden = 6;
  cfg.decoder_hidden = 6;
  return init_hred_params(cfg, 42);
}

}  // namespace

TEST_CASE("checkpoint: save -> load -> save is byte-identical") {
  const std::string p1 = "ckpt_tmp_a.bin", p2 = "ckpt_tmp_b.bin";
  ParameterSet params = sample_params();
  save_checkpoint(p1, params, sample_header());
  Checkpoint loaded = load_checkpoint(p1);
  save_checkpoint(p2, loaded.params, loaded.header);
  CHECK(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("checkpoint: round trip preserves header and every value") {
  const std::string path = "ckpt_tmp_rt.bin";
  ParameterSet params = sample_params();
  save_checkpoint(path, params, sample_header());
  Checkpoint loaded = load_checkpoint(path);
  std::remove(path.c_str());

  CHECK(loaded.header.kind == "hred");
  CHECK(loaded.header.seed == 42);
  CHECK(loaded.header.config.at("preset") == "small");
  CHECK(loaded.header.vocab.words() == sample_header().vocab.words());

  REQUIRE(loaded.params.params.size() == params.params.size());
  for (const auto& [name, tensor] : params.params) {
    REQUIRE(loaded.params.params.count(name) == 1);
    const Tensor& got = loaded.params.params.at(name);
    CHECK(got.shape == tensor.shape);
    CHECK(got.values == tensor.values);  // bit-exact doubles
  }
}

TEST_CASE("checkpoint: parameter blobs are in lexicographic name order") {
  const std::string path = "ckpt_tmp_order.bin";
  ParameterSet params;
  params.add("zeta", Tensor({2}, {1.0, 2.0}));
  params.add("alpha", Tensor({1}, {3.0}));
  CheckpointHeader h = sample_header();
  save_checkpoint(path, params, h);
  const std::string bytes = slurp(path);
  std::remove(path.c_str());
  CHECK(bytes.find("alpha") < bytes.find("zeta"));
}

TEST_CASE("checkpoint: bad magic is refused") {
  const std::string path = "ckpt_tmp_magic.bin";
  save_checkpoint(path, sample_params(), sample_header());
  std::string bytes = slurp(path);
  bytes[0] = 'X';
  spit(path, bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(path),
                       doctest::Contains("bad magic"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint: altered version field is refused") {
  const std::string path = "ckpt_tmp_ver.bin";
  save_checkpoint(path, sample_params(), sample_header());
  std::string bytes = slurp(path);
  bytes[4] = static_cast<char>(kCheckpointVersion + 1);  // LE low byte
  spit(path, bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(path),
                       doctest::Contains("version"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint: truncation mid-blob names the parameter") {
  const std::string path = "ckpt_tmp_trunc.bin";
  ParameterSet params;
  params.add("alpha", Tensor({2}, {1.0, 2.0}));
  params.add("beta", Tensor({3}, {4.0, 5.0, 6.0}));
  save_checkpoint(path, params, sample_header());
  std::string bytes = slurp(path);
  bytes.resize(bytes.size() - 9);  // cut into beta's value section
  spit(path, bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("beta"),
                       DataError);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint: missing file raises DataError") {
  CHECK_THROWS_AS(load_checkpoint("no_such_checkpoint.bin"), DataError);
}
