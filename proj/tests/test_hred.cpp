#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mf/hred.hpp"
#include "mf/gradcheck.hpp"

using namespace mf;

namespace {

HredConfig tiny_config(std::size_t vocab) {
  HredConfig c;
  c.embedding_dim = 8;
  c.utterance_hidden = 10;
  c.context_hidden = 12;
  c.decoder_hidden = 12;
  c.vocab_size = vocab;
  return c;
}

// Sum of exp(log_prob) over every response that either ends at EOS or runs to
// max_len; by the chain rule this must be exactly 1.
double enumerate_mass(ParameterSet& ps, const HredConfig& c,
                      const Context& context, Ids& prefix, std::size_t max_len) {
  double mass = 0.0;
  for (int w = 0; w < static_cast<int>(c.vocab_size); ++w) {
    prefix.push_back(w);
    const double lp = hred_log_prob(ps, c, context, prefix).total;
    if (w == Vocabulary::kEos || prefix.size() == max_len)
      mass += std::exp(lp);
    else
      mass += enumerate_mass(ps, c, context, prefix, max_len);
    prefix.pop_back();
  }
  return mass;
}

std::vector<ContextResponsePair> synth_pairs(const SynthCorpus& corpus,
                                             const Vocabulary& vocab) {
  std::vector<ContextResponsePair> pairs;
  for (const auto& conv : corpus.conversations) {
    auto p = extract_pairs(conv, vocab, std::string("agent"));
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  return pairs;
}

Vocabulary synth_vocab(const SynthCorpus& corpus) {
  std::vector<std::vector<std::string>> streams;
  for (const auto& conv : corpus.conversations)
    for (const auto& t : conv.turns) streams.push_back(tokenize(t.text));
  return build_vocab(streams, 20000);
}

}  // namespace

TEST_CASE("encode_context dimension, determinism, PAD invariance") {
  HredConfig c = tiny_config(9);
  ParameterSet ps = init_hred_params(c, 3);
  Context context{{4, 5}, {6}};

  Tape t1(false), t2(false);
  Var v1 = hred_encode_context(t1, ps, c, context);
  Var v2 = hred_encode_context(t2, ps, c, context);
  CHECK(v1->value.size() == c.context_hidden);
  for (std::size_t i = 0; i < v1->value.size(); ++i)
    CHECK(v1->value[i] == v2->value[i]);

  Context padded{{4, 5, Vocabulary::kPad, Vocabulary::kPad}, {Vocabulary::kPad, 6}};
  Tape t3(false);
  Var v3 = hred_encode_context(t3, ps, c, padded);
  for (std::size_t i = 0; i < v1->value.size(); ++i)
    CHECK(v1->value[i] == v3->value[i]);

  Tape t4(false);
  CHECK_THROWS_AS(hred_encode_context(t4, ps, c, Context{}), ContractViolation);
}

TEST_CASE("log_prob_response totals and edge cases") {
  HredConfig c = tiny_config(7);
  ParameterSet ps = init_hred_params(c, 5);
  Context context{{4, 5, 6}};

  Ids response{5, 6, Vocabulary::kEos};
  auto scored = hred_log_prob(ps, c, context, response);
  REQUIRE(scored.per_token.size() == 3);
  double sum = 0.0;
  for (double lp : scored.per_token) {
    CHECK(lp <= 0.0);
    sum += lp;
  }
  CHECK(std::fabs(sum - scored.total) <= 1e-12);

  auto eos_only = hred_log_prob(ps, c, context, {Vocabulary::kEos});
  CHECK(eos_only.per_token.size() == 1);

  CHECK_THROWS_AS(hred_log_prob(ps, c, context, {99}), ContractViolation);
  // PAD appended to a context utterance never changes the score.
  Context padded{{4, 5, 6, Vocabulary::kPad}};
  CHECK(hred_log_prob(ps, c, padded, response).total ==
        doctest::Approx(scored.total).epsilon(1e-15));
}

TEST_CASE("probabilities over all bounded responses sum to 1") {
  HredConfig c = tiny_config(6);
  ParameterSet ps = init_hred_params(c, 11);
  Context context{{4, 5}};
  Ids prefix;
  const double mass = enumerate_mass(ps, c, context, prefix, 2);
  CHECK(std::fabs(mass - 1.0) <= 1e-9);
}

TEST_CASE("gradient check on a tiny HRED") {
  HredConfig c = tiny_config(8);
  ParameterSet ps = init_hred_params(c, 17);
  ContextResponsePair pair;
  pair.context = {{4, 5}, {6, 7}};
  pair.response = {5, 4, Vocabulary::kEos};

  GradCheckModel model = [&](ParameterSet& p, GradientMap* grads) {
    Tape tape(grads != nullptr);
    Var loss = hred_pair_nll(tape, p, c, pair);
    if (grads) *grads = tape.backward(loss, p);
    return loss->value[0];
  };
  auto report = grad_check(model, ps, 1e-4, 1e-5, 6, 99);
  INFO("worst rel err " << report.worst);
  CHECK(report.pass);
}

TEST_CASE("training lowers NLL, is seed-reproducible, and early-stops") {
  SynthSpec spec;
  spec.concept_count = 3;
  spec.dialogues = 60;
  spec.seed = 2;
  SynthCorpus corpus = synth_generate(spec);
  Vocabulary vocab = synth_vocab(corpus);
  auto pairs = synth_pairs(corpus, vocab);
  REQUIRE(pairs.size() == 60);
  std::vector<ContextResponsePair> train(pairs.begin(), pairs.begin() + 50);
  std::vector<ContextResponsePair> val(pairs.begin() + 50, pairs.end());

  HredConfig c = tiny_config(vocab.size());
  TrainOptions opts;
  opts.lr = 3e-3;
  opts.batch_size = 10;
  opts.max_epochs = 5;
  opts.patience = 5;

  auto r1 = train_hred(train, val, c, opts, 7);
  REQUIRE(!r1.log.empty());
  CHECK(r1.log.back().train_nll < r1.log.front().train_nll);

  auto r2 = train_hred(train, val, c, opts, 7);
  for (const auto& [name, t] : r1.params.params) {
    const Tensor& o = r2.params.get(name);
    REQUIRE(t.size() == o.size());
    for (std::size_t i = 0; i < t.size(); ++i) REQUIRE(t[i] == o[i]);
  }

  // lr = 0: validation never improves after epoch 0, patience 1 halts at epoch 1.
  TrainOptions frozen = opts;
  frozen.lr = 0.0;
  frozen.patience = 1;
  frozen.max_epochs = 10;
  auto r3 = train_hred(train, val, c, frozen, 7);
  CHECK(r3.log.size() == 2);
  CHECK(r3.best_epoch == 0);

  CHECK_THROWS_AS(train_hred({}, val, c, opts, 7), DataError);
}

TEST_CASE("greedy decode reproduces an overfit corpus") {
  SynthSpec spec;
  spec.concept_count = 2;
  spec.noise_vocab_size = 4;
  spec.dialogues = 5;
  spec.seed = 4;
  SynthCorpus corpus = synth_generate(spec);
  Vocabulary vocab = synth_vocab(corpus);
  auto pairs = synth_pairs(corpus, vocab);

  HredConfig c = tiny_config(vocab.size());
  TrainOptions opts;
  opts.lr = 2e-2;
  opts.batch_size = 5;
  opts.max_epochs = 300;
  opts.patience = 300;
  auto r = train_hred(pairs, pairs, c, opts, 11);

  for (const auto& p : pairs) {
    Ids expected(p.response.begin(), p.response.end() - 1);  // strip EOS
    Ids got = hred_generate(r.params, c, p.context, c.max_response_len);
    CHECK(got == expected);
    CHECK(got.size() <= c.max_response_len);
    CHECK(hred_generate(r.params, c, p.context, c.max_response_len) == got);
  }
}
