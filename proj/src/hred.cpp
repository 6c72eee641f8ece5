#include "mf/hred.hpp"

#include <algorithm>
#include <cmath>

#include "mf/rng.hpp"
#include "mf/seq.hpp"

namespace mf {

namespace {

Ids drop_pad(const Ids& tokens) {
  Ids out;
  out.reserve(tokens.size());
  for (int t : tokens)
    if (t != Vocabulary::kPad) out.push_back(t);
  return out;
}

void check_ids(const Ids& ids, std::size_t vocab_size, const char* where) {
  for (int t : ids)
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size)
      throw ContractViolation(std::string(where) + ": token id " +
                              std::to_string(t) + " out of range for V=" +
                              std::to_string(vocab_size));
}

}  // namespace

std::vector<Var> bigru_states(Tape& tape, const GruCellVars& fwd,
                              const GruCellVars& bwd, Var emb,
                              const Ids& tokens, std::size_t hidden) {
  Ids toks = drop_pad(tokens);
  const std::size_t n = toks.size();
  std::vector<Var> out;
  if (n == 0) return out;
  std::vector<Var> inputs(n), fstates(n), bstates(n);
  for (std::size_t i = 0; i < n; ++i)
    inputs[i] = tape.row(emb, static_cast<std::size_t>(toks[i]));
  Var h = tape.zeros({hidden});
  for (std::size_t i = 0; i < n; ++i) h = fstates[i] = gru_step(tape, fwd, inputs[i], h);
  h = tape.zeros({hidden});
  for (std::size_t i = n; i-- > 0;) h = bstates[i] = gru_step(tape, bwd, inputs[i], h);
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(tape.concat(fstates[i], bstates[i]));
  return out;
}

Var bigru_final(Tape& tape, const GruCellVars& fwd, const GruCellVars& bwd,
                Var emb, const Ids& tokens, std::size_t hidden) {
  Ids toks = drop_pad(tokens);
  const std::size_t n = toks.size();
  if (n == 0) return tape.zeros({2 * hidden});
  std::vector<Var> inputs(n);
  for (std::size_t i = 0; i < n; ++i)
    inputs[i] = tape.row(emb, static_cast<std::size_t>(toks[i]));
  Var hf = tape.zeros({hidden});
  for (std::size_t i = 0; i < n; ++i) hf = gru_step(tape, fwd, inputs[i], hf);
  Var hb = tape.zeros({hidden});
  for (std::size_t i = n; i-- > 0;) hb = gru_step(tape, bwd, inputs[i], hb);
  return tape.concat(hf, hb);
}

HredConfig HredConfig::preset(const std::string& name) {
  HredConfig c;
  if (name == "ubuntu") {
    c.embedding_dim = 500;
    c.utterance_hidden = 1000;
    c.context_hidden = 2000;
    c.decoder_hidden = 2000;
  } else if (name == "techsupport") {
    c.embedding_dim = 250;
    c.utterance_hidden = 500;
    c.context_hidden = 1000;
    c.decoder_hidden = 1000;
  } else if (name == "small") {
    c.embedding_dim = 64;
    c.utterance_hidden = 128;
    c.context_hidden = 256;
    c.decoder_hidden = 256;
  } else {
    throw DataError("unknown preset '" + name + "'");
  }
  return c;
}

ParameterSet init_hred_params(const HredConfig& c, std::uint64_t seed) {
  if (c.vocab_size == 0)
    throw ContractViolation("init_hred_params: vocab_size not set");
  ParameterSet ps;
  Pcg32 rng(seed, rng_stream::kInit);
  add_weight(ps, "emb", c.vocab_size, c.embedding_dim, rng);
  add_gru_cell(ps, "utt_f", c.embedding_dim, c.utterance_hidden, rng);
  add_gru_cell(ps, "utt_b", c.embedding_dim, c.utterance_hidden, rng);
  add_gru_cell(ps, "ctx", 2 * c.utterance_hidden, c.context_hidden, rng);
  add_gru_cell(ps, "dec", c.embedding_dim + c.context_hidden, c.decoder_hidden, rng);
  add_weight(ps, "dec_init.W", c.decoder_hidden, c.context_hidden, rng);
  add_bias(ps, "dec_init.b", c.decoder_hidden);
  add_weight(ps, "out.W", c.vocab_size, c.decoder_hidden, rng);
  add_bias(ps, "out.b", c.vocab_size);
  return ps;
}

Var hred_encode_context(Tape& tape, ParameterSet& ps, const HredConfig& c,
                        const Context& context) {
  if (context.empty())
    throw ContractViolation("encode_context: context has no utterances");
  Var emb = tape.param(ps, "emb");
  auto fwd = gru_vars(tape, ps, "utt_f");
  auto bwd = gru_vars(tape, ps, "utt_b");
  auto ctx = gru_vars(tape, ps, "ctx");
  Var h = tape.zeros({c.context_hidden});
  for (const Ids& utt : context) {
    check_ids(utt, c.vocab_size, "encode_context");
    Var u = bigru_final(tape, fwd, bwd, emb, utt, c.utterance_hidden);
    h = gru_step(tape, ctx, u, h);
  }
  return h;
}

namespace {

// Shared teacher-forcing walk; collects per-token loss vars.
std::vector<Var> decode_losses(Tape& tape, ParameterSet& ps, const HredConfig& c,
                               Var v, const Ids& response) {
  check_ids(response, c.vocab_size, "log_prob_response");
  Var emb = tape.param(ps, "emb");
  auto dec = gru_vars(tape, ps, "dec");
  Var w_init = tape.param(ps, "dec_init.W");
  Var b_init = tape.param(ps, "dec_init.b");
  Var w_out = tape.param(ps, "out.W");
  Var b_out = tape.param(ps, "out.b");
  Var h = tape.tanh(tape.add(tape.matvec(w_init, v), b_init));
  int prev = Vocabulary::kSos;
  std::vector<Var> losses;
  losses.reserve(response.size());
  for (int target : response) {
    Var x = tape.concat(tape.row(emb, static_cast<std::size_t>(prev)), v);
    h = gru_step(tape, dec, x, h);
    Var logits = tape.add(tape.matvec(w_out, h), b_out);
    losses.push_back(tape.softmax_xent(logits, static_cast<std::size_t>(target)));
    prev = target;
  }
  return losses;
}

}  // namespace

ScoredResponse hred_log_prob(ParameterSet& ps, const HredConfig& c,
                             const Context& context, const Ids& response) {
  Tape tape(false);
  Var v = hred_encode_context(tape, ps, c, context);
  auto losses = decode_losses(tape, ps, c, v, response);
  ScoredResponse out;
  for (Var l : losses) {
    out.per_token.push_back(-l->value[0]);
    out.total -= l->value[0];
  }
  return out;
}

Var hred_pair_nll(Tape& tape, ParameterSet& ps, const HredConfig& c,
                  const ContextResponsePair& pair) {
  Var v = hred_encode_context(tape, ps, c, pair.context);
  auto losses = decode_losses(tape, ps, c, v, pair.response);
  return tape.sum(losses);
}

Ids hred_generate(ParameterSet& ps, const HredConfig& c, const Context& context,
                  std::size_t max_len) {
  Tape tape(false);
  Var v = hred_encode_context(tape, ps, c, context);
  Var emb = tape.param(ps, "emb");
  auto dec = gru_vars(tape, ps, "dec");
  Var h = tape.tanh(
      tape.add(tape.matvec(tape.param(ps, "dec_init.W"), v), tape.param(ps, "dec_init.b")));
  Var w_out = tape.param(ps, "out.W");
  Var b_out = tape.param(ps, "out.b");
  Ids out;
  int prev = Vocabulary::kSos;
  for (std::size_t step = 0; step < max_len; ++step) {
    Var x = tape.concat(tape.row(emb, static_cast<std::size_t>(prev)), v);
    h = gru_step(tape, dec, x, h);
    Var logits = tape.add(tape.matvec(w_out, h), b_out);
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits->value.size(); ++i)
      if (logits->value[i] > logits->value[best]) best = i;
    if (static_cast<int>(best) == Vocabulary::kEos) break;
    out.push_back(static_cast<int>(best));
    prev = static_cast<int>(best);
  }
  return out;
}

double mean_token_nll(ParameterSet& ps, const HredConfig& c,
                      const std::vector<ContextResponsePair>& pairs) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& p : pairs) {
    total -= hred_log_prob(ps, c, p.context, p.response).total;
    tokens += p.response.size();
  }
  return tokens ? total / static_cast<double>(tokens) : 0.0;
}

HredTrainResult train_hred(const std::vector<ContextResponsePair>& train,
                           const std::vector<ContextResponsePair>& val,
                           const HredConfig& config, const TrainOptions& opts,
                           std::uint64_t seed) {
  if (train.empty() || val.empty())
    throw DataError("train_hred: empty train or validation split");
  ParameterSet ps = init_hred_params(config, seed);
  AdamSettings adam;
  adam.lr = opts.lr;

  Pcg32 shuffle_rng(seed, rng_stream::kShuffle);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  HredTrainResult result;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < opts.max_epochs; ++epoch) {
    // Fisher-Yates with the pinned PRNG stream.
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[shuffle_rng.next_below(static_cast<std::uint32_t>(i))]);

    double epoch_nll = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const std::size_t end = std::min(order.size(), start + opts.batch_size);
      Tape tape;
      std::vector<Var> losses;
      std::size_t tokens = 0;
      for (std::size_t i = start; i < end; ++i) {
        const auto& pair = train[order[i]];
        losses.push_back(hred_pair_nll(tape, ps, config, pair));
        tokens += pair.response.size();
      }
      Var loss = tape.affine_const(tape.sum(losses), 1.0 / static_cast<double>(tokens), 0.0);
      epoch_nll += loss->value[0] * static_cast<double>(tokens);
      epoch_tokens += tokens;
      GradientMap grads = tape.backward(loss, ps);
      adam_step(ps, grads, adam);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_nll = epoch_nll / static_cast<double>(epoch_tokens);
    log.val_nll = mean_token_nll(ps, config, val);
    result.log.push_back(log);

    if (log.val_nll < best_val) {
      best_val = log.val_nll;
      result.params = ps;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= opts.patience) {
      break;
    }
  }
  if (result.params.params.empty()) result.params = ps;
  return result;
}

}  // namespace mf
