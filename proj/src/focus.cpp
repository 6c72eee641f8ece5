#include "mf/focus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "mf/seq.hpp"

namespace mf {

namespace {

void check_ids(const Ids& ids, std::size_t vocab_size, const char* where) {
  for (int t : ids)
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size)
      throw ContractViolation(std::string(where) + ": token id " +
                              std::to_string(t) + " out of range for V=" +
                              std::to_string(vocab_size));
}

}  // namespace

FocusConfig FocusConfig::preset(const std::string& name) {
  HredConfig h = HredConfig::preset(name);
  FocusConfig c;
  c.embedding_dim = h.embedding_dim;
  c.utterance_hidden = h.utterance_hidden;
  c.context_hidden = h.context_hidden;
  c.decoder_hidden = h.decoder_hidden;
  c.max_response_len = h.max_response_len;
  return c;
}

ParameterSet init_focus_params(const FocusConfig& c, std::uint64_t seed) {
  if (c.vocab_size == 0)
    throw ContractViolation("init_focus_params: vocab_size not set");
  ParameterSet ps;
  Pcg32 rng(seed, rng_stream::kInit);
  add_weight(ps, "emb", c.vocab_size, c.embedding_dim, rng);
  add_gru_cell(ps, "utt_f", c.embedding_dim, c.utterance_hidden, rng);
  add_gru_cell(ps, "utt_b", c.embedding_dim, c.utterance_hidden, rng);
  add_gru_cell(ps, "con_f", c.embedding_dim, c.utterance_hidden, rng);
  add_gru_cell(ps, "con_b", c.embedding_dim, c.utterance_hidden, rng);
  add_gru_cell(ps, "ctx", 4 * c.utterance_hidden, c.context_hidden, rng);
  add_gru_cell(ps, "cdec", c.embedding_dim + c.context_hidden, c.decoder_hidden, rng);
  add_weight(ps, "cdec_init.W", c.decoder_hidden, c.context_hidden, rng);
  add_bias(ps, "cdec_init.b", c.decoder_hidden);
  add_weight(ps, "cout.W", c.vocab_size, c.decoder_hidden, rng);
  add_bias(ps, "cout.b", c.vocab_size);
  add_gru_cell(ps, "rdec", c.embedding_dim + c.context_hidden, c.decoder_hidden, rng);
  add_weight(ps, "rdec_init.W", c.decoder_hidden, c.context_hidden, rng);
  add_bias(ps, "rdec_init.b", c.decoder_hidden);
  add_weight(ps, "att.A", c.decoder_hidden, 2 * c.utterance_hidden, rng);
  add_weight(ps, "gate.W", 1, c.decoder_hidden, rng);
  add_bias(ps, "gate.b", 1);
  add_weight(ps, "gout.W", c.vocab_size, c.decoder_hidden, rng);
  add_bias(ps, "gout.b", c.vocab_size);
  return ps;
}

EncodedContext encode_with_concepts(Tape& tape, ParameterSet& ps,
                                    const FocusConfig& c, const Context& context,
                                    const Context& z_c) {
  if (context.empty())
    throw ContractViolation("encode_with_concepts: context has no utterances");
  if (z_c.size() != context.size())
    throw ContractViolation(
        "encode_with_concepts: concept lists misaligned with context (" +
        std::to_string(z_c.size()) + " vs " + std::to_string(context.size()) + ")");
  Var emb = tape.param(ps, "emb");
  auto utt_f = gru_vars(tape, ps, "utt_f");
  auto utt_b = gru_vars(tape, ps, "utt_b");
  auto con_f = gru_vars(tape, ps, "con_f");
  auto con_b = gru_vars(tape, ps, "con_b");
  auto ctx = gru_vars(tape, ps, "ctx");
  EncodedContext out;
  Var h = tape.zeros({c.context_hidden});
  for (std::size_t i = 0; i < context.size(); ++i) {
    check_ids(context[i], c.vocab_size, "encode_with_concepts");
    check_ids(z_c[i], c.vocab_size, "encode_with_concepts");
    Var u = bigru_final(tape, utt_f, utt_b, emb, context[i], c.utterance_hidden);
    Var k = bigru_final(tape, con_f, con_b, emb, z_c[i], c.utterance_hidden);
    h = gru_step(tape, ctx, tape.concat(u, k), h);
    out.utterance_states.push_back(h);
  }
  out.v = h;
  return out;
}

namespace {

// Concept-decoder teacher-forced xent per response position.
std::vector<Var> concept_decoder_losses(Tape& tape, ParameterSet& ps,
                                        const FocusConfig& c, Var v,
                                        const Ids& response) {
  check_ids(response, c.vocab_size, "concept decoder");
  Var emb = tape.param(ps, "emb");
  auto dec = gru_vars(tape, ps, "cdec");
  Var w_out = tape.param(ps, "cout.W");
  Var b_out = tape.param(ps, "cout.b");
  Var h = tape.tanh(tape.add(tape.matvec(tape.param(ps, "cdec_init.W"), v),
                             tape.param(ps, "cdec_init.b")));
  int prev = Vocabulary::kSos;
  std::vector<Var> losses;
  for (int target : response) {
    Var x = tape.concat(tape.row(emb, static_cast<std::size_t>(prev)), v);
    h = gru_step(tape, dec, x, h);
    Var logits = tape.add(tape.matvec(w_out, h), b_out);
    losses.push_back(tape.softmax_xent(logits, static_cast<std::size_t>(target)));
    prev = target;
  }
  return losses;
}

// Copy-decoder teacher-forced losses. With empty z_r the mixture collapses to
// the vocabulary softmax.
std::vector<Var> response_decoder_losses(Tape& tape, ParameterSet& ps,
                                         const FocusConfig& c, Var v,
                                         const Ids& z_r, const Ids& response) {
  check_ids(response, c.vocab_size, "response decoder");
  check_ids(z_r, c.vocab_size, "response decoder z_r");
  Var emb = tape.param(ps, "emb");
  auto dec = gru_vars(tape, ps, "rdec");
  auto con_f = gru_vars(tape, ps, "con_f");
  auto con_b = gru_vars(tape, ps, "con_b");
  Var w_out = tape.param(ps, "gout.W");
  Var b_out = tape.param(ps, "gout.b");
  std::vector<Var> memory =
      z_r.empty() ? std::vector<Var>{}
                  : bigru_states(tape, con_f, con_b, emb, z_r, c.utterance_hidden);
  Var att = tape.param(ps, "att.A");
  Var gate_w = tape.param(ps, "gate.W");
  Var gate_b = tape.param(ps, "gate.b");
  Var h = tape.tanh(tape.add(tape.matvec(tape.param(ps, "rdec_init.W"), v),
                             tape.param(ps, "rdec_init.b")));
  int prev = Vocabulary::kSos;
  std::vector<Var> losses;
  for (int target : response) {
    Var x = tape.concat(tape.row(emb, static_cast<std::size_t>(prev)), v);
    h = gru_step(tape, dec, x, h);
    Var logits = tape.add(tape.matvec(w_out, h), b_out);
    if (memory.empty()) {
      losses.push_back(tape.softmax_xent(logits, static_cast<std::size_t>(target)));
    } else {
      std::vector<Var> scores;
      scores.reserve(memory.size());
      for (Var m : memory) scores.push_back(tape.dot(h, tape.matvec(att, m)));
      Var alpha = tape.softmax(tape.stack(scores));
      Var gate = tape.sigmoid(tape.add(tape.matvec(gate_w, h), gate_b));
      Var pv = tape.softmax(logits);
      std::vector<Var> copied;
      for (std::size_t j = 0; j < z_r.size(); ++j)
        if (z_r[j] == target) copied.push_back(tape.pick(alpha, j));
      Var copy_mass = copied.empty() ? tape.zeros({1}) : tape.sum(copied);
      Var py = tape.add(
          tape.mul(tape.affine_const(gate, -1.0, 1.0),
                   tape.pick(pv, static_cast<std::size_t>(target))),
          tape.mul(gate, copy_mass));
      losses.push_back(tape.affine_const(tape.log(py), -1.0, 0.0));
    }
    prev = target;
  }
  return losses;
}

}  // namespace

ScoredResponse focus_log_prob_response(ParameterSet& ps, const FocusConfig& c,
                                       const Context& context, const Context& z_c,
                                       const Ids& z_r, const Ids& response) {
  Tape tape(false);
  EncodedContext enc = encode_with_concepts(tape, ps, c, context, z_c);
  auto losses = response_decoder_losses(tape, ps, c, enc.v, z_r, response);
  ScoredResponse out;
  for (Var l : losses) {
    out.per_token.push_back(-l->value[0]);
    out.total -= l->value[0];
  }
  return out;
}

std::vector<double> focus_concept_log_probs(ParameterSet& ps, const FocusConfig& c,
                                            const Context& context,
                                            const Context& z_c,
                                            const Ids& response) {
  Tape tape(false);
  EncodedContext enc = encode_with_concepts(tape, ps, c, context, z_c);
  auto losses = concept_decoder_losses(tape, ps, c, enc.v, response);
  std::vector<double> out;
  for (Var l : losses) out.push_back(-l->value[0]);
  return out;
}

QWeights compute_q(ParameterSet& ps, const FocusConfig& c, const Context& context,
                   const Context& z_c, const Ids& response) {
  // PMI_l = log p(w_l | w_{1:l-1}, c, z_c) - log p(w_l | w_{1:l-1}, c^{-z}),
  // both under the concept decoder (the head that models p(z_r | c, z_c)).
  // Full pass: (c, z_c). Masked pass: z_c tokens deleted from the context and
  // an empty concept sequence, per c = c^{-z} u z_c.
  std::vector<double> full = focus_concept_log_probs(ps, c, context, z_c, response);
  std::set<int> concept_ids;
  for (const Ids& u : z_c) concept_ids.insert(u.begin(), u.end());
  Context masked = mask_context(context, concept_ids);
  Context no_concepts(context.size());
  std::vector<double> bare =
      focus_concept_log_probs(ps, c, masked, no_concepts, response);
  QWeights q(response.size(), 0.0);
  for (std::size_t l = 0; l < response.size(); ++l)
    q[l] = q_from_pmi(full[l] - bare[l]);
  return q;
}

std::vector<std::size_t> sample_response_concept_positions(const QWeights& q,
                                                           Pcg32& rng) {
  std::vector<std::size_t> positions;
  for (std::size_t l = 0; l < q.size(); ++l)
    if (rng.next_double() < q[l]) positions.push_back(l);
  return positions;
}

Ids gather_positions(const Ids& response, const std::vector<std::size_t>& positions) {
  Ids out;
  out.reserve(positions.size());
  for (std::size_t l : positions) out.push_back(response.at(l));
  return out;
}

FocusLoss focus_loss_terms(Tape& tape, ParameterSet& ps, const FocusConfig& c,
                           const Context& context, const Context& z_c,
                           const Ids& response, const QWeights& q, const Ids& z_r) {
  if (q.size() != response.size())
    throw ContractViolation("focus_loss_terms: |q| != |response|");
  EncodedContext enc = encode_with_concepts(tape, ps, c, context, z_c);
  auto closses = concept_decoder_losses(tape, ps, c, enc.v, response);
  std::vector<Var> weighted;
  weighted.reserve(closses.size());
  for (std::size_t l = 0; l < closses.size(); ++l)
    weighted.push_back(tape.affine_const(closses[l], q[l], 0.0));
  FocusLoss out;
  out.concept_loss = tape.sum(weighted);
  out.response_loss =
      tape.sum(response_decoder_losses(tape, ps, c, enc.v, z_r, response));
  return out;
}

FocusTrainResult train_mask_focus(const std::vector<ContextResponsePair>& train,
                                  const std::vector<ContextResponsePair>& val,
                                  const Vocabulary& vocab, const ConceptBank& bank,
                                  const FocusConfig& config,
                                  const TrainOptions& opts, std::uint64_t seed) {
  if (train.empty() || val.empty())
    throw DataError("train_mask_focus: empty train or validation split");
  FocusTrainResult result;
  result.empty_bank = bank.entries.empty();

  ParameterSet ps = init_focus_params(config, seed);
  AdamSettings adam;
  adam.lr = opts.lr;

  auto concepts_for = [&](const ContextResponsePair& p) {
    return extract_context_concepts(p.context, bank, vocab);
  };
  std::vector<Context> train_zc, val_zc;
  train_zc.reserve(train.size());
  for (const auto& p : train) train_zc.push_back(concepts_for(p));
  val_zc.reserve(val.size());
  for (const auto& p : val) val_zc.push_back(concepts_for(p));

  auto eval_split = [&](Pcg32& rng) {
    double total = 0.0;
    std::size_t tokens = 0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      const auto& p = val[i];
      QWeights q = compute_q(ps, config, p.context, val_zc[i], p.response);
      Ids z_r = gather_positions(p.response,
                                 sample_response_concept_positions(q, rng));
      Tape tape(false);
      FocusLoss loss = focus_loss_terms(tape, ps, config, p.context, val_zc[i],
                                        p.response, q, z_r);
      total += loss.concept_loss->value[0] + loss.response_loss->value[0];
      tokens += p.response.size();
    }
    return total / static_cast<double>(tokens);
  };

  Pcg32 shuffle_rng(seed, rng_stream::kShuffle);
  Pcg32 sample_rng(seed, rng_stream::kFocus);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < opts.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[shuffle_rng.next_below(static_cast<std::uint32_t>(i))]);

    double epoch_loss = 0.0;
    std::size_t epoch_tokens = 0;
    for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
      const std::size_t end = std::min(order.size(), start + opts.batch_size);
      Tape tape;
      std::vector<Var> losses;
      std::size_t tokens = 0;
      for (std::size_t bi = start; bi < end; ++bi) {
        const auto& p = train[order[bi]];
        const Context& zc = train_zc[order[bi]];
        // q from the current model, constant w.r.t. this batch's gradients.
        QWeights q = compute_q(ps, config, p.context, zc, p.response);
        Ids z_r = gather_positions(
            p.response, sample_response_concept_positions(q, sample_rng));
        FocusLoss fl =
            focus_loss_terms(tape, ps, config, p.context, zc, p.response, q, z_r);
        losses.push_back(tape.add(fl.concept_loss, fl.response_loss));
        tokens += p.response.size();
      }
      Var loss = tape.affine_const(tape.sum(losses),
                                   1.0 / static_cast<double>(tokens), 0.0);
      epoch_loss += loss->value[0] * static_cast<double>(tokens);
      epoch_tokens += tokens;
      GradientMap grads = tape.backward(loss, ps);
      adam_step(ps, grads, adam);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_nll = epoch_loss / static_cast<double>(epoch_tokens);
    Pcg32 val_rng(seed, rng_stream::kFocus + 17);
    log.val_nll = eval_split(val_rng);
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

GeneratedTriple focus_generate(ParameterSet& ps, const FocusConfig& c,
                               const Context& context, const ConceptBank& bank,
                               const Vocabulary& vocab, std::size_t max_concepts,
                               std::size_t max_len) {
  GeneratedTriple out;
  out.z_c = extract_context_concepts(context, bank, vocab);
  Tape tape(false);
  EncodedContext enc = encode_with_concepts(tape, ps, c, context, out.z_c);
  Var v = enc.v;
  Var emb = tape.param(ps, "emb");

  {  // Stage 1: concept decoder, greedy until EOS or max_concepts.
    auto dec = gru_vars(tape, ps, "cdec");
    Var w_out = tape.param(ps, "cout.W");
    Var b_out = tape.param(ps, "cout.b");
    Var h = tape.tanh(tape.add(tape.matvec(tape.param(ps, "cdec_init.W"), v),
                               tape.param(ps, "cdec_init.b")));
    int prev = Vocabulary::kSos;
    for (std::size_t step = 0; step < max_concepts; ++step) {
      Var x = tape.concat(tape.row(emb, static_cast<std::size_t>(prev)), v);
      h = gru_step(tape, dec, x, h);
      Var logits = tape.add(tape.matvec(w_out, h), b_out);
      std::size_t best = 0;
      for (std::size_t i = 1; i < logits->value.size(); ++i)
        if (logits->value[i] > logits->value[best]) best = i;
      if (static_cast<int>(best) == Vocabulary::kEos) break;
      out.z_r.push_back(static_cast<int>(best));
      prev = static_cast<int>(best);
    }
  }

  {  // Stage 2: copy decoder over the predicted concepts.
    auto dec = gru_vars(tape, ps, "rdec");
    auto con_f = gru_vars(tape, ps, "con_f");
    auto con_b = gru_vars(tape, ps, "con_b");
    std::vector<Var> memory =
        out.z_r.empty()
            ? std::vector<Var>{}
            : bigru_states(tape, con_f, con_b, emb, out.z_r, c.utterance_hidden);
    Var att = tape.param(ps, "att.A");
    Var gate_w = tape.param(ps, "gate.W");
    Var gate_b = tape.param(ps, "gate.b");
    Var w_out = tape.param(ps, "gout.W");
    Var b_out = tape.param(ps, "gout.b");
    Var h = tape.tanh(tape.add(tape.matvec(tape.param(ps, "rdec_init.W"), v),
                               tape.param(ps, "rdec_init.b")));
    int prev = Vocabulary::kSos;
    for (std::size_t step = 0; step < max_len; ++step) {
      Var x = tape.concat(tape.row(emb, static_cast<std::size_t>(prev)), v);
      h = gru_step(tape, dec, x, h);
      Var logits = tape.add(tape.matvec(w_out, h), b_out);
      Var pv = tape.softmax(logits);
      std::vector<double> dist(pv->value.values);
      if (!memory.empty()) {
        std::vector<Var> scores;
        for (Var m : memory) scores.push_back(tape.dot(h, tape.matvec(att, m)));
        Var alpha = tape.softmax(tape.stack(scores));
        Var gate = tape.sigmoid(tape.add(tape.matvec(gate_w, h), gate_b));
        const double g = gate->value[0];
        for (double& p : dist) p *= 1.0 - g;
        for (std::size_t j = 0; j < out.z_r.size(); ++j)
          dist[static_cast<std::size_t>(out.z_r[j])] += g * alpha->value[j];
      }
      std::size_t best = 0;
      for (std::size_t i = 1; i < dist.size(); ++i)
        if (dist[i] > dist[best]) best = i;
      if (static_cast<int>(best) == Vocabulary::kEos) break;
      out.response.push_back(static_cast<int>(best));
      prev = static_cast<int>(best);
    }
  }
  return out;
}

}  // namespace mf
