#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mf/checkpoint.hpp"
#include "mf/config.hpp"
#include "mf/corpus.hpp"
#include "mf/error.hpp"
#include "mf/eval.hpp"
#include "mf/focus.hpp"
#include "mf/hred.hpp"
#include "mf/probe.hpp"

namespace fs = std::filesystem;
using namespace mf;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string data;
  std::string out = ".";
  std::vector<std::string> sets;  // key=value overrides
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_data) {
  cmd->add_option("--config", opts.config_path, "flat key = value config file");
  cmd->add_option("--preset", opts.preset, "small | techsupport | ubuntu");
  cmd->add_option("--seed", opts.seed, "master RNG seed");
  auto* data = cmd->add_option("--data", opts.data, "conversation JSONL path");
  if (needs_data) data->required();
  cmd->add_option("--out", opts.out, "output directory");
  cmd->add_option("--set", opts.sets, "extra config override, key=value")
      ->take_all();
}

RunConfig resolve(const CommonOpts& opts) {
  std::map<std::string, std::string> file_kv;
  if (!opts.config_path.empty()) file_kv = load_config_file(opts.config_path);

  std::map<std::string, std::string> flag_kv;
  for (const std::string& entry : opts.sets) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw DataError("--set expects key=value, got '" + entry + "'");
    flag_kv[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  if (opts.seed) flag_kv["seed"] = std::to_string(*opts.seed);

  std::string preset = "small";
  if (auto it = file_kv.find("preset"); it != file_kv.end()) {
    preset = it->second;
    file_kv.erase(it);
  }
  if (!opts.preset.empty()) preset = opts.preset;

  RunConfig config = resolve_config(preset, file_kv, flag_kv);
  for (const auto& [k, v] : config.echo())
    std::cout << "config " << k << " = " << v << "\n";
  return config;
}

RunConfig config_from_echo(std::map<std::string, std::string> echo) {
  std::string preset = "small";
  if (auto it = echo.find("preset"); it != echo.end()) {
    preset = it->second;
    echo.erase(it);
  }
  return resolve_config(preset, {}, echo);
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw DataError("cannot create output directory '" + out + "'");
}

std::optional<std::string> speaker_filter(const RunConfig& config) {
  if (config.speaker_filter.empty()) return std::nullopt;
  return config.speaker_filter;
}

Vocabulary vocab_from_corpus(const std::vector<Conversation>& corpus,
                             const RunConfig& config) {
  std::vector<std::vector<std::string>> streams;
  for (const Conversation& conv : corpus)
    for (const Turn& turn : conv.turns) streams.push_back(tokenize(turn.text));
  return build_vocab(streams, config.vocab_size);
}

std::vector<ContextResponsePair> pairs_from_corpus(
    const std::vector<Conversation>& corpus, const Vocabulary& vocab,
    const RunConfig& config) {
  std::vector<ContextResponsePair> pairs;
  for (const Conversation& conv : corpus) {
    auto p = extract_pairs(conv, vocab, speaker_filter(config));
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  return pairs;
}

// Deterministic tail split: the last ~10% (at least one pair when possible)
// becomes the held-out portion.
void tail_split(const std::vector<ContextResponsePair>& pairs,
                std::vector<ContextResponsePair>& head,
                std::vector<ContextResponsePair>& tail) {
  std::size_t held = pairs.size() / 10;
  if (held == 0 && pairs.size() >= 2) held = 1;
  const std::size_t cut = pairs.size() - held;
  head.assign(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(cut));
  tail.assign(pairs.begin() + static_cast<std::ptrdiff_t>(cut), pairs.end());
}

TrainOptions train_options(const RunConfig& config) {
  TrainOptions opts;
  opts.lr = config.learning_rate;
  opts.batch_size = config.batch_size;
  opts.max_epochs = config.max_epochs;
  opts.patience = config.patience;
  return opts;
}

TrainOptions focus_train_options(const RunConfig& config) {
  TrainOptions opts = train_options(config);
  if (config.focus_learning_rate > 0.0) opts.lr = config.focus_learning_rate;
  if (config.focus_max_epochs > 0) opts.max_epochs = config.focus_max_epochs;
  return opts;
}

void write_train_log(const std::vector<EpochLog>& log, std::size_t best_epoch,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write training log '" + path + "'");
  out << "epoch,train_nll,val_nll,best\n";
  char buf[128];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d\n", e.epoch, e.train_nll,
                  e.val_nll, e.epoch == best_epoch ? 1 : 0);
    out << buf;
  }
}

CheckpointHeader make_header(const std::string& kind, const RunConfig& config,
                             const Vocabulary& vocab) {
  CheckpointHeader h;
  h.kind = kind;
  h.config = config.echo();
  h.vocab = vocab;
  h.seed = config.seed;
  return h;
}

Checkpoint load_model(const std::string& path, const std::string& expect_kind) {
  Checkpoint ckpt = load_checkpoint(path);
  if (ckpt.header.kind != expect_kind)
    throw DataError("checkpoint '" + path + "' holds a '" + ckpt.header.kind +
                    "' model, expected '" + expect_kind + "'");
  return ckpt;
}

TokenSeq strip_eos_decode(Ids ids, const Vocabulary& vocab) {
  while (!ids.empty() && ids.back() == Vocabulary::kEos) ids.pop_back();
  return decode(ids, vocab);
}

struct GenerationRun {
  std::vector<TokenSeq> hypotheses;
  std::vector<TokenSeq> references;
};

GenerationRun generate_all(const Checkpoint& ckpt, const ConceptBank* bank,
                           const std::vector<ContextResponsePair>& pairs) {
  const RunConfig rc = config_from_echo(ckpt.header.config);
  const Vocabulary& vocab = ckpt.header.vocab;
  ParameterSet params = ckpt.params;  // scoring mutates the tape cache only
  GenerationRun run;
  for (const ContextResponsePair& pair : pairs) {
    Ids hyp;
    if (ckpt.header.kind == "focus") {
      const FocusConfig cfg = rc.focus(vocab.size());
      hyp = focus_generate(params, cfg, pair.context, *bank, vocab,
                           cfg.max_concepts, cfg.max_response_len)
                .response;
    } else {
      const HredConfig cfg = rc.hred(vocab.size());
      hyp = hred_generate(params, cfg, pair.context, cfg.max_response_len);
    }
    run.hypotheses.push_back(strip_eos_decode(hyp, vocab));
    run.references.push_back(strip_eos_decode(pair.response, vocab));
  }
  return run;
}

void write_per_pair_csv(const GenerationRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write per-pair report '" + path + "'");
  out << "pair,sentence_bleu,hyp_len,ref_len\n";
  char buf[128];
  for (std::size_t i = 0; i < run.hypotheses.size(); ++i) {
    const double b = bleu({run.hypotheses[i]}, {run.references[i]});
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu,%zu\n", i, b,
                  run.hypotheses[i].size(), run.references[i].size());
    out << buf;
  }
}

void write_report(const nlohmann::json& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write report '" + path + "'");
  out << report.dump(2) << "\n";
}

std::string join(const TokenSeq& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

// ---- subcommands ----------------------------------------------------------

int run_synth_data(const CommonOpts& opts) {
  const RunConfig config = resolve(opts);
  ensure_out_dir(opts.out);
  SynthSpec spec;
  spec.concept_count = config.synth_concepts;
  spec.noise_vocab_size = config.synth_noise_vocab;
  spec.dialogues = config.synth_dialogues;
  spec.seed = config.seed;
  const SynthCorpus corpus = synth_generate(spec);
  save_jsonl(corpus.conversations, opts.out + "/data.jsonl");
  save_ground_truth(corpus, opts.out + "/ground_truth.json");
  std::cout << "wrote " << corpus.conversations.size() << " dialogues, "
            << corpus.ground_truth.size() << " planted concepts\n";
  return 0;
}

int run_prepare_data(const CommonOpts& opts) {
  const RunConfig config = resolve(opts);
  ensure_out_dir(opts.out);
  const auto corpus = load_jsonl(opts.data);
  const Vocabulary vocab = vocab_from_corpus(corpus, config);
  const auto pairs = pairs_from_corpus(corpus, vocab, config);
  std::ofstream out(opts.out + "/vocab.txt");
  if (!out) throw DataError("cannot write vocabulary file");
  for (const std::string& w : vocab.words()) out << w << "\n";
  std::cout << "conversations " << corpus.size() << "\npairs " << pairs.size()
            << "\nvocab " << vocab.size() << "\n";
  return 0;
}

int run_train_hred(const CommonOpts& opts) {
  const RunConfig config = resolve(opts);
  ensure_out_dir(opts.out);
  const auto corpus = load_jsonl(opts.data);
  const Vocabulary vocab = vocab_from_corpus(corpus, config);
  auto pairs = pairs_from_corpus(corpus, vocab, config);
  if (config.train_size > 0 && pairs.size() > config.train_size)
    pairs.resize(config.train_size);
  std::vector<ContextResponsePair> train, val;
  tail_split(pairs, train, val);
  const HredTrainResult res = train_hred(train, val, config.hred(vocab.size()),
                                         train_options(config), config.seed);
  save_checkpoint(opts.out + "/hred.ckpt", res.params,
                  make_header("hred", config, vocab));
  write_train_log(res.log, res.best_epoch, opts.out + "/hred_train_log.csv");
  std::cout << "best epoch " << res.best_epoch << ", val nll "
            << res.log[res.best_epoch].val_nll << "\n";
  return 0;
}

int run_probe(const CommonOpts& opts, const std::string& model_path) {
  const RunConfig config = resolve(opts);
  ensure_out_dir(opts.out);
  const Checkpoint ckpt = load_model(model_path, "hred");
  const Vocabulary& vocab = ckpt.header.vocab;
  const auto corpus = load_jsonl(opts.data);
  const auto pairs = pairs_from_corpus(corpus, vocab, config);
  const RunConfig model_config = config_from_echo(ckpt.header.config);
  const HredScorer scorer(ckpt.params, model_config.hred(vocab.size()));
  ConceptBank bank =
      build_concept_bank(scorer, pairs, vocab, config.probe(), config.seed);
  bank.scorer_id = model_path;
  save_concept_bank(bank, opts.out + "/bank.tsv");
  std::cout << "bank entries " << bank.entries.size() << "\n";
  return 0;
}

int run_train_focus(const CommonOpts& opts, const std::string& bank_path) {
  const RunConfig config = resolve(opts);
  ensure_out_dir(opts.out);
  const ConceptBank bank = load_concept_bank(bank_path);
  const auto corpus = load_jsonl(opts.data);
  const Vocabulary vocab = vocab_from_corpus(corpus, config);
  auto pairs = pairs_from_corpus(corpus, vocab, config);
  if (config.train_size > 0 && pairs.size() > config.train_size)
    pairs.resize(config.train_size);
  std::vector<ContextResponsePair> train, val;
  tail_split(pairs, train, val);
  const FocusTrainResult res =
      train_mask_focus(train, val, vocab, bank, config.focus(vocab.size()),
                       focus_train_options(config), config.seed);
  if (res.empty_bank)
    std::cout << "warning: no bank word appears in the training contexts\n";
  save_checkpoint(opts.out + "/focus.ckpt", res.params,
                  make_header("focus", config, vocab));
  write_train_log(res.log, res.best_epoch, opts.out + "/focus_train_log.csv");
  std::cout << "best epoch " << res.best_epoch << ", val loss "
            << res.log[res.best_epoch].val_nll << "\n";
  return 0;
}

int run_evaluate(const CommonOpts& opts, const std::string& model_path,
                 const std::string& bank_path,
                 const std::vector<std::string>& lexicons) {
  const RunConfig config = resolve(opts);
  ensure_out_dir(opts.out);
  Checkpoint ckpt = load_checkpoint(model_path);
  ConceptBank bank;
  if (ckpt.header.kind == "focus") {
    if (bank_path.empty())
      throw DataError("evaluate: focus model requires --bank");
    bank = load_concept_bank(bank_path);
  }
  const auto corpus = load_jsonl(opts.data);
  const auto pairs = pairs_from_corpus(corpus, ckpt.header.vocab, config);
  if (pairs.empty()) throw DataError("evaluate: no context/response pairs");
  const GenerationRun run = generate_all(ckpt, &bank, pairs);

  nlohmann::json report;
  const auto echo = config.echo();
  report["bleu"] = {{"aggregate", bleu(run.hypotheses, run.references)},
                    {"config", echo}};
  for (const std::string& spec : lexicons) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos)
      throw DataError("--lexicon expects name=path, got '" + spec + "'");
    const Lexicon lex = load_lexicon(spec.substr(0, eq), spec.substr(eq + 1));
    const PrfReport prf = lexicon_prf(run.hypotheses, run.references, lex);
    report[lex.name + "_f1"] = {{"aggregate", prf.f1},
                                {"precision", prf.precision},
                                {"recall", prf.recall},
                                {"scored_pairs", prf.scored_pairs},
                                {"config", echo}};
  }
  write_report(report, opts.out + "/report.json");
  write_per_pair_csv(run, opts.out + "/per_pair.csv");
  std::cout << "bleu " << report["bleu"]["aggregate"].get<double>() << " over "
            << pairs.size() << " pairs\n";
  return 0;
}

int run_export_concepts(const std::string& bank_path, std::size_t k) {
  const ConceptBank bank = load_concept_bank(bank_path);
  for (const std::string& word : bank.top_k(k)) {
    const ConceptStats& s = bank.entries.at(word);
    std::printf("%s\t%.6f\t%zu\n", word.c_str(), s.mean(), s.n);
  }
  return 0;
}

int run_chat(const CommonOpts& opts, const std::string& model_path,
             const std::string& bank_path) {
  const RunConfig config = resolve(opts);
  const Checkpoint ckpt = load_model(model_path, "focus");
  const ConceptBank bank = load_concept_bank(bank_path);
  const Vocabulary& vocab = ckpt.header.vocab;
  const RunConfig model_config = config_from_echo(ckpt.header.config);
  const FocusConfig fcfg = model_config.focus(vocab.size());
  ParameterSet params = ckpt.params;

  std::vector<Ids> session;  // encoded turns, oldest first
  std::string line;
  std::cout << "> " << std::flush;
  while (std::getline(std::cin, line)) {
    if (line == "/reset") {
      session.clear();
      std::cout << "(session cleared)\n> " << std::flush;
      continue;
    }
    session.push_back(encode(tokenize(line), vocab));
    if (session.size() > config.chat_turns)
      session.erase(session.begin(),
                    session.end() - static_cast<std::ptrdiff_t>(config.chat_turns));
    const Context context(session.begin(), session.end());
    const GeneratedTriple triple = focus_generate(
        params, fcfg, context, bank, vocab, fcfg.max_concepts,
        fcfg.max_response_len);
    TokenSeq zc_words;
    for (const Ids& utt : triple.z_c)
      for (int id : utt) zc_words.push_back(vocab.word(id));
    TokenSeq response;
    for (int id : triple.response) {
      const std::string w = vocab.word(id);
      response.push_back(bank.contains(w) ? "*" + w + "*" : w);
    }
    std::cout << "z_c: " << join(zc_words) << "\n"
              << "z_r: " << join(strip_eos_decode(triple.z_r, vocab)) << "\n"
              << "response: " << join(response) << "\n> " << std::flush;
    session.push_back(triple.response);
  }
  return 0;
}

int run_experiment(const CommonOpts& opts) {
  const RunConfig config = resolve(opts);
  ensure_out_dir(opts.out);

  std::vector<Conversation> corpus;
  std::map<std::string, std::string> ground_truth;
  if (opts.data.empty()) {
    SynthSpec spec;
    spec.concept_count = config.synth_concepts;
    spec.noise_vocab_size = config.synth_noise_vocab;
    spec.dialogues = config.synth_dialogues;
    spec.seed = config.seed;
    SynthCorpus synth = synth_generate(spec);
    corpus = std::move(synth.conversations);
    ground_truth = std::move(synth.ground_truth);
    save_jsonl(corpus, opts.out + "/data.jsonl");
    save_ground_truth(synth, opts.out + "/ground_truth.json");
  } else {
    corpus = load_jsonl(opts.data);
  }

  const Vocabulary vocab = vocab_from_corpus(corpus, config);
  auto pairs = pairs_from_corpus(corpus, vocab, config);
  std::vector<ContextResponsePair> trainval, test, train, val;
  tail_split(pairs, trainval, test);
  if (config.train_size > 0 && trainval.size() > config.train_size)
    trainval.resize(config.train_size);
  tail_split(trainval, train, val);
  if (train.empty() || test.empty())
    throw DataError("experiment: not enough pairs to split");

  const TrainOptions topts = train_options(config);
  const HredTrainResult hred =
      train_hred(train, val, config.hred(vocab.size()), topts, config.seed);
  save_checkpoint(opts.out + "/hred.ckpt", hred.params,
                  make_header("hred", config, vocab));
  write_train_log(hred.log, hred.best_epoch, opts.out + "/hred_train_log.csv");

  const HredScorer scorer(hred.params, config.hred(vocab.size()));
  ConceptBank bank =
      build_concept_bank(scorer, train, vocab, config.probe(), config.seed);
  bank.scorer_id = opts.out + "/hred.ckpt";
  save_concept_bank(bank, opts.out + "/bank.tsv");

  const FocusTrainResult focus =
      train_mask_focus(train, val, vocab, bank, config.focus(vocab.size()),
                       focus_train_options(config), config.seed);
  save_checkpoint(opts.out + "/focus.ckpt", focus.params,
                  make_header("focus", config, vocab));
  write_train_log(focus.log, focus.best_epoch,
                  opts.out + "/focus_train_log.csv");

  Checkpoint hred_ckpt = load_checkpoint(opts.out + "/hred.ckpt");
  Checkpoint focus_ckpt = load_checkpoint(opts.out + "/focus.ckpt");
  const GenerationRun hred_run = generate_all(hred_ckpt, nullptr, test);
  const GenerationRun focus_run = generate_all(focus_ckpt, &bank, test);

  nlohmann::json report;
  const auto echo = config.echo();
  report["bleu_hred"] = {
      {"aggregate", bleu(hred_run.hypotheses, hred_run.references)},
      {"config", echo}};
  report["bleu_focus"] = {
      {"aggregate", bleu(focus_run.hypotheses, focus_run.references)},
      {"config", echo}};
  report["train_pairs"] = train.size();
  report["test_pairs"] = test.size();
  if (!ground_truth.empty()) {
    std::vector<std::string> planted;
    for (const auto& [cword, _] : ground_truth) planted.push_back(cword);
    report["probe_recall"] = {
        {"aggregate", probe_recall(bank, planted, planted.size())},
        {"config", echo}};
  }
  write_report(report, opts.out + "/report.json");
  write_per_pair_csv(focus_run, opts.out + "/per_pair.csv");
  std::cout << "bleu_hred " << report["bleu_hred"]["aggregate"].get<double>()
            << "\nbleu_focus "
            << report["bleu_focus"]["aggregate"].get<double>() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversation modeling pipeline: HRED baseline, PMI concept "
               "probing, and concept-aware generation"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string model_path, bank_path;
  std::size_t top_k = 20;
  std::vector<std::string> lexicons;

  add_common(app.add_subcommand("synth-data", "generate a planted-concept corpus"),
             opts, false);
  add_common(app.add_subcommand("prepare-data", "tokenize and build the vocabulary"),
             opts, true);
  add_common(app.add_subcommand("train-hred", "train the baseline model"), opts,
             true);

  auto* probe_cmd =
      app.add_subcommand("probe", "mask-probe a trained baseline into a concept bank");
  add_common(probe_cmd, opts, true);
  probe_cmd->add_option("--model", model_path, "baseline checkpoint")->required();

  auto* focus_cmd =
      app.add_subcommand("train-maskfocus", "train the concept-aware model");
  add_common(focus_cmd, opts, true);
  focus_cmd->add_option("--bank", bank_path, "concept bank TSV")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "generate and score on a test set");
  add_common(eval_cmd, opts, true);
  eval_cmd->add_option("--model", model_path, "model checkpoint")->required();
  eval_cmd->add_option("--bank", bank_path, "concept bank TSV (focus models)");
  eval_cmd->add_option("--lexicon", lexicons, "name=path lexicon for P/R/F1")
      ->take_all();

  auto* export_cmd = app.add_subcommand("export-concepts", "print top bank entries");
  export_cmd->add_option("--bank", bank_path, "concept bank TSV")->required();
  export_cmd->add_option("--k", top_k, "number of entries");

  auto* chat_cmd = app.add_subcommand("chat", "interactive REPL");
  add_common(chat_cmd, opts, false);
  chat_cmd->add_option("--model", model_path, "focus checkpoint")->required();
  chat_cmd->add_option("--bank", bank_path, "concept bank TSV")->required();

  auto* exp_cmd = app.add_subcommand("experiment", "run the full pipeline");
  add_common(exp_cmd, opts, false);
  exp_cmd->add_option("--train-size", [&opts](const std::vector<std::string>& v) {
    opts.sets.push_back("train_size=" + v.back());
    return true;
  }, "cap on training pairs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (app.got_subcommand("synth-data")) return run_synth_data(opts);
    if (app.got_subcommand("prepare-data")) return run_prepare_data(opts);
    if (app.got_subcommand("train-hred")) return run_train_hred(opts);
    if (app.got_subcommand("probe")) return run_probe(opts, model_path);
    if (app.got_subcommand("train-maskfocus"))
      return run_train_focus(opts, bank_path);
    if (app.got_subcommand("evaluate"))
      return run_evaluate(opts, model_path, bank_path, lexicons);
    if (app.got_subcommand("export-concepts"))
      return run_export_concepts(bank_path, top_k);
    if (app.got_subcommand("chat")) return run_chat(opts, model_path, bank_path);
    if (app.got_subcommand("experiment")) return run_experiment(opts);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
