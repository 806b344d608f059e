#include "ecg/cli/run.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecg/cli/pipeline.h"
#include "ecg/common/error.h"
#include "ecg/eval/evaluation.h"
#include "ecg/numerics/binary_io.h"
#include "ecg/numerics/checkpoint.h"
#include "ecg/retrieval/search.h"
#include "ecg/training/grad_suite.h"
#include "ecg/training/reader.h"

#ifndef ECG_VERSION
#define ECG_VERSION "unknown"
#endif

namespace ecg {
namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::optional<std::size_t> threads;
  std::vector<std::string> sets;
  bool quiet = false;

  // Command specific.
  std::string input;
  std::uint32_t first_id = 0;
  std::string query;
  std::string method;
  std::optional<std::size_t> budget;
  std::size_t k = 1;
  std::string split = "all";
};

class Context {
 public:
  Context(std::string command, const Options& opts, std::vector<std::string> args)
      : command_(std::move(command)), opts_(opts), args_(std::move(args)) {
    if (!opts.config_path.empty()) config_ = load_config(opts.config_path);
    for (const std::string& s : opts.sets) apply_override(config_, s);
    if (opts.seed) config_.seed = *opts.seed;
    if (opts.threads) config_.threads = std::max<std::size_t>(1, *opts.threads);
    config_.validate();
    fs::create_directories(opts.out);
  }

  const TrainConfig& config() const { return config_; }
  TrainConfig& config() { return config_; }
  const Options& opts() const { return opts_; }
  fs::path path(const std::string& name) const { return fs::path(opts_.out) / name; }
  bool exists(const std::string& name) const { return fs::exists(path(name)); }

  std::string output(const std::string& name) {
    outputs_.push_back(name);
    return path(name).string();
  }

  void log(const std::string& line) const {
    if (!opts_.quiet) std::cerr << line << "\n";
  }
  StepCallback step_log() const {
    return [this](std::size_t, const std::string& line) { log(line); };
  }

  void write_manifest() const {
    nlohmann::ordered_json j;
    j["command"] = command_;
    // The output directory is left out so that runs in different
    // directories produce identical manifests.
    std::vector<std::string> args;
    for (std::size_t i = 0; i < args_.size(); ++i) {
      if (args_[i] == "--out") {
        ++i;
      } else if (args_[i].rfind("--out=", 0) != 0) {
        args.push_back(args_[i]);
      }
    }
    j["args"] = args;
    j["seed"] = config_.seed;
    j["config_hash"] = config_hash(config_);
    j["version"] = version_string();
    std::vector<std::string> lines;
    std::istringstream in(config_to_string(config_));
    for (std::string line; std::getline(in, line);) lines.push_back(line);
    j["config"] = lines;
    j["outputs"] = outputs_;
    std::ofstream out(path("manifest-" + command_ + ".json"), std::ios::binary | std::ios::trunc);
    out << j.dump(2) << "\n";
  }

 private:
  std::string command_;
  Options opts_;
  std::vector<std::string> args_;
  TrainConfig config_;
  std::vector<std::string> outputs_;
};

void write_text(const std::string& path, const std::string& text) { write_file(path, text); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// -------------------------------------------------------------- loading

Vocabulary load_vocab(Context& ctx) {
  if (!ctx.exists("vocab.txt")) throw ContractError("missing " + ctx.path("vocab.txt").string() + " (run synth or chunk first)");
  return Vocabulary::load(ctx.path("vocab.txt").string());
}

std::vector<Passage> load_passages(const Context& ctx) { return load_corpus(ctx.path("corpus.jsonl").string()); }

std::vector<TrainExample> load_examples(const Context& ctx) {
  return load_train_examples(ctx.path("train.jsonl").string(), ctx.config().min_negatives);
}

std::vector<EvalQuery> load_queries(const Context& ctx, const std::string& split) {
  std::vector<EvalQuery> out;
  auto add = [&](const char* name) {
    if (!ctx.exists(name)) throw ContractError("missing " + ctx.path(name).string());
    for (EvalQuery& q : load_eval_queries(ctx.path(name).string())) out.push_back(std::move(q));
  };
  if (split == "train" || split == "all") add("queries_train.jsonl");
  if (split == "heldout" || split == "all") add("queries_heldout.jsonl");
  if (split != "train" && split != "heldout" && split != "all") {
    throw ContractError("unknown split '" + split + "' (expected train, heldout or all)");
  }
  return out;
}

std::unique_ptr<LanguageModel> load_lm(const Context& ctx, const Vocabulary& vocab, const std::string& name) {
  if (!ctx.exists(name)) throw ContractError("missing checkpoint " + ctx.path(name).string());
  auto lm = std::make_unique<LanguageModel>(lm_config_for(ctx.config(), vocab), 0, "lm");
  lm->params().load_named(load_checkpoint(ctx.path(name).string()));
  return lm;
}

std::unique_ptr<EcgModel> load_ecg(const Context& ctx, const Vocabulary& vocab, const std::string& name) {
  if (!ctx.exists(name)) throw ContractError("missing checkpoint " + ctx.path(name).string());
  auto model = std::make_unique<EcgModel>(vocab, lm_config_for(ctx.config(), vocab), 0);
  model->load(ctx.path(name).string());
  return model;
}

void save_lm(const LanguageModel& lm, const std::string& path) { save_checkpoint(path, lm.params().to_named()); }

// ------------------------------------------------------------- commands

void cmd_synth(Context& ctx) {
  const SyntheticWorld world = synth_world(ctx.config());
  const QaSplit split = split_qa(world, ctx.config().held_out_fraction, ctx.config().seed);
  save_corpus(ctx.output("corpus.jsonl"), world.passages);
  save_train_examples(ctx.output("train.jsonl"), split.train_examples);
  save_eval_queries(ctx.output("queries_train.jsonl"), split.train_queries);
  save_eval_queries(ctx.output("queries_heldout.jsonl"), split.heldout_queries);
  build_vocabulary(world.passages, world.examples, world.queries).save(ctx.output("vocab.txt"));
  ctx.log("synth: " + std::to_string(world.passages.size()) + " passages, " +
          std::to_string(split.train_examples.size()) + " training examples, " +
          std::to_string(split.heldout_queries.size()) + " held-out queries");
}

void cmd_chunk(Context& ctx) {
  if (ctx.opts().input.empty()) throw ContractError("chunk: --input is required");
  const std::string text = read_file(ctx.opts().input);
  const std::vector<Passage> passages = chunk_text(text, ctx.config().chunk_words, ctx.opts().first_id);
  save_corpus(ctx.output("corpus.jsonl"), passages);
  build_vocabulary(passages, {}, {}).save(ctx.output("vocab.txt"));
  ctx.log("chunk: " + std::to_string(passages.size()) + " passages");
}

void cmd_train_teacher(Context& ctx) {
  const Vocabulary vocab = load_vocab(ctx);
  const std::vector<TrainExample> examples = load_examples(ctx);
  const TrainConfig& c = ctx.config();
  const LmConfig lc = lm_config_for(c, vocab);
  std::string log_csv = "model,step,loss\n";
  for (ReaderMode mode : {ReaderMode::kReader, ReaderMode::kParametric}) {
    const std::string name = mode == ReaderMode::kReader ? "reader" : "parametric";
    LanguageModel lm(lc, stream_seed(c.seed, name + "-init"), "lm");
    std::mt19937_64 rng(stream_seed(c.seed, name));
    const auto history = train_reader(lm, vocab, examples, c, mode, rng, ctx.step_log());
    for (std::size_t s = 0; s < history.size(); ++s) log_csv += name + "," + std::to_string(s) + "," + fmt(history[s]) + "\n";
    save_lm(lm, ctx.output(name + ".ecgp"));
  }
  write_text(ctx.output("teacher_log.csv"), log_csv);
}

void cmd_train_ssl(Context& ctx) {
  const Vocabulary vocab = load_vocab(ctx);
  const std::vector<Passage> passages = load_passages(ctx);
  const TrainConfig& c = ctx.config();
  EcgModel model(vocab, lm_config_for(c, vocab), stream_seed(c.seed, "ecg-init"));
  std::mt19937_64 rng(stream_seed(c.seed, "ssl"));
  const auto history = train_ssl(model, passages, c, rng, ctx.step_log());
  std::string csv = "step,lm,contrastive,total\n";
  for (std::size_t s = 0; s < history.size(); ++s) {
    csv += std::to_string(s) + "," + fmt(history[s].lm) + "," + fmt(history[s].contrastive) + "," +
           fmt(history[s].total) + "\n";
  }
  model.save(ctx.output("ssl.ecgp"));
  write_text(ctx.output("ssl_log.csv"), csv);
}

void cmd_train_rag(Context& ctx) {
  const Vocabulary vocab = load_vocab(ctx);
  const std::vector<TrainExample> examples = load_examples(ctx);
  const TrainConfig& c = ctx.config();
  std::unique_ptr<EcgModel> model;
  if (ctx.exists("ssl.ecgp")) {
    model = load_ecg(ctx, vocab, "ssl.ecgp");
  } else {
    ctx.log("warning: no ssl.ecgp, RAG training starts from a fresh model");
    model = std::make_unique<EcgModel>(vocab, lm_config_for(c, vocab), stream_seed(c.seed, "ecg-init"));
  }
  std::unique_ptr<LanguageModel> teacher;
  if (c.distillation) teacher = load_lm(ctx, vocab, "reader.ecgp");
  std::mt19937_64 rng(stream_seed(c.seed, "rag"));
  const auto history = train_rag(*model, teacher.get(), examples, c, rng, ctx.step_log());
  std::string csv = "step,gen,contrastive,margin,total,tau,alpha\n";
  for (std::size_t s = 0; s < history.size(); ++s) {
    const RagReport& r = history[s];
    csv += std::to_string(s) + "," + fmt(r.gen) + "," + fmt(r.contrastive) + "," + fmt(r.margin) + "," +
           fmt(r.total) + "," + fmt(r.tau) + "," + fmt(r.alpha) + "\n";
  }
  model->save(ctx.output("ecg.ecgp"));
  write_text(ctx.output("rag_log.csv"), csv);
}

void cmd_index(Context& ctx) {
  const Vocabulary vocab = load_vocab(ctx);
  const auto model = load_ecg(ctx, vocab, "ecg.ecgp");
  const EmbeddingStore store = build_index(*model, load_passages(ctx), ctx.config().t, ctx.config().threads);
  store.write(ctx.output("index.ecgs"));
  ctx.log("index: " + std::to_string(store.size()) + " passages, " + std::to_string(disk_usage(store)) + " bytes");
}

void cmd_search(Context& ctx) {
  if (ctx.opts().query.empty()) throw ContractError("search: --query is required");
  const Vocabulary vocab = load_vocab(ctx);
  const auto model = load_ecg(ctx, vocab, "ecg.ecgp");
  const EmbeddingStore store = EmbeddingStore::read(ctx.path("index.ecgs").string());
  const std::vector<Passage> passages = load_passages(ctx);
  const SearchResult result =
      search_topk(model->embed(ctx.opts().query, ctx.config().t), store, ctx.opts().k, ctx.config().threads);
  if (result.truncated) ctx.log("warning: k exceeds the index size; returning every passage");
  std::string csv = "rank,id,score,text\n";
  for (const RankedResult& r : result.results) {
    std::string text;
    for (const Passage& p : passages) {
      if (p.id == r.id) text = p.text;
    }
    nlohmann::json quoted = text;
    csv += std::to_string(r.rank) + "," + std::to_string(r.id) + "," + fmt(r.score) + "," + quoted.dump() + "\n";
    std::cout << r.rank << "\t" << r.id << "\t" << fmt(r.score) << "\t" << text << "\n";
  }
  write_text(ctx.output("search.csv"), csv);
}

void cmd_eval(Context& ctx) {
  const TrainConfig& c = ctx.config();
  const Vocabulary vocab = load_vocab(ctx);
  const std::vector<Passage> passages = load_passages(ctx);
  const std::vector<EvalQuery> queries = load_queries(ctx, ctx.opts().split);
  std::vector<Method> methods = ctx.opts().method.empty() ? all_methods()
                                                          : std::vector<Method>{parse_method(ctx.opts().method)};
  std::vector<std::size_t> budgets =
      ctx.opts().budget ? std::vector<std::size_t>{*ctx.opts().budget} : budget_grid(c.budget_min, c.budget_max, c.budget_step);

  EvalSystem system;
  system.vocab = &vocab;
  system.max_new = c.max_new;
  system.threads = c.threads;
  system.index_passages(passages);
  std::unique_ptr<LanguageModel> reader, parametric;
  std::unique_ptr<EcgModel> model;
  EmbeddingStore store;
  Bm25Index bm25 = build_bm25(passages);
  system.bm25 = &bm25;
  for (Method m : methods) {
    if (m == Method::kParametric && !parametric) parametric = load_lm(ctx, vocab, "parametric.ecgp");
    if (m == Method::kRagReader && !reader) reader = load_lm(ctx, vocab, "reader.ecgp");
    if ((m == Method::kCompressionReader || m == Method::kEcg) && !model) model = load_ecg(ctx, vocab, "ecg.ecgp");
    if (m == Method::kEcg && store.empty()) store = EmbeddingStore::read(ctx.path("index.ecgs").string());
  }
  system.parametric = parametric.get();
  system.reader = reader.get();
  system.ecg = model.get();
  system.store = &store;

  std::vector<EvalReport> reports;
  for (Method m : methods) {
    for (std::size_t budget : budgets) {
      try {
        reports.push_back(eval_fixed_budget(system, m, queries, budget, ctx.opts().k, "synthetic-" + ctx.opts().split));
        ctx.log("eval " + method_name(m) + " budget=" + std::to_string(budget) + " k=" + std::to_string(reports.back().k) +
                " em=" + fmt(reports.back().em));
      } catch (const ContractError& e) {
        if (ctx.opts().budget) throw;
        ctx.log("skip " + method_name(m) + " budget=" + std::to_string(budget) + ": " + e.what());
      }
    }
  }
  write_reports_csv(ctx.output("eval.csv"), reports);
  write_records_jsonl(ctx.output("eval_records.jsonl"), reports);
  std::cout << reports_csv(reports);
}

void cmd_ablate(Context& ctx) {
  const TrainConfig base = ctx.config();
  DeskRun shared = prepare_desk_run(base);
  ctx.log("ablate: training readers");
  train_readers(shared, ctx.step_log());
  shared.bm25 = build_bm25(shared.world.passages);

  // SSL depends only on contrastive_pretrain.
  std::map<bool, std::vector<NamedTensor>> pretrained;
  std::map<bool, double> ssl_lm;
  for (bool contrastive : {true, false}) {
    TrainConfig c = base;
    c.contrastive_pretrain = contrastive;
    EcgModel model(shared.vocab, lm_config_for(c, shared.vocab), stream_seed(c.seed, "ecg-init"));
    std::mt19937_64 rng(stream_seed(c.seed, "ssl"));
    ctx.log(std::string("ablate: pretraining, contrastive ") + (contrastive ? "on" : "off"));
    const auto history = train_ssl(model, shared.world.passages, c, rng, ctx.step_log());
    ssl_lm[contrastive] = history.empty() ? 0.0 : history.back().lm;
    pretrained[contrastive] = model.to_named();
  }

  std::string csv =
      "contrastive_pretrain,distillation,loss_scaling,weighted_negatives,ssl_lm,rag_total,tau_min,tau_max,"
      "alpha_min,alpha_max,top1_train,em_train,em_heldout\n";
  auto flag = [](bool b) { return std::string(b ? "on" : "off"); };
  for (int mask = 0; mask < 16; ++mask) {
    TrainConfig c = base;
    c.contrastive_pretrain = !(mask & 8);
    c.distillation = !(mask & 4);
    c.loss_scaling = !(mask & 2);
    c.weighted_negatives = !(mask & 1);
    EcgModel model(shared.vocab, lm_config_for(c, shared.vocab), 0);
    model.load_named(pretrained[c.contrastive_pretrain]);
    std::mt19937_64 rng(stream_seed(c.seed, "rag"));
    ctx.log("ablate: run " + std::to_string(mask + 1) + "/16");
    const auto history =
        train_rag(model, c.distillation ? shared.reader.get() : nullptr, shared.split.train_examples, c, rng, ctx.step_log());
    double tau_min = model.scaling().tau_value(), tau_max = tau_min;
    double alpha_min = model.scaling().alpha_value(), alpha_max = alpha_min;
    for (const RagReport& r : history) {
      tau_min = std::min(tau_min, r.tau);
      tau_max = std::max(tau_max, r.tau);
      alpha_min = std::min(alpha_min, r.alpha);
      alpha_max = std::max(alpha_max, r.alpha);
    }
    const EmbeddingStore store = build_index(model, shared.world.passages, c.t, c.threads);
    EvalSystem system = shared.system();
    system.ecg = &model;
    system.store = &store;
    const std::size_t budget = c.t;
    const double em_train = eval_fixed_budget(system, Method::kEcg, shared.split.train_queries, budget, 1).em;
    const double em_heldout = shared.split.heldout_queries.empty()
                                  ? 0.0
                                  : eval_fixed_budget(system, Method::kEcg, shared.split.heldout_queries, budget, 1).em;
    csv += flag(c.contrastive_pretrain) + "," + flag(c.distillation) + "," + flag(c.loss_scaling) + "," +
           flag(c.weighted_negatives) + "," + fmt(ssl_lm[c.contrastive_pretrain]) + "," +
           fmt(history.empty() ? 0.0 : history.back().total) + "," + fmt(tau_min) + "," + fmt(tau_max) + "," +
           fmt(alpha_min) + "," + fmt(alpha_max) + "," +
           fmt(gold_top1_rate(model, store, shared.split.train_queries)) + "," + fmt(em_train) + "," +
           fmt(em_heldout) + "\n";
  }
  write_text(ctx.output("ablation.csv"), csv);
}

bool cmd_gradcheck(Context& ctx) {
  const auto suite = run_grad_suite(ctx.config().seed);
  std::string csv = "check,coordinates,kinks,max_relative_error,worst_coordinate,passed\n";
  bool all = true;
  for (const GradSuiteEntry& e : suite) {
    all = all && e.report.passed;
    csv += e.name + "," + std::to_string(e.report.coordinates_checked) + "," + std::to_string(e.report.kinks.size()) +
           "," + fmt(e.report.max_relative_error) + "," + e.report.worst_coordinate + "," + (e.report.passed ? "yes" : "no") + "\n";
    std::cout << (e.report.passed ? "PASS " : "FAIL ") << e.name << " max_rel_err=" << fmt(e.report.max_relative_error)
              << " coords=" << e.report.coordinates_checked << "\n";
  }
  write_text(ctx.output("gradcheck.csv"), csv);
  return all;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "key=value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "random seed (overrides config)");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--threads", o.threads, "worker threads (1 = serial)");
  cmd->add_option("--set", o.sets, "config override key=value (repeatable)")->allow_extra_args(false);
  cmd->add_flag("--quiet", o.quiet, "suppress progress logs");
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const DimensionError*>(&e)) return "DimensionError";
  if (dynamic_cast<const LengthError*>(&e)) return "LengthError";
  if (dynamic_cast<const FormatError*>(&e)) return "FormatError";
  if (dynamic_cast<const NumericalError*>(&e)) return "NumericalError";
  if (dynamic_cast<const ContractError*>(&e)) return "ContractError";
  if (dynamic_cast<const Error*>(&e)) return "Error";
  return "std::exception";
}

}  // namespace

std::string version_string() { return ECG_VERSION; }

int run(const std::vector<std::string>& args) {
  CLI::App app{"Embed-Compress-Generate desk toolkit", "ecg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());
  Options o;
  const std::vector<std::string> names{"synth", "chunk", "train-ssl", "train-rag", "train-teacher",
                                       "index", "search", "eval", "ablate", "gradcheck"};
  const std::map<std::string, std::string> help{
      {"synth", "generate the synthetic corpus, QA split and vocabulary"},
      {"chunk", "split a text file into word-bounded passages"},
      {"train-ssl", "self-supervised compression and contrastive pretraining"},
      {"train-rag", "RAG fine-tuning from ssl.ecgp"},
      {"train-teacher", "train the reader and parametric baselines"},
      {"index", "encode the corpus into index.ecgs"},
      {"search", "MaxSim search over index.ecgs"},
      {"eval", "fixed-budget evaluation"},
      {"ablate", "2^4 ablation matrix"},
      {"gradcheck", "gradient check suite"}};
  std::map<std::string, CLI::App*> cmds;
  for (const std::string& name : names) {
    CLI::App* cmd = app.add_subcommand(name, help.at(name));
    add_common(cmd, o);
    cmds[name] = cmd;
  }
  cmds["chunk"]->add_option("--input", o.input, "text file")->required();
  cmds["chunk"]->add_option("--first-id", o.first_id, "id of the first passage");
  cmds["search"]->add_option("--query", o.query, "query text")->required();
  cmds["search"]->add_option("--k", o.k, "results to return")->check(CLI::PositiveNumber);
  cmds["eval"]->add_option("--method", o.method, "parametric, rag_reader, compression_reader or ecg");
  cmds["eval"]->add_option("--budget", o.budget, "context budget (default: config grid)")->check(CLI::PositiveNumber);
  cmds["eval"]->add_option("--k", o.k, "documents per query")->check(CLI::Range(0, 5));
  cmds["eval"]->add_option("--split", o.split, "train, heldout or all");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string command;
  for (const auto& [name, cmd] : cmds) {
    if (cmd->parsed()) command = name;
  }
  try {
    Context ctx(command, o, args);
    bool ok = true;
    if (command == "synth") cmd_synth(ctx);
    else if (command == "chunk") cmd_chunk(ctx);
    else if (command == "train-teacher") cmd_train_teacher(ctx);
    else if (command == "train-ssl") cmd_train_ssl(ctx);
    else if (command == "train-rag") cmd_train_rag(ctx);
    else if (command == "index") cmd_index(ctx);
    else if (command == "search") cmd_search(ctx);
    else if (command == "eval") cmd_eval(ctx);
    else if (command == "ablate") cmd_ablate(ctx);
    else if (command == "gradcheck") ok = cmd_gradcheck(ctx);
    ctx.write_manifest();
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    nlohmann::ordered_json j;
    j["error"] = error_kind(e);
    j["command"] = command;
    j["message"] = e.what();
    std::cerr << j.dump() << "\n";
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace ecg
