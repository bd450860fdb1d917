#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "cgdec/candexpr.hpp"
#include "cgdec/constrain.hpp"
#include "cgdec/decode.hpp"
#include "cgdec/enumerate.hpp"
#include "cgdec/grammar.hpp"
#include "cgdec/kb.hpp"
#include "cgdec/logical_form.hpp"
#include "cgdec/mask_bench.hpp"
#include "cgdec/model.hpp"
#include "cgdec/train.hpp"

namespace cgdec::cli {

namespace {

// Any failure while reading or parsing an input file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DomainPaths {
  std::string grammar;
  std::string vocab;
  std::string candidates;
  std::string manifest;
  std::string domain;
  bool no_inference = false;
  bool fold_case = false;
};

struct Domain {
  std::unique_ptr<Grammar> grammar;
  std::unique_ptr<CandidateIndex> candidates;
  std::vector<std::string> warnings;
};

template <class F>
auto with_input(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw InputError(what + ": " + e.what());
  }
}

void add_domain_options(CLI::App* cmd, DomainPaths& p, bool candidates_allowed = true) {
  cmd->add_option("--grammar", p.grammar, "grammar DSL file (.gdsl)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--vocab", p.vocab, "vocabulary file, one token per line")->required()->check(CLI::ExistingFile);
  if (!candidates_allowed) return;
  cmd->add_option("--candidates", p.candidates, "candidate expression file (.cand)")->check(CLI::ExistingFile);
  cmd->add_option("--manifest", p.manifest, "candidate manifest: <domain> <class> <path> per line")
      ->check(CLI::ExistingFile);
  cmd->add_option("--domain", p.domain, "domain to load from --manifest");
  cmd->add_flag("--no-subtype-inference", p.no_inference, "materialize super->sub conversion rules instead");
  cmd->add_flag("--fold-case", p.fold_case, "lower-case candidate words before vocabulary lookup");
}

Domain load_domain(const DomainPaths& p) {
  Domain d;
  Vocabulary vocab = with_input(p.vocab, [&] { return Vocabulary::load(p.vocab); });
  GrammarOptions opts;
  opts.subtype_inference = !p.no_inference;
  d.grammar = with_input(p.grammar, [&] {
    return std::make_unique<Grammar>(parse_grammar(read_file(p.grammar), std::move(vocab), opts));
  });
  std::vector<CandidateSet> sets;
  if (!p.candidates.empty()) {
    auto more = with_input(p.candidates, [&] { return load_candidate_file(p.candidates); });
    sets.insert(sets.end(), more.begin(), more.end());
  }
  if (!p.manifest.empty()) {
    if (p.domain.empty()) throw InputError("--manifest needs --domain");
    auto more = with_input(p.manifest, [&] {
      const std::string base = std::filesystem::path(p.manifest).parent_path().string();
      return load_domain_candidates(parse_manifest(read_file(p.manifest), base), p.domain);
    });
    sets.insert(sets.end(), more.begin(), more.end());
  }
  TokenizeOptions topts;
  topts.fold_case = p.fold_case;
  d.candidates = with_input(p.candidates.empty() ? p.manifest : p.candidates, [&] {
    return std::make_unique<CandidateIndex>(CandidateIndex::build(*d.grammar, sets, topts, &d.warnings));
  });
  return d;
}

int cmd_validate(const DomainPaths& p, std::ostream& out) {
  Domain d = load_domain(p);
  const Grammar& g = *d.grammar;
  std::vector<std::string> lints = g.lints();
  for (ClassId c : d.candidates->empty_classes(g))
    lints.push_back("class '" + g.node_class(c).name + "' has no candidate expressions");
  out << "rule actions: " << g.num_rule_actions() << "\n";
  out << "nl-token actions: " << g.num_token_actions() << "\n";
  out << "reduce actions: 1\n";
  out << "total actions: " << g.num_actions() << "\n";
  out << "types: " << g.hierarchy().size() << "\n";
  out << "lints: " << lints.size() << "\n";
  for (const auto& l : lints) out << "lint: " << l << "\n";
  for (const auto& w : d.warnings) out << "warning: " << w << "\n";
  return kOk;
}

int cmd_enumerate(const DomainPaths& p, std::size_t depth, const std::string& constraint, std::ostream& out) {
  const Constraint c = with_input("--constraint", [&] { return parse_constraint(constraint); });
  Domain d = load_domain(p);
  const ActionConstraints ac(*d.grammar, d.candidates.get());
  for (const auto& line : enumeration_listing(enumerate_complete(ac, c, depth))) out << line << "\n";
  return kOk;
}

struct DecodeOptions {
  std::string constraint = "hybr";
  std::size_t beam = 1;
  std::size_t max_steps = 100;
  std::string scorer = "uniform";
  std::string output = "visual";
};

int cmd_decode(const DomainPaths& p, const DecodeOptions& o, std::istream& in, std::ostream& out) {
  const Constraint c = with_input("--constraint", [&] { return parse_constraint(o.constraint); });
  if (o.output != "visual" && o.output != "default" && o.output != "actions")
    throw InputError("--output must be visual, default or actions");
  Domain d = load_domain(p);
  const Grammar& g = *d.grammar;

  std::unique_ptr<Scorer> scorer;
  std::unique_ptr<ToyModel> model;
  if (o.scorer == "uniform") {
    scorer = std::make_unique<UniformScorer>(g.num_actions());
  } else if (o.scorer.rfind("table:", 0) == 0) {
    const std::string path = o.scorer.substr(6);
    scorer = with_input(path, [&] { return std::make_unique<TableScorer>(TableScorer::load(path, g.num_actions())); });
  } else if (o.scorer.rfind("loglinear:", 0) == 0) {
    const std::string path = o.scorer.substr(10);
    model = with_input(path, [&] { return std::make_unique<ToyModel>(ToyModel::load(path)); });
    scorer = std::make_unique<LogLinearScorer>(g, *model);
  } else {
    throw InputError("--scorer must be uniform, table:<file> or loglinear:<file>");
  }

  const Decoder decoder(g, d.candidates.get());
  DecodeConfig cfg;
  cfg.constraint = c;
  cfg.strategy = o.beam > 1 ? SearchStrategy::beam : SearchStrategy::greedy;
  cfg.beam = o.beam;
  cfg.max_steps = o.max_steps;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hyps = decoder.decode(*scorer, line, cfg);
    if (hyps.empty() || !hyps.front().finished) {
      out << "!unfinished\t" << (hyps.empty() ? "" : join_ids(hyps.front().state.actions())) << "\n";
      continue;
    }
    const IRState& s = hyps.front().state;
    if (o.output == "actions") {
      out << join_ids(s.actions()) << "\n";
      continue;
    }
    try {
      out << print(to_logical_form(s, o.output == "visual" ? TemplateKind::visual : TemplateKind::default_form))
          << "\n";
    } catch (const TemplateError& e) {
      out << "!error\t" << e.what() << "\n";
    }
  }
  return kOk;
}

struct BenchOptions {
  std::vector<std::size_t> sizes{50261};
  std::vector<std::size_t> batches{64};
  std::size_t beam = 1;
  std::vector<std::string> strategies{"naive", "cached", "validness"};
  std::size_t iterations = 100;
  std::uint64_t seed = 0;
};

int cmd_bench(const BenchOptions& o, std::ostream& out) {
  BenchConfig cfg;
  cfg.sizes = o.sizes;
  cfg.batches = o.batches;
  cfg.beam = o.beam;
  cfg.iterations = o.iterations;
  cfg.seed = o.seed;
  cfg.strategies.clear();
  for (const auto& s : o.strategies)
    cfg.strategies.push_back(with_input("--strategies", [&] { return parse_mask_strategy(s); }));
  out << bench_csv_header() << "\n";
  for (const auto& row : run_mask_bench(cfg)) out << to_csv(row) << "\n";
  return kOk;
}

struct TrainOptions {
  std::string kb, train, validation, pretrain, model_out;
  std::string constraint = "hybr";
  std::size_t buckets = 1 << 16;
  std::uint64_t seed = 0;
  WeakSupConfig cfg;
};

int cmd_train(const DomainPaths& p, TrainOptions& o, std::ostream& out) {
  o.cfg.constraint = with_input("--constraint", [&] { return parse_constraint(o.constraint); });
  o.cfg.seed = o.seed;
  Domain d = load_domain(p);
  const MiniKB kb = with_input(o.kb, [&] { return MiniKB::load(o.kb); });
  const auto weak = with_input(o.train, [&] { return load_dataset(o.train); });
  const auto validation =
      o.validation.empty() ? std::vector<Example>{} : with_input(o.validation, [&] { return load_dataset(o.validation); });
  const auto pretrain =
      o.pretrain.empty() ? std::vector<Example>{} : with_input(o.pretrain, [&] { return load_dataset(o.pretrain); });
  for (const auto& ex : weak)
    if (!ex.gold_denotation) throw InputError(o.train + ": every training example needs a gold denotation");

  const ParserEnv env(*d.grammar, d.candidates.get(), kb);
  ToyModel model(o.buckets);
  out << "cycle,oracle_accuracy,validation_accuracy,skipped\n";
  for (const auto& r : train_weaksup(env, model, pretrain, weak, validation, o.cfg)) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.4f,%.4f,%zu\n", r.cycle, r.oracle_accuracy, r.validation_accuracy, r.skipped);
    out << buf;
  }
  if (!o.model_out.empty()) model.save(o.model_out);
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grammar-constrained decoding toolkit", "cgdec"};
  app.require_subcommand(1);

  DomainPaths paths;

  auto* validate = app.add_subcommand("validate", "check a grammar, vocabulary and candidates; print inventory counts");
  add_domain_options(validate, paths);

  std::size_t depth = 6;
  std::string enum_constraint = "hybr";
  auto* enumerate = app.add_subcommand("enumerate", "list every complete action sequence up to a depth");
  add_domain_options(enumerate, paths);
  enumerate->add_option("--depth", depth, "maximum sequence length (at most 10)")->capture_default_str();
  enumerate->add_option("--constraint", enum_constraint, "none, type-wu, type or hybr")->capture_default_str();

  DecodeOptions dopts;
  auto* decode = app.add_subcommand("decode", "decode utterances read one per line from standard input");
  add_domain_options(decode, paths);
  decode->add_option("--constraint", dopts.constraint, "none, type-wu, type or hybr")->capture_default_str();
  decode->add_option("--beam", dopts.beam, "beam size; 1 is greedy search")->capture_default_str()->check(CLI::PositiveNumber);
  decode->add_option("--max-steps", dopts.max_steps, "action budget per utterance")->capture_default_str()->check(CLI::PositiveNumber);
  decode->add_option("--scorer", dopts.scorer, "uniform, table:<file> or loglinear:<file>")->capture_default_str();
  decode->add_option("--output", dopts.output, "visual, default or actions")->capture_default_str();

  BenchOptions bopts;
  auto* bench = app.add_subcommand("bench-mask", "time mask-tensor construction on a synthetic inventory (CSV)");
  bench->add_option("--sizes", bopts.sizes, "total action counts")->capture_default_str()->delimiter(',');
  bench->add_option("--batches", bopts.batches, "batch sizes")->capture_default_str()->delimiter(',');
  bench->add_option("--beam", bopts.beam, "beam size; rows per tensor = batch * beam")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--strategies", bopts.strategies, "naive, cached, validness")->capture_default_str()->delimiter(',');
  bench->add_option("--iterations", bopts.iterations, "timed builds per row")->capture_default_str()->check(CLI::PositiveNumber);
  bench->add_option("--seed", bopts.seed, "seed for sampling benchmark states")->capture_default_str();

  TrainOptions topts;
  auto* train = app.add_subcommand("train-weaksup", "weakly supervised search/maximize training of the toy scorer");
  add_domain_options(train, paths);
  train->add_option("--kb", topts.kb, "MiniKB file")->required()->check(CLI::ExistingFile);
  train->add_option("--train", topts.train, "weakly supervised dataset")->required()->check(CLI::ExistingFile);
  train->add_option("--validation", topts.validation, "dataset used for accuracy reports")->check(CLI::ExistingFile);
  train->add_option("--pretrain", topts.pretrain, "strongly supervised dataset used before the first cycle")
      ->check(CLI::ExistingFile);
  train->add_option("--cycles", topts.cfg.cycles, "search/maximize cycles")->capture_default_str();
  train->add_option("--beam", topts.cfg.beam, "beam size for search and evaluation")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--epochs", topts.cfg.epochs, "maximize epochs per cycle")->capture_default_str();
  train->add_option("--pretrain-epochs", topts.cfg.pretrain_epochs, "epochs over --pretrain")->capture_default_str();
  train->add_option("--lr", topts.cfg.lr, "fixed step size")->capture_default_str();
  train->add_option("--max-steps", topts.cfg.max_steps, "action budget per search")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--constraint", topts.constraint, "none, type-wu, type or hybr")->capture_default_str();
  train->add_option("--buckets", topts.buckets, "hashed feature buckets")->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--seed", topts.seed, "seed for example order")->capture_default_str();
  train->add_option("--model-out", topts.model_out, "write the trained model here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(paths, out);
    if (*enumerate) return cmd_enumerate(paths, depth, enum_constraint, out);
    if (*decode) return cmd_decode(paths, dopts, in, out);
    if (*bench) return cmd_bench(bopts, out);
    if (*train) return cmd_train(paths, topts, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kParse;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kContract;
  }
  return kUsage;
}

}  // namespace cgdec::cli
