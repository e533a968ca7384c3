#include "cli.h"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "kbc/error.h"
#include "kbc/eval.h"
#include "kbc/kb.h"
#include "kbc/log.h"
#include "kbc/model.h"
#include "kbc/report.h"
#include "kbc/rules.h"
#include "kbc/table_scorer.h"
#include "kbc/training.h"

namespace kbc::cli {
namespace {

namespace fs = std::filesystem;

// Raised for configuration problems detected before any work starts.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::string dataset_dir;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string out;

  // Single training configuration.
  std::string model;
  std::size_t dim = 100;
  double lr = 0.1;
  double l2 = 0.01;
  double margin = 1.0;
  std::string sampling = "perturb1";
  std::size_t negatives = 6;
  std::size_t epochs = 500;
  std::size_t eval_every = 50;
  std::string norm = "l2";
  std::string loss;
  double init_scale = 1.0;
  bool literal_complex = false;
  std::string validation_metric = "mrr";
  std::size_t tuning_relations = 0;
  bool tuning_relations_set = false;
  std::size_t update_threads = 1;

  // Grid axes.
  std::vector<std::size_t> grid_dims;
  std::vector<double> grid_lrs;
  std::vector<double> grid_l2s;
  std::vector<double> grid_margins;
  std::vector<std::string> grid_samplings;
  bool grid_epochs_set = false;

  // Scorer sources.
  std::string checkpoint;
  std::string rules_file;
  std::string scores_file;

  // Evaluation.
  std::string protocol;
  std::vector<std::size_t> ks;
  std::vector<std::size_t> k_grid;
  std::string split = "test";
  bool filter_targets = false;
  std::string types;
  std::string relation_constraints;
  bool no_augment = false;
  std::size_t block_side = 1024;

  // Rule mining.
  std::size_t max_len = 2;
  std::size_t sample_size = 1000;
  std::size_t min_support = 2;
  bool no_constant_rules = false;

  // Closure analysis.
  std::vector<std::string> closure_relations;
  bool symmetric = false;
  bool transitive = false;
  std::string external;
};

void AddCommon(CLI::App* app, Options& o) {
  app->add_option("--dataset-dir", o.dataset_dir,
                  "Directory with train.txt, valid.txt and test.txt")
      ->required();
  app->add_option("--seed", o.seed, "Random seed")->required();
  app->add_option("--out", o.out, "Output directory")->required();
  app->add_option("--workers", o.workers, "Worker threads for evaluation");
}

void AddTrainFlags(CLI::App* app, Options& o) {
  app->add_option("--model", o.model,
                  "rescal, transe, distmult, complex or analogy");
  app->add_option("--dim", o.dim, "Embedding dimension");
  app->add_option("--lr", o.lr, "AdaGrad learning rate");
  app->add_option("--l2", o.l2, "L2 regularization weight");
  app->add_option("--margin", o.margin, "Margin for the ranking loss");
  app->add_option("--sampling", o.sampling, "perturb1, perturb2 or perturb1r");
  app->add_option("--negatives", o.negatives, "Negatives per positive");
  app->add_option("--epochs", o.epochs, "Maximum epochs");
  app->add_option("--eval-every", o.eval_every, "Validation interval in epochs");
  app->add_option("--norm", o.norm, "TransE distance: l1 or l2");
  app->add_option("--loss", o.loss, "bce or margin (default depends on model)");
  app->add_option("--init-scale", o.init_scale, "Initialization scale");
  app->add_flag("--literal-complex", o.literal_complex,
                "ComplEx without conjugating the object embedding");
  app->add_option("--validation-metric", o.validation_metric, "mrr or map100");
  app->add_option("--tuning-relations", o.tuning_relations,
                  "Tune on the N most frequent relations (0: all)")
      ->each([&o](const std::string&) { o.tuning_relations_set = true; });
  app->add_option("--update-threads", o.update_threads,
                  "Concurrent update threads (nondeterministic when > 1)");
}

void AddScorerSources(CLI::App* app, Options& o) {
  app->add_option("--checkpoint", o.checkpoint, "Trained model checkpoint");
  app->add_option("--rules-file", o.rules_file, "Mined rule file");
  app->add_option("--scores", o.scores_file,
                  "TSV of subject, relation, object, score");
  AddTrainFlags(app, o);
}

void AddTypeFlags(CLI::App* app, Options& o) {
  app->add_option("--types", o.types, "Entity type assignments");
  app->add_option("--relation-constraints", o.relation_constraints,
                  "Relation domain and range constraints");
  app->add_flag("--no-augment", o.no_augment,
                "Do not infer types from observed triples");
}

void AddScanFlags(CLI::App* app, Options& o) {
  app->add_option("--block-side", o.block_side, "Tile side for pair scans");
  app->add_option("--split", o.split, "valid or test");
}

// ---- Validation -------------------------------------------------------------

ModelKind CheckModel(const std::string& name) {
  auto kind = ParseModelKind(name);
  if (!kind) throw UsageError("unknown model '" + name + "'");
  return *kind;
}

ValidationMetric CheckMetric(const std::string& name) {
  if (name == "mrr") return ValidationMetric::kMrrEr;
  if (name == "map100") return ValidationMetric::kMap100Pr;
  throw UsageError("unknown validation metric '" + name + "'");
}

SamplingStrategy CheckSampling(const std::string& name) {
  auto s = ParseSamplingStrategy(name);
  if (!s) throw UsageError("unknown sampling strategy '" + name + "'");
  return *s;
}

TrainConfig MakeTrainConfig(const Options& o, ModelKind kind) {
  TrainConfig c;
  c.dim = o.dim;
  c.learning_rate = o.lr;
  c.l2 = o.l2;
  c.margin = o.margin;
  c.strategy = CheckSampling(o.sampling);
  c.negatives = o.negatives;
  c.max_epochs = o.epochs;
  c.eval_every = o.eval_every;
  c.seed = o.seed;
  if (!o.loss.empty()) {
    if (o.loss == "bce") {
      c.loss = LossKind::kBce;
    } else if (o.loss == "margin") {
      c.loss = LossKind::kMarginRank;
    } else {
      throw UsageError("unknown loss '" + o.loss + "'");
    }
  }
  c.init_scale = o.init_scale;
  if (o.norm == "l1") {
    c.norm = Norm::kL1;
  } else if (o.norm != "l2") {
    throw UsageError("unknown norm '" + o.norm + "'");
  }
  c.conjugate_object = !o.literal_complex;
  c.eval_workers = o.workers;
  c.update_threads = std::max<std::size_t>(o.update_threads, 1);
  try {
    c.Validate(kind);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  return c;
}

void CheckDataset(const Options& o) {
  const fs::path dir(o.dataset_dir);
  if (!fs::is_directory(dir)) {
    throw UsageError("dataset directory '" + o.dataset_dir + "' does not exist");
  }
  for (const char* f : {"train.txt", "valid.txt", "test.txt"}) {
    if (!fs::is_regular_file(dir / f)) {
      throw UsageError("dataset directory lacks " + std::string(f));
    }
  }
}

void CheckFile(const std::string& path, const std::string& what) {
  if (!path.empty() && !fs::is_regular_file(path)) {
    throw UsageError(what + " '" + path + "' does not exist");
  }
}

int CountSources(const Options& o) {
  return !o.checkpoint.empty() + !o.rules_file.empty() +
         !o.scores_file.empty() + !o.model.empty();
}

void Validate(const Options& o) {
  CheckDataset(o);
  if (o.workers == 0) throw UsageError("--workers must be at least 1");
  const bool needs_source = o.command == "eval" || o.command == "curves" ||
                            o.command == "typefilter-eval" ||
                            o.command == "closure";
  if (o.command == "train" || o.command == "grid") {
    if (o.model.empty()) throw UsageError("--model is required");
    CheckModel(o.model);
    CheckMetric(o.validation_metric);
  }
  if (o.command == "train") MakeTrainConfig(o, CheckModel(o.model));
  if (o.command == "grid") {
    for (const auto& s : o.grid_samplings) CheckSampling(s);
  }
  if (needs_source) {
    if (CountSources(o) != 1) {
      throw UsageError(
          "give exactly one of --checkpoint, --rules-file, --scores or --model");
    }
    CheckFile(o.checkpoint, "checkpoint");
    CheckFile(o.rules_file, "rule file");
    CheckFile(o.scores_file, "score table");
    if (!o.model.empty()) {
      MakeTrainConfig(o, CheckModel(o.model));
      CheckMetric(o.validation_metric);
    }
    if (o.split != "test" && o.split != "valid") {
      throw UsageError("--split must be test or valid");
    }
  }
  if (o.command == "eval" || (o.command == "rules" && !o.protocol.empty())) {
    if (o.protocol != "er" && o.protocol != "tc" && o.protocol != "pr") {
      throw UsageError("--protocol must be er, tc or pr");
    }
    if (o.protocol == "pr" && o.ks.size() > 1) {
      throw UsageError("pair ranking takes a single --k");
    }
  }
  for (std::size_t k : o.ks) {
    if (k == 0) throw UsageError("--k values must be positive");
  }
  if (o.command == "curves") {
    if (o.k_grid.empty()) throw UsageError("--k-grid is required");
    for (std::size_t i = 0; i < o.k_grid.size(); ++i) {
      if (o.k_grid[i] == 0 || (i > 0 && o.k_grid[i] <= o.k_grid[i - 1])) {
        throw UsageError("--k-grid must be strictly increasing positive values");
      }
    }
  }
  if (o.types.empty() != o.relation_constraints.empty()) {
    throw UsageError("--types and --relation-constraints go together");
  }
  CheckFile(o.types, "type file");
  CheckFile(o.relation_constraints, "relation constraint file");
  if (o.command == "typefilter-eval" && o.types.empty()) {
    throw UsageError("typefilter-eval needs --types and --relation-constraints");
  }
  if (o.command == "closure") {
    if (o.closure_relations.empty()) throw UsageError("--relation is required");
    if (!o.symmetric && !o.transitive) {
      throw UsageError("declare --symmetric and/or --transitive");
    }
    CheckFile(o.external, "external triple file");
  }
  if (o.command == "rules") {
    if (o.max_len == 0) throw UsageError("--max-len must be at least 1");
    if (o.sample_size == 0) throw UsageError("--sample-size must be positive");
  }
  if (o.block_side == 0) throw UsageError("--block-side must be positive");
}

// ---- Execution ----------------------------------------------------------------

class Runner {
 public:
  explicit Runner(const Options& o) : o_(o), out_dir_(o.out) {}

  int Execute();

 private:
  using Clock = std::chrono::steady_clock;

  template <typename Fn>
  auto Timed(const std::string& phase, Fn fn) {
    const auto start = Clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      Record(phase, start);
    } else {
      auto result = fn();
      Record(phase, start);
      return result;
    }
  }
  void Record(const std::string& phase, Clock::time_point start) {
    manifest_.timings.push_back(
        {phase, std::chrono::duration<double>(Clock::now() - start).count()});
  }

  std::ofstream Open(const std::string& name) {
    fs::create_directories(out_dir_);
    const fs::path path = out_dir_ / name;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    manifest_.artifacts.push_back(path.string());
    return out;
  }

  std::string DatasetName() const {
    fs::path p = fs::path(o_.dataset_dir).lexically_normal();
    if (p.filename().empty()) p = p.parent_path();
    return p.filename().string();
  }

  std::vector<RelationId> TuningRelations() const {
    const std::size_t n = o_.tuning_relations_set
                              ? o_.tuning_relations
                              : DefaultTuningRelationCount(DatasetName());
    if (n == 0 || n >= kb_->num_relations()) return {};
    return kb_->MostFrequentRelations(n);
  }

  void LoadDataset();
  void LoadTypes();
  void Echo(const std::string& key, EchoValue v) {
    echo_.emplace_back(key, std::move(v));
  }

  // Builds the scorer named on the command line.
  void PrepareSource();
  TrainResult TrainModel(ModelKind kind, const TrainConfig& config);

  EvalTarget Target() const;
  PrResult PairRanking(std::size_t k, const TypeConstraints* types);
  MetricsReport Evaluate(const std::string& protocol);
  MetricsReport Finish(MetricsReport r) const;

  void CmdTrain();
  void CmdEval();
  void CmdGrid();
  void CmdRules();
  void CmdCurves();
  void CmdTypeFilter();
  void CmdClosure();
  void WriteManifest();

  const Options& o_;
  fs::path out_dir_;
  std::optional<KnowledgeBase> kb_;
  std::optional<TypeConstraints> types_;
  ConfigEcho echo_;
  RunManifest manifest_;

  std::string source_name_;
  std::optional<ModelParams> params_;
  std::optional<RuleModel> rules_;
  std::optional<TableScorer> table_;
  std::unique_ptr<Scorer> scorer_;
};

void Runner::LoadDataset() {
  const fs::path dir(o_.dataset_dir);
  Timed("load", [&] {
    kb_ = KnowledgeBase::LoadDirectory(dir);
    for (const char* f : {"train.txt", "valid.txt", "test.txt"}) {
      manifest_.datasets.push_back(DescribeDatasetFile(dir / f));
    }
  });
  Echo("command", o_.command);
  Echo("dataset", DatasetName());
  Echo("seed", static_cast<std::int64_t>(o_.seed));
}

void Runner::LoadTypes() {
  if (o_.types.empty()) return;
  Timed("load_types", [&] {
    types_ = TypeConstraints::Load(o_.types, o_.relation_constraints, *kb_,
                                   !o_.no_augment);
    manifest_.datasets.push_back(DescribeDatasetFile(o_.types));
    manifest_.datasets.push_back(DescribeDatasetFile(o_.relation_constraints));
  });
  Echo("type_augmentation", !o_.no_augment);
}

TrainResult Runner::TrainModel(ModelKind kind, const TrainConfig& config) {
  const auto tuning = TuningRelations();
  Echo("validation_metric", o_.validation_metric);
  Echo("tuning_relations", static_cast<std::int64_t>(tuning.size()));
  for (auto& kv : EchoTrainConfig(config, kind)) {
    if (kv.first != "seed") echo_.push_back(std::move(kv));
  }
  return Timed("train", [&] {
    return Train(*kb_, kind, config, CheckMetric(o_.validation_metric), tuning);
  });
}

void Runner::PrepareSource() {
  if (!o_.checkpoint.empty()) {
    params_ = ModelParams::Load(fs::path(o_.checkpoint));
    if (params_->num_entities() != kb_->num_entities() ||
        params_->num_relations() != kb_->num_relations()) {
      throw ConfigError("checkpoint does not match the dataset vocabulary");
    }
    source_name_ = std::string(ModelKindName(params_->spec().kind));
    Echo("checkpoint", o_.checkpoint);
  } else if (!o_.rules_file.empty()) {
    rules_ = ReadRules(o_.rules_file, kb_->vocab());
    source_name_ = "rules";
    Echo("rules_file", o_.rules_file);
  } else if (!o_.scores_file.empty()) {
    table_ = TableScorer::Load(o_.scores_file, kb_->vocab());
    source_name_ = "table";
    Echo("scores", o_.scores_file);
  } else {
    const ModelKind kind = CheckModel(o_.model);
    params_ = TrainModel(kind, MakeTrainConfig(o_, kind)).params;
    source_name_ = std::string(ModelKindName(kind));
  }
  if (params_) {
    scorer_ = std::make_unique<ModelScorer>(*params_);
  } else if (rules_) {
    scorer_ = std::make_unique<RuleScorer>(*rules_, *kb_);
  } else {
    scorer_ = std::make_unique<TableScorer>(*table_);
  }
}

EvalTarget Runner::Target() const {
  EvalTarget t;
  t.split = o_.split == "valid" ? Split::kValid : Split::kTest;
  t.filter_targets = o_.filter_targets;
  return t;
}

PrResult Runner::PairRanking(std::size_t k, const TypeConstraints* types) {
  PrOptions options;
  options.target = Target();
  options.types = types;
  options.scan.block_side = o_.block_side;
  options.scan.workers = o_.workers;
  if (rules_) {
    // Rules enumerate their own candidates instead of scanning all pairs.
    return EvaluatePairRankingFromLists(
        *kb_, k,
        [&](RelationId rel) {
          return RuleCandidates(*rules_, *kb_, rel, o_.workers);
        },
        options);
  }
  return EvaluatePairRanking(*scorer_, *kb_, k, options);
}

MetricsReport Runner::Finish(MetricsReport r) const {
  r.model = source_name_;
  r.dataset = DatasetName();
  r.config = echo_;
  return r;
}

MetricsReport Runner::Evaluate(const std::string& protocol) {
  Echo("protocol", protocol);
  Echo("split", o_.split);
  if (protocol == "er") {
    std::vector<std::size_t> ks = o_.ks;
    if (ks.empty()) ks = {1, 3, 10};
    Echo("filter_targets", o_.filter_targets);
    ErOptions options;
    options.target = Target();
    options.workers = o_.workers;
    auto result = Timed("evaluate", [&] {
      return EvaluateEntityRanking(*scorer_, *kb_, ks, options);
    });
    return Finish(ReportFromEr(result, *kb_));
  }
  if (protocol == "tc") {
    Rng rng(o_.seed);
    auto result = Timed("evaluate", [&] {
      const TcThresholds thresholds = LearnTcThresholds(*scorer_, *kb_, rng);
      return EvaluateTc(*scorer_, *kb_, thresholds, rng);
    });
    return Finish(ReportFromTc(result, *kb_));
  }
  const std::size_t k = o_.ks.empty() ? 100 : o_.ks.front();
  Echo("type_filter", types_.has_value());
  auto result = Timed("evaluate", [&] {
    return PairRanking(k, types_ ? &*types_ : nullptr);
  });
  return Finish(ReportFromPr(result, *kb_));
}

void Runner::CmdTrain() {
  const ModelKind kind = CheckModel(o_.model);
  const TrainResult result = TrainModel(kind, MakeTrainConfig(o_, kind));
  Timed("write", [&] {
    {
      std::ofstream log = Open("train_log.jsonl");
      WriteTrainLog(log, result.log);
    }
    fs::create_directories(out_dir_);
    const fs::path ckpt = out_dir_ / "model.ckpt";
    result.params.Save(ckpt);
    manifest_.artifacts.push_back(ckpt.string());
  });
  Info("best epoch " + std::to_string(result.best_epoch));
}

void Runner::CmdEval() {
  LoadTypes();
  PrepareSource();
  const MetricsReport report = Evaluate(o_.protocol);
  Timed("write", [&] {
    {
      std::ofstream json = Open("metrics.json");
      WriteReportJson(json, report);
    }
    std::ofstream tsv = Open("metrics.tsv");
    WriteReportTsv(tsv, {report});
  });
}

void Runner::CmdGrid() {
  const ModelKind kind = CheckModel(o_.model);
  GridSpace space = GridSpace::Default(kind);
  if (!o_.grid_dims.empty()) space.dims = o_.grid_dims;
  if (!o_.grid_lrs.empty()) space.learning_rates = o_.grid_lrs;
  if (!o_.grid_l2s.empty()) space.l2s = o_.grid_l2s;
  if (!o_.grid_margins.empty()) space.margins = o_.grid_margins;
  if (!o_.grid_samplings.empty()) {
    space.strategies.clear();
    for (const auto& s : o_.grid_samplings) {
      space.strategies.push_back(CheckSampling(s));
    }
  }
  space.base.seed = o_.seed;
  space.base.negatives = o_.negatives;
  space.base.eval_every = o_.eval_every;
  space.base.eval_workers = o_.workers;
  if (o_.grid_epochs_set) space.base.max_epochs = o_.epochs;
  const auto tuning = TuningRelations();
  Echo("model", std::string(ModelKindName(kind)));
  Echo("validation_metric", o_.validation_metric);
  Echo("tuning_relations", static_cast<std::int64_t>(tuning.size()));
  Echo("cells", static_cast<std::int64_t>(space.Cells(kind).size()));
  const GridResult grid = Timed("grid", [&] {
    return GridSearch(*kb_, kind, space, CheckMetric(o_.validation_metric),
                      tuning);
  });
  Timed("write", [&] {
    std::ofstream json = Open("grid.json");
    WriteGridJson(json, grid, kind);
  });
}

void Runner::CmdRules() {
  MineOptions options;
  options.max_len = o_.max_len;
  options.sample_size = o_.sample_size;
  options.min_support = o_.min_support;
  options.constant_rules = !o_.no_constant_rules;
  options.workers = o_.workers;
  Echo("max_len", static_cast<std::int64_t>(o_.max_len));
  Echo("sample_size", static_cast<std::int64_t>(o_.sample_size));
  Echo("min_support", static_cast<std::int64_t>(o_.min_support));
  Echo("constant_rules", options.constant_rules);
  Rng rng(o_.seed);
  rules_ = Timed("mine", [&] { return MineRules(*kb_, options, rng); });
  Info("mined " + std::to_string(rules_->size()) + " rules");
  Timed("write", [&] {
    std::ofstream out = Open("rules.txt");
    WriteRules(out, *rules_, kb_->vocab());
  });
  if (o_.protocol.empty()) return;
  LoadTypes();
  source_name_ = "rules";
  scorer_ = std::make_unique<RuleScorer>(*rules_, *kb_);
  const MetricsReport report = Evaluate(o_.protocol);
  Timed("write", [&] {
    {
      std::ofstream json = Open("metrics.json");
      WriteReportJson(json, report);
    }
    std::ofstream tsv = Open("metrics.tsv");
    WriteReportTsv(tsv, {report});
  });
}

void Runner::CmdCurves() {
  LoadTypes();
  PrepareSource();
  Echo("k_grid", [&] {
    std::string s;
    for (std::size_t k : o_.k_grid) s += (s.empty() ? "" : ",") + std::to_string(k);
    return s;
  }());
  const auto curve = Timed("evaluate", [&] {
    const PrResult full =
        PairRanking(o_.k_grid.back(), types_ ? &*types_ : nullptr);
    return CurvesFromResult(full, o_.k_grid);
  });
  Timed("write", [&] {
    std::ofstream csv = Open("curves.csv");
    WriteCurveCsv(csv, curve);
  });
}

void Runner::CmdTypeFilter() {
  LoadTypes();
  PrepareSource();
  const std::size_t k = o_.ks.empty() ? 100 : o_.ks.front();
  Echo("protocol", std::string("pr"));
  Echo("split", o_.split);
  auto [plain, typed] = Timed("evaluate", [&] {
    return std::make_pair(PairRanking(k, nullptr), PairRanking(k, &*types_));
  });
  MetricsReport plain_report = Finish(ReportFromPr(plain, *kb_));
  MetricsReport typed_report = Finish(ReportFromPr(typed, *kb_));
  typed_report.model += "+types";
  Timed("write", [&] {
    {
      std::ofstream json = Open("metrics_unfiltered.json");
      WriteReportJson(json, plain_report);
    }
    {
      std::ofstream json = Open("metrics_typed.json");
      WriteReportJson(json, typed_report);
    }
    std::ofstream tsv = Open("metrics.tsv");
    WriteReportTsv(tsv, {plain_report, typed_report});
  });
}

void Runner::CmdClosure() {
  PrepareSource();
  std::vector<RelationId> relations;
  for (const std::string& name : o_.closure_relations) {
    auto id = kb_->vocab().relations.Find(name);
    if (!id) throw VocabError("unknown relation '" + name + "'");
    relations.push_back(*id);
  }
  std::optional<std::vector<Triple>> external;
  if (!o_.external.empty()) {
    // External facts may mention entities outside the dataset; they only
    // matter as intermediate hops of the closure.
    Vocab extended = kb_->vocab();
    external =
        LoadTriples(o_.external, extended, VocabMode::kExtend).triples;
    manifest_.datasets.push_back(DescribeDatasetFile(o_.external));
  }
  const std::size_t k = o_.ks.empty() ? 100 : o_.ks.front();
  const ClosureProperties props{o_.symmetric, o_.transitive};
  Echo("K", static_cast<std::int64_t>(k));
  Echo("symmetric", o_.symmetric);
  Echo("transitive", o_.transitive);
  const PrResult pr = Timed("evaluate", [&] { return PairRanking(k, nullptr); });
  Timed("write", [&] {
    std::ofstream out = Open("closure.json");
    JsonWriter w(out);
    w.BeginObject();
    w.Key("model").String(source_name_);
    w.Key("dataset").String(DatasetName());
    w.Key("K").Uint(k);
    w.Key("relations").BeginArray();
    for (RelationId rel : relations) {
      std::span<const RankedPair> top;
      std::size_t num_test = 0;
      for (const PrRelation& r : pr.per_relation) {
        if (r.relation == rel) {
          top = r.top;
          num_test = r.num_relevant;
        }
      }
      const ClosureCounts c = AnalyzeClosure(*kb_, rel, top, props,
                                             external ? &*external : nullptr);
      const double denom =
          static_cast<double>(std::max<std::size_t>(1, std::min(k, num_test)));
      w.BeginObject();
      w.Key("relation").String(kb_->vocab().relations.Name(rel));
      w.Key("num_test").Uint(num_test);
      w.Key("list_size").Uint(c.list_size);
      w.Key("test_hits").Uint(c.test_hits);
      w.Key("implied_hits").Uint(c.implied_hits);
      w.Key("hits_at_k").Fixed(static_cast<double>(c.test_hits) / denom);
      w.Key("source").String(c.source);
      w.EndObject();
    }
    w.EndArray();
    w.EndObject();
    out << '\n';
  });
}

void Runner::WriteManifest() {
  manifest_.command = o_.command;
  manifest_.config = echo_;
  manifest_.config.emplace_back("out", o_.out);
  manifest_.config.emplace_back("workers", static_cast<std::int64_t>(o_.workers));
  manifest_.software_version = SoftwareVersion();
  fs::create_directories(out_dir_);
  const fs::path path = out_dir_ / "manifest.json";
  manifest_.artifacts.push_back(path.string());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  WriteManifestJson(out, manifest_);
}

int Runner::Execute() {
  LoadDataset();
  if (o_.command == "train") {
    CmdTrain();
  } else if (o_.command == "eval") {
    CmdEval();
  } else if (o_.command == "grid") {
    CmdGrid();
  } else if (o_.command == "rules") {
    CmdRules();
  } else if (o_.command == "curves") {
    CmdCurves();
  } else if (o_.command == "typefilter-eval") {
    CmdTypeFilter();
  } else if (o_.command == "closure") {
    CmdClosure();
  }
  WriteManifest();
  return 0;
}

}  // namespace

int Run(int argc, const char* const* argv) {
  Options o;
  CLI::App app{"Knowledge base completion: embeddings, rules and evaluation",
               "kbc"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train an embedding model");
  AddCommon(train, o);
  AddTrainFlags(train, o);

  auto* eval = app.add_subcommand("eval", "Evaluate under ER, TC or PR");
  AddCommon(eval, o);
  AddScorerSources(eval, o);
  AddTypeFlags(eval, o);
  AddScanFlags(eval, o);
  eval->add_option("--protocol", o.protocol, "er, tc or pr")->required();
  eval->add_option("--k", o.ks, "K (PR) or Hits@K cutoffs (ER)")->delimiter(',');
  eval->add_flag("--filter-targets", o.filter_targets,
                 "ER: also filter other target-split triples");

  auto* grid = app.add_subcommand("grid", "Grid search over hyperparameters");
  AddCommon(grid, o);
  grid->add_option("--model", o.model, "Model kind")->required();
  grid->add_option("--dim", o.grid_dims, "Dimensions")->delimiter(',');
  grid->add_option("--lr", o.grid_lrs, "Learning rates")->delimiter(',');
  grid->add_option("--l2", o.grid_l2s, "L2 weights")->delimiter(',');
  grid->add_option("--margin", o.grid_margins, "Margins (TransE)")->delimiter(',');
  grid->add_option("--sampling", o.grid_samplings, "Strategies")->delimiter(',');
  grid->add_option("--negatives", o.negatives, "Negatives per positive");
  grid->add_option("--epochs", o.epochs, "Maximum epochs")
      ->each([&o](const std::string&) { o.grid_epochs_set = true; });
  grid->add_option("--eval-every", o.eval_every, "Validation interval");
  grid->add_option("--validation-metric", o.validation_metric, "mrr or map100");
  grid->add_option("--tuning-relations", o.tuning_relations,
                   "Tune on the N most frequent relations (0: all)")
      ->each([&o](const std::string&) { o.tuning_relations_set = true; });

  auto* rules = app.add_subcommand("rules", "Mine path and constant rules");
  AddCommon(rules, o);
  AddTypeFlags(rules, o);
  AddScanFlags(rules, o);
  rules->add_option("--max-len", o.max_len, "Maximum body length");
  rules->add_option("--sample-size", o.sample_size, "Groundings per rule");
  rules->add_option("--min-support", o.min_support, "Minimum support");
  rules->add_flag("--no-constant-rules", o.no_constant_rules,
                  "Skip constant rules");
  rules->add_option("--protocol", o.protocol, "Evaluate the mined rules");
  rules->add_option("--k", o.ks, "K (PR) or Hits@K cutoffs (ER)")->delimiter(',');

  auto* curves = app.add_subcommand("curves", "Hits@K and MAP@K over a K grid");
  AddCommon(curves, o);
  AddScorerSources(curves, o);
  AddTypeFlags(curves, o);
  AddScanFlags(curves, o);
  curves->add_option("--k-grid", o.k_grid, "Increasing K values")
      ->delimiter(',')
      ->required();

  auto* typed = app.add_subcommand("typefilter-eval",
                                   "Pair ranking with and without type filter");
  AddCommon(typed, o);
  AddScorerSources(typed, o);
  AddTypeFlags(typed, o);
  AddScanFlags(typed, o);
  typed->add_option("--k", o.ks, "K")->delimiter(',');

  auto* closure = app.add_subcommand(
      "closure", "Count top-K pairs implied by symmetric/transitive closure");
  AddCommon(closure, o);
  AddScorerSources(closure, o);
  AddScanFlags(closure, o);
  closure->add_option("--relation", o.closure_relations, "Relation to analyze")
      ->required();
  closure->add_flag("--symmetric", o.symmetric, "Relation is symmetric");
  closure->add_flag("--transitive", o.transitive, "Relation is transitive");
  closure->add_option("--external", o.external, "Additional known triples");
  closure->add_option("--k", o.ks, "K")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  o.command = app.get_subcommands().front()->get_name();

  try {
    Validate(o);
  } catch (const UsageError& e) {
    std::cerr << "kbc " << o.command << ": " << e.what() << '\n';
    return 2;
  }
  try {
    Runner runner(o);
    return runner.Execute();
  } catch (const std::exception& e) {
    std::cerr << "kbc " << o.command << ": " << e.what() << '\n';
    return 1;
  }
}

int Run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"kbc"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return Run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace kbc::cli
