#ifndef KBC_TRAINING_H_
#define KBC_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kbc/eval.h"
#include "kbc/kb.h"
#include "kbc/model.h"

namespace kbc {

enum class SamplingStrategy {
  kPerturb1,   // replace subject or object; result unobserved in train
  kPerturb2,   // random pair under the same relation, unobserved in train
  kPerturb1R,  // replace subject, relation or object; not checked
};

enum class LossKind { kBce, kMarginRank };

std::string_view SamplingStrategyName(SamplingStrategy s);
std::optional<SamplingStrategy> ParseSamplingStrategy(std::string_view name);
std::string_view LossKindName(LossKind l);
std::string_view ValidationMetricName(ValidationMetric m);

// Margin loss for TransE, binary cross-entropy for everything else.
LossKind DefaultLoss(ModelKind kind);

struct TrainConfig {
  std::size_t dim = 100;
  double learning_rate = 0.1;
  double l2 = 0.01;
  double margin = 1.0;  // TransE / margin loss only
  SamplingStrategy strategy = SamplingStrategy::kPerturb1;
  std::size_t negatives = 6;
  std::size_t max_epochs = 500;
  std::size_t eval_every = 50;
  std::uint64_t seed = 0;
  std::optional<LossKind> loss;  // unset: DefaultLoss(kind)
  double init_scale = 1.0;
  Norm norm = Norm::kL2;
  bool conjugate_object = true;
  // Worker count for validation evaluation.
  std::size_t eval_workers = 1;
  // >1 enables lock-striped concurrent updates; results become
  // schedule-dependent.
  std::size_t update_threads = 1;

  ModelSpec Spec(ModelKind kind) const;
  LossKind LossFor(ModelKind kind) const { return loss.value_or(DefaultLoss(kind)); }
  // Throws ConfigError.
  void Validate(ModelKind kind) const;
};

std::vector<Triple> SampleNegatives(const KnowledgeBase& kb,
                                    const Triple& positive,
                                    SamplingStrategy strategy, std::size_t n,
                                    Rng& rng);

// Gradient rows for the entities and relations touched by one group.
class SparseGradient {
 public:
  SparseGradient() = default;
  SparseGradient(std::size_t entity_width, std::size_t relation_width)
      : entity_width_(entity_width), relation_width_(relation_width) {}

  // Row for the id, created zeroed on first use.
  std::span<double> Entity(EntityId e);
  std::span<double> Relation(RelationId k);

  const std::vector<EntityId>& entity_ids() const { return entity_ids_; }
  const std::vector<RelationId>& relation_ids() const { return relation_ids_; }
  std::span<const double> entity_row(std::size_t slot) const {
    return {entity_rows_.data() + slot * entity_width_, entity_width_};
  }
  std::span<const double> relation_row(std::size_t slot) const {
    return {relation_rows_.data() + slot * relation_width_, relation_width_};
  }

 private:
  std::size_t entity_width_ = 0;
  std::size_t relation_width_ = 0;
  std::vector<EntityId> entity_ids_;
  std::vector<double> entity_rows_;
  std::vector<RelationId> relation_ids_;
  std::vector<double> relation_rows_;
};

struct LossResult {
  double loss = 0.0;
  SparseGradient gradient;
};

// BCE:    -log s(pos) - sum log(1 - s(neg)) with s the logistic function
// Margin: sum max(0, margin - score(pos) + score(neg))
// Both add l2 * ||theta||^2 over every distinct touched row.
LossResult LossAndGradients(const ModelParams& params, const Triple& positive,
                            std::span<const Triple> negatives, LossKind loss,
                            double margin, double l2);

class AdaGradState {
 public:
  explicit AdaGradState(const ModelParams& params, double epsilon = 1e-8);

  const std::vector<double>& entity_accum() const { return entity_accum_; }
  const std::vector<double>& relation_accum() const { return relation_accum_; }
  double epsilon() const { return epsilon_; }

  // G += g^2; theta -= lr * g / (sqrt(G) + eps), touched rows only.
  void Step(ModelParams& params, const SparseGradient& gradient,
            double learning_rate);

 private:
  double epsilon_;
  std::size_t entity_width_;
  std::size_t relation_width_;
  std::vector<double> entity_accum_;
  std::vector<double> relation_accum_;
};

struct TrainLogEntry {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean per training triple
  std::optional<double> metric;
};

struct TrainResult {
  ModelParams params;  // best checkpoint
  std::vector<TrainLogEntry> log;
  std::size_t best_epoch = 0;
  std::optional<double> best_metric;
};

// Epoch loop with per-epoch seeded shuffling. Validation runs every
// eval_every epochs and at the final epoch; the best checkpoint is kept. Log
// entry 0 holds the loss at initialization.
TrainResult Train(const KnowledgeBase& kb, ModelKind kind,
                  const TrainConfig& config, ValidationMetric metric,
                  std::span<const RelationId> tuning_relations = {});

struct GridSpace {
  std::vector<std::size_t> dims;
  std::vector<double> l2s;
  std::vector<double> learning_rates;
  std::vector<SamplingStrategy> strategies;
  std::vector<double> margins;  // TransE only
  TrainConfig base;  // everything not swept

  // d in {100,150,200}, l2 in {0.1,0.01,0.001} (none for TransE),
  // lr in {0.01,0.1}, all three strategies, margin in {0.5,1,2,3,4} for
  // TransE, 6 negatives, 500 epochs (1800 for TransE), validation every 50.
  static GridSpace Default(ModelKind kind);

  // Cells in lexicographic (dim, l2, lr, strategy, margin) order.
  std::vector<TrainConfig> Cells(ModelKind kind) const;
};

struct GridCell {
  TrainConfig config;
  std::optional<double> metric;
  std::string error;
};

struct GridResult {
  TrainConfig best;
  double best_metric = 0.0;
  std::size_t best_index = 0;
  std::vector<GridCell> cells;
};

// Trains every cell; the first cell with the highest metric wins.
GridResult GridSearch(const KnowledgeBase& kb, ModelKind kind,
                      const GridSpace& space, ValidationMetric metric,
                      std::span<const RelationId> tuning_relations = {});

// Number of most frequent relations used for tuning on the standard
// benchmarks; 0 (all relations) for unknown names.
std::size_t DefaultTuningRelationCount(std::string_view dataset_name);

}  // namespace kbc

#endif  // KBC_TRAINING_H_
