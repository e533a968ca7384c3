#include "kbc/training.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "kbc/error.h"
#include "kbc/log.h"

namespace kbc {
namespace {

constexpr int kMaxSampleAttempts = 1000;

double Softplus(double x) {
  return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);
}

double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

EntityId DrawOtherEntity(std::size_t n, EntityId current, Rng& rng) {
  auto e = static_cast<EntityId>(
      std::uniform_int_distribution<std::size_t>(0, n - 2)(rng));
  return e >= current ? e + 1 : e;
}

std::string Describe(const Triple& t) {
  std::ostringstream s;
  s << '(' << t.subject << ", " << t.relation << ", " << t.object << ')';
  return s.str();
}

}  // namespace

std::string_view SamplingStrategyName(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::kPerturb1:
      return "perturb1";
    case SamplingStrategy::kPerturb2:
      return "perturb2";
    case SamplingStrategy::kPerturb1R:
      return "perturb1r";
  }
  return "unknown";
}

std::optional<SamplingStrategy> ParseSamplingStrategy(std::string_view name) {
  for (auto s : {SamplingStrategy::kPerturb1, SamplingStrategy::kPerturb2,
                 SamplingStrategy::kPerturb1R}) {
    if (SamplingStrategyName(s) == name) return s;
  }
  return std::nullopt;
}

std::string_view LossKindName(LossKind l) {
  return l == LossKind::kBce ? "bce" : "margin";
}

std::string_view ValidationMetricName(ValidationMetric m) {
  return m == ValidationMetric::kMrrEr ? "mrr_er" : "map100_pr";
}

LossKind DefaultLoss(ModelKind kind) {
  return kind == ModelKind::kTransE ? LossKind::kMarginRank : LossKind::kBce;
}

ModelSpec TrainConfig::Spec(ModelKind kind) const {
  ModelSpec spec = ModelSpec::Make(kind, dim);
  spec.norm = norm;
  spec.conjugate_object = conjugate_object;
  return spec;
}

void TrainConfig::Validate(ModelKind kind) const {
  Spec(kind).Validate();
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(l2 >= 0.0)) throw ConfigError("l2 weight must be >= 0");
  if (!(margin >= 0.0)) throw ConfigError("margin must be >= 0");
  if (negatives < 1) throw ConfigError("need at least one negative per positive");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (kind == ModelKind::kTransE && LossFor(kind) != LossKind::kMarginRank) {
    throw ConfigError("TransE trains with the margin ranking loss");
  }
}

std::vector<Triple> SampleNegatives(const KnowledgeBase& kb,
                                    const Triple& positive,
                                    SamplingStrategy strategy, std::size_t n,
                                    Rng& rng) {
  const std::size_t ne = kb.num_entities();
  const std::size_t nr = kb.num_relations();
  if (ne < 2) throw ConfigError("negative sampling needs at least 2 entities");
  std::vector<Triple> out;
  out.reserve(n);
  std::uniform_int_distribution<std::size_t> any_entity(0, ne - 1);
  for (std::size_t s = 0; s < n; ++s) {
    if (strategy == SamplingStrategy::kPerturb1R) {
      const int slots = nr > 1 ? 3 : 2;
      int slot = std::uniform_int_distribution<int>(0, slots - 1)(rng);
      Triple t = positive;
      if (slot == 0) {
        t.subject = DrawOtherEntity(ne, t.subject, rng);
      } else if (slot == 1) {
        t.object = DrawOtherEntity(ne, t.object, rng);
      } else {
        auto k = static_cast<RelationId>(
            std::uniform_int_distribution<std::size_t>(0, nr - 2)(rng));
        t.relation = k >= positive.relation ? k + 1 : k;
      }
      out.push_back(t);
      continue;
    }
    bool found = false;
    for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
      Triple t = positive;
      if (strategy == SamplingStrategy::kPerturb1) {
        if (std::uniform_int_distribution<int>(0, 1)(rng) == 0) {
          t.subject = DrawOtherEntity(ne, t.subject, rng);
        } else {
          t.object = DrawOtherEntity(ne, t.object, rng);
        }
      } else {
        t.subject = static_cast<EntityId>(any_entity(rng));
        t.object = static_cast<EntityId>(any_entity(rng));
      }
      if (!kb.InTrain(t)) {
        out.push_back(t);
        found = true;
        break;
      }
    }
    if (!found) {
      throw SamplerExhausted("no unobserved corruption of " + Describe(positive) +
                             " found in " + std::to_string(kMaxSampleAttempts) +
                             " attempts");
    }
  }
  return out;
}

std::span<double> SparseGradient::Entity(EntityId e) {
  auto it = std::find(entity_ids_.begin(), entity_ids_.end(), e);
  std::size_t slot = static_cast<std::size_t>(it - entity_ids_.begin());
  if (it == entity_ids_.end()) {
    entity_ids_.push_back(e);
    entity_rows_.resize(entity_rows_.size() + entity_width_, 0.0);
  }
  return {entity_rows_.data() + slot * entity_width_, entity_width_};
}

std::span<double> SparseGradient::Relation(RelationId k) {
  auto it = std::find(relation_ids_.begin(), relation_ids_.end(), k);
  std::size_t slot = static_cast<std::size_t>(it - relation_ids_.begin());
  if (it == relation_ids_.end()) {
    relation_ids_.push_back(k);
    relation_rows_.resize(relation_rows_.size() + relation_width_, 0.0);
  }
  return {relation_rows_.data() + slot * relation_width_, relation_width_};
}

LossResult LossAndGradients(const ModelParams& params, const Triple& positive,
                            std::span<const Triple> negatives, LossKind loss,
                            double margin, double l2) {
  LossResult out;
  out.gradient =
      SparseGradient(params.entity_width(), params.relation_width());
  SparseGradient& grad = out.gradient;

  auto touch = [&](const Triple& t) {
    grad.Entity(t.subject);
    grad.Relation(t.relation);
    grad.Entity(t.object);
  };
  auto accumulate = [&](const Triple& t, double coeff) {
    if (coeff == 0.0) return;
    const ScoreGradient g = ScoreGradients(params, t.subject, t.relation, t.object);
    auto add = [coeff](std::span<double> dst, const std::vector<double>& src) {
      for (std::size_t i = 0; i < src.size(); ++i) dst[i] += coeff * src[i];
    };
    add(grad.Entity(t.subject), g.subject);
    add(grad.Relation(t.relation), g.relation);
    add(grad.Entity(t.object), g.object);
  };

  touch(positive);
  for (const Triple& n : negatives) touch(n);

  const double s_pos = Score(params, positive.subject, positive.relation,
                             positive.object);
  if (loss == LossKind::kBce) {
    out.loss += Softplus(-s_pos);
    accumulate(positive, Sigmoid(s_pos) - 1.0);
    for (const Triple& n : negatives) {
      const double s_neg = Score(params, n.subject, n.relation, n.object);
      out.loss += Softplus(s_neg);
      accumulate(n, Sigmoid(s_neg));
    }
  } else {
    double pos_coeff = 0.0;
    for (const Triple& n : negatives) {
      const double s_neg = Score(params, n.subject, n.relation, n.object);
      const double hinge = margin - s_pos + s_neg;
      if (hinge > 0.0) {
        out.loss += hinge;
        pos_coeff -= 1.0;
        accumulate(n, 1.0);
      }
    }
    accumulate(positive, pos_coeff);
  }

  if (l2 > 0.0) {
    for (std::size_t slot = 0; slot < grad.entity_ids().size(); ++slot) {
      const EntityId e = grad.entity_ids()[slot];
      auto theta = params.entity(e);
      auto g = grad.Entity(e);
      for (std::size_t i = 0; i < theta.size(); ++i) {
        out.loss += l2 * theta[i] * theta[i];
        g[i] += 2.0 * l2 * theta[i];
      }
    }
    for (std::size_t slot = 0; slot < grad.relation_ids().size(); ++slot) {
      const RelationId k = grad.relation_ids()[slot];
      auto theta = params.relation(k);
      auto g = grad.Relation(k);
      for (std::size_t i = 0; i < theta.size(); ++i) {
        out.loss += l2 * theta[i] * theta[i];
        g[i] += 2.0 * l2 * theta[i];
      }
    }
  }
  return out;
}

AdaGradState::AdaGradState(const ModelParams& params, double epsilon)
    : epsilon_(epsilon),
      entity_width_(params.entity_width()),
      relation_width_(params.relation_width()),
      entity_accum_(params.entity_data().size(), 0.0),
      relation_accum_(params.relation_data().size(), 0.0) {}

void AdaGradState::Step(ModelParams& params, const SparseGradient& gradient,
                        double learning_rate) {
  auto update = [&](std::span<double> theta, std::span<double> accum,
                    std::span<const double> g) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i] == 0.0) continue;
      accum[i] += g[i] * g[i];
      theta[i] -= learning_rate * g[i] / (std::sqrt(accum[i]) + epsilon_);
    }
  };
  for (std::size_t slot = 0; slot < gradient.entity_ids().size(); ++slot) {
    const EntityId e = gradient.entity_ids()[slot];
    update(params.entity(e),
           {entity_accum_.data() + e * entity_width_, entity_width_},
           gradient.entity_row(slot));
  }
  for (std::size_t slot = 0; slot < gradient.relation_ids().size(); ++slot) {
    const RelationId k = gradient.relation_ids()[slot];
    update(params.relation(k),
           {relation_accum_.data() + k * relation_width_, relation_width_},
           gradient.relation_row(slot));
  }
}

namespace {

constexpr std::size_t kStripes = 1024;

// Lock stripes for the concurrent update mode: entities hash into the first
// half, relations into the second.
class StripedLocks {
 public:
  std::vector<std::size_t> StripesFor(const Triple& pos,
                                      std::span<const Triple> negs) const {
    std::vector<std::size_t> out;
    auto add = [&](const Triple& t) {
      out.push_back(t.subject % (kStripes / 2));
      out.push_back(t.object % (kStripes / 2));
      out.push_back(kStripes / 2 + t.relation % (kStripes / 2));
    };
    add(pos);
    for (const Triple& t : negs) add(t);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  void Lock(const std::vector<std::size_t>& stripes) {
    for (std::size_t s : stripes) mutexes_[s].lock();
  }
  void Unlock(const std::vector<std::size_t>& stripes) {
    for (auto it = stripes.rbegin(); it != stripes.rend(); ++it) {
      mutexes_[*it].unlock();
    }
  }

 private:
  std::array<std::mutex, kStripes> mutexes_;
};

struct EpochLoss {
  double sum = 0.0;
};

void CheckFinite(double loss, std::size_t epoch, const Triple& t) {
  if (!std::isfinite(loss)) {
    throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) +
                        " on training triple " + Describe(t) +
                        "; try a smaller learning rate or larger l2 weight");
  }
}

}  // namespace

TrainResult Train(const KnowledgeBase& kb, ModelKind kind,
                  const TrainConfig& config, ValidationMetric metric,
                  std::span<const RelationId> tuning_relations) {
  config.Validate(kind);
  const ModelSpec spec = config.Spec(kind);
  const LossKind loss = config.LossFor(kind);
  ModelParams params = ModelParams::Init(spec, kb.num_entities(),
                                         kb.num_relations(), config.seed,
                                         config.init_scale);
  TrainResult result;
  result.params = params;
  if (config.max_epochs == 0) return result;

  const auto& train = kb.train();
  if (train.empty()) throw ConfigError("training split is empty");
  const double n_train = static_cast<double>(train.size());

  bool have_validation = false;
  for (RelationId k = 0; k < kb.num_relations(); ++k) {
    const bool tuned =
        tuning_relations.empty() ||
        std::find(tuning_relations.begin(), tuning_relations.end(), k) !=
            tuning_relations.end();
    have_validation = have_validation ||
                      (tuned && !kb.by_relation(Split::kValid, k).empty());
  }

  Rng rng(config.seed);
  {
    // Loss at initialization, from a separate stream so it does not shift
    // the training draws.
    Rng probe(config.seed ^ 0x5DEECE66DULL);
    double sum = 0.0;
    for (const Triple& t : train) {
      auto negs = SampleNegatives(kb, t, config.strategy, config.negatives, probe);
      const double l =
          LossAndGradients(params, t, negs, loss, config.margin, config.l2).loss;
      CheckFinite(l, 0, t);
      sum += l;
    }
    result.log.push_back({0, sum / n_train, std::nullopt});
  }

  AdaGradState state(params);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  StripedLocks locks;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    if (config.update_threads <= 1) {
      for (std::size_t idx : order) {
        const Triple& t = train[idx];
        auto negs = SampleNegatives(kb, t, config.strategy, config.negatives, rng);
        LossResult lr =
            LossAndGradients(params, t, negs, loss, config.margin, config.l2);
        CheckFinite(lr.loss, epoch, t);
        epoch_loss += lr.loss;
        state.Step(params, lr.gradient, config.learning_rate);
      }
    } else {
      const std::size_t workers = config.update_threads;
      std::vector<EpochLoss> losses(workers);
      std::vector<Rng> rngs;
      for (std::size_t w = 0; w < workers; ++w) rngs.emplace_back(rng());
      std::mutex error_mutex;
      std::exception_ptr error;
      {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
          threads.emplace_back([&, w] {
            try {
              for (std::size_t p = w; p < order.size(); p += workers) {
                const Triple& t = train[order[p]];
                auto negs = SampleNegatives(kb, t, config.strategy,
                                            config.negatives, rngs[w]);
                const auto stripes = locks.StripesFor(t, negs);
                locks.Lock(stripes);
                LossResult lr = LossAndGradients(params, t, negs, loss,
                                                 config.margin, config.l2);
                state.Step(params, lr.gradient, config.learning_rate);
                locks.Unlock(stripes);
                CheckFinite(lr.loss, epoch, t);
                losses[w].sum += lr.loss;
              }
            } catch (...) {
              std::lock_guard<std::mutex> lock(error_mutex);
              if (!error) error = std::current_exception();
            }
          });
        }
      }
      if (error) std::rethrow_exception(error);
      for (const EpochLoss& l : losses) epoch_loss += l.sum;
    }

    TrainLogEntry entry{epoch, epoch_loss / n_train, std::nullopt};
    const bool eval_now =
        epoch % config.eval_every == 0 || epoch == config.max_epochs;
    if (eval_now && have_validation) {
      const ModelScorer scorer(params);
      const double m = ValidationScore(scorer, kb, metric, tuning_relations,
                                       config.eval_workers);
      entry.metric = m;
      if (!result.best_metric || m > *result.best_metric) {
        result.best_metric = m;
        result.best_epoch = epoch;
        result.params = params;
      }
    }
    result.log.push_back(entry);
  }
  if (!have_validation) {
    result.params = params;
    result.best_epoch = config.max_epochs;
  }
  return result;
}

GridSpace GridSpace::Default(ModelKind kind) {
  GridSpace space;
  space.dims = {100, 150, 200};
  space.learning_rates = {0.01, 0.1};
  space.strategies = {SamplingStrategy::kPerturb1, SamplingStrategy::kPerturb2,
                      SamplingStrategy::kPerturb1R};
  space.base.negatives = 6;
  space.base.eval_every = 50;
  if (kind == ModelKind::kTransE) {
    space.l2s = {0.0};
    space.margins = {0.5, 1.0, 2.0, 3.0, 4.0};
    space.base.max_epochs = 1800;
  } else {
    space.l2s = {0.1, 0.01, 0.001};
    space.margins = {space.base.margin};
    space.base.max_epochs = 500;
  }
  return space;
}

std::vector<TrainConfig> GridSpace::Cells(ModelKind kind) const {
  const std::vector<double> l2_axis =
      kind == ModelKind::kTransE && l2s.empty() ? std::vector<double>{0.0} : l2s;
  const std::vector<double> margin_axis =
      kind == ModelKind::kTransE ? margins : std::vector<double>{base.margin};
  std::vector<TrainConfig> cells;
  for (std::size_t d : dims) {
    for (double l2 : l2_axis) {
      for (double lr : learning_rates) {
        for (SamplingStrategy s : strategies) {
          for (double m : margin_axis) {
            TrainConfig c = base;
            c.dim = d;
            c.l2 = l2;
            c.learning_rate = lr;
            c.strategy = s;
            c.margin = m;
            cells.push_back(c);
          }
        }
      }
    }
  }
  return cells;
}

GridResult GridSearch(const KnowledgeBase& kb, ModelKind kind,
                      const GridSpace& space, ValidationMetric metric,
                      std::span<const RelationId> tuning_relations) {
  const auto cells = space.Cells(kind);
  if (cells.empty()) throw ConfigError("grid search space is empty");
  GridResult result;
  bool have_best = false;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    GridCell cell;
    cell.config = cells[c];
    try {
      TrainResult tr = Train(kb, kind, cell.config, metric, tuning_relations);
      cell.metric = tr.best_metric.value_or(0.0);
    } catch (const Error& e) {
      cell.error = e.what();
      Warn("grid cell " + std::to_string(c) + " failed: " + cell.error);
    }
    if (cell.metric && (!have_best || *cell.metric > result.best_metric)) {
      have_best = true;
      result.best_metric = *cell.metric;
      result.best_index = c;
      result.best = cell.config;
    }
    result.cells.push_back(std::move(cell));
  }
  if (!have_best) throw TrainingError("every grid cell failed");
  return result;
}

std::size_t DefaultTuningRelationCount(std::string_view dataset_name) {
  std::string name(dataset_name);
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (name == "wn18" || name == "wnrr" || name == "wn18rr") return 5;
  if (name == "fb15k-237" || name == "fb-237" || name == "fb237") return 15;
  if (name == "fb15k") return 30;
  return 0;
}

}  // namespace kbc
