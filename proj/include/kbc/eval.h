#ifndef KBC_EVAL_H_
#define KBC_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kbc/kb.h"
#include "kbc/scorer.h"
#include "kbc/topk.h"

namespace kbc {

using Rng = std::mt19937_64;

// Which split provides the questions (ER) or relevant items (PR), and what is
// filtered. Test targets filter train and valid; validation targets filter
// train only. Target triples themselves are never filtered.
struct EvalTarget {
  Split split = Split::kTest;
  // ER variant: also drop other target-split triples from each ranking.
  bool filter_targets = false;
  // Restrict to these relations; empty means all.
  std::vector<RelationId> relations;

  std::vector<const PairIndex*> FilterIndices(const KnowledgeBase& kb,
                                              RelationId k) const;
  bool Includes(RelationId k) const;
};

// ---- Entity ranking -------------------------------------------------------

struct ErTripleRanks {
  Triple triple;
  std::size_t subject_rank = 0;  // rank of the subject for (?, k, j)
  std::size_t object_rank = 0;   // rank of the object for (i, k, ?)
};

struct ErRelationCounts {
  RelationId relation = 0;
  std::size_t questions_from = 0;  // |T_k|
  // Every question scores all |E| entities: 2 * |T_k| * |E| slots.
  std::uint64_t scored_slots = 0;
  // Candidates left after filtering, including the true answer.
  std::uint64_t ranked_candidates = 0;
};

struct ErResult {
  std::vector<ErTripleRanks> ranks;
  std::vector<std::size_t> ks;
  double mrr = 0.0;
  std::vector<double> hits;  // parallel to ks
  std::vector<ErRelationCounts> per_relation;
  std::size_t questions = 0;
};

struct ErOptions {
  EvalTarget target;
  std::size_t workers = 1;
};

// Filtered rank: 1 + #admissible candidates with a strictly higher score +
// #admissible tied candidates with a smaller entity id.
ErResult EvaluateEntityRanking(const Scorer& scorer, const KnowledgeBase& kb,
                               std::span<const std::size_t> ks,
                               const ErOptions& options = {});

// The candidate count quoted for ER on one relation: 2 * |T_k| * |E| - 1.
std::uint64_t ErCandidateCount(std::size_t test_triples,
                               std::size_t num_entities);

// ---- Triple classification ------------------------------------------------

struct TcThresholds {
  std::vector<double> sigma;      // per relation
  std::vector<char> defaulted;    // relation had no validation triples
  std::vector<double> validation_accuracy;  // NaN when defaulted
  double global_median = 0.0;
};

struct TcResult {
  double accuracy = 0.0;
  std::size_t classified = 0;
  std::size_t correct = 0;
  std::vector<double> per_relation_accuracy;  // NaN for relations without test
};

// Threshold that maximises accuracy of "score > sigma"; the midpoint of the
// best interval between consecutive distinct scores (lowest on ties).
double BestThreshold(std::span<const double> positives,
                     std::span<const double> negatives,
                     double* accuracy = nullptr);

// Entities seen as subject (resp. object) anywhere in training, sorted.
struct SlotPools {
  std::vector<EntityId> subjects;
  std::vector<EntityId> objects;

  static SlotPools FromTrain(const KnowledgeBase& kb);
};

// Replaces subject or object (chosen uniformly) with a different entity drawn
// from the pool of that slot. Falls back to the other slot when a pool has no
// alternative; nullopt when neither has one.
std::optional<Triple> CorruptForClassification(const SlotPools& pools,
                                               const Triple& t, Rng& rng);

TcThresholds LearnTcThresholds(const Scorer& scorer, const KnowledgeBase& kb,
                               Rng& rng);
TcResult EvaluateTc(const Scorer& scorer, const KnowledgeBase& kb,
                    const TcThresholds& thresholds, Rng& rng);

// ---- Entity-pair ranking --------------------------------------------------

struct RankedPair {
  EntityId subject = 0;
  EntityId object = 0;
  double score = 0.0;
  bool relevant = false;
};

struct PrRelation {
  RelationId relation = 0;
  std::size_t num_relevant = 0;  // |T_k|
  std::vector<RankedPair> top;
  double ap = 0.0;
  double hits = 0.0;
  double weight = 0.0;
  std::uint64_t candidates = 0;
};

struct PrResult {
  std::size_t k = 0;
  double map = 0.0;
  double hits = 0.0;
  std::vector<PrRelation> per_relation;  // ascending relation id
};

struct PrOptions {
  EvalTarget target;
  const TypeConstraints* types = nullptr;
  ScanOptions scan;
};

// (1 / min(K, n)) * sum_{r <= K, rel(r)} (#relevant in top r) / r
double AveragePrecisionAtK(std::span<const char> relevance,
                           std::size_t num_relevant, std::size_t k);
// (#relevant in top K) / min(K, n)
double HitsAtK(std::span<const char> relevance, std::size_t num_relevant,
               std::size_t k);

PrResult EvaluatePairRanking(const Scorer& scorer, const KnowledgeBase& kb,
                             std::size_t k, const PrOptions& options = {});

// Ranked candidate pairs (ids are PairId) for relation k, best first. The
// evaluator applies the filters of PrOptions and truncates to K.
using PairListProvider =
    std::function<std::vector<Candidate>(RelationId relation)>;

PrResult EvaluatePairRankingFromLists(const KnowledgeBase& kb, std::size_t k,
                                      const PairListProvider& provider,
                                      const PrOptions& options = {});

// Recomputes metrics at a smaller K from a result computed at a larger K.
PrResult TruncatePairRanking(const PrResult& full, std::size_t k);

bool ApplyTypeFilter(const TypeConstraints& constraints, RelationId k,
                     EntityId subject, EntityId object);

// ---- Curves -----------------------------------------------------------------

struct CurvePoint {
  std::size_t k = 0;
  double hits = 0.0;
  double map = 0.0;
};

// One ranking at max(K grid); every smaller K is read off its prefix.
std::vector<CurvePoint> CurvesFromResult(const PrResult& at_max_k,
                                         std::span<const std::size_t> k_grid);
std::vector<CurvePoint> MetricCurves(const Scorer& scorer,
                                     const KnowledgeBase& kb,
                                     std::span<const std::size_t> k_grid,
                                     const PrOptions& options = {});

// ---- Closure analysis -------------------------------------------------------

struct ClosureProperties {
  bool symmetric = false;
  bool transitive = false;
};

// Closure of one relation's pairs under the declared properties.
class RelationClosure {
 public:
  RelationClosure(std::span<const std::pair<EntityId, EntityId>> pairs,
                  ClosureProperties properties);

  bool Contains(EntityId subject, EntityId object) const;
  // Every pair of the closure, sorted.
  std::vector<std::pair<EntityId, EntityId>> Materialize() const;

 private:
  std::vector<EntityId> Reachable(EntityId from) const;

  ClosureProperties properties_;
  std::unordered_map<EntityId, std::vector<EntityId>> edges_;
  mutable std::unordered_map<EntityId, std::vector<EntityId>> reach_cache_;
};

struct ClosureCounts {
  std::size_t list_size = 0;
  std::size_t test_hits = 0;
  // Test hits plus unobserved entries implied by the closure.
  std::size_t implied_hits = 0;
  std::string source;  // "splits" or "splits+external"
};

ClosureCounts AnalyzeClosure(const KnowledgeBase& kb, RelationId relation,
                             std::span<const RankedPair> top,
                             ClosureProperties properties,
                             const std::vector<Triple>* external = nullptr);

// ---- Validation metric used by training -------------------------------------

enum class ValidationMetric { kMrrEr, kMap100Pr };

double ValidationScore(const Scorer& scorer, const KnowledgeBase& kb,
                       ValidationMetric metric,
                       std::span<const RelationId> relations,
                       std::size_t workers = 1);

}  // namespace kbc

#endif  // KBC_EVAL_H_
