#ifndef KBC_RULES_H_
#define KBC_RULES_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "kbc/eval.h"
#include "kbc/kb.h"
#include "kbc/scorer.h"
#include "kbc/topk.h"

namespace kbc {

struct BodyAtom {
  RelationId relation = 0;
  bool inverse = false;  // traverse object -> subject

  friend bool operator==(const BodyAtom&, const BodyAtom&) = default;
  friend auto operator<=>(const BodyAtom&, const BodyAtom&) = default;
};

// head(x, y) <- b1(x, z1), b2(z1, z2), ..., bn(z_{n-1}, y)
struct PathRule {
  std::vector<BodyAtom> body;

  friend bool operator==(const PathRule&, const PathRule&) = default;
};

enum class RuleSlot { kSubject, kObject };

// head(c, y) or head(x, c) for every x / y.
struct ConstantRule {
  RuleSlot slot = RuleSlot::kObject;
  EntityId constant = 0;

  friend bool operator==(const ConstantRule&, const ConstantRule&) = default;
};

struct Rule {
  RelationId head = 0;
  std::variant<PathRule, ConstantRule> shape;
  double confidence = 0.0;
  std::uint64_t support = 0;
  std::uint64_t body_count = 0;

  bool is_path() const { return std::holds_alternative<PathRule>(shape); }
  const PathRule& path() const { return std::get<PathRule>(shape); }
  const ConstantRule& constant() const { return std::get<ConstantRule>(shape); }
};

// Rules grouped by head relation, each group sorted by descending confidence.
class RuleModel {
 public:
  explicit RuleModel(std::size_t num_relations = 0) : by_head_(num_relations) {}

  void Add(Rule rule);
  // Restores the per-head confidence order after a sequence of Add calls.
  void Sort();

  std::size_t num_relations() const { return by_head_.size(); }
  const std::vector<Rule>& RulesFor(RelationId k) const { return by_head_.at(k); }
  std::size_t size() const;

 private:
  std::vector<std::vector<Rule>> by_head_;
};

struct MineOptions {
  std::size_t max_len = 2;
  std::size_t sample_size = 1000;
  std::uint64_t min_support = 2;
  // Head triples per relation used to discover candidate body shapes.
  std::size_t shape_samples = 1000;
  bool constant_rules = true;
  std::size_t workers = 1;
};

// Entities reachable from `from` by following the body over training triples,
// sorted. With `reverse`, walks the body backwards from an object.
std::vector<EntityId> FollowBody(const KnowledgeBase& kb,
                                 const std::vector<BodyAtom>& body,
                                 EntityId from, bool reverse = false);

// Every distinct (x, y), x != y, connected by the body in training.
std::vector<std::pair<EntityId, EntityId>> AllGroundings(
    const KnowledgeBase& kb, const std::vector<BodyAtom>& body);

// Scores a fixed body for a head relation from up to sample_size groundings.
// Exact when sample_size covers every grounding.
Rule ScorePathRule(const KnowledgeBase& kb, RelationId head,
                   const std::vector<BodyAtom>& body, std::size_t sample_size,
                   Rng& rng);

// Training triples as an undirected adjacency list with edge directions.
class TrainGraph {
 public:
  struct Edge {
    BodyAtom atom;
    EntityId neighbor;
  };

  explicit TrainGraph(const KnowledgeBase& kb);
  std::span<const Edge> edges(EntityId e) const { return adjacency_[e]; }

 private:
  std::vector<std::vector<Edge>> adjacency_;
};

// Candidate bodies of length 1..max_len found by walking simple paths from
// sampled head triples; the trivial body head(x, y) itself is excluded.
std::vector<std::vector<BodyAtom>> CandidateBodies(const KnowledgeBase& kb,
                                                   const TrainGraph& graph,
                                                   RelationId head,
                                                   std::size_t max_len,
                                                   std::size_t shape_samples,
                                                   Rng& rng);

RuleModel MineRules(const KnowledgeBase& kb, const MineOptions& options,
                    Rng& rng);

// Maximum confidence over the rules for k that fire on (i, j); 0 if none.
double RuleScore(const RuleModel& model, const KnowledgeBase& kb, EntityId i,
                 RelationId k, EntityId j);

// Every pair produced by forward chaining the rules for k, with its
// max-aggregated score. Ids are PairId; order is ascending id.
std::vector<Candidate> RuleCandidates(const RuleModel& model,
                                      const KnowledgeBase& kb, RelationId k,
                                      std::size_t workers = 1);

// Top-K of RuleCandidates after dropping train and valid pairs.
std::vector<Candidate> RulePredictPairs(const RuleModel& model,
                                        const KnowledgeBase& kb, RelationId k,
                                        std::size_t top_k,
                                        std::size_t workers = 1);

class RuleScorer : public Scorer {
 public:
  RuleScorer(const RuleModel& model, const KnowledgeBase& kb)
      : model_(&model), kb_(&kb) {}

  std::size_t num_entities() const override { return kb_->num_entities(); }
  double Score(EntityId i, RelationId k, EntityId j) const override;
  void ScoreRow(EntityId i, RelationId k, std::span<double> out) const override;
  void ScoreCol(RelationId k, EntityId j, std::span<double> out) const override;
  void ScoreBlock(RelationId k, EntityRange rows, EntityRange cols,
                  std::span<double> out) const override;

 private:
  const RuleModel* model_;
  const KnowledgeBase* kb_;
};

// One rule per line:
//   head <- r1 , r2^-1 : confidence support body_count
//   head(object=name) : confidence support body_count
void WriteRules(std::ostream& out, const RuleModel& model, const Vocab& vocab);
void WriteRules(const std::string& path, const RuleModel& model,
                const Vocab& vocab);
RuleModel ReadRules(std::istream& in, const std::string& source,
                    const Vocab& vocab);
RuleModel ReadRules(const std::string& path, const Vocab& vocab);

}  // namespace kbc

#endif  // KBC_RULES_H_
