#include "kbc/eval.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <thread>

#include "kbc/error.h"
#include "kbc/parallel.h"

namespace kbc {

std::vector<const PairIndex*> EvalTarget::FilterIndices(const KnowledgeBase& kb,
                                                        RelationId k) const {
  std::vector<const PairIndex*> out{&kb.pairs(Split::kTrain, k)};
  if (split == Split::kTest) out.push_back(&kb.pairs(Split::kValid, k));
  return out;
}

bool EvalTarget::Includes(RelationId k) const {
  return relations.empty() ||
         std::find(relations.begin(), relations.end(), k) != relations.end();
}

namespace {

std::vector<RelationId> TargetRelations(const KnowledgeBase& kb,
                                        const EvalTarget& target) {
  std::vector<RelationId> out;
  for (RelationId k = 0; k < kb.num_relations(); ++k) {
    if (target.Includes(k) && !kb.by_relation(target.split, k).empty()) {
      out.push_back(k);
    }
  }
  return out;
}

// Rank of `truth` among admissible entities given one question's scores.
// `skip` holds filtered entities, sorted; `truth` is never skipped.
std::size_t FilteredRank(std::span<const double> scores, EntityId truth,
                         const std::vector<EntityId>& skip,
                         std::uint64_t& ranked) {
  const double s_true = scores[truth];
  std::size_t better = 0;
  auto next_skip = skip.begin();
  for (EntityId e = 0; e < scores.size(); ++e) {
    while (next_skip != skip.end() && *next_skip < e) ++next_skip;
    if (e != truth && next_skip != skip.end() && *next_skip == e) continue;
    ++ranked;
    if (e == truth) continue;
    if (scores[e] > s_true || (scores[e] == s_true && e < truth)) ++better;
  }
  return better + 1;
}

void CollectSkips(std::span<const PairIndex* const> indices, bool by_subject,
                  EntityId fixed, std::vector<EntityId>& out) {
  out.clear();
  for (const PairIndex* idx : indices) {
    auto ents = by_subject ? idx->ObjectsOf(fixed) : idx->SubjectsOf(fixed);
    out.insert(out.end(), ents.begin(), ents.end());
  }
  std::sort(out.begin(), out.end());
}

void FinishPairRanking(PrResult& result) {
  std::size_t total = 0;
  for (const PrRelation& r : result.per_relation) {
    total += std::min(result.k, r.num_relevant);
  }
  result.map = 0.0;
  result.hits = 0.0;
  for (PrRelation& r : result.per_relation) {
    r.weight = static_cast<double>(std::min(result.k, r.num_relevant)) /
               static_cast<double>(total);
    result.map += r.ap * r.weight;
    result.hits += r.hits * r.weight;
  }
}

void ScoreRelationList(PrRelation& rel, std::size_t k) {
  std::vector<char> relevance(rel.top.size());
  for (std::size_t r = 0; r < rel.top.size(); ++r) {
    relevance[r] = rel.top[r].relevant;
  }
  rel.ap = AveragePrecisionAtK(relevance, rel.num_relevant, k);
  rel.hits = HitsAtK(relevance, rel.num_relevant, k);
}

PrRelation MakeRelation(const KnowledgeBase& kb, const EvalTarget& target,
                        RelationId k, const std::vector<Candidate>& top,
                        std::uint64_t candidates) {
  PrRelation rel;
  rel.relation = k;
  rel.num_relevant = kb.by_relation(target.split, k).size();
  rel.candidates = candidates;
  const std::size_t ne = kb.num_entities();
  const PairIndex& relevant = kb.pairs(target.split, k);
  rel.top.reserve(top.size());
  for (const Candidate& c : top) {
    RankedPair p;
    p.subject = PairSubject(c.id, ne);
    p.object = PairObject(c.id, ne);
    p.score = c.score;
    p.relevant = relevant.Contains(p.subject, p.object);
    rel.top.push_back(p);
  }
  return rel;
}

}  // namespace

// ---- Entity ranking -------------------------------------------------------

ErResult EvaluateEntityRanking(const Scorer& scorer, const KnowledgeBase& kb,
                               std::span<const std::size_t> ks,
                               const ErOptions& options) {
  const EvalTarget& target = options.target;
  const std::size_t ne = kb.num_entities();
  ErResult result;
  result.ks.assign(ks.begin(), ks.end());

  std::vector<Triple> questions;
  for (RelationId k : TargetRelations(kb, target)) {
    const auto& triples = kb.by_relation(target.split, k);
    questions.insert(questions.end(), triples.begin(), triples.end());
  }
  result.ranks.resize(questions.size());
  std::vector<std::uint64_t> ranked(questions.size(), 0);

  ParallelFor(questions.size(), options.workers, [&](std::size_t q) {
    thread_local std::vector<double> scores;
    thread_local std::vector<EntityId> skip;
    const Triple& t = questions[q];
    auto indices = target.FilterIndices(kb, t.relation);
    if (target.filter_targets) {
      indices.push_back(&kb.pairs(target.split, t.relation));
    }
    scores.resize(ne);
    ErTripleRanks& out = result.ranks[q];
    out.triple = t;

    scorer.ScoreCol(t.relation, t.object, scores);
    CollectSkips(indices, /*by_subject=*/false, t.object, skip);
    out.subject_rank = FilteredRank(scores, t.subject, skip, ranked[q]);

    scorer.ScoreRow(t.subject, t.relation, scores);
    CollectSkips(indices, /*by_subject=*/true, t.subject, skip);
    out.object_rank = FilteredRank(scores, t.object, skip, ranked[q]);
  });

  result.questions = 2 * questions.size();
  std::vector<std::size_t> hit_counts(ks.size(), 0);
  double reciprocal_sum = 0.0;
  for (std::size_t q = 0; q < questions.size(); ++q) {
    const ErTripleRanks& r = result.ranks[q];
    reciprocal_sum += 1.0 / static_cast<double>(r.subject_rank);
    reciprocal_sum += 1.0 / static_cast<double>(r.object_rank);
    for (std::size_t h = 0; h < ks.size(); ++h) {
      hit_counts[h] += (r.subject_rank <= ks[h]) + (r.object_rank <= ks[h]);
    }
    const RelationId k = r.triple.relation;
    if (result.per_relation.empty() || result.per_relation.back().relation != k) {
      result.per_relation.push_back({k, 0, 0, 0});
    }
    ErRelationCounts& counts = result.per_relation.back();
    counts.questions_from += 1;
    counts.scored_slots += 2 * ne;
    counts.ranked_candidates += ranked[q];
  }
  if (result.questions > 0) {
    const auto n = static_cast<double>(result.questions);
    result.mrr = reciprocal_sum / n;
    for (std::size_t c : hit_counts) {
      result.hits.push_back(static_cast<double>(c) / n);
    }
  } else {
    result.hits.assign(ks.size(), 0.0);
  }
  return result;
}

std::uint64_t ErCandidateCount(std::size_t test_triples,
                               std::size_t num_entities) {
  return 2 * static_cast<std::uint64_t>(test_triples) * num_entities - 1;
}

// ---- Triple classification ------------------------------------------------

double BestThreshold(std::span<const double> positives,
                     std::span<const double> negatives, double* accuracy) {
  std::vector<std::pair<double, bool>> all;
  all.reserve(positives.size() + negatives.size());
  for (double s : positives) all.emplace_back(s, true);
  for (double s : negatives) all.emplace_back(s, false);
  if (all.empty()) {
    if (accuracy) *accuracy = 0.0;
    return 0.0;
  }
  std::sort(all.begin(), all.end());
  const double n = static_cast<double>(all.size());

  // Threshold below every score: everything is classified positive.
  std::ptrdiff_t correct = static_cast<std::ptrdiff_t>(positives.size());
  std::ptrdiff_t best_correct = correct;
  double best_sigma = all.front().first - 1.0;
  std::size_t i = 0;
  while (i < all.size()) {
    const double v = all[i].first;
    // Moving sigma to >= v flips every item scored v to negative.
    while (i < all.size() && all[i].first == v) {
      correct += all[i].second ? -1 : 1;
      ++i;
    }
    const double sigma = i < all.size() ? (v + all[i].first) / 2.0 : v + 1.0;
    if (correct > best_correct) {
      best_correct = correct;
      best_sigma = sigma;
    }
  }
  if (accuracy) *accuracy = static_cast<double>(best_correct) / n;
  return best_sigma;
}

SlotPools SlotPools::FromTrain(const KnowledgeBase& kb) {
  std::vector<char> is_subject(kb.num_entities(), 0);
  std::vector<char> is_object(kb.num_entities(), 0);
  for (const Triple& t : kb.train()) {
    is_subject[t.subject] = 1;
    is_object[t.object] = 1;
  }
  SlotPools pools;
  for (EntityId e = 0; e < kb.num_entities(); ++e) {
    if (is_subject[e]) pools.subjects.push_back(e);
    if (is_object[e]) pools.objects.push_back(e);
  }
  return pools;
}

namespace {

// Uniform draw from `pool` excluding `current`; nullopt if impossible.
std::optional<EntityId> DrawOther(const std::vector<EntityId>& pool,
                                  EntityId current, Rng& rng) {
  auto it = std::lower_bound(pool.begin(), pool.end(), current);
  const bool contains = it != pool.end() && *it == current;
  const std::size_t options = pool.size() - (contains ? 1 : 0);
  if (options == 0) return std::nullopt;
  std::size_t idx = std::uniform_int_distribution<std::size_t>(0, options - 1)(rng);
  const auto pos = static_cast<std::size_t>(it - pool.begin());
  if (contains && idx >= pos) ++idx;
  return pool[idx];
}

}  // namespace

std::optional<Triple> CorruptForClassification(const SlotPools& pools,
                                               const Triple& t, Rng& rng) {
  const bool subject_first = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    const bool subject = (attempt == 0) == subject_first;
    Triple out = t;
    if (subject) {
      auto e = DrawOther(pools.subjects, t.subject, rng);
      if (!e) continue;
      out.subject = *e;
    } else {
      auto e = DrawOther(pools.objects, t.object, rng);
      if (!e) continue;
      out.object = *e;
    }
    return out;
  }
  return std::nullopt;
}

TcThresholds LearnTcThresholds(const Scorer& scorer, const KnowledgeBase& kb,
                               Rng& rng) {
  if (kb.valid().empty()) {
    throw ConfigError("triple classification needs validation triples");
  }
  const SlotPools pools = SlotPools::FromTrain(kb);
  const std::size_t nr = kb.num_relations();
  TcThresholds out;
  out.sigma.assign(nr, 0.0);
  out.defaulted.assign(nr, 0);
  out.validation_accuracy.assign(nr, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> all_scores;
  for (RelationId k = 0; k < nr; ++k) {
    const auto& triples = kb.by_relation(Split::kValid, k);
    if (triples.empty()) {
      out.defaulted[k] = 1;
      continue;
    }
    std::vector<double> pos, neg;
    for (const Triple& t : triples) {
      pos.push_back(scorer.Score(t.subject, t.relation, t.object));
      if (auto c = CorruptForClassification(pools, t, rng)) {
        neg.push_back(scorer.Score(c->subject, c->relation, c->object));
      }
    }
    all_scores.insert(all_scores.end(), pos.begin(), pos.end());
    all_scores.insert(all_scores.end(), neg.begin(), neg.end());
    double acc = 0.0;
    out.sigma[k] = BestThreshold(pos, neg, &acc);
    out.validation_accuracy[k] = acc;
  }
  std::sort(all_scores.begin(), all_scores.end());
  const std::size_t n = all_scores.size();
  out.global_median = n % 2 == 1
                          ? all_scores[n / 2]
                          : (all_scores[n / 2 - 1] + all_scores[n / 2]) / 2.0;
  for (RelationId k = 0; k < nr; ++k) {
    if (out.defaulted[k]) out.sigma[k] = out.global_median;
  }
  return out;
}

TcResult EvaluateTc(const Scorer& scorer, const KnowledgeBase& kb,
                    const TcThresholds& thresholds, Rng& rng) {
  const SlotPools pools = SlotPools::FromTrain(kb);
  TcResult result;
  result.per_relation_accuracy.assign(kb.num_relations(),
                                      std::numeric_limits<double>::quiet_NaN());
  for (RelationId k = 0; k < kb.num_relations(); ++k) {
    const auto& triples = kb.by_relation(Split::kTest, k);
    if (triples.empty()) continue;
    const double sigma = thresholds.sigma.at(k);
    std::size_t n = 0, correct = 0;
    for (const Triple& t : triples) {
      ++n;
      correct += scorer.Score(t.subject, t.relation, t.object) > sigma;
      if (auto c = CorruptForClassification(pools, t, rng)) {
        ++n;
        correct += !(scorer.Score(c->subject, c->relation, c->object) > sigma);
      }
    }
    result.per_relation_accuracy[k] =
        static_cast<double>(correct) / static_cast<double>(n);
    result.classified += n;
    result.correct += correct;
  }
  if (result.classified > 0) {
    result.accuracy = static_cast<double>(result.correct) /
                      static_cast<double>(result.classified);
  }
  return result;
}

// ---- Entity-pair ranking --------------------------------------------------

double AveragePrecisionAtK(std::span<const char> relevance,
                           std::size_t num_relevant, std::size_t k) {
  const std::size_t denom = std::min(k, num_relevant);
  if (denom == 0) return 0.0;
  const std::size_t depth = std::min(k, relevance.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < depth; ++r) {
    if (!relevance[r]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return sum / static_cast<double>(denom);
}

double HitsAtK(std::span<const char> relevance, std::size_t num_relevant,
               std::size_t k) {
  const std::size_t denom = std::min(k, num_relevant);
  if (denom == 0) return 0.0;
  const std::size_t depth = std::min(k, relevance.size());
  std::size_t hits = 0;
  for (std::size_t r = 0; r < depth; ++r) hits += relevance[r] != 0;
  return static_cast<double>(hits) / static_cast<double>(denom);
}

PrResult EvaluatePairRanking(const Scorer& scorer, const KnowledgeBase& kb,
                             std::size_t k, const PrOptions& options) {
  if (k == 0) throw ConfigError("K must be at least 1");
  PrResult result;
  result.k = k;
  for (RelationId rel : TargetRelations(kb, options.target)) {
    ScanFilter filter;
    filter.excluded = options.target.FilterIndices(kb, rel);
    filter.types = options.types;
    const ScanResult scan = ScanRelation(scorer, rel, k, filter, options.scan);
    PrRelation pr = MakeRelation(kb, options.target, rel, scan.top, scan.candidates);
    ScoreRelationList(pr, k);
    result.per_relation.push_back(std::move(pr));
  }
  FinishPairRanking(result);
  return result;
}

PrResult EvaluatePairRankingFromLists(const KnowledgeBase& kb, std::size_t k,
                                      const PairListProvider& provider,
                                      const PrOptions& options) {
  if (k == 0) throw ConfigError("K must be at least 1");
  const std::size_t ne = kb.num_entities();
  PrResult result;
  result.k = k;
  for (RelationId rel : TargetRelations(kb, options.target)) {
    const auto excluded = options.target.FilterIndices(kb, rel);
    std::vector<Candidate> kept;
    for (const Candidate& c : provider(rel)) {
      const EntityId i = PairSubject(c.id, ne);
      const EntityId j = PairObject(c.id, ne);
      bool drop = false;
      for (const PairIndex* idx : excluded) drop = drop || idx->Contains(i, j);
      if (options.types != nullptr && !options.types->Admissible(rel, i, j)) {
        drop = true;
      }
      if (!drop) kept.push_back(c);
    }
    const std::uint64_t candidates = kept.size();
    PrRelation pr = MakeRelation(kb, options.target, rel,
                                 TopKSelect(std::move(kept), k), candidates);
    ScoreRelationList(pr, k);
    result.per_relation.push_back(std::move(pr));
  }
  FinishPairRanking(result);
  return result;
}

PrResult TruncatePairRanking(const PrResult& full, std::size_t k) {
  if (k == 0 || k > full.k) {
    throw ConfigError("truncation K must be in [1, " + std::to_string(full.k) + "]");
  }
  PrResult out;
  out.k = k;
  out.per_relation = full.per_relation;
  for (PrRelation& rel : out.per_relation) {
    if (rel.top.size() > k) rel.top.resize(k);
    ScoreRelationList(rel, k);
  }
  FinishPairRanking(out);
  return out;
}

bool ApplyTypeFilter(const TypeConstraints& constraints, RelationId k,
                     EntityId subject, EntityId object) {
  return constraints.Admissible(k, subject, object);
}

// ---- Curves -----------------------------------------------------------------

std::vector<CurvePoint> CurvesFromResult(const PrResult& at_max_k,
                                         std::span<const std::size_t> k_grid) {
  std::vector<CurvePoint> out;
  for (std::size_t k : k_grid) {
    const PrResult r = TruncatePairRanking(at_max_k, k);
    out.push_back({k, r.hits, r.map});
  }
  return out;
}

std::vector<CurvePoint> MetricCurves(const Scorer& scorer,
                                     const KnowledgeBase& kb,
                                     std::span<const std::size_t> k_grid,
                                     const PrOptions& options) {
  if (k_grid.empty()) return {};
  if (!std::is_sorted(k_grid.begin(), k_grid.end())) {
    throw ConfigError("K grid must be ascending");
  }
  const PrResult full = EvaluatePairRanking(scorer, kb, k_grid.back(), options);
  return CurvesFromResult(full, k_grid);
}

// ---- Closure analysis -------------------------------------------------------

RelationClosure::RelationClosure(
    std::span<const std::pair<EntityId, EntityId>> pairs,
    ClosureProperties properties)
    : properties_(properties) {
  for (const auto& [i, j] : pairs) {
    edges_[i].push_back(j);
    if (properties_.symmetric) edges_[j].push_back(i);
  }
  for (auto& [_, v] : edges_) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
}

std::vector<EntityId> RelationClosure::Reachable(EntityId from) const {
  auto cached = reach_cache_.find(from);
  if (cached != reach_cache_.end()) return cached->second;
  std::vector<EntityId> reached;
  std::unordered_set<EntityId> seen;
  std::deque<EntityId> frontier{from};
  while (!frontier.empty()) {
    const EntityId u = frontier.front();
    frontier.pop_front();
    auto it = edges_.find(u);
    if (it == edges_.end()) continue;
    for (EntityId v : it->second) {
      if (seen.insert(v).second) {
        reached.push_back(v);
        frontier.push_back(v);
      }
    }
  }
  std::sort(reached.begin(), reached.end());
  reach_cache_.emplace(from, reached);
  return reached;
}

bool RelationClosure::Contains(EntityId subject, EntityId object) const {
  if (properties_.transitive) {
    const auto reached = Reachable(subject);
    return std::binary_search(reached.begin(), reached.end(), object);
  }
  auto it = edges_.find(subject);
  return it != edges_.end() &&
         std::binary_search(it->second.begin(), it->second.end(), object);
}

std::vector<std::pair<EntityId, EntityId>> RelationClosure::Materialize()
    const {
  std::vector<std::pair<EntityId, EntityId>> out;
  for (const auto& [u, targets] : edges_) {
    const auto reached = properties_.transitive ? Reachable(u) : targets;
    for (EntityId v : reached) out.emplace_back(u, v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ClosureCounts AnalyzeClosure(const KnowledgeBase& kb, RelationId relation,
                             std::span<const RankedPair> top,
                             ClosureProperties properties,
                             const std::vector<Triple>* external) {
  std::vector<std::pair<EntityId, EntityId>> base;
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
    for (const Triple& t : kb.by_relation(s, relation)) {
      base.emplace_back(t.subject, t.object);
    }
  }
  if (external != nullptr) {
    for (const Triple& t : *external) {
      if (t.relation == relation) base.emplace_back(t.subject, t.object);
    }
  }
  const RelationClosure closure(base, properties);
  ClosureCounts counts;
  counts.source = external != nullptr ? "splits+external" : "splits";
  counts.list_size = top.size();
  std::size_t implied = 0;
  for (const RankedPair& p : top) {
    const Triple t{p.subject, relation, p.object};
    if (kb.InTest(t)) {
      ++counts.test_hits;
    } else if (!kb.IsObserved(t) && closure.Contains(p.subject, p.object)) {
      ++implied;
    }
  }
  counts.implied_hits = counts.test_hits + implied;
  return counts;
}

// ---- Validation metric --------------------------------------------------------

double ValidationScore(const Scorer& scorer, const KnowledgeBase& kb,
                       ValidationMetric metric,
                       std::span<const RelationId> relations,
                       std::size_t workers) {
  EvalTarget target;
  target.split = Split::kValid;
  target.relations.assign(relations.begin(), relations.end());
  if (metric == ValidationMetric::kMrrEr) {
    ErOptions options;
    options.target = target;
    options.workers = workers;
    const std::size_t ks[] = {10};
    return EvaluateEntityRanking(scorer, kb, ks, options).mrr;
  }
  PrOptions options;
  options.target = target;
  options.scan.workers = workers;
  return EvaluatePairRanking(scorer, kb, 100, options).map;
}

}  // namespace kbc
