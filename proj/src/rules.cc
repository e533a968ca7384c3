#include "kbc/rules.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "kbc/error.h"
#include "kbc/parallel.h"

namespace kbc {
namespace {

// Walk budget per head triple when discovering body shapes.
constexpr std::size_t kMaxEdgesPerWalk = 50000;

void SortUnique(std::vector<EntityId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Entities with at least one edge matching the atom as its first step.
std::vector<EntityId> StartEntities(const KnowledgeBase& kb,
                                    const BodyAtom& atom) {
  std::vector<EntityId> out;
  for (const Triple& t : kb.by_relation(Split::kTrain, atom.relation)) {
    out.push_back(atom.inverse ? t.object : t.subject);
  }
  SortUnique(out);
  return out;
}

bool Fires(const Rule& rule, const KnowledgeBase& kb, EntityId i, EntityId j) {
  if (!rule.is_path()) {
    const ConstantRule& c = rule.constant();
    return (c.slot == RuleSlot::kObject ? j : i) == c.constant;
  }
  if (i == j) return false;
  auto reach = FollowBody(kb, rule.path().body, i);
  return std::binary_search(reach.begin(), reach.end(), j);
}

std::string FormatDouble(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void RuleModel::Add(Rule rule) {
  if (rule.head >= by_head_.size()) {
    throw ConfigError("rule head relation out of range");
  }
  by_head_[rule.head].push_back(std::move(rule));
}

void RuleModel::Sort() {
  for (auto& rules : by_head_) {
    std::stable_sort(rules.begin(), rules.end(),
                     [](const Rule& a, const Rule& b) {
                       return a.confidence > b.confidence;
                     });
  }
}

std::size_t RuleModel::size() const {
  std::size_t n = 0;
  for (const auto& rules : by_head_) n += rules.size();
  return n;
}

std::vector<EntityId> FollowBody(const KnowledgeBase& kb,
                                 const std::vector<BodyAtom>& body,
                                 EntityId from, bool reverse) {
  std::vector<EntityId> frontier{from};
  std::vector<EntityId> next;
  for (std::size_t step = 0; step < body.size() && !frontier.empty(); ++step) {
    BodyAtom atom = reverse ? body[body.size() - 1 - step] : body[step];
    if (reverse) atom.inverse = !atom.inverse;
    const PairIndex& index = kb.pairs(Split::kTrain, atom.relation);
    next.clear();
    for (EntityId e : frontier) {
      auto nbrs = atom.inverse ? index.SubjectsOf(e) : index.ObjectsOf(e);
      next.insert(next.end(), nbrs.begin(), nbrs.end());
    }
    SortUnique(next);
    frontier.swap(next);
  }
  return frontier;
}

std::vector<std::pair<EntityId, EntityId>> AllGroundings(
    const KnowledgeBase& kb, const std::vector<BodyAtom>& body) {
  std::vector<std::pair<EntityId, EntityId>> out;
  if (body.empty()) return out;
  for (EntityId x : StartEntities(kb, body.front())) {
    for (EntityId y : FollowBody(kb, body, x)) {
      if (y != x) out.emplace_back(x, y);
    }
  }
  return out;
}

Rule ScorePathRule(const KnowledgeBase& kb, RelationId head,
                   const std::vector<BodyAtom>& body, std::size_t sample_size,
                   Rng& rng) {
  Rule rule;
  rule.head = head;
  rule.shape = PathRule{body};
  if (body.empty() || sample_size == 0) return rule;

  // Visit start entities in random order and collect their groundings until
  // the sample is full, then subsample uniformly.
  std::vector<EntityId> starts = StartEntities(kb, body.front());
  std::shuffle(starts.begin(), starts.end(), rng);
  std::vector<std::pair<EntityId, EntityId>> groundings;
  for (EntityId x : starts) {
    for (EntityId y : FollowBody(kb, body, x)) {
      if (y != x) groundings.emplace_back(x, y);
    }
    if (groundings.size() >= sample_size) break;
  }
  if (groundings.size() > sample_size) {
    std::vector<std::pair<EntityId, EntityId>> sample;
    sample.reserve(sample_size);
    std::sample(groundings.begin(), groundings.end(),
                std::back_inserter(sample), sample_size, rng);
    groundings.swap(sample);
  }
  const PairIndex& head_pairs = kb.pairs(Split::kTrain, head);
  for (const auto& [x, y] : groundings) {
    if (head_pairs.Contains(x, y)) ++rule.support;
  }
  rule.body_count = groundings.size();
  if (rule.body_count > 0) {
    rule.confidence = static_cast<double>(rule.support) /
                      static_cast<double>(rule.body_count);
  }
  return rule;
}

TrainGraph::TrainGraph(const KnowledgeBase& kb)
    : adjacency_(kb.num_entities()) {
  for (const Triple& t : kb.train()) {
    adjacency_[t.subject].push_back({{t.relation, false}, t.object});
    adjacency_[t.object].push_back({{t.relation, true}, t.subject});
  }
}

std::vector<std::vector<BodyAtom>> CandidateBodies(const KnowledgeBase& kb,
                                                   const TrainGraph& graph,
                                                   RelationId head,
                                                   std::size_t max_len,
                                                   std::size_t shape_samples,
                                                   Rng& rng) {
  std::set<std::vector<BodyAtom>> shapes;
  if (max_len == 0) return {};
  const auto& heads = kb.by_relation(Split::kTrain, head);
  std::vector<std::size_t> picks(heads.size());
  std::iota(picks.begin(), picks.end(), 0);
  if (picks.size() > shape_samples) {
    std::vector<std::size_t> sample;
    std::sample(picks.begin(), picks.end(), std::back_inserter(sample),
                shape_samples, rng);
    picks.swap(sample);
  }

  const BodyAtom trivial{head, false};
  std::vector<BodyAtom> path;
  std::vector<EntityId> visited;
  for (std::size_t p : picks) {
    const EntityId x = heads[p].subject;
    const EntityId y = heads[p].object;
    if (x == y) continue;
    std::size_t budget = kMaxEdgesPerWalk;
    visited.assign(1, x);
    std::function<void(EntityId)> walk = [&](EntityId node) {
      for (const TrainGraph::Edge& edge : graph.edges(node)) {
        if (budget == 0) return;
        --budget;
        path.push_back(edge.atom);
        if (edge.neighbor == y) {
          if (!(path.size() == 1 && edge.atom == trivial)) shapes.insert(path);
        } else if (path.size() < max_len &&
                   std::find(visited.begin(), visited.end(), edge.neighbor) ==
                       visited.end()) {
          visited.push_back(edge.neighbor);
          walk(edge.neighbor);
          visited.pop_back();
        }
        path.pop_back();
      }
    };
    walk(x);
  }
  return {shapes.begin(), shapes.end()};
}

RuleModel MineRules(const KnowledgeBase& kb, const MineOptions& options,
                    Rng& rng) {
  if (options.max_len == 0) throw ConfigError("rule length must be at least 1");
  const std::size_t nr = kb.num_relations();
  RuleModel model(nr);
  const TrainGraph graph(kb);

  struct CandidateRule {
    RelationId head;
    std::vector<BodyAtom> body;
  };
  std::vector<CandidateRule> candidates;
  for (RelationId k = 0; k < nr; ++k) {
    Rng shape_rng(rng());
    for (auto& body : CandidateBodies(kb, graph, k, options.max_len,
                                      options.shape_samples, shape_rng)) {
      candidates.push_back({k, std::move(body)});
    }
  }

  // One seed per candidate keeps results independent of the worker count.
  std::vector<std::uint64_t> seeds(candidates.size());
  for (auto& s : seeds) s = rng();
  std::vector<Rule> scored(candidates.size());
  ParallelFor(candidates.size(), options.workers, [&](std::size_t c) {
    Rng local(seeds[c]);
    scored[c] = ScorePathRule(kb, candidates[c].head, candidates[c].body,
                              options.sample_size, local);
  });
  for (Rule& r : scored) {
    if (r.support >= options.min_support && r.support > 0) {
      model.Add(std::move(r));
    }
  }

  if (options.constant_rules) {
    for (RelationId k = 0; k < nr; ++k) {
      const auto& triples = kb.by_relation(Split::kTrain, k);
      if (triples.empty()) continue;
      for (RuleSlot slot : {RuleSlot::kSubject, RuleSlot::kObject}) {
        std::map<EntityId, std::uint64_t> freq;
        for (const Triple& t : triples) {
          ++freq[slot == RuleSlot::kSubject ? t.subject : t.object];
        }
        for (const auto& [e, f] : freq) {
          if (f < options.min_support) continue;
          Rule r;
          r.head = k;
          r.shape = ConstantRule{slot, e};
          r.support = f;
          r.body_count = triples.size();
          r.confidence = static_cast<double>(f) / static_cast<double>(triples.size());
          model.Add(std::move(r));
        }
      }
    }
  }
  model.Sort();
  return model;
}

double RuleScore(const RuleModel& model, const KnowledgeBase& kb, EntityId i,
                 RelationId k, EntityId j) {
  // Rules are sorted by confidence, so the first that fires is the maximum.
  for (const Rule& rule : model.RulesFor(k)) {
    if (Fires(rule, kb, i, j)) return rule.confidence;
  }
  return 0.0;
}

std::vector<Candidate> RuleCandidates(const RuleModel& model,
                                      const KnowledgeBase& kb, RelationId k,
                                      std::size_t workers) {
  const auto& rules = model.RulesFor(k);
  const std::size_t ne = kb.num_entities();
  std::vector<std::vector<Candidate>> per_rule(rules.size());
  ParallelFor(rules.size(), workers, [&](std::size_t r) {
    const Rule& rule = rules[r];
    auto& out = per_rule[r];
    if (rule.is_path()) {
      const auto& body = rule.path().body;
      for (EntityId x : StartEntities(kb, body.front())) {
        for (EntityId y : FollowBody(kb, body, x)) {
          if (y != x) out.push_back({rule.confidence, PairId(x, y, ne)});
        }
      }
    } else {
      const ConstantRule& c = rule.constant();
      for (EntityId e = 0; e < ne; ++e) {
        const std::uint64_t id = c.slot == RuleSlot::kObject
                                     ? PairId(e, c.constant, ne)
                                     : PairId(c.constant, e, ne);
        out.push_back({rule.confidence, id});
      }
    }
  });
  std::unordered_map<std::uint64_t, double> best;
  for (const auto& list : per_rule) {
    for (const Candidate& c : list) {
      auto [it, inserted] = best.emplace(c.id, c.score);
      if (!inserted) it->second = std::max(it->second, c.score);
    }
  }
  std::vector<Candidate> out;
  out.reserve(best.size());
  for (const auto& [id, score] : best) out.push_back({score, id});
  std::sort(out.begin(), out.end(),
            [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
  return out;
}

std::vector<Candidate> RulePredictPairs(const RuleModel& model,
                                        const KnowledgeBase& kb, RelationId k,
                                        std::size_t top_k,
                                        std::size_t workers) {
  const std::size_t ne = kb.num_entities();
  const PairIndex& train = kb.pairs(Split::kTrain, k);
  const PairIndex& valid = kb.pairs(Split::kValid, k);
  std::vector<Candidate> kept;
  for (const Candidate& c : RuleCandidates(model, kb, k, workers)) {
    const EntityId i = PairSubject(c.id, ne);
    const EntityId j = PairObject(c.id, ne);
    if (!train.Contains(i, j) && !valid.Contains(i, j)) kept.push_back(c);
  }
  return TopKSelect(std::move(kept), top_k);
}

double RuleScorer::Score(EntityId i, RelationId k, EntityId j) const {
  return RuleScore(*model_, *kb_, i, k, j);
}

void RuleScorer::ScoreRow(EntityId i, RelationId k,
                          std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const Rule& rule : model_->RulesFor(k)) {
    const double c = rule.confidence;
    if (rule.is_path()) {
      for (EntityId y : FollowBody(*kb_, rule.path().body, i)) {
        if (y != i) out[y] = std::max(out[y], c);
      }
    } else if (rule.constant().slot == RuleSlot::kObject) {
      double& v = out[rule.constant().constant];
      v = std::max(v, c);
    } else if (rule.constant().constant == i) {
      for (double& v : out) v = std::max(v, c);
    }
  }
}

void RuleScorer::ScoreCol(RelationId k, EntityId j,
                          std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  for (const Rule& rule : model_->RulesFor(k)) {
    const double c = rule.confidence;
    if (rule.is_path()) {
      for (EntityId x : FollowBody(*kb_, rule.path().body, j, /*reverse=*/true)) {
        if (x != j) out[x] = std::max(out[x], c);
      }
    } else if (rule.constant().slot == RuleSlot::kSubject) {
      double& v = out[rule.constant().constant];
      v = std::max(v, c);
    } else if (rule.constant().constant == j) {
      for (double& v : out) v = std::max(v, c);
    }
  }
}

void RuleScorer::ScoreBlock(RelationId k, EntityRange rows, EntityRange cols,
                            std::span<double> out) const {
  std::vector<double> row(num_entities());
  std::size_t pos = 0;
  for (EntityId i = rows.begin; i < rows.end; ++i) {
    ScoreRow(i, k, row);
    for (EntityId j = cols.begin; j < cols.end; ++j) out[pos++] = row[j];
  }
}

void WriteRules(std::ostream& out, const RuleModel& model, const Vocab& vocab) {
  for (RelationId k = 0; k < model.num_relations(); ++k) {
    for (const Rule& rule : model.RulesFor(k)) {
      out << vocab.relations.Name(k);
      if (rule.is_path()) {
        out << " <- ";
        const auto& body = rule.path().body;
        for (std::size_t a = 0; a < body.size(); ++a) {
          if (a > 0) out << " , ";
          out << vocab.relations.Name(body[a].relation);
          if (body[a].inverse) out << "^-1";
        }
      } else {
        const ConstantRule& c = rule.constant();
        out << '(' << (c.slot == RuleSlot::kSubject ? "subject" : "object")
            << '=' << vocab.entities.Name(c.constant) << ')';
      }
      out << " : " << FormatDouble(rule.confidence) << ' ' << rule.support
          << ' ' << rule.body_count << '\n';
    }
  }
}

void WriteRules(const std::string& path, const RuleModel& model,
                const Vocab& vocab) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  WriteRules(out, model, vocab);
  if (!out) throw IoError("failed writing " + path);
}

RuleModel ReadRules(std::istream& in, const std::string& source,
                    const Vocab& vocab) {
  RuleModel model(vocab.num_relations());
  std::string line;
  std::size_t line_no = 0;
  auto relation = [&](const std::string& name) {
    auto id = vocab.relations.Find(name);
    if (!id) throw ParseError(source, line_no, "unknown relation '" + name + "'");
    return static_cast<RelationId>(*id);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    const auto colon = line.rfind(" : ");
    if (colon == std::string::npos) {
      throw ParseError(source, line_no, "missing ' : ' before the statistics");
    }
    Rule rule;
    {
      std::istringstream stats(line.substr(colon + 3));
      std::string extra;
      if (!(stats >> rule.confidence >> rule.support >> rule.body_count) ||
          (stats >> extra)) {
        throw ParseError(source, line_no,
                         "expected 'confidence support body_count'");
      }
    }
    const std::string lhs = line.substr(0, colon);
    const auto arrow = lhs.find(" <- ");
    if (arrow != std::string::npos) {
      rule.head = relation(Trim(lhs.substr(0, arrow)));
      PathRule path;
      std::string rest = lhs.substr(arrow + 4);
      std::size_t start = 0;
      while (true) {
        const auto sep = rest.find(" , ", start);
        std::string atom = Trim(rest.substr(
            start, sep == std::string::npos ? std::string::npos : sep - start));
        BodyAtom a;
        if (atom.size() > 3 && atom.ends_with("^-1")) {
          a.inverse = true;
          atom.resize(atom.size() - 3);
        }
        a.relation = relation(atom);
        path.body.push_back(a);
        if (sep == std::string::npos) break;
        start = sep + 3;
      }
      rule.shape = std::move(path);
    } else {
      ConstantRule c;
      std::string::size_type open = lhs.find("(subject=");
      std::size_t skip = 9;
      c.slot = RuleSlot::kSubject;
      if (open == std::string::npos) {
        open = lhs.find("(object=");
        skip = 8;
        c.slot = RuleSlot::kObject;
      }
      const std::string trimmed = Trim(lhs);
      if (open == std::string::npos || trimmed.back() != ')') {
        throw ParseError(source, line_no,
                         "expected 'head <- body' or 'head(slot=entity)'");
      }
      rule.head = relation(Trim(lhs.substr(0, open)));
      const std::string name = lhs.substr(open + skip, trimmed.size() - open - skip - 1);
      auto id = vocab.entities.Find(name);
      if (!id) throw ParseError(source, line_no, "unknown entity '" + name + "'");
      c.constant = static_cast<EntityId>(*id);
      rule.shape = c;
    }
    model.Add(std::move(rule));
  }
  model.Sort();
  return model;
}

RuleModel ReadRules(const std::string& path, const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return ReadRules(in, path, vocab);
}

}  // namespace kbc
