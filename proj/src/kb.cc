#include "kbc/kb.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "kbc/error.h"
#include "kbc/log.h"

namespace kbc {
namespace {

std::vector<std::string_view> SplitTabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

std::string_view StripCr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

bool IsBlank(std::string_view line) {
  return line.find_first_not_of(" \t") == std::string_view::npos;
}

std::uint32_t Resolve(Dictionary& dict, std::string_view name, VocabMode mode,
                      const std::string& source, std::size_t line,
                      const char* what) {
  if (mode == VocabMode::kFrozen) {
    auto id = dict.Find(name);
    if (!id) {
      throw VocabError(source + ":" + std::to_string(line) + ": unknown " +
                       what + " '" + std::string(name) + "'");
    }
    return *id;
  }
  return dict.Add(name);
}

std::ifstream OpenOrThrow(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

constexpr std::size_t kNumSplits = 3;

std::size_t SplitSlot(Split s) { return static_cast<std::size_t>(s); }

}  // namespace

std::optional<std::uint32_t> Dictionary::Find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Dictionary::Add(std::string_view name) {
  auto it = index_.find(name);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(names_.size());
  names_.emplace_back(name);
  index_.emplace(names_.back(), id);
  return id;
}

LoadedTriples ParseTriples(std::istream& in, const std::string& source,
                           Vocab& vocab, VocabMode mode) {
  if (mode == VocabMode::kBuild &&
      (!vocab.entities.empty() || !vocab.relations.empty())) {
    throw VocabError(source + ": build mode requires an empty vocabulary");
  }
  LoadedTriples out;
  TripleSet seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = StripCr(raw);
    if (IsBlank(line)) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 3) {
      throw ParseError(source, line_no,
                       "expected 3 tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      if (f.empty()) throw ParseError(source, line_no, "empty field");
    }
    Triple t;
    t.subject = Resolve(vocab.entities, fields[0], mode, source, line_no, "entity");
    t.relation =
        Resolve(vocab.relations, fields[1], mode, source, line_no, "relation");
    t.object = Resolve(vocab.entities, fields[2], mode, source, line_no, "entity");
    if (!seen.insert(t).second) {
      ++out.duplicates_dropped;
      continue;
    }
    out.triples.push_back(t);
  }
  if (out.duplicates_dropped > 0) {
    Warn(source + ": dropped " + std::to_string(out.duplicates_dropped) +
         " duplicate triple(s)");
  }
  return out;
}

LoadedTriples LoadTriples(const std::filesystem::path& path, Vocab& vocab,
                          VocabMode mode) {
  auto in = OpenOrThrow(path);
  return ParseTriples(in, path.string(), vocab, mode);
}

void WriteTriples(std::ostream& out, std::span<const Triple> triples,
                  const Vocab& vocab) {
  for (const Triple& t : triples) {
    out << vocab.entities.Name(t.subject) << '\t'
        << vocab.relations.Name(t.relation) << '\t'
        << vocab.entities.Name(t.object) << '\n';
  }
}

void WriteTriples(const std::filesystem::path& path,
                  std::span<const Triple> triples, const Vocab& vocab) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  WriteTriples(out, triples, vocab);
}

void PairIndex::Insert(EntityId subject, EntityId object) {
  rows_[subject].push_back(object);
  cols_[object].push_back(subject);
  ++size_;
}

void PairIndex::Finalize() {
  for (auto& [_, v] : rows_) std::sort(v.begin(), v.end());
  for (auto& [_, v] : cols_) std::sort(v.begin(), v.end());
}

bool PairIndex::Contains(EntityId subject, EntityId object) const {
  auto objects = ObjectsOf(subject);
  return std::binary_search(objects.begin(), objects.end(), object);
}

std::span<const EntityId> PairIndex::ObjectsOf(EntityId subject) const {
  auto it = rows_.find(subject);
  if (it == rows_.end()) return {};
  return it->second;
}

std::span<const EntityId> PairIndex::SubjectsOf(EntityId object) const {
  auto it = cols_.find(object);
  if (it == cols_.end()) return {};
  return it->second;
}

KnowledgeBase KnowledgeBase::Build(Vocab vocab, std::vector<Triple> train,
                                   std::vector<Triple> valid,
                                   std::vector<Triple> test) {
  KnowledgeBase kb;
  kb.vocab_ = std::move(vocab);
  const std::size_t ne = kb.vocab_.num_entities();
  const std::size_t nr = kb.vocab_.num_relations();

  TripleSet seen;
  auto admit = [&](std::vector<Triple>& split, const char* name) {
    std::vector<Triple> kept;
    kept.reserve(split.size());
    std::size_t dropped = 0;
    for (const Triple& t : split) {
      if (t.subject >= ne || t.object >= ne || t.relation >= nr) {
        throw VocabError(std::string(name) + " split holds an index outside the vocabulary");
      }
      if (seen.insert(t).second) {
        kept.push_back(t);
      } else {
        ++dropped;
      }
    }
    if (dropped > 0) {
      Warn(std::to_string(dropped) + " duplicate triple(s) dropped from the " +
           name + " split");
    }
    kb.cross_split_duplicates_ += dropped;
    return kept;
  };
  kb.train_ = admit(train, "train");
  kb.valid_ = admit(valid, "valid");
  kb.test_ = admit(test, "test");

  kb.pair_index_.assign(kNumSplits, std::vector<PairIndex>(nr));
  kb.by_relation_.assign(kNumSplits, std::vector<std::vector<Triple>>(nr));
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
    const std::size_t slot = SplitSlot(s);
    for (const Triple& t : kb.split(s)) {
      kb.pair_index_[slot][t.relation].Insert(t.subject, t.object);
      kb.by_relation_[slot][t.relation].push_back(t);
    }
    for (auto& idx : kb.pair_index_[slot]) idx.Finalize();
  }
  return kb;
}

KnowledgeBase KnowledgeBase::LoadDirectory(const std::filesystem::path& dir) {
  Vocab vocab;
  auto train = LoadTriples(dir / "train.txt", vocab, VocabMode::kBuild);
  auto valid = LoadTriples(dir / "valid.txt", vocab, VocabMode::kExtend);
  auto test = LoadTriples(dir / "test.txt", vocab, VocabMode::kExtend);
  return Build(std::move(vocab), std::move(train.triples),
               std::move(valid.triples), std::move(test.triples));
}

const std::vector<Triple>& KnowledgeBase::split(Split s) const {
  switch (s) {
    case Split::kTrain:
      return train_;
    case Split::kValid:
      return valid_;
    case Split::kTest:
      return test_;
  }
  return test_;
}

const PairIndex& KnowledgeBase::pairs(Split s, RelationId k) const {
  return pair_index_[SplitSlot(s)].at(k);
}

const std::vector<Triple>& KnowledgeBase::by_relation(Split s,
                                                      RelationId k) const {
  return by_relation_[SplitSlot(s)].at(k);
}

bool KnowledgeBase::InTrain(const Triple& t) const {
  return t.relation < num_relations() &&
         pairs(Split::kTrain, t.relation).Contains(t.subject, t.object);
}

bool KnowledgeBase::InValid(const Triple& t) const {
  return t.relation < num_relations() &&
         pairs(Split::kValid, t.relation).Contains(t.subject, t.object);
}

bool KnowledgeBase::InTest(const Triple& t) const {
  return t.relation < num_relations() &&
         pairs(Split::kTest, t.relation).Contains(t.subject, t.object);
}

bool KnowledgeBase::IsObserved(const Triple& t) const {
  return InTrain(t) || InValid(t) || InTest(t);
}

DatasetStats KnowledgeBase::Stats() const {
  return {num_entities(), num_relations(), train_.size(), valid_.size(),
          test_.size()};
}

std::vector<RelationId> KnowledgeBase::MostFrequentRelations(
    std::size_t n) const {
  std::vector<RelationId> rels(num_relations());
  for (RelationId k = 0; k < rels.size(); ++k) rels[k] = k;
  std::stable_sort(rels.begin(), rels.end(), [&](RelationId a, RelationId b) {
    return by_relation(Split::kTrain, a).size() >
           by_relation(Split::kTrain, b).size();
  });
  if (rels.size() > n) rels.resize(n);
  return rels;
}

TypeConstraints::TypeConstraints(std::size_t num_entities,
                                 std::size_t num_relations)
    : entity_types_(num_entities),
      domain_(num_relations),
      range_(num_relations) {}

void TypeConstraints::AddEntityType(EntityId entity, TypeId type) {
  auto& types = entity_types_.at(entity);
  auto it = std::lower_bound(types.begin(), types.end(), type);
  if (it == types.end() || *it != type) types.insert(it, type);
}

void TypeConstraints::SetRelationConstraint(RelationId relation,
                                            std::optional<TypeId> domain,
                                            std::optional<TypeId> range) {
  domain_.at(relation) = domain;
  range_.at(relation) = range;
}

void TypeConstraints::Augment(const KnowledgeBase& kb) {
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest}) {
    for (const Triple& t : kb.split(s)) {
      if (!IsConstrained(t.relation)) continue;
      AddEntityType(t.subject, *domain_[t.relation]);
      AddEntityType(t.object, *range_[t.relation]);
    }
  }
}

bool TypeConstraints::IsConstrained(RelationId k) const {
  return domain_.at(k).has_value() && range_.at(k).has_value();
}

bool TypeConstraints::HasType(EntityId entity, TypeId type) const {
  const auto& types = entity_types_.at(entity);
  return std::binary_search(types.begin(), types.end(), type);
}

bool TypeConstraints::Admissible(RelationId k, EntityId subject,
                                 EntityId object) const {
  if (!IsConstrained(k)) return true;
  return HasType(subject, *domain_[k]) && HasType(object, *range_[k]);
}

std::vector<char> TypeConstraints::SubjectMask(RelationId k) const {
  std::vector<char> mask(entity_types_.size(), 1);
  if (!IsConstrained(k)) return mask;
  for (EntityId e = 0; e < mask.size(); ++e) mask[e] = HasType(e, *domain_[k]);
  return mask;
}

std::vector<char> TypeConstraints::ObjectMask(RelationId k) const {
  std::vector<char> mask(entity_types_.size(), 1);
  if (!IsConstrained(k)) return mask;
  for (EntityId e = 0; e < mask.size(); ++e) mask[e] = HasType(e, *range_[k]);
  return mask;
}

std::size_t TypeConstraints::num_constrained() const {
  std::size_t n = 0;
  for (RelationId k = 0; k < domain_.size(); ++k) n += IsConstrained(k);
  return n;
}

TypeConstraints TypeConstraints::Parse(std::istream& entity_types,
                                       std::istream& relation_constraints,
                                       const KnowledgeBase& kb, bool augment) {
  TypeConstraints tc(kb.num_entities(), kb.num_relations());
  const auto& vocab = kb.vocab();
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(entity_types, raw)) {
    ++line_no;
    const std::string_view line = StripCr(raw);
    if (IsBlank(line)) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 2) {
      throw ConstraintError("entity types line " + std::to_string(line_no) +
                            ": expected entity<TAB>types");
    }
    auto entity = vocab.entities.Find(fields[0]);
    if (!entity) {
      throw ConstraintError("entity types line " + std::to_string(line_no) +
                            ": unknown entity '" + std::string(fields[0]) + "'");
    }
    std::string_view rest = fields[1];
    while (!rest.empty()) {
      const std::size_t comma = rest.find(',');
      const std::string_view type = rest.substr(0, comma);
      if (!type.empty()) tc.AddEntityType(*entity, tc.AddType(type));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }

  line_no = 0;
  while (std::getline(relation_constraints, raw)) {
    ++line_no;
    const std::string_view line = StripCr(raw);
    if (IsBlank(line)) continue;
    const auto fields = SplitTabs(line);
    if (fields.size() != 3) {
      throw ConstraintError("relation constraints line " +
                            std::to_string(line_no) +
                            ": expected relation<TAB>domain<TAB>range");
    }
    auto relation = vocab.relations.Find(fields[0]);
    if (!relation) {
      throw ConstraintError("relation constraints line " +
                            std::to_string(line_no) + ": unknown relation '" +
                            std::string(fields[0]) + "'");
    }
    auto parse_type = [&](std::string_view f) -> std::optional<TypeId> {
      if (f.empty() || f == "-") return std::nullopt;
      return tc.AddType(f);
    };
    tc.SetRelationConstraint(*relation, parse_type(fields[1]),
                             parse_type(fields[2]));
  }
  if (augment) tc.Augment(kb);
  return tc;
}

TypeConstraints TypeConstraints::Load(
    const std::filesystem::path& entity_types,
    const std::filesystem::path& relation_constraints, const KnowledgeBase& kb,
    bool augment) {
  auto types_in = OpenOrThrow(entity_types);
  auto rel_in = OpenOrThrow(relation_constraints);
  return Parse(types_in, rel_in, kb, augment);
}

}  // namespace kbc
