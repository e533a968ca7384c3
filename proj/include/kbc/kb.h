#ifndef KBC_KB_H_
#define KBC_KB_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace kbc {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;
using TypeId = std::uint32_t;

// Bijective name <-> dense index map. Indices are assigned in first-appearance
// order and never change.
class Dictionary {
 public:
  std::optional<std::uint32_t> Find(std::string_view name) const;
  std::uint32_t Add(std::string_view name);  // returns the existing id if present
  const std::string& Name(std::uint32_t id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
};

struct Vocab {
  Dictionary entities;
  Dictionary relations;

  std::size_t num_entities() const { return entities.size(); }
  std::size_t num_relations() const { return relations.size(); }
};

struct Triple {
  EntityId subject = 0;
  RelationId relation = 0;
  EntityId object = 0;

  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const {
    std::uint64_t h = t.subject;
    h = h * 0x9E3779B97F4A7C15ULL ^ t.relation;
    h = h * 0x9E3779B97F4A7C15ULL ^ t.object;
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

using TripleSet = std::unordered_set<Triple, TripleHash>;

enum class VocabMode {
  kBuild,   // vocab must start empty; names are added
  kExtend,  // names are added to an existing vocab
  kFrozen,  // unseen names are an error
};

struct LoadedTriples {
  std::vector<Triple> triples;
  std::size_t duplicates_dropped = 0;
};

LoadedTriples ParseTriples(std::istream& in, const std::string& source,
                           Vocab& vocab, VocabMode mode);
LoadedTriples LoadTriples(const std::filesystem::path& path, Vocab& vocab,
                          VocabMode mode);

void WriteTriples(std::ostream& out, std::span<const Triple> triples,
                  const Vocab& vocab);
void WriteTriples(const std::filesystem::path& path,
                  std::span<const Triple> triples, const Vocab& vocab);

// The (subject, object) pairs of one relation with sorted row and column
// adjacency lists.
class PairIndex {
 public:
  void Insert(EntityId subject, EntityId object);
  // Sorts adjacency lists. Must be called once after the last Insert.
  void Finalize();

  bool Contains(EntityId subject, EntityId object) const;
  std::span<const EntityId> ObjectsOf(EntityId subject) const;
  std::span<const EntityId> SubjectsOf(EntityId object) const;
  std::size_t size() const { return size_; }
  const std::unordered_map<EntityId, std::vector<EntityId>>& rows() const {
    return rows_;
  }

 private:
  std::unordered_map<EntityId, std::vector<EntityId>> rows_;
  std::unordered_map<EntityId, std::vector<EntityId>> cols_;
  std::size_t size_ = 0;
};

enum class Split { kTrain, kValid, kTest };

struct DatasetStats {
  std::size_t entities = 0;
  std::size_t relations = 0;
  std::size_t train = 0;
  std::size_t valid = 0;
  std::size_t test = 0;
};

// Immutable after Build; safe for concurrent readers.
class KnowledgeBase {
 public:
  // Removes cross-split duplicates with precedence train > valid > test.
  static KnowledgeBase Build(Vocab vocab, std::vector<Triple> train,
                             std::vector<Triple> valid,
                             std::vector<Triple> test);

  // Loads train.txt, valid.txt and test.txt from a directory.
  static KnowledgeBase LoadDirectory(const std::filesystem::path& dir);

  const Vocab& vocab() const { return vocab_; }
  std::size_t num_entities() const { return vocab_.num_entities(); }
  std::size_t num_relations() const { return vocab_.num_relations(); }

  const std::vector<Triple>& train() const { return train_; }
  const std::vector<Triple>& valid() const { return valid_; }
  const std::vector<Triple>& test() const { return test_; }
  const std::vector<Triple>& split(Split s) const;

  bool InTrain(const Triple& t) const;
  bool InValid(const Triple& t) const;
  bool InTest(const Triple& t) const;
  bool IsObserved(const Triple& t) const;

  const PairIndex& pairs(Split s, RelationId k) const;
  // Triples of one split grouped by relation (T_k for the test split).
  const std::vector<Triple>& by_relation(Split s, RelationId k) const;

  std::size_t cross_split_duplicates() const { return cross_split_duplicates_; }
  DatasetStats Stats() const;

  // Relations sorted by descending training frequency, ties by id.
  std::vector<RelationId> MostFrequentRelations(std::size_t n) const;

 private:
  Vocab vocab_;
  std::vector<Triple> train_, valid_, test_;
  // [split][relation]
  std::vector<std::vector<PairIndex>> pair_index_;
  std::vector<std::vector<std::vector<Triple>>> by_relation_;
  std::size_t cross_split_duplicates_ = 0;
};

// Entity types plus per-relation domain/range constraints.
class TypeConstraints {
 public:
  TypeConstraints() = default;
  TypeConstraints(std::size_t num_entities, std::size_t num_relations);

  static TypeConstraints Parse(std::istream& entity_types,
                               std::istream& relation_constraints,
                               const KnowledgeBase& kb, bool augment);
  static TypeConstraints Load(const std::filesystem::path& entity_types,
                              const std::filesystem::path& relation_constraints,
                              const KnowledgeBase& kb, bool augment = true);

  TypeId AddType(std::string_view name) { return types_.Add(name); }
  void AddEntityType(EntityId entity, TypeId type);
  void SetRelationConstraint(RelationId relation, std::optional<TypeId> domain,
                             std::optional<TypeId> range);
  // Adds domain(k) to the subject's and range(k) to the object's type set for
  // every triple of a constrained relation in every split.
  void Augment(const KnowledgeBase& kb);

  bool IsConstrained(RelationId k) const;
  std::optional<TypeId> domain(RelationId k) const { return domain_.at(k); }
  std::optional<TypeId> range(RelationId k) const { return range_.at(k); }
  bool HasType(EntityId entity, TypeId type) const;
  bool Admissible(RelationId k, EntityId subject, EntityId object) const;

  // Per-entity flags: does the entity satisfy the domain (range) of k. All ones
  // for unconstrained relations.
  std::vector<char> SubjectMask(RelationId k) const;
  std::vector<char> ObjectMask(RelationId k) const;

  std::size_t num_constrained() const;
  std::size_t num_relations() const { return domain_.size(); }
  const Dictionary& types() const { return types_; }

 private:
  Dictionary types_;
  std::vector<std::vector<TypeId>> entity_types_;  // sorted, unique
  std::vector<std::optional<TypeId>> domain_;
  std::vector<std::optional<TypeId>> range_;
};

}  // namespace kbc

#endif  // KBC_KB_H_
