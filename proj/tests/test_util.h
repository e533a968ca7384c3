#ifndef KBC_TESTS_TEST_UTIL_H_
#define KBC_TESTS_TEST_UTIL_H_

#include <array>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "kbc/kb.h"
#include "kbc/log.h"
#include "kbc/table_scorer.h"

namespace kbc::testing {

using NamedTriple = std::array<std::string, 3>;
using NamedTriples = std::vector<NamedTriple>;

inline std::vector<Triple> Intern(Vocab& vocab, const NamedTriples& named) {
  std::vector<Triple> out;
  for (const auto& [s, r, o] : named) {
    const EntityId si = vocab.entities.Add(s);
    const RelationId ri = vocab.relations.Add(r);
    const EntityId oi = vocab.entities.Add(o);
    out.push_back({si, ri, oi});
  }
  return out;
}

// Builds a KB from names. `entities` fixes the order of entity ids first, so
// entities that appear in no triple still exist.
inline KnowledgeBase MakeKb(const NamedTriples& train, const NamedTriples& valid,
                            const NamedTriples& test,
                            const std::vector<std::string>& entities = {},
                            const std::vector<std::string>& relations = {}) {
  Vocab vocab;
  for (const auto& e : entities) vocab.entities.Add(e);
  for (const auto& r : relations) vocab.relations.Add(r);
  auto tr = Intern(vocab, train);
  auto va = Intern(vocab, valid);
  auto te = Intern(vocab, test);
  return KnowledgeBase::Build(std::move(vocab), std::move(tr), std::move(va),
                              std::move(te));
}

inline Vocab NumberedVocab(std::size_t ne, std::size_t nr) {
  Vocab vocab;
  for (std::size_t e = 0; e < ne; ++e) vocab.entities.Add("e" + std::to_string(e));
  for (std::size_t r = 0; r < nr; ++r) vocab.relations.Add("r" + std::to_string(r));
  return vocab;
}

// Random KB with distinct triples spread over the splits. Splits may come out
// smaller than requested on tiny vocabularies.
inline KnowledgeBase RandomKb(std::size_t ne, std::size_t nr, std::size_t n_train,
                              std::size_t n_valid, std::size_t n_test,
                              std::mt19937_64& rng) {
  std::uniform_int_distribution<EntityId> ent(0, static_cast<EntityId>(ne - 1));
  std::uniform_int_distribution<RelationId> rel(0, static_cast<RelationId>(nr - 1));
  TripleSet seen;
  auto draw = [&](std::size_t n) {
    std::vector<Triple> out;
    for (std::size_t attempt = 0; out.size() < n && attempt < 50 * n + 50;
         ++attempt) {
      Triple t{ent(rng), rel(rng), ent(rng)};
      if (seen.insert(t).second) out.push_back(t);
    }
    return out;
  };
  auto tr = draw(n_train);
  auto va = draw(n_valid);
  auto te = draw(n_test);
  return KnowledgeBase::Build(NumberedVocab(ne, nr), std::move(tr),
                              std::move(va), std::move(te));
}

// Table scorer filled with scores drawn from a small set so ties occur.
inline TableScorer RandomTable(const KnowledgeBase& kb, std::mt19937_64& rng,
                               int levels = 7) {
  TableScorer table(kb.num_entities());
  std::uniform_int_distribution<int> level(0, levels - 1);
  for (EntityId i = 0; i < kb.num_entities(); ++i) {
    for (RelationId k = 0; k < kb.num_relations(); ++k) {
      for (EntityId j = 0; j < kb.num_entities(); ++j) {
        table.Set({i, k, j}, level(rng) / static_cast<double>(levels));
      }
    }
  }
  return table;
}

inline void WriteFile(const std::filesystem::path& path,
                      const std::string& contents) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << contents;
}

inline std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("kbc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace kbc::testing

#endif  // KBC_TESTS_TEST_UTIL_H_
