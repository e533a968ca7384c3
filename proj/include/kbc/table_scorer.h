#ifndef KBC_TABLE_SCORER_H_
#define KBC_TABLE_SCORER_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>

#include "kbc/kb.h"
#include "kbc/scorer.h"

namespace kbc {

// Explicit per-triple scores with a default for every triple not listed.
class TableScorer : public Scorer {
 public:
  TableScorer(std::size_t num_entities, double default_score = 0.0)
      : num_entities_(num_entities), default_score_(default_score) {}

  // Lines "subject<TAB>relation<TAB>object<TAB>score"; names must be in the
  // vocab.
  static TableScorer Parse(std::istream& in, const std::string& source,
                           const Vocab& vocab, double default_score = 0.0);
  static TableScorer Load(const std::filesystem::path& path, const Vocab& vocab,
                          double default_score = 0.0);

  void Set(const Triple& t, double score) { scores_[t] = score; }

  std::size_t num_entities() const override { return num_entities_; }
  double Score(EntityId i, RelationId k, EntityId j) const override;

 private:
  std::size_t num_entities_;
  double default_score_;
  std::unordered_map<Triple, double, TripleHash> scores_;
};

}  // namespace kbc

#endif  // KBC_TABLE_SCORER_H_
