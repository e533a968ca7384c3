#ifndef KBC_SCORER_H_
#define KBC_SCORER_H_

#include <cstddef>
#include <span>
#include <vector>

#include "kbc/kb.h"

namespace kbc {

// Half-open entity index range [begin, end).
struct EntityRange {
  EntityId begin = 0;
  EntityId end = 0;

  std::size_t size() const { return end - begin; }
};

// Anything that assigns a real score to a triple: embedding models, the rule
// baseline, and lookup tables. Implementations are deterministic and safe for
// concurrent calls.
class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual std::size_t num_entities() const = 0;
  virtual double Score(EntityId subject, RelationId relation,
                       EntityId object) const = 0;

  // out is row-major with rows.size() * cols.size() entries.
  virtual void ScoreBlock(RelationId relation, EntityRange rows,
                          EntityRange cols, std::span<double> out) const;
  // Scores of (subject, relation, e) for every entity e.
  virtual void ScoreRow(EntityId subject, RelationId relation,
                        std::span<double> out) const;
  // Scores of (e, relation, object) for every entity e.
  virtual void ScoreCol(RelationId relation, EntityId object,
                        std::span<double> out) const;

  std::vector<double> Row(EntityId subject, RelationId relation) const;
  std::vector<double> Col(RelationId relation, EntityId object) const;
};

}  // namespace kbc

#endif  // KBC_SCORER_H_
