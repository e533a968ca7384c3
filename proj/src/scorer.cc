#include "kbc/scorer.h"

namespace kbc {

void Scorer::ScoreBlock(RelationId relation, EntityRange rows, EntityRange cols,
                        std::span<double> out) const {
  std::size_t pos = 0;
  for (EntityId i = rows.begin; i < rows.end; ++i) {
    for (EntityId j = cols.begin; j < cols.end; ++j) {
      out[pos++] = Score(i, relation, j);
    }
  }
}

void Scorer::ScoreRow(EntityId subject, RelationId relation,
                      std::span<double> out) const {
  const auto n = static_cast<EntityId>(num_entities());
  ScoreBlock(relation, {subject, subject + 1}, {0, n}, out);
}

void Scorer::ScoreCol(RelationId relation, EntityId object,
                      std::span<double> out) const {
  const auto n = static_cast<EntityId>(num_entities());
  ScoreBlock(relation, {0, n}, {object, object + 1}, out);
}

std::vector<double> Scorer::Row(EntityId subject, RelationId relation) const {
  std::vector<double> out(num_entities());
  ScoreRow(subject, relation, out);
  return out;
}

std::vector<double> Scorer::Col(RelationId relation, EntityId object) const {
  std::vector<double> out(num_entities());
  ScoreCol(relation, object, out);
  return out;
}

}  // namespace kbc
