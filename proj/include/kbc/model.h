#ifndef KBC_MODEL_H_
#define KBC_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kbc/kb.h"
#include "kbc/scorer.h"

namespace kbc {

enum class ModelKind { kRescal, kTransE, kDistMult, kComplEx, kAnalogy };
enum class Norm { kL1, kL2 };

std::string_view ModelKindName(ModelKind kind);
std::optional<ModelKind> ParseModelKind(std::string_view name);

// Block structure of an Analogy relation matrix: scalar_blocks 1x1 blocks
// followed by complex_blocks 2x2 blocks [[x, -y], [y, x]].
struct BlockLayout {
  std::size_t scalar_blocks = 0;
  std::size_t complex_blocks = 0;

  // floor(d/2) 2x2 blocks, plus one scalar block when d is odd.
  static BlockLayout ForDim(std::size_t d);
  std::size_t dim() const { return scalar_blocks + 2 * complex_blocks; }

  friend bool operator==(const BlockLayout&, const BlockLayout&) = default;
};

struct ModelSpec {
  ModelKind kind = ModelKind::kDistMult;
  // Embedding size. For ComplEx this is the number of complex components.
  std::size_t dim = 0;
  Norm norm = Norm::kL2;      // TransE only
  BlockLayout layout;         // Analogy only
  bool conjugate_object = true;  // ComplEx only; false runs Real(<e_i, r_k, e_j>)

  static ModelSpec Make(ModelKind kind, std::size_t dim);
  // Throws ConfigError when the spec is unusable.
  void Validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// Embedding storage. Entity rows are dim reals (ComplEx: dim real parts then
// dim imaginary parts). Relation rows by kind:
//   TransE, DistMult: r_k, dim reals
//   ComplEx:          dim real parts then dim imaginary parts
//   RESCAL:           R_k row-major, dim*dim reals
//   Analogy:          scalar block values, then (x, y) per 2x2 block
class ModelParams {
 public:
  ModelParams() = default;
  // All-zero parameters.
  ModelParams(ModelSpec spec, std::size_t num_entities,
              std::size_t num_relations);

  // Entries i.i.d. uniform in [-scale/sqrt(d), scale/sqrt(d)].
  static ModelParams Init(const ModelSpec& spec, std::size_t num_entities,
                          std::size_t num_relations, std::uint64_t seed,
                          double scale = 1.0);

  const ModelSpec& spec() const { return spec_; }
  std::size_t dim() const { return spec_.dim; }
  std::size_t num_entities() const { return num_entities_; }
  std::size_t num_relations() const { return num_relations_; }
  std::size_t entity_width() const { return entity_width_; }
  std::size_t relation_width() const { return relation_width_; }

  std::span<double> entity(EntityId e) {
    return {entity_data_.data() + e * entity_width_, entity_width_};
  }
  std::span<const double> entity(EntityId e) const {
    return {entity_data_.data() + e * entity_width_, entity_width_};
  }
  std::span<double> relation(RelationId k) {
    return {relation_data_.data() + k * relation_width_, relation_width_};
  }
  std::span<const double> relation(RelationId k) const {
    return {relation_data_.data() + k * relation_width_, relation_width_};
  }
  std::vector<double>& entity_data() { return entity_data_; }
  const std::vector<double>& entity_data() const { return entity_data_; }
  std::vector<double>& relation_data() { return relation_data_; }
  const std::vector<double>& relation_data() const { return relation_data_; }

  bool AllFinite() const;

  // Binary checkpoint: magic, version, spec, sizes, raw little-endian doubles.
  void Save(std::ostream& out) const;
  void Save(const std::filesystem::path& path) const;
  static ModelParams Load(std::istream& in);
  static ModelParams Load(const std::filesystem::path& path);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  ModelSpec spec_;
  std::size_t num_entities_ = 0;
  std::size_t num_relations_ = 0;
  std::size_t entity_width_ = 0;
  std::size_t relation_width_ = 0;
  std::vector<double> entity_data_;
  std::vector<double> relation_data_;
};

double Score(const ModelParams& params, EntityId subject, RelationId relation,
             EntityId object);
std::vector<double> ScoreRow(const ModelParams& params, EntityId subject,
                             RelationId relation);
std::vector<double> ScoreCol(const ModelParams& params, RelationId relation,
                             EntityId object);
std::vector<double> ScoreBlock(const ModelParams& params, RelationId relation,
                               EntityRange rows, EntityRange cols);

// Partial derivatives of the score with respect to the subject row, the
// relation row and the object row (laid out like ModelParams rows). When
// subject == object the true entity gradient is subject + object.
struct ScoreGradient {
  std::vector<double> subject;
  std::vector<double> relation;
  std::vector<double> object;
};

ScoreGradient ScoreGradients(const ModelParams& params, EntityId subject,
                             RelationId relation, EntityId object);

// Decodes an Analogy relation row into its dense dim x dim matrix (row-major).
std::vector<double> AnalogyDenseMatrix(const ModelSpec& spec,
                                       std::span<const double> relation_row);

// Scorer view over a parameter set. Every block entry is computed with the
// same arithmetic as Score(), except RESCAL columns which use R e_j first and
// agree to rounding.
class ModelScorer final : public Scorer {
 public:
  explicit ModelScorer(const ModelParams& params) : params_(&params) {}

  std::size_t num_entities() const override { return params_->num_entities(); }
  double Score(EntityId subject, RelationId relation,
               EntityId object) const override;
  void ScoreBlock(RelationId relation, EntityRange rows, EntityRange cols,
                  std::span<double> out) const override;
  void ScoreCol(RelationId relation, EntityId object,
                std::span<double> out) const override;

 private:
  const ModelParams* params_;
};

}  // namespace kbc

#endif  // KBC_MODEL_H_
