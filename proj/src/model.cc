#include "kbc/model.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

#include "kbc/error.h"

namespace kbc {
namespace {

// Per-entry kernels. Score(), ScoreBlock() and the gradient code all share
// these, so every path sees identical floating-point evaluation.

double DistMultKernel(const double* a, const double* r, const double* b,
                      std::size_t d) {
  double acc = 0.0;
  // (a*b)*r keeps s(i,k,j) == s(j,k,i) bit for bit.
  for (std::size_t m = 0; m < d; ++m) acc += (a[m] * b[m]) * r[m];
  return acc;
}

double ComplExKernel(const double* a, const double* r, const double* b,
                     std::size_t d, bool conjugate) {
  const double* are = a;
  const double* aim = a + d;
  const double* rre = r;
  const double* rim = r + d;
  const double* bre = b;
  const double* bim = b + d;
  double acc = 0.0;
  if (conjugate) {
    // Re(a * r * conj(b))
    for (std::size_t m = 0; m < d; ++m) {
      acc += (are[m] * bre[m] + aim[m] * bim[m]) * rre[m] -
             (aim[m] * bre[m] - are[m] * bim[m]) * rim[m];
    }
  } else {
    // Re(a * r * b)
    for (std::size_t m = 0; m < d; ++m) {
      acc += (are[m] * bre[m] - aim[m] * bim[m]) * rre[m] -
             (are[m] * bim[m] + aim[m] * bre[m]) * rim[m];
    }
  }
  return acc;
}

double AnalogyKernel(const double* a, const double* r, const double* b,
                     const BlockLayout& layout) {
  const std::size_t ns = layout.scalar_blocks;
  double acc = 0.0;
  for (std::size_t m = 0; m < ns; ++m) acc += (a[m] * b[m]) * r[m];
  for (std::size_t c = 0; c < layout.complex_blocks; ++c) {
    const std::size_t p = ns + 2 * c;
    const std::size_t q = p + 1;
    const double x = r[ns + 2 * c];
    const double y = r[ns + 2 * c + 1];
    acc += (a[p] * b[p] + a[q] * b[q]) * x + (a[q] * b[p] - a[p] * b[q]) * y;
  }
  return acc;
}

double TransEKernel(const double* a, const double* r, const double* b,
                    std::size_t d, Norm norm) {
  double acc = 0.0;
  if (norm == Norm::kL1) {
    for (std::size_t m = 0; m < d; ++m) acc += std::abs((a[m] + r[m]) - b[m]);
    return -acc;
  }
  for (std::size_t m = 0; m < d; ++m) {
    const double diff = (a[m] + r[m]) - b[m];
    acc += diff * diff;
  }
  return -std::sqrt(acc);
}

// u = a^T R
void RescalProjectRow(const double* a, const double* rm, std::size_t d,
                      double* u) {
  std::fill(u, u + d, 0.0);
  for (std::size_t m = 0; m < d; ++m) {
    const double am = a[m];
    const double* row = rm + m * d;
    for (std::size_t n = 0; n < d; ++n) u[n] += am * row[n];
  }
}

// v = R b
void RescalProjectCol(const double* b, const double* rm, std::size_t d,
                      double* v) {
  for (std::size_t m = 0; m < d; ++m) {
    const double* row = rm + m * d;
    double acc = 0.0;
    for (std::size_t n = 0; n < d; ++n) acc += row[n] * b[n];
    v[m] = acc;
  }
}

double Dot(const double* u, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t n = 0; n < d; ++n) acc += u[n] * b[n];
  return acc;
}

std::size_t EntityWidth(const ModelSpec& spec) {
  return spec.kind == ModelKind::kComplEx ? 2 * spec.dim : spec.dim;
}

std::size_t RelationWidth(const ModelSpec& spec) {
  switch (spec.kind) {
    case ModelKind::kRescal:
      return spec.dim * spec.dim;
    case ModelKind::kComplEx:
      return 2 * spec.dim;
    case ModelKind::kTransE:
    case ModelKind::kDistMult:
    case ModelKind::kAnalogy:
      return spec.dim;
  }
  return spec.dim;
}

double KernelScore(const ModelParams& p, const double* a, const double* r,
                   const double* b, std::vector<double>& scratch) {
  const ModelSpec& spec = p.spec();
  const std::size_t d = spec.dim;
  switch (spec.kind) {
    case ModelKind::kDistMult:
      return DistMultKernel(a, r, b, d);
    case ModelKind::kComplEx:
      return ComplExKernel(a, r, b, d, spec.conjugate_object);
    case ModelKind::kAnalogy:
      return AnalogyKernel(a, r, b, spec.layout);
    case ModelKind::kTransE:
      return TransEKernel(a, r, b, d, spec.norm);
    case ModelKind::kRescal:
      scratch.resize(d);
      RescalProjectRow(a, r, d, scratch.data());
      return Dot(scratch.data(), b, d);
  }
  return 0.0;
}

constexpr char kMagic[4] = {'K', 'B', 'C', 'M'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void WritePod(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little,
                "checkpoint format assumes a little-endian host");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T ReadPod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated model checkpoint");
  return value;
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kRescal:
      return "rescal";
    case ModelKind::kTransE:
      return "transe";
    case ModelKind::kDistMult:
      return "distmult";
    case ModelKind::kComplEx:
      return "complex";
    case ModelKind::kAnalogy:
      return "analogy";
  }
  return "unknown";
}

std::optional<ModelKind> ParseModelKind(std::string_view name) {
  for (ModelKind k : {ModelKind::kRescal, ModelKind::kTransE,
                      ModelKind::kDistMult, ModelKind::kComplEx,
                      ModelKind::kAnalogy}) {
    if (ModelKindName(k) == name) return k;
  }
  return std::nullopt;
}

BlockLayout BlockLayout::ForDim(std::size_t d) { return {d % 2, d / 2}; }

ModelSpec ModelSpec::Make(ModelKind kind, std::size_t dim) {
  ModelSpec spec;
  spec.kind = kind;
  spec.dim = dim;
  if (kind == ModelKind::kAnalogy) spec.layout = BlockLayout::ForDim(dim);
  return spec;
}

void ModelSpec::Validate() const {
  if (dim < 1) throw ConfigError("embedding size must be at least 1");
  if (kind == ModelKind::kAnalogy && layout.dim() != dim) {
    throw ConfigError("analogy block layout (" +
                      std::to_string(layout.scalar_blocks) + " scalar, " +
                      std::to_string(layout.complex_blocks) +
                      " 2x2) does not cover dimension " + std::to_string(dim));
  }
}

ModelParams::ModelParams(ModelSpec spec, std::size_t num_entities,
                         std::size_t num_relations)
    : spec_(spec),
      num_entities_(num_entities),
      num_relations_(num_relations),
      entity_width_(EntityWidth(spec)),
      relation_width_(RelationWidth(spec)),
      entity_data_(num_entities * entity_width_, 0.0),
      relation_data_(num_relations * relation_width_, 0.0) {
  spec_.Validate();
}

ModelParams ModelParams::Init(const ModelSpec& spec, std::size_t num_entities,
                              std::size_t num_relations, std::uint64_t seed,
                              double scale) {
  ModelParams p(spec, num_entities, num_relations);
  if (scale == 0.0) return p;
  const double bound = scale / std::sqrt(static_cast<double>(spec.dim));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : p.entity_data_) v = dist(rng);
  for (double& v : p.relation_data_) v = dist(rng);
  return p;
}

bool ModelParams::AllFinite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(entity_data_.begin(), entity_data_.end(), finite) &&
         std::all_of(relation_data_.begin(), relation_data_.end(), finite);
}

void ModelParams::Save(std::ostream& out) const {
  out.write(kMagic, sizeof(kMagic));
  WritePod<std::uint32_t>(out, kCheckpointVersion);
  WritePod<std::uint32_t>(out, static_cast<std::uint32_t>(spec_.kind));
  WritePod<std::uint32_t>(out, static_cast<std::uint32_t>(spec_.norm));
  WritePod<std::uint32_t>(out, spec_.conjugate_object ? 1 : 0);
  WritePod<std::uint64_t>(out, spec_.dim);
  WritePod<std::uint64_t>(out, spec_.layout.scalar_blocks);
  WritePod<std::uint64_t>(out, spec_.layout.complex_blocks);
  WritePod<std::uint64_t>(out, num_entities_);
  WritePod<std::uint64_t>(out, num_relations_);
  out.write(reinterpret_cast<const char*>(entity_data_.data()),
            static_cast<std::streamsize>(entity_data_.size() * sizeof(double)));
  out.write(
      reinterpret_cast<const char*>(relation_data_.data()),
      static_cast<std::streamsize>(relation_data_.size() * sizeof(double)));
  if (!out) throw IoError("failed writing model checkpoint");
}

void ModelParams::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  Save(out);
}

ModelParams ModelParams::Load(std::istream& in) {
  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a model checkpoint");
  }
  if (ReadPod<std::uint32_t>(in) != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version");
  }
  ModelSpec spec;
  const auto kind = ReadPod<std::uint32_t>(in);
  if (kind > static_cast<std::uint32_t>(ModelKind::kAnalogy)) {
    throw IoError("unknown model kind in checkpoint");
  }
  spec.kind = static_cast<ModelKind>(kind);
  spec.norm = ReadPod<std::uint32_t>(in) == 0 ? Norm::kL1 : Norm::kL2;
  spec.conjugate_object = ReadPod<std::uint32_t>(in) != 0;
  spec.dim = ReadPod<std::uint64_t>(in);
  spec.layout.scalar_blocks = ReadPod<std::uint64_t>(in);
  spec.layout.complex_blocks = ReadPod<std::uint64_t>(in);
  const auto ne = ReadPod<std::uint64_t>(in);
  const auto nr = ReadPod<std::uint64_t>(in);
  ModelParams p(spec, ne, nr);
  in.read(reinterpret_cast<char*>(p.entity_data_.data()),
          static_cast<std::streamsize>(p.entity_data_.size() * sizeof(double)));
  in.read(
      reinterpret_cast<char*>(p.relation_data_.data()),
      static_cast<std::streamsize>(p.relation_data_.size() * sizeof(double)));
  if (!in) throw IoError("truncated model checkpoint");
  return p;
}

ModelParams ModelParams::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return Load(in);
}

double Score(const ModelParams& params, EntityId subject, RelationId relation,
             EntityId object) {
  std::vector<double> scratch;
  return KernelScore(params, params.entity(subject).data(),
                     params.relation(relation).data(),
                     params.entity(object).data(), scratch);
}

std::vector<double> ScoreBlock(const ModelParams& params, RelationId relation,
                               EntityRange rows, EntityRange cols) {
  std::vector<double> out(rows.size() * cols.size());
  ModelScorer(params).ScoreBlock(relation, rows, cols, out);
  return out;
}

std::vector<double> ScoreRow(const ModelParams& params, EntityId subject,
                             RelationId relation) {
  return ModelScorer(params).Row(subject, relation);
}

std::vector<double> ScoreCol(const ModelParams& params, RelationId relation,
                             EntityId object) {
  return ModelScorer(params).Col(relation, object);
}

ScoreGradient ScoreGradients(const ModelParams& params, EntityId subject,
                             RelationId relation, EntityId object) {
  const ModelSpec& spec = params.spec();
  const std::size_t d = spec.dim;
  const double* a = params.entity(subject).data();
  const double* r = params.relation(relation).data();
  const double* b = params.entity(object).data();
  ScoreGradient g;
  g.subject.assign(params.entity_width(), 0.0);
  g.relation.assign(params.relation_width(), 0.0);
  g.object.assign(params.entity_width(), 0.0);

  switch (spec.kind) {
    case ModelKind::kDistMult:
      for (std::size_t m = 0; m < d; ++m) {
        g.subject[m] = b[m] * r[m];
        g.object[m] = a[m] * r[m];
        g.relation[m] = a[m] * b[m];
      }
      break;
    case ModelKind::kComplEx: {
      const double *are = a, *aim = a + d, *rre = r, *rim = r + d, *bre = b,
                   *bim = b + d;
      for (std::size_t m = 0; m < d; ++m) {
        if (spec.conjugate_object) {
          g.subject[m] = rre[m] * bre[m] + rim[m] * bim[m];
          g.subject[d + m] = rre[m] * bim[m] - rim[m] * bre[m];
          g.object[m] = rre[m] * are[m] - rim[m] * aim[m];
          g.object[d + m] = rre[m] * aim[m] + rim[m] * are[m];
          g.relation[m] = are[m] * bre[m] + aim[m] * bim[m];
          g.relation[d + m] = are[m] * bim[m] - aim[m] * bre[m];
        } else {
          g.subject[m] = rre[m] * bre[m] - rim[m] * bim[m];
          g.subject[d + m] = -rre[m] * bim[m] - rim[m] * bre[m];
          g.object[m] = rre[m] * are[m] - rim[m] * aim[m];
          g.object[d + m] = -rre[m] * aim[m] - rim[m] * are[m];
          g.relation[m] = are[m] * bre[m] - aim[m] * bim[m];
          g.relation[d + m] = -(are[m] * bim[m] + aim[m] * bre[m]);
        }
      }
      break;
    }
    case ModelKind::kAnalogy: {
      const std::size_t ns = spec.layout.scalar_blocks;
      for (std::size_t m = 0; m < ns; ++m) {
        g.subject[m] = b[m] * r[m];
        g.object[m] = a[m] * r[m];
        g.relation[m] = a[m] * b[m];
      }
      for (std::size_t c = 0; c < spec.layout.complex_blocks; ++c) {
        const std::size_t p = ns + 2 * c;
        const std::size_t q = p + 1;
        const double x = r[p];
        const double y = r[q];
        g.subject[p] = x * b[p] - y * b[q];
        g.subject[q] = x * b[q] + y * b[p];
        g.object[p] = x * a[p] + y * a[q];
        g.object[q] = x * a[q] - y * a[p];
        g.relation[p] = a[p] * b[p] + a[q] * b[q];
        g.relation[q] = a[q] * b[p] - a[p] * b[q];
      }
      break;
    }
    case ModelKind::kRescal:
      RescalProjectCol(b, r, d, g.subject.data());
      RescalProjectRow(a, r, d, g.object.data());
      for (std::size_t m = 0; m < d; ++m) {
        for (std::size_t n = 0; n < d; ++n) g.relation[m * d + n] = a[m] * b[n];
      }
      break;
    case ModelKind::kTransE: {
      std::vector<double> diff(d);
      double sq = 0.0;
      for (std::size_t m = 0; m < d; ++m) {
        diff[m] = (a[m] + r[m]) - b[m];
        sq += diff[m] * diff[m];
      }
      const double norm = std::sqrt(sq);
      for (std::size_t m = 0; m < d; ++m) {
        double ds;  // d score / d diff[m]
        if (spec.norm == Norm::kL1) {
          ds = diff[m] > 0.0 ? -1.0 : (diff[m] < 0.0 ? 1.0 : 0.0);
        } else {
          ds = norm > 0.0 ? -diff[m] / norm : 0.0;
        }
        g.subject[m] = ds;
        g.relation[m] = ds;
        g.object[m] = -ds;
      }
      break;
    }
  }
  return g;
}

std::vector<double> AnalogyDenseMatrix(const ModelSpec& spec,
                                       std::span<const double> relation_row) {
  const std::size_t d = spec.dim;
  const std::size_t ns = spec.layout.scalar_blocks;
  std::vector<double> m(d * d, 0.0);
  for (std::size_t s = 0; s < ns; ++s) m[s * d + s] = relation_row[s];
  for (std::size_t c = 0; c < spec.layout.complex_blocks; ++c) {
    const std::size_t p = ns + 2 * c;
    const std::size_t q = p + 1;
    const double x = relation_row[p];
    const double y = relation_row[q];
    m[p * d + p] = x;
    m[p * d + q] = -y;
    m[q * d + p] = y;
    m[q * d + q] = x;
  }
  return m;
}

double ModelScorer::Score(EntityId subject, RelationId relation,
                          EntityId object) const {
  return kbc::Score(*params_, subject, relation, object);
}

void ModelScorer::ScoreBlock(RelationId relation, EntityRange rows,
                             EntityRange cols, std::span<double> out) const {
  const ModelParams& p = *params_;
  const std::size_t d = p.dim();
  const double* r = p.relation(relation).data();
  std::vector<double> u;
  std::size_t pos = 0;
  for (EntityId i = rows.begin; i < rows.end; ++i) {
    const double* a = p.entity(i).data();
    if (p.spec().kind == ModelKind::kRescal) {
      u.resize(d);
      RescalProjectRow(a, r, d, u.data());
      for (EntityId j = cols.begin; j < cols.end; ++j) {
        out[pos++] = Dot(u.data(), p.entity(j).data(), d);
      }
      continue;
    }
    for (EntityId j = cols.begin; j < cols.end; ++j) {
      out[pos++] = KernelScore(p, a, r, p.entity(j).data(), u);
    }
  }
}

void ModelScorer::ScoreCol(RelationId relation, EntityId object,
                           std::span<double> out) const {
  const ModelParams& p = *params_;
  if (p.spec().kind != ModelKind::kRescal) {
    Scorer::ScoreCol(relation, object, out);
    return;
  }
  const std::size_t d = p.dim();
  std::vector<double> v(d);
  RescalProjectCol(p.entity(object).data(), p.relation(relation).data(), d,
                   v.data());
  for (EntityId i = 0; i < p.num_entities(); ++i) {
    out[i] = Dot(p.entity(i).data(), v.data(), d);
  }
}

}  // namespace kbc
