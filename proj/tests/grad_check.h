#ifndef KBC_TESTS_GRAD_CHECK_H_
#define KBC_TESTS_GRAD_CHECK_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kbc/model.h"
#include "kbc/training.h"

namespace kbc::testing {

struct GradCheckStats {
  std::size_t checked = 0;
  std::size_t skipped = 0;  // coordinates at a kink of the function
  std::size_t failures = 0;
  double worst = 0.0;  // largest |analytic - numeric| / max(1, |a|, |n|)
  std::string first_failure;

  void Add(const GradCheckStats& o) {
    checked += o.checked;
    skipped += o.skipped;
    failures += o.failures;
    worst = std::max(worst, o.worst);
    if (first_failure.empty()) first_failure = o.first_failure;
  }
};

inline double RelativeGap(double a, double n) {
  return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
}

inline void Compare(GradCheckStats& st, double analytic, double numeric,
                    double tol, const std::string& where) {
  ++st.checked;
  const double gap = RelativeGap(analytic, numeric);
  st.worst = std::max(st.worst, gap);
  if (!(gap <= tol)) {
    ++st.failures;
    if (st.first_failure.empty()) {
      st.first_failure = where + ": analytic " + std::to_string(analytic) +
                         " numeric " + std::to_string(numeric);
    }
  }
}

// Central difference of f with respect to one stored value.
inline double CentralDifference(double& value, double h,
                                const std::function<double()>& f) {
  const double saved = value;
  value = saved + h;
  const double plus = f();
  value = saved - h;
  const double minus = f();
  value = saved;
  return (plus - minus) / (2.0 * h);
}

// Checks ScoreGradients on one triple. For TransE with the L1 norm,
// coordinates whose translation residual lies within h of zero are skipped:
// the central difference straddles the kink there.
inline GradCheckStats CheckScoreGradient(ModelParams& p, EntityId i,
                                         RelationId k, EntityId j,
                                         double h = 1e-4, double tol = 1e-4) {
  GradCheckStats st;
  const ScoreGradient g = ScoreGradients(p, i, k, j);
  auto f = [&] { return Score(p, i, k, j); };
  const bool l1 =
      p.spec().kind == ModelKind::kTransE && p.spec().norm == Norm::kL1;
  auto near_kink = [&](std::size_t m) {
    if (!l1) return false;
    const double r = p.entity(i)[m] + p.relation(k)[m] - p.entity(j)[m];
    return std::abs(r) <= h;
  };
  const std::string name(ModelKindName(p.spec().kind));
  auto subject = p.entity(i);
  for (std::size_t m = 0; m < subject.size(); ++m) {
    if (near_kink(m)) {
      ++st.skipped;
      continue;
    }
    const double analytic = i == j ? g.subject[m] + g.object[m] : g.subject[m];
    Compare(st, analytic, CentralDifference(subject[m], h, f), tol,
            name + " subject[" + std::to_string(m) + "]");
  }
  auto relation = p.relation(k);
  for (std::size_t m = 0; m < relation.size(); ++m) {
    if (near_kink(m)) {
      ++st.skipped;
      continue;
    }
    Compare(st, g.relation[m], CentralDifference(relation[m], h, f), tol,
            name + " relation[" + std::to_string(m) + "]");
  }
  if (i != j) {
    auto object = p.entity(j);
    for (std::size_t m = 0; m < object.size(); ++m) {
      if (near_kink(m)) {
        ++st.skipped;
        continue;
      }
      Compare(st, g.object[m], CentralDifference(object[m], h, f), tol,
              name + " object[" + std::to_string(m) + "]");
    }
  }
  return st;
}

// Checks LossAndGradients over every touched row. A coordinate is skipped when
// the two one-sided differences disagree, which happens only when a hinge or
// an L1 kink lies within h of the point.
inline GradCheckStats CheckLossGradient(ModelParams& p, const Triple& pos,
                                        const std::vector<Triple>& negs,
                                        LossKind loss, double margin, double l2,
                                        double h = 1e-4, double tol = 1e-4) {
  GradCheckStats st;
  const LossResult base = LossAndGradients(p, pos, negs, loss, margin, l2);
  auto f = [&] { return LossAndGradients(p, pos, negs, loss, margin, l2).loss; };
  auto check = [&](std::span<double> row, std::span<const double> grad,
                   const std::string& where) {
    for (std::size_t m = 0; m < row.size(); ++m) {
      const double saved = row[m];
      const double f0 = f();
      row[m] = saved + h;
      const double fp = f();
      row[m] = saved - h;
      const double fm = f();
      row[m] = saved;
      const double forward = (fp - f0) / h;
      const double backward = (f0 - fm) / h;
      if (RelativeGap(forward, backward) > 1e-2) {
        ++st.skipped;
        continue;
      }
      Compare(st, grad[m], (fp - fm) / (2.0 * h), tol,
              where + "[" + std::to_string(m) + "]");
    }
  };
  const SparseGradient& g = base.gradient;
  for (std::size_t s = 0; s < g.entity_ids().size(); ++s) {
    check(p.entity(g.entity_ids()[s]), g.entity_row(s),
          "entity " + std::to_string(g.entity_ids()[s]));
  }
  for (std::size_t s = 0; s < g.relation_ids().size(); ++s) {
    check(p.relation(g.relation_ids()[s]), g.relation_row(s),
          "relation " + std::to_string(g.relation_ids()[s]));
  }
  return st;
}

inline ModelParams RandomParams(ModelKind kind, std::size_t dim,
                                std::size_t ne, std::size_t nr,
                                std::uint64_t seed, Norm norm = Norm::kL2) {
  ModelSpec spec = ModelSpec::Make(kind, dim);
  spec.norm = norm;
  return ModelParams::Init(spec, ne, nr, seed, 1.5);
}

}  // namespace kbc::testing

#endif  // KBC_TESTS_GRAD_CHECK_H_
