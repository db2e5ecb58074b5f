#include "extremalkit/cone.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace extremalkit {

namespace {

constexpr double kRankPivotThreshold = 1e-10;

double inf_norm(const Eigen::VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

Eigen::MatrixXd generator_matrix(const Cone& cone) {
  Eigen::MatrixXd m(cone.ambient,
                    static_cast<Eigen::Index>(cone.generators.size()));
  for (std::size_t i = 0; i < cone.generators.size(); ++i) {
    m.col(static_cast<Eigen::Index>(i)) = cone.generators[i];
  }
  return m;
}

}  // namespace

Cone make_cone(int ambient, std::vector<Eigen::VectorXd> generators) {
  if (ambient < 1) {
    throw ValidationError("cone ambient dimension must be positive");
  }
  Cone cone;
  cone.ambient = ambient;
  double largest = 0.0;
  for (const auto& g : generators) {
    if (g.size() != ambient) {
      throw ValidationError("cone generator has wrong dimension");
    }
    largest = std::max(largest, inf_norm(g));
  }
  const double drop_tol = 1e-13 * std::max(1.0, largest);
  for (auto& g : generators) {
    if (inf_norm(g) <= drop_tol) {
      ++cone.dropped_zero_generators;
    } else {
      cone.generators.push_back(std::move(g));
    }
  }
  return cone;
}

int dimension(const Cone& cone) {
  if (cone.generators.empty()) return 0;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(generator_matrix(cone));
  qr.setThreshold(kRankPivotThreshold);
  return static_cast<int>(qr.rank());
}

namespace detail {

namespace {

// Tableau simplex over columns [0, n) plus artificial columns [n, n + m).
// `costs` has size n + m; entering columns are restricted to [0, limit).
// Returns false if the iteration cap is hit.
struct Tableau {
  Eigen::MatrixXd t;           // m x (n + m)
  Eigen::VectorXd rhs;         // m
  std::vector<Eigen::Index> basis;
};

bool run_simplex(Tableau& tab, const Eigen::VectorXd& costs,
                 Eigen::Index limit, bool* unbounded) {
  const Eigen::Index m = tab.t.rows();
  constexpr double kReducedCostTol = 1e-9;
  constexpr double kPivotTol = 1e-10;
  *unbounded = false;
  const long max_iters = 2000 + 200 * static_cast<long>(m + limit);
  for (long iter = 0; iter < max_iters; ++iter) {
    // Bland's entering rule: first non-basic column with negative reduced
    // cost.
    Eigen::Index entering = -1;
    for (Eigen::Index j = 0; j < limit; ++j) {
      bool basic = false;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (tab.basis[i] == j) {
          basic = true;
          break;
        }
      }
      if (basic) continue;
      double reduced = costs[j];
      for (Eigen::Index i = 0; i < m; ++i) {
        reduced -= costs[tab.basis[i]] * tab.t(i, j);
      }
      if (reduced < -kReducedCostTol) {
        entering = j;
        break;
      }
    }
    if (entering < 0) return true;  // optimal
    // Ratio test with Bland tie-breaking on the leaving basis index.
    Eigen::Index leaving = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = tab.t(i, entering);
      if (a > kPivotTol) {
        const double ratio = tab.rhs[i] / a;
        if (ratio < best_ratio - 1e-12 ||
            (ratio <= best_ratio + 1e-12 &&
             (leaving < 0 || tab.basis[i] < tab.basis[leaving]))) {
          best_ratio = ratio;
          leaving = i;
        }
      }
    }
    if (leaving < 0) {
      *unbounded = true;
      return true;
    }
    // Pivot.
    const double piv = tab.t(leaving, entering);
    tab.t.row(leaving) /= piv;
    tab.rhs[leaving] /= piv;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == leaving) continue;
      const double f = tab.t(i, entering);
      if (f != 0.0) {
        tab.t.row(i) -= f * tab.t.row(leaving);
        tab.rhs[i] -= f * tab.rhs[leaving];
      }
    }
    tab.basis[leaving] = entering;
  }
  return false;
}

}  // namespace

LpOutcome solve_lp(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                   const Eigen::VectorXd& c) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (b.size() != m || c.size() != n) {
    throw ValidationError("inconsistent linear program dimensions");
  }
  LpOutcome out;
  out.x = Eigen::VectorXd::Zero(n);
  out.duals = Eigen::VectorXd::Zero(m);
  if (m == 0) {
    out.feasible = true;
    return out;
  }

  // Scale rows to unit max-norm and flip signs so the right-hand side is
  // nonnegative; record both so the dual multipliers can be mapped back.
  Eigen::MatrixXd As = A;
  Eigen::VectorXd bs = b;
  Eigen::VectorXd row_scale(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double s = std::max(As.row(i).lpNorm<Eigen::Infinity>(), std::abs(bs[i]));
    s = std::max(s, 1e-30);
    double f = 1.0 / s;
    if (bs[i] * f < 0.0) f = -f;
    As.row(i) *= f;
    bs[i] *= f;
    row_scale[i] = f;
  }

  Tableau tab;
  tab.t.resize(m, n + m);
  tab.t << As, Eigen::MatrixXd::Identity(m, m);
  tab.rhs = bs;
  tab.basis.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) tab.basis[i] = n + i;

  // Phase 1: minimize the artificial total.
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.segment(n, m).setOnes();
  bool unbounded = false;
  if (!run_simplex(tab, phase1, n + m, &unbounded)) {
    throw NumericalError("simplex iteration limit exceeded");
  }
  double infeas = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis[i] >= n) infeas += tab.rhs[i];
  }
  out.infeasibility = infeas;
  out.feasible = infeas <= 1e-8;

  if (out.feasible) {
    // Drive degenerate artificials out of the basis so phase-2 pivots cannot
    // resurrect them; rows with no original-column entry are inert.
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab.basis[i] < n) continue;
      Eigen::Index col = -1;
      for (Eigen::Index j = 0; j < n; ++j) {
        bool basic = false;
        for (Eigen::Index k = 0; k < m; ++k) {
          if (tab.basis[k] == j) {
            basic = true;
            break;
          }
        }
        if (!basic && std::abs(tab.t(i, j)) > 1e-10) {
          col = j;
          break;
        }
      }
      if (col < 0) continue;
      const double piv = tab.t(i, col);
      tab.t.row(i) /= piv;
      tab.rhs[i] /= piv;
      for (Eigen::Index k = 0; k < m; ++k) {
        if (k == i) continue;
        const double f = tab.t(k, col);
        if (f != 0.0) {
          tab.t.row(k) -= f * tab.t.row(i);
          tab.rhs[k] -= f * tab.rhs[i];
        }
      }
      tab.basis[i] = col;
    }
  }

  // Phase 2: original objective; artificial columns may stay basic at zero
  // but are never allowed to enter.
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.segment(0, n) = c;
  if (out.feasible) {
    if (!run_simplex(tab, phase2, n, &unbounded)) {
      throw NumericalError("simplex iteration limit exceeded");
    }
    out.bounded = !unbounded;
  }

  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis[i] < n) out.x[tab.basis[i]] = tab.rhs[i];
  }
  out.objective = out.bounded ? c.dot(out.x)
                              : -std::numeric_limits<double>::infinity();
  // Dual multipliers: y = c_B^T B^{-1}, read from the artificial block and
  // mapped back through the row scaling.
  for (Eigen::Index j = 0; j < m; ++j) {
    double yj = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      yj += phase2[tab.basis[i]] * tab.t(i, n + j);
    }
    out.duals[j] = yj * row_scale[j];
  }
  return out;
}

}  // namespace detail

bool contains(const Cone& cone, const Eigen::VectorXd& v) {
  if (v.size() != cone.ambient) {
    throw ValidationError("membership probe has wrong dimension");
  }
  const double tol = 1e-9 * (1.0 + inf_norm(v));
  if (cone.generators.empty()) return inf_norm(v) <= tol;
  const Eigen::MatrixXd g = generator_matrix(cone);
  const Eigen::VectorXd c =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cone.generators.size()));
  detail::LpOutcome lp = detail::solve_lp(g, v, c);
  const double residual = inf_norm(g * lp.x - v);
  return residual <= tol;
}

std::optional<Eigen::VectorXd> separating_covector(const Cone& cone,
                                                   const Eigen::VectorXd& v) {
  const Eigen::Index n = cone.ambient;
  if (v.size() != n) {
    throw ValidationError("separation probe has wrong dimension");
  }
  const auto s = static_cast<Eigen::Index>(cone.generators.size());
  // max <v, eta> over { G^T eta <= 0, |eta|_inf <= 1 }, solved through its
  // dual: min 1^T(p + q) over { G lam + p - q = v, lam, p, q >= 0 }, whose
  // row multipliers recover eta.
  Eigen::MatrixXd A(n, s + 2 * n);
  for (Eigen::Index i = 0; i < s; ++i) A.col(i) = cone.generators[i];
  A.block(0, s, n, n) = Eigen::MatrixXd::Identity(n, n);
  A.block(0, s + n, n, n) = -Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(s + 2 * n);
  c.segment(s, 2 * n).setOnes();
  detail::LpOutcome lp = detail::solve_lp(A, v, c);
  if (!lp.feasible || !lp.bounded) {
    throw NumericalError("support problem did not solve");
  }
  const double gap = 1e-9 * (1.0 + inf_norm(v));
  if (lp.objective <= gap) return std::nullopt;
  Eigen::VectorXd eta = lp.duals;
  const double scale = inf_norm(eta);
  if (scale <= 1e-12) return std::nullopt;
  eta /= scale;
  return eta;
}

std::optional<Eigen::VectorXd> separating_covector(const Cone& cone) {
  const Eigen::Index n = cone.ambient;
  if (cone.generators.empty()) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[0] = 1.0;
    return e;
  }
  const int rank = dimension(cone);
  if (rank < n) {
    // Any direction orthogonal to the span works.
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(generator_matrix(cone),
                                          Eigen::ComputeFullU);
    Eigen::VectorXd eta = svd.matrixU().col(n - 1);
    eta /= inf_norm(eta);
    return eta;
  }
  // Full-dimensional: the closure is all of space exactly when every signed
  // axis direction already belongs to it.
  for (Eigen::Index j = 0; j < n; ++j) {
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd probe = Eigen::VectorXd::Zero(n);
      probe[j] = sign;
      if (!contains(cone, probe)) {
        auto eta = separating_covector(cone, probe);
        if (eta) return eta;
      }
    }
  }
  return std::nullopt;
}

bool in_interior(const Cone& cone, const Eigen::VectorXd& v) {
  const Eigen::Index n = cone.ambient;
  if (v.size() != n) {
    throw ValidationError("interior probe has wrong dimension");
  }
  if (dimension(cone) < n) return false;
  double scale = std::max(1.0, inf_norm(v));
  for (const auto& g : cone.generators) {
    scale = std::max(scale, inf_norm(g));
  }
  const double delta = 1e-6 * scale;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd probe = v;
      probe[j] += sign * delta;
      if (!contains(cone, probe)) return false;
    }
  }
  return true;
}

namespace {

struct DdVertex {
  Eigen::VectorXd p;
  std::vector<char> tight;  // one flag per stored constraint
};

}  // namespace

std::vector<Eigen::VectorXd> dual_rays(const Cone& cone) {
  const int n = cone.ambient;
  if (n > 8) {
    throw ValidationError("dual ray enumeration supports at most 8 dimensions");
  }
  constexpr double kTightTol = 1e-9;

  // Normalized, deduplicated constraint directions <g, eta> <= 0.
  std::vector<Eigen::VectorXd> dirs;
  for (const auto& g : cone.generators) {
    Eigen::VectorXd gn = g / inf_norm(g);
    bool dup = false;
    for (const auto& d : dirs) {
      if (inf_norm(d - gn) <= 1e-12) {
        dup = true;
        break;
      }
    }
    if (!dup) dirs.push_back(std::move(gn));
  }
  std::sort(dirs.begin(), dirs.end(), lex_less);

  // Stored constraints: normals with right-hand sides. The first 2n describe
  // the unit box |eta_j| <= 1; cone constraints have right-hand side 0 and
  // are stored only when they actually cut.
  std::vector<Eigen::VectorXd> normals;
  std::vector<double> sides;
  for (int j = 0; j < n; ++j) {
    for (double sign : {1.0, -1.0}) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[j] = sign;
      normals.push_back(e);
      sides.push_back(1.0);
    }
  }

  std::vector<DdVertex> verts;
  verts.reserve(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    DdVertex v;
    v.p.resize(n);
    v.tight.assign(normals.size(), 0);
    for (int j = 0; j < n; ++j) {
      const bool plus = (mask >> j) & 1u;
      v.p[j] = plus ? 1.0 : -1.0;
      v.tight[2 * j] = plus ? 1 : 0;
      v.tight[2 * j + 1] = plus ? 0 : 1;
    }
    verts.push_back(std::move(v));
  }

  const auto recompute_tight = [&](const Eigen::VectorXd& p) {
    std::vector<char> t(normals.size());
    for (std::size_t c = 0; c < normals.size(); ++c) {
      t[c] = std::abs(normals[c].dot(p) - sides[c]) <= kTightTol ? 1 : 0;
    }
    return t;
  };

  // Two vertices are adjacent when their shared tight constraints pin down a
  // one-dimensional face, i.e. the common normals have rank n - 1.
  const auto adjacent = [&](const DdVertex& a, const DdVertex& b) {
    std::vector<std::size_t> common;
    for (std::size_t c = 0; c < a.tight.size(); ++c) {
      if (a.tight[c] && b.tight[c]) common.push_back(c);
    }
    if (static_cast<int>(common.size()) < n - 1) return false;
    Eigen::MatrixXd m(n, static_cast<Eigen::Index>(common.size()));
    for (std::size_t i = 0; i < common.size(); ++i) {
      m.col(static_cast<Eigen::Index>(i)) = normals[common[i]];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(1e-9);
    return qr.rank() == n - 1;
  };

  for (const auto& g : dirs) {
    std::vector<double> vals(verts.size());
    bool any_out = false;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      vals[i] = g.dot(verts[i].p);
      if (vals[i] > kTightTol) any_out = true;
    }
    if (!any_out) continue;  // redundant against the current polytope

    normals.push_back(g);
    sides.push_back(0.0);
    for (std::size_t i = 0; i < verts.size(); ++i) {
      verts[i].tight.push_back(std::abs(vals[i]) <= kTightTol ? 1 : 0);
    }

    std::vector<std::size_t> ins, outs;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      if (vals[i] > kTightTol) {
        outs.push_back(i);
      } else if (vals[i] < -kTightTol) {
        ins.push_back(i);
      }
    }

    std::vector<DdVertex> fresh;
    for (std::size_t u : ins) {
      for (std::size_t w : outs) {
        if (!adjacent(verts[u], verts[w])) continue;
        const double du = vals[u];
        const double dw = vals[w];
        Eigen::VectorXd p = (dw * verts[u].p - du * verts[w].p) / (dw - du);
        fresh.push_back(DdVertex{p, {}});
      }
    }

    std::vector<DdVertex> kept;
    for (std::size_t i = 0; i < verts.size(); ++i) {
      if (vals[i] <= kTightTol) kept.push_back(std::move(verts[i]));
    }
    for (auto& f : fresh) {
      bool dup = false;
      for (const auto& k : kept) {
        if (inf_norm(k.p - f.p) <= 1e-9) {
          dup = true;
          break;
        }
      }
      if (dup) continue;
      f.tight = recompute_tight(f.p);
      kept.push_back(std::move(f));
    }
    verts = std::move(kept);
    if (verts.size() > 200000) {
      throw NumericalError("dual ray enumeration exploded");
    }
  }

  // Nonzero vertices, normalized, deduplicated, in lexicographic order.
  std::vector<Eigen::VectorXd> cands;
  for (const auto& v : verts) {
    const double norm = inf_norm(v.p);
    if (norm <= 0.5) continue;
    Eigen::VectorXd r = v.p / norm;
    bool dup = false;
    for (const auto& c : cands) {
      if (inf_norm(c - r) <= 1e-9) {
        dup = true;
        break;
      }
    }
    if (!dup) cands.push_back(std::move(r));
  }
  std::sort(cands.begin(), cands.end(), lex_less);

  // Minimal generating set: drop any ray already generated by the others.
  std::size_t i = 0;
  while (i < cands.size()) {
    std::vector<Eigen::VectorXd> others;
    others.reserve(cands.size() - 1);
    for (std::size_t j = 0; j < cands.size(); ++j) {
      if (j != i) others.push_back(cands[j]);
    }
    if (!others.empty() && contains(make_cone(n, others), cands[i])) {
      cands.erase(cands.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  return cands;
}

}  // namespace extremalkit
