#pragma once

// Discrete optimal transport between weighted point clouds: exact assignment
// solves, dense log-domain entropic solves, barycentric map extraction, and
// the transport-covariant affine change of variables.

#include <map>
#include <unordered_map>

#include "otlab/geometry.hpp"

namespace otlab {

template <int D>
struct WeightedPoints {
  std::vector<Vec<D>> pts;
  std::vector<double> w;

  size_t size() const { return pts.size(); }
  double total() const { return std::accumulate(w.begin(), w.end(), 0.0); }
  void push(const Vec<D>& p, double mass) {
    pts.push_back(p);
    w.push_back(mass);
  }
};

template <int D>
struct PlanAtom {
  Vec<D> x0, x1;
  double mass;
};

template <int D>
struct TransportPlan {
  std::vector<PlanAtom<D>> atoms;
  double reg = 0;                 // entropic regularization (0: exact plan)
  double marginal_err = 0;        // relative marginal residual from the solver
  double monotonicity_tol() const { return reg == 0 ? 1e-9 : 10 * reg; }

  double cost() const {
    double c = 0;
    for (const auto& a : atoms) c += a.mass * (a.x1 - a.x0).squaredNorm();
    return c;
  }
  double total_mass() const {
    double m = 0;
    for (const auto& a : atoms) m += a.mass;
    return m;
  }

  // Min of (y1-x1).(y0-x0) over sampled support pair-pairs.
  double monotonicity_min(int samples = 100000, uint64_t seed = 2024) const {
    if (atoms.size() < 2) return 0;
    Rng rng(seed);
    double mn = 1e300;
    for (int s = 0; s < samples; ++s) {
      const auto& a = atoms[rng.uniform_int(0, (int)atoms.size() - 1)];
      const auto& b = atoms[rng.uniform_int(0, (int)atoms.size() - 1)];
      mn = std::min(mn, (b.x1 - a.x1).dot(b.x0 - a.x0));
    }
    return mn;
  }
};

// Max relative marginal error of a plan against its endpoint measures,
// matching support points bit-exactly.
template <int D>
double marginal_error(const TransportPlan<D>& plan, const WeightedPoints<D>& src, const WeightedPoints<D>& tgt) {
  auto key = [](const Vec<D>& p) {
    std::string k((const char*)p.data(), sizeof(double) * D);
    return k;
  };
  std::unordered_map<std::string, double> m0, m1;
  for (const auto& a : plan.atoms) {
    m0[key(a.x0)] += a.mass;
    m1[key(a.x1)] += a.mass;
  }
  double scale = src.total();
  double err = 0;
  for (size_t i = 0; i < src.size(); ++i) err = std::max(err, std::abs(m0[key(src.pts[i])] - src.w[i]) / scale);
  for (size_t j = 0; j < tgt.size(); ++j) err = std::max(err, std::abs(m1[key(tgt.pts[j])] - tgt.w[j]) / scale);
  return err;
}

// ---------------------------------------------------------------------------
// Exact assignment solver: shortest augmenting paths with dual potentials
// (dense, matrix-free). cost(i, j) must be finite and non-negative-ish.

template <class CostFn>
std::vector<int> solve_assignment(int n, const CostFn& cost) {
  const double INF = 1e300;
  std::vector<double> u(n), v(n);
  std::vector<int> rowsol(n, -1), colsol(n, -1);

  // Row/column reduction with a greedy zero pass.
  for (int i = 0; i < n; ++i) {
    double mn = INF;
    for (int j = 0; j < n; ++j) mn = std::min(mn, cost(i, j));
    u[i] = mn;
  }
  for (int j = 0; j < n; ++j) {
    double mn = INF;
    for (int i = 0; i < n; ++i) mn = std::min(mn, cost(i, j) - u[i]);
    v[j] = mn;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (colsol[j] >= 0) continue;
      if ((cost(i, j) - u[i]) - v[j] <= 0) {
        rowsol[i] = j;
        colsol[j] = i;
        break;
      }
    }

  std::vector<double> dist(n);
  std::vector<int> pred(n);
  std::vector<char> done(n);
  for (int r = 0; r < n; ++r) {
    if (rowsol[r] >= 0) continue;
    // Dijkstra over reduced costs from free row r to some free column.
    for (int j = 0; j < n; ++j) {
      dist[j] = (cost(r, j) - u[r]) - v[j];
      pred[j] = r;
      done[j] = 0;
    }
    int sink = -1;
    double sink_dist = 0;
    while (sink < 0) {
      int jmin = -1;
      double dmin = INF;
      for (int j = 0; j < n; ++j)
        if (!done[j] && dist[j] < dmin) {
          dmin = dist[j];
          jmin = j;
        }
      require(jmin >= 0, errc::convergence, "assignment: no augmenting path");
      done[jmin] = 1;
      if (colsol[jmin] < 0) {
        sink = jmin;
        sink_dist = dmin;
        break;
      }
      int i = colsol[jmin];
      for (int j = 0; j < n; ++j) {
        if (done[j]) continue;
        double nd = dmin + ((cost(i, j) - u[i]) - v[j]) - ((cost(i, jmin) - u[i]) - v[jmin]);
        if (nd < dist[j]) {
          dist[j] = nd;
          pred[j] = i;
        }
      }
    }
    for (int j = 0; j < n; ++j)
      if (done[j] && j != sink) v[j] += dist[j] - sink_dist;
    u[r] += sink_dist;
    // Augment along the predecessor chain.
    int j = sink;
    while (true) {
      int i = pred[j];
      colsol[j] = i;
      int jnext = rowsol[i];
      rowsol[i] = j;
      if (i == r) break;
      j = jnext;
    }
  }
  return rowsol;
}

inline long lcm_long(long a, long b) { return a / std::gcd(a, b) * b; }

// Exact quadratic-cost plan between equal-total-mass clouds of uniform
// per-point weights. Unequal counts are handled by least-common-multiple
// splitting.
template <int D>
TransportPlan<D> solve_exact(const WeightedPoints<D>& src, const WeightedPoints<D>& tgt,
                             long pair_cap = 4000000) {
  require(src.size() > 0 && tgt.size() > 0, errc::precondition, "solve_exact: empty input");
  double t0 = src.total(), t1 = tgt.total();
  require(std::abs(t0 - t1) <= 1e-9 * std::max(t0, t1), errc::imbalance,
          "solve_exact: total masses differ beyond 1e-9");
  auto uniform = [](const WeightedPoints<D>& p) {
    double w0 = p.w[0];
    for (double w : p.w)
      if (std::abs(w - w0) > 1e-12 * std::abs(w0)) return false;
    return true;
  };
  require(uniform(src) && uniform(tgt), errc::precondition, "solve_exact: per-side weights must be uniform");
  long n0 = (long)src.size(), n1 = (long)tgt.size();
  require(n0 * n1 <= pair_cap, errc::size, "solve_exact: pair count exceeds cap");

  long L = lcm_long(n0, n1);
  long k0 = L / n0, k1 = L / n1;
  require(L * L <= std::max(pair_cap, n0 * n1), errc::size, "solve_exact: lcm splitting exceeds cap");

  std::vector<int> map0(L), map1(L);
  for (long i = 0; i < L; ++i) map0[i] = int(i / k0);
  for (long j = 0; j < L; ++j) map1[j] = int(j / k1);
  auto cost = [&](int i, int j) { return (tgt.pts[map1[j]] - src.pts[map0[i]]).squaredNorm(); };
  std::vector<int> rowsol = solve_assignment((int)L, cost);

  double unit = t0 / double(L);
  std::map<std::pair<int, int>, double> merged;
  for (long i = 0; i < L; ++i) merged[{map0[i], map1[rowsol[i]]}] += unit;
  TransportPlan<D> plan;
  plan.atoms.reserve(merged.size());
  for (const auto& [key, mass] : merged) plan.atoms.push_back({src.pts[key.first], tgt.pts[key.second], mass});
  plan.marginal_err = 0;  // assignment output is exact by construction
  return plan;
}

// ---------------------------------------------------------------------------
// Entropic solver (dense, log-domain, geometric annealing)

struct AnnealSpec {
  double start_factor = 0.25;  // reg0 = start_factor * max squared distance
  double decay = 0.7;
  int iters_per_level = 4;
  int polish_iters = 400;
  double marginal_tol = 1e-6;
};

namespace detail {
inline double lse(const std::vector<double>& terms) {
  double m = -1e300;
  for (double t : terms) m = std::max(m, t);
  if (m <= -1e299) return -1e300;
  double s = 0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}
}  // namespace detail

template <int D>
TransportPlan<D> solve_entropic(const WeightedPoints<D>& src, const WeightedPoints<D>& tgt, double reg_final,
                                const AnnealSpec& spec = {}) {
  require(reg_final > 0, errc::precondition, "solve_entropic: reg must be positive");
  double t0 = src.total(), t1 = tgt.total();
  require(std::abs(t0 - t1) <= 1e-9 * std::max(t0, t1), errc::imbalance,
          "solve_entropic: total masses differ beyond 1e-9");
  int n0 = (int)src.size(), n1 = (int)tgt.size();
  std::vector<double> lw0(n0), lw1(n1);
  for (int i = 0; i < n0; ++i) lw0[i] = std::log(src.w[i]);
  for (int j = 0; j < n1; ++j) lw1[j] = std::log(tgt.w[j]);

  double cmax = 0;
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) cmax = std::max(cmax, (tgt.pts[j] - src.pts[i]).squaredNorm());
  cmax = std::max(cmax, reg_final);

  std::vector<double> f(n0, 0), g(n1, 0), terms;
  auto update_g = [&](double reg) {
    for (int j = 0; j < n1; ++j) {
      terms.clear();
      for (int i = 0; i < n0; ++i)
        terms.push_back(lw0[i] + (f[i] - (tgt.pts[j] - src.pts[i]).squaredNorm()) / reg);
      g[j] = -reg * detail::lse(terms);
    }
  };
  auto update_f = [&](double reg) {
    for (int i = 0; i < n0; ++i) {
      terms.clear();
      for (int j = 0; j < n1; ++j)
        terms.push_back(lw1[j] + (g[j] - (tgt.pts[j] - src.pts[i]).squaredNorm()) / reg);
      f[i] = -reg * detail::lse(terms);
    }
  };
  // Residual of the nu marginal given the current duals (f-update makes the
  // mu marginal exact).
  auto nu_residual = [&](double reg) {
    double err = 0;
    for (int j = 0; j < n1; ++j) {
      terms.clear();
      for (int i = 0; i < n0; ++i)
        terms.push_back(lw0[i] + (f[i] - (tgt.pts[j] - src.pts[i]).squaredNorm()) / reg);
      double gnew = -reg * detail::lse(terms);
      err += tgt.w[j] * std::abs(std::expm1((g[j] - gnew) / reg));
    }
    return err / t1;
  };

  double reg = spec.start_factor * cmax;
  std::vector<double> levels;
  while (reg > reg_final) {
    levels.push_back(reg);
    reg *= spec.decay;
  }
  levels.push_back(reg_final);
  for (double r : levels)
    for (int it = 0; it < spec.iters_per_level; ++it) {
      update_g(r);
      update_f(r);
    }
  double err = 1;
  int it = 0;
  for (; it < spec.polish_iters; ++it) {
    update_g(reg_final);
    update_f(reg_final);
    if (it % 5 == 4) {
      err = nu_residual(reg_final);
      if (err <= spec.marginal_tol) break;
    }
  }
  err = nu_residual(reg_final);
  require(err <= std::max(spec.marginal_tol, 1e-3), errc::convergence,
          "solve_entropic: marginal residual " + format_double(err) + " after polish");

  // Round the coupling onto the marginal polytope: scale rows and columns
  // down to their targets, then fill the (tiny) deficit with a rank-one term.
  std::vector<double> pi((size_t)n0 * n1);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j)
      pi[(size_t)i * n1 + j] =
          std::exp(lw0[i] + lw1[j] + (f[i] + g[j] - (tgt.pts[j] - src.pts[i]).squaredNorm()) / reg_final);
  std::vector<double> rs(n0, 0), cs(n1, 0);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) rs[i] += pi[(size_t)i * n1 + j];
  for (int i = 0; i < n0; ++i) {
    double s = rs[i] > src.w[i] ? src.w[i] / rs[i] : 1.0;
    for (int j = 0; j < n1; ++j) pi[(size_t)i * n1 + j] *= s;
  }
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) cs[j] += pi[(size_t)i * n1 + j];
  for (int j = 0; j < n1; ++j) {
    double s = cs[j] > tgt.w[j] ? tgt.w[j] / cs[j] : 1.0;
    if (s < 1.0)
      for (int i = 0; i < n0; ++i) pi[(size_t)i * n1 + j] *= s;
  }
  std::vector<double> dr(n0, 0), dc(n1, 0);
  double deficit = 0;
  std::fill(rs.begin(), rs.end(), 0.0);
  std::fill(cs.begin(), cs.end(), 0.0);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      rs[i] += pi[(size_t)i * n1 + j];
      cs[j] += pi[(size_t)i * n1 + j];
    }
  for (int i = 0; i < n0; ++i) {
    dr[i] = std::max(0.0, src.w[i] - rs[i]);
    deficit += dr[i];
  }
  for (int j = 0; j < n1; ++j) dc[j] = std::max(0.0, tgt.w[j] - cs[j]);
  if (deficit > 0)
    for (int i = 0; i < n0; ++i) {
      if (dr[i] == 0) continue;
      for (int j = 0; j < n1; ++j) pi[(size_t)i * n1 + j] += dr[i] * dc[j] / deficit;
    }

  TransportPlan<D> plan;
  plan.reg = reg_final;
  double thresh = 1e-15 * t0 / double(n0);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j) {
      double m = pi[(size_t)i * n1 + j];
      if (m > thresh) plan.atoms.push_back({src.pts[i], tgt.pts[j], m});
    }
  plan.marginal_err = marginal_error(plan, src, tgt);
  require(plan.marginal_err <= spec.marginal_tol, errc::convergence,
          "solve_entropic: marginal residual " + format_double(plan.marginal_err) + " after rounding");
  return plan;
}

// ---------------------------------------------------------------------------
// Map fields

template <int D>
struct MapField {
  GridSpec<D> grid;
  std::vector<Vec<D>> disp;    // displacement T - id at cell centers
  std::vector<uint8_t> valid;
  double h() const { return grid.max_h(); }

  bool valid_at(const std::array<int, D>& idx) const { return grid.in_range(idx) && valid[grid.flat(idx)]; }

  // Mass-weighted bilinear interpolation over the valid surrounding cells.
  bool interpolate(const Vec<D>& x, Vec<D>& out) const {
    std::array<int, D> base{};
    std::array<double, D> frac{};
    for (int a = 0; a < D; ++a) {
      double t = (x[a] - grid.box.lo[a]) / grid.h(a) - 0.5;
      double fl = std::floor(t);
      base[a] = (int)fl;
      frac[a] = t - fl;
    }
    Vec<D> acc = Vec<D>::Zero();
    double wsum = 0;
    for (long corner = 0; corner < (1L << D); ++corner) {
      std::array<int, D> idx = base;
      double w = 1;
      for (int a = 0; a < D; ++a) {
        int bit = (corner >> a) & 1;
        idx[a] += bit;
        w *= bit ? frac[a] : 1 - frac[a];
      }
      if (w <= 0 || !grid.in_range(idx)) continue;
      long fidx = grid.flat(idx);
      if (!valid[fidx]) continue;
      acc += w * disp[fidx];
      wsum += w;
    }
    if (wsum < 1e-12) return false;
    out = acc / wsum;
    return true;
  }

  // Finite-difference gradient of T = id + disp at a cell, using central
  // differences where both neighbors are valid, one-sided otherwise.
  bool gradient(const std::array<int, D>& idx, Mat<D>& out) const {
    if (!valid_at(idx)) return false;
    for (int a = 0; a < D; ++a) {
      std::array<int, D> ip = idx, im = idx;
      ip[a] += 1;
      im[a] -= 1;
      bool vp = valid_at(ip), vm = valid_at(im);
      Vec<D> diff;
      double denom;
      if (vp && vm) {
        diff = disp[grid.flat(ip)] - disp[grid.flat(im)];
        denom = 2 * grid.h(a);
      } else if (vp) {
        diff = disp[grid.flat(ip)] - disp[grid.flat(idx)];
        denom = grid.h(a);
      } else if (vm) {
        diff = disp[grid.flat(idx)] - disp[grid.flat(im)];
        denom = grid.h(a);
      } else {
        return false;
      }
      for (int r = 0; r < D; ++r) out(r, a) = diff[r] / denom + (r == a ? 1.0 : 0.0);
    }
    return true;
  }

  // Max norm of the antisymmetric part of grad T over interior valid cells
  // (T should be a gradient field, so this measures curl + solver noise).
  double curl_residual() const {
    double worst = 0;
    for (long fidx = 0; fidx < grid.cells(); ++fidx) {
      auto idx = grid.unflat(fidx);
      bool interior = true;
      for (int a = 0; a < D && interior; ++a) {
        auto ip = idx, im = idx;
        ip[a] += 1;
        im[a] -= 1;
        interior = valid_at(ip) && valid_at(im);
      }
      if (!interior) continue;
      Mat<D> G;
      if (!gradient(idx, G)) continue;
      worst = std::max(worst, (G - G.transpose()).norm() / 2);
    }
    return worst;
  }
};

// Barycentric projection of the plan conditional onto a grid over the source.
template <int D>
MapField<D> extract_map(const TransportPlan<D>& plan, const GridSpec<D>& grid,
                        const std::function<bool(const Vec<D>&)>& inside = nullptr,
                        double max_empty_fraction = 1.0) {
  MapField<D> mf;
  mf.grid = grid;
  mf.disp.assign(grid.cells(), Vec<D>::Zero());
  mf.valid.assign(grid.cells(), 0);
  std::vector<double> mass(grid.cells(), 0);
  std::vector<Vec<D>> acc(grid.cells(), Vec<D>::Zero());
  for (const auto& a : plan.atoms) {
    std::array<int, D> idx;
    if (!grid.locate(a.x0, idx)) continue;
    long f = grid.flat(idx);
    mass[f] += a.mass;
    acc[f] += a.mass * (a.x1 - a.x0);
  }
  long relevant = 0, empty = 0;
  for (long f = 0; f < grid.cells(); ++f) {
    if (mass[f] > 0) {
      mf.disp[f] = acc[f] / mass[f];
      mf.valid[f] = 1;
    }
    bool expected = !inside || inside(grid.center(f));
    if (expected) {
      ++relevant;
      if (mass[f] <= 0) ++empty;
    }
  }
  if (relevant > 0)
    require(double(empty) / double(relevant) <= max_empty_fraction, errc::coverage,
            "extract_map: empty-cell fraction " + format_double(double(empty) / double(relevant)));
  return mf;
}

template <int D>
TransportPlan<D> reversed(const TransportPlan<D>& plan) {
  TransportPlan<D> r = plan;
  for (auto& a : r.atoms) std::swap(a.x0, a.x1);
  return r;
}

template <int D>
MapField<D> inverse_map(const TransportPlan<D>& plan, const GridSpec<D>& grid,
                        const std::function<bool(const Vec<D>&)>& inside = nullptr,
                        double max_empty_fraction = 1.0) {
  return extract_map(reversed(plan), grid, inside, max_empty_fraction);
}

// ---------------------------------------------------------------------------
// Affine change of variables (transport-covariant)

template <int D>
struct AffineChange {
  Mat<D> B = Mat<D>::Identity();
  Vec<D> b = Vec<D>::Zero();

  double lambda_factor() const { return 1.0 / sq(std::abs(B.determinant())); }
  void check_invertible() const {
    require(std::abs(B.determinant()) > 1e-12, errc::singular_matrix, "affine change: singular matrix");
  }
  Vec<D> fwd_src(const Vec<D>& x) const { return B.transpose().inverse() * x; }
  Vec<D> fwd_tgt(const Vec<D>& x) const { return B * (x - b); }
};

template <int D>
TransportPlan<D> apply_affine(const TransportPlan<D>& plan, const AffineChange<D>& change) {
  change.check_invertible();
  Mat<D> Bmt = change.B.transpose().inverse();
  TransportPlan<D> out = plan;
  for (auto& a : out.atoms) {
    a.x0 = Bmt * a.x0;
    a.x1 = change.B * (a.x1 - change.b);
  }
  return out;
}

template <int D>
MapField<D> apply_affine(const MapField<D>& map, const AffineChange<D>& change) {
  change.check_invertible();
  Mat<D> Bmt = change.B.transpose().inverse();
  MapField<D> out;
  // New grid: axis-aligned bounding box of the transformed window.
  Vec<D> lo = Vec<D>::Constant(1e300), hi = Vec<D>::Constant(-1e300);
  for (long corner = 0; corner < (1L << D); ++corner) {
    Vec<D> c;
    for (int a = 0; a < D; ++a) c[a] = (corner >> a) & 1 ? map.grid.box.hi[a] : map.grid.box.lo[a];
    Vec<D> q = Bmt * c;
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  out.grid.box.lo = lo;
  out.grid.box.hi = hi;
  out.grid.n = map.grid.n;
  out.disp.assign(out.grid.cells(), Vec<D>::Zero());
  out.valid.assign(out.grid.cells(), 0);
  for (long f = 0; f < out.grid.cells(); ++f) {
    Vec<D> xhat = out.grid.center(f);
    Vec<D> x = change.B.transpose() * xhat;
    Vec<D> d;
    if (!map.interpolate(x, d)) continue;
    Vec<D> That = change.B * ((x + d) - change.b);
    out.disp[f] = That - xhat;
    out.valid[f] = 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Density sampling

// Equal-mass atoms at covered-cell centroids, with matched counts across the
// domain pair (lowest-coverage sliver cells dropped on the larger side).
template <int D>
std::pair<WeightedPoints<D>, WeightedPoints<D>> sample_domain_pair(const Domain<D>& d0, const Domain<D>& d1,
                                                                   double pitch, int ss = 4) {
  struct Cell {
    double cov;
    Vec<D> centroid;
    long idx;
  };
  auto collect = [&](const Domain<D>& dom, double p) {
    GridSpec<D> grid = GridSpec<D>::with_pitch(dom.bbox, p);
    Vec<D> widths;
    for (int a = 0; a < D; ++a) widths[a] = grid.h(a);
    std::vector<Cell> cells;
    double vol = 0;
    for (long f = 0; f < grid.cells(); ++f) {
      Vec<D> c = grid.center(f);
      double cov = coverage<D>(dom.inside, c, widths, ss);
      if (cov > 0) {
        cells.push_back({cov, coverage_centroid<D>(dom.inside, c, widths, ss), f});
        vol += cov * grid.cell_box(grid.unflat(f)).volume();
      }
    }
    return std::make_pair(cells, vol);
  };
  auto [cells0, vol0] = collect(d0, pitch);
  require(!cells0.empty(), errc::coverage, "sample_domain_pair: empty source");
  auto [cells1a, vol1a] = collect(d1, pitch);
  require(!cells1a.empty(), errc::coverage, "sample_domain_pair: empty target");
  // Re-pitch the target so counts roughly match, then trim slivers to equal N.
  double pitch1 = pitch * std::pow(vol1a / vol0, 1.0 / D);
  auto [cells1, vol1] = collect(d1, pitch1);
  auto by_cov = [](const Cell& a, const Cell& b) {
    if (a.cov != b.cov) return a.cov > b.cov;
    return a.idx < b.idx;
  };
  std::sort(cells0.begin(), cells0.end(), by_cov);
  std::sort(cells1.begin(), cells1.end(), by_cov);
  size_t N = std::min(cells0.size(), cells1.size());
  cells0.resize(N);
  cells1.resize(N);
  // Stable spatial order for reproducibility.
  auto by_idx = [](const Cell& a, const Cell& b) { return a.idx < b.idx; };
  std::sort(cells0.begin(), cells0.end(), by_idx);
  std::sort(cells1.begin(), cells1.end(), by_idx);
  double m = d0.lambda * vol0 / double(N);
  WeightedPoints<D> s0, s1;
  for (const auto& c : cells0) s0.push(c.centroid, m);
  for (const auto& c : cells1) s1.push(c.centroid, m);
  return {s0, s1};
}

// Cell-center measure with fractional boundary masses (entropic backend).
template <int D>
struct GridMeasure {
  GridSpec<D> grid;
  std::vector<double> mass;
  double total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }
};

template <int D>
GridMeasure<D> sample_domain_cells(const Domain<D>& dom, const GridSpec<D>& grid, int ss = 4) {
  GridMeasure<D> gm;
  gm.grid = grid;
  gm.mass.assign(grid.cells(), 0.0);
  Vec<D> widths;
  for (int a = 0; a < D; ++a) widths[a] = grid.h(a);
  for (long f = 0; f < grid.cells(); ++f) {
    double cov = coverage<D>(dom.inside, grid.center(f), widths, ss);
    gm.mass[f] = dom.lambda * cov * grid.cell_box(grid.unflat(f)).volume();
  }
  return gm;
}

}  // namespace otlab
