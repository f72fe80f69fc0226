#pragma once

// Boundary geometry: graph charts of C^{1,alpha} boundaries, outward normals,
// Hoelder seminorms of the normal field, the flatness deviation D_R, and the
// tangency normalization (translate + rotate + symmetric pre-tilt).

#include <memory>

#include "otlab/core.hpp"

namespace otlab {

template <int D>
Mat<D> symmetrize(const Mat<D>& A) {
  return 0.5 * (A + A.transpose());
}

template <int D>
Mat<D> sym_sqrt(const Mat<D>& A) {
  Eigen::SelfAdjointEigenSolver<Mat<D>> es(symmetrize<D>(A));
  Vec<D> ev = es.eigenvalues();
  for (int i = 0; i < D; ++i) {
    require(ev[i] > 0, errc::singular_matrix, "sym_sqrt: matrix not positive definite");
    ev[i] = std::sqrt(ev[i]);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

template <int D>
Mat<D> sym_exp(const Mat<D>& A) {
  Eigen::SelfAdjointEigenSolver<Mat<D>> es(symmetrize<D>(A));
  Vec<D> ev = es.eigenvalues();
  for (int i = 0; i < D; ++i) ev[i] = std::exp(ev[i]);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Symmetric matrix mapping -e1 to the unit vector v (close to -e1); identity
// on the orthogonal complement block.
template <int D>
Mat<D> tilt_matrix(const Vec<D>& v) {
  Mat<D> A = Mat<D>::Identity();
  for (int i = 0; i < D; ++i) {
    A(i, 0) = -v[i];
    A(0, i) = -v[i];
  }
  return A;
}

// ---------------------------------------------------------------------------
// BoundaryGraph

template <int D>
struct BoundaryGraph {
  static constexpr int DM1 = D - 1;
  static constexpr int TD = DM1 == 0 ? 1 : DM1;  // tangential dims (dummy 1 for D==1)
  using TVec = Vec<TD>;

  double half_width = 1.0;
  double alpha = 0.5;
  std::string kind = "flat";  // "flat" | "power" | "samples"
  std::vector<double> params;
  int nodes_per_axis = 65;      // sample nodes, endpoints included
  std::vector<double> samples;  // DM1==0: 1, DM1==1: n, DM1==2: n*n row-major
  bool normalized = true;

  // Closed-form evaluators, when available.
  std::function<double(const TVec&)> eval_fn;
  std::function<TVec(const TVec&)> grad_fn;

  // Affine provenance: this chart is the image of *base under x -> M x + t.
  // Kept one level deep (compositions fold into M, t), so exact evaluation of
  // transformed charts never recurses.
  std::shared_ptr<const BoundaryGraph> base;
  Mat<D> M = Mat<D>::Identity();
  Vec<D> t = Vec<D>::Zero();

  double spacing() const { return DM1 == 0 ? 2 * half_width : 2 * half_width / (nodes_per_axis - 1); }

  void check_window(const TVec& xp, double slack = 0) const {
    if constexpr (DM1 >= 1) {
      for (int a = 0; a < DM1; ++a)
        require(std::abs(xp[a]) <= half_width + slack + 1e-12, errc::chart_range,
                "chart: coordinate outside window");
    }
  }

  double eval(const TVec& xp) const {
    check_window(xp, 4 * spacing());
    if (base) return mapped_point(xp)[0];
    if (eval_fn) return eval_fn(xp);
    return interp_eval(xp);
  }

  TVec grad(const TVec& xp) const {
    check_window(xp, 4 * spacing());
    if (base) return mapped_grad(xp);
    if (grad_fn) return grad_fn(xp);
    return interp_grad(xp);
  }

  // Boundary point (g(x'), x') in ambient coordinates.
  Vec<D> point(const TVec& xp) const {
    Vec<D> p;
    p[0] = eval(xp);
    for (int a = 1; a < D; ++a) p[a] = xp[a - 1];
    return p;
  }

  // Outward unit normal of {x1 > g(x')}: (-1, grad g)/sqrt(1+|grad g|^2).
  // Strict window check per the chart contract.
  Vec<D> normal(const TVec& xp) const {
    check_window(xp, 0);
    TVec gp = grad(xp);
    Vec<D> nu;
    nu[0] = -1;
    for (int a = 1; a < D; ++a) nu[a] = gp[a - 1];
    return nu / nu.norm();
  }

  template <class F>
  void for_each_node(const F& f) const {
    if constexpr (DM1 == 0) {
      f(TVec::Zero());
    } else if constexpr (DM1 == 1) {
      for (int k = 0; k < nodes_per_axis; ++k) {
        TVec xp;
        xp[0] = -half_width + k * spacing();
        f(xp);
      }
    } else {
      for (int i = 0; i < nodes_per_axis; ++i)
        for (int j = 0; j < nodes_per_axis; ++j) {
          TVec xp;
          xp[0] = -half_width + i * spacing();
          xp[1] = -half_width + j * spacing();
          f(xp);
        }
    }
  }

  void fill_samples() {
    samples.clear();
    samples.reserve(DM1 == 2 ? (size_t)nodes_per_axis * nodes_per_axis : (DM1 == 1 ? nodes_per_axis : 1));
    for_each_node([&](const TVec& xp) { samples.push_back(base ? mapped_point(xp)[0] : eval_fn(xp)); });
  }

  // Normalization (g(0)=0, grad g(0)=0 within one grid cell) and the slope
  // bound |grad g| <= 1/4 on the window.
  void validate(bool require_normalized) const {
    if constexpr (DM1 == 0) return;
    double tol = spacing();
    if (require_normalized) {
      TVec zero = TVec::Zero();
      require(std::abs(eval(zero)) <= tol, errc::precondition, "chart normalization: g(0) != 0");
      require(grad(zero).norm() <= tol + 1e-9, errc::precondition, "chart normalization: grad g(0) != 0");
    }
    for_each_node([&](const TVec& xp) {
      require(grad(xp).norm() <= 0.25 + 1e-9, errc::precondition, "chart slope bound |grad g| <= 1/4 violated");
    });
  }

  // alpha-Hoelder seminorm of the normal field over boundary points inside
  // B_R, by pair enumeration with tangential separations >= 4 cells.
  double holder_seminorm(double R) const {
    if constexpr (DM1 == 0) return 0.0;
    require(R <= half_width + 1e-12, errc::chart_range, "holder_seminorm: R exceeds chart window");
    require(spacing() <= R / 32 + 1e-12, errc::resolution, "holder_seminorm: grid too coarse (need h <= R/32)");
    std::vector<TVec> pts;
    std::vector<Vec<D>> nus;
    for_each_node([&](const TVec& xp) {
      if (point(xp).norm() < R) {
        pts.push_back(xp);
        nus.push_back(normal(xp));
      }
    });
    size_t cap = 1600;
    size_t stride = pts.size() > cap ? (pts.size() + cap - 1) / cap : 1;
    double min_sep = 4 * spacing() - 1e-12;
    double sup = 0;
    for (size_t i = 0; i < pts.size(); i += stride)
      for (size_t j = i + stride; j < pts.size(); j += stride) {
        double sep = (pts[i] - pts[j]).norm();
        if (sep < min_sep) continue;
        sup = std::max(sup, (nus[i] - nus[j]).norm() / std::pow(sep, alpha));
      }
    return sup;
  }

  // Chart of the dilated set s^{-1} Omega (image under x -> x/s).
  BoundaryGraph rescaled(double s) const;

 private:
  double interp_eval(const TVec& xp) const {
    if constexpr (DM1 == 0) {
      return samples.empty() ? 0.0 : samples[0];
    } else if constexpr (DM1 == 1) {
      return catmull_rom(samples, (xp[0] + half_width) / spacing());
    } else {
      int n = nodes_per_axis;
      double tx = (xp[0] + half_width) / spacing(), ty = (xp[1] + half_width) / spacing();
      std::vector<double> col(n);
      for (int k = 0; k < n; ++k) {
        std::vector<double> row(samples.begin() + (size_t)k * n, samples.begin() + (size_t)(k + 1) * n);
        col[k] = catmull_rom(row, ty);
      }
      return catmull_rom(col, tx);
    }
  }

  TVec interp_grad(const TVec& xp) const {
    TVec g = TVec::Zero();
    if constexpr (DM1 == 1) {
      g[0] = catmull_rom_deriv(samples, (xp[0] + half_width) / spacing()) / spacing();
    } else if constexpr (DM1 == 2) {
      int n = nodes_per_axis;
      double tx = (xp[0] + half_width) / spacing(), ty = (xp[1] + half_width) / spacing();
      std::vector<double> c0(n), c1(n);
      for (int k = 0; k < n; ++k) {
        std::vector<double> row(samples.begin() + (size_t)k * n, samples.begin() + (size_t)(k + 1) * n);
        c0[k] = catmull_rom(row, ty);
        c1[k] = catmull_rom_deriv(row, ty);
      }
      g[0] = catmull_rom_deriv(c0, tx) / spacing();
      g[1] = catmull_rom(c1, tx) / spacing();
    }
    return g;
  }

  // Tangential preimage under the affine map: solve proj'(M P0(x') + t) = xhat.
  TVec preimage(const TVec& xhat) const {
    if constexpr (D == 1) {
      return xhat;
    } else {
      // Initial guess from the inverse map applied to (0, xhat).
      Vec<D> q0 = Vec<D>::Zero();
      for (int a = 1; a < D; ++a) q0[a] = xhat[a - 1];
      Vec<D> p0 = M.inverse() * (q0 - t);
      TVec xp;
      for (int a = 1; a < D; ++a) xp[a - 1] = p0[a];
      double wb = base->half_width;
      auto clamp_window = [&](TVec& v) {
        for (int a = 0; a < D - 1; ++a) v[a] = std::clamp(v[a], -wb, wb);
      };
      clamp_window(xp);
      TVec delta = TVec::Zero();
      for (int it = 0; it < 100; ++it) {
        Vec<D> q = M * base->point(xp) + t;
        TVec r;
        for (int a = 1; a < D; ++a) r[a - 1] = q[a];
        delta = xhat - r;
        if (delta.norm() < 1e-14) return xp;
        xp += delta;
        clamp_window(xp);
      }
      // Accept near-window-edge slack introduced by clamping.
      require(delta.norm() < 1e-10, errc::convergence, "transform_chart: preimage iteration did not converge");
      return xp;
    }
  }

  Vec<D> mapped_point(const TVec& xhat) const {
    if constexpr (D == 1) {
      Vec<D> p;
      p[0] = M(0, 0) * (base->samples.empty() ? 0.0 : base->samples[0]) + t[0];
      return p;
    } else {
      return M * base->point(preimage(xhat)) + t;
    }
  }

  TVec mapped_grad(const TVec& xhat) const {
    if constexpr (D == 1) {
      return TVec::Zero();
    } else {
      TVec xp = preimage(xhat);
      TVec gp = base->grad(xp);
      Eigen::Matrix<double, D, D - 1> J;
      for (int i = 0; i < D - 1; ++i) {
        Vec<D> col = Vec<D>::Zero();
        col[0] = gp[i];
        col[i + 1] = 1;
        J.col(i) = M * col;
      }
      Eigen::Matrix<double, D - 1, D - 1> Jp = J.template bottomRows<D - 1>();
      Eigen::Matrix<double, 1, D - 1> w = J.template topRows<1>();
      Eigen::Matrix<double, 1, D - 1> grad = w * Jp.inverse();
      return TVec(grad.transpose());
    }
  }
};

// Chart of the image of {x1 > g(x')} under x -> M x + t, as a graph over the
// window of half-width new_W. Affine provenance is folded, so chains of
// transforms stay one level deep.
template <int D>
BoundaryGraph<D> transform_chart(const BoundaryGraph<D>& g, const Mat<D>& M, const Vec<D>& t, double new_W,
                                 int nodes = 0) {
  BoundaryGraph<D> out;
  out.half_width = new_W;
  out.alpha = g.alpha;
  out.kind = "samples";
  out.nodes_per_axis = nodes > 0 ? nodes : g.nodes_per_axis;
  out.normalized = false;
  if (g.base) {
    out.base = g.base;
    out.M = M * g.M;
    out.t = M * g.t + t;
  } else {
    out.base = std::make_shared<BoundaryGraph<D>>(g);
    out.M = M;
    out.t = t;
  }
  out.fill_samples();
  return out;
}

template <int D>
BoundaryGraph<D> BoundaryGraph<D>::rescaled(double s) const {
  return transform_chart<D>(*this, Mat<D>::Identity() / s, Vec<D>::Zero(), half_width / s);
}

template <int D>
BoundaryGraph<D> flat_chart(double half_width, double alpha, int nodes = 257) {
  BoundaryGraph<D> g;
  g.half_width = half_width;
  g.alpha = alpha;
  g.kind = "flat";
  g.nodes_per_axis = D == 3 ? std::min(nodes, 129) : nodes;
  using TVec = typename BoundaryGraph<D>::TVec;
  g.eval_fn = [](const TVec&) { return 0.0; };
  g.grad_fn = [](const TVec&) { return TVec(TVec::Zero()); };
  g.fill_samples();
  return g;
}

// g(x') = amplitude * |x'|^{1+alpha}: exactly C^{1,alpha} and no better.
template <int D>
BoundaryGraph<D> power_chart(double half_width, double alpha, double amplitude, int nodes = 129) {
  static_assert(D >= 2);
  BoundaryGraph<D> g;
  g.half_width = half_width;
  g.alpha = alpha;
  g.kind = "power";
  g.params = {amplitude};
  g.nodes_per_axis = nodes;
  using TVec = typename BoundaryGraph<D>::TVec;
  g.eval_fn = [amplitude, alpha](const TVec& xp) { return amplitude * std::pow(xp.norm(), 1 + alpha); };
  g.grad_fn = [amplitude, alpha](const TVec& xp) {
    double r = xp.norm();
    if (r == 0) return TVec(TVec::Zero());
    return TVec(amplitude * (1 + alpha) * std::pow(r, alpha - 1) * xp);
  };
  g.fill_samples();
  g.validate(true);
  return g;
}

template <int D>
BoundaryGraph<D> function_chart(double half_width, double alpha,
                                std::function<double(const typename BoundaryGraph<D>::TVec&)> f,
                                std::function<typename BoundaryGraph<D>::TVec(const typename BoundaryGraph<D>::TVec&)> df,
                                int nodes = 129, bool require_normalized = true) {
  BoundaryGraph<D> g;
  g.half_width = half_width;
  g.alpha = alpha;
  g.kind = "samples";
  g.nodes_per_axis = nodes;
  g.eval_fn = std::move(f);
  g.grad_fn = std::move(df);
  g.normalized = require_normalized;
  g.fill_samples();
  g.validate(require_normalized);
  return g;
}

template <int D>
BoundaryGraph<D> sampled_chart(double half_width, double alpha, std::vector<double> samples,
                               bool require_normalized = true) {
  BoundaryGraph<D> g;
  g.half_width = half_width;
  g.alpha = alpha;
  g.kind = "samples";
  if constexpr (D == 3) {
    size_t r = (size_t)std::lround(std::sqrt(double(samples.size())));
    require(r * r == samples.size(), errc::config, "sampled_chart: expected square sample count for d=3");
    g.nodes_per_axis = (int)r;
  } else if constexpr (D == 2) {
    g.nodes_per_axis = (int)samples.size();
  }
  g.samples = std::move(samples);
  g.normalized = require_normalized;
  g.validate(require_normalized);
  return g;
}

// Spec-facing wrappers.
template <int D>
Vec<D> outward_normal(const BoundaryGraph<D>& g, const typename BoundaryGraph<D>::TVec& xp) {
  return g.normal(xp);
}

template <int D>
double holder_seminorm_normals(const BoundaryGraph<D>& g, double R) {
  return g.holder_seminorm(R);
}

// D_R = R^{2 alpha} ([nu_0]^2 + [nu_1]^2): squared flatness deviation.
template <int D>
double deviation_D(const BoundaryGraph<D>& g0, const BoundaryGraph<D>& g1, double R) {
  require(std::abs(g0.alpha - g1.alpha) < 1e-12, errc::config, "deviation_D: Hoelder exponents differ");
  double s0 = g0.holder_seminorm(R);
  double s1 = g1.holder_seminorm(R);
  return std::pow(R, 2 * g0.alpha) * (s0 * s0 + s1 * s1);
}

// ---------------------------------------------------------------------------
// Domain

template <int D>
struct Domain {
  int side = 0;
  double lambda = 1.0;
  Box<D> bbox;
  BoundaryGraph<D> chart;  // anchored at the study point (origin of this frame)
  std::function<bool(const Vec<D>&)> inside;
  // Optional global halfspace extension: Omega should lie in {x1 > ext(x')}.
  std::function<double(const typename BoundaryGraph<D>::TVec&)> extension;
  bool has_extension = false;

  double volume(double pitch, int ss = 4) const {
    GridSpec<D> grid = GridSpec<D>::with_pitch(bbox, pitch);
    Vec<D> widths;
    for (int a = 0; a < D; ++a) widths[a] = grid.h(a);
    double vol = 0;
    for (long f = 0; f < grid.cells(); ++f) {
      double c = coverage<D>(inside, grid.center(f), widths, ss);
      vol += c * grid.cell_box(grid.unflat(f)).volume();
    }
    return vol;
  }
};

template <int D>
Domain<D> graph_domain(int side, double lambda, BoundaryGraph<D> chart, const Box<D>& bbox) {
  require(lambda >= 0.5 - 1e-12 && lambda <= 2 + 1e-12, errc::config, "domain: lambda outside [1/2,2]");
  for (int a = 1; a < D; ++a)
    require(chart.half_width >= std::max(std::abs(bbox.lo[a]), std::abs(bbox.hi[a])) - 1e-12, errc::config,
            "graph_domain: chart window does not span the box");
  Domain<D> dom;
  dom.side = side;
  dom.lambda = lambda;
  dom.bbox = bbox;
  dom.chart = chart;
  BoundaryGraph<D> c = chart;
  Box<D> b = bbox;
  dom.inside = [c, b](const Vec<D>& x) {
    if (!b.contains(x)) return false;
    typename BoundaryGraph<D>::TVec xp = BoundaryGraph<D>::TVec::Zero();
    if constexpr (D >= 2)
      for (int a = 1; a < D; ++a) xp[a - 1] = x[a];
    return x[0] > c.eval(xp);
  };
  dom.extension = [c](const typename BoundaryGraph<D>::TVec& xp) { return c.eval(xp); };
  dom.has_extension = true;
  return dom;
}

// Membership/chart consistency on random probes in the chart window.
template <int D>
bool validate_domain(const Domain<D>& dom, int probes = 500, uint64_t seed = 12345) {
  Rng rng(seed);
  for (int k = 0; k < probes; ++k) {
    Vec<D> x;
    for (int a = 0; a < D; ++a) x[a] = rng.uniform(dom.bbox.lo[a], dom.bbox.hi[a]);
    typename BoundaryGraph<D>::TVec xp = BoundaryGraph<D>::TVec::Zero();
    bool in_window = true;
    if constexpr (D >= 2) {
      for (int a = 1; a < D; ++a) {
        xp[a - 1] = x[a];
        if (std::abs(x[a]) > dom.chart.half_width) in_window = false;
      }
    }
    if (!in_window) continue;
    double g = dom.chart.eval(xp);
    if (std::abs(x[0] - g) < 1e-9) continue;  // razor-edge probe
    if (dom.inside(x) != (x[0] > g)) return false;
  }
  return true;
}

template <int D>
Domain<D> transform_domain(const Domain<D>& dom, const Mat<D>& M, const Vec<D>& t, double lambda_factor,
                           double chart_shrink = 0.95) {
  Domain<D> out;
  out.side = dom.side;
  out.lambda = dom.lambda * lambda_factor;
  Mat<D> Minv = M.inverse();
  auto old_inside = dom.inside;
  out.inside = [old_inside, Minv, t](const Vec<D>& x) { return old_inside(Minv * (x - t)); };
  Vec<D> lo = Vec<D>::Constant(1e300), hi = Vec<D>::Constant(-1e300);
  for (long corner = 0; corner < (1L << D); ++corner) {
    Vec<D> c;
    for (int a = 0; a < D; ++a) c[a] = (corner >> a) & 1 ? dom.bbox.hi[a] : dom.bbox.lo[a];
    Vec<D> q = M * c + t;
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  out.bbox.lo = lo;
  out.bbox.hi = hi;
  out.chart = transform_chart<D>(dom.chart, M, t, dom.chart.half_width * chart_shrink);
  out.has_extension = false;
  return out;
}

template <int D>
struct TangencyFrame {
  Vec<D> p = Vec<D>::Zero();        // study point in incoming coordinates
  Mat<D> rot = Mat<D>::Identity();  // aligns nu_0(p) with -e1
  bool has_pretilt = false;
  Mat<D> pretilt = Mat<D>::Identity();  // B0 = A^{1/2}, symmetric
  Vec<D> shift = Vec<D>::Zero();        // vertical translation b = g1(0) e1
  Mat<D> rot2 = Mat<D>::Identity();     // realigns the common normal afterwards
};

// Quantitative tangency normalization: given charts anchored at p, rotate
// nu_0(p) to -e1, then absorb the (small) offset/tilt of the target boundary
// with the transport-covariant change built from the symmetric tilt A and the
// vertical shift b = g1(0) e1.
template <int D>
std::tuple<Domain<D>, Domain<D>, TangencyFrame<D>> normalize_tangency(const Domain<D>& dom0, const Domain<D>& dom1,
                                                                      const Vec<D>& p, double threshold = 0.05) {
  using TVec = typename BoundaryGraph<D>::TVec;
  TangencyFrame<D> frame;
  frame.p = p;

  Vec<D> nu0 = dom0.chart.normal(TVec::Zero());
  Vec<D> me1 = Vec<D>::Zero();
  me1[0] = -1;
  frame.rot = rotation_between<D>(nu0, me1);
  bool pure_shift = (frame.rot - Mat<D>::Identity()).norm() < 1e-14;
  double shrink0 = pure_shift ? 1.0 : 0.95;
  Domain<D> a = transform_domain<D>(dom0, frame.rot, (-(frame.rot * p)).eval(), 1.0, shrink0);
  Domain<D> b = transform_domain<D>(dom1, frame.rot, (-(frame.rot * p)).eval(), 1.0, shrink0);

  double g10 = b.chart.eval(TVec::Zero());
  TVec s1 = b.chart.grad(TVec::Zero());
  double defect = std::sqrt(sq(g10) + s1.squaredNorm());
  require(defect <= threshold, errc::precondition,
          "normalize_tangency: boundaries not nearly tangent (defect " + format_double(defect) + ")");

  if (defect < 1e-13) {
    a.chart.validate(true);
    b.chart.validate(true);
    return {a, b, frame};
  }

  Vec<D> nu1 = b.chart.normal(TVec::Zero());
  Mat<D> A = tilt_matrix<D>(nu1);
  Mat<D> B0 = sym_sqrt<D>(A);
  Vec<D> shift = Vec<D>::Zero();
  shift[0] = g10;
  frame.has_pretilt = true;
  frame.pretilt = B0;
  frame.shift = shift;

  // Transport-covariant change: source by B0^{-*}, target by x -> B0 (x - b).
  double detB = B0.determinant();
  Mat<D> M0 = B0.transpose().inverse();
  Domain<D> a2 = transform_domain<D>(a, M0, Vec<D>::Zero(), std::abs(detB));
  Domain<D> b2 = transform_domain<D>(b, B0, (-(B0 * shift)).eval(), 1.0 / std::abs(detB));

  Vec<D> nu_common = a2.chart.normal(TVec::Zero());
  frame.rot2 = rotation_between<D>(nu_common, me1);
  Domain<D> a3 = transform_domain<D>(a2, frame.rot2, Vec<D>::Zero(), 1.0);
  Domain<D> b3 = transform_domain<D>(b2, frame.rot2, Vec<D>::Zero(), 1.0);
  a3.chart.validate(true);
  b3.chart.validate(true);
  return {a3, b3, frame};
}

}  // namespace otlab
