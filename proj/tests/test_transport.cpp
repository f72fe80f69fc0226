#include <catch2/catch_amalgamated.hpp>

#include "otlab/transport.hpp"

using namespace otlab;

namespace {

// Permutation brute force over <= 8 equal-mass points.
template <int D>
double brute_force_cost(const WeightedPoints<D>& src, const WeightedPoints<D>& tgt) {
  size_t n = src.size();
  REQUIRE(n == tgt.size());
  REQUIRE(n <= 8);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double c = 0;
    for (size_t i = 0; i < n; ++i) c += src.w[i] * (tgt.pts[perm[i]] - src.pts[i]).squaredNorm();
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Monotone rearrangement: the optimal 1d coupling of sorted equal-mass atoms.
double monotone_1d_cost(WeightedPoints<1> src, WeightedPoints<1> tgt) {
  std::sort(src.pts.begin(), src.pts.end(), [](const Vec<1>& a, const Vec<1>& b) { return a[0] < b[0]; });
  std::sort(tgt.pts.begin(), tgt.pts.end(), [](const Vec<1>& a, const Vec<1>& b) { return a[0] < b[0]; });
  double c = 0;
  for (size_t i = 0; i < src.size(); ++i) c += src.w[i] * sq(tgt.pts[i][0] - src.pts[i][0]);
  return c;
}

template <int D>
WeightedPoints<D> random_cloud(int n, Rng& rng, double mass_per_point) {
  WeightedPoints<D> p;
  for (int i = 0; i < n; ++i) {
    Vec<D> x;
    for (int a = 0; a < D; ++a) x[a] = rng.uniform(-1, 1);
    p.push(x, mass_per_point);
  }
  return p;
}

WeightedPoints<1> interval_cells(double lo, double hi, double h) {
  WeightedPoints<1> p;
  int n = (int)std::lround((hi - lo) / h);
  for (int k = 0; k < n; ++k) p.push(Vec<1>::Constant(lo + (k + 0.5) * h), h);
  return p;
}

double remark33_map(double x, double eps) { return x < eps ? x - 1 - eps : x - eps; }

}  // namespace

TEST_CASE("identity instance gives the zero-cost identity plan") {
  Rng rng(7);
  auto pts = random_cloud<2>(40, rng, 1.0 / 40);
  auto plan = solve_exact<2>(pts, pts);
  CHECK(plan.cost() == 0.0);
  CHECK(marginal_error<2>(plan, pts, pts) < 1e-15);
  CHECK(plan.monotonicity_min() >= 0.0);
}

TEST_CASE("exact solver matches permutation brute force") {
  Rng rng(42);
  for (int inst = 0; inst < 12; ++inst) {
    int n = rng.uniform_int(2, 8);
    if (inst % 2 == 0) {
      auto src = random_cloud<2>(n, rng, 1.0 / n);
      auto tgt = random_cloud<2>(n, rng, 1.0 / n);
      auto plan = solve_exact<2>(src, tgt);
      double bf = brute_force_cost<2>(src, tgt);
      CHECK(plan.cost() == Catch::Approx(bf).epsilon(1e-12));
      CHECK(marginal_error<2>(plan, src, tgt) < 1e-12);
      CHECK(plan.monotonicity_min() >= -1e-9);
    } else {
      auto src = random_cloud<1>(n, rng, 1.0 / n);
      auto tgt = random_cloud<1>(n, rng, 1.0 / n);
      auto plan = solve_exact<1>(src, tgt);
      CHECK(plan.cost() == Catch::Approx(brute_force_cost<1>(src, tgt)).epsilon(1e-12));
      CHECK(plan.cost() == Catch::Approx(monotone_1d_cost(src, tgt)).epsilon(1e-12));
    }
  }
}

TEST_CASE("exact solver agrees with monotone rearrangement on larger 1d instances") {
  Rng rng(9);
  auto src = random_cloud<1>(120, rng, 1.0 / 120);
  auto tgt = random_cloud<1>(120, rng, 1.0 / 120);
  auto plan = solve_exact<1>(src, tgt);
  CHECK(plan.cost() == Catch::Approx(monotone_1d_cost(src, tgt)).epsilon(1e-10));
}

TEST_CASE("unequal counts are handled by lcm splitting") {
  WeightedPoints<1> src, tgt;
  src.push(Vec<1>::Constant(0.0), 0.5);
  src.push(Vec<1>::Constant(1.0), 0.5);
  for (double x : {2.0, 3.0, 4.0}) tgt.push(Vec<1>::Constant(x), 1.0 / 3);
  auto plan = solve_exact<1>(src, tgt);
  CHECK(plan.total_mass() == Catch::Approx(1.0));
  CHECK(marginal_error<1>(plan, src, tgt) < 1e-12);
  // Monotonicity forces the sorted pairing of mass quanta:
  // {0,0,0,1,1,1} -> {2,2,3,3,4,4} at 1/6 mass each.
  CHECK(plan.cost() == Catch::Approx((1.0 / 6) * (4 + 4 + 9 + 4 + 9 + 9)).epsilon(1e-12));
}

TEST_CASE("mass mismatch and cap violations are rejected") {
  WeightedPoints<1> a, b;
  a.push(Vec<1>::Constant(0.0), 1.0);
  b.push(Vec<1>::Constant(1.0), 0.5);
  CHECK_THROWS_AS(solve_exact<1>(a, b), lab_error);
  b.w[0] = 1.0;
  CHECK_THROWS_AS(solve_exact<1>(a, b, /*pair_cap=*/0), lab_error);
}

TEST_CASE("boundary-layer separation instance: exact map matches the piecewise formula") {
  double eps = 0.1;
  int n_per_unit = 200;
  double h = 1.0 / n_per_unit;
  auto src = interval_cells(0, 2, h);
  WeightedPoints<1> tgt;
  for (auto& chunk : {std::pair{-1 - eps, -1.0}, std::pair{0.0, 2 - eps}}) {
    auto part = interval_cells(chunk.first, chunk.second, h);
    for (size_t i = 0; i < part.size(); ++i) tgt.push(part.pts[i], part.w[i]);
  }
  REQUIRE(src.size() == tgt.size());
  auto plan = solve_exact<1>(src, tgt, 4000000);

  GridSpec<1> grid;
  grid.box.lo[0] = 0;
  grid.box.hi[0] = 2;
  grid.n[0] = 2 * n_per_unit;
  auto mf = extract_map<1>(plan, grid);
  for (long f = 0; f < grid.cells(); ++f) {
    REQUIRE(mf.valid[f]);
    double x = grid.center(f)[0];
    double T = x + mf.disp[f][0];
    CHECK(std::abs(T - remark33_map(x, eps)) <= 2 * h);
  }
  // Inverse map matches the analytic inverse of the piecewise formula.
  GridSpec<1> tgrid;
  tgrid.box.lo[0] = -1 - eps;
  tgrid.box.hi[0] = 2 - eps;
  tgrid.n[0] = (int)std::lround((3.0) / h);
  auto inv = inverse_map<1>(plan, tgrid);
  for (long f = 0; f < tgrid.cells(); ++f) {
    if (!inv.valid[f]) continue;
    double y = tgrid.center(f)[0];
    double Tinv = y + inv.disp[f][0];
    double expected = (y < -0.5) ? y + 1 + eps : y + eps;
    CHECK(std::abs(Tinv - expected) <= 2 * h);
  }
}

TEST_CASE("entropic solver: cost within 3% of brute force on small instances") {
  Rng rng(11);
  for (int inst = 0; inst < 6; ++inst) {
    int n = rng.uniform_int(3, 6);
    auto src = random_cloud<2>(n, rng, 1.0 / n);
    auto tgt = random_cloud<2>(n, rng, 1.0 / n);
    auto plan = solve_entropic<2>(src, tgt, 1e-4);
    double bf = brute_force_cost<2>(src, tgt);
    if (bf > 1e-6) CHECK(plan.cost() == Catch::Approx(bf).epsilon(0.03));
    CHECK(plan.marginal_err <= 1e-6);
    CHECK(plan.monotonicity_min() >= -plan.monotonicity_tol());
  }
}

TEST_CASE("entropic solver on identical clouds stays near the diagonal") {
  Rng rng(3);
  auto pts = random_cloud<2>(25, rng, 1.0 / 25);
  auto plan = solve_entropic<2>(pts, pts, 1e-5);
  CHECK(plan.cost() <= 50 * 1e-5);
  GridSpec<2> grid = GridSpec<2>::regular(Box<2>::cube(1.0), 10);
  auto mf = extract_map<2>(plan, grid);
  for (long f = 0; f < grid.cells(); ++f)
    if (mf.valid[f]) CHECK(mf.disp[f].norm() <= 2 * mf.h());
}

TEST_CASE("entropic matches exact on the boundary-layer instance") {
  double eps = 0.1;
  int n_per_unit = 50;
  double h = 1.0 / n_per_unit;
  auto src = interval_cells(0, 2, h);
  WeightedPoints<1> tgt;
  for (auto& chunk : {std::pair{-1 - eps, -1.0}, std::pair{0.0, 2 - eps}}) {
    auto part = interval_cells(chunk.first, chunk.second, h);
    for (size_t i = 0; i < part.size(); ++i) tgt.push(part.pts[i], part.w[i]);
  }
  AnnealSpec spec;
  spec.decay = 0.85;
  spec.iters_per_level = 10;
  spec.polish_iters = 2000;
  auto plan = solve_entropic<1>(src, tgt, h * h, spec);
  GridSpec<1> grid;
  grid.box.lo[0] = 0;
  grid.box.hi[0] = 2;
  grid.n[0] = 2 * n_per_unit;
  auto mf = extract_map<1>(plan, grid);
  long bad = 0;
  for (long f = 0; f < grid.cells(); ++f) {
    if (!mf.valid[f]) continue;
    double x = grid.center(f)[0];
    double T = x + mf.disp[f][0];
    if (std::abs(T - remark33_map(x, eps)) > 3 * h) ++bad;
  }
  // The jump cell itself may average the two branches.
  CHECK(bad <= 2);
}

TEST_CASE("extract_map: translation instance gives constant displacement") {
  Rng rng(5);
  Vec<2> v;
  v << 0.3, -0.2;
  auto src = random_cloud<2>(200, rng, 1.0 / 200);
  WeightedPoints<2> tgt;
  for (size_t i = 0; i < src.size(); ++i) tgt.push(src.pts[i] + v, src.w[i]);
  auto plan = solve_exact<2>(src, tgt);
  GridSpec<2> grid = GridSpec<2>::regular(Box<2>::cube(1.0), 8);
  auto mf = extract_map<2>(plan, grid);
  for (long f = 0; f < grid.cells(); ++f)
    if (mf.valid[f]) CHECK((mf.disp[f] - v).norm() < 1e-12);
  auto inv = inverse_map<2>(plan, grid);
  for (long f = 0; f < grid.cells(); ++f)
    if (inv.valid[f]) CHECK((inv.disp[f] + v).norm() < 1e-12);
}

TEST_CASE("forward-backward composition returns to the start") {
  Rng rng(17);
  auto src = random_cloud<2>(300, rng, 1.0 / 300);
  WeightedPoints<2> tgt;
  for (size_t i = 0; i < src.size(); ++i) {
    Vec<2> y = src.pts[i] * 1.05;  // dilation map is the monotone optimum
    tgt.push(y, src.w[i]);
  }
  auto plan = solve_exact<2>(src, tgt);
  GridSpec<2> grid = GridSpec<2>::regular(Box<2>::cube(1.0), 12);
  auto fwd = extract_map<2>(plan, grid);
  GridSpec<2> tgrid = GridSpec<2>::regular(Box<2>::cube(1.05), 12);
  auto bwd = inverse_map<2>(plan, tgrid);
  double h = std::max(fwd.h(), bwd.h());
  for (long f = 0; f < grid.cells(); ++f) {
    if (!fwd.valid[f]) continue;
    Vec<2> x = grid.center(f);
    Vec<2> y = x + fwd.disp[f];
    Vec<2> d;
    if (!bwd.interpolate(y, d)) continue;
    CHECK((y + d - x).norm() <= 4 * h);
  }
}

TEST_CASE("affine change: identity and pure shift") {
  Rng rng(23);
  auto src = random_cloud<2>(30, rng, 1.0 / 30);
  auto tgt = random_cloud<2>(30, rng, 1.0 / 30);
  auto plan = solve_exact<2>(src, tgt);
  AffineChange<2> id;
  auto same = apply_affine<2>(plan, id);
  CHECK(same.cost() == Catch::Approx(plan.cost()));
  AffineChange<2> shift;
  shift.b << 0.1, -0.3;
  auto shifted = apply_affine<2>(plan, shift);
  for (size_t k = 0; k < plan.atoms.size(); ++k) {
    CHECK((shifted.atoms[k].x0 - plan.atoms[k].x0).norm() < 1e-15);
    CHECK((shifted.atoms[k].x1 - (plan.atoms[k].x1 - shift.b)).norm() < 1e-15);
  }
}

TEST_CASE("affine invariance: transformed solution equals fresh solve") {
  Rng rng(31);
  auto src = random_cloud<2>(50, rng, 1.0 / 50);
  auto tgt = random_cloud<2>(50, rng, 1.0 / 50);
  auto plan = solve_exact<2>(src, tgt);
  AffineChange<2> ch;
  ch.B << 2.0, 0.0, 0.0, 0.5;
  ch.b << 0.05, -0.02;
  auto transformed = apply_affine<2>(plan, ch);

  WeightedPoints<2> src2, tgt2;
  for (size_t i = 0; i < src.size(); ++i) src2.push(ch.fwd_src(src.pts[i]), src.w[i]);
  for (size_t j = 0; j < tgt.size(); ++j) tgt2.push(ch.fwd_tgt(tgt.pts[j]), tgt.w[j]);
  auto fresh = solve_exact<2>(src2, tgt2);
  CHECK(transformed.cost() == Catch::Approx(fresh.cost()).epsilon(0.02));
  CHECK(transformed.monotonicity_min() >= -1e-9);

  AffineChange<2> bad;
  bad.B.setZero();
  CHECK_THROWS_AS(apply_affine<2>(plan, bad), lab_error);
}

TEST_CASE("map field of a gradient map has small curl residual") {
  // T = grad(|x|^2/2 + a(x1^2 - x2^2)/2) sampled directly.
  double a = 0.05;
  TransportPlan<2> plan;
  int n = 40;
  double h = 2.0 / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec<2> x;
      x << -1 + (i + 0.5) * h, -1 + (j + 0.5) * h;
      Vec<2> y;
      y << (1 + a) * x[0], (1 - a) * x[1];
      plan.atoms.push_back({x, y, h * h});
    }
  GridSpec<2> grid = GridSpec<2>::regular(Box<2>::cube(1.0), n);
  auto mf = extract_map<2>(plan, grid);
  CHECK(mf.curl_residual() < 1e-12);
}

TEST_CASE("sampled domain pair: matched counts, uniform masses, exact 1d tiling") {
  auto dom0 = graph_domain<2>(0, 1.0, flat_chart<2>(1.2, 0.5), Box<2>::cube(1.0));
  auto dom1 = graph_domain<2>(1, 1.0, power_chart<2>(1.2, 0.5, 0.05), Box<2>::cube(1.0));
  auto [s0, s1] = sample_domain_pair<2>(dom0, dom1, 0.05);
  REQUIRE(s0.size() == s1.size());
  CHECK(s0.w[0] == s1.w[0]);
  CHECK(std::abs(s0.total() - 2.0) < 0.05);  // upper half of the (-1,1)^2 box
}
