#pragma once

// Shared small types for the transport lab: fixed-dimension vectors, axis
// aligned boxes, uniform cell grids, CSV output, and a few numeric helpers.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace otlab {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;
template <int D>
using Mat = Eigen::Matrix<double, D, D>;

// Error taxonomy. `config` maps to CLI exit code 2, everything else to 1.
enum class errc {
  config,
  precondition,
  chart_range,
  resolution,
  coverage,
  imbalance,
  size,
  convergence,
  contradiction,
  singular_matrix,
  stage,
};

class lab_error : public std::runtime_error {
 public:
  lab_error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw lab_error(code, msg); }

inline void require(bool ok, errc code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

template <int D>
struct Box {
  Vec<D> lo = Vec<D>::Zero();
  Vec<D> hi = Vec<D>::Zero();

  static Box cube(double half) {
    Box b;
    b.lo = Vec<D>::Constant(-half);
    b.hi = Vec<D>::Constant(half);
    return b;
  }

  Vec<D> extent() const { return hi - lo; }
  double volume() const {
    double v = 1;
    for (int a = 0; a < D; ++a) v *= hi[a] - lo[a];
    return v;
  }
  bool contains(const Vec<D>& x) const {
    for (int a = 0; a < D; ++a)
      if (x[a] <= lo[a] || x[a] >= hi[a]) return false;
    return true;
  }
  Box intersect(const Box& o) const {
    Box b;
    for (int a = 0; a < D; ++a) {
      b.lo[a] = std::max(lo[a], o.lo[a]);
      b.hi[a] = std::min(hi[a], o.hi[a]);
      if (b.hi[a] < b.lo[a]) b.hi[a] = b.lo[a];
    }
    return b;
  }
};

// Uniform cell grid on a box; cells are half-open, indexed row-major with the
// last axis fastest. Cell (i_0,..) covers lo + [i*h, (i+1)*h).
template <int D>
struct GridSpec {
  Box<D> box;
  std::array<int, D> n{};

  static GridSpec regular(const Box<D>& b, int per_axis) {
    GridSpec g;
    g.box = b;
    g.n.fill(per_axis);
    return g;
  }
  // Pitch-driven grid: per-axis counts chosen so the spacing is ~pitch.
  static GridSpec with_pitch(const Box<D>& b, double pitch) {
    GridSpec g;
    g.box = b;
    for (int a = 0; a < D; ++a) g.n[a] = std::max(1, (int)std::lround((b.hi[a] - b.lo[a]) / pitch));
    return g;
  }

  double h(int axis) const { return (box.hi[axis] - box.lo[axis]) / n[axis]; }
  double max_h() const {
    double m = 0;
    for (int a = 0; a < D; ++a) m = std::max(m, h(a));
    return m;
  }
  long cells() const {
    long c = 1;
    for (int a = 0; a < D; ++a) c *= n[a];
    return c;
  }
  long flat(const std::array<int, D>& idx) const {
    long f = 0;
    for (int a = 0; a < D; ++a) f = f * n[a] + idx[a];
    return f;
  }
  std::array<int, D> unflat(long f) const {
    std::array<int, D> idx{};
    for (int a = D - 1; a >= 0; --a) {
      idx[a] = int(f % n[a]);
      f /= n[a];
    }
    return idx;
  }
  Vec<D> center(const std::array<int, D>& idx) const {
    Vec<D> c;
    for (int a = 0; a < D; ++a) c[a] = box.lo[a] + (idx[a] + 0.5) * h(a);
    return c;
  }
  Vec<D> center(long f) const { return center(unflat(f)); }
  bool in_range(const std::array<int, D>& idx) const {
    for (int a = 0; a < D; ++a)
      if (idx[a] < 0 || idx[a] >= n[a]) return false;
    return true;
  }
  // Cell containing x; returns false when x is outside the box.
  bool locate(const Vec<D>& x, std::array<int, D>& idx) const {
    for (int a = 0; a < D; ++a) {
      double t = (x[a] - box.lo[a]) / h(a);
      int i = (int)std::floor(t);
      if (i < 0 || i >= n[a]) return false;
      idx[a] = i;
    }
    return true;
  }
  Box<D> cell_box(const std::array<int, D>& idx) const {
    Box<D> b;
    for (int a = 0; a < D; ++a) {
      b.lo[a] = box.lo[a] + idx[a] * h(a);
      b.hi[a] = b.lo[a] + h(a);
    }
    return b;
  }
};

// Fraction of a cell covered by a predicate, by ss^D midpoint subsamples.
template <int D, class F>
double coverage(const F& inside, const Vec<D>& center, const Vec<D>& widths, int ss = 4) {
  long total = 1;
  for (int a = 0; a < D; ++a) total *= ss;
  long hit = 0;
  std::array<int, D> idx{};
  for (long f = 0; f < total; ++f) {
    long r = f;
    for (int a = D - 1; a >= 0; --a) {
      idx[a] = int(r % ss);
      r /= ss;
    }
    Vec<D> p;
    for (int a = 0; a < D; ++a) p[a] = center[a] + widths[a] * ((idx[a] + 0.5) / ss - 0.5);
    if (inside(p)) ++hit;
  }
  return double(hit) / double(total);
}

// Centroid of the covered part of a cell (midpoint subsamples); falls back to
// the center when nothing is covered.
template <int D, class F>
Vec<D> coverage_centroid(const F& inside, const Vec<D>& center, const Vec<D>& widths, int ss = 4) {
  long total = 1;
  for (int a = 0; a < D; ++a) total *= ss;
  Vec<D> acc = Vec<D>::Zero();
  long hit = 0;
  std::array<int, D> idx{};
  for (long f = 0; f < total; ++f) {
    long r = f;
    for (int a = D - 1; a >= 0; --a) {
      idx[a] = int(r % ss);
      r /= ss;
    }
    Vec<D> p;
    for (int a = 0; a < D; ++a) p[a] = center[a] + widths[a] * ((idx[a] + 0.5) / ss - 0.5);
    if (inside(p)) {
      acc += p;
      ++hit;
    }
  }
  if (hit == 0) return center;
  return acc / double(hit);
}

// Uniform-node Catmull-Rom interpolation with clamped ends. `t` is in node
// index units (0 .. n-1).
inline double catmull_rom(const std::vector<double>& v, double t) {
  int n = (int)v.size();
  if (n == 1) return v[0];
  t = std::clamp(t, 0.0, double(n - 1));
  int i = std::min((int)std::floor(t), n - 2);
  double s = t - i;
  auto at = [&](int k) { return v[std::clamp(k, 0, n - 1)]; };
  double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
  double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
  double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
  double c = 0.5 * (p2 - p0);
  return ((a * s + b) * s + c) * s + p1;
}

// Derivative of the interpolant above, in value per node index unit.
inline double catmull_rom_deriv(const std::vector<double>& v, double t) {
  int n = (int)v.size();
  if (n == 1) return 0.0;
  t = std::clamp(t, 0.0, double(n - 1));
  int i = std::min((int)std::floor(t), n - 2);
  double s = t - i;
  auto at = [&](int k) { return v[std::clamp(k, 0, n - 1)]; };
  double p0 = at(i - 1), p1 = at(i), p2 = at(i + 1), p3 = at(i + 2);
  double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
  double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
  double c = 0.5 * (p2 - p0);
  return (3 * a * s + 2 * b) * s + c;
}

struct LineFit {
  double slope = 0;
  double intercept = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, errc::precondition, "fit_line: need >= 2 points");
  double n = double(x.size());
  double sx = std::accumulate(x.begin(), x.end(), 0.0);
  double sy = std::accumulate(y.begin(), y.end(), 0.0);
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

// Log-log slope of value vs parameter; inputs must be positive.
inline double fit_exponent(const std::vector<double>& param, const std::vector<double>& value) {
  std::vector<double> lx, ly;
  for (size_t i = 0; i < param.size(); ++i) {
    require(param[i] > 0 && value[i] > 0, errc::precondition, "fit_exponent: positive data required");
    lx.push_back(std::log(param[i]));
    ly.push_back(std::log(value[i]));
  }
  return fit_line(lx, ly).slope;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : f_(path) {
    require(f_.good(), errc::config, "cannot open csv for writing: " + path);
    for (size_t i = 0; i < header.size(); ++i) f_ << (i ? "," : "") << header[i];
    f_ << "\n";
    cols_ = header.size();
  }
  void row(const std::vector<double>& values) {
    require(values.size() == cols_, errc::config, "csv row width mismatch");
    for (size_t i = 0; i < values.size(); ++i) f_ << (i ? "," : "") << format_double(values[i]);
    f_ << "\n";
  }
  void row_strings(const std::vector<std::string>& values) {
    require(values.size() == cols_, errc::config, "csv row width mismatch");
    for (size_t i = 0; i < values.size(); ++i) f_ << (i ? "," : "") << values[i];
    f_ << "\n";
  }

 private:
  std::ofstream f_;
  size_t cols_;
};

// Deterministic RNG (mt19937_64 output sequence is fixed by the standard).
struct Rng {
  explicit Rng(uint64_t seed) : eng(seed) {}
  double uniform(double a, double b) {
    std::uniform_real_distribution<double> d(a, b);
    return d(eng);
  }
  int uniform_int(int a, int b) {
    std::uniform_int_distribution<int> d(a, b);
    return d(eng);
  }
  std::mt19937_64 eng;
};

// Rotation taking unit vector `from` to unit vector `to` (d >= 2 general
// form; identity when they already coincide).
template <int D>
Mat<D> rotation_between(const Vec<D>& from, const Vec<D>& to) {
  Vec<D> a = from.normalized(), b = to.normalized();
  double c = a.dot(b);
  if (c > 1 - 1e-15) return Mat<D>::Identity();
  require(c > -1 + 1e-12, errc::precondition, "rotation_between: opposite vectors");
  // Rodrigues-style construction in the plane spanned by a, b.
  Vec<D> u = a;
  Vec<D> v = (b - c * a).normalized();
  Mat<D> R = Mat<D>::Identity();
  R += (c - 1) * (u * u.transpose() + v * v.transpose());
  double s = std::sqrt(std::max(0.0, 1 - c * c));
  R += s * (v * u.transpose() - u * v.transpose());
  return R;
}

template <>
inline Mat<1> rotation_between<1>(const Vec<1>& from, const Vec<1>& to) {
  Mat<1> r;
  r(0, 0) = (from[0] * to[0] >= 0) ? 1.0 : -1.0;
  return r;
}

inline double sq(double x) { return x * x; }

}  // namespace otlab
