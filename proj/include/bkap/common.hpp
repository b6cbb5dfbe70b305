#pragma once

// Shared small utilities: dense (x,v) field storage, precondition checks,
// and a few numeric helpers used across the solver suite.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bkap {

// Precondition failure -> invalid_argument; runtime failure (CFL violation,
// solver breakdown) -> runtime_error.  Callers that want exit-code mapping
// catch these at the CLI boundary.
inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

inline void ensure(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error(what);
}

// Dense row-major scalar field over (cell, velocity-node) indices.
class Field2D {
 public:
  Field2D() = default;
  Field2D(int nx, int nv, double fill = 0.0)
      : nx_(nx), nv_(nv), data_(static_cast<std::size_t>(nx) * nv, fill) {}

  int nx() const { return nx_; }
  int nv() const { return nv_; }

  double& operator()(int i, int m) { return data_[static_cast<std::size_t>(i) * nv_ + m]; }
  double operator()(int i, int m) const { return data_[static_cast<std::size_t>(i) * nv_ + m]; }

  double* row(int i) { return data_.data() + static_cast<std::size_t>(i) * nv_; }
  const double* row(int i) const { return data_.data() + static_cast<std::size_t>(i) * nv_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }

 private:
  int nx_ = 0;
  int nv_ = 0;
  std::vector<double> data_;
};

// One object per particle species; index 0 = electrons, 1 = holes.
template <typename T>
using SpeciesPair = std::array<T, 2>;

inline double sqr(double x) { return x * x; }

// Ordinary least squares y ~ a + b x;  returns {intercept, slope, r_squared}.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "linear_fit: need >= 2 paired samples");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0, "linear_fit: degenerate abscissae");
  LinearFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r_squared = (syy > 0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return out;
}

}  // namespace bkap
