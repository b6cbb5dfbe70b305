#pragma once

// Discretization primitives: uniform cell-centered spatial mesh,
// Gauss-Hermite velocity quadrature (symmetrized), and difference operators
// (3-point centered d/dx with one-sided second-order ends, dense spectral d/dv).

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "bkap/common.hpp"

namespace bkap {

struct SpatialMesh {
  int n_cells = 0;
  double x_left = 0.0;
  double x_right = 1.0;
  double dx = 0.0;
  std::vector<double> centers;  // x_i = x_left + (i + 1/2) dx
};

inline SpatialMesh build_mesh(double x_left, double x_right, int n_cells) {
  require(n_cells >= 4, "build_mesh: n_cells must be >= 4");
  require(x_right > x_left, "build_mesh: domain must have positive length");
  SpatialMesh m;
  m.n_cells = n_cells;
  m.x_left = x_left;
  m.x_right = x_right;
  m.dx = (x_right - x_left) / n_cells;
  m.centers.resize(n_cells);
  for (int i = 0; i < n_cells; ++i) m.centers[i] = x_left + (i + 0.5) * m.dx;
  return m;
}

// Velocity grid tuned to a Gaussian envelope exp(-beta_eff v^2 / 2).
// 'weights' quadrate plain dv-integrals of functions with that envelope:
//   sum_m weights[m] g(nodes[m])  ~=  integral g(v) dv,
// exact whenever g(v) = poly(v) * exp(-beta_eff v^2 / 2) with degree
// poly <= 2 n - 1.  Nodes are symmetric around 0 and sorted ascending;
// reflect[m] gives the index of -nodes[m] (bit-exact).
//
// The differentiation matrix dmat is the envelope-weighted Lagrange
// (Hermite-function) derivative: it is exact on poly * envelope profiles,
// the same space the quadrature resolves.  Constant offsets are not in that
// space, so the dv helpers subtract the mean of the two outermost nodal
// values first; decaying profiles are essentially zero there, and genuine
// constants are annihilated exactly.  Plain polynomials without the Gaussian
// envelope are differentiated only approximately — the operator targets the
// kinetic distribution class.
struct VelocityGrid {
  int n_nodes = 0;
  double beta_eff = 1.0;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<int> reflect;
  std::vector<double> dmat;  // dense n x n differentiation matrix, row-major

  double max_abs_node() const { return std::max(std::abs(nodes.front()), std::abs(nodes.back())); }

  double tail_offset(const double* f) const {
    return 0.5 * (f[0] + f[n_nodes - 1]);
  }
  // Derivative at one node.
  double dv(int row, const double* f) const {
    const double off = tail_offset(f);
    const double* d = dmat.data() + static_cast<std::size_t>(row) * n_nodes;
    double s = 0.0;
    for (int l = 0; l < n_nodes; ++l) s += d[l] * (f[l] - off);
    return s;
  }
  // Derivative at every node; out may not alias f.
  void dv_profile(const double* f, double* out) const {
    const double off = tail_offset(f);
    for (int m = 0; m < n_nodes; ++m) {
      const double* d = dmat.data() + static_cast<std::size_t>(m) * n_nodes;
      double s = 0.0;
      for (int l = 0; l < n_nodes; ++l) s += d[l] * (f[l] - off);
      out[m] = s;
    }
  }
};

namespace detail {

// Nodes/weights of the n-point Gauss-Hermite rule (weight exp(-u^2)) via the
// symmetric tridiagonal Jacobi matrix; eigenvalues ascend, first-component
// squares give the weights (scaled by mu0 = sqrt(pi)).
inline void gauss_hermite(int n, std::vector<double>& u, std::vector<double>& w) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(0.5 * k);
    J(k - 1, k) = b;
    J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  ensure(es.info() == Eigen::Success, "gauss_hermite: eigen decomposition failed");
  const double mu0 = std::sqrt(M_PI);
  u.resize(n);
  w.resize(n);
  for (int m = 0; m < n; ++m) {
    u[m] = es.eigenvalues()(m);
    const double v0 = es.eigenvectors()(0, m);
    w[m] = mu0 * v0 * v0;
  }
}

// Differentiation matrix exact on f(x) = p(x) exp(-c x^2) with deg p < n:
// the Lagrange derivative of the envelope-normalized values, with the
// envelope's log-derivative folded into the diagonal.  Barycentric weights
// and envelope ratios are carried in log space so that large node counts do
// not overflow the intermediate products.
inline std::vector<double> weighted_diff_matrix(const std::vector<double>& x, double c) {
  const int n = static_cast<int>(x.size());
  std::vector<double> logw(n, 0.0);
  std::vector<double> sgnw(n, 1.0);
  for (int m = 0; m < n; ++m) {
    for (int j = 0; j < n; ++j) {
      if (j == m) continue;
      const double d = x[m] - x[j];
      logw[m] -= std::log(std::abs(d));
      if (d < 0) sgnw[m] = -sgnw[m];
    }
  }
  std::vector<double> D(static_cast<std::size_t>(n) * n, 0.0);
  for (int m = 0; m < n; ++m) {
    double diag = -2.0 * c * x[m];  // alpha'/alpha for alpha = exp(-c x^2)
    for (int l = 0; l < n; ++l) {
      if (l == m) continue;
      diag += 1.0 / (x[m] - x[l]);  // Lagrange cardinal derivative at its node
      const double expo = (logw[l] - logw[m]) + c * (x[l] * x[l] - x[m] * x[m]);
      const double val = sgnw[l] * sgnw[m] * std::exp(expo) / (x[m] - x[l]);
      D[static_cast<std::size_t>(m) * n + l] = val;
    }
    D[static_cast<std::size_t>(m) * n + m] = diag;
  }
  return D;
}

}  // namespace detail

inline VelocityGrid hermite_rule(int n_nodes, double beta_eff) {
  require(n_nodes >= 8 && n_nodes % 2 == 0, "hermite_rule: n_nodes must be even and >= 8");
  require(beta_eff > 0, "hermite_rule: beta_eff must be positive");
  std::vector<double> u, gw;
  detail::gauss_hermite(n_nodes, u, gw);

  // Symmetrize: average mirror pairs so nodes/weights are bit-exact mirrors.
  const int h = n_nodes / 2;
  for (int m = 0; m < h; ++m) {
    const int mm = n_nodes - 1 - m;
    const double mag = 0.5 * (std::abs(u[m]) + std::abs(u[mm]));
    u[m] = -mag;
    u[mm] = mag;
    const double wavg = 0.5 * (gw[m] + gw[mm]);
    gw[m] = wavg;
    gw[mm] = wavg;
  }

  VelocityGrid g;
  g.n_nodes = n_nodes;
  g.beta_eff = beta_eff;
  g.nodes.resize(n_nodes);
  g.weights.resize(n_nodes);
  g.reflect.resize(n_nodes);
  const double scale = std::sqrt(2.0 / beta_eff);
  for (int m = 0; m < n_nodes; ++m) {
    g.nodes[m] = u[m] * scale;
    // Fold the Gaussian envelope into the weight: integrand supplied as a
    // plain function of v, envelope exp(-beta_eff v^2/2) = exp(-u^2) removed.
    g.weights[m] = gw[m] * std::exp(u[m] * u[m]) * scale;
    g.reflect[m] = n_nodes - 1 - m;
  }
  for (int m = 0; m < n_nodes; ++m) {
    ensure(g.nodes[g.reflect[m]] == -g.nodes[m],
           "hermite_rule: node symmetry violated");
    ensure(std::abs(g.weights[g.reflect[m]] - g.weights[m]) <= 1e-12 * g.weights[m],
           "hermite_rule: weight symmetry violated");
  }
  g.dmat = detail::weighted_diff_matrix(g.nodes, 0.5 * beta_eff);
  return g;
}

// d/dx of a per-cell profile: centered interior, one-sided second order at
// both ends.  dx must be the uniform spacing.
inline std::vector<double> d_dx_profile(const std::vector<double>& f, double dx) {
  const int n = static_cast<int>(f.size());
  require(n >= 3, "d_dx_profile: need at least 3 samples");
  require(dx > 0, "d_dx_profile: dx must be positive");
  std::vector<double> out(n);
  const double inv2 = 1.0 / (2.0 * dx);
  out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) * inv2;
  for (int i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) * inv2;
  out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * inv2;
  return out;
}

// In-place variants over (x,v) fields.
inline void d_dx_field(const Field2D& f, double dx, Field2D& out) {
  const int nx = f.nx(), nv = f.nv();
  require(nx >= 3, "d_dx_field: need at least 3 cells");
  const double inv2 = 1.0 / (2.0 * dx);
  for (int m = 0; m < nv; ++m) {
    out(0, m) = (-3.0 * f(0, m) + 4.0 * f(1, m) - f(2, m)) * inv2;
    out(nx - 1, m) = (3.0 * f(nx - 1, m) - 4.0 * f(nx - 2, m) + f(nx - 3, m)) * inv2;
  }
  for (int i = 1; i + 1 < nx; ++i)
    for (int m = 0; m < nv; ++m) out(i, m) = (f(i + 1, m) - f(i - 1, m)) * inv2;
}

inline void d_dv_field(const Field2D& f, const VelocityGrid& g, Field2D& out) {
  const int nx = f.nx();
  for (int i = 0; i < nx; ++i) g.dv_profile(f.row(i), out.row(i));
}

}  // namespace bkap
