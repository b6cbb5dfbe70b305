#pragma once

// Limiting bipolar drift-diffusion-Poisson solver, in deterministic and
// Galerkin-projected forms: the vanishing-mean-free-path reference for the
// kinetic scheme.
//
//   dt n = dx( mu_n (dx n + n E) ) + R(n, p)
//   dt p = dx( mu_p (dx p - p E) ) + R(n, p)
//   -gamma dx E = n - p - C(x),  E = -dx phi
//   R(n, p) = A - n p B
//
// with A = integral of sigma_I(v,w) M_n(v) over both velocity spaces and
// B the same integral weighted by M_p(w)^2.  Discretization: forward Euler
// in time, conservative central face fluxes in space, Dirichlet densities
// n = p = boundary_density via mirror ghosts, Poisson refreshed every step.
//
// The Galerkin form evolves polynomial-chaos coefficients of n and p with
// mode-coupled diffusion matrices W_i = <mu_i(z) psi_k psi_l>, the drift
// contraction sum_{m,n} E_m rho_n G_{mnl}, and the projected source
// R_k = <A psi_k> - sum_{m,n} rho_n,m rho_p,n <B psi_m psi_n psi_k>.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "bkap/common.hpp"
#include "bkap/gpc.hpp"
#include "bkap/grid.hpp"
#include "bkap/kinetic_ap.hpp"
#include "bkap/physics.hpp"

namespace bkap {

struct DdState {
  std::vector<double> n, p;        // electron / hole densities per cell
  std::vector<double> phi, e_field;
  double time = 0.0;
};

// R(n, p) = A - n p B with A, B >= 0.
struct RecombinationCoeffs {
  double A = 0.0;
  double B = 0.0;
  double operator()(double n, double p) const { return A - n * p * B; }
};

inline RecombinationCoeffs recombination_coeffs(const RandomInputs& inputs,
                                                const SpeciesPair<VelocityGrid>& grids, double z) {
  const auto tab = build_kernel_table(inputs.sigmaI, 0.0, z, grids[0], grids[1]);
  const auto M1 = maxwellian_values(grids[0], 0, grids[1].beta_eff);
  const auto M2 = maxwellian_values(grids[1], 1, grids[1].beta_eff);
  RecombinationCoeffs rc;
  for (int m = 0; m < grids[0].n_nodes; ++m) {
    double row_a = 0.0, row_b = 0.0;
    for (int l = 0; l < grids[1].n_nodes; ++l) {
      const double s = grids[1].weights[l] * tab(m, l);
      row_a += s;
      row_b += s * M2[l] * M2[l];
    }
    rc.A += grids[0].weights[m] * M1[m] * row_a;
    rc.B += grids[0].weights[m] * M1[m] * row_b;
  }
  ensure(rc.A >= 0.0 && rc.B >= 0.0, "recombination_coeffs: negative coefficient");
  return rc;
}

// Zero-order mobilities mu_{0,n}, mu_{0,p} at one realization z.  Solves the
// discrete half-range problem Q_i h = s_i v M_i (s_n = 1, s_p = beta) with
// the zero-density constraint via a bordered linear system, then reads
// mu_0 = -sum w (s_i v) h.  For velocity-independent kernels this reproduces
// the closed forms mu_n = 1/sigma_1 and mu_p = beta/sigma_2 exactly.
inline SpeciesPair<double> mobilities(const RandomInputs& inputs,
                                      const SpeciesPair<VelocityGrid>& grids, double z) {
  SpeciesPair<double> mu{0.0, 0.0};
  const double beta = grids[1].beta_eff;
  for (int s = 0; s < 2; ++s) {
    const VelocityGrid& g = grids[s];
    const int nv = g.n_nodes;
    const auto M = maxwellian_values(g, s, beta);
    const auto tab = build_kernel_table(inputs.sigma(s), 0.0, z, g, g);
    const auto lam = collision_frequency(tab, g, M);
    const double drive = (s == 0) ? 1.0 : beta;

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(nv + 1, nv + 1);
    Eigen::VectorXd b(nv + 1);
    for (int m = 0; m < nv; ++m) {
      for (int l = 0; l < nv; ++l) A(m, l) = M[m] * tab(m, l) * g.weights[l];
      A(m, m) -= lam[m];
      A(m, nv) = M[m];          // kernel direction: fixes the free density
      A(nv, m) = g.weights[m];  // zero-density constraint
      b(m) = drive * g.nodes[m] * M[m];
    }
    b(nv) = 0.0;

    Eigen::VectorXd h = A.partialPivLu().solve(b);
    const double resid = (A * h - b).cwiseAbs().maxCoeff();
    ensure(std::isfinite(resid) && resid <= 1e-10 * std::max(1.0, b.cwiseAbs().maxCoeff()),
           "mobilities: singular half-range solve");

    double m0 = 0.0;
    for (int m = 0; m < nv; ++m) m0 -= g.weights[m] * drive * g.nodes[m] * h(m);
    ensure(m0 > 0.0, "mobilities: nonpositive mobility");
    mu[s] = m0;
  }
  return mu;
}

struct DdConfig {
  double dt = 2e-6;
  double gamma = 0.002;
  double phi_left = 0.0;
  double phi_right = 5.0;
  double boundary_density = 1.0;
  FieldMode field = FieldMode::kSelfConsistent;
};

inline DdState dd_initialize(const SpatialMesh& mesh, const std::vector<double>& n0,
                             const std::vector<double>& p0, const std::vector<double>& doping,
                             const DdConfig& cfg) {
  require(static_cast<int>(n0.size()) == mesh.n_cells &&
              static_cast<int>(p0.size()) == mesh.n_cells,
          "dd_initialize: density size mismatch");
  DdState st;
  st.n = n0;
  st.p = p0;
  st.phi.assign(mesh.n_cells, 0.0);
  st.e_field.assign(mesh.n_cells, 0.0);
  if (cfg.field == FieldMode::kSelfConsistent)
    poisson_solve(mesh, st.n, st.p, doping, cfg.gamma, cfg.phi_left, cfg.phi_right, st.phi,
                  st.e_field);
  return st;
}

namespace detail {

// Conservative face fluxes J = mu (dq/dx + drift_sign q_face E_face) for one
// species; q and phi are cell arrays, ghosts implement Dirichlet data
// (mirror rule 2*bc - edge).  faces has size nx + 1.
inline void dd_face_fluxes(const std::vector<double>& q, const std::vector<double>& phi, double mu,
                           double drift_sign, double dx, double q_bc_left, double q_bc_right,
                           double phi_left, double phi_right, bool with_field,
                           std::vector<double>& faces) {
  const int nx = static_cast<int>(q.size());
  faces.resize(nx + 1);
  auto qv = [&](int i) {
    if (i < 0) return 2.0 * q_bc_left - q[0];
    if (i >= nx) return 2.0 * q_bc_right - q[nx - 1];
    return q[i];
  };
  auto pv = [&](int i) {
    if (i < 0) return 2.0 * phi_left - phi[0];
    if (i >= nx) return 2.0 * phi_right - phi[nx - 1];
    return phi[i];
  };
  for (int f = 0; f <= nx; ++f) {
    const double ql = qv(f - 1), qr = qv(f);
    double flux = (qr - ql) / dx;
    if (with_field) {
      const double e_face = -(pv(f) - pv(f - 1)) / dx;
      flux += drift_sign * 0.5 * (ql + qr) * e_face;
    }
    faces[f] = mu * flux;
  }
}

}  // namespace detail

// One forward-Euler step of the bipolar drift-diffusion system.
inline void dd_step(DdState& st, const SpatialMesh& mesh, const std::vector<double>& doping,
                    const RecombinationCoeffs& rc, const SpeciesPair<double>& mu,
                    const DdConfig& cfg) {
  const int nx = mesh.n_cells;
  const double dx = mesh.dx;
  require(static_cast<int>(st.n.size()) == nx, "dd_step: state size mismatch");
  const double cfl = std::max(mu[0], mu[1]) * cfg.dt / (dx * dx);
  ensure(cfl <= 0.5 + 1e-12, "dd_step: diffusive CFL exceeds 1/2");

  const bool with_field = cfg.field == FieldMode::kSelfConsistent;
  std::vector<double> jn, jp;
  detail::dd_face_fluxes(st.n, st.phi, mu[0], +1.0, dx, cfg.boundary_density,
                         cfg.boundary_density, cfg.phi_left, cfg.phi_right, with_field, jn);
  detail::dd_face_fluxes(st.p, st.phi, mu[1], -1.0, dx, cfg.boundary_density,
                         cfg.boundary_density, cfg.phi_left, cfg.phi_right, with_field, jp);

  for (int i = 0; i < nx; ++i) {
    const double r = rc(st.n[i], st.p[i]);
    st.n[i] += cfg.dt * ((jn[i + 1] - jn[i]) / dx + r);
    st.p[i] += cfg.dt * ((jp[i + 1] - jp[i]) / dx + r);
  }

  if (with_field)
    poisson_solve(mesh, st.n, st.p, doping, cfg.gamma, cfg.phi_left, cfg.phi_right, st.phi,
                  st.e_field);
  st.time += cfg.dt;
}

// ---------------------------------------------------------------------------
// Galerkin-projected drift-diffusion system over the chaos modes.

struct DdGalerkinState {
  Field2D rho_n, rho_p;    // (nx, K) mode coefficients of the densities
  Field2D phi_hat, e_hat;  // (nx, K) mode coefficients of potential / field
  double time = 0.0;
};

// z-projected coefficient operators for the Galerkin step.  W_i are the
// mode-coupled mobility matrices <mu_{0,i}(z) psi_k psi_l>; A_hat and BF are
// the projected generation and recombination kernels of R.
struct DdGalerkinOperators {
  int K = 0;
  SpeciesPair<std::vector<double>> W;  // K x K, row-major, symmetric
  std::vector<double> A_hat;           // K
  std::vector<double> BF;              // K^3, index (m*K + n)*K + k
  double max_diffusion = 0.0;          // max eigenvalue over both W_i
};

inline DdGalerkinOperators dd_galerkin_operators(const GpcBasis& basis, const RandomInputs& inputs,
                                                 const SpeciesPair<VelocityGrid>& grids,
                                                 const SpectralTensors& tensors,
                                                 const ZQuadrature& quad) {
  const int K = basis.size();
  require(tensors.K == K, "dd_galerkin_operators: tensor/basis size mismatch");
  DdGalerkinOperators ops;
  ops.K = K;

  // Mobility matrices by z-quadrature of the per-realization mobility.  For
  // z-independent kernels this collapses to mu * Identity.
  for (int s = 0; s < 2; ++s) ops.W[s].assign(static_cast<std::size_t>(K) * K, 0.0);
  if (inputs.sigma_zfree(0) && inputs.sigma_zfree(1)) {
    const auto mu = mobilities(inputs, grids, 0.0);
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < K; ++a) ops.W[s][a * K + a] = mu[s];
  } else {
    std::vector<double> psi(K);
    for (int q = 0; q < quad.size(); ++q) {
      basis.eval_all(quad.nodes[q], psi.data());
      const auto mu = mobilities(inputs, grids, quad.nodes[q]);
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < K; ++a)
          for (int b = 0; b < K; ++b)
            ops.W[s][a * K + b] += quad.weights[q] * mu[s] * psi[a] * psi[b];
    }
  }
  for (int s = 0; s < 2; ++s) {
    Eigen::Map<const Eigen::MatrixXd> W(ops.W[s].data(), K, K);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(W);
    ensure(es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0,
           "dd_galerkin_operators: mobility matrix not positive definite");
    ops.max_diffusion = std::max(ops.max_diffusion, es.eigenvalues().maxCoeff());
  }

  // Projected source: A_hat from the D rows, BF from the F blocks, both
  // integrated over the velocity grids with the equilibrium weights of R.
  const auto M1 = maxwellian_values(grids[0], 0, grids[1].beta_eff);
  const auto M2 = maxwellian_values(grids[1], 1, grids[1].beta_eff);
  ops.A_hat.assign(K, 0.0);
  ops.BF.assign(static_cast<std::size_t>(K) * K * K, 0.0);
  for (int m = 0; m < grids[0].n_nodes; ++m)
    for (int l = 0; l < grids[1].n_nodes; ++l) {
      const double wa = grids[0].weights[m] * M1[m] * grids[1].weights[l];
      const double wb = wa * M2[l] * M2[l];
      const double* db = tensors.d_block(m, l);
      const double* fb = tensors.f_block(m, l);
      for (int k = 0; k < K; ++k) ops.A_hat[k] += wa * db[k];
      for (std::size_t e = 0; e < static_cast<std::size_t>(K) * K * K; ++e)
        ops.BF[e] += wb * fb[e];
    }
  return ops;
}

inline DdGalerkinState dd_galerkin_initialize(const SpatialMesh& mesh, const Field2D& rho_n0,
                                              const Field2D& rho_p0, const SpectralTensors& tensors,
                                              const DdConfig& cfg) {
  const int nx = mesh.n_cells, K = tensors.K;
  require(rho_n0.nx() == nx && rho_n0.nv() == K && rho_p0.nx() == nx && rho_p0.nv() == K,
          "dd_galerkin_initialize: coefficient field size mismatch");
  DdGalerkinState st;
  st.rho_n = rho_n0;
  st.rho_p = rho_p0;
  st.phi_hat = Field2D(nx, K);
  st.e_hat = Field2D(nx, K);
  if (cfg.field == FieldMode::kSelfConsistent) {
    std::vector<double> rn(nx), rp(nx), dp(nx), phi(nx), ef(nx);
    for (int k = 0; k < K; ++k) {
      for (int i = 0; i < nx; ++i) {
        rn[i] = st.rho_n(i, k);
        rp[i] = st.rho_p(i, k);
        dp[i] = tensors.l_row(i)[k];
      }
      const double bl = (k == 0) ? cfg.phi_left : 0.0;
      const double br = (k == 0) ? cfg.phi_right : 0.0;
      poisson_solve(mesh, rn, rp, dp, cfg.gamma, bl, br, phi, ef);
      for (int i = 0; i < nx; ++i) {
        st.phi_hat(i, k) = phi[i];
        st.e_hat(i, k) = ef[i];
      }
    }
  }
  return st;
}

// One forward-Euler step of the Galerkin drift-diffusion system.  The
// Dirichlet density data is deterministic, so mode 0 mirrors around
// boundary_density and higher modes mirror around zero; potential modes
// k >= 1 carry homogeneous Dirichlet data.
inline void dd_galerkin_step(DdGalerkinState& st, const SpatialMesh& mesh,
                             const SpectralTensors& tensors, const DdGalerkinOperators& ops,
                             const DdConfig& cfg) {
  const int nx = mesh.n_cells, K = ops.K;
  const double dx = mesh.dx;
  require(st.rho_n.nx() == nx && st.rho_n.nv() == K, "dd_galerkin_step: state size mismatch");
  ensure(ops.max_diffusion * cfg.dt / (dx * dx) <= 0.5 + 1e-12,
         "dd_galerkin_step: diffusive CFL exceeds 1/2");

  const bool with_field = cfg.field == FieldMode::kSelfConsistent;
  // mode values at cell i with Dirichlet mirror ghosts
  auto mode_at = [&](const Field2D& f, int i, int k, double bc0) {
    if (i < 0) return 2.0 * (k == 0 ? bc0 : 0.0) - f(0, k);
    if (i >= nx) return 2.0 * (k == 0 ? bc0 : 0.0) - f(nx - 1, k);
    return f(i, k);
  };
  auto phi_at = [&](int i, int k) {
    if (i < 0) return 2.0 * (k == 0 ? cfg.phi_left : 0.0) - st.phi_hat(0, k);
    if (i >= nx) return 2.0 * (k == 0 ? cfg.phi_right : 0.0) - st.phi_hat(nx - 1, k);
    return st.phi_hat(i, k);
  };

  // face fluxes per species and mode: J_k = sum_l W_kl (d_l +/- drift_l)
  Field2D jn(nx + 1, K), jp(nx + 1, K);
  std::vector<double> dvec(K), drift(K), ef(K), qn(K), qp(K);
  for (int f = 0; f <= nx; ++f) {
    for (int m = 0; m < K; ++m)
      ef[m] = with_field ? -(phi_at(f, m) - phi_at(f - 1, m)) / dx : 0.0;
    for (int s = 0; s < 2; ++s) {
      const Field2D& rho = (s == 0) ? st.rho_n : st.rho_p;
      const double sgn = (s == 0) ? 1.0 : -1.0;
      std::vector<double>& qf = (s == 0) ? qn : qp;
      for (int l = 0; l < K; ++l) {
        const double ql = mode_at(rho, f - 1, l, cfg.boundary_density);
        const double qr = mode_at(rho, f, l, cfg.boundary_density);
        dvec[l] = (qr - ql) / dx;
        qf[l] = 0.5 * (ql + qr);
      }
      for (int l = 0; l < K; ++l) {
        double acc = 0.0;
        if (with_field)
          for (int m = 0; m < K; ++m)
            for (int n = 0; n < K; ++n) acc += ef[m] * qf[n] * tensors.g(m, n, l);
        drift[l] = acc;
      }
      Field2D& jf = (s == 0) ? jn : jp;
      for (int k = 0; k < K; ++k) {
        double acc = 0.0;
        for (int l = 0; l < K; ++l) acc += ops.W[s][k * K + l] * (dvec[l] + sgn * drift[l]);
        jf(f, k) = acc;
      }
    }
  }

  // update with the projected source R_k = A_hat_k - sum_{m,n} rho_n,m
  // rho_p,n BF_{mnk}
  std::vector<double> rk(K);
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < K; ++k) {
      double acc = ops.A_hat[k];
      for (int m = 0; m < K; ++m)
        for (int n = 0; n < K; ++n)
          acc -= st.rho_n(i, m) * st.rho_p(i, n) * ops.BF[(m * K + n) * K + k];
      rk[k] = acc;
    }
    for (int k = 0; k < K; ++k) {
      st.rho_n(i, k) += cfg.dt * ((jn(i + 1, k) - jn(i, k)) / dx + rk[k]);
      st.rho_p(i, k) += cfg.dt * ((jp(i + 1, k) - jp(i, k)) / dx + rk[k]);
    }
  }

  if (with_field) {
    std::vector<double> rn(nx), rp(nx), dp(nx), phi(nx), efield(nx);
    for (int k = 0; k < K; ++k) {
      for (int i = 0; i < nx; ++i) {
        rn[i] = st.rho_n(i, k);
        rp[i] = st.rho_p(i, k);
        dp[i] = tensors.l_row(i)[k];
      }
      const double bl = (k == 0) ? cfg.phi_left : 0.0;
      const double br = (k == 0) ? cfg.phi_right : 0.0;
      poisson_solve(mesh, rn, rp, dp, cfg.gamma, bl, br, phi, efield);
      for (int i = 0; i < nx; ++i) {
        st.phi_hat(i, k) = phi[i];
        st.e_hat(i, k) = efield[i];
      }
    }
  }
  st.time += cfg.dt;
}

}  // namespace bkap
