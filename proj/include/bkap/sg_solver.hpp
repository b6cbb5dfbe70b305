#pragma once

// Stochastic Galerkin solver for the bipolar kinetic system in diffusive
// scaling.  The state carries K spectral modes of each parity field
// (orthonormal Legendre chaos in the random variable z); one step applies
//   1. mode-wise penalized relaxation of the even parities,
//   2. mode-wise Poisson refresh of the potential modes,
//   3. relaxation of the odd parities with the K x K collision-frequency
//      matrix H_i(v) (a per-velocity linear solve, factored once at setup),
//   4. limited upwind transport of the mode-wise Riemann invariants with
//      tensor-contracted force terms and Galerkin-projected
//      generation-recombination sources.
// Random inputs must be x-independent in the kernels (tensor assembly
// requirement); doping and initial data may depend on both x and z.
//
// For z-free collision kernels the tensors are diagonal and the relaxation
// updates reduce to the per-mode scalar theta formulas of the deterministic
// scheme; the implementation takes that path unless force_dense_paths() is
// called (diagnostic hook so tests can exercise the dense tensor algebra on
// problems with a known diagonal reduction).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "bkap/common.hpp"
#include "bkap/gpc.hpp"
#include "bkap/grid.hpp"
#include "bkap/kinetic_ap.hpp"
#include "bkap/physics.hpp"

namespace bkap {

// Spectral modes of the parity fields: r[k][species](x, v).
struct GpcState {
  std::vector<SpeciesPair<Field2D>> r, j;
  double time = 0.0;
};

// Spectral modes of the macroscopic fields: rho[species](mode, x),
// phi(mode, x), e(mode, x).
struct GpcMacro {
  SpeciesPair<Field2D> rho;
  Field2D phi, e;
};

// Galerkin generation-recombination sources at one cell: (mode, node).
struct SgSources {
  Field2D i1_plus, i1_minus;  // electron grid
  Field2D i2_plus, i2_minus;  // hole grid
};

class SgSolver {
 public:
  SgSolver(const SpatialMesh& mesh, const SpeciesParams& params, const RandomInputs& inputs,
           const ApConfig& cfg, int n_modes, int n_z_quad, int nv_electrons, int nv_holes)
      : mesh_(mesh),
        params_(params),
        inputs_(inputs),
        cfg_(cfg),
        basis_(n_modes),
        quad_(z_quadrature(n_z_quad)),
        K_(n_modes) {
    require(params.beta > 0 && params.gamma > 0, "SgSolver: positive beta/gamma required");
    require(cfg.dt > 0 && cfg.epsilon > 0, "SgSolver: positive dt/epsilon required");
    require(!(cfg.boundary == BoundaryKind::kPeriodic && cfg.field == FieldMode::kSelfConsistent),
            "SgSolver: periodic boundaries require the zero-field mode");
    require(inputs.kernels_xfree, "SgSolver: kernels must be x-independent");
    grids_[0] = hermite_rule(nv_electrons, 1.0);
    grids_[1] = hermite_rule(nv_holes, params.beta);
    for (int s = 0; s < 2; ++s) mvals_[s] = maxwellian_values(grids_[s], s, params.beta);
    phi_ctl_ = phi_control(cfg.epsilon);

    tensors_ = assemble_tensors(basis_, inputs, grids_, mesh, quad_);

    const int nx = mesh.n_cells;
    // doping modes: row k holds the k-th spectral coefficient of C(x, z)
    doping_modes_ = Field2D(K_, nx);
    for (int i = 0; i < nx; ++i) {
      const double* lr = tensors_.l_row(i);
      for (int k = 0; k < K_; ++k) doping_modes_(k, i) = lr[k];
    }

    // deterministic (z = 0) kernel tables for the diagonal fast paths, the
    // penalty bound, and the Galerkin source contractions
    for (int s = 0; s < 2; ++s) {
      sig0_[s] = build_kernel_table(inputs.sigma(s), mesh.centers[0], 0.0, grids_[s], grids_[s]);
      lam0_[s] = collision_frequency(sig0_[s], grids_[s], mvals_[s]);
      double lmax = 0.0;
      if (inputs.sigma_zfree(s)) {
        for (double l : lam0_[s]) lmax = std::max(lmax, l);
      } else {
        for (int q = 0; q < quad_.size(); ++q) {
          const auto tab = build_kernel_table(inputs.sigma(s), mesh.centers[0], quad_.nodes[q],
                                              grids_[s], grids_[s]);
          const auto lam = collision_frequency(tab, grids_[s], mvals_[s]);
          for (double l : lam) lmax = std::max(lmax, l);
        }
      }
      eta_[s] = cfg.eta_safety * lmax;
    }
    sigI0_ = build_kernel_table(inputs.sigmaI, mesh.centers[0], 0.0, grids_[0], grids_[1]);
    if (inputs.sigmaI_zfree) {
      sources_enabled_ = !sigI0_.all_zero();
    } else {
      bool any = false;
      for (double f : tensors_.F) any = any || f != 0.0;
      sources_enabled_ = any;
    }

    // factor (eps^2 I + dt H_i(v)) once per species and velocity node
    const double eps2 = cfg.epsilon * cfg.epsilon;
    for (int s = 0; s < 2; ++s) {
      const int nv = grids_[s].n_nodes;
      llt_[s].resize(nv);
      for (int m = 0; m < nv; ++m) {
        Eigen::MatrixXd A(K_, K_);
        const double* hb = tensors_.h_block(s, m);
        for (int a = 0; a < K_; ++a)
          for (int b = 0; b < K_; ++b) A(a, b) = cfg.dt * hb[a * K_ + b];
        A.diagonal().array() += eps2;
        llt_[s][m].compute(A);
        ensure(llt_[s][m].info() == Eigen::Success,
               "SgSolver: odd-parity relaxation matrix is not positive definite");
      }
    }

    state_.time = 0.0;
    state_.r.resize(K_);
    state_.j.resize(K_);
    for (int k = 0; k < K_; ++k)
      for (int s = 0; s < 2; ++s) {
        state_.r[k][s] = Field2D(nx, grids_[s].n_nodes);
        state_.j[k][s] = Field2D(nx, grids_[s].n_nodes);
      }
    for (int s = 0; s < 2; ++s) macro_.rho[s] = Field2D(K_, nx);
    macro_.phi = Field2D(K_, nx);
    macro_.e = Field2D(K_, nx);
    init_from_inputs();
  }

  // Initial modes by spectral projection of the initial-distribution closure;
  // z-free initial data fills mode 0 and leaves fluctuation modes exactly 0.
  void init_from_inputs() {
    const int nx = mesh_.n_cells;
    for (int k = 0; k < K_; ++k)
      for (int s = 0; s < 2; ++s) {
        state_.r[k][s].fill(0.0);
        state_.j[k][s].fill(0.0);
      }
    if (inputs_.initial_zfree) {
      SpeciesPair<Field2D> f;
      for (int s = 0; s < 2; ++s) {
        f[s] = Field2D(nx, grids_[s].n_nodes);
        for (int i = 0; i < nx; ++i)
          for (int m = 0; m < grids_[s].n_nodes; ++m)
            f[s](i, m) = inputs_.initial(s, mesh_.centers[i], grids_[s].nodes[m], 0.0);
      }
      ParityState det = decompose(f[0], f[1], grids_, cfg_.epsilon);
      for (int s = 0; s < 2; ++s) {
        state_.r[0][s] = det.r[s];
        state_.j[0][s] = det.j[s];
      }
    } else {
      std::vector<double> psi(K_);
      for (int q = 0; q < quad_.size(); ++q) {
        const double zq = quad_.nodes[q];
        basis_.eval_all(zq, psi.data());
        for (int s = 0; s < 2; ++s) {
          const int nv = grids_[s].n_nodes;
          for (int i = 0; i < nx; ++i)
            for (int m = 0; m < nv; ++m) {
              const int mr = grids_[s].reflect[m];
              const double fv = inputs_.initial(s, mesh_.centers[i], grids_[s].nodes[m], zq);
              const double fr = inputs_.initial(s, mesh_.centers[i], grids_[s].nodes[mr], zq);
              const double rv = 0.5 * (fv + fr);
              const double jv = (fv - fr) / (2.0 * cfg_.epsilon);
              for (int k = 0; k < K_; ++k) {
                state_.r[k][s](i, m) += quad_.weights[q] * psi[k] * rv;
                state_.j[k][s](i, m) += quad_.weights[q] * psi[k] * jv;
              }
            }
        }
      }
    }
    state_.time = 0.0;
    update_macro();
    poisson_refresh();
  }

  // Diagnostic hook: run the dense tensor paths (K x K collision matrices and
  // linear solves) even when the kernels are z-free and the diagonal
  // reduction would apply.
  void force_dense_paths() { force_dense_ = true; }

  // Step 1: penalized relaxation of the even-parity modes.
  void relaxation_r() {
    const double eps2 = cfg_.epsilon * cfg_.epsilon;
    for (int s = 0; s < 2; ++s) {
      const double theta1 = cfg_.dt / (eps2 + eta_[s] * cfg_.dt);
      const int nv = grids_[s].n_nodes;
      if (inputs_.sigma_zfree(s) && !force_dense_) {
        // diagonal reduction: the deterministic collision operator per mode
        std::vector<double> Qr(nv);
        for (int k = 0; k < K_; ++k)
          for (int i = 0; i < mesh_.n_cells; ++i) {
            double* row = state_.r[k][s].row(i);
            apply_Q(sig0_[s], grids_[s], mvals_[s], lam0_[s], row, Qr.data());
            for (int m = 0; m < nv; ++m) row[m] += theta1 * Qr[m];
          }
        continue;
      }
      // dense path: (Q_i)_k(r-hat)(v) = M(v) sum_n sum_l w_l B_kn(v,w_l)
      // r-hat_n(w_l) - sum_n H_kn(v) r-hat_n(v)
      std::vector<double> gain(static_cast<std::size_t>(K_) * nv), qk(K_);
      for (int i = 0; i < mesh_.n_cells; ++i) {
        std::fill(gain.begin(), gain.end(), 0.0);
        for (int m = 0; m < nv; ++m) {
          double* gm = gain.data() + static_cast<std::size_t>(m) * K_;
          for (int l = 0; l < nv; ++l) {
            const double wl = grids_[s].weights[l];
            const double* blk = tensors_.b_block(s, m, l, nv);
            for (int k = 0; k < K_; ++k) {
              double acc = 0.0;
              for (int n = 0; n < K_; ++n) acc += blk[k * K_ + n] * state_.r[n][s](i, l);
              gm[k] += wl * acc;
            }
          }
        }
        for (int m = 0; m < nv; ++m) {
          const double* hb = tensors_.h_block(s, m);
          const double* gm = gain.data() + static_cast<std::size_t>(m) * K_;
          for (int k = 0; k < K_; ++k) {
            double loss = 0.0;
            for (int n = 0; n < K_; ++n) loss += hb[k * K_ + n] * state_.r[n][s](i, m);
            qk[k] = mvals_[s][m] * gm[k] - loss;
          }
          for (int k = 0; k < K_; ++k) state_.r[k][s](i, m) += theta1 * qk[k];
        }
      }
    }
  }

  // Step 1.1: mode-wise Poisson refresh from the current density modes.
  void poisson_refresh() {
    update_density();
    if (cfg_.field == FieldMode::kZeroField) {
      macro_.phi.fill(0.0);
      macro_.e.fill(0.0);
      return;
    }
    const int nx = mesh_.n_cells;
    std::vector<double> r1(nx), r2(nx), dop(nx), phi(nx), e(nx);
    for (int k = 0; k < K_; ++k) {
      for (int i = 0; i < nx; ++i) {
        r1[i] = macro_.rho[0](k, i);
        r2[i] = macro_.rho[1](k, i);
        dop[i] = doping_modes_(k, i);
      }
      const double bl = (k == 0) ? cfg_.phi_bc_left : 0.0;
      const double br = (k == 0) ? cfg_.phi_bc_right : 0.0;
      poisson_solve(mesh_, r1, r2, dop, params_.gamma, bl, br, phi, e);
      for (int i = 0; i < nx; ++i) {
        macro_.phi(k, i) = phi[i];
        macro_.e(k, i) = e[i];
      }
    }
  }

  // Step 2: odd-parity relaxation; for z-dependent kernels the update couples
  // modes through (eps^2 I + dt H_i(v)), factored at setup.
  void relaxation_j() {
    const double eps2 = cfg_.epsilon * cfg_.epsilon;
    const double one_minus = 1.0 - eps2 * phi_ctl_;
    std::vector<Field2D> dxr(K_), dvr(K_);
    std::vector<double> ehat(K_), dv(K_), drive(K_);
    Eigen::VectorXd rhs(K_);
    for (int s = 0; s < 2; ++s) {
      const int nv = grids_[s].n_nodes;
      const double sflux = (s == 0) ? 1.0 : params_.beta;
      const double se = (s == 0) ? 1.0 : -1.0;
      for (int k = 0; k < K_; ++k) {
        dxr[k] = Field2D(mesh_.n_cells, nv);
        dvr[k] = Field2D(mesh_.n_cells, nv);
        d_dx_field(state_.r[k][s], mesh_.dx, dxr[k]);
        d_dv_field(state_.r[k][s], grids_[s], dvr[k]);
      }
      const bool fast = inputs_.sigma_zfree(s) && !force_dense_;
      for (int i = 0; i < mesh_.n_cells; ++i) {
        for (int k = 0; k < K_; ++k) ehat[k] = macro_.e(k, i);
        for (int m = 0; m < nv; ++m) {
          for (int k = 0; k < K_; ++k) dv[k] = dvr[k](i, m);
          // drive_k = s_i v d_x r_k - se * [E d_v r]_k (tensor-contracted)
          for (int k = 0; k < K_; ++k) {
            double field = 0.0;
            for (int a = 0; a < K_; ++a) {
              double inner = 0.0;
              for (int b = 0; b < K_; ++b) inner += dv[b] * tensors_.g(a, b, k);
              field += ehat[a] * inner;
            }
            drive[k] = sflux * grids_[s].nodes[m] * dxr[k](i, m) - se * field;
          }
          if (fast) {
            const double lam = lam0_[s][m];
            const double theta2 = eps2 / (eps2 + lam * cfg_.dt);
            const double theta3 = cfg_.dt * one_minus / (eps2 + lam * cfg_.dt);
            for (int k = 0; k < K_; ++k)
              state_.j[k][s](i, m) = theta2 * state_.j[k][s](i, m) - theta3 * drive[k];
          } else {
            for (int k = 0; k < K_; ++k)
              rhs(k) = eps2 * state_.j[k][s](i, m) - cfg_.dt * one_minus * drive[k];
            rhs = llt_[s][m].solve(rhs);
            for (int k = 0; k < K_; ++k) state_.j[k][s](i, m) = rhs(k);
          }
        }
      }
    }
  }

  // Galerkin generation-recombination sources at cell i, evaluated on the
  // current (starred) state.  Mirrors the deterministic parity sources:
  //   (I1p)_k = 1/2 M1 Ja_k - [r1 a]_k - eps^2 [j1 b]_k
  //   (I1m)_k = 1/(2 eps) M1 Jb_k - [r1 b]_k - [j1 a]_k
  //   (I2p)_k = 1/2 Jc_k - M2 ([r2 p]_k + eps^2 [j2 q]_k)
  //   (I2m)_k = 1/(2 eps) Jd_k - M2 ([r2 q]_k + [j2 p]_k)
  // where the brackets are exact spectral projections of the products, with
  // a/b the sigma_I-weighted hole moments of (r2, j2) and p/q the electron
  // moments of (r1, j1).
  SgSources sources_at(int i) const {
    const int ne = grids_[0].n_nodes, nh = grids_[1].n_nodes;
    SgSources out{Field2D(K_, ne), Field2D(K_, ne), Field2D(K_, nh), Field2D(K_, nh)};
    const double eps = cfg_.epsilon, eps2 = eps * eps;
    const bool fast = inputs_.sigmaI_zfree && !force_dense_;

    std::vector<double> t1(static_cast<std::size_t>(K_) * K_), t2(t1.size());
    std::vector<double> an(K_), bn(K_);
    for (int m = 0; m < ne; ++m) {
      if (fast) {
        // a_n(v) = int sigma_I(v,w) M2(w) r2_n(w) dw; with F = sigma_I G the
        // projected products are G-contractions of these mode moments
        for (int n = 0; n < K_; ++n) {
          double a = 0.0, b = 0.0;
          for (int l = 0; l < nh; ++l) {
            const double c = grids_[1].weights[l] * sigI0_(m, l) * mvals_[1][l];
            a += c * state_.r[n][1](i, l);
            b += c * state_.j[n][1](i, l);
          }
          an[n] = a;
          bn[n] = b;
        }
        for (int a = 0; a < K_; ++a)
          for (int k = 0; k < K_; ++k) {
            double s1 = 0.0, s2 = 0.0;
            for (int n = 0; n < K_; ++n) {
              const double gv = tensors_.g(a, n, k);
              s1 += gv * an[n];
              s2 += gv * bn[n];
            }
            t1[a * K_ + k] = s1;
            t2[a * K_ + k] = s2;
          }
      } else {
        std::fill(t1.begin(), t1.end(), 0.0);
        std::fill(t2.begin(), t2.end(), 0.0);
        for (int l = 0; l < nh; ++l) {
          const double wl = grids_[1].weights[l] * mvals_[1][l];
          const double* fb = tensors_.f_block(m, l);
          for (int a = 0; a < K_; ++a)
            for (int n = 0; n < K_; ++n) {
              const double rv = wl * state_.r[n][1](i, l);
              const double jv = wl * state_.j[n][1](i, l);
              const double* fk = fb + (a * K_ + n) * K_;
              for (int k = 0; k < K_; ++k) {
                t1[a * K_ + k] += fk[k] * rv;
                t2[a * K_ + k] += fk[k] * jv;
              }
            }
        }
      }
      for (int k = 0; k < K_; ++k) {
        double ra = 0.0, rb = 0.0, ja = 0.0, jb = 0.0;
        for (int a = 0; a < K_; ++a) {
          ra += state_.r[a][0](i, m) * t1[a * K_ + k];
          rb += state_.r[a][0](i, m) * t2[a * K_ + k];
          ja += state_.j[a][0](i, m) * t1[a * K_ + k];
          jb += state_.j[a][0](i, m) * t2[a * K_ + k];
        }
        out.i1_plus(k, m) = 0.5 * mvals_[0][m] * tensors_.Ja[m * K_ + k] - ra - eps2 * jb;
        out.i1_minus(k, m) = (0.5 / eps) * mvals_[0][m] * tensors_.Jb[m * K_ + k] - rb - ja;
      }
    }

    std::vector<double>& p1 = t1;
    std::vector<double>& p2 = t2;
    std::vector<double> pn(K_), qn(K_);
    for (int l = 0; l < nh; ++l) {
      if (fast) {
        // p_n(v) = int sigma_I(w,v) r1_n(w) dw over the electron grid
        for (int n = 0; n < K_; ++n) {
          double p = 0.0, q = 0.0;
          for (int m = 0; m < ne; ++m) {
            const double c = grids_[0].weights[m] * sigI0_(m, l);
            p += c * state_.r[n][0](i, m);
            q += c * state_.j[n][0](i, m);
          }
          pn[n] = p;
          qn[n] = q;
        }
        for (int b = 0; b < K_; ++b)
          for (int k = 0; k < K_; ++k) {
            double s1 = 0.0, s2 = 0.0;
            for (int n = 0; n < K_; ++n) {
              const double gv = tensors_.g(n, b, k);
              s1 += gv * pn[n];
              s2 += gv * qn[n];
            }
            p1[b * K_ + k] = s1;
            p2[b * K_ + k] = s2;
          }
      } else {
        std::fill(p1.begin(), p1.end(), 0.0);
        std::fill(p2.begin(), p2.end(), 0.0);
        for (int m = 0; m < ne; ++m) {
          const double wm = grids_[0].weights[m];
          const double* fb = tensors_.f_block(m, l);
          for (int a = 0; a < K_; ++a) {
            const double rv = wm * state_.r[a][0](i, m);
            const double jv = wm * state_.j[a][0](i, m);
            for (int b = 0; b < K_; ++b) {
              const double* fk = fb + (a * K_ + b) * K_;
              for (int k = 0; k < K_; ++k) {
                p1[b * K_ + k] += fk[k] * rv;
                p2[b * K_ + k] += fk[k] * jv;
              }
            }
          }
        }
      }
      for (int k = 0; k < K_; ++k) {
        double rp = 0.0, rq = 0.0, jp = 0.0, jq = 0.0;
        for (int b = 0; b < K_; ++b) {
          rp += state_.r[b][1](i, l) * p1[b * K_ + k];
          rq += state_.r[b][1](i, l) * p2[b * K_ + k];
          jp += state_.j[b][1](i, l) * p1[b * K_ + k];
          jq += state_.j[b][1](i, l) * p2[b * K_ + k];
        }
        out.i2_plus(k, l) =
            0.5 * tensors_.Jc[l * K_ + k] - mvals_[1][l] * (rp + eps2 * jq);
        out.i2_minus(k, l) =
            (0.5 / eps) * tensors_.Jd[l * K_ + k] - mvals_[1][l] * (rq + jp);
      }
    }
    return out;
  }

  // Step 3: mode-wise limited upwind transport of the Riemann invariants,
  // plus tensor-contracted force terms and Galerkin sources, all from the
  // starred state.
  void transport() {
    const double dt = cfg_.dt, dx = mesh_.dx;
    const int nx = mesh_.n_cells;

    std::vector<SpeciesPair<Field2D>> dvr(K_), dvj(K_);
    for (int k = 0; k < K_; ++k)
      for (int s = 0; s < 2; ++s) {
        dvr[k][s] = Field2D(nx, grids_[s].n_nodes);
        dvj[k][s] = Field2D(nx, grids_[s].n_nodes);
        d_dv_field(state_.r[k][s], grids_[s], dvr[k][s]);
        d_dv_field(state_.j[k][s], grids_[s], dvj[k][s]);
      }
    std::vector<SgSources> src;
    if (sources_enabled_) {
      src.reserve(nx);
      for (int i = 0; i < nx; ++i) src.push_back(sources_at(i));
    }

    for (int s = 0; s < 2; ++s) {
      const int nv = grids_[s].n_nodes;
      const auto [cspeed, iscale] = transport_coefficients(s);
      const double se = (s == 0) ? 1.0 : -1.0;

      const double tau_max = cspeed * grids_[s].max_abs_node() * dt / dx;
      if (tau_max > 1.0) {
        std::fprintf(stderr, "transport: CFL violated (tau = %.3f > 1) for species %d\n",
                     tau_max, s);
        ensure(false, "transport: CFL condition violated");
      }

      std::vector<double> uq(nx + 4), wq(nx + 4), su(nx + 2), sw(nx + 2), un(nx), wn(nx);
      std::vector<double> ehat(K_), dvv(K_);
      for (int k = 0; k < K_; ++k) {
        const double target_bc = (k == 0) ? cfg_.boundary_density : 0.0;
        for (int m = 0; m < nv; ++m) {
          const double nu = cspeed * grids_[s].nodes[m] * dt / dx;
          for (int i = 0; i < nx; ++i) {
            const double rv = state_.r[k][s](i, m), jv = state_.j[k][s](i, m);
            uq[i + 2] = rv + iscale * jv;
            wq[i + 2] = rv - iscale * jv;
          }
          fill_ghosts(target_bc * mvals_[s][m], +1.0 * sign_of(nu), wq[2], wq[nx + 1], uq);
          fill_ghosts(target_bc * mvals_[s][m], -1.0 * sign_of(nu), uq[2], uq[nx + 1], wq);
          build_slopes(nu >= 0.0 ? +1 : -1, uq, dx, su);
          build_slopes(nu >= 0.0 ? -1 : +1, wq, dx, sw);
          advect(nu, uq, su, dx, un);
          advect(-nu, wq, sw, dx, wn);
          for (int i = 0; i < nx; ++i) {
            state_.r[k][s](i, m) = 0.5 * (un[i] + wn[i]);
            state_.j[k][s](i, m) = (un[i] - wn[i]) / (2.0 * iscale);
          }
        }
      }

      // force terms: tensor-contracted products [E d_v j]_k and [E d_v r]_k
      for (int i = 0; i < nx; ++i) {
        for (int k = 0; k < K_; ++k) ehat[k] = macro_.e(k, i);
        for (int m = 0; m < nv; ++m) {
          for (int k = 0; k < K_; ++k) {
            double fr = 0.0, fj = 0.0;
            for (int a = 0; a < K_; ++a) {
              double ir = 0.0, ij = 0.0;
              for (int b = 0; b < K_; ++b) {
                const double gv = tensors_.g(a, b, k);
                ij += dvj[b][s](i, m) * gv;
                ir += dvr[b][s](i, m) * gv;
              }
              fj += ehat[a] * ij;
              fr += ehat[a] * ir;
            }
            state_.r[k][s](i, m) += se * dt * fj;
            state_.j[k][s](i, m) += se * phi_ctl_ * dt * fr;
          }
        }
      }
      if (sources_enabled_) {
        for (int i = 0; i < nx; ++i)
          for (int k = 0; k < K_; ++k)
            for (int m = 0; m < nv; ++m) {
              if (s == 0) {
                state_.r[k][0](i, m) += dt * src[i].i1_plus(k, m);
                state_.j[k][0](i, m) += dt * src[i].i1_minus(k, m);
              } else {
                state_.r[k][1](i, m) += dt * src[i].i2_plus(k, m);
                state_.j[k][1](i, m) += dt * src[i].i2_minus(k, m);
              }
            }
      }
    }
  }

  // One full time step.
  void step() {
    relaxation_r();
    poisson_refresh();
    relaxation_j();
    transport();
    state_.time += cfg_.dt;
    update_macro();
  }

  // Steps 1 + 1.1 + 2 without transport (exposed for tests).
  void relaxation_step() {
    relaxation_r();
    poisson_refresh();
    relaxation_j();
  }

  void update_density() {
    for (int s = 0; s < 2; ++s) {
      const int nv = grids_[s].n_nodes;
      for (int k = 0; k < K_; ++k)
        for (int i = 0; i < mesh_.n_cells; ++i) {
          double rho = 0.0;
          for (int m = 0; m < nv; ++m) rho += grids_[s].weights[m] * state_.r[k][s](i, m);
          macro_.rho[s](k, i) = rho;
        }
    }
  }

  void update_macro() { update_density(); }

  // Characteristic speed and invariant scale of the transport system for one
  // species (identical to the deterministic scheme; z-free).
  std::pair<double, double> transport_coefficients(int s) const {
    if (s == 0) return {std::sqrt(phi_ctl_), 1.0 / std::sqrt(phi_ctl_)};
    const double beta = params_.beta;
    if (cfg_.hole_transport == HoleTransport::kUnitMassFlux)
      return {std::sqrt(phi_ctl_ * beta), 1.0 / std::sqrt(phi_ctl_ * beta)};
    return {beta * std::sqrt(phi_ctl_), 1.0 / std::sqrt(phi_ctl_)};
  }

  GpcState& state() { return state_; }
  const GpcState& state() const { return state_; }
  const GpcMacro& macro() const { return macro_; }
  const SpatialMesh& mesh() const { return mesh_; }
  const SpeciesParams& params() const { return params_; }
  const ApConfig& config() const { return cfg_; }
  const GpcBasis& basis() const { return basis_; }
  const ZQuadrature& z_quad() const { return quad_; }
  const SpectralTensors& tensors() const { return tensors_; }
  const VelocityGrid& grid(int s) const { return grids_[s]; }
  const std::vector<double>& maxwellian_nodes(int s) const { return mvals_[s]; }
  double eta(int s) const { return eta_[s]; }
  int n_modes() const { return K_; }
  bool sources_enabled() const { return sources_enabled_; }

 private:
  static double sign_of(double x) { return x >= 0.0 ? 1.0 : -1.0; }

  // Ghost fill for one mode column; 'target' is the contact value of the
  // even component at the wall (mode 0 carries rho_bc M(v); fluctuation
  // modes carry 0, the spectral projection of deterministic boundary data).
  // Incoming sides use the mirror ghost 2*target - partner (see the
  // deterministic solver for the rationale); outflow sides extrapolate.
  void fill_ghosts(double target, double speed_sign, double partner_first, double partner_last,
                   std::vector<double>& q) const {
    const int nx = mesh_.n_cells;
    if (cfg_.boundary == BoundaryKind::kPeriodic) {
      q[1] = q[nx + 1];
      q[0] = q[nx];
      q[nx + 2] = q[2];
      q[nx + 3] = q[3];
      return;
    }
    const double gl = (speed_sign > 0) ? 2.0 * target - partner_first : q[2];
    const double gr = (speed_sign < 0) ? 2.0 * target - partner_last : q[nx + 1];
    q[1] = gl;
    q[0] = gl;
    q[nx + 2] = gr;
    q[nx + 3] = gr;
  }

  void build_slopes(int dir, const std::vector<double>& q, double dx,
                    std::vector<double>& s) const {
    const int nx = mesh_.n_cells;
    auto slope = [&](int c) {
      const double dminus = q[c + 2] - q[c + 1];
      const double dplus = q[c + 3] - q[c + 2];
      const double num = (dir > 0) ? dminus : dplus;
      const double den = (dir > 0) ? dplus : dminus;
      if (den == 0.0) return 0.0;
      return minmod_psi(num / den) * den / dx;
    };
    for (int c = 0; c < nx; ++c) s[c + 1] = slope(c);
    if (cfg_.boundary == BoundaryKind::kPeriodic) {
      s[0] = slope(-1);
      s[nx + 1] = slope(nx);
    } else {
      s[0] = 0.0;
      s[nx + 1] = 0.0;
    }
  }

  void advect(double nu, const std::vector<double>& q, const std::vector<double>& s, double dx,
              std::vector<double>& out) const {
    const int nx = mesh_.n_cells;
    if (nu >= 0.0) {
      for (int i = 0; i < nx; ++i)
        out[i] = (1.0 - nu) * q[i + 2] + nu * q[i + 1] + 0.5 * nu * dx * (s[i] - s[i + 1]);
    } else {
      const double a = -nu;
      for (int i = 0; i < nx; ++i)
        out[i] = (1.0 - a) * q[i + 2] + a * q[i + 3] + 0.5 * a * dx * (s[i + 1] - s[i + 2]);
    }
  }

  SpatialMesh mesh_;
  SpeciesParams params_;
  RandomInputs inputs_;
  ApConfig cfg_;
  GpcBasis basis_;
  ZQuadrature quad_;
  int K_ = 1;
  SpeciesPair<VelocityGrid> grids_;
  SpeciesPair<std::vector<double>> mvals_;
  SpectralTensors tensors_;
  Field2D doping_modes_;
  SpeciesPair<KernelTable> sig0_;
  KernelTable sigI0_;
  SpeciesPair<std::vector<double>> lam0_;
  SpeciesPair<double> eta_{0.0, 0.0};
  SpeciesPair<std::vector<Eigen::LLT<Eigen::MatrixXd>>> llt_;
  double phi_ctl_ = 1.0;
  bool sources_enabled_ = false;
  bool force_dense_ = false;
  GpcState state_;
  GpcMacro macro_;
};

}  // namespace bkap
