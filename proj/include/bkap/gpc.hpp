#pragma once

// Generalized polynomial chaos machinery over a single uniform random
// variable z on [-1, 1] with density pi(z) = 1/2: orthonormal Legendre basis,
// Gauss-Legendre quadrature in z, projection / evaluation / moments, and the
// z-integrated spectral tensors used by the stochastic Galerkin solvers.
//
// Basis indexing is 0-based: psi[0] = 1, psi[1] = sqrt(3) z,
// psi[2] = sqrt(5) (3z^2 - 1)/2, ... with <psi_k psi_l>_pi = delta_kl.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "bkap/common.hpp"
#include "bkap/grid.hpp"
#include "bkap/physics.hpp"

namespace bkap {

class GpcBasis {
 public:
  explicit GpcBasis(int K) : K_(K) {
    require(K >= 1, "GpcBasis: K must be >= 1");
    recur_.resize(K + 1);
    for (int k = 0; k <= K; ++k)
      recur_[k] = k / std::sqrt(4.0 * k * k - 1.0);  // recur_[0] unused
  }

  int size() const { return K_; }
  int degree() const { return K_ - 1; }

  // psi_0 .. psi_{K-1} at z, via the normalized three-term recurrence
  // z psi_k = a_{k+1} psi_{k+1} + a_k psi_{k-1},  a_k = k / sqrt(4k^2 - 1).
  void eval_all(double z, double* out) const {
    out[0] = 1.0;
    if (K_ == 1) return;
    out[1] = z / recur_[1];
    for (int k = 1; k + 1 < K_; ++k)
      out[k + 1] = (z * out[k] - recur_[k] * out[k - 1]) / recur_[k + 1];
  }

  double eval(int k, double z) const {
    require(k >= 0 && k < K_, "GpcBasis::eval: mode out of range");
    std::vector<double> tmp(K_);
    eval_all(z, tmp.data());
    return tmp[k];
  }

  double recurrence(int k) const { return recur_[k]; }

 private:
  int K_;
  std::vector<double> recur_;
};

struct ZQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;  // integrate against pi(z) = 1/2; sum to 1
  int size() const { return static_cast<int>(nodes.size()); }
};

// Gauss-Legendre rule on [-1, 1], weights normalized to the uniform density.
inline ZQuadrature z_quadrature(int n_nodes) {
  require(n_nodes >= 1, "z_quadrature: need at least one node");
  ZQuadrature q;
  if (n_nodes == 1) {
    q.nodes = {0.0};
    q.weights = {1.0};
    return q;
  }
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_nodes, n_nodes);
  for (int k = 1; k < n_nodes; ++k) {
    const double a = k / std::sqrt(4.0 * k * k - 1.0);
    jac(k - 1, k) = a;
    jac(k, k - 1) = a;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  ensure(es.info() == Eigen::Success, "z_quadrature: eigensolver failed");
  q.nodes.resize(n_nodes);
  q.weights.resize(n_nodes);
  for (int k = 0; k < n_nodes; ++k) {
    q.nodes[k] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    q.weights[k] = v0 * v0;  // mu_0 = integral pi dz = 1
  }
  return q;
}

inline std::vector<double> project(const std::function<double(double)>& g, const GpcBasis& basis,
                                   const ZQuadrature& quad) {
  require(quad.size() >= basis.size(), "project: quadrature smaller than basis");
  std::vector<double> coeffs(basis.size(), 0.0), psi(basis.size());
  for (int qn = 0; qn < quad.size(); ++qn) {
    basis.eval_all(quad.nodes[qn], psi.data());
    const double gw = g(quad.nodes[qn]) * quad.weights[qn];
    for (int k = 0; k < basis.size(); ++k) coeffs[k] += gw * psi[k];
  }
  return coeffs;
}

inline double evaluate(const std::vector<double>& coeffs, const GpcBasis& basis, double z) {
  require(static_cast<int>(coeffs.size()) == basis.size(), "evaluate: size mismatch");
  std::vector<double> psi(basis.size());
  basis.eval_all(z, psi.data());
  double s = 0.0;
  for (int k = 0; k < basis.size(); ++k) s += coeffs[k] * psi[k];
  return s;
}

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

inline MeanSd mean_sd(const std::vector<double>& coeffs) {
  require(!coeffs.empty(), "mean_sd: empty coefficient vector");
  MeanSd out;
  out.mean = coeffs[0];
  double acc = 0.0;
  for (std::size_t k = 1; k < coeffs.size(); ++k) acc += coeffs[k] * coeffs[k];
  out.sd = std::sqrt(acc);
  return out;
}

// z-integrated spectral tensors over the velocity grids.  All tables are
// stored dense (desk-scale sizes); z-independent inputs are assembled through
// the factored identities (B = sigma I, H = lambda I, S = I/lambda,
// F = sigma_I G, D = sigma_I e_1, J = twice/zero the parity sums) instead of
// z-quadrature.  Kernels must be x-independent; the doping profile may
// depend on x and fills L(x).
//
// Index conventions (0-based, row-major):
//   G[(i K + j) K + k]
//   B[s][((m nw + l) K + a) K + b]        velocity pair (m, l), modes (a, b)
//   H[s][(m K + a) K + b], S[s] alike     velocity m, modes (a, b)
//   F[((m nv_h + l) K*K*K ...)]           electron m, hole l, modes (a,b,k)
//   D[(m nv_h + l) K + k]
//   L[i K + k]                            cell i
//   Ja/Jb[m K + k] (electron grid), Jc/Jd[l K + k] (hole grid)
struct SpectralTensors {
  int K = 0;
  int nq = 0;
  int nv_e = 0, nv_h = 0, nx = 0;
  std::vector<double> G;
  SpeciesPair<std::vector<double>> B, H, S;
  std::vector<double> F, D, L;
  std::vector<double> Ja, Jb, Jc, Jd;

  double g(int i, int j, int k) const { return G[(i * K + j) * K + k]; }
  const double* b_block(int s, int m, int l, int nw) const {
    return B[s].data() + (static_cast<std::size_t>(m) * nw + l) * K * K;
  }
  const double* h_block(int s, int m) const {
    return H[s].data() + static_cast<std::size_t>(m) * K * K;
  }
  const double* s_block(int s, int m) const {
    return S[s].data() + static_cast<std::size_t>(m) * K * K;
  }
  const double* f_block(int m, int l) const {
    return F.data() + (static_cast<std::size_t>(m) * nv_h + l) * K * K * K;
  }
  const double* d_block(int m, int l) const {
    return D.data() + (static_cast<std::size_t>(m) * nv_h + l) * K;
  }
  const double* l_row(int i) const { return L.data() + static_cast<std::size_t>(i) * K; }
};

inline SpectralTensors assemble_tensors(const GpcBasis& basis, const RandomInputs& inputs,
                                        const SpeciesPair<VelocityGrid>& grids,
                                        const SpatialMesh& mesh, const ZQuadrature& quad) {
  require(inputs.kernels_xfree, "assemble_tensors: kernels must be x-independent");
  const int K = basis.size();
  const int need = (3 * (K - 1) + 2) / 2;  // ceil((3(K-1)+1)/2)
  require(quad.size() >= need, "assemble_tensors: z-quadrature too small for cubic products");

  SpectralTensors t;
  t.K = K;
  t.nq = quad.size();
  t.nv_e = grids[0].n_nodes;
  t.nv_h = grids[1].n_nodes;
  t.nx = mesh.n_cells;
  const int ne = t.nv_e, nh = t.nv_h;

  // basis values at the quadrature nodes: psi[q*K + k]
  std::vector<double> psi(static_cast<std::size_t>(t.nq) * K);
  for (int q = 0; q < t.nq; ++q) basis.eval_all(quad.nodes[q], psi.data() + q * K);

  // G is assembled by quadrature (exact by rule degree) over sorted index
  // triples and mirrored to all permutations, so the stored tensor is
  // symmetric to the last bit.  Structural zeros/ones of the orthonormal
  // basis are set analytically: a constant factor reduces the triple product
  // to the Gram matrix, and odd total degree vanishes by parity.
  t.G.assign(static_cast<std::size_t>(K) * K * K, 0.0);
  for (int i = 0; i < K; ++i)
    for (int j = i; j < K; ++j)
      for (int k = j; k < K; ++k) {
        double val = 0.0;
        if (i == 0) {
          val = (j == k) ? 1.0 : 0.0;
        } else if ((i + j + k) % 2 == 0) {
          for (int q = 0; q < t.nq; ++q) {
            const double* p = psi.data() + q * K;
            val += quad.weights[q] * p[i] * p[j] * p[k];
          }
        }
        const int idx[3] = {i, j, k};
        int perm[3] = {0, 1, 2};
        do {
          t.G[(idx[perm[0]] * K + idx[perm[1]]) * K + idx[perm[2]]] = val;
        } while (std::next_permutation(perm, perm + 3));
      }

  const SpeciesPair<std::vector<double>> M{maxwellian_values(grids[0], 0, grids[1].beta_eff),
                                           maxwellian_values(grids[1], 1, grids[1].beta_eff)};

  // --- collision kernels: B, H, S ------------------------------------------
  for (int s = 0; s < 2; ++s) {
    const int nv = grids[s].n_nodes;
    t.B[s].assign(static_cast<std::size_t>(nv) * nv * K * K, 0.0);
    t.H[s].assign(static_cast<std::size_t>(nv) * K * K, 0.0);
    t.S[s].assign(static_cast<std::size_t>(nv) * K * K, 0.0);

    if (inputs.sigma_zfree(s)) {
      auto tab = build_kernel_table(inputs.sigma(s), 0.0, 0.0, grids[s], grids[s]);
      auto lam = collision_frequency(tab, grids[s], M[s]);
      for (int m = 0; m < nv; ++m) {
        for (int l = 0; l < nv; ++l) {
          double* blk = t.B[s].data() + (static_cast<std::size_t>(m) * nv + l) * K * K;
          for (int a = 0; a < K; ++a) blk[a * K + a] = tab(m, l);
        }
        double* hb = t.H[s].data() + static_cast<std::size_t>(m) * K * K;
        double* sb = t.S[s].data() + static_cast<std::size_t>(m) * K * K;
        for (int a = 0; a < K; ++a) {
          hb[a * K + a] = lam[m];
          sb[a * K + a] = 1.0 / lam[m];
        }
      }
    } else {
      for (int q = 0; q < t.nq; ++q) {
        auto tab = build_kernel_table(inputs.sigma(s), 0.0, quad.nodes[q], grids[s], grids[s]);
        auto lam = collision_frequency(tab, grids[s], M[s]);
        const double* p = psi.data() + q * K;
        const double w = quad.weights[q];
        for (int m = 0; m < nv; ++m) {
          for (int l = 0; l < nv; ++l) {
            double* blk = t.B[s].data() + (static_cast<std::size_t>(m) * nv + l) * K * K;
            const double sv = w * tab(m, l);
            for (int a = 0; a < K; ++a)
              for (int bq = 0; bq < K; ++bq) blk[a * K + bq] += sv * p[a] * p[bq];
          }
          double* hb = t.H[s].data() + static_cast<std::size_t>(m) * K * K;
          double* sb = t.S[s].data() + static_cast<std::size_t>(m) * K * K;
          for (int a = 0; a < K; ++a)
            for (int bq = 0; bq < K; ++bq) {
              hb[a * K + bq] += w * lam[m] * p[a] * p[bq];
              sb[a * K + bq] += w / lam[m] * p[a] * p[bq];
            }
        }
      }
    }
  }

  // --- generation-recombination kernel: F, D, J ----------------------------
  t.F.assign(static_cast<std::size_t>(ne) * nh * K * K * K, 0.0);
  t.D.assign(static_cast<std::size_t>(ne) * nh * K, 0.0);
  t.Ja.assign(static_cast<std::size_t>(ne) * K, 0.0);
  t.Jb.assign(static_cast<std::size_t>(ne) * K, 0.0);
  t.Jc.assign(static_cast<std::size_t>(nh) * K, 0.0);
  t.Jd.assign(static_cast<std::size_t>(nh) * K, 0.0);

  // J rows from one z-sample of sigma_I: electron rows integrate over hole
  // velocities (Ja/Jb), hole rows integrate over electron velocities against
  // the electron Maxwellian (Jc/Jd); the +/- pair couples v with -v.
  auto accumulate_J = [&](const KernelTable& tab, const double* p, double w) {
    for (int m = 0; m < ne; ++m) {
      const int mr = grids[0].reflect[m];
      double sa = 0.0, sd = 0.0;
      for (int l = 0; l < nh; ++l) {
        sa += grids[1].weights[l] * (tab(m, l) + tab(mr, l));
        sd += grids[1].weights[l] * (tab(m, l) - tab(mr, l));
      }
      for (int k = 0; k < K; ++k) {
        t.Ja[m * K + k] += w * sa * p[k];
        t.Jb[m * K + k] += w * sd * p[k];
      }
    }
    for (int l = 0; l < nh; ++l) {
      const int lr = grids[1].reflect[l];
      double ta = 0.0, td = 0.0;
      for (int m = 0; m < ne; ++m) {
        ta += grids[0].weights[m] * (tab(m, l) + tab(m, lr)) * M[0][m];
        td += grids[0].weights[m] * (tab(m, l) - tab(m, lr)) * M[0][m];
      }
      for (int k = 0; k < K; ++k) {
        t.Jc[l * K + k] += w * ta * p[k];
        t.Jd[l * K + k] += w * td * p[k];
      }
    }
  };

  if (inputs.sigmaI_zfree) {
    auto tab = build_kernel_table(inputs.sigmaI, 0.0, 0.0, grids[0], grids[1]);
    for (int m = 0; m < ne; ++m)
      for (int l = 0; l < nh; ++l) {
        const double sv = tab(m, l);
        double* fb = t.F.data() + (static_cast<std::size_t>(m) * nh + l) * K * K * K;
        for (std::size_t e = 0; e < static_cast<std::size_t>(K) * K * K; ++e) fb[e] = sv * t.G[e];
        t.D[(static_cast<std::size_t>(m) * nh + l) * K] = sv;
      }
    std::vector<double> e1(K, 0.0);
    e1[0] = 1.0;
    accumulate_J(tab, e1.data(), 1.0);
  } else {
    for (int q = 0; q < t.nq; ++q) {
      auto tab = build_kernel_table(inputs.sigmaI, 0.0, quad.nodes[q], grids[0], grids[1]);
      const double* p = psi.data() + q * K;
      const double w = quad.weights[q];
      for (int m = 0; m < ne; ++m)
        for (int l = 0; l < nh; ++l) {
          const double sv = w * tab(m, l);
          double* fb = t.F.data() + (static_cast<std::size_t>(m) * nh + l) * K * K * K;
          for (int a = 0; a < K; ++a)
            for (int bq = 0; bq < K; ++bq)
              for (int k = 0; k < K; ++k) fb[(a * K + bq) * K + k] += sv * p[a] * p[bq] * p[k];
          double* db = t.D.data() + (static_cast<std::size_t>(m) * nh + l) * K;
          for (int k = 0; k < K; ++k) db[k] += sv * p[k];
        }
      accumulate_J(tab, p, w);
    }
  }

  // --- doping: L -------------------------------------------------------------
  t.L.assign(static_cast<std::size_t>(t.nx) * K, 0.0);
  if (inputs.doping_zfree) {
    for (int i = 0; i < t.nx; ++i) t.L[i * K] = inputs.doping(mesh.centers[i], 0.0);
  } else {
    for (int q = 0; q < t.nq; ++q) {
      const double* p = psi.data() + q * K;
      for (int i = 0; i < t.nx; ++i) {
        const double cw = quad.weights[q] * inputs.doping(mesh.centers[i], quad.nodes[q]);
        for (int k = 0; k < K; ++k) t.L[i * K + k] += cw * p[k];
      }
    }
  }

  return t;
}

}  // namespace bkap
