#pragma once

// Physical model ingredients: Maxwellians, random-parameterized collision and
// generation-recombination kernels, the linear collision operators, the
// direct generation-recombination operators, their even/odd parity
// projections, and the doping profile.
//
// Species are indexed 0 = electrons, 1 = holes.  Kernels are supplied as
// closures of (x, v, w, z) together with z-independence flags that allow
// downstream tensor assembly to factor the z-integrals.

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "bkap/common.hpp"
#include "bkap/grid.hpp"

namespace bkap {

struct SpeciesParams {
  double beta = 0.9;     // effective-mass ratio m_e*/m_h*
  double gamma = 0.002;  // scaled Debye length
  double epsilon = 1e-3; // Knudsen number
};

using KernelFn = std::function<double(double x, double v, double w, double z)>;
using ProfileFn = std::function<double(double x, double z)>;
using InitialFn = std::function<double(int species, double x, double v, double z)>;

struct RandomInputs {
  KernelFn sigma1;   // electron collision kernel
  KernelFn sigma2;   // hole collision kernel
  KernelFn sigmaI;   // generation-recombination kernel; first velocity slot
                     // is the electron velocity, second the hole velocity
  ProfileFn doping;
  InitialFn initial;

  // z-independence flags; true means the closure ignores z.
  bool sigma1_zfree = true;
  bool sigma2_zfree = true;
  bool sigmaI_zfree = true;
  bool doping_zfree = true;
  bool initial_zfree = true;

  // All preset kernels are x-independent; builders may exploit this to share
  // one kernel table across cells.
  bool kernels_xfree = true;

  bool sigma_zfree(int species) const { return species == 0 ? sigma1_zfree : sigma2_zfree; }
  const KernelFn& sigma(int species) const { return species == 0 ? sigma1 : sigma2; }
};

inline double maxwellian(int species, double v, double beta) {
  require(beta > 0, "maxwellian: beta must be positive");
  const double b = (species == 0) ? 1.0 : beta;
  return std::sqrt(b / (2.0 * M_PI)) * std::exp(-b * v * v / 2.0);
}

inline std::vector<double> maxwellian_values(const VelocityGrid& g, int species, double beta) {
  std::vector<double> out(g.n_nodes);
  for (int m = 0; m < g.n_nodes; ++m) out[m] = maxwellian(species, g.nodes[m], beta);
  return out;
}

// Dense kernel table at one (x, z): t[m * nw + l] = sigma(x, v_m, w_l, z).
struct KernelTable {
  int nv = 0;
  int nw = 0;
  std::vector<double> t;
  double operator()(int m, int l) const { return t[static_cast<std::size_t>(m) * nw + l]; }
  bool all_zero() const {
    for (double e : t)
      if (e != 0.0) return false;
    return true;
  }
};

inline KernelTable build_kernel_table(const KernelFn& sigma, double x, double z,
                                      const VelocityGrid& gv, const VelocityGrid& gw) {
  KernelTable tab;
  tab.nv = gv.n_nodes;
  tab.nw = gw.n_nodes;
  tab.t.resize(static_cast<std::size_t>(tab.nv) * tab.nw);
  for (int m = 0; m < tab.nv; ++m)
    for (int l = 0; l < tab.nw; ++l)
      tab.t[static_cast<std::size_t>(m) * tab.nw + l] = sigma(x, gv.nodes[m], gw.nodes[l], z);
  return tab;
}

// lambda_i(v) = integral sigma_i(v,w) M_i(w) dw on the species grid.
inline std::vector<double> collision_frequency(const KernelTable& tab, const VelocityGrid& g,
                                               const std::vector<double>& M) {
  std::vector<double> lam(tab.nv, 0.0);
  for (int m = 0; m < tab.nv; ++m) {
    double s = 0.0;
    for (int l = 0; l < tab.nw; ++l) s += g.weights[l] * tab(m, l) * M[l];
    lam[m] = s;
    ensure(s > 0.0, "collision_frequency: nonpositive frequency, invalid kernel");
  }
  return lam;
}

// Q_i(r)(v) = integral sigma_i(v,w) [M_i(v) r(w) - M_i(w) r(v)] dw
//           = M_i(v) * integral sigma r dw  -  lambda(v) r(v).
inline void apply_Q(const KernelTable& tab, const VelocityGrid& g, const std::vector<double>& M,
                    const std::vector<double>& lambda, const double* r, double* out) {
  for (int m = 0; m < tab.nv; ++m) {
    double s = 0.0;
    for (int l = 0; l < tab.nw; ++l) s += g.weights[l] * tab(m, l) * r[l];
    out[m] = M[m] * s - lambda[m] * r[m];
  }
}

// Direct generation-recombination pair at one cell.
//   I_n(v) = integral sigma_I(v,w) [M_n(v) - M_p(w) f_n(v) f_p(w)] dw   (hole-grid w)
//   I_p(v) = integral sigma_I(w,v) [M_n(w) - M_p(v) f_n(w) f_p(v)] dw   (electron-grid w)
// tab rows are electron nodes, columns hole nodes.
inline void apply_I_direct(const KernelTable& tab, const VelocityGrid& ge, const VelocityGrid& gh,
                           const std::vector<double>& M1, const std::vector<double>& M2,
                           const double* f1, const double* f2, double* In, double* Ip) {
  const int ne = tab.nv, nh = tab.nw;
  for (int m = 0; m < ne; ++m) In[m] = 0.0;
  for (int l = 0; l < nh; ++l) Ip[l] = 0.0;
  for (int m = 0; m < ne; ++m) {
    for (int l = 0; l < nh; ++l) {
      const double integrand = tab(m, l) * (M1[m] - M2[l] * f1[m] * f2[l]);
      In[m] += gh.weights[l] * integrand;
      Ip[l] += ge.weights[m] * integrand;
    }
  }
}

// Even/odd parity projections of the generation-recombination operators,
// written directly in terms of the parity fields:
//   I_{1,plus}  = (1/2) M_1(v) Sa(v) - r_1 a - eps^2 j_1 b
//   I_{1,minus} = (1/(2 eps)) M_1(v) Sd(v) - r_1 b - j_1 a
//   I_{2,plus}  = (1/2) Ta(v) - M_2(v) [r_2 p + eps^2 j_2 q]
//   I_{2,minus} = (1/(2 eps)) Td(v) - M_2(v) [r_2 q + j_2 p]
// with
//   Sa/Sd(v) = integral (sigma_I(v,w) +/- sigma_I(-v,w)) dw            (holes)
//   a/b(v)   = integral sigma_I(v,w) M_2(w) {r_2, j_2}(w) dw           (holes)
//   Ta/Td(v) = integral (sigma_I(w,v) +/- sigma_I(w,-v)) M_1(w) dw     (electrons)
//   p/q(v)   = integral sigma_I(w,v) {r_1, j_1}(w) dw                  (electrons)
// These agree with the parity projections of apply_I_direct exactly for
// kernels invariant under (v,w) -> (-v,-w).
struct ParitySources {
  std::vector<double> i1_plus, i1_minus;  // electron grid
  std::vector<double> i2_plus, i2_minus;  // hole grid
};

inline void apply_parity_sources(const KernelTable& tab, const VelocityGrid& ge,
                                 const VelocityGrid& gh, const std::vector<double>& M1,
                                 const std::vector<double>& M2, const double* r1,
                                 const double* j1, const double* r2, const double* j2,
                                 double eps, ParitySources& out) {
  require(eps > 0, "apply_parity_sources: epsilon must be positive");
  const int ne = tab.nv, nh = tab.nw;
  out.i1_plus.assign(ne, 0.0);
  out.i1_minus.assign(ne, 0.0);
  out.i2_plus.assign(nh, 0.0);
  out.i2_minus.assign(nh, 0.0);

  for (int m = 0; m < ne; ++m) {
    const int mr = ge.reflect[m];
    double Sa = 0, Sd = 0, a = 0, b = 0;
    for (int l = 0; l < nh; ++l) {
      const double w = gh.weights[l];
      const double s = tab(m, l), sr = tab(mr, l);
      Sa += w * (s + sr);
      Sd += w * (s - sr);
      a += w * s * M2[l] * r2[l];
      b += w * s * M2[l] * j2[l];
    }
    out.i1_plus[m] = 0.5 * M1[m] * Sa - r1[m] * a - eps * eps * j1[m] * b;
    out.i1_minus[m] = (0.5 / eps) * M1[m] * Sd - r1[m] * b - j1[m] * a;
  }

  for (int l = 0; l < nh; ++l) {
    const int lr = gh.reflect[l];
    double Ta = 0, Td = 0, p = 0, q = 0;
    for (int m = 0; m < ne; ++m) {
      const double w = ge.weights[m];
      const double s = tab(m, l), sr = tab(m, lr);
      Ta += w * (s + sr) * M1[m];
      Td += w * (s - sr) * M1[m];
      p += w * s * r1[m];
      q += w * s * j1[m];
    }
    out.i2_plus[l] = 0.5 * Ta - M2[l] * (r2[l] * p + eps * eps * j2[l] * q);
    out.i2_minus[l] = (0.5 / eps) * Td - M2[l] * (r2[l] * q + j2[l] * p);
  }
}

// Channel doping profile: plateaus at ~1 near both contacts with a dip to
// -0.001 + O(1e-9) in the middle of the device.
inline double doping_channel(double x) {
  const double s = 0.02, x1 = 0.3, x2 = 0.7;
  const double m = (1.0 - 0.001) / 2.0;
  return 1.0 - (1.0 - m) * (std::tanh((x - x1) / s) - std::tanh((x - x2) / s));
}

}  // namespace bkap
