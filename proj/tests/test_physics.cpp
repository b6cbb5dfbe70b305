#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bkap/physics.hpp"

using namespace bkap;

namespace {
const KernelFn kConst2 = [](double, double, double, double) { return 2.0; };
const KernelFn kConstAffine = [](double, double, double, double z) { return 2.0 + 0.5 * z; };
const KernelFn kGaussDiff = [](double, double v, double w, double) {
  return std::exp(-(v - w) * (v - w)) / std::sqrt(M_PI);
};

double quad(const VelocityGrid& g, const double* f) {
  double s = 0.0;
  for (int m = 0; m < g.n_nodes; ++m) s += g.weights[m] * f[m];
  return s;
}
}  // namespace

TEST_CASE("maxwellian point values and normalization") {
  REQUIRE(maxwellian(0, 0.0, 0.9) == Catch::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-14));
  REQUIRE(maxwellian(0, 0.0, 0.9) == Catch::Approx(0.39894).epsilon(1e-4));
  REQUIRE(maxwellian(1, 0.0, 0.9) == Catch::Approx(std::sqrt(0.9 / (2.0 * M_PI))).epsilon(1e-14));
  REQUIRE(maxwellian(1, 0.0, 0.9) == Catch::Approx(0.37846).epsilon(1e-4));

  for (int sp : {0, 1}) {
    auto g = hermite_rule(20, sp == 0 ? 1.0 : 0.9);
    auto M = maxwellian_values(g, sp, 0.9);
    REQUIRE(quad(g, M.data()) == Catch::Approx(1.0).margin(1e-12));
  }
  REQUIRE_THROWS_AS(maxwellian(1, 0.0, -0.9), std::invalid_argument);
}

TEST_CASE("collision frequency") {
  auto g = hermite_rule(20, 1.0);
  auto M = maxwellian_values(g, 0, 0.9);

  SECTION("constant kernel gives constant frequency") {
    auto tab = build_kernel_table(kConst2, 0.25, 0.0, g, g);
    auto lam = collision_frequency(tab, g, M);
    for (double l : lam) REQUIRE(l == Catch::Approx(2.0).margin(1e-13));
  }

  SECTION("affine-in-z kernel at z = 1") {
    auto tab = build_kernel_table(kConstAffine, 0.25, 1.0, g, g);
    auto lam = collision_frequency(tab, g, M);
    for (double l : lam) REQUIRE(l == Catch::Approx(2.5).margin(1e-13));
  }

  SECTION("velocity-dependent kernel against Gaussian moment identity") {
    // sigma = 2 + v^2 w^2 -> lambda(v) = 2 + v^2 * <w^2 M_1> = 2 + v^2
    KernelFn s = [](double, double v, double w, double) { return 2.0 + v * v * w * w; };
    auto tab = build_kernel_table(s, 0.0, 0.0, g, g);
    auto lam = collision_frequency(tab, g, M);
    for (int m = 0; m < g.n_nodes; ++m)
      REQUIRE(lam[m] == Catch::Approx(2.0 + g.nodes[m] * g.nodes[m]).epsilon(1e-12));
  }

  SECTION("nonpositive kernel is rejected") {
    KernelFn s = [](double, double, double, double) { return -1.0; };
    auto tab = build_kernel_table(s, 0.0, 0.0, g, g);
    REQUIRE_THROWS_AS(collision_frequency(tab, g, M), std::runtime_error);
  }
}

TEST_CASE("assembled kernel tables inherit closure symmetry bit-exactly") {
  auto g = hermite_rule(16, 1.0);
  for (const KernelFn& s : {kConst2, kGaussDiff}) {
    auto tab = build_kernel_table(s, 0.0, 0.0, g, g);
    for (int m = 0; m < g.n_nodes; ++m)
      for (int l = 0; l < g.n_nodes; ++l) REQUIRE(tab(m, l) == tab(l, m));
  }
}

TEST_CASE("linear collision operator") {
  auto g = hermite_rule(20, 0.9);
  auto M = maxwellian_values(g, 1, 0.9);
  auto tab = build_kernel_table(kGaussDiff, 0.0, 0.0, g, g);
  auto lam = collision_frequency(tab, g, M);
  const int n = g.n_nodes;

  SECTION("equilibria are annihilated") {
    for (double rho : {1.0, 0.37, 2.5}) {
      std::vector<double> r(n), Qr(n);
      for (int m = 0; m < n; ++m) r[m] = rho * M[m];
      apply_Q(tab, g, M, lam, r.data(), Qr.data());
      for (int m = 0; m < n; ++m) REQUIRE(std::abs(Qr[m]) <= 1e-12);
    }
  }

  SECTION("mass neutrality for arbitrary states") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> r(n), Qr(n);
      double norm = 0.0;
      for (int m = 0; m < n; ++m) {
        r[m] = uni(rng) * M[m];
        norm = std::max(norm, std::abs(r[m]));
      }
      apply_Q(tab, g, M, lam, r.data(), Qr.data());
      REQUIRE(std::abs(quad(g, Qr.data())) <= 1e-12 * std::max(norm, 1.0));
    }
  }

  SECTION("constant kernel closed form") {
    auto tab2 = build_kernel_table(kConst2, 0.0, 0.0, g, g);
    auto lam2 = collision_frequency(tab2, g, M);
    std::vector<double> r(n), Qr(n);
    for (int m = 0; m < n; ++m) r[m] = (1.0 + 0.3 * g.nodes[m] * g.nodes[m]) * M[m];
    const double rho = quad(g, r.data());
    apply_Q(tab2, g, M, lam2, r.data(), Qr.data());
    for (int m = 0; m < n; ++m)
      REQUIRE(Qr[m] == Catch::Approx(2.0 * (rho * M[m] - r[m])).margin(1e-13));
  }
}

TEST_CASE("direct generation-recombination operators") {
  auto ge = hermite_rule(20, 1.0);
  auto gh = hermite_rule(20, 0.9);
  auto M1 = maxwellian_values(ge, 0, 0.9);
  auto M2 = maxwellian_values(gh, 1, 0.9);
  auto tab = build_kernel_table(kGaussDiff, 0.0, 0.0, ge, gh);
  const int ne = ge.n_nodes, nh = gh.n_nodes;

  SECTION("vanishing distributions leave pure generation ~ M_1") {
    // inner integral of the difference Gaussian is exactly 1 analytically
    std::vector<double> f1(ne, 0.0), f2(nh, 0.0), In(ne), Ip(nh);
    apply_I_direct(tab, ge, gh, M1, M2, f1.data(), f2.data(), In.data(), Ip.data());
    for (int m = 0; m < ne; ++m) REQUIRE(In[m] == Catch::Approx(M1[m]).margin(2e-5));
    // near the bulk of the Maxwellian the quadrature is much tighter
    for (int m = 0; m < ne; ++m)
      if (std::abs(ge.nodes[m]) < 3.0) REQUIRE(In[m] == Catch::Approx(M1[m]).margin(1e-9));
  }

  SECTION("density moment matches A - n p B and species moments agree") {
    const double nd = 0.8, pd = 1.3;
    std::vector<double> f1(ne), f2(nh), In(ne), Ip(nh);
    for (int m = 0; m < ne; ++m) f1[m] = nd * M1[m];
    for (int l = 0; l < nh; ++l) f2[l] = pd * M2[l];
    apply_I_direct(tab, ge, gh, M1, M2, f1.data(), f2.data(), In.data(), Ip.data());

    // quadrature oracle for the coefficients
    double A = 0.0, B = 0.0;
    for (int m = 0; m < ne; ++m)
      for (int l = 0; l < nh; ++l) {
        A += ge.weights[m] * gh.weights[l] * tab(m, l) * M1[m];
        B += ge.weights[m] * gh.weights[l] * tab(m, l) * M1[m] * M2[l] * M2[l];
      }
    const double lhs = quad(ge, In.data());
    REQUIRE(lhs == Catch::Approx(A - nd * pd * B).margin(1e-12));
    REQUIRE(lhs == Catch::Approx(quad(gh, Ip.data())).margin(1e-12));
  }
}

TEST_CASE("parity-form sources") {
  auto ge = hermite_rule(20, 1.0);
  auto gh = hermite_rule(20, 0.9);
  auto M1 = maxwellian_values(ge, 0, 0.9);
  auto M2 = maxwellian_values(gh, 1, 0.9);
  auto tab = build_kernel_table(kGaussDiff, 0.0, 0.0, ge, gh);
  const int ne = ge.n_nodes, nh = gh.n_nodes;

  SECTION("zero hole state reduces I_{1,plus} to pure generation") {
    std::vector<double> r1(ne, 0.7), j1(ne, 0.0), r2(nh, 0.0), j2(nh, 0.0);
    ParitySources ps;
    apply_parity_sources(tab, ge, gh, M1, M2, r1.data(), j1.data(), r2.data(), j2.data(), 1e-2, ps);
    for (int m = 0; m < ne; ++m) {
      double Sa = 0.0;
      for (int l = 0; l < nh; ++l)
        Sa += gh.weights[l] * (tab(m, l) + tab(ge.reflect[m], l));
      REQUIRE(ps.i1_plus[m] == Catch::Approx(0.5 * M1[m] * Sa).margin(1e-14));
    }
  }

  SECTION("difference-Gaussian kernel has vanishing odd generation part") {
    for (int m = 0; m < ne; ++m) {
      double Sd = 0.0;
      for (int l = 0; l < nh; ++l)
        Sd += gh.weights[l] * (tab(m, l) - tab(ge.reflect[m], l));
      REQUIRE(std::abs(Sd) <= 1e-13);
    }
  }

  SECTION("oracle: parity form equals parity-projected direct operator") {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> uni(0.1, 1.5);
    for (int trial = 0; trial < 100; ++trial) {
      const double eps = (trial % 2 == 0) ? 1e-1 : 1e-3;
      std::vector<double> f1(ne), f2(nh);
      for (int m = 0; m < ne; ++m) f1[m] = uni(rng) * M1[m];
      for (int l = 0; l < nh; ++l) f2[l] = uni(rng) * M2[l];

      std::vector<double> r1(ne), j1(ne), r2(nh), j2(nh);
      for (int m = 0; m < ne; ++m) {
        r1[m] = 0.5 * (f1[m] + f1[ge.reflect[m]]);
        j1[m] = (f1[m] - f1[ge.reflect[m]]) / (2.0 * eps);
      }
      for (int l = 0; l < nh; ++l) {
        r2[l] = 0.5 * (f2[l] + f2[gh.reflect[l]]);
        j2[l] = (f2[l] - f2[gh.reflect[l]]) / (2.0 * eps);
      }

      ParitySources ps;
      apply_parity_sources(tab, ge, gh, M1, M2, r1.data(), j1.data(), r2.data(), j2.data(), eps, ps);

      std::vector<double> In(ne), Ip(nh);
      apply_I_direct(tab, ge, gh, M1, M2, f1.data(), f2.data(), In.data(), Ip.data());

      for (int m = 0; m < ne; ++m) {
        const double plus = 0.5 * (In[m] + In[ge.reflect[m]]);
        const double minus = (In[m] - In[ge.reflect[m]]) / (2.0 * eps);
        REQUIRE(std::abs(ps.i1_plus[m] - plus) <= 1e-10);
        REQUIRE(std::abs(ps.i1_minus[m] - minus) <= 1e-10);
      }
      for (int l = 0; l < nh; ++l) {
        const double plus = 0.5 * (Ip[l] + Ip[gh.reflect[l]]);
        const double minus = (Ip[l] - Ip[gh.reflect[l]]) / (2.0 * eps);
        REQUIRE(std::abs(ps.i2_plus[l] - plus) <= 1e-10);
        REQUIRE(std::abs(ps.i2_minus[l] - minus) <= 1e-10);
      }
    }
  }
}

TEST_CASE("parity reduction identities for symmetric rotationally invariant kernels") {
  // 2 int sigma(v,w) r(w) dw = int sigma(v,w) f(w) dw + int sigma(-v,w) f(w) dw
  // int sigma(v,w) j(w) dw = (1/2eps)[int sigma(v,w) f dw - int sigma(-v,w) f dw]
  auto g = hermite_rule(20, 1.0);
  const int n = g.n_nodes;
  auto tab = build_kernel_table(kGaussDiff, 0.0, 0.0, g, g);
  const double eps = 0.05;

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uni(0.2, 1.0);
  std::vector<double> f(n), r(n), j(n);
  for (int m = 0; m < n; ++m) f[m] = uni(rng);
  for (int m = 0; m < n; ++m) {
    r[m] = 0.5 * (f[m] + f[g.reflect[m]]);
    j[m] = (f[m] - f[g.reflect[m]]) / (2.0 * eps);
  }
  for (int m = 0; m < n; ++m) {
    double Ir = 0, Ij = 0, Iplus = 0, Iminus = 0;
    for (int l = 0; l < n; ++l) {
      Ir += g.weights[l] * tab(m, l) * r[l];
      Ij += g.weights[l] * tab(m, l) * j[l];
      Iplus += g.weights[l] * tab(m, l) * f[l];
      Iminus += g.weights[l] * tab(g.reflect[m], l) * f[l];
    }
    REQUIRE(2.0 * Ir == Catch::Approx(Iplus + Iminus).margin(1e-12));
    REQUIRE(Ij == Catch::Approx((Iplus - Iminus) / (2.0 * eps)).margin(1e-12));
  }

  // for kernels constant in (v,w) the odd moment vanishes outright
  auto tc = build_kernel_table(kConst2, 0.0, 0.0, g, g);
  for (int m = 0; m < n; ++m) {
    double Ij = 0;
    for (int l = 0; l < n; ++l) Ij += g.weights[l] * tc(m, l) * j[l];
    REQUIRE(std::abs(Ij) <= 1e-12 * 20.0);
  }
}

TEST_CASE("doping profile") {
  // contact plateau: tanh terms cancel to ~1e-13
  REQUIRE(doping_channel(0.0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(doping_channel(1.0) == Catch::Approx(1.0).margin(1e-12));
  // channel dip: 2m - 1 = -0.001, plus ~4e-9 of tanh saturation defect
  REQUIRE(doping_channel(0.5) == Catch::Approx(-0.001 + 4.13e-9).margin(1e-10));
  // monotone transition region contains the half-way value
  REQUIRE(doping_channel(0.3) == Catch::Approx(1.0 - (1.0 - (1.0 - 0.001) / 2.0) *
                                               (0.0 - std::tanh(-20.0))).margin(1e-12));
}
