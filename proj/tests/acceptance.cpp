// Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
// Run directly or through ctest; every tolerance is pinned in code.

#include <gtest/gtest.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <string>
#include <vector>

#include "cubeavg/cubeavg.hpp"

namespace {

using cubeavg::AverageMethod;
using cubeavg::BoundedSequence;
using cubeavg::BoxSet;
using cubeavg::cplx;
using cubeavg::McConfig;
using cubeavg::McMode;
using cubeavg::Observable;
using cubeavg::TorusPoint;
using cubeavg::TorusSystem;

const double kSqrt2m1 = 0.41421356237309515;
const double kSqrt3m1 = 0.7320508075688772;
const double kSqrt5m2 = 0.23606797749978969;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report_line(int criterion, const char* what) {
  std::printf("[CRITERION %2d] %s  %s\n", criterion,
              ::testing::Test::HasFailure() ? "FAIL" : "PASS", what);
  std::fflush(stdout);
}

BoundedSequence random_pm1(cubeavg::SplitMix64& g, std::size_t len) {
  std::vector<cplx> v(len);
  for (auto& x : v) x = cplx{g.next_sign(), 0.0};
  return BoundedSequence(std::move(v), 1.0);
}

BoundedSequence random_unit(cubeavg::SplitMix64& g, std::size_t len) {
  std::vector<cplx> v(len);
  for (auto& x : v) x = g.next_unit_complex();
  return BoundedSequence(std::move(v), 1.0);
}

cplx geometric_mean(double theta, std::size_t N) {
  cplx q = cubeavg::unit_phase(theta);
  if (std::abs(q - cplx{1.0, 0.0}) < 1e-14) return 1.0;
  cplx qn = cubeavg::unit_phase(cubeavg::mulmod1(static_cast<std::uint64_t>(N), theta));
  return (qn - 1.0) / (q - 1.0) / static_cast<double>(N);
}

// 1. Two-index inequality: 500 randomized triples, three lengths each, the
// margin never goes below -1e-9.
TEST(Acceptance, Criterion1_Lemma1Margins) {
  auto t0 = std::chrono::steady_clock::now();
  cubeavg::SplitMix64 base(20250809);
  const std::array<std::size_t, 3> lengths = {16, 64, 256};
  double min_margin = 1e9;
  for (int trial = 0; trial < 500; ++trial) {
    cubeavg::SplitMix64 g = base.fork(trial);
    const bool pm1 = trial % 2 == 0;
    for (std::size_t N : lengths) {
      BoundedSequence a = pm1 ? random_pm1(g, N + 1) : random_unit(g, N + 1);
      BoundedSequence b = pm1 ? random_pm1(g, N + 1) : random_unit(g, N + 1);
      BoundedSequence c = pm1 ? random_pm1(g, 2 * N - 1) : random_unit(g, 2 * N - 1);
      cubeavg::MarginReport r = cubeavg::lemma1_margin(a, b, c, N);
      min_margin = std::min(min_margin, r.margin);
      ASSERT_GE(r.margin, -1e-9) << "trial " << trial << " N " << N;
    }
  }
  double elapsed = seconds_since(t0);
  EXPECT_LT(elapsed, 30.0);
  std::printf("    min margin %.3e over 1500 checks in %.1fs\n", min_margin, elapsed);
  report_line(1, "two-index inequality margins nonnegative");
}

// 2. Seven-slot inequality: finite ratios, no blow-up between N=16 and N=64,
// all-ones analytic ratio reproduced.
TEST(Acceptance, Criterion2_Lemma2Ratios) {
  auto t0 = std::chrono::steady_clock::now();
  cubeavg::SplitMix64 base(77007);
  const std::array<std::size_t, 3> lengths = {16, 32, 64};
  std::array<double, 3> c_emp = {0.0, 0.0, 0.0};
  for (int trial = 0; trial < 100; ++trial) {
    cubeavg::SplitMix64 g = base.fork(trial);
    std::array<BoundedSequence, 7> tuple = {
        random_unit(g, 4 * 64), random_unit(g, 4 * 64), random_unit(g, 4 * 64),
        random_unit(g, 4 * 64), random_unit(g, 4 * 64), random_unit(g, 4 * 64),
        random_unit(g, 4 * 64)};
    for (std::size_t li = 0; li < lengths.size(); ++li) {
      cubeavg::Lemma2Report r = cubeavg::lemma2_margin(tuple, lengths[li]);
      ASSERT_TRUE(std::isfinite(r.ratio)) << "trial " << trial;
      c_emp[li] = std::max(c_emp[li], r.ratio);
    }
  }
  EXPECT_LE(c_emp[2], 2.0 * c_emp[0]);
  for (std::size_t N : lengths) {
    std::array<BoundedSequence, 7> ones = {
        BoundedSequence::ones(4 * 64), BoundedSequence::ones(4 * 64),
        BoundedSequence::ones(4 * 64), BoundedSequence::ones(4 * 64),
        BoundedSequence::ones(4 * 64), BoundedSequence::ones(4 * 64),
        BoundedSequence::ones(4 * 64)};
    cubeavg::Lemma2Report r = cubeavg::lemma2_margin(ones, N);
    double dN = static_cast<double>(N);
    EXPECT_NEAR(r.ratio, (dN / (2 * dN - 1)) * (dN / (2 * dN - 1)), 1e-12);
  }
  double elapsed = seconds_since(t0);
  EXPECT_LT(elapsed, 120.0);
  std::printf("    C_emp(16)=%.4f C_emp(32)=%.4f C_emp(64)=%.4f in %.1fs\n", c_emp[0], c_emp[1],
              c_emp[2], elapsed);
  report_line(2, "seven-slot ratios finite and stable");
}

// 3. Kernel equivalence and speed: naive vs convolution agree to 1e-9; the
// convolution path is at least 10x faster at N = 4096.
TEST(Acceptance, Criterion3_KernelEquivalence) {
  cubeavg::SplitMix64 base(31337);
  const std::array<std::size_t, 4> lengths = {16, 64, 256, 512};
  for (int trial = 0; trial < 100; ++trial) {
    cubeavg::SplitMix64 g = base.fork(trial);
    std::size_t N = lengths[trial % lengths.size()];
    BoundedSequence a = random_unit(g, N);
    BoundedSequence b = random_unit(g, N);
    BoundedSequence c = random_unit(g, 2 * N - 1);
    cplx naive = cubeavg::cube_average_2(a, b, c, N, AverageMethod::Naive);
    cplx conv = cubeavg::cube_average_2(a, b, c, N, AverageMethod::Convolution);
    ASSERT_NEAR(std::abs(naive - conv), 0.0, 1e-9) << "trial " << trial;
  }

  const std::size_t big = 4096;
  cubeavg::SplitMix64 g = base.fork(9999);
  BoundedSequence a = random_unit(g, big);
  BoundedSequence b = random_unit(g, big);
  BoundedSequence c = random_unit(g, 2 * big - 1);
  double naive_best = 1e18, conv_best = 1e18;
  cplx sink = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    auto t0 = std::chrono::steady_clock::now();
    sink += cubeavg::cube_average_2(a, b, c, big, AverageMethod::Naive);
    naive_best = std::min(naive_best, seconds_since(t0));
  }
  for (int rep = 0; rep < 5; ++rep) {
    auto t0 = std::chrono::steady_clock::now();
    sink += cubeavg::cube_average_2(a, b, c, big, AverageMethod::Convolution);
    conv_best = std::min(conv_best, seconds_since(t0));
  }
  EXPECT_GE(naive_best, 10.0 * conv_best) << "sink " << std::abs(sink);
  std::printf("    naive %.1fms vs convolution %.2fms at N=4096 (x%.0f)\n", naive_best * 1e3,
              conv_best * 1e3, naive_best / conv_best);
  report_line(3, "naive and FFT paths agree; FFT at least 10x faster");
}

// 4. Nonergodic collapse: exact identity at N=4096, divergence across block
// boundaries, ergodic control settled at the top of the ladder.
TEST(Acceptance, Criterion4_Prop7Collapse) {
  std::vector<std::int64_t> ladder;
  for (std::int64_t v = 4; v <= (1 << 18); v *= 4) ladder.push_back(v);
  TorusPoint x({0.137, 0.291, 0.548, 0.806});
  auto inst = cubeavg::make_prop7_instance(kSqrt2m1, x, ladder.back());
  auto chk = cubeavg::prop7_check(inst, 4096);
  EXPECT_LT(chk.diff, 1e-10);
  double osc = cubeavg::prop7_divergence(inst, ladder);
  EXPECT_GE(osc, 0.5);
  std::vector<std::int64_t> tail(ladder.end() - 3, ladder.end());
  double control = cubeavg::prop7_divergence(inst, tail, /*ergodic_control=*/true);
  EXPECT_LT(control, 0.1);
  std::printf("    diff %.2e, oscillation %.3f, control %.4f\n", chk.diff, osc, control);
  report_line(4, "weighted average collapses and diverges without ergodicity");
}

// 5. Seven-term collapse on the ergodic skew product, plus the integer
// identity and the WW1 membership of every weight.
TEST(Acceptance, Criterion5_Prop9Collapse) {
  TorusPoint xy({0.3183, 0.5772});
  auto inst = cubeavg::make_prop9_instance(kSqrt2m1, xy, 4096);
  auto chk64 = cubeavg::prop9_check(inst, 64);
  auto chk128 = cubeavg::prop9_check(inst, 128);
  EXPECT_LT(chk64.diff, 1e-9);
  EXPECT_LT(chk128.diff, 1e-9);

  cubeavg::SplitMix64 g(512);
  for (int it = 0; it < 1000; ++it) {
    std::int64_t n = static_cast<std::int64_t>(g.next_u64() % (1u << 20));
    std::int64_t m = static_cast<std::int64_t>(g.next_u64() % (1u << 20));
    std::int64_t p = static_cast<std::int64_t>(g.next_u64() % (1u << 20));
    ASSERT_TRUE(cubeavg::quadratic_cube_identity(n, m, p));
  }

  std::vector<double> tgrid;
  for (int j = 0; j < 32; ++j) tgrid.push_back(j / 32.0);
  tgrid.push_back(0.61803398874989485);
  tgrid.push_back(cubeavg::fract(kSqrt2m1));
  double worst = 0.0;
  for (std::size_t s = 0; s < 6; ++s) {
    BoundedSequence w = cubeavg::truncate(inst.weights[s], 4096);
    double defect = cubeavg::ww1_defect(w, tgrid, {512, 1024, 2048, 4096}).defect;
    worst = std::max(worst, defect);
    EXPECT_LT(defect, 0.1) << "weight " << s + 1;
  }
  std::printf("    diff(64) %.2e, diff(128) %.2e, worst weight WW1 defect %.4f\n", chk64.diff,
              chk128.diff, worst);
  report_line(5, "seven-term collapse exact; every weight passes WW1");
}

// 6. Uniform twisted-sup failure witness against its ergodic control.
TEST(Acceptance, Criterion6_UniformWwFailure) {
  TorusPoint x({0.137, 0.291, 0.548, 0.806});
  for (std::size_t N : {256u, 1024u, 4096u}) {
    cubeavg::WWReport r = cubeavg::uniform_ww_failure(x, kSqrt2m1, N);
    EXPECT_NEAR(r.sup_value, 1.0, 1e-9) << N;
  }
  cubeavg::WWReport control =
      cubeavg::uniform_ww_ergodic_control(TorusPoint({0.137, 0.291}), kSqrt2m1, 4096);
  EXPECT_LT(control.sup_value, 0.1);
  std::printf("    nonergodic sup 1 at N in {256,1024,4096}; control %.4f\n", control.sup_value);
  report_line(6, "uniform twisted sup stays at one without ergodicity");
}

// 7. Two-transformation recurrence: limit matches the conditional-expectation
// product, clears mu(A)^4, exact and Monte Carlo paths agree.
TEST(Acceptance, Criterion7_Khintchine2) {
  auto t0 = std::chrono::steady_clock::now();
  BoxSet A = BoxSet::box({{0.0, 0.5}});
  TorusSystem T1 = TorusSystem::rotation({kSqrt2m1});
  TorusSystem T2 = TorusSystem::rotation({kSqrt3m1});
  std::vector<std::int64_t> Ns = {128, 256, 512, 1024};

  double oracle = cubeavg::conditional_product_integral(T1, T2, A);
  EXPECT_NEAR(oracle, 0.125, 1e-15);
  cubeavg::RecurrenceReport exact = cubeavg::khintchine2_series(T1, T2, A, Ns);
  EXPECT_EQ(exact.path, "exact");
  EXPECT_NEAR(exact.limit_estimate, oracle, 0.01);
  EXPECT_GE(exact.limit_estimate, 0.0625);
  EXPECT_EQ(exact.satisfied, cubeavg::BoundStatus::Satisfied);

  McConfig mc{McMode::MonteCarlo, 100000, 424242, 1e-9};
  cubeavg::RecurrenceReport sampled = cubeavg::khintchine2_series(T1, T2, A, Ns, mc);
  EXPECT_EQ(sampled.path, "monte-carlo");
  EXPECT_NEAR(sampled.limit_estimate, oracle, 0.01);
  EXPECT_GE(sampled.limit_estimate, 0.0625);

  TorusSystem id = TorusSystem::identity(1);
  double mixed_oracle = cubeavg::conditional_product_integral(id, T2, A);
  EXPECT_NEAR(mixed_oracle, 0.25, 1e-15);
  cubeavg::RecurrenceReport mixed = cubeavg::khintchine2_series(id, T2, A, Ns);
  EXPECT_NEAR(mixed.limit_estimate, 0.25, 0.01);

  double elapsed = seconds_since(t0);
  EXPECT_LT(elapsed, 60.0);
  std::printf("    exact %.5f, monte-carlo %.5f, mixed %.5f in %.1fs\n", exact.limit_estimate,
              sampled.limit_estimate, mixed.limit_estimate, elapsed);
  report_line(7, "two-transformation recurrence reaches the product limit");
}

// 8. Three-transformation recurrence on a large set, gated by the degree-7
// threshold roots.
TEST(Acceptance, Criterion8_Khintchine3AndRoots) {
  double delta = cubeavg::threshold_root(cubeavg::ThresholdKind::Delta, 1e-14);
  double root_half = 1.0 - delta;
  EXPECT_GT(root_half, 0.84);
  EXPECT_LT(root_half, 0.85);
  double r3 = root_half * root_half * root_half;
  EXPECT_LT(std::fabs(0.5 * r3 * r3 * root_half + root_half - 1.0), 1e-12);

  double beta = cubeavg::threshold_root(cubeavg::ThresholdKind::Beta, 1e-14);
  EXPECT_GT(beta, 0.79);
  EXPECT_LT(beta, 0.80);
  double b3 = beta * beta * beta;
  EXPECT_LT(std::fabs(b3 * b3 * beta + beta - 1.0), 1e-12);

  BoxSet A = BoxSet::box({{0.0, 0.9}});
  EXPECT_GT(A.measure(), 1.0 - delta);  // the bound applies
  cubeavg::RecurrenceReport r = cubeavg::khintchine3_series(
      TorusSystem::rotation({kSqrt2m1}), TorusSystem::rotation({kSqrt3m1}),
      TorusSystem::rotation({kSqrt5m2}), A, {16, 64, 256});
  EXPECT_NEAR(r.lower_bound, 0.21523, 1e-4);
  for (double v : r.series_values) EXPECT_GE(v, 0.6 - 1e-12);
  EXPECT_EQ(r.satisfied, cubeavg::BoundStatus::Satisfied);
  std::printf("    root(x^7/2+x-1)=%.6f beta=%.6f min term %.4f >= %.5f\n", root_half, beta,
              *std::min_element(r.series_values.begin(), r.series_values.end()), r.lower_bound);
  report_line(8, "three-transformation recurrence clears half mu(A)^8");
}

// 9. Desk-scale convergence of the six-slot average for two genuinely
// non-commuting skew products, with the rotation-only closed form as oracle.
TEST(Acceptance, Criterion9_Theorem1Convergence) {
  std::vector<TorusSystem> systems;
  std::vector<Observable> fs;
  for (int i = 0; i < 6; ++i) {
    systems.push_back(TorusSystem::skew_product(i % 2 ? kSqrt3m1 : kSqrt2m1));
    fs.push_back(Observable::character({0, 1}));
  }
  TorusPoint x({0.1234, 0.2468});
  EXPECT_GT(cubeavg::commutator_defect(systems[0], systems[1], x), 0.0);
  cubeavg::CesaroSeries s = cubeavg::theorem1_series(systems, fs, x, {32, 64, 128, 256, 512});
  std::vector<double> incs;
  for (std::size_t j = 1; j < s.values.size(); ++j)
    incs.push_back(std::abs(s.values[j] - s.values[j - 1]));
  for (std::size_t j = 1; j < incs.size(); ++j) EXPECT_LT(incs[j], incs[j - 1]) << j;
  EXPECT_LT(incs.back(), 0.05);

  // rotation-only configuration: product of three geometric means
  std::vector<TorusSystem> rots(6, TorusSystem::rotation({kSqrt2m1}));
  std::vector<Observable> chars(6, Observable::character({1}));
  TorusPoint x1({0.271828});
  cubeavg::CesaroSeries rs = cubeavg::theorem1_series(rots, chars, x1, {32, 64, 128});
  for (std::size_t j = 0; j < rs.Ns.size(); ++j) {
    std::size_t N = static_cast<std::size_t>(rs.Ns[j]);
    cplx g1 = geometric_mean(3.0 * kSqrt2m1, N);
    cplx want = cubeavg::unit_phase(6.0 * 0.271828) * g1 * g1 * g1;
    EXPECT_NEAR(std::abs(rs.values[j] - want), 0.0, 1e-9);
  }
  std::printf("    increments %.5f > %.5f > %.5f > %.5f (last < 0.05)\n", incs[0], incs[1],
              incs[2], incs[3]);
  report_line(9, "dyadic Cauchy increments shrink for non-commuting skews");
}

// 10. Eigenspace projection estimators: exact on rotations, orthogonal across
// distinct frequencies, energy dominated by the Kronecker projection.
TEST(Acceptance, Criterion10_EtLemma) {
  const std::size_t N = 4096;
  TorusSystem rot = TorusSystem::rotation({kSqrt2m1});
  Observable f(1, {cubeavg::ObservableTerm{{1}, cplx{0.7, 0.0}},
                   cubeavg::ObservableTerm{{2}, cplx{0.0, 0.3}}});
  TorusPoint x({0.456});
  cplx est = cubeavg::et_estimate(rot, f, x, kSqrt2m1, N);
  cplx proj = cplx{0.7, 0.0} * cubeavg::unit_phase(x[0]);
  double tail_bound =
      0.3 * std::abs(geometric_mean(kSqrt2m1, N));  // the freq-2 term twisted down to freq 1
  EXPECT_LE(std::abs(est - proj), tail_bound + 1e-12);

  const std::size_t samples = 1024;
  cplx ip = cubeavg::et_orthogonality(rot, f, kSqrt2m1, cubeavg::fract(2.0 * kSqrt2m1), samples,
                                      N, 2024);
  EXPECT_LT(std::abs(ip), 5.0 / std::sqrt(static_cast<double>(samples)));

  TorusSystem skew = TorusSystem::skew_product(kSqrt2m1);
  Observable mixed(2, {cubeavg::ObservableTerm{{1, 0}, cplx{0.6, 0.0}},
                       cubeavg::ObservableTerm{{2, 0}, cplx{0.0, 0.5}},
                       cubeavg::ObservableTerm{{0, 1}, cplx{0.4, 0.0}},
                       cubeavg::ObservableTerm{{1, 1}, cplx{0.0, 0.3}}});
  std::vector<double> ts = {cubeavg::fract(kSqrt2m1), cubeavg::fract(2.0 * kSqrt2m1)};
  cubeavg::SplitMix64 g(5150);
  for (int i = 0; i < 8; ++i) ts.push_back(g.next_double());
  cubeavg::BesselReport bes = cubeavg::bessel_check(skew, mixed, ts, 384, 2048, 99);
  EXPECT_LE(bes.lhs, bes.rhs + 0.05);
  std::printf("    |est-proj| <= %.2e, orthogonality %.4f, bessel %.4f <= %.4f + 0.05\n",
              tail_bound, std::abs(ip), bes.lhs, bes.rhs);
  report_line(10, "projection estimators exact, orthogonal, Bessel-dominated");
}

// 11. CLI determinism: identical config and seed give byte-identical JSON,
// independent of the worker count.
TEST(Acceptance, Criterion11_CliDeterminism) {
  const char* cli = std::getenv("CUBEAVG_CLI");
  ASSERT_NE(cli, nullptr) << "CUBEAVG_CLI must point at the command line binary";
  auto run = [&](const std::string& env, const std::string& args) {
    std::string cmd = env + " " + cli + " " + args + " 2>/dev/null";
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    EXPECT_NE(pipe, nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    int status = pclose(pipe);
    EXPECT_EQ(WEXITSTATUS(status), 0);
    return out;
  };
  const std::string lemma = "lemma-check 1 --N 32 --trials 10 --seed 9";
  std::string a = run("CUBEAVG_WORKERS=1", lemma);
  std::string b = run("CUBEAVG_WORKERS=4", lemma);
  std::string c = run("CUBEAVG_WORKERS=4", lemma);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_EQ(b, c);

  const std::string rec =
      "recurrence 2 --t1 skew:0.41421356 --t2 skew:0.73205081 --set 0:0.5x0:1 "
      "--Ns 16,32 --mode mc --samples 20000 --seed 3";
  std::string d = run("CUBEAVG_WORKERS=1", rec);
  std::string e = run("CUBEAVG_WORKERS=5", rec);
  EXPECT_FALSE(d.empty());
  EXPECT_EQ(d, e);
  report_line(11, "CLI reports byte-identical across runs and worker counts");
}

}  // namespace
