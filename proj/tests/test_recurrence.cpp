#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cubeavg/recurrence.hpp"
#include "cubeavg/rng.hpp"

namespace {

using cubeavg::BoxSet;
using cubeavg::McConfig;
using cubeavg::McMode;
using cubeavg::PreimageTerm;
using cubeavg::RecurrenceReport;
using cubeavg::TorusPoint;
using cubeavg::TorusSystem;

const double kAlpha1 = 0.41421356237309515;  // sqrt(2) - 1
const double kAlpha2 = 0.7320508075688772;   // sqrt(3) - 1
const double kAlpha3 = 0.23606797749978969;  // sqrt(5) - 2

TEST(BoxSet, MeasureAndWraparound) {
  BoxSet a = BoxSet::box({{0.0, 0.5}});
  EXPECT_NEAR(a.measure(), 0.5, 1e-15);
  BoxSet wrap = BoxSet::box({{0.8, 0.3}});
  EXPECT_NEAR(wrap.measure(), 0.5, 1e-12);
  EXPECT_TRUE(wrap.contains(TorusPoint({0.9})));
  EXPECT_TRUE(wrap.contains(TorusPoint({0.1})));
  EXPECT_FALSE(wrap.contains(TorusPoint({0.5})));
}

TEST(BoxSet, InsertionNormalizesOverlaps) {
  BoxSet s = BoxSet::box({{0.0, 0.5}});
  s.add_box({{0.25, 0.75}});
  EXPECT_NEAR(s.measure(), 0.75, 1e-12);
  s.add_box({{0.0, 1.0}});
  EXPECT_NEAR(s.measure(), 1.0, 1e-12);
}

TEST(BoxSet, TranslationPreservesMeasure) {
  BoxSet s = BoxSet::box({{0.1, 0.4}, {0.7, 0.2}});
  for (double shift : {0.0, 0.3, 0.77, -0.4}) {
    BoxSet t = s.translated({shift, shift * 0.5});
    EXPECT_NEAR(t.measure(), s.measure(), 1e-12) << shift;
  }
}

TEST(BoxSet, IntersectMatchesIntervalArithmetic) {
  BoxSet a = BoxSet::box({{0.0, 0.5}});
  BoxSet b = BoxSet::box({{0.25, 0.75}});
  EXPECT_NEAR(a.intersect(b).measure(), 0.25, 1e-12);
  BoxSet c = BoxSet::box({{0.6, 0.9}});
  EXPECT_NEAR(a.intersect(c).measure(), 0.0, 1e-15);
}

TEST(IntersectionMeasure, FullTorusIsOne) {
  BoxSet full = BoxSet::box({{0.0, 1.0}, {0.0, 1.0}});
  std::vector<PreimageTerm> terms = {{TorusSystem::rotation({0.3, 0.4}), 5},
                                     {TorusSystem::identity(2), 3}};
  EXPECT_NEAR(cubeavg::intersection_measure(full, terms), 1.0, 1e-12);
}

TEST(IntersectionMeasure, RotationOverlapIsExact) {
  // one step of the rotation by 1/4 shifts A = [0, 0.5) onto [0.25, 0.75)
  BoxSet A = BoxSet::box({{0.0, 0.5}});
  std::vector<PreimageTerm> terms = {{TorusSystem::rotation({0.25}), 1}};
  EXPECT_NEAR(cubeavg::intersection_measure(A, terms), 0.25, 1e-12);
}

TEST(IntersectionMeasure, ExactModeRejectsSkew) {
  BoxSet A = BoxSet::box({{0.0, 0.5}, {0.0, 1.0}});
  std::vector<PreimageTerm> terms = {{TorusSystem::skew_product(kAlpha1), 1}};
  McConfig mc;
  mc.mode = McMode::Exact;
  EXPECT_THROW(cubeavg::intersection_measure(A, terms, mc), std::invalid_argument);
}

TEST(IntersectionMeasure, MonteCarloSelfConsistent) {
  BoxSet A = BoxSet::box({{0.0, 0.6}, {0.2, 0.9}});
  std::vector<PreimageTerm> terms = {{TorusSystem::skew_product(kAlpha1), 3},
                                     {TorusSystem::skew_product(kAlpha2), 7}};
  McConfig coarse{McMode::MonteCarlo, 2000, 11, 1e-9};
  McConfig fine{McMode::MonteCarlo, 40000, 12, 1e-9};
  double a = cubeavg::intersection_measure(A, terms, coarse);
  double b = cubeavg::intersection_measure(A, terms, fine);
  EXPECT_NEAR(a, b, 3.0 / std::sqrt(2000.0));
}

TEST(IntersectionMeasure, ExactAndMonteCarloAgreeOnRotations) {
  BoxSet A = BoxSet::box({{0.0, 0.55}});
  std::vector<PreimageTerm> terms = {{TorusSystem::rotation({kAlpha1}), 4},
                                     {TorusSystem::rotation({kAlpha2}), 9}};
  double exact = cubeavg::intersection_measure(A, terms);
  McConfig mc{McMode::MonteCarlo, 20000, 7, 1e-9};
  double sampled = cubeavg::intersection_measure(A, terms, mc);
  EXPECT_NEAR(exact, sampled, 4.0 / std::sqrt(20000.0));
}

TEST(Khintchine2, IndependentRotationsReachTheProductLimit) {
  BoxSet A = BoxSet::box({{0.0, 0.5}});
  TorusSystem T1 = TorusSystem::rotation({kAlpha1});
  TorusSystem T2 = TorusSystem::rotation({kAlpha2});
  RecurrenceReport r = cubeavg::khintchine2_series(T1, T2, A, {64, 128, 256, 512, 1024});
  EXPECT_EQ(r.path, "exact");
  double predicted = cubeavg::conditional_product_integral(T1, T2, A);
  EXPECT_NEAR(predicted, 0.125, 1e-15);
  EXPECT_NEAR(r.limit_estimate, predicted, 0.01);
  EXPECT_GE(r.limit_estimate, r.lower_bound);  // 0.0625
  EXPECT_EQ(r.satisfied, cubeavg::BoundStatus::Satisfied);
}

TEST(Khintchine2, IdentityPlusRotationReachesMuSquared) {
  BoxSet A = BoxSet::box({{0.0, 0.5}});
  TorusSystem T1 = TorusSystem::identity(1);
  TorusSystem T2 = TorusSystem::rotation({kAlpha2});
  RecurrenceReport r = cubeavg::khintchine2_series(T1, T2, A, {128, 256, 512, 1024});
  double predicted = cubeavg::conditional_product_integral(T1, T2, A);
  EXPECT_NEAR(predicted, 0.25, 1e-15);
  EXPECT_NEAR(r.limit_estimate, 0.25, 0.01);
}

TEST(Khintchine2, FullTorusIsIdenticallyOne) {
  BoxSet A = BoxSet::box({{0.0, 1.0}});
  RecurrenceReport r = cubeavg::khintchine2_series(TorusSystem::rotation({kAlpha1}),
                                                   TorusSystem::rotation({kAlpha2}), A, {8, 16});
  for (double v : r.series_values) EXPECT_NEAR(v, 1.0, 1e-12);
  EXPECT_EQ(r.satisfied, cubeavg::BoundStatus::Satisfied);
}

TEST(Khintchine2, TermsRespectInclusionExclusionFloor) {
  BoxSet A = BoxSet::box({{0.0, 0.9}});
  RecurrenceReport r = cubeavg::khintchine2_series(TorusSystem::rotation({kAlpha1}),
                                                   TorusSystem::rotation({kAlpha2}), A,
                                                   {16, 64, 256});
  double floor = 1.0 - 3.0 * (1.0 - A.measure());
  for (double v : r.series_values) EXPECT_GE(v, floor - 1e-12);
}

TEST(Khintchine2, MonteCarloMatchesExactPath) {
  BoxSet A = BoxSet::box({{0.0, 0.5}});
  TorusSystem T1 = TorusSystem::rotation({kAlpha1});
  TorusSystem T2 = TorusSystem::rotation({kAlpha2});
  std::vector<std::int64_t> Ns = {32, 64, 128};
  RecurrenceReport exact = cubeavg::khintchine2_series(T1, T2, A, Ns);
  McConfig mc{McMode::MonteCarlo, 20000, 77, 1e-9};
  RecurrenceReport sampled = cubeavg::khintchine2_series(T1, T2, A, Ns, mc);
  EXPECT_EQ(sampled.path, "monte-carlo");
  for (std::size_t j = 0; j < Ns.size(); ++j)
    EXPECT_NEAR(exact.series_values[j], sampled.series_values[j], 4.0 / std::sqrt(20000.0));
}

TEST(Khintchine2, SkewPathRunsMonteCarloDeterministically) {
  BoxSet A = BoxSet::box({{0.0, 0.5}, {0.0, 1.0}});
  TorusSystem T1 = TorusSystem::skew_product(kAlpha1);
  TorusSystem T2 = TorusSystem::skew_product(kAlpha2);
  McConfig mc{McMode::Auto, 4000, 5, 1e-9};
  RecurrenceReport a = cubeavg::khintchine2_series(T1, T2, A, {16, 32}, mc);
  EXPECT_EQ(a.path, "monte-carlo");
  setenv("CUBEAVG_WORKERS", "3", 1);
  RecurrenceReport b = cubeavg::khintchine2_series(T1, T2, A, {16, 32}, mc);
  unsetenv("CUBEAVG_WORKERS");
  for (std::size_t j = 0; j < a.series_values.size(); ++j)
    EXPECT_EQ(a.series_values[j], b.series_values[j]);
}

TEST(Khintchine3, LargeSetSatisfiesTheBound) {
  BoxSet A = BoxSet::box({{0.0, 0.9}});
  RecurrenceReport r = cubeavg::khintchine3_series(
      TorusSystem::rotation({kAlpha1}), TorusSystem::rotation({kAlpha2}),
      TorusSystem::rotation({kAlpha3}), A, {16, 64, 256});
  EXPECT_EQ(r.bound_name, "half-muA^8");
  EXPECT_NEAR(r.lower_bound, 0.5 * std::pow(0.9, 8.0), 1e-12);
  for (double v : r.series_values) EXPECT_GE(v, 0.6 - 1e-12);
  EXPECT_EQ(r.satisfied, cubeavg::BoundStatus::Satisfied);
}

TEST(Khintchine3, FullTorusSeriesIsOne) {
  BoxSet A = BoxSet::box({{0.0, 1.0}});
  RecurrenceReport r = cubeavg::khintchine3_series(
      TorusSystem::rotation({kAlpha1}), TorusSystem::rotation({kAlpha2}),
      TorusSystem::rotation({kAlpha3}), A, {8, 16});
  for (double v : r.series_values) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Khintchine3, SmallSetIsNotApplicable) {
  BoxSet A = BoxSet::box({{0.0, 0.5}});
  RecurrenceReport r = cubeavg::khintchine3_series(
      TorusSystem::rotation({kAlpha1}), TorusSystem::rotation({kAlpha2}),
      TorusSystem::rotation({kAlpha3}), A, {8, 16});
  EXPECT_EQ(r.satisfied, cubeavg::BoundStatus::NotApplicable);
  EXPECT_FALSE(r.series_values.empty());
}

TEST(ConditionalProductIntegral, ClosedFormCases) {
  BoxSet A = BoxSet::box({{0.0, 0.5}});
  TorusSystem rot1 = TorusSystem::rotation({kAlpha1});
  TorusSystem rot2 = TorusSystem::rotation({kAlpha2});
  TorusSystem id = TorusSystem::identity(1);
  EXPECT_NEAR(cubeavg::conditional_product_integral(rot1, rot2, A), 0.125, 1e-15);
  EXPECT_NEAR(cubeavg::conditional_product_integral(id, id, A), 0.5, 1e-15);
  EXPECT_NEAR(cubeavg::conditional_product_integral(id, rot2, A), 0.25, 1e-15);
  EXPECT_NEAR(cubeavg::conditional_product_integral(rot1, id, A), 0.25, 1e-15);
}

TEST(ConditionalProductIntegral, GridFallbackHandlesRationalRotation) {
  // rotation by 1/4 is periodic: the invariant expectation of [0, 0.5) along
  // the 4-cycle is exactly 1/2 everywhere
  BoxSet A = BoxSet::box({{0.0, 0.5}});
  TorusSystem quarter = TorusSystem::rotation({0.25});
  double v = cubeavg::conditional_product_integral(quarter, quarter, A, 64, 4096);
  EXPECT_NEAR(v, 0.125, 1e-9);
  EXPECT_THROW(cubeavg::conditional_product_integral(quarter, quarter, A, 0), std::invalid_argument);
}

TEST(ThresholdRoot, BracketsAndResiduals) {
  double delta = cubeavg::threshold_root(cubeavg::ThresholdKind::Delta, 1e-14);
  double root = 1.0 - delta;
  EXPECT_GT(root, 0.84);
  EXPECT_LT(root, 0.85);
  EXPECT_NEAR(delta, 0.1545, 1e-3);
  double r3 = root * root * root;
  EXPECT_LT(std::fabs(0.5 * r3 * r3 * root + root - 1.0), 1e-12);

  double beta = cubeavg::threshold_root(cubeavg::ThresholdKind::Beta, 1e-14);
  EXPECT_GT(beta, 0.79);
  EXPECT_LT(beta, 0.80);
  EXPECT_NEAR(beta, 0.7965, 1e-3);
  double b3 = beta * beta * beta;
  EXPECT_LT(std::fabs(b3 * b3 * beta + beta - 1.0), 1e-12);
}

TEST(ThresholdRoot, ToleranceSemantics) {
  double coarse = cubeavg::threshold_root(cubeavg::ThresholdKind::Beta, 0.25);
  EXPECT_NEAR(coarse, 0.7965, 0.25);
  // halving the tolerance never moves the root by more than the previous one
  double prev = cubeavg::threshold_root(cubeavg::ThresholdKind::Beta, 1e-3);
  for (double tol = 5e-4; tol > 1e-9; tol *= 0.5) {
    double cur = cubeavg::threshold_root(cubeavg::ThresholdKind::Beta, tol);
    EXPECT_LE(std::fabs(cur - prev), 2.0 * tol + 1e-15);
    prev = cur;
  }
  EXPECT_THROW(cubeavg::threshold_root(cubeavg::ThresholdKind::Beta, 0.0), std::invalid_argument);
}

}  // namespace
