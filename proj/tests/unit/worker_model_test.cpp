#include "exhaust/worker_model.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "exhaust/errors.hpp"
#include "test_support.hpp"

namespace exhaust {
namespace {

using testing::random_worker;
using testing::uniform;

// Independent reference: left null vector of Q from a full-pivot LU.
std::array<double, kStateCount> eigen_stationary(const GeneratorMatrix& q) {
  Eigen::Matrix<double, 5, 5> qt;
  for (std::size_t i = 0; i < kStateCount; ++i) {
    for (std::size_t j = 0; j < kStateCount; ++j) qt(static_cast<int>(j), static_cast<int>(i)) = q.rates()[i][j];
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 5, 5>> lu(qt);
  const Eigen::MatrixXd kernel = lu.kernel();
  EXPECT_EQ(kernel.cols(), 1);
  const Eigen::VectorXd v = kernel.col(0) / kernel.col(0).sum();
  std::array<double, kStateCount> out{};
  for (std::size_t i = 0; i < kStateCount; ++i) out[i] = v(static_cast<int>(i));
  return out;
}

void expect_probs(const StationaryDistribution& pi, const std::array<double, kStateCount>& want,
                  double tol) {
  for (std::size_t i = 0; i < kStateCount; ++i) EXPECT_NEAR(pi.probs()[i], want[i], tol) << "state " << i;
}

TEST(WorkerParams, RejectsInvalidRates) {
  EXPECT_THROW(WorkerParams(0.0, 1.0), ValidationError);
  EXPECT_THROW(WorkerParams(1.0, -1.0), ValidationError);
  EXPECT_THROW(WorkerParams(2.0, 1.0, 1.5), ValidationError);
  EXPECT_THROW(WorkerParams(2.0, 1.0, -0.1), ValidationError);
  EXPECT_THROW(WorkerParams(std::nan(""), 1.0), ValidationError);
}

TEST(WorkerParams, StabilityIsEnforcedUnlessOverridden) {
  EXPECT_THROW(WorkerParams(0.5, 1.0), ValidationError);
  const WorkerParams w(0.5, 1.0, 0.0, StabilityCheck::kAllowUnstable);
  EXPECT_TRUE(w.unstable());
  EXPECT_FALSE(WorkerParams(1.0, 1.0).unstable());
}

TEST(StateNames, SerializedNames) {
  EXPECT_EQ(state_name(State::kS1), "s1");
  EXPECT_EQ(state_name(State::kS3), "s3");
  EXPECT_EQ(state_name(State::kS1x), "s1x");
  EXPECT_EQ(state_name(State::kS2x), "s2x");
  EXPECT_EQ(parse_mode("moderate"), AssignmentMode::kModerate);
  EXPECT_FALSE(parse_mode("lenient").has_value());
}

TEST(BuildGenerator, StrictRowsFollowTheTransitionList) {
  const WorkerParams w(2.0, 1.0);
  const auto q = build_generator(w, 1.0, 0.0, AssignmentMode::kStrict);
  EXPECT_DOUBLE_EQ(q.rate(State::kS1, State::kS2), 2.0);
  EXPECT_DOUBLE_EQ(q.rate(State::kS2, State::kS3), 2.0);
  EXPECT_DOUBLE_EQ(q.rate(State::kS2, State::kS1), 1.0);
  EXPECT_DOUBLE_EQ(q.rate(State::kS3, State::kS2), 1.0);
  EXPECT_DOUBLE_EQ(q.rate(State::kS3, State::kS1x), 1.0);
  EXPECT_DOUBLE_EQ(q.rate(State::kS1x, State::kS2x), 1.0);
  EXPECT_DOUBLE_EQ(q.rate(State::kS2x, State::kS3), 1.0);
  EXPECT_DOUBLE_EQ(q.rate(State::kS2x, State::kS1x), 2.0);
  EXPECT_DOUBLE_EQ(q.rate(State::kS2, State::kS1x), 0.0);
  EXPECT_DOUBLE_EQ(q.exit_rate(State::kS3), 2.0);
}

TEST(BuildGenerator, ModerateAddsAssignmentFromModerateStates) {
  const WorkerParams w(2.0, 1.0, 0.5);
  const auto q = build_generator(w, 1.0, 1.0, AssignmentMode::kModerate);
  EXPECT_DOUBLE_EQ(q.rate(State::kS2x, State::kS3), 1.0);
  EXPECT_DOUBLE_EQ(q.rate(State::kS2x, State::kS1x), 3.0);
  EXPECT_DOUBLE_EQ(q.rate(State::kS2, State::kS1x), 1.0);
}

TEST(BuildGenerator, StrictModeIgnoresP) {
  const WorkerParams w(2.0, 1.0, 0.5);
  const auto a = build_generator(w, 1.0, 0.8, AssignmentMode::kStrict);
  const auto b = build_generator(w, 1.0, 0.0, AssignmentMode::kStrict);
  EXPECT_EQ(a.rates(), b.rates());
}

TEST(BuildGenerator, RejectsBadInputs) {
  const WorkerParams w(2.0, 1.0);
  EXPECT_THROW(build_generator(w, -1.0, 0.0, AssignmentMode::kStrict), ValidationError);
  EXPECT_THROW(build_generator(w, 1.0, 1.5, AssignmentMode::kModerate), ValidationError);
}

TEST(GeneratorMatrix, ValidatesRowsAndSigns) {
  GeneratorMatrix::Rates r{};
  r[0][1] = 1.0;
  EXPECT_THROW(GeneratorMatrix{r}, ValidationError);  // row 0 does not sum to zero
  r[0][0] = -1.0;
  EXPECT_NO_THROW(GeneratorMatrix{r});
  r[1][0] = -0.5;
  r[1][1] = 0.5;
  EXPECT_THROW(GeneratorMatrix{r}, ValidationError);  // negative off-diagonal
}

TEST(StationaryDistribution, ClampsTinyNegativesAndChecksTotal) {
  const StationaryDistribution pi({-1e-15, 0.5, 0.5, 0.0, 0.0});
  EXPECT_EQ(pi[State::kS1], 0.0);
  EXPECT_THROW(StationaryDistribution({-1e-3, 0.5, 0.501, 0.0, 0.0}), ValidationError);
  EXPECT_THROW(StationaryDistribution({0.2, 0.2, 0.2, 0.2, 0.1}), ValidationError);
}

TEST(Stationary, ClosedFormKnownValues) {
  expect_probs(stationary_strict_closed_form(WorkerParams(2.0, 1.0), 1.0),
               {1.0 / 23, 2.0 / 23, 4.0 / 23, 12.0 / 23, 4.0 / 23}, 1e-15);
  expect_probs(stationary_strict_closed_form(WorkerParams(2.0, 1.0), 0.0),
               {1.0 / 7, 2.0 / 7, 4.0 / 7, 0.0, 0.0}, 1e-15);
  expect_probs(stationary_strict_closed_form(WorkerParams(3.0, 3.0), 0.0),
               {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0, 0.0}, 1e-15);
}

TEST(Stationary, GenericKnownValues) {
  expect_probs(stationary_generic(build_generator(WorkerParams(2.0, 1.0), 1.0, 0.0, AssignmentMode::kStrict)),
               {1.0 / 23, 2.0 / 23, 4.0 / 23, 12.0 / 23, 4.0 / 23}, 1e-14);
  // alpha = 0: 1* and 2* are transient, mass sits on {1, 2, 3}.
  expect_probs(stationary_generic(build_generator(WorkerParams(1.0, 1.0), 0.0, 0.0, AssignmentMode::kStrict)),
               {1.0 / 3, 1.0 / 3, 1.0 / 3, 0.0, 0.0}, 1e-14);
}

TEST(Stationary, GenericReportsDiagnostics) {
  StationaryDiagnostics d;
  stationary_generic(build_generator(WorkerParams(2.0, 1.0), 1.0, 0.0, AssignmentMode::kStrict), &d);
  EXPECT_LE(d.residual, 1e-14);
  EXPECT_GT(d.condition_estimate, 1.0);
  EXPECT_FALSE(d.ill_conditioned);
}

TEST(Stationary, GenericRejectsReducibleChain) {
  // Two closed classes {1, 2} and {3}: no unique stationary distribution.
  GeneratorMatrix::Rates r{};
  r[0][1] = 1.0;
  r[0][0] = -1.0;
  r[1][0] = 1.0;
  r[1][1] = -1.0;
  EXPECT_THROW(stationary_generic(GeneratorMatrix(r)), DegenerateChainError);
}

TEST(Stationary, ClosedFormAndModerateMatchIndependentNullSpace) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const WorkerParams w = random_worker(rng);
    const double alpha = uniform(rng, 0.0, 20.0);
    const double p = uniform(rng, 0.0, 1.0);
    const auto strict_q = build_generator(w, alpha, 0.0, AssignmentMode::kStrict);
    const auto ref_strict = eigen_stationary(strict_q);
    expect_probs(stationary_strict_closed_form(w, alpha), ref_strict, 1e-10);
    expect_probs(stationary_generic(strict_q), ref_strict, 1e-10);
    const auto ref_moderate = eigen_stationary(build_generator(w, alpha, p, AssignmentMode::kModerate));
    expect_probs(moderate_stationary(w, alpha, p), ref_moderate, 1e-10);
  }
}

TEST(StrictUtility, KnownValuesAndLimits) {
  const WorkerParams w(2.0, 1.0);
  EXPECT_NEAR(strict_utility(w, 1.0), 4.0 / 23.0, 1e-15);
  EXPECT_EQ(strict_utility(w, 0.0), 0.0);
  EXPECT_NEAR(strict_utility(w, 1e9), 0.25, 1e-8);
}

TEST(StrictUtility, IncreasingAndConcave) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const WorkerParams w = random_worker(rng);
    const double a = uniform(rng, 0.01, 20.0);
    const double h = 1e-3;
    EXPECT_GT(strict_utility(w, a + h), strict_utility(w, a));
    const double second = strict_utility(w, a + h) - 2 * strict_utility(w, a) + strict_utility(w, a - h);
    EXPECT_LE(second, 1e-14);
  }
}

TEST(ModerateUtility, ReducesToStrictAtZeroP) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const WorkerParams w = random_worker(rng);
    const double a = uniform(rng, 0.0, 20.0);
    EXPECT_NEAR(moderate_utility(w, a, 0.0), strict_utility(w, a), 1e-12);
  }
  expect_probs(moderate_stationary(WorkerParams(2.0, 1.0, 0.3), 1.0, 0.0),
               {1.0 / 23, 2.0 / 23, 4.0 / 23, 12.0 / 23, 4.0 / 23}, 1e-14);
}

TEST(ModerateUtility, ZeroRateAndLimit) {
  const WorkerParams w(2.0, 1.0, 1.0);
  EXPECT_EQ(moderate_utility(w, 0.0, 0.7), 0.0);
  expect_probs(moderate_stationary(w, 0.0, 0.7), {1.0 / 7, 2.0 / 7, 4.0 / 7, 0.0, 0.0}, 1e-14);
  // Leading coefficients give ps * mu as alpha grows with p = 1.
  EXPECT_NEAR(moderate_utility(w, 1e8, 1.0), 1.0, 1e-6);
}

TEST(ModerateUtility, RegressionFixtureAtFullAssignment) {
  // Exact rational solve of the balance system for (2, 1, alpha = 1, p = 1).
  const auto pi = moderate_stationary(WorkerParams(2.0, 1.0, 0.5), 1.0, 1.0);
  expect_probs(pi, {1.0 / 49, 2.0 / 49, 6.0 / 49, 32.0 / 49, 8.0 / 49}, 1e-14);
  EXPECT_NEAR(moderate_utility(WorkerParams(2.0, 1.0, 0.5), 1.0, 1.0), 11.0 / 49, 1e-14);
}

TEST(ModerateUtility, NondecreasingInSuccessProbability) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const WorkerParams w = random_worker(rng, 0.0);
    const double a = uniform(rng, 0.0, 10.0);
    const double p = uniform(rng, 0.0, 1.0);
    double prev = -1.0;
    for (double ps = 0.0; ps <= 1.0; ps += 0.1) {
      const double u = moderate_utility(w.with_ps(ps), a, p);
      EXPECT_GE(u, prev - 1e-15);
      prev = u;
    }
  }
}

TEST(RatioCoefficients, ZeroPKnownValues) {
  const RatioTerm t = ratio_coefficients(WorkerParams(2.0, 1.0, 0.7), 0.0);
  EXPECT_DOUBLE_EQ(t.numerator.coeffs[0], 0.0);
  EXPECT_DOUBLE_EQ(t.numerator.coeffs[1], 4.0);
  EXPECT_DOUBLE_EQ(t.numerator.coeffs[2], 0.0);
  EXPECT_DOUBLE_EQ(t.numerator.coeffs[3], 0.0);
  EXPECT_DOUBLE_EQ(t.denominator.coeffs[0], 7.0);
}

TEST(RatioCoefficients, AllOnesAgreeWithBalanceEquations) {
  const WorkerParams w(1.0, 1.0, 1.0);
  const RatioTerm t = ratio_coefficients(w, 1.0);
  for (double a : {0.5, 1.0, 2.0}) EXPECT_NEAR(t(a), moderate_utility(w, a, 1.0), 1e-12);
  // f = a^3 + 3a^2 + 2a, g = a^3 + 5a^2 + 7a + 3 when every parameter is one.
  EXPECT_DOUBLE_EQ(t.numerator.coeffs[1], 2.0);
  EXPECT_DOUBLE_EQ(t.numerator.coeffs[2], 3.0);
  EXPECT_DOUBLE_EQ(t.numerator.coeffs[3], 1.0);
  EXPECT_DOUBLE_EQ(t.denominator.coeffs[1], 7.0);
  EXPECT_DOUBLE_EQ(t.denominator.coeffs[2], 5.0);
  EXPECT_DOUBLE_EQ(t.denominator.coeffs[3], 1.0);
}

TEST(RatioCoefficients, MatchBalanceEquationsOnRandomInstances) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 500; ++trial) {
    const WorkerParams w = random_worker(rng);
    const double a = uniform(rng, 0.0, 20.0);
    const double p = uniform(rng, 0.0, 1.0);
    EXPECT_LE(ratio_discrepancy(w, a, p), 1e-9 * std::max(1.0, moderate_utility(w, a, p)));
    EXPECT_GE(ratio_coefficients(w, p).denominator(0.0), 3.0);
  }
}

TEST(RatioCoefficients, InPMatchesBalanceEquations) {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 200; ++trial) {
    const WorkerParams w = random_worker(rng);
    const double a = uniform(rng, 0.0, 20.0);
    const double p = uniform(rng, 0.0, 1.0);
    EXPECT_NEAR(ratio_coefficients_in_p(w, a)(p), moderate_utility(w, a, p), 1e-10);
  }
}

// A denominator whose alpha^1 coefficient carries 2p instead of 3p drifts from
// the balance-equation value as soon as p > 0, so the library keeps 3p.
TEST(RatioCoefficients, LinearDenominatorTermUsesThreeP) {
  const WorkerParams w(2.0, 1.0, 0.7);
  const double lam = w.lambda(), mu = w.mu(), p = 1.0, r = lam / mu;
  RatioTerm two_p = ratio_coefficients(w, p);
  two_p.denominator.coeffs[1] = lam / (mu * mu) * (r * r + r * (2 + p) + 2 * p);
  const RatioTerm three_p = ratio_coefficients(w, p);
  EXPECT_NEAR(three_p.denominator.coeffs[1], lam / (mu * mu) * (r * r + r * (2 + p) + 3 * p), 1e-14);
  EXPECT_NEAR(three_p(1.0), moderate_utility(w, 1.0, p), 1e-12);
  EXPECT_GT(std::abs(two_p(1.0) - moderate_utility(w, 1.0, p)), 1e-3);
}

TEST(Policy, Validation) {
  EXPECT_NO_THROW((Policy{{1.0, 2.0}, {0.0, 1.0}}.validate(2, 3.0)));
  EXPECT_THROW((Policy{{1.0, 2.0}, {0.0, 1.0}}.validate(2, 2.5)), ValidationError);
  EXPECT_THROW((Policy{{1.0}, {0.0, 1.0}}.validate(2, 3.0)), ValidationError);
  EXPECT_THROW((Policy{{-1.0, 2.0}, {0.0, 1.0}}.validate(2, 3.0)), ValidationError);
  EXPECT_THROW((Policy{{1.0, 2.0}, {0.0, 1.2}}.validate(2, 3.0)), ValidationError);
  EXPECT_EQ(Policy::strict({1.0, 2.0}).p, (std::vector<double>{0.0, 0.0}));
}

}  // namespace
}  // namespace exhaust
