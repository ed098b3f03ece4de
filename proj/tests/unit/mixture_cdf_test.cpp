#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cdfest/error.hpp"
#include "cdfest/instrumentation.hpp"
#include "cdfest/mixture_cdf.hpp"
#include "oracles.hpp"
#include "test_models.hpp"

namespace cdfest {

using testing::jitter;
using testing::random_box;
using testing::random_model;
using testing::reference_net;
using testing::stepwise_oracle;
using testing::toy_instance;

namespace {

std::vector<Endpoint> finite_point(std::initializer_list<double> xs) {
  std::vector<Endpoint> p;
  for (double x : xs) p.push_back(Endpoint::finite(x));
  return p;
}

}  // namespace

TEST(MixtureCdfTest, WeightsOnSimplex) {
  auto model = random_model(7, 3, 1);
  jitter(model, 2, 2.0);
  double sum = 0.0;
  for (double a : model.weights()) {
    EXPECT_GE(a, 0.0);
    sum += a;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(MixtureCdfTest, CdfLimits) {
  auto model = random_model(5, 4, 3);
  jitter(model, 4);
  std::vector<Endpoint> top(4, Endpoint::pos_inf());
  EXPECT_NEAR(model.cdf(top), 1.0, 1e-12);
  auto p = finite_point({0.1, -0.3, 0.7, 1.2});
  for (std::size_t j = 0; j < 4; ++j) {
    auto q = p;
    q[j] = Endpoint::neg_inf();
    EXPECT_EQ(model.cdf(q), 0.0);
  }
  EXPECT_THROW(model.cdf(finite_point({0.0})), InvalidInput);
}

TEST(MixtureCdfTest, CdfMatchesIndependentDoubleLoop) {
  auto model = random_model(3, 2, 10);
  jitter(model, 11);
  double expected = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    expected += model.weights()[i] * reference_net(model, i, 0).phi(0.1) *
                reference_net(model, i, 1).phi(-0.2);
  }
  EXPECT_NEAR(model.cdf(finite_point({0.1, -0.2})), expected, 1e-14);
}

TEST(MixtureCdfTest, CdfCoordinatewiseMonotone) {
  auto model = random_model(6, 3, 12);
  jitter(model, 13);
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> step(0.0, 0.5);
  for (int c = 0; c < 200; ++c) {
    auto p = finite_point({u(rng), u(rng), u(rng)});
    const double base = model.cdf(p);
    const std::size_t j = static_cast<std::size_t>(c % 3);
    p[j] = Endpoint::finite(p[j].as_double() + step(rng));
    EXPECT_GE(model.cdf(p), base);
  }
}

TEST(MixtureCdfTest, NaiveTwoDimensionalExpansion) {
  auto model = random_model(4, 2, 20);
  jitter(model, 21);
  const double l1 = -0.4, u1 = 0.9, l2 = -1.1, u2 = 0.3;
  QueryBox box(2);
  box[0] = {Endpoint::finite(l1), Endpoint::finite(u1)};
  box[1] = {Endpoint::finite(l2), Endpoint::finite(u2)};
  auto F = [&](double a, double b) { return model.cdf(finite_point({a, b})); };
  const double expected = F(u1, u2) - F(u1, l2) - F(l1, u2) + F(l1, l2);
  EXPECT_NEAR(model.box_probability_naive(box), expected, 1e-15);
  EXPECT_NEAR(model.box_probability(box), expected, 1e-12);
}

TEST(MixtureCdfTest, DegenerateAndFullBoxes) {
  auto model = random_model(5, 3, 30);
  jitter(model, 31);
  const QueryBox full = QueryBox::full(3);
  EXPECT_NEAR(model.box_probability(full), 1.0, 1e-12);
  EXPECT_NEAR(model.box_probability_naive(full), 1.0, 1e-12);
  QueryBox thin = full;
  thin[1] = {Endpoint::finite(0.25), Endpoint::finite(0.25)};
  EXPECT_EQ(model.box_probability(thin), 0.0);
  EXPECT_EQ(model.box_probability_naive(thin), 0.0);
}

TEST(MixtureCdfTest, InvertedIntervalYieldsZero) {
  auto model = random_model(5, 3, 40);
  jitter(model, 41);
  std::mt19937_64 rng(42);
  for (int c = 0; c < 100; ++c) {
    QueryBox box = random_box(3, rng);
    const std::size_t k = static_cast<std::size_t>(c % 3);
    box[k] = {Endpoint::finite(0.8), Endpoint::finite(-0.5)};
    EXPECT_EQ(model.box_probability(box), 0.0);
  }
}

TEST(MixtureCdfTest, MergedAgreesWithNaive) {
  std::mt19937_64 rng(50);
  for (std::size_t d = 1; d <= 8; ++d) {
    for (int c = 0; c < 40; ++c) {
      auto model = random_model(1 + static_cast<std::size_t>(c % 6), d, 1000 * d + c);
      jitter(model, 7 * d + c);
      const QueryBox box = random_box(d, rng);
      EXPECT_NEAR(model.box_probability(box), model.box_probability_naive(box), 1e-10)
          << "d=" << d << " case " << c;
    }
  }
}

TEST(MixtureCdfTest, NaiveGuardsDimension) {
  auto model = random_model(1, 26, 60);
  EXPECT_THROW(model.box_probability_naive(QueryBox::full(26)), CapacityError);
  EXPECT_NEAR(model.box_probability(QueryBox::full(26)), 1.0, 1e-12);
}

TEST(MixtureCdfTest, EvaluationCountIsTwoMD) {
  auto model = random_model(9, 4, 70);
  std::mt19937_64 rng(71);
  for (int c = 0; c < 10; ++c) {
    const QueryBox box = random_box(4, rng);
    instrumentation::reset();
    model.box_probability(box);
    EXPECT_EQ(instrumentation::counters().phi_calls, 2u * 9 * 4);
    EXPECT_LE(instrumentation::counters().net_passes, 2u * 9 * 4);
  }
}

TEST(MixtureCdfTest, BoxProbabilityIsBitwiseStable) {
  auto model = random_model(16, 6, 80);
  jitter(model, 81);
  std::mt19937_64 rng(82);
  const QueryBox box = random_box(6, rng);
  std::set<double> seen;
  for (int k = 0; k < 500; ++k) seen.insert(model.box_probability(box));
  EXPECT_EQ(seen.size(), 1u);
}

TEST(MixtureCdfTest, LogDensitySingleComponentReduces) {
  auto model = random_model(1, 1, 90);
  jitter(model, 91);
  for (double x : {-1.5, 0.0, 0.4, 2.2}) {
    EXPECT_NEAR(model.log_density(std::vector<double>{x}), model.net(0, 0).log_density(x), 1e-13);
  }
}

TEST(MixtureCdfTest, LogDensityMatchesDirectProductSum) {
  auto model = random_model(5, 3, 100);
  jitter(model, 101);
  const std::vector<double> x{-0.7, 0.2, 1.3};
  double direct = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    double prod = model.weights()[i];
    for (std::size_t j = 0; j < 3; ++j) prod *= reference_net(model, i, j).density(x[j]);
    direct += prod;
  }
  EXPECT_NEAR(model.log_density(x), std::log(direct), 1e-8 * std::fabs(std::log(direct)));
  EXPECT_THROW(model.log_density(std::vector<double>{0.0, std::nan(""), 1.0}), InvalidInput);
}

TEST(MixtureCdfTest, DensityIsMixedPartialOfCdf) {
  auto model = random_model(4, 2, 110);
  jitter(model, 111);
  const double a = 0.3, b = -0.4, h = 1e-4;
  auto F = [&](double x, double y) { return model.cdf(finite_point({x, y})); };
  const double mixed =
      (F(a + h, b + h) - F(a + h, b - h) - F(a - h, b + h) + F(a - h, b - h)) / (4 * h * h);
  const double density = std::exp(model.log_density(std::vector<double>{a, b}));
  EXPECT_NEAR(mixed / density, 1.0, 1e-3);
}

// Conditional expectation -------------------------------------------------------

TEST(ConditionalExpectationTest, MatchesStepwiseConditionalCdf) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const std::size_t d = 2 + seed % 4;
    const std::size_t k = 1 + seed % (d - 1);
    const auto inst = toy_instance(500 + seed, d, k);
    EXPECT_NEAR(conditional_expectation(inst.model, inst.domain, inst.weights, inst.box),
                stepwise_oracle(inst), 1e-8)
        << "seed " << seed;
  }
}

TEST(ConditionalExpectationTest, TotalMassAndZeroWeight) {
  auto inst = toy_instance(900, 4, 2);
  const QueryBox full = QueryBox::full(2);
  EXPECT_NEAR(conditional_expectation(inst.model, inst.domain, [](auto) { return 1.0; }, full), 1.0,
              1e-9);
  EXPECT_EQ(conditional_expectation(inst.model, inst.domain, [](auto) { return 0.0; }, inst.box),
            0.0);
}

TEST(ConditionalExpectationTest, RejectsBadDomains) {
  auto inst = toy_instance(901, 3, 1);
  KeyDomain empty = inst.domain;
  empty.tuples.clear();
  empty.probabilities.clear();
  EXPECT_THROW(conditional_expectation(inst.model, empty, std::vector<double>{}, inst.box),
               InvalidInput);
  KeyDomain overlap = inst.domain;
  overlap.columns.push_back(overlap.columns.front());
  for (auto& t : overlap.tuples) t.push_back(t.front());
  EXPECT_THROW(conditional_expectation(inst.model, overlap, inst.weights, QueryBox::full(1)),
               InvalidInput);
  KeyDomain heavy = inst.domain;
  for (auto& p : heavy.probabilities) p *= 2.0;
  EXPECT_THROW(conditional_expectation(inst.model, heavy, inst.weights, inst.box), InvalidInput);
}

}  // namespace cdfest
