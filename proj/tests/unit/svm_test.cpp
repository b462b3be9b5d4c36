#include <random>

#include <gtest/gtest.h>

#include "procmine/svm.hpp"
#include "support/dual_oracle.hpp"
#include "support/errors.hpp"

using namespace procmine;

namespace {

LabeledVector point(std::vector<double> x, int y) { return {make_dense_vector(x), y}; }

TrainOptions opts(Kernel k, double c) {
  TrainOptions o;
  o.kernel = k;
  o.reg_c = c;
  o.tolerance = 1e-9;
  return o;
}

Eigen::MatrixXd gram(const std::vector<LabeledVector>& data, const Kernel& k) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = k(data[i].first, data[j].first);
  }
  return K;
}

// Alpha per training point (zero for non-support points), recovered by matching vectors.
std::vector<double> alphas_of(const SvmModel& m, const std::vector<LabeledVector>& data) {
  std::vector<double> a(data.size(), 0.0);
  for (const auto& sv : m.support) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data[i].first == sv.vector && data[i].second == sv.label) a[i] = sv.alpha;
    }
  }
  return a;
}

std::vector<LabeledVector> random_set(std::mt19937& rng, std::size_t n, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<LabeledVector> data;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(dim);
    for (auto& v : x) v = g(rng);
    data.push_back(point(x, i % 2 == 0 ? 1 : -1));
  }
  return data;
}

}  // namespace

// Two mirrored points: the dual reduces to max 2a - 2a^2, so a = 1/2, w = (1, 0), b = 0.
TEST(Svm, TwoPointProblemByHand) {
  const std::vector<LabeledVector> data = {point({1, 0}, 1), point({-1, 0}, -1)};
  const auto m = train(data, opts(Kernel::linear(), 10.0));
  ASSERT_EQ(m.support.size(), 2u);
  for (const auto& sv : m.support) EXPECT_NEAR(sv.alpha, 0.5, 1e-9);
  EXPECT_NEAR(m.bias, 0.0, 1e-9);
  EXPECT_NEAR(m.decision(make_dense_vector({0.3, 7.0})), 0.3, 1e-9);
}

// Same two points with C below the unconstrained optimum: both alphas sit at the bound.
TEST(Svm, BoxConstraintBinds) {
  const std::vector<LabeledVector> data = {point({1, 0}, 1), point({-1, 0}, -1)};
  const auto m = train(data, opts(Kernel::linear(), 0.2));
  for (const auto& sv : m.support) EXPECT_NEAR(sv.alpha, 0.2, 1e-12);
}

TEST(Svm, MatchesBruteForceDual) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 12; ++trial) {
    const bool linear = trial % 2 == 0;
    const auto k = linear ? Kernel::linear() : Kernel::poly(2);
    const auto data = random_set(rng, 6, linear ? 6 : 3);
    const double c = trial % 3 == 0 ? 0.5 : 5.0;
    const auto m = train(data, opts(k, c));
    const auto K = gram(data, k);
    std::vector<double> y;
    for (const auto& [x, l] : data) y.push_back(l);
    const auto sol = oracle::solve_dual(K, y, c);
    const auto got = alphas_of(m, data);
    EXPECT_NEAR(oracle::dual_objective(K, y, got), sol.objective, 1e-6) << "trial " << trial;
    double sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      EXPECT_NEAR(got[i], sol.alpha[i], 1e-4) << "trial " << trial << " i " << i;
      EXPECT_GE(got[i], 0.0);
      EXPECT_LE(got[i], c);
      sum += got[i] * y[i];
    }
    EXPECT_NEAR(sum, 0.0, 1e-9);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (auto s = oracle::decision_sign(sol, K, y, i)) {
        EXPECT_EQ(m.decision(data[i].first) >= 0 ? 1 : -1, *s) << "trial " << trial << " i " << i;
      }
    }
  }
}

TEST(Svm, SameSeedSameModel) {
  std::mt19937 rng(3);
  const auto data = random_set(rng, 20, 4);
  auto o = opts(Kernel::poly(2), 1.0);
  o.seed = 42;
  const auto a = train(data, o);
  const auto b = train(data, o);
  EXPECT_EQ(model_to_json(a), model_to_json(b));
}

TEST(Svm, RejectsBadInput) {
  const std::vector<LabeledVector> one_class = {point({1}, 1), point({2}, 1)};
  EXPECT_ERROR_CODE(train(one_class, TrainOptions{}), ErrorCode::SingleClass);
  const std::vector<LabeledVector> bad_label = {point({1}, 1), point({2}, 0)};
  EXPECT_ERROR_CODE(train(bad_label, TrainOptions{}), ErrorCode::ConfigError);
  const std::vector<LabeledVector> ok = {point({1}, 1), point({-1}, -1)};
  EXPECT_ERROR_CODE(train(ok, opts(Kernel::linear(), 0.0)), ErrorCode::ConfigError);
  auto mixed = ok;
  mixed[0].first.vocab_fingerprint = 1;
  mixed[1].first.vocab_fingerprint = 2;
  EXPECT_ERROR_CODE(train(mixed, TrainOptions{}), ErrorCode::DimensionMismatch);
}

TEST(Svm, PredictChecksFingerprint) {
  std::vector<LabeledVector> data = {point({1}, 1), point({-1}, -1)};
  for (auto& [x, l] : data) x.vocab_fingerprint = 5;
  const auto m = train(data, TrainOptions{});
  auto x = make_dense_vector({0.5});
  x.vocab_fingerprint = 6;
  EXPECT_ERROR_CODE(predict(m, x), ErrorCode::DimensionMismatch);
  x.vocab_fingerprint = 5;
  EXPECT_TRUE(predict(m, x).is_procedure);
}

// Confidence is a logistic of the decision value with no offset, so the class boundary sits
// at 0.5 and confidence rises with the margin.
TEST(Svm, CalibratedConfidence) {
  std::mt19937 rng(5);
  const auto data = random_set(rng, 30, 3);
  const auto m = train(data, opts(Kernel::poly(2), 1.0));
  EXPECT_GT(m.calib.slope, 0.0);
  EXPECT_DOUBLE_EQ(m.calib.intercept, 0.0);
  double last = -1.0;
  for (double v : {-2.0, -0.5, 0.0, 0.5, 2.0}) {
    const double c = detail::logistic(m.calib.slope * v);
    EXPECT_GT(c, last);
    last = c;
  }
  for (const auto& [x, l] : data) {
    const auto p = predict(m, x);
    EXPECT_EQ(p.is_procedure, p.confidence >= 0.5);
    EXPECT_GT(p.confidence, 0.0);
    EXPECT_LT(p.confidence, 1.0);
  }
}

TEST(Svm, JsonRoundTrip) {
  std::mt19937 rng(9);
  const auto data = random_set(rng, 12, 3);
  const auto m = train(data, opts(Kernel::poly(3, 0.5, 2.0), 2.0));
  const auto back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
  ASSERT_EQ(back.support.size(), m.support.size());
  for (const auto& [x, l] : data) EXPECT_DOUBLE_EQ(back.decision(x), m.decision(x));
  EXPECT_EQ(back.kernel.degree, 3);
  EXPECT_ERROR_CODE(model_from_json(nlohmann::json{{"version", 1}}), ErrorCode::SchemaError);
  auto j = model_to_json(m);
  j["kernel"]["type"] = "RBF";
  EXPECT_ERROR_CODE(model_from_json(j), ErrorCode::SchemaError);
}
