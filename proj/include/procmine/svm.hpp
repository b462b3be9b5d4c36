#pragma once

// Soft-margin SVM trained in the dual with sequential minimal optimization (second-order
// working set selection), plus a logistic confidence mapping.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "procmine/error.hpp"
#include "procmine/features.hpp"
#include "procmine/random.hpp"

namespace procmine {

enum class KernelKind { Linear, Poly };

struct Kernel {
  KernelKind kind = KernelKind::Poly;
  int degree = 2;
  double gamma = 1.0;
  double coef0 = 1.0;

  static Kernel linear() { return {KernelKind::Linear, 1, 1.0, 0.0}; }
  static Kernel poly(int degree = 2, double gamma = 1.0, double coef0 = 1.0) {
    return {KernelKind::Poly, degree, gamma, coef0};
  }

  double from_dot(double d) const {
    if (kind == KernelKind::Linear) return d;
    double base = gamma * d + coef0;
    double r = 1.0;
    for (int i = 0; i < degree; ++i) r *= base;
    return r;
  }

  double operator()(const FeatureVector& a, const FeatureVector& b) const { return from_dot(dot(a, b)); }

  bool operator==(const Kernel&) const = default;
};

struct Calibration {
  double slope = 1.0;
  double intercept = 0.0;

  bool operator==(const Calibration&) const = default;
};

struct SupportVector {
  FeatureVector vector;
  int label = 1;  // -1 or +1
  double alpha = 0.0;

  bool operator==(const SupportVector&) const = default;
};

struct Prediction {
  bool is_procedure = false;
  double confidence = 0.5;
  double decision_value = 0.0;
};

struct SvmModel {
  Kernel kernel;
  double reg_c = 1.0;
  std::vector<SupportVector> support;
  double bias = 0.0;
  Calibration calib;
  std::uint64_t vocab_fingerprint = 0;

  double decision(const FeatureVector& x) const {
    double s = bias;
    for (const auto& sv : support) s += sv.alpha * sv.label * kernel(sv.vector, x);
    return s;
  }

  bool operator==(const SvmModel&) const = default;
};

struct TrainOptions {
  Kernel kernel;
  double reg_c = 1.0;
  std::uint64_t seed = 0;
  double tolerance = 1e-3;
  std::size_t max_passes = 10000;  // one pass = n working-set updates
};

using LabeledVector = std::pair<FeatureVector, int>;

namespace detail {

inline double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(p);
  return p;
}

// Logistic calibration with the intercept pinned to 0, so confidence >= 0.5 exactly when the
// decision value is >= 0. Fits the slope by Newton steps on Platt's smoothed targets.
inline Calibration fit_calibration(const std::vector<double>& f, const std::vector<int>& y) {
  std::size_t pos = 0;
  for (int l : y) pos += l > 0 ? 1 : 0;
  const std::size_t neg = y.size() - pos;
  const double t_pos = (pos + 1.0) / (pos + 2.0);
  const double t_neg = 1.0 / (neg + 2.0);
  auto softplus = [](double u) { return u > 0 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u)); };
  auto loss = [&](double a) {
    double l = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double t = y[i] > 0 ? t_pos : t_neg;
      const double z = a * f[i];
      l += t * softplus(-z) + (1.0 - t) * softplus(z);
    }
    return l;
  };
  double a = 1.0;
  double current = loss(a);
  for (int it = 0; it < 100; ++it) {
    double g = 0.0;
    double h = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double t = y[i] > 0 ? t_pos : t_neg;
      const double p = logistic(a * f[i]);
      g += (p - t) * f[i];
      h += p * (1.0 - p) * f[i] * f[i];
    }
    if (std::abs(g) < 1e-10 || h <= 1e-300) break;
    double step = g / h;
    double next = a - step;
    double next_loss = loss(next);
    int halvings = 0;
    while ((!(next_loss <= current) || next <= 0.0) && halvings < 60) {
      step /= 2.0;
      next = a - step;
      next_loss = loss(next);
      ++halvings;
    }
    if (halvings == 60) break;
    const bool converged = std::abs(next - a) < 1e-12 * std::max(1.0, std::abs(a));
    a = next;
    current = next_loss;
    if (converged) break;
  }
  if (!std::isfinite(a) || a <= 0.0) return {};
  return {a, 0.0};
}

}  // namespace detail

inline SvmModel train(const std::vector<LabeledVector>& data, const TrainOptions& opt) {
  if (!(opt.reg_c > 0.0)) throw Error(ErrorCode::ConfigError, "reg_c must be positive");
  const std::size_t n = data.size();
  bool has_pos = false;
  bool has_neg = false;
  for (const auto& [x, l] : data) {
    if (l != 1 && l != -1) throw Error(ErrorCode::ConfigError, "labels must be -1 or +1");
    has_pos |= l > 0;
    has_neg |= l < 0;
  }
  if (!has_pos || !has_neg) throw Error(ErrorCode::SingleClass, "training data must contain both labels");
  const auto fp = data.front().first.vocab_fingerprint;
  for (const auto& [x, l] : data) {
    if (x.vocab_fingerprint != fp) {
      throw Error(ErrorCode::DimensionMismatch, "training vectors come from different vocabularies");
    }
  }

  // Work in a seeded order; ties in working-set selection resolve by this order.
  const auto order = detail::seeded_permutation(n, opt.seed);
  std::vector<const FeatureVector*> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = &data[order[i]].first;
    y[i] = data[order[i]].second;
  }
  std::vector<double> K(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) K[i * n + j] = K[j * n + i] = opt.kernel(*x[i], *x[j]);
  }
  auto Q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * K[i * n + j]; };

  const double C = opt.reg_c;
  constexpr double kTau = 1e-12;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> G(n, -1.0);
  auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
  auto in_low = [&](std::size_t t) { return (y[t] < 0 && alpha[t] < C) || (y[t] > 0 && alpha[t] > 0); };

  const std::size_t max_iter = std::max<std::size_t>(opt.max_passes * std::max<std::size_t>(n, 1), 1);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * G[t] > gmax) {
        gmax = -y[t] * G[t];
        i = t;
      }
    }
    if (i == n) break;
    double gmin = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * G[t];
      gmin = std::min(gmin, v);
      const double b = gmax - v;
      if (b > 0) {
        double a = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
        if (a <= 0) a = kTau;
        const double score = -(b * b) / a;
        if (score < best) {
          best = score;
          j = t;
        }
      }
    }
    if (gmax - gmin < opt.tolerance || j == n) break;

    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = K[i * n + i] + K[j * n + j] + 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = K[i * n + i] + K[j * n + j] - 2.0 * Q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * dai + Q(t, j) * daj;
  }

  // Offset from free support vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  if (!std::isfinite(rho)) rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);

  SvmModel model;
  model.kernel = opt.kernel;
  model.reg_c = C;
  model.bias = -rho;
  model.vocab_fingerprint = fp;
  // Support vectors in original data order.
  std::vector<std::size_t> pos_of(n);
  for (std::size_t t = 0; t < n; ++t) pos_of[order[t]] = t;
  for (std::size_t o = 0; o < n; ++o) {
    const auto t = pos_of[o];
    if (alpha[t] > 0) model.support.push_back({*x[t], static_cast<int>(y[t]), alpha[t]});
  }

  std::vector<double> f(n);
  std::vector<int> labels(n);
  for (std::size_t o = 0; o < n; ++o) {
    f[o] = model.decision(data[o].first);
    labels[o] = data[o].second;
  }
  model.calib = detail::fit_calibration(f, labels);
  return model;
}

inline Prediction predict(const SvmModel& model, const FeatureVector& x) {
  if (model.vocab_fingerprint != 0 && x.vocab_fingerprint != 0 && x.vocab_fingerprint != model.vocab_fingerprint) {
    throw Error(ErrorCode::DimensionMismatch, "feature vector does not match the model's vocabulary");
  }
  Prediction p;
  p.decision_value = model.decision(x);
  p.is_procedure = p.decision_value >= 0.0;
  constexpr double kEps = 1e-12;
  p.confidence = std::clamp(detail::logistic(model.calib.slope * p.decision_value + model.calib.intercept), kEps,
                            1.0 - kEps);
  return p;
}

// ---------------------------------------------------------------------------------------------
// Serialization.

inline nlohmann::json kernel_to_json(const Kernel& k) {
  if (k.kind == KernelKind::Linear) return {{"type", "LINEAR"}};
  return {{"type", "POLY"}, {"degree", k.degree}, {"gamma", k.gamma}, {"coef0", k.coef0}};
}

inline Kernel kernel_from_json(const nlohmann::json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "LINEAR") return Kernel::linear();
  if (type == "POLY") return Kernel::poly(j.at("degree").get<int>(), j.at("gamma").get<double>(), j.at("coef0").get<double>());
  throw Error(ErrorCode::SchemaError, "unknown kernel type '" + type + "'");
}

inline nlohmann::json model_to_json(const SvmModel& m) {
  nlohmann::json support = nlohmann::json::array();
  for (const auto& sv : m.support) {
    support.push_back({{"vector", vector_to_json(sv.vector)}, {"label", sv.label}, {"alpha", sv.alpha}});
  }
  return {{"version", 1},
          {"kernel", kernel_to_json(m.kernel)},
          {"reg_c", m.reg_c},
          {"bias", m.bias},
          {"calib", {{"slope", m.calib.slope}, {"intercept", m.calib.intercept}}},
          {"support", support},
          {"vocab_fingerprint", std::to_string(m.vocab_fingerprint)}};
}

inline SvmModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw Error(ErrorCode::SchemaError, "unsupported model version");
    SvmModel m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.reg_c = j.at("reg_c").get<double>();
    m.bias = j.at("bias").get<double>();
    m.calib = {j.at("calib").at("slope").get<double>(), j.at("calib").at("intercept").get<double>()};
    m.vocab_fingerprint = std::stoull(j.at("vocab_fingerprint").get<std::string>());
    for (const auto& s : j.at("support")) {
      m.support.push_back(
          {vector_from_json(s.at("vector"), m.vocab_fingerprint), s.at("label").get<int>(), s.at("alpha").get<double>()});
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed model: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::SchemaError, std::string("malformed model: ") + e.what());
  }
}

}  // namespace procmine
