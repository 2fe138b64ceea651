#pragma once

#include <string>
#include <vector>

namespace sega::stats {

struct Sample {
  std::vector<double> values;
  std::string label;
};

struct WelchResult {
  double t_statistic = 0.0;
  double dof = 0.0;
  double p_two_sided = 1.0;
};

struct Distribution {
  std::vector<double> probabilities;
};

enum class KlZeroPolicy { exact, smoothed };

struct KlResult {
  double nats = 0.0;
  bool infinite = false;
  double epsilon_used = 0.0;
  // Display convention used by the divergence tables: nats scaled by 100.
  double percent() const { return nats * 100.0; }
};

struct ContrastResult {
  double ratio = 0.0;
  WelchResult welch;
};

double mean(const std::vector<double>& values);
double sample_variance(const std::vector<double>& values);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double dof);

// Two-sample t-test with unequal variances (Welch); dof by
// Welch-Satterthwaite, two-sided p from the numeric Student-t CDF.
WelchResult welch_t(const Sample& a, const Sample& b);

// Normalizes non-negative weights into a Distribution.
Distribution make_distribution(const std::vector<double>& weights);

// Sum p_i ln(p_i / q_i) with 0 ln(0/q) := 0. Support violations (p>0, q==0)
// yield an infinite-flagged result in exact mode; smoothed mode adds epsilon
// to q and renormalizes before evaluating.
KlResult kl_divergence(const Distribution& p, const Distribution& q,
                       KlZeroPolicy policy = KlZeroPolicy::exact,
                       double epsilon = 1e-10);

// Ratio of sample means plus the Welch test on the underlying samples.
ContrastResult attention_contrast(const Sample& python_means,
                                  const Sample& rust_means);

}  // namespace sega::stats
