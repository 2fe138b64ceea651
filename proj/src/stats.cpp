#include "sega/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sega/error.hpp"

namespace sega::stats {

namespace {

// Continued fraction for the incomplete beta function, modified Lentz scheme.
double incomplete_beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double rel_tol = 1e-15;
  constexpr int max_terms = 500;

  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;

  for (int m = 1; m <= max_terms; ++m) {
    const double dm = m;
    double numer = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
    d = 1.0 + numer * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + numer / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;

    numer = -(a + dm) * (a + b + dm) * x /
            ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
    d = 1.0 + numer * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + numer / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double mult = d * c;
    h *= mult;
    if (std::fabs(mult - 1.0) <= rel_tol) return h;
  }
  return h;  // converged to working precision in practice well before this
}

}  // namespace

double mean(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_variance(const std::vector<double>& values) {
  const double m = mean(values);
  double sum = 0.0;
  for (double v : values) sum += (v - m) * (v - m);
  return sum / static_cast<double>(values.size() - 1);
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) {
    raise(ErrorKind::domain, "incomplete beta requires a, b > 0");
  }
  if (x < 0.0 || x > 1.0) {
    raise(ErrorKind::domain, "incomplete beta requires x in [0,1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;

  // front = x^a (1-x)^b / B(a,b); symmetric under (a,x) <-> (b,1-x), so the
  // mirrored branch reuses it rather than recursing.
  const double log_front = a * std::log(x) + b * std::log1p(-x) -
                           (std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b));
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * incomplete_beta_cf(a, b, x) / a;
  }
  return 1.0 - front * incomplete_beta_cf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (dof <= 0.0) raise(ErrorKind::domain, "student_t_cdf requires dof > 0");
  if (t == 0.0) return 0.5;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(dof / 2.0, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

WelchResult welch_t(const Sample& a, const Sample& b) {
  if (a.values.size() < 2 || b.values.size() < 2) {
    raise(ErrorKind::precondition,
          "welch_t requires at least two values per sample");
  }
  const double va = sample_variance(a.values);
  const double vb = sample_variance(b.values);
  if (va == 0.0 && vb == 0.0) {
    raise(ErrorKind::degenerate, "welch_t: both samples have zero variance");
  }
  const double na = static_cast<double>(a.values.size());
  const double nb = static_cast<double>(b.values.size());
  const double ra = va / na;
  const double rb = vb / nb;

  WelchResult result;
  result.t_statistic = (mean(a.values) - mean(b.values)) / std::sqrt(ra + rb);
  // Welch-Satterthwaite degrees of freedom. A zero-variance sample
  // contributes nothing to the numerator spread, so guard its term.
  const double denom = (ra > 0.0 ? ra * ra / (na - 1.0) : 0.0) +
                       (rb > 0.0 ? rb * rb / (nb - 1.0) : 0.0);
  result.dof = (ra + rb) * (ra + rb) / denom;
  result.p_two_sided =
      2.0 * (1.0 - student_t_cdf(std::fabs(result.t_statistic), result.dof));
  result.p_two_sided = std::clamp(result.p_two_sided, 0.0, 1.0);
  return result;
}

Distribution make_distribution(const std::vector<double>& weights) {
  if (weights.empty()) {
    raise(ErrorKind::precondition, "distribution requires at least one entry");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0 || !std::isfinite(w)) {
      raise(ErrorKind::domain, "distribution weights must be finite and >= 0");
    }
    sum += w;
  }
  if (sum <= 0.0) {
    raise(ErrorKind::degenerate, "distribution weights sum to zero");
  }
  Distribution dist;
  dist.probabilities.reserve(weights.size());
  for (double w : weights) dist.probabilities.push_back(w / sum);
  return dist;
}

KlResult kl_divergence(const Distribution& p, const Distribution& q,
                       KlZeroPolicy policy, double epsilon) {
  if (p.probabilities.size() != q.probabilities.size()) {
    raise(ErrorKind::domain, "kl_divergence requires equal-length distributions");
  }
  for (const Distribution* dist : {&p, &q}) {
    double sum = 0.0;
    for (double v : dist->probabilities) sum += v;
    if (std::fabs(sum - 1.0) > 1e-9) {
      raise(ErrorKind::domain, "distribution does not sum to 1");
    }
  }

  std::vector<double> q_eff = q.probabilities;
  KlResult result;
  if (policy == KlZeroPolicy::smoothed) {
    double sum = 0.0;
    for (double& v : q_eff) {
      v += epsilon;
      sum += v;
    }
    for (double& v : q_eff) v /= sum;
    result.epsilon_used = epsilon;
  }

  double total = 0.0;
  for (std::size_t i = 0; i < p.probabilities.size(); ++i) {
    const double pi = p.probabilities[i];
    if (pi == 0.0) continue;  // 0 * ln(0/q) := 0
    if (q_eff[i] == 0.0) {
      result.infinite = true;
      result.nats = std::numeric_limits<double>::infinity();
      return result;
    }
    total += pi * std::log(pi / q_eff[i]);
  }
  result.nats = total;
  return result;
}

ContrastResult attention_contrast(const Sample& python_means,
                                  const Sample& rust_means) {
  if (python_means.values.empty() || rust_means.values.empty()) {
    raise(ErrorKind::precondition, "attention_contrast requires non-empty samples");
  }
  const double mb = mean(rust_means.values);
  if (mb == 0.0) {
    raise(ErrorKind::domain, "attention_contrast: zero denominator mean");
  }
  ContrastResult result;
  result.ratio = mean(python_means.values) / mb;
  result.welch = welch_t(python_means, rust_means);
  return result;
}

}  // namespace sega::stats
