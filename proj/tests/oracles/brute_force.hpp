#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

// Brute-force references for the reward filter, SEM and the policy-gradient
// estimator. Deliberately naive.
namespace oracle {

struct ScoredSample {
  std::string context;
  int index = 0;
  double before = 0.0;
  double after = 0.0;
};

inline std::vector<int> threshold_rewards(const std::vector<ScoredSample>& samples) {
  std::vector<int> out;
  for (const auto& s : samples) out.push_back(s.after > s.before ? 1 : 0);
  return out;
}

// For each context scan every sample; keep the strictly best positive gain,
// preferring the smaller index when gains are equal.
inline std::vector<int> argmax_rewards(const std::vector<ScoredSample>& samples) {
  std::vector<int> out(samples.size(), 0);
  std::map<std::string, int> best;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double gain = samples[i].after - samples[i].before;
    if (!(gain > 0.0)) continue;
    auto it = best.find(samples[i].context);
    if (it == best.end()) {
      best[samples[i].context] = static_cast<int>(i);
      continue;
    }
    const auto& cur = samples[static_cast<std::size_t>(it->second)];
    const double cur_gain = cur.after - cur.before;
    if (gain > cur_gain || (gain == cur_gain && samples[i].index < cur.index)) it->second = static_cast<int>(i);
  }
  for (const auto& [ctx, i] : best) out[static_cast<std::size_t>(i)] = 1;
  return out;
}

// Two passes: mean, then the unbiased variance.
inline double two_pass_sem(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  if (xs.size() < 2) return 0.0;
  long double mean = 0.0L;
  for (double x : xs) mean += x;
  mean /= n;
  long double ss = 0.0L;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return static_cast<double>(std::sqrt(ss / (n - 1.0) / n));
}

inline std::vector<double> softmax(const std::vector<double>& z) {
  double m = z[0];
  for (double x : z) m = std::max(m, x);
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - m));
  for (auto& x : p) x /= s;
  return p;
}

// Restricted REINFORCE estimate of -grad J for a categorical policy:
// -(1/n) sum_i r_i * grad log pi(y_i), with grad log pi(y) = e_y - pi.
inline std::vector<double> restricted_estimator(const std::vector<double>& z, const std::vector<int>& samples,
                                                const std::vector<int>& rewards) {
  const auto p = softmax(z);
  std::vector<double> g(z.size(), 0.0);
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (rewards[i] == 0) continue;
    for (std::size_t k = 0; k < z.size(); ++k) {
      const double dlog = (static_cast<int>(k) == samples[i] ? 1.0 : 0.0) - p[k];
      g[k] -= rewards[i] * dlog / n;
    }
  }
  return g;
}

inline std::vector<double> central_difference(const std::function<double(const std::vector<double>&)>& f,
                                              std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += std::max(a[i] * a[i], b[i] * b[i]);
  }
  return den == 0.0 ? std::sqrt(num) : std::sqrt(num / den);
}

}  // namespace oracle
