#pragma once

// Two-user downlink NOMA with successive interference cancellation, plus the
// delivery-delay and MOS models used as the caching reward. The strong user
// decodes and subtracts the weak user's superposed signal before decoding its
// own; the weak user treats the strong signal as noise.

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "fogsim/errors.hpp"
#include "fogsim/scenario.hpp"

namespace fogsim {

constexpr double kDefaultPowerSplitWeak = 0.8;  // fraction of AP power to the weak user

struct NomaCluster {
  int strong_user = -1;  // caller-side index
  int weak_user = -1;    // -1 = single-user cluster
  double strong_gain = 0.0;
  double weak_gain = 0.0;
  double power_split_weak = kDefaultPowerSplitWeak;
};

struct RateReport {
  double strong_rate_bps = 0.0;
  double weak_rate_bps = 0.0;
  bool sic_feasible = true;
};

// Pairs users strongest-with-weakest: sort by gain descending, pair the two
// ends inward, leave the middle user alone when the count is odd.
inline std::vector<NomaCluster> cluster_users(std::vector<std::pair<int, double>> users_with_gains,
                                              double power_split_weak = kDefaultPowerSplitWeak) {
  std::sort(users_with_gains.begin(), users_with_gains.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });

  std::vector<NomaCluster> clusters;
  clusters.reserve((users_with_gains.size() + 1) / 2);
  int lo = 0;
  int hi = static_cast<int>(users_with_gains.size()) - 1;
  while (lo < hi) {
    NomaCluster c;
    c.strong_user = users_with_gains[lo].first;
    c.strong_gain = users_with_gains[lo].second;
    c.weak_user = users_with_gains[hi].first;
    c.weak_gain = users_with_gains[hi].second;
    c.power_split_weak = power_split_weak;
    clusters.push_back(c);
    ++lo;
    --hi;
  }
  if (lo == hi) {
    NomaCluster c;
    c.strong_user = users_with_gains[lo].first;
    c.strong_gain = users_with_gains[lo].second;
    c.power_split_weak = power_split_weak;
    clusters.push_back(c);
  }
  return clusters;
}

inline double shannon_rate(double bandwidth_hz, double sinr) {
  return bandwidth_hz * std::log2(1.0 + sinr);
}

inline RateReport noma_rates(const NomaCluster& cluster, double total_power_w,
                             const ChannelParams& channel) {
  if (total_power_w <= 0) throw ParamError("noma_rates: total_power must be > 0");
  const double bw = channel.bandwidth_hz;
  const double noise = channel.noise_power_w;

  RateReport report;
  if (cluster.weak_user < 0) {
    report.strong_rate_bps = shannon_rate(bw, total_power_w * cluster.strong_gain / noise);
    report.sic_feasible = true;
    return report;
  }

  const double beta = cluster.power_split_weak;
  if (!(beta > 0.0 && beta < 1.0))
    throw ParamError("noma_rates: power_split_weak must lie in (0,1) for a two-user cluster");
  const double p_weak = beta * total_power_w;
  const double p_strong = (1.0 - beta) * total_power_w;
  const double g_s = cluster.strong_gain;
  const double g_w = cluster.weak_gain;

  const double weak_sinr = p_weak * g_w / (p_strong * g_w + noise);
  report.weak_rate_bps = shannon_rate(bw, weak_sinr);

  // SIC step: the strong user must decode the weak message at least as well
  // as its intended receiver before subtracting it.
  const double sic_sinr = p_weak * g_s / (p_strong * g_s + noise);
  report.sic_feasible = sic_sinr >= weak_sinr;
  report.strong_rate_bps = shannon_rate(bw, p_strong * g_s / noise);
  return report;
}

// size/rate plus the fronthaul penalty on a miss; infinite-delay sentinel
// when the link rate is zero (MOS then bottoms out at 1).
inline double delivery_delay(double content_size_bits, double rate_bps, double miss_penalty_s) {
  if (content_size_bits <= 0) throw ParamError("delivery_delay: content size must be > 0");
  if (miss_penalty_s < 0) throw ParamError("delivery_delay: miss_penalty must be >= 0");
  if (rate_bps <= 0) return std::numeric_limits<double>::infinity();
  return content_size_bits / rate_bps + miss_penalty_s;
}

// Clamped log-delay interpolation: 5 at d_best and below, 1 at d_worst and
// above, linear in ln(delay) between.
inline double mos_score(double delay_s, double d_best_s = 0.01, double d_worst_s = 10.0) {
  if (!(d_best_s > 0) || !(d_worst_s > d_best_s))
    throw ParamError("mos_score: need 0 < d_best < d_worst");
  if (!(delay_s > 0)) throw ParamError("mos_score: delay must be > 0");
  if (std::isinf(delay_s)) return 1.0;
  const double t = (std::log(d_worst_s) - std::log(delay_s)) /
                   (std::log(d_worst_s) - std::log(d_best_s));
  return 1.0 + 4.0 * std::clamp(t, 0.0, 1.0);
}

}  // namespace fogsim
