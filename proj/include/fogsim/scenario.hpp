#pragma once

// Network geometry and entities: a circular cooperative region with fog
// access points on a ring, uniformly scattered fog users, and a content
// catalog. Generation is fully determined by (template, seed).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "fogsim/errors.hpp"
#include "fogsim/rng.hpp"

namespace fogsim {

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

struct Position {
  double x = 0.0;  // meters
  double y = 0.0;
};

inline double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct FogAccessPoint {
  int id = 0;
  Position position;
  int cache_capacity = 1;         // contents
  double transmit_power_w = 1.0;
  double fronthaul_delay_s = 0.0;  // paid on a total cache miss
};

struct FogUser {
  int id = 0;
  Position position;
  double local_cpu_freq_hz = 1e9;     // cycles/s
  double local_energy_coeff = 1e-28;  // J*s^2/cycle^3
};

struct Content {
  int id = 0;
  double size_bits = 1e7;
};

enum class Fading { none, rayleigh };

struct ChannelParams {
  double path_loss_exponent = 3.5;  // in [2,6]
  double reference_gain = 1e-3;     // at 1 m
  double noise_power_w = 1e-13;
  double bandwidth_hz = 1e7;
  Fading fading = Fading::none;
};

struct ScenarioTemplate {
  double region_diameter_m = 4000.0;
  int ap_count = 2;
  int ue_count = 20;
  int content_count = 10;
  double content_size_bits = 1e7;
  int cache_capacity = 2;
  double ap_transmit_power_w = dbm_to_watts(25.0);
  double fronthaul_delay_s = 1.0;
  double ue_cpu_freq_hz = 1e9;
  double ue_energy_coeff = 1e-28;
  ChannelParams channel;
  std::vector<Position> ap_positions;  // empty = ring placement
};

struct Scenario {
  double region_diameter_m = 0.0;
  std::vector<FogAccessPoint> aps;
  std::vector<FogUser> ues;
  std::vector<Content> catalog;
  ChannelParams channel;
  std::uint64_t rng_seed = 0;

  double region_radius_m() const { return region_diameter_m / 2.0; }
};

inline void validate_template(const ScenarioTemplate& t) {
  if (t.region_diameter_m <= 0) throw ConfigError("region_diameter_m must be > 0");
  if (t.ap_count < 0) throw ConfigError("ap_count must be >= 0");
  if (t.ue_count < 0) throw ConfigError("ue_count must be >= 0");
  if (t.content_count < 1) throw ConfigError("content_count: catalog must be non-empty");
  if (t.content_size_bits <= 0) throw ConfigError("content_size_bits must be > 0");
  if (t.cache_capacity < 1) throw ConfigError("cache_capacity must be >= 1");
  if (t.ap_transmit_power_w <= 0) throw ConfigError("ap_transmit_power_w must be > 0");
  if (t.fronthaul_delay_s < 0) throw ConfigError("fronthaul_delay_s must be >= 0");
  if (t.ue_cpu_freq_hz <= 0) throw ConfigError("ue_cpu_freq_hz must be > 0");
  if (t.ue_energy_coeff <= 0) throw ConfigError("ue_energy_coeff must be > 0");
  if (t.channel.path_loss_exponent < 2 || t.channel.path_loss_exponent > 6)
    throw ConfigError("channel.path_loss_exponent must lie in [2,6]");
  if (t.channel.noise_power_w <= 0) throw ConfigError("channel.noise_power_w must be > 0");
  if (t.channel.bandwidth_hz <= 0) throw ConfigError("channel.bandwidth_hz must be > 0");
  if (!t.ap_positions.empty() && static_cast<int>(t.ap_positions.size()) != t.ap_count)
    throw ConfigError("ap_positions: size must match ap_count");
}

// UEs are drawn uniformly inside the circle; APs sit on a ring of radius
// diameter/4 unless the template pins their positions.
inline Scenario generate_scenario(const ScenarioTemplate& t, std::uint64_t seed) {
  validate_template(t);

  Scenario s;
  s.region_diameter_m = t.region_diameter_m;
  s.channel = t.channel;
  s.rng_seed = seed;

  const double radius = t.region_diameter_m / 2.0;
  const double ring = t.region_diameter_m / 4.0;

  s.aps.reserve(t.ap_count);
  for (int i = 0; i < t.ap_count; ++i) {
    FogAccessPoint ap;
    ap.id = i;
    if (!t.ap_positions.empty()) {
      ap.position = t.ap_positions[i];
    } else {
      const double angle = 2.0 * M_PI * i / t.ap_count;
      ap.position = {ring * std::cos(angle), ring * std::sin(angle)};
    }
    ap.cache_capacity = t.cache_capacity;
    ap.transmit_power_w = t.ap_transmit_power_w;
    ap.fronthaul_delay_s = t.fronthaul_delay_s;
    s.aps.push_back(ap);
  }

  Rng rng(seed);
  s.ues.reserve(t.ue_count);
  for (int i = 0; i < t.ue_count; ++i) {
    FogUser ue;
    ue.id = i;
    const double r = radius * std::sqrt(rng.next_double());
    const double theta = 2.0 * M_PI * rng.next_double();
    ue.position = {r * std::cos(theta), r * std::sin(theta)};
    ue.local_cpu_freq_hz = t.ue_cpu_freq_hz;
    ue.local_energy_coeff = t.ue_energy_coeff;
    s.ues.push_back(ue);
  }

  s.catalog.reserve(t.content_count);
  for (int f = 0; f < t.content_count; ++f) s.catalog.push_back({f, t.content_size_bits});

  return s;
}

// Path-loss gain with the distance clamped at 1 m to keep the far-field
// model out of the singularity. fading_draw is 1 when fading is off,
// otherwise a unit-mean exponential power sample.
inline double channel_gain(const FogAccessPoint& ap, const FogUser& ue,
                           const ChannelParams& channel, double fading_draw = 1.0) {
  const double d = std::max(distance(ap.position, ue.position), 1.0);
  return channel.reference_gain * std::pow(d, -channel.path_loss_exponent) * fading_draw;
}

// Line-oriented dump used by golden/determinism tests. %.17g keeps doubles
// exact under round-trip.
inline std::string dump_scenario(const Scenario& s) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "scenario diameter=%.17g seed=%llu\n", s.region_diameter_m,
                static_cast<unsigned long long>(s.rng_seed));
  out += line;
  std::snprintf(line, sizeof line, "channel exp=%.17g ref=%.17g noise=%.17g bw=%.17g fading=%d\n",
                s.channel.path_loss_exponent, s.channel.reference_gain, s.channel.noise_power_w,
                s.channel.bandwidth_hz, static_cast<int>(s.channel.fading));
  out += line;
  for (const auto& ap : s.aps) {
    std::snprintf(line, sizeof line, "ap %d %.17g %.17g cap=%d pw=%.17g fh=%.17g\n", ap.id,
                  ap.position.x, ap.position.y, ap.cache_capacity, ap.transmit_power_w,
                  ap.fronthaul_delay_s);
    out += line;
  }
  for (const auto& ue : s.ues) {
    std::snprintf(line, sizeof line, "ue %d %.17g %.17g f=%.17g k=%.17g\n", ue.id, ue.position.x,
                  ue.position.y, ue.local_cpu_freq_hz, ue.local_energy_coeff);
    out += line;
  }
  for (const auto& c : s.catalog) {
    std::snprintf(line, sizeof line, "content %d size=%.17g\n", c.id, c.size_bits);
    out += line;
  }
  return out;
}

}  // namespace fogsim
