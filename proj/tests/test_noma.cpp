#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <set>
#include <utility>
#include <vector>

#include "fogsim/noma.hpp"

using namespace fogsim;

namespace {

ChannelParams unit_channel() {
  ChannelParams ch;
  ch.bandwidth_hz = 1.0;
  ch.noise_power_w = 1.0;
  return ch;
}

}  // namespace

TEST_CASE("single-user cluster gets the whole power budget") {
  NomaCluster c;
  c.strong_user = 0;
  c.strong_gain = 1.0;
  const RateReport r = noma_rates(c, 1.0, unit_channel());
  CHECK(r.strong_rate_bps == Catch::Approx(1.0));  // log2(1 + 1)
  CHECK(r.weak_rate_bps == 0.0);
  CHECK(r.sic_feasible);
}

TEST_CASE("two-user rates, worked example") {
  // P=5, beta=0.8 -> 4 W to the weak user, 1 W to the strong one.
  NomaCluster c;
  c.strong_user = 0;
  c.weak_user = 1;
  c.strong_gain = 4.0;
  c.weak_gain = 1.0;
  c.power_split_weak = 0.8;
  const RateReport r = noma_rates(c, 5.0, unit_channel());
  CHECK(r.weak_rate_bps == Catch::Approx(std::log2(3.0)).epsilon(1e-12));    // SINR 4/(1+1)=2
  CHECK(r.strong_rate_bps == Catch::Approx(std::log2(5.0)).epsilon(1e-12));  // SNR 4 after SIC
  CHECK(r.sic_feasible);  // strong decodes weak at SINR 3.2 >= 2
}

TEST_CASE("degenerate power split recovers the orthogonal limits") {
  NomaCluster c;
  c.strong_user = 0;
  c.weak_user = 1;
  c.strong_gain = 4.0;
  c.weak_gain = 1.0;
  c.power_split_weak = 1e-12;
  const RateReport r = noma_rates(c, 5.0, unit_channel());
  CHECK(r.weak_rate_bps == Catch::Approx(0.0).margin(1e-9));
  CHECK(r.strong_rate_bps == Catch::Approx(std::log2(21.0)).epsilon(1e-6));

  c.power_split_weak = 0.0;
  CHECK_THROWS_AS(noma_rates(c, 5.0, unit_channel()), ParamError);
  c.power_split_weak = 1.0;
  CHECK_THROWS_AS(noma_rates(c, 5.0, unit_channel()), ParamError);
  c.power_split_weak = 0.5;
  CHECK_THROWS_AS(noma_rates(c, 0.0, unit_channel()), ParamError);
}

TEST_CASE("both rates grow with the power budget") {
  NomaCluster c;
  c.strong_user = 0;
  c.weak_user = 1;
  c.strong_gain = 3e-9;
  c.weak_gain = 5e-10;
  ChannelParams ch;
  double prev_s = 0.0, prev_w = 0.0;
  for (double p = 0.05; p <= 2.0; p += 0.05) {
    const RateReport r = noma_rates(c, p, ch);
    CHECK(r.strong_rate_bps > prev_s);
    CHECK(r.weak_rate_bps > prev_w);
    prev_s = r.strong_rate_bps;
    prev_w = r.weak_rate_bps;
  }
}

TEST_CASE("pairing: strongest with weakest, middle user flies solo") {
  const auto two = cluster_users({{7, 4.0}, {3, 1.0}});
  REQUIRE(two.size() == 1);
  CHECK(two[0].strong_user == 7);
  CHECK(two[0].weak_user == 3);
  CHECK(two[0].strong_gain == 4.0);
  CHECK(two[0].weak_gain == 1.0);

  const auto three = cluster_users({{0, 9.0}, {1, 4.0}, {2, 1.0}});
  REQUIRE(three.size() == 2);
  CHECK(three[0].strong_user == 0);
  CHECK(three[0].weak_user == 2);
  CHECK(three[1].strong_user == 1);
  CHECK(three[1].weak_user == -1);

  // equal gains: the lower index counts as the stronger end
  const auto tie = cluster_users({{5, 1.0}, {2, 1.0}});
  REQUIRE(tie.size() == 1);
  CHECK(tie[0].strong_user == 2);
  CHECK(tie[0].weak_user == 5);
}

TEST_CASE("pairing covers every user exactly once") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng.next_below(12));
    std::vector<std::pair<int, double>> users;
    for (int i = 0; i < n; ++i) users.push_back({i, rng.next_double()});
    const auto clusters = cluster_users(users);
    CHECK(clusters.size() == static_cast<size_t>((n + 1) / 2));
    std::set<int> seen;
    for (const auto& c : clusters) {
      CHECK(seen.insert(c.strong_user).second);
      if (c.weak_user >= 0) {
        CHECK(seen.insert(c.weak_user).second);
        CHECK(c.strong_gain >= c.weak_gain);
      }
    }
    CHECK(seen.size() == static_cast<size_t>(n));
  }
}

TEST_CASE("delivery delay arithmetic and the infinite-rate sentinel") {
  CHECK(delivery_delay(2.0, 1.0, 0.0) == 2.0);
  CHECK(delivery_delay(2.0, 1.0, 0.5) == 2.5);
  CHECK(std::isinf(delivery_delay(2.0, 0.0, 0.5)));
  CHECK(mos_score(delivery_delay(2.0, 0.0, 0.5)) == 1.0);
  CHECK_THROWS_AS(delivery_delay(0.0, 1.0, 0.0), ParamError);
  CHECK_THROWS_AS(delivery_delay(1.0, 1.0, -0.1), ParamError);
}

TEST_CASE("MOS anchors and monotonicity") {
  CHECK(mos_score(0.01) == Catch::Approx(5.0));
  CHECK(mos_score(10.0) == Catch::Approx(1.0));
  // geometric mean of the anchors sits exactly mid-scale
  CHECK(mos_score(std::sqrt(0.01 * 10.0)) == Catch::Approx(3.0).epsilon(1e-12));
  CHECK(mos_score(1e-6) == 5.0);   // clamped above
  CHECK(mos_score(1e3) == 1.0);    // clamped below
  double prev = 6.0;
  for (double d = 0.001; d < 100.0; d *= 1.7) {
    const double m = mos_score(d);
    CHECK(m <= prev);
    CHECK(m >= 1.0);
    CHECK(m <= 5.0);
    prev = m;
  }
  CHECK_THROWS_AS(mos_score(0.0), ParamError);
  CHECK_THROWS_AS(mos_score(1.0, 0.0, 10.0), ParamError);
  CHECK_THROWS_AS(mos_score(1.0, 2.0, 1.0), ParamError);
}
