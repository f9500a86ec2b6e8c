#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "bmilasso/chains.hpp"

using namespace bmilasso;

TEST_CASE("chain config validation enforces the documented bounds") {
  ChainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.retained_per_chain() == 2000);

  ChainConfig bad = cfg;
  bad.n_chains = 1;  // R-hat requested by default
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.compute_rhat = false;
  CHECK_NOTHROW(bad.validate());
  bad.n_chains = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.burn_in = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.kept = 2001;
  bad.thin = 2;  // not divisible
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = cfg;
  bad.kept = 198;
  bad.thin = 2;  // 99 retained < 100
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.kept = 200;
  CHECK_NOTHROW(bad.validate());
  CHECK(bad.retained_per_chain() == 100);

  bad = cfg;
  bad.rhat_threshold = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("split R-hat matches a hand-computed instance") {
  // Two chains of 20: 1..20 and 6..25. Four half-sequences of 10 with
  // means 5.5, 15.5, 10.5, 20.5 and common within variance 55/6.
  std::vector<double> a(20), b(20);
  for (int i = 0; i < 20; ++i) {
    a[static_cast<std::size_t>(i)] = i + 1.0;
    b[static_cast<std::size_t>(i)] = i + 6.0;
  }
  const RhatResult r = split_rhat({a, b});
  CHECK_FALSE(r.degenerate);
  CHECK(r.value == doctest::Approx(2.33354977351128).epsilon(1e-12));
}

TEST_CASE("split R-hat matches a second hand instance with odd length") {
  // Odd chains drop the middle draw: halves are [0, 10) and [11, 21).
  std::vector<double> c(21), d(21);
  for (int i = 0; i < 21; ++i) {
    c[static_cast<std::size_t>(i)] = std::sin(0.7 * i) * 3.0 + 0.1 * i;
    d[static_cast<std::size_t>(i)] = std::cos(0.9 * i) * 2.0 - 0.05 * i + 1.0;
  }
  const RhatResult r = split_rhat({c, d});
  CHECK_FALSE(r.degenerate);
  CHECK(r.value == doctest::Approx(1.0343591102160692).epsilon(1e-12));
}

TEST_CASE("split R-hat of well-mixed chains is near 1 and is floored at 1") {
  // Interleaved alternating values: identical half means, so B = 0 and the
  // raw statistic sqrt((m-1)/m) < 1 is floored to exactly 1.
  std::vector<double> a, b;
  for (int i = 0; i < 40; ++i) {
    a.push_back(i % 2 == 0 ? 1.0 : -1.0);
    b.push_back(i % 2 == 0 ? -1.0 : 1.0);
  }
  const RhatResult r = split_rhat({a, b});
  CHECK_FALSE(r.degenerate);
  CHECK(r.value == 1.0);
}

TEST_CASE("split R-hat degenerate conventions") {
  const std::vector<double> flat(20, 3.25);

  // All chains constant at the same value: perfect agreement.
  const RhatResult same = split_rhat({flat, flat, flat});
  CHECK(same.degenerate);
  CHECK(same.value == 1.0);

  // One stuck chain among varying chains: infinity.
  std::vector<double> moving(20);
  for (int i = 0; i < 20; ++i) moving[static_cast<std::size_t>(i)] = 0.1 * i;
  const RhatResult stuck = split_rhat({flat, moving});
  CHECK(stuck.degenerate);
  CHECK(std::isinf(stuck.value));

  // Two constant chains at different values also carry no within-chain
  // variance information: infinity.
  const std::vector<double> other(20, -1.0);
  const RhatResult split2 = split_rhat({flat, other});
  CHECK(split2.degenerate);
  CHECK(std::isinf(split2.value));
}

TEST_CASE("split R-hat input requirements") {
  const std::vector<double> ten(10, 1.0);
  CHECK_THROWS_AS(split_rhat({ten}), std::invalid_argument);
  const std::vector<double> nine(9, 1.0);
  CHECK_THROWS_AS(split_rhat({ten, nine}), std::invalid_argument);
}
