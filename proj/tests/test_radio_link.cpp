#include "doctest.h"

#include <random>

#include "agrotelem/radio_link.hpp"

using namespace agrotelem;
using namespace std::chrono_literals;

namespace {
const Payload kBytes{1, 2, 3};
}

TEST_CASE("perfect channel delivers everything once, immediately") {
  RadioChannel ch({0.0, 0.0, 0ms, 1});
  for (int i = 0; i < 100; ++i) ch.transmit(Endpoint::Remote, kBytes, SimTime(i));
  int got = 0;
  while (ch.poll(Endpoint::Base, 100ms)) ++got;
  CHECK(got == 100);
  CHECK_FALSE(ch.poll(Endpoint::Remote, 100ms));
  CHECK(ch.stats().delivered == 100);
  CHECK(ch.stats().lost == 0);
}

TEST_CASE("loss 1 delivers nothing") {
  RadioChannel ch({1.0, 0.5, 10ms, 1});
  for (int i = 0; i < 1000; ++i) ch.transmit(Endpoint::Remote, kBytes, 0ms);
  CHECK(ch.in_flight() == 0);
  CHECK(ch.stats().lost == 1000);
  CHECK(ch.stats().duplicated == 0);
}

TEST_CASE("loss and duplicate counts match an independent replay of the seed") {
  const ChannelConfig cfg{0.3, 0.05, 20ms, 2023};
  RadioChannel ch(cfg);
  for (int i = 0; i < 10000; ++i) ch.transmit(Endpoint::Remote, kBytes, 0ms);

  std::mt19937_64 replay(2023);
  auto u = [&] { return std::ldexp(static_cast<double>(replay() >> 11), -53); };
  std::uint64_t lost = 0, dup = 0;
  for (int i = 0; i < 10000; ++i) {
    const double a = u(), b = u();
    u();
    u();
    if (a < 0.3) {
      ++lost;
    } else if (b < 0.05) {
      ++dup;
    }
  }
  CHECK(ch.stats().lost == lost);
  CHECK(ch.stats().duplicated == dup);
  CHECK(ch.in_flight() == (10000 - lost) + dup);
  // Sanity against the configured rates.
  CHECK(lost == doctest::Approx(3000).epsilon(0.05));
}

TEST_CASE("delays stay within [0, max_delay]") {
  std::mt19937_64 rng(5);
  const ChannelConfig cfg{0.0, 1.0, 7ms, 0};
  bool saw_zero = false, saw_max = false;
  for (int i = 0; i < 10000; ++i) {
    const auto f = draw_fate(rng, cfg);
    CHECK(f.copies == 2);
    for (auto d : f.delay) {
      CHECK(d >= 0ms);
      CHECK(d <= 7ms);
      saw_zero |= d == 0ms;
      saw_max |= d == 7ms;
    }
  }
  CHECK(saw_zero);
  CHECK(saw_max);
}

TEST_CASE("poll respects due time and order") {
  RadioChannel ch({0.0, 0.0, 0ms, 1});
  ch.transmit(Endpoint::Remote, Payload{1}, 10ms);
  ch.transmit(Endpoint::Remote, Payload{2}, 10ms);
  ch.transmit(Endpoint::Remote, Payload{3}, 5ms);
  CHECK(ch.next_delivery(Endpoint::Base) == 5ms);
  CHECK_FALSE(ch.poll(Endpoint::Base, 4ms));
  CHECK(ch.poll(Endpoint::Base, 5ms) == Payload{3});
  CHECK_FALSE(ch.poll(Endpoint::Base, 9ms));
  CHECK(ch.poll(Endpoint::Base, 10ms) == Payload{1});
  CHECK(ch.poll(Endpoint::Base, 10ms) == Payload{2});
  CHECK_FALSE(ch.next_delivery());
}

TEST_CASE("directions are independent") {
  RadioChannel ch({0.0, 0.0, 0ms, 1});
  ch.transmit(Endpoint::Base, Payload{9}, 0ms);
  CHECK_FALSE(ch.poll(Endpoint::Base, 1ms));
  CHECK(ch.poll(Endpoint::Remote, 1ms) == Payload{9});
}

TEST_CASE("oversized payloads and bad configs are rejected") {
  RadioChannel ch({0.0, 0.0, 0ms, 1});
  CHECK_THROWS_AS(ch.transmit(Endpoint::Remote, Payload(33, 0), 0ms), PayloadTooLarge);
  CHECK_NOTHROW(ch.transmit(Endpoint::Remote, Payload(32, 0), 0ms));
  CHECK(ch.stats().transmissions == 1);
  CHECK_THROWS_AS(RadioChannel({1.5, 0.0, 0ms, 1}), std::invalid_argument);
  CHECK_THROWS_AS(RadioChannel({0.0, -0.1, 0ms, 1}), std::invalid_argument);
  CHECK_THROWS_AS(RadioChannel({0.0, 0.0, -1ms, 1}), std::invalid_argument);
}

TEST_CASE("same seed, same fate sequence") {
  auto run = [] {
    RadioChannel ch({0.2, 0.1, 50ms, 42});
    std::vector<std::pair<SimTime, Payload>> out;
    for (int i = 0; i < 500; ++i) ch.transmit(Endpoint::Remote, Payload{static_cast<std::uint8_t>(i)}, SimTime(i * 10));
    for (SimTime t = 0ms; t < 6000ms; t += 1ms) {
      while (auto p = ch.poll(Endpoint::Base, t)) out.emplace_back(t, *p);
    }
    return out;
  };
  CHECK(run() == run());
}
