#include "doctest.h"

#include <cmath>
#include <set>

#include "ccsel/rng.hpp"

using namespace ccsel;

TEST_CASE("splitmix64 matches reference vectors") {
  std::uint64_t s = 0;
  CHECK(splitmix64_next(s) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64_next(s) == 0x6e789e6aa1b965f4ULL);
  CHECK(splitmix64_next(s) == 0x06c45d188009454fULL);
  s = 42;
  CHECK(splitmix64_next(s) == 0xbdd732262feb6e95ULL);
  CHECK(splitmix64_next(s) == 0x28efe333b266f103ULL);
  CHECK(splitmix64_next(s) == 0x47526757130f9f52ULL);
}

TEST_CASE("xoshiro256** matches reference vectors") {
  Rng r0(0);
  CHECK(r0.next_u64() == 0x99ec5f36cb75f2b4ULL);
  CHECK(r0.next_u64() == 0xbf6e1f784956452aULL);
  CHECK(r0.next_u64() == 0x1a5f849d4933e6e0ULL);
  CHECK(r0.next_u64() == 0x6aa594f1262d2d2cULL);
  Rng r1(12345);
  CHECK(r1.next_u64() == 0xbe6a36374160d49bULL);
  CHECK(r1.next_u64() == 0x214aaa0637a688c6ULL);
  CHECK(r1.next_u64() == 0xf69d16de9954d388ULL);
  CHECK(r1.next_u64() == 0x0c60048c4e96e033ULL);
}

TEST_CASE("uniform01 stays in [0,1) and is deterministic") {
  Rng a(7), b(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(u == b.uniform01());
  }
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("derive_seed gives distinct streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(99, i));
  CHECK(seen.size() == 1000);
}

TEST_CASE("shuffle is a permutation and seed-stable") {
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> w = v;
  Rng a(3), b(3);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::multiset<int> ms(v.begin(), v.end());
  CHECK(ms == std::multiset<int>{1, 2, 3, 4, 5, 6, 7, 8});
}
