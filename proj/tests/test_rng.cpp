#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "gridwatch/rng.hpp"

using namespace gridwatch;

TEST_SUITE("rng") {

TEST_CASE("same seed reproduces the exact sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next() == b.next());
  }
  Rng c(42), d(43);
  bool any_diff = false;
  for (int i = 0; i < 10; ++i) any_diff |= (c.next() != d.next());
  CHECK(any_diff);
}

TEST_CASE("uniform lies in [0, 1)") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("below(n) stays in range and covers all residues") {
  Rng rng(11);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 5000; ++i) {
    const auto v = rng.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK(rng.below(0) == 0);
  CHECK(rng.below(1) == 0);
}

TEST_CASE("normal has roughly standard moments") {
  Rng rng(3);
  const int n = 200000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sumsq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sumsq / n - 1.0) < 0.02);
}

TEST_CASE("shuffle is a permutation and deterministic") {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  auto w = v;
  Rng(5).shuffle(v);
  std::vector<int> v2(100);
  for (int i = 0; i < 100; ++i) v2[i] = i;
  Rng(5).shuffle(v2);
  CHECK(v == v2);
  std::sort(w.begin(), w.end());
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == w);
}

TEST_CASE("sample_without_replacement returns k sorted distinct indices") {
  Rng rng(9);
  const auto s = rng.sample_without_replacement(100, 10);
  REQUIRE(s.size() == 10);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(std::set<std::int64_t>(s.begin(), s.end()).size() == 10);
  for (const auto v : s) {
    CHECK(v >= 0);
    CHECK(v < 100);
  }
  // Determinism and edge cases.
  CHECK(Rng(9).sample_without_replacement(100, 10) == s);
  CHECK(Rng(1).sample_without_replacement(5, 0).empty());
  const auto all = Rng(1).sample_without_replacement(5, 5);
  CHECK(all == std::vector<std::int64_t>{0, 1, 2, 3, 4});
  CHECK(Rng(1).sample_without_replacement(3, 7).size() == 3);
}

TEST_CASE("fnv1a matches the published 64-bit test vectors") {
  CHECK(fnv1a("") == 14695981039346656037ull);       // offset basis
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("derive_seed separates named streams") {
  const auto a = derive_seed(1, "loads");
  const auto b = derive_seed(1, "dispatch");
  const auto c = derive_seed(2, "loads");
  CHECK(a != b);
  CHECK(a != c);
  CHECK(derive_seed(1, "loads") == a);
}

}  // TEST_SUITE
