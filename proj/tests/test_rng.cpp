#include <doctest.h>

#include <cmath>

#include "geoclust/rng.hpp"

using geoclust::Rng;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
}

TEST_CASE("different derived streams decorrelate") {
  Rng a(Rng::derive(7, 0)), b(Rng::derive(7, 1));
  int equal = 0;
  for (int i = 0; i < 1000; ++i) {
    if (a.next_u64() == b.next_u64()) ++equal;
  }
  CHECK(equal == 0);
}

TEST_CASE("normal deviates have sane moments") {
  Rng rng(123);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("uniform_index stays in range") {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    CHECK(rng.uniform_index(7) < 7);
  }
}
