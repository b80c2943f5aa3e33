#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "emghd/hdvec.hpp"

using namespace emghd;

namespace {

HdVector from_ints(std::initializer_list<int> vals) {
  std::vector<std::int8_t> e;
  for (int v : vals) e.push_back(static_cast<std::int8_t>(v));
  return HdVector(std::move(e));
}

// Independent oracle: Hamming distance by direct comparison.
std::size_t hamming(const HdVector& a, const HdVector& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    if (a[i] != b[i]) ++d;
  }
  return d;
}

}  // namespace

TEST_CASE("random_hd balances signs exactly") {
  for (std::uint64_t seed : {1ULL, 7ULL, 99ULL}) {
    for (std::size_t dim : {4UL, 10UL, 10000UL}) {
      Rng rng(seed);
      const HdVector v = random_hd(rng, dim);
      REQUIRE(v.dim() == dim);
      std::size_t plus = 0;
      for (std::size_t i = 0; i < dim; ++i) {
        if (v[i] == 1) ++plus;
      }
      CHECK(plus == dim / 2);
    }
  }
}

TEST_CASE("random_hd rejects odd dimension") {
  Rng rng(1);
  CHECK_THROWS_AS(random_hd(rng, 5), std::invalid_argument);
  CHECK_THROWS_AS(random_hd(rng, 0), std::invalid_argument);
}

TEST_CASE("random_hd is reproducible from the seed") {
  Rng a(123);
  Rng b(123);
  const HdVector va = random_hd(a, 10000);
  const HdVector vb = random_hd(b, 10000);
  CHECK(va == vb);
  CHECK(cosine(va, vb) == 1.0);
}

TEST_CASE("independent vectors are quasi-orthogonal at D=10000") {
  Rng a(1);
  Rng b(2);
  CHECK(std::abs(cosine(random_hd(a, 10000), random_hd(b, 10000))) <= 0.05);
}

TEST_CASE("quasi-orthogonality statistics over 1000 pairs") {
  Rng rng(2024);
  double sum_abs = 0.0;
  double max_abs = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const HdVector a = random_hd(rng, 10000);
    const HdVector b = random_hd(rng, 10000);
    const double c = std::abs(cosine(a, b));
    sum_abs += c;
    max_abs = std::max(max_abs, c);
  }
  CHECK(sum_abs / 1000.0 < 0.02);
  CHECK(max_abs < 0.06);
}

TEST_CASE("bind basics") {
  Rng rng(5);
  const HdVector a = random_hd(rng, 10000);
  const HdVector b = random_hd(rng, 10000);

  SUBCASE("bind(a,a) is all ones") {
    const HdVector one = bind(a, a);
    CHECK(one == HdVector::filled(10000, 1));
  }
  SUBCASE("all-ones is the identity element") { CHECK(bind(a, HdVector::filled(10000, 1)) == a); }
  SUBCASE("result is dissimilar to both inputs") {
    CHECK(std::abs(cosine(bind(a, b), a)) <= 0.05);
    CHECK(std::abs(cosine(bind(a, b), b)) <= 0.05);
  }
  SUBCASE("commutative, associative, self-inverse") {
    const HdVector c = random_hd(rng, 10000);
    CHECK(bind(a, b) == bind(b, a));
    CHECK(bind(bind(a, b), c) == bind(a, bind(b, c)));
    CHECK(bind(bind(a, b), b) == a);
  }
  SUBCASE("dimension mismatch throws") {
    Rng r2(1);
    CHECK_THROWS_AS(bind(a, random_hd(r2, 100)), std::invalid_argument);
  }
}

TEST_CASE("accumulate") {
  Rng rng(9);
  const HdVector a = random_hd(rng, 100);
  const HdVector b = random_hd(rng, 100);

  SUBCASE("single unit-weight accumulation copies the vector") {
    Accumulator acc(100);
    accumulate(acc, a, 1.0);
    for (std::size_t i = 0; i < 100; ++i) CHECK(acc.sums()[i] == double(a[i]));
    CHECK(acc.count() == 1);
  }
  SUBCASE("weights 1 and -1 cancel") {
    Accumulator acc(100);
    accumulate(acc, a, 1.0);
    accumulate(acc, a, -1.0);
    for (std::size_t i = 0; i < 100; ++i) CHECK(acc.sums()[i] == 0.0);
    CHECK(acc.count() == 2);
  }
  SUBCASE("linear combination") {
    Accumulator acc(100);
    accumulate(acc, a, 0.5);
    accumulate(acc, b, 0.25);
    for (std::size_t i = 0; i < 100; ++i) {
      CHECK(acc.sums()[i] == doctest::Approx(0.5 * a[i] + 0.25 * b[i]).epsilon(1e-15));
    }
  }
  SUBCASE("non-finite weight throws") {
    Accumulator acc(100);
    CHECK_THROWS_AS(accumulate(acc, a, std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(accumulate(acc, a, INFINITY), std::invalid_argument);
  }
  SUBCASE("dimension mismatch throws") {
    Accumulator acc(50);
    CHECK_THROWS_AS(accumulate(acc, a, 1.0), std::invalid_argument);
  }
  SUBCASE("unit-weight sums stay within [-k, k]") {
    Rng r(77);
    Accumulator acc(200);
    for (int k = 1; k <= 25; ++k) {
      accumulate(acc, random_hd(r, 200), 1.0);
      for (double s : acc.sums()) {
        CHECK(std::abs(s) <= double(k));
      }
    }
  }
}

TEST_CASE("threshold") {
  SUBCASE("sign with zero -> +1") {
    const Accumulator acc = Accumulator::from_raw({2.5, -0.1, 0.0}, 1);
    CHECK(threshold(acc) == from_ints({1, -1, 1}));
  }
  SUBCASE("threshold of a single unit-weight vector is the identity") {
    Rng rng(4);
    const HdVector a = random_hd(rng, 1000);
    Accumulator acc(1000);
    accumulate(acc, a, 1.0);
    CHECK(threshold(acc) == a);
  }
  SUBCASE("majority bundling {a,a,b}: brute force at small D") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
      const HdVector a = random_hd(rng, 16);
      const HdVector b = random_hd(rng, 16);
      Accumulator acc(16);
      accumulate(acc, a, 1.0);
      accumulate(acc, a, 1.0);
      accumulate(acc, b, 1.0);
      const HdVector t = threshold(acc);
      // oracle: per element, 2a+b has the sign of a (|2a| > |b|)
      CHECK(t == a);
    }
  }
  SUBCASE("majority bundling cosine ordering at D=10000") {
    Rng rng(12);
    const HdVector a = random_hd(rng, 10000);
    const HdVector b = random_hd(rng, 10000);
    Accumulator acc(10000);
    accumulate(acc, a, 1.0);
    accumulate(acc, a, 1.0);
    accumulate(acc, b, 1.0);
    const HdVector t = threshold(acc);
    CHECK(cosine(t, a) >= cosine(t, b));
  }
}

TEST_CASE("permute") {
  SUBCASE("rotation by one, fixed direction") {
    CHECK(permute(from_ints({1, -1, -1, 1}), 1) == from_ints({1, 1, -1, -1}));
  }
  SUBCASE("identity and full cycle") {
    Rng rng(3);
    const HdVector v = random_hd(rng, 10000);
    CHECK(permute(v, 0) == v);
    CHECK(permute(v, 10000) == v);
  }
  SUBCASE("composition law") {
    Rng rng(6);
    const HdVector v = random_hd(rng, 1000);
    for (std::size_t j : {0UL, 1UL, 17UL, 999UL}) {
      for (std::size_t k : {0UL, 5UL, 998UL}) {
        CHECK(permute(permute(v, j), k) == permute(v, j + k));
      }
    }
  }
  SUBCASE("isometry: cosine preserved exactly") {
    Rng rng(8);
    const HdVector a = random_hd(rng, 10000);
    const HdVector b = random_hd(rng, 10000);
    for (std::size_t k : {1UL, 137UL, 9999UL}) {
      CHECK(cosine(permute(a, k), permute(b, k)) == cosine(a, b));
    }
  }
}

TEST_CASE("cosine") {
  Rng rng(10);
  const HdVector a = random_hd(rng, 10000);

  SUBCASE("self and negation") {
    CHECK(cosine(a, a) == 1.0);
    CHECK(cosine(a, negate(a)) == -1.0);
  }
  SUBCASE("hand example at D=4") {
    CHECK(cosine(from_ints({1, 1, -1, -1}), from_ints({1, -1, -1, 1})) == 0.0);
  }
  SUBCASE("bipolar cosine equals (D - 2*hamming)/D exactly") {
    Rng r(13);
    for (std::size_t dim : {4UL, 10UL, 1000UL, 10000UL}) {
      const HdVector x = random_hd(r, dim);
      const HdVector y = random_hd(r, dim);
      const double expected =
          (double(dim) - 2.0 * double(hamming(x, y))) / double(dim);
      CHECK(cosine(x, y) == expected);
    }
  }
  SUBCASE("accumulator overload") {
    Accumulator acc(10000);
    accumulate(acc, a, 2.0);
    CHECK(cosine(acc, a) == doctest::Approx(1.0).epsilon(1e-12));
    Accumulator zero(10000);
    CHECK_THROWS_AS(cosine(zero, a), std::domain_error);
  }
}

TEST_CASE("HdVector validates bipolarity") {
  CHECK_THROWS_AS(HdVector({1, 0, -1}), std::invalid_argument);
  CHECK_THROWS_AS(HdVector({1, 2, -1}), std::invalid_argument);
  CHECK_NOTHROW(HdVector({1, -1}));
}

TEST_CASE("ItemMemory") {
  SUBCASE("reproducible from the seed") {
    const ItemMemory a(42, 64, 10000);
    const ItemMemory b(42, 64, 10000);
    REQUIRE(a.channels() == 64);
    for (std::size_t c = 0; c < 64; ++c) CHECK(a.entry(c) == b.entry(c));
  }
  SUBCASE("entries are pairwise quasi-orthogonal") {
    const ItemMemory im(42, 64, 10000);
    const double bound = 5.0 / std::sqrt(10000.0);
    for (std::size_t i = 0; i < 64; ++i) {
      for (std::size_t j = i + 1; j < 64; ++j) {
        CHECK(std::abs(cosine(im.entry(i), im.entry(j))) <= bound);
      }
    }
  }
}
