#include <doctest.h>

#include <random>

#include "logdiam/modarith.hpp"

using namespace logdiam;

namespace {

Polynomial univariate(std::initializer_list<std::pair<i64, std::uint32_t>> terms) {
  Polynomial p;
  for (auto [c, e] : terms) p.terms.push_back({c, {e}});
  return p;
}

}  // namespace

TEST_CASE("factorize") {
  CHECK(factorize(12).factors() == std::vector<PrimePower>{{2, 2, 4}, {3, 1, 3}});
  CHECK(factorize(243).factors() == std::vector<PrimePower>{{3, 5, 243}});
  CHECK(factorize(7776).factors() == std::vector<PrimePower>{{2, 5, 32}, {3, 5, 243}});
  CHECK_THROWS_AS(factorize(1), PreconditionError);
  CHECK(factorize_any(1).factors().empty());

  // Large semiprime exercises the rho path.
  const u64 a = 1000003, b = 998244353;
  const auto f = factorize(a * b);
  REQUIRE(f.factors().size() == 2);
  CHECK(f.factors()[0].p == a);
  CHECK(f.factors()[1].p == b);

  for (u64 n = 2; n < 3000; ++n) {
    u64 prod = 1;
    u64 last = 0;
    const auto fm = factorize(n);
    for (const auto& pp : fm.factors()) {
      CHECK(is_prime(pp.p));
      CHECK(pp.p > last);
      last = pp.p;
      prod *= pp.value;
    }
    CHECK(prod == n);
  }
}

TEST_CASE("derived levels") {
  const auto fm = factorize(7776).with_level(2);
  CHECK(fm.q0() == 6);
  CHECK(fm.q1() == 36);
  CHECK(fm.q2() == 1296);
  CHECK_THROWS_AS(factorize(7776).level(), PreconditionError);
  CHECK_THROWS_AS(factorize(7776).with_level(1), PreconditionError);
}

TEST_CASE("valuation") {
  CHECK(valuation(Residue(24, 243), 3) == Valuation{1, false});
  CHECK(valuation(Residue(0, 243), 3) == Valuation{5, true});
  CHECK(valuation(Residue(18, 243), 3) == Valuation{2, false});
  CHECK_THROWS_AS(valuation(Residue(1, 12), 3), PreconditionError);

  // ord(xy) = min(r, ord x + ord y) on nonzero inputs
  for (i64 x = 1; x < 243; ++x) {
    for (i64 y = 1; y < 243; y += 7) {
      const auto vx = valuation(Residue(x, 243), 3).value;
      const auto vy = valuation(Residue(y, 243), 3).value;
      CHECK(valuation(Residue(x, 243) * Residue(y, 243), 3).value == std::min(5, vx + vy));
    }
  }
}

TEST_CASE("residue arithmetic refuses mixed moduli") {
  CHECK_THROWS_AS(Residue(1, 5) + Residue(1, 7), ModulusMismatch);
  CHECK((Residue(3, 7) * Residue(5, 7)).value() == 1);
  CHECK(Residue(-1, 7).value() == 6);
  CHECK(Residue(3, 7).inverse().value() == 5);
  CHECK_THROWS_AS(Residue(3, 9).inverse(), NotAUnit);
  CHECK(Residue(100, 243).reduce(9).value() == 1);
  CHECK_THROWS_AS(Residue(100, 243).reduce(7), PreconditionError);
}

TEST_CASE("crt") {
  const Residue a[] = {Residue(1, 4), Residue(2, 9)};
  CHECK(crt_combine(a) == Residue(29, 36));
  const Residue z[] = {Residue(0, 8), Residue(0, 27)};
  CHECK(crt_combine(z) == Residue(0, 216));

  u64 expected = 0;
  for (u64 v = 0; v < 7776; ++v) {
    if (v % 32 == 3 && v % 243 == 5) expected = v;
  }
  const Residue c[] = {Residue(3, 32), Residue(5, 243)};
  CHECK(crt_combine(c).value() == expected);

  const Residue bad[] = {Residue(1, 4), Residue(1, 6)};
  CHECK_THROWS_AS(crt_combine(bad), PreconditionError);
}

TEST_CASE("crt round trip") {
  for (u64 q = 2; q <= 3000; ++q) {
    const auto fm = factorize(q);
    for (u64 x = 0; x < q; x += 1 + q / 50) {
      std::vector<Residue> parts;
      for (const auto& f : fm.factors()) parts.push_back(Residue::from_unsigned(x % f.value, f.value));
      CHECK(crt_combine(parts).value() == x);
    }
  }
}

TEST_CASE("hensel examples") {
  {
    PolySystem sys{1, {univariate({{1, 2}, {-7, 0}})}, 3};
    const Residue x0[] = {Residue(1, 3)};
    const auto x = hensel_lift_system(sys, x0, 2);
    CHECK(x[0] == Residue(4, 9));
  }
  {
    PolySystem sys{1, {univariate({{1, 1}, {-5, 0}})}, 3};
    const Residue x0[] = {Residue(5, 3)};
    CHECK(hensel_lift_system(sys, x0, 5)[0] == Residue(5, 243));
  }
  {
    PolySystem sys{2, {}, 3};
    sys.equations.push_back({{{1, {1, 0}}, {1, {0, 1}}, {-2, {0, 0}}}});
    sys.equations.push_back({{{1, {1, 1}}, {-1, {0, 0}}}});
    const Residue x0[] = {Residue(1, 3), Residue(1, 3)};
    CHECK_THROWS_AS(hensel_lift_system(sys, x0, 4), JacobianSingular);
    try {
      hensel_lift_system(sys, x0, 4);
    } catch (const JacobianSingular& e) {
      CHECK(e.jacobian_mod_p() == std::vector<u64>{1, 1, 1, 1});
      CHECK(e.failing_column() == 1);
    }
  }
  {
    PolySystem sys{1, {univariate({{1, 2}, {-7, 0}})}, 3};
    const Residue x0[] = {Residue(0, 3)};
    CHECK_THROWS_AS(hensel_lift_system(sys, x0, 3), PreconditionError);
  }
}

TEST_CASE("hensel lifting in stages agrees with a direct lift") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const u64 p = trial % 2 ? 5 : 3;
    // x^2 + a x + b with a simple root mod p
    const i64 r = static_cast<i64>(rng() % p);
    const i64 a = static_cast<i64>(rng() % 50);
    if ((2 * r + a) % static_cast<i64>(p) == 0) continue;
    const i64 b = -(r * r + a * r) + static_cast<i64>(p) * static_cast<i64>(rng() % 20);
    PolySystem sys{1, {univariate({{1, 2}, {a, 1}, {b, 0}})}, p};
    const Residue x0[] = {Residue(r, p)};
    const auto direct = hensel_lift_system(sys, x0, 9);
    const auto mid = hensel_lift_system(sys, x0, 4);
    const auto staged = hensel_lift_system(sys, mid, 9);
    CHECK(direct == staged);
    CHECK(sys.evaluate(std::vector<u64>{direct[0].value()}, ipow(p, 9))[0] == 0);
    CHECK(direct[0].value() % p == static_cast<u64>(r));
  }
}

TEST_CASE("min level") {
  const u64 two[] = {2};
  const u64 three[] = {3};
  CHECK(min_level_L0(2, two).per_prime.at(2) == 2);
  CHECK(min_level_L0(3, two).per_prime.at(2) == 3);
  CHECK(min_level_L0(3, three).per_prime.at(3) == 2);
  const int betas[] = {4};
  CHECK(min_level_L0(2, three, betas).L == 5);
  CHECK_THROWS_AS(min_level_L0(1, three), PreconditionError);
}
