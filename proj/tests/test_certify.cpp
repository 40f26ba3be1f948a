#include <doctest.h>

#include <random>
#include <set>

#include "logdiam/certify.hpp"

using namespace logdiam;

namespace {

MatModQ m2(u64 q, i64 a, i64 b, i64 c, i64 d) { return MatModQ::from_signed(2, q, std::vector<i64>{a, b, c, d}); }

// (h1, u1)(h2, u2) = (h1 h2, h1 u2 + u1), written out for d = 2
struct Aff2 {
  i64 a, b, c, d, x, y;
};

Aff2 compose(const Aff2& g, const Aff2& h, i64 q) {
  auto r = [q](i64 v) { return ((v % q) + q) % q; };
  return {r(g.a * h.a + g.b * h.c), r(g.a * h.b + g.b * h.d), r(g.c * h.a + g.d * h.c), r(g.c * h.b + g.d * h.d),
          r(g.a * h.x + g.b * h.y + g.x), r(g.c * h.x + g.d * h.y + g.y)};
}

Aff2 inverse(const Aff2& g, i64 q) {
  auto r = [q](i64 v) { return ((v % q) + q) % q; };
  const Aff2 lin{g.d, r(-g.b), r(-g.c), g.a, 0, 0};
  const Aff2 t = compose(lin, {1, 0, 0, 1, g.x, g.y}, q);
  return {lin.a, lin.b, lin.c, lin.d, r(-t.x), r(-t.y)};
}

GenSet product_demo() {
  return genset_from_json(nlohmann::json::parse(
      R"({"kind":"product","dims":[2,2],"generators":[[[[1,1],[0,1]],[[1,0],[1,1]]],[[[1,0],[1,1]],[[1,2],[0,1]]]],"close_symmetric":true})"));
}

SearchOptions kit_search() {
  SearchOptions o;
  o.max_vertices = std::size_t{1} << 20;
  o.max_radius = 40;
  return o;
}

}  // namespace

TEST_CASE("key identity") {
  const auto r = key_identity(m2(9, 1, 1, 0, 1), {0, 0}, {0, 3});
  CHECK(r.linear == MatModQ::identity(2, 9));
  CHECK(r.trans == std::vector<u64>{6, 3});

  std::mt19937_64 rng(5);
  const i64 q = 243;
  for (int trial = 0; trial < 1000; ++trial) {
    std::uniform_int_distribution<i64> e(0, q - 1);
    i64 a = e(rng);
    if (a % 3 == 0) ++a;
    const i64 b = e(rng), c = e(rng);
    const MatModQ T = m2(243, a, b, c, i64(mul_mod(u64(1 + b * c), inv_mod(u64(a), 243), 243)));
    const std::vector<u64> v{u64(e(rng)), u64(e(rng))}, v0{u64(e(rng)), u64(e(rng))};
    const Aff2 tv{i64(T.at(0, 0)), i64(T.at(0, 1)), i64(T.at(1, 0)), i64(T.at(1, 1)), i64(v[0]), i64(v[1])};
    const Aff2 expect = compose(compose(inverse(tv, q), {1, 0, 0, 1, i64(v0[0]), i64(v0[1])}, q), tv, q);
    const auto got = key_identity(T, v, v0);
    REQUIRE(got.linear == MatModQ::identity(2, 243));
    REQUIRE(expect.a == 1);
    REQUIRE(expect.d == 1);
    REQUIRE(got.trans == std::vector<u64>{u64(expect.x), u64(expect.y)});
  }
}

TEST_CASE("translation pairs") {
  const auto fm5 = factorize(243).with_level(2);
  const auto zero = solve_translation_pair({0, 0}, {3, 0}, fm5);
  CHECK(zero.A == MatModQ::identity(2, 243));
  CHECK(zero.B == MatModQ::identity(2, 243));

  const auto fm7 = factorize(2187).with_level(2);
  const auto p = solve_translation_pair({0, 243}, {3, 0}, fm7);
  CHECK(p.A.raw().apply(std::vector<u64>{3, 0}) == std::vector<u64>{3, 243});
  CHECK(is_congruent_identity(p.A, 81));
  CHECK(p.B == MatModQ::identity(2, 2187));

  std::mt19937_64 rng(11);
  for (const auto& [q, d] : {std::pair{u64{2187}, 2}, {u64{2187}, 3}, {u64{3125}, 2}, {u64{59049}, 4}}) {
    const auto fm = factorize(q).with_level(2);
    const u64 p0 = fm.primes().front();
    const u64 deep = fm.radical_power(5);
    std::uniform_int_distribution<u64> e(0, q / deep - 1);
    std::vector<u64> v0(static_cast<std::size_t>(d), 0);
    v0[0] = p0 * (1 + p0 * e(rng)) % q;
    if (v0[0] % (p0 * p0) == 0) v0[0] = p0;
    for (std::size_t j = 1; j < v0.size(); ++j) v0[j] = p0 * p0 * e(rng) % q;
    for (int t = 0; t < 50; ++t) {
      std::vector<u64> v(static_cast<std::size_t>(d));
      for (auto& x : v) x = deep * e(rng) % q;
      const auto pr = solve_translation_pair(v, v0, fm);
      const auto a = pr.A.raw().apply(v0), b = pr.B.raw().apply(v0);
      for (int i = 0; i < d; ++i) REQUIRE((a[i] + q - b[i]) % q == v[i]);
      REQUIRE(is_congruent_identity(pr.A, fm.radical_power(4)));
      REQUIRE(is_congruent_identity(pr.B, fm.radical_power(4)));
    }
  }

  CHECK_THROWS_AS(solve_translation_pair({0, 81}, {3, 0}, fm5), PreconditionError);
  CHECK_THROWS_AS(solve_translation_pair({0, 0}, {9, 0}, fm5), PreconditionError);
  CHECK_THROWS_AS(solve_translation_pair({0}, {3}, fm5), PreconditionError);
}

TEST_CASE("(0, 81) is not a difference A v0 - B v0 over G(81) mod 3^5") {
  // G(81) mod 243 is I + 81 X with X mod 3 of trace 0
  std::set<std::pair<u64, u64>> images;
  for (i64 a = 0; a < 3; ++a)
    for (i64 b = 0; b < 3; ++b)
      for (i64 c = 0; c < 3; ++c) {
        const MatModQ m = m2(243, 1 + 81 * a, 81 * b, 81 * c, 1 - 81 * a);
        const auto w = m.raw().apply(std::vector<u64>{3, 0});
        images.insert({w[0], w[1]});
      }
  CHECK(images.size() == 1);
  bool reachable = false;
  for (const auto& x : images)
    for (const auto& y : images) reachable |= (x.first + 243 - y.first) % 243 == 0 && (x.second + 243 - y.second) % 243 == 81;
  CHECK_FALSE(reachable);
}

TEST_CASE("SA certificates mod 3^5") {
  const GenSet s = elementary_sa(2);
  const auto fm = factorize(243).with_level(2);
  const SaKit kit = find_sa_kit(s, fm, kit_search());
  CHECK(check_sa_kit(kit, s).empty());

  const auto j = kit_to_json(kit);
  const SaKit back = sa_kit_from_json(j, s);
  CHECK(back.t2.word == kit.t2.word);
  CHECK(std::get<AffineModQ>(back.t1.element) == std::get<AffineModQ>(kit.t1.element));

  const SaCertifier cert(s, kit);
  CHECK(cert.v0()[0] % 9 == 3);
  CHECK(cert.v0()[1] % 9 == 0);

  const auto id = cert.certify(AffineModQ::identity(2, 243));
  CHECK(id.word.length() == 0);
  CHECK(id.account.within());

  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const AffineModQ target = AffineModQ::make(sample_congruence_element(2, 243, 81, rng), {0, 0});
    const auto c = cert.certify(target);
    REQUIRE(std::get<AffineModQ>(evaluate_word(s, 243, c.word)) == target);
    CHECK(c.account.N == 12);
    CHECK(c.account.terms.size() == 2);
    CHECK(c.account.within());
  }
  CHECK_THROWS_AS(cert.certify(AffineModQ::make(m2(243, 1, 1, 0, 1), {0, 0})), PreconditionError);

  auto broken = kit;
  broken.t2 = broken.t1;
  CHECK_FALSE(check_sa_kit(broken, s).empty());
  CHECK_THROWS_AS(SaCertifier(s, broken), PreconditionError);
}

TEST_CASE("product certificates mod 3^5") {
  const GenSet s = product_demo();
  const auto fm = factorize(243).with_level(2);
  const ProductKit kit = find_product_kit(s, fm, kit_search());
  CHECK(check_product_kit(kit, s).empty());
  const ProductKit back = product_kit_from_json(kit_to_json(kit), s);
  CHECK(back.p2p.word == kit.p2p.word);

  const ProductCertifier cert(s, kit);
  CHECK(cert.inheritance().size() == 4);
  const SeedConditions lower{SeedVariant::lower, 2, fm};
  const SeedConditions upper{SeedVariant::upper, 2, fm};
  CHECK(static_cast<bool>(check_seed(cert.q3(), lower)));
  CHECK(static_cast<bool>(check_seed(cert.q3p(), upper)));
  CHECK(static_cast<bool>(check_seed(cert.p3(), lower)));
  CHECK(static_cast<bool>(check_seed(cert.p3p(), upper)));

  const std::vector<int> dims{2, 2};
  const auto id = cert.certify(ProductModQ::identity(dims, 243));
  CHECK(id.word.length() == 0);

  std::mt19937_64 rng(9);
  for (int t = 0; t < 6; ++t) {
    const MatModQ P = t % 3 == 0 ? MatModQ::identity(2, 243) : sample_congruence_element(2, 243, 81, rng);
    const MatModQ Q = t % 3 == 1 ? MatModQ::identity(2, 243) : sample_congruence_element(2, 243, 81, rng);
    const auto target = ProductModQ::make({P, Q});
    const auto c = cert.certify(target);
    REQUIRE(std::get<ProductModQ>(evaluate_word(s, 243, c.word)) == target);
    CHECK(c.account.terms.size() == 3);
    CHECK(c.account.terms[0].coefficient == 2 * 12 * 12 + 2 * 12);
    CHECK(c.account.within());
    const auto j = certificate_to_json(c);
    CHECK(j["length"] == c.word.length());
    CHECK(j["inheritance"].size() == 4);
  }
  CHECK_THROWS_AS(cert.certify(ProductModQ::make({m2(243, 1, 3, 0, 1), MatModQ::identity(2, 243)})), PreconditionError);
}

TEST_CASE("SA certificates mod 3^6 go through the translation pair") {
  const GenSet s = elementary_sa(2);
  const auto fm = factorize(729).with_level(2);
  const SaCertifier cert(s, find_sa_kit(s, fm, kit_search()));
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<u64> e(0, 2);
  for (int t = 0; t < 6; ++t) {
    const std::vector<u64> v{243 * e(rng), 243 * (1 + t % 2)};
    const MatModQ T = t < 2 ? MatModQ::identity(2, 729) : sample_congruence_element(2, 729, 81, rng);
    const AffineModQ target = AffineModQ::make(T, v);
    const auto c = cert.certify(target);
    REQUIRE(std::get<AffineModQ>(evaluate_word(s, 729, c.word)) == target);
    CHECK(c.word.length() >= 2 * cert.v0_word().length());
    CHECK(c.account.within());
  }
  CHECK_THROWS_AS(cert.certify(AffineModQ::make(MatModQ::identity(2, 729), {81, 0})), PreconditionError);
}
