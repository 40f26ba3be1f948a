#include <doctest.h>

#include <random>

#include "logdiam/genset.hpp"
#include "logdiam/matmod.hpp"

using namespace logdiam;

namespace {

MatModQ m2(u64 q, i64 a, i64 b, i64 c, i64 d) { return MatModQ::from_signed(2, q, std::vector<i64>{a, b, c, d}); }

MatModQ random_sl(int d, u64 q, std::mt19937_64& rng) {
  // Product of random elementary matrices.
  MatModQ acc = MatModQ::identity(d, q);
  for (int step = 0; step < 6 * d * d; ++step) {
    const int i = static_cast<int>(rng() % d);
    int j = static_cast<int>(rng() % d);
    if (i == j) j = (j + 1) % d;
    RawMat e = RawMat::identity(d, q);
    e.set(i, j, rng() % q);
    acc = mat_mul(acc, MatModQ::trusted(e));
  }
  return acc;
}

AffineModQ random_affine(int d, u64 q, std::mt19937_64& rng) {
  std::vector<u64> t(static_cast<std::size_t>(d));
  for (auto& x : t) x = rng() % q;
  return AffineModQ::make(random_sl(d, q, rng), t);
}

}  // namespace

TEST_CASE("mat_mul and mat_inv") {
  CHECK(mat_mul(m2(5, 1, 1, 0, 1), m2(5, 1, 0, 1, 1)) == m2(5, 2, 1, 1, 1));
  CHECK(mat_mul(m2(243, 1, 81, 0, 1), m2(243, 1, 0, 81, 1)) == m2(243, 1, 81, 81, 1));
  CHECK(mat_inv(m2(5, 1, 1, 0, 1)) == m2(5, 1, 4, 0, 1));
  CHECK(mat_inv(MatModQ::identity(3, 7)) == MatModQ::identity(3, 7));
  CHECK_THROWS_AS(m2(5, 1, 1, 1, 1), PreconditionError);
  CHECK_THROWS_AS(mat_mul(m2(5, 1, 1, 0, 1), m2(7, 1, 1, 0, 1)), ModulusMismatch);
  CHECK_THROWS_AS(mat_inv(RawMat::from_signed(2, 9, std::vector<i64>{3, 0, 0, 1})), NotAUnit);

  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const int d = 2 + t % 4;
    const MatModQ a = random_sl(d, 243, rng);
    CHECK(mat_mul(a, mat_inv(a)) == MatModQ::identity(d, 243));
    CHECK(mat_mul(mat_inv(a), a) == MatModQ::identity(d, 243));
  }
}

TEST_CASE("determinant is multiplicative on raw matrices") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const int d = 1 + t % 6;
    const u64 q = 1000 + rng() % 1000;
    RawMat a(d, q), b(d, q);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        a.set(i, j, rng() % q);
        b.set(i, j, rng() % q);
      }
    CHECK((a * b).det() == mul_mod(a.det(), b.det(), q));
    // adj(a) a = det(a) I
    const RawMat prod = a.adjugate() * a;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) CHECK(prod.at(i, j) == (i == j ? a.det() : 0));
  }
}

TEST_CASE("group laws") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 40; ++t) {
    const u64 q = t % 2 ? 243 : 7776;
    const MatModQ a = random_sl(3, q, rng), b = random_sl(3, q, rng), c = random_sl(3, q, rng);
    CHECK(mat_mul(mat_mul(a, b), c) == mat_mul(a, mat_mul(b, c)));

    const AffineModQ x = random_affine(2, q, rng), y = random_affine(2, q, rng), z = random_affine(2, q, rng);
    CHECK(affine_mul(affine_mul(x, y), z) == affine_mul(x, affine_mul(y, z)));
    CHECK(affine_mul(x, affine_inv(x)) == AffineModQ::identity(2, q));
    CHECK(affine_mul(affine_inv(x), x) == AffineModQ::identity(2, q));
    CHECK(theta(affine_mul(x, y)) == mat_mul(theta(x), theta(y)));
    CHECK(tau(x) == x.apply(std::vector<u64>{0, 0}));
    // composition of maps
    const std::vector<u64> pt{rng() % q, rng() % q};
    CHECK(affine_mul(x, y).apply(pt) == x.apply(y.apply(pt)));

    const ProductModQ p = ProductModQ::make({a, x.linear}), r = ProductModQ::make({b, y.linear}), s = ProductModQ::make({c, z.linear});
    CHECK(product_mul(product_mul(p, r), s) == product_mul(p, product_mul(r, s)));
    CHECK(product_mul(p, product_inv(p)) == ProductModQ::identity(std::vector<int>{3, 2}, q));

    const u64 m = q == 243 ? 27 : 72;
    CHECK(reduce_level(mat_mul(a, b), m) == mat_mul(reduce_level(a, m), reduce_level(b, m)));
    CHECK(reduce_level(mat_inv(a), m) == mat_inv(reduce_level(a, m)));
    CHECK(reduce_level(affine_mul(x, y), m) == affine_mul(reduce_level(x, m), reduce_level(y, m)));
    CHECK(reduce_level(affine_inv(x), m) == affine_inv(reduce_level(x, m)));
  }
}

TEST_CASE("affine product law") {
  const AffineModQ a = AffineModQ::make(m2(5, 1, 1, 0, 1), {1, 0});
  const AffineModQ b = AffineModQ::make(MatModQ::identity(2, 5), {0, 1});
  CHECK(affine_mul(a, b) == AffineModQ::make(m2(5, 1, 1, 0, 1), {2, 1}));
  CHECK(affine_mul(a, AffineModQ::identity(2, 5)) == a);
}

TEST_CASE("reduce_level and congruence") {
  CHECK(reduce_level(m2(243, 1, 9, 0, 1), 9) == MatModQ::identity(2, 9));
  CHECK(reduce_level(MatModQ::identity(3, 243), 27) == MatModQ::identity(3, 27));
  CHECK_THROWS_AS(reduce_level(MatModQ::identity(2, 243), 7), PreconditionError);

  CHECK(is_congruent_identity(m2(243, 1, 81, 81, 1), 81));
  CHECK_FALSE(is_congruent_identity(m2(243, 1, 81, 81, 1), 243));
  CHECK_FALSE(is_congruent_identity(AffineModQ::make(MatModQ::identity(2, 9), {3, 0}), 9));
  CHECK(is_congruent_identity(AffineModQ::make(MatModQ::identity(2, 9), {3, 0}), 3));
  CHECK_THROWS_AS(is_congruent_identity(MatModQ::identity(2, 243), 10), PreconditionError);
}

TEST_CASE("scaling matrices") {
  CHECK(make_scaling(0, 1, Residue(1, 5), 2) == MatModQ::identity(2, 5));
  CHECK(make_scaling(0, 1, Residue(2, 5), 2) == m2(5, 2, 0, 0, 3));
  const MatModQ h = make_scaling(0, 2, Residue(82, 243), 3);
  CHECK(mat_mul(h, make_scaling(0, 2, Residue(82, 243).inverse(), 3)) == MatModQ::identity(3, 243));
  CHECK_THROWS_AS(make_scaling(0, 1, Residue(3, 9), 2), NotAUnit);
  CHECK_THROWS_AS(make_scaling(1, 1, Residue(2, 5), 2), PreconditionError);
}

TEST_CASE("check_seed") {
  const auto fm = factorize(243).with_level(2);
  const MatModQ g = m2(243, 2, 9, 3, 14);
  CHECK(check_seed(g, {SeedVariant::lower, 2, fm}));
  CHECK(check_seed(transpose(g), {SeedVariant::upper, 2, fm}));
  CHECK_FALSE(check_seed(transpose(g), {SeedVariant::lower, 2, fm}));
  const SeedCheck id = check_seed(MatModQ::identity(2, 243), {SeedVariant::lower, 2, fm});
  CHECK_FALSE(id);
  CHECK(id.diagnostic.find("coincide") != std::string::npos);

  // valuation 3 on the far triangle passes only the relaxed shape
  const MatModQ h = m2(243, 2, 27, 3, 41);
  CHECK_FALSE(check_seed(h, {SeedVariant::lower, 2, fm}));
  CHECK(check_seed(h, {SeedVariant::lower, 2, fm, SeedStrictness::relaxed}));
  // modulus too small for L = 2: 3^3 < 3^4
  CHECK_THROWS_AS(check_seed(m2(27, 2, 9, 3, 14), {SeedVariant::lower, 2, factorize(27).with_level(2)}), PreconditionError);
  CHECK_THROWS_AS(check_seed(m2(81, 2, 9, 3, 14), {SeedVariant::lower, 2, fm}), PreconditionError);
}

TEST_CASE("generating sets") {
  const GenSet s = elementary_sl(2);
  CHECK(s.size() == 4);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto a = std::get<MatModQ>(reduce_generator(s, i, 7));
    const auto b = std::get<MatModQ>(reduce_generator(s, s.inverse_of()[i], 7));
    CHECK(mat_mul(a, b) == MatModQ::identity(2, 7));
  }
  CHECK(elementary_sa(2).size() == 8);

  const auto j = nlohmann::json::parse(R"({"kind":"SL","dims":[2],"generators":[[[1,1],[0,1]],[[1,0],[1,1]]]})");
  CHECK_THROWS_AS(genset_from_json(j), ConfigError);
  auto closed = j;
  closed["close_symmetric"] = true;
  const GenSet c = genset_from_json(closed);
  CHECK(c.size() == 4);
  CHECK(c.generators()[2].blocks[0].a == std::vector<i64>{1, -1, 0, 1});
  CHECK(genset_from_json(genset_to_json(c)).generators() == c.generators());

  const auto bad = nlohmann::json::parse(R"({"kind":"SL","dims":[2],"generators":[[[2,0],[0,1]]],"close_symmetric":true})");
  CHECK_THROWS_AS(genset_from_json(bad), ConfigError);

  const auto prod = nlohmann::json::parse(
      R"({"kind":"product","dims":[2,2],"generators":[[[[1,1],[0,1]],[[1,0],[1,1]]]],"close_symmetric":true})");
  const GenSet p = genset_from_json(prod);
  CHECK(p.size() == 2);
  CHECK(p.inverse_of() == std::vector<std::size_t>{1, 0});

  const auto sa = nlohmann::json::parse(
      R"({"kind":"SA","dims":[2],"generators":[{"linear":[[1,1],[0,1]],"trans":[1,0]}],"close_symmetric":true})");
  const GenSet a = genset_from_json(sa);
  const auto g = std::get<AffineModQ>(reduce_generator(a, 0, 9));
  const auto gi = std::get<AffineModQ>(reduce_generator(a, 1, 9));
  CHECK(affine_mul(g, gi) == AffineModQ::identity(2, 9));
}
