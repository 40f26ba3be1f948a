#include <doctest.h>

#include <array>
#include <deque>
#include <map>
#include <random>

#include "logdiam/cayley.hpp"

using namespace logdiam;

namespace {

MatModQ m2(u64 q, i64 a, i64 b, i64 c, i64 d) { return MatModQ::from_signed(2, q, std::vector<i64>{a, b, c, d}); }

using Quad = std::array<i64, 4>;

// Plain BFS over 2x2 tuples, independent of the library engine.
std::map<Quad, int> naive_sl2_distances(i64 q, const std::vector<Quad>& gens) {
  auto mul = [q](const Quad& a, const Quad& b) {
    return Quad{(a[0] * b[0] + a[1] * b[2]) % q, (a[0] * b[1] + a[1] * b[3]) % q, (a[2] * b[0] + a[3] * b[2]) % q,
                (a[2] * b[1] + a[3] * b[3]) % q};
  };
  const Quad id{1 % q, 0, 0, 1 % q};
  std::map<Quad, int> dist{{id, 0}};
  std::deque<Quad> todo{id};
  while (!todo.empty()) {
    const Quad x = todo.front();
    todo.pop_front();
    for (const auto& g : gens) {
      const Quad y = mul(x, g);
      if (dist.emplace(y, dist[x] + 1).second) todo.push_back(y);
    }
  }
  return dist;
}

std::vector<Quad> tu_gens(i64 q) {
  return {{1 % q, 1 % q, 0, 1 % q}, {1 % q, (q - 1) % q, 0, 1 % q}, {1 % q, 0, 1 % q, 1 % q}, {1 % q, 0, (q - 1) % q, 1 % q}};
}

MatModQ random_sl2(u64 q, std::mt19937_64& rng) {
  MatModQ acc = MatModQ::identity(2, q);
  for (int i = 0; i < 40; ++i) {
    const i64 k = static_cast<i64>(rng() % q);
    acc = mat_mul(acc, i % 2 ? m2(q, 1, k, 0, 1) : m2(q, 1, 0, k, 1));
  }
  return acc;
}

}  // namespace

TEST_CASE("enumerate_group sizes") {
  const GenSet s = elementary_sl(2);
  CHECK(enumerate_group(s, 1).size() == 1);
  CHECK(enumerate_group(s, 2).size() == 6);
  CHECK(enumerate_group(s, 3).size() == 24);
  const auto g = enumerate_group(s, 5);
  CHECK(g.size() == 120);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(g.index_of(g.element(i)) == i);
    CHECK(std::get<MatModQ>(evaluate_word(s, 5, g.word(i))) == std::get<MatModQ>(g.element(i)));
    CHECK(static_cast<int>(g.word(i).length()) == g.distance(i));
  }
}

TEST_CASE("pinned diameters") {
  const GenSet s = elementary_sl(2);
  CHECK(diameter(s, 1).diameter == 0);
  CHECK(diameter(s, 2).diameter == 3);
  CHECK(diameter(s, 3).diameter == 4);
  CHECK(diameter(s, 4).diameter == 6);
  CHECK(diameter(s, 5).diameter == 6);
  CHECK(diameter(s, 4).order == 48);
  CHECK_FALSE(diameter(s, 1).ratio.has_value());
}

TEST_CASE("distances agree with a plain BFS") {
  const GenSet s = elementary_sl(2);
  for (i64 q = 2; q <= 12; ++q) {
    CAPTURE(q);
    const auto naive = naive_sl2_distances(q, tu_gens(q));
    const auto g = enumerate_group(s, static_cast<u64>(q));
    REQUIRE(g.size() == naive.size());
    for (const auto& [quad, dist] : naive) {
      const auto i = g.index_of(MatModQ::trusted(RawMat::from_signed(2, static_cast<u64>(q), quad)));
      REQUIRE(i.has_value());
      CHECK(g.distance(*i) == dist);
    }
  }
}

TEST_CASE("bfs_distance") {
  const GenSet s = elementary_sl(2);
  CHECK(bfs_distance(s, 5, m2(5, 1, 2, 0, 1)).distance == 2);
  CHECK(bfs_distance(s, 5, MatModQ::identity(2, 5)).distance == 0);
  CHECK(bfs_distance(s, 5, MatModQ::identity(2, 5)).word.length() == 0);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(bfs_distance(s, 7, reduce_generator(s, i, 7)).distance == 1);
  CHECK(bfs_distance(s, 1, MatModQ::identity(2, 1)).distance == 0);

  std::mt19937_64 rng(1);
  const auto g = enumerate_group(s, 64);
  for (int t = 0; t < 30; ++t) {
    const MatModQ x = random_sl2(64, rng);
    const auto r = bfs_distance(s, 64, x);
    CHECK(r.distance == g.distance(*g.index_of(x)));
    CHECK(std::get<MatModQ>(evaluate_word(s, 64, r.word)) == x);
  }

  const GenSet t_only = GenSet::make(GroupKind::SL, {2}, {{{IntMatrix{2, {1, 1, 0, 1}}}, {}}}, true);
  CHECK_THROWS_AS(bfs_distance(t_only, 5, m2(5, 1, 0, 1, 1)), TargetUnreachable);
}

TEST_CASE("distance oracle matches bidirectional search") {
  const GenSet s = elementary_sl(2);
  const DistanceOracle oracle(s, 243, 2000);
  CHECK_FALSE(oracle.complete());
  CHECK(oracle.ball_size() <= 2000);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    const MatModQ x = random_sl2(243, rng);
    const auto a = oracle.query(x);
    CHECK(a.distance == bfs_distance(s, 243, x).distance);
    CHECK(std::get<MatModQ>(evaluate_word(s, 243, a.word)) == x);
  }
  const DistanceOracle whole(s, 5, 1000);
  CHECK(whole.complete());
  CHECK(whole.query(m2(5, 1, 2, 0, 1)).distance == 2);
}

TEST_CASE("layer soundness and symmetry") {
  const GenSet s = elementary_sl(2);
  const auto g = enumerate_group(s, 12);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto x = std::get<MatModQ>(g.element(i));
    // distance symmetry: d(I, x) = d(x, I) = d(I, x^{-1})
    CHECK(g.distance(*g.index_of(mat_inv(x))) == g.distance(i));
    if (g.distance(i) == 0) continue;
    bool has_lower = false;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const auto y = mat_mul(x, std::get<MatModQ>(reduce_generator(s, k, 12)));
      has_lower = has_lower || g.distance(*g.index_of(y)) == g.distance(i) - 1;
    }
    CHECK(has_lower);
  }
  std::size_t total = 0;
  for (auto n : g.layer_sizes()) total += n;
  CHECK(total == g.size());
}

TEST_CASE("identity eccentricity equals eccentricity elsewhere") {
  const GenSet s = elementary_sl(2);
  std::mt19937_64 rng(3);
  for (u64 q : {7u, 8u, 9u}) {
    const MatModQ root = random_sl2(q, rng);
    CHECK(enumerate_from(s, q, root).depth() == diameter(s, q).diameter);
  }
}

TEST_CASE("divisibility monotonicity") {
  const GenSet s = elementary_sl(2);
  std::map<u64, EnumeratedGroup> groups;
  for (u64 q = 2; q <= 24; ++q) groups.emplace(q, enumerate_group(s, q));
  std::mt19937_64 rng(4);
  for (u64 q1 = 2; q1 <= 24; ++q1)
    for (u64 q2 = 2 * q1; q2 <= 24; q2 += q1) {
      CAPTURE(q1);
      CAPTURE(q2);
      const auto& big = groups.at(q2);
      const auto& small = groups.at(q1);
      CHECK(small.depth() <= big.depth());
      for (int t = 0; t < 5; ++t) {
        const MatModQ x = random_sl2(q2, rng), y = random_sl2(q2, rng);
        const MatModQ rel = mat_mul(mat_inv(x), y);
        const int d2 = big.distance(*big.index_of(rel));
        const int d1 = small.distance(*small.index_of(reduce_level(rel, q1)));
        CHECK(d1 <= d2);
      }
    }
}

TEST_CASE("group orders and surjectivity") {
  CHECK(group_order(GroupKind::SL, {2}, 4) == 48);
  CHECK(group_order(GroupKind::SL, {2}, 7776) == group_order(GroupKind::SL, {2}, 32) * group_order(GroupKind::SL, {2}, 243));
  CHECK(group_order(GroupKind::SL, {3}, 2) == 168);
  CHECK(group_order(GroupKind::SA, {2}, 3) == 216);
  CHECK(group_order(GroupKind::product, {2, 2}, 3) == 576);
  CHECK(group_order(GroupKind::SL, {2}, 1) == 1);
  CHECK_THROWS_AS(group_order(GroupKind::SL, {8}, u64{1} << 61), BudgetError);
  CHECK(to_string(group_order(GroupKind::SL, {2}, 243)) == "12754584");

  const GenSet s = elementary_sl(2);
  for (u64 q = 1; q <= 20; ++q) CHECK(surjectivity_check(s, q));
  const GenSet t_only = GenSet::make(GroupKind::SL, {2}, {{{IntMatrix{2, {1, 1, 0, 1}}}, {}}}, true);
  CHECK_FALSE(surjectivity_check(t_only, 5));
  CHECK(enumerate_group(t_only, 5).size() == 5);
  for (u64 q = 2; q <= 6; ++q) CHECK(surjectivity_check(elementary_sa(2), q));
  CHECK(surjectivity_check(elementary_sl(3), 2));
}

TEST_CASE("budget refusals") {
  const GenSet s = elementary_sl(2);
  BfsOptions tiny;
  tiny.memory_budget = 100;
  CHECK_THROWS_AS(enumerate_group(s, 64, tiny), BudgetError);
  const auto scan = diameter_scan(s, {2, 3, 64}, tiny);
  CHECK(scan.records.empty());
  CHECK(scan.failures.size() == 3);
  BfsOptions small;
  small.memory_budget = 200000;
  const auto partial = diameter_scan(s, {64, 2, 3}, small);
  CHECK(partial.records.size() == 2);
  REQUIRE(partial.failures.size() == 1);
  CHECK(partial.failures[0].q == 64);
}

TEST_CASE("threads do not change results") {
  const GenSet s = elementary_sl(2);
  BfsOptions many;
  many.threads = 4;
  const auto a = enumerate_group(s, 32);
  const auto b = enumerate_group(s, 32, many);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); i += 97) {
    CHECK(a.word(i) == b.word(i));
    CHECK(a.element(i) == b.element(i));
  }
}

TEST_CASE("wide keys and other kinds") {
  // 9 entries of 41 bits do not fit a 128-bit key
  const u64 q = (u64{1} << 40) + 15;
  const GenSet s3 = elementary_sl(3);
  const auto tu = mat_mul(std::get<MatModQ>(reduce_generator(s3, 0, q)), std::get<MatModQ>(reduce_generator(s3, 2, q)));
  CHECK(bfs_distance(s3, q, tu).distance == 2);

  const GenSet sa = elementary_sa(2);
  const AffineModQ shift = AffineModQ::make(MatModQ::identity(2, 9), {2, 0});
  const auto r = bfs_distance(sa, 9, shift);
  CHECK(r.distance == 2);
  CHECK(std::get<AffineModQ>(evaluate_word(sa, 9, r.word)) == shift);

  const auto prod = genset_from_json(nlohmann::json::parse(
      R"({"kind":"product","dims":[2,2],"generators":[[[[1,1],[0,1]],[[1,0],[1,1]]],[[[1,0],[1,1]],[[1,2],[0,1]]]],"close_symmetric":true})"));
  const auto g = enumerate_group(prod, 3);
  CHECK(g.size() == 576);
  const auto last = g.element(g.size() - 1);
  CHECK(evaluate_word(prod, 3, g.word(g.size() - 1)) == last);
}

TEST_CASE("predicate search") {
  const GenSet s = elementary_sl(2);
  auto is_identity = [](const GroupElement& g) { return element_is_congruent_identity(g, modulus_of(g)); };
  const auto id = search_with_predicate(s, 243, is_identity);
  CHECK(id.found);
  CHECK(id.radius == 0);
  CHECK(id.word.length() == 0);

  const auto fm = factorize(243).with_level(2);
  auto seed = [&](const GroupElement& g) { return static_cast<bool>(check_seed(std::get<MatModQ>(g), {SeedVariant::lower, 2, fm})); };
  SearchOptions opts;
  opts.max_radius = 12;
  const auto hit = search_with_predicate(s, 243, seed, opts);
  REQUIRE(hit.found);
  CHECK(seed(*hit.element));
  CHECK(evaluate_word(s, 243, hit.word) == *hit.element);

  auto never = [](const GroupElement&) { return false; };
  SearchOptions capped;
  capped.max_radius = 3;
  capped.walk_retries = 4;
  const auto miss = search_with_predicate(s, 243, never, capped);
  CHECK_FALSE(miss.found);
  CHECK(miss.examined > 0);

  // walks are used past the radius cap and stay exact
  auto far = [](const GroupElement& g) { return std::get<MatModQ>(g).at(0, 1) == 100; };
  SearchOptions walk;
  walk.max_radius = 1;
  walk.walk_retries = 5000;
  const auto w = search_with_predicate(s, 243, far, walk);
  REQUIRE(w.found);
  CHECK(w.via_walk);
  CHECK(evaluate_word(s, 243, w.word) == *w.element);
}

TEST_CASE("kernel search") {
  const GenSet sa = elementary_sa(2);
  auto translation = [](const GroupElement& g) { return std::get<AffineModQ>(g).trans; };
  auto nontrivial_linear = [](const GroupElement& g) {
    const auto& a = std::get<AffineModQ>(g);
    return a.trans == std::vector<u64>{0, 0} && a.linear != MatModQ::identity(2, a.modulus());
  };
  const auto r = search_in_kernel(sa, 27, translation, nontrivial_linear);
  REQUIRE(r.found);
  CHECK(nontrivial_linear(*r.element));
  CHECK(evaluate_word(sa, 27, r.word) == *r.element);

  auto never = [](const GroupElement&) { return false; };
  SearchOptions small;
  small.max_radius = 2;
  CHECK_FALSE(search_in_kernel(sa, 27, translation, never, small).found);
}

TEST_CASE("projection keeps word indices") {
  const GenSet sa = elementary_sa(2);
  const GenSet lin = project_component(sa, 0);
  CHECK(lin.size() == sa.size());
  std::mt19937_64 rng(5);
  const MatModQ x = random_sl2(27, rng);
  const auto w = bfs_distance(lin, 27, x).word;
  CHECK(std::get<AffineModQ>(evaluate_word(sa, 27, w)).linear == x);
  CHECK(inverse_word(sa, inverse_word(sa, w)) == w);
  CHECK(cayley_word_from_json(cayley_word_to_json(w), sa) == w);
  CHECK_THROWS_AS(cayley_word_from_json(nlohmann::json::parse(R"({"indices":[99]})"), sa), ConfigError);
}

TEST_CASE("scan output") {
  const GenSet s = elementary_sl(2);
  const auto empty = diameter_scan(s, {});
  CHECK(empty.records.empty());
  CHECK_FALSE(empty.fitted_c.has_value());
  CHECK(scan_summary(empty)["fitted_c"].is_null());

  std::vector<u64> qs;
  for (u64 q = 20; q >= 1; --q) qs.push_back(q);
  const auto scan = diameter_scan(s, qs);
  REQUIRE(scan.records.size() == 20);
  CHECK(scan.records.front().q == 1);
  REQUIRE(scan.fitted_c.has_value());
  bool attained = false;
  for (const auto& r : scan.records) {
    if (r.q < 3) continue;
    CHECK(*r.ratio <= *scan.fitted_c);
    attained = attained || (*r.ratio == *scan.fitted_c && r.q == *scan.argmax_q);
  }
  CHECK(attained);
  const auto csv = scan_csv(scan, true);
  CHECK(csv.rfind("q,|Xq|,diam,ratio,ms\n", 0) == 0);
  CHECK(csv.find("\n1,1,0,,0.000\n") != std::string::npos);
  CHECK(csv.find("\n2,6,3,4.328085,0.000\n") != std::string::npos);
  CHECK(csv == scan_csv(diameter_scan(s, qs), true));
}
