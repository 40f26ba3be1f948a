#include "logdiam/bddgen.hpp"

#include <algorithm>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "logdiam/genset.hpp"

namespace logdiam {

using nlohmann::json;

namespace {

struct PrimeLevel {
  u64 p = 0;
  int alpha = 0;
  u64 pa = 1;
  int L = 2;
};

// r / dval over Z/p^alpha where dval = p^e * unit and p^e | r.
u64 divide_by(u64 r, u64 dval, const PrimeLevel& pl) {
  if (dval % pl.pa == 0) throw InternalError("division by zero in a conjugation equation");
  const int e = vp(dval, pl.p, pl.alpha);
  const u64 pe = ipow(pl.p, e);
  if (r % pe != 0) throw PreconditionError("right-hand side not divisible by the diagonal gap");
  return mul_mod((r / pe) % pl.pa, inv_mod((dval / pe) % pl.pa, pl.pa), pl.pa);
}

MatModQ glue(const std::vector<MatModQ>& parts) {
  if (parts.size() == 1) return parts.front();
  const int d = parts.front().dim();
  u64 q = 1;
  for (const auto& m : parts) q *= m.modulus();
  RawMat out(d, q);
  std::vector<Residue> rs;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      rs.clear();
      for (const auto& m : parts) rs.push_back(m.entry(i, j));
      out.set(i, j, crt_combine(rs).value());
    }
  }
  return MatModQ::from_raw(std::move(out));
}

MatModQ unipotent_from(const RawMat& strict) { return MatModQ::trusted(RawMat::identity(strict.dim(), strict.modulus()) + strict); }

TriangularizationResult triangularize_prime(const MatModQ& g0, const PrimeLevel& pl) {
  const int d = g0.dim();
  const int L = pl.L;
  const u64 p = pl.p;
  const u64 pa = pl.pa;
  const u64 pl1 = ipow(p, L - 1);
  MatModQ g = g0;
  MatModQ total = MatModQ::identity(d, pa);
  std::vector<MatModQ> rows, inters;

  for (int i = 0; i + 1 < d; ++i) {
    const std::size_t n = static_cast<std::size_t>(d - 1 - i);
    std::vector<int> e(n);
    for (std::size_t t = 0; t < n; ++t) {
      const int j = i + 1 + static_cast<int>(t);
      e[t] = vp(sub_mod(g.at(j, j), g.at(i, i), pa), p, pl.alpha);
      if (e[t] >= L) {
        std::ostringstream os;
        os << "diagonal entries " << i << " and " << j << " coincide mod " << p << "^" << L;
        throw PreconditionError(os.str());
      }
    }
    // Row i of (I + e_i v^T) g (I - e_i v^T) vanishes beyond the diagonal iff
    // F_j(v) = g_ij + sum_k v_k (g_kj - [k=j] g_ii) - v_j sum_k v_k g_ki = 0.
    // With v = p^{L-1} w, F_j / p^{L-1+e_j} has a unit Jacobian mod p.
    PolySystem sys{n, {}, p};
    for (std::size_t t = 0; t < n; ++t) {
      const int j = i + 1 + static_cast<int>(t);
      const u64 scale = ipow(p, L - 1 + e[t]);
      const u64 pej = ipow(p, e[t]);
      Polynomial poly;
      if (g.at(i, j) % scale != 0) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") is not divisible by " << p << "^" << 2 * (L - 1);
        throw PreconditionError(os.str());
      }
      poly.terms.push_back({static_cast<i64>(g.at(i, j) / scale), std::vector<std::uint32_t>(n, 0)});
      for (std::size_t s = 0; s < n; ++s) {
        const int k = i + 1 + static_cast<int>(s);
        const u64 lin = (k == j) ? sub_mod(g.at(j, j), g.at(i, i), pa) : g.at(k, j);
        if (lin % pej != 0) throw PreconditionError("off-diagonal entry below the seed valuation");
        std::vector<std::uint32_t> ex(n, 0);
        ex[s] = 1;
        poly.terms.push_back({static_cast<i64>((lin / pej) % pa), ex});
        const u64 quad = mul_mod(ipow(p, L - 1 - e[t]) % pa, g.at(k, i), pa);
        std::vector<std::uint32_t> ex2(n, 0);
        ex2[t] += 1;
        ex2[s] += 1;
        poly.terms.push_back({static_cast<i64>(neg_mod(quad, pa)), ex2});
      }
      sys.equations.push_back(std::move(poly));
    }

    const std::vector<u64> zero(n, 0);
    const std::vector<u64> delta = solve_unit_system(sys.jacobian(zero, p), sys.evaluate(zero, p), n, p, p);
    std::vector<Residue> w0;
    for (u64 v : delta) w0.push_back(Residue::from_unsigned(neg_mod(v, p), p));
    const std::vector<Residue> w = hensel_lift_system(sys, w0, pl.alpha);

    RawMat xs(d, pa), xs_inv(d, pa);
    for (std::size_t t = 0; t < n; ++t) {
      const u64 v = mul_mod(pl1, w[t].value(), pa);
      xs.set(i, i + 1 + static_cast<int>(t), v);
      xs_inv.set(i, i + 1 + static_cast<int>(t), neg_mod(v, pa));
    }
    const MatModQ x = unipotent_from(xs);
    g = mat_mul(mat_mul(x, g), unipotent_from(xs_inv));
    for (int j = i + 1; j < d; ++j) {
      if (g.at(i, j) != 0) throw InternalError("row clearing left a nonzero entry");
    }
    total = mat_mul(x, total);
    rows.push_back(x);
    inters.push_back(g);
  }
  return {total, g, std::move(rows), std::move(inters)};
}

// Letters come in pairs: (x g0^{-1} x^{-1})(y g0 y^{-1}) for lower targets and
// (x g0' x^{-1})(y g0'^{-1} y^{-1}) for upper ones.
enum class PairKind { lower, upper };

std::vector<PairKind> step5_pair_schedule(int d) {
  std::vector<PairKind> out(static_cast<std::size_t>(d - 1), PairKind::lower);
  for (int j = 0; j + 1 < d; ++j) {
    for (PairKind k : {PairKind::upper, PairKind::lower, PairKind::upper, PairKind::lower}) out.push_back(k);
  }
  out.push_back(PairKind::upper);
  return out;
}

std::vector<Letter> pair_letters(PairKind kind, const MatModQ& x, const MatModQ& y) {
  if (kind == PairKind::lower) return {{x, Base::g0, -1}, {y, Base::g0, 1}};
  return {{x, Base::g0p, 1}, {y, Base::g0p, -1}};
}

// Exhaustive fill of the step-5 pair schedule at a prime where the seeds'
// diagonal is degenerate. Each pair uses x = I and y in G(p^{L-1}); the
// table maps every reachable product to its last pair and predecessor.
struct PairSearch {
  struct Node {
    std::size_t layer = 0;
    u64 parent = 0;
    std::uint32_t y = 0;
  };
  u64 pa = 1;
  std::vector<MatModQ> conjugators;
  std::unordered_map<u64, Node> reached;
  std::vector<PairKind> schedule;
};

inline constexpr u64 kMaxSearchCandidates = u64{1} << 22;

u64 pack(const RawMat& m) {
  u64 k = 0;
  for (u64 v : m.data()) k = k * m.modulus() + v;
  return k;
}

std::shared_ptr<const PairSearch> build_pair_search(const MatModQ& g0, const MatModQ& g0p, const PrimeLevel& pl) {
  const int d = g0.dim();
  const u64 step = ipow(pl.p, pl.L - 1);
  const u64 range = pl.pa / step;
  const int cells = d * d;
  u128 candidates = 1;
  u128 keyspace = 1;
  for (int i = 0; i < cells; ++i) {
    candidates *= range;
    keyspace *= pl.pa;
  }
  if (candidates > kMaxSearchCandidates || keyspace >> 63) {
    std::ostringstream os;
    os << "seeds are degenerate at p = " << pl.p << " and G(" << step << ") mod " << pl.pa << " is too large to search";
    throw PreconditionError(os.str());
  }
  auto out = std::make_shared<PairSearch>();
  out->pa = pl.pa;
  out->schedule = step5_pair_schedule(d);
  out->conjugators.push_back(MatModQ::identity(d, pl.pa));
  std::vector<u64> digits(static_cast<std::size_t>(cells), 0);
  for (u64 n = 0; n < static_cast<u64>(candidates); ++n) {
    u64 r = n;
    RawMat m(d, pl.pa);
    bool is_identity = true;
    for (int c = 0; c < cells; ++c) {
      const u64 digit = r % range;
      r /= range;
      is_identity = is_identity && digit == 0;
      const int i = c / d, j = c % d;
      m.set(i, j, add_mod(i == j ? 1 % pl.pa : 0, mul_mod(step, digit, pl.pa), pl.pa));
    }
    if (!is_identity && m.det() == 1 % pl.pa) out->conjugators.push_back(MatModQ::trusted(std::move(m)));
  }

  const MatModQ g0_inv = mat_inv(g0);
  const MatModQ g0p_inv = mat_inv(g0p);
  std::vector<std::pair<MatModQ, std::uint32_t>> values[2];
  for (int kind = 0; kind < 2; ++kind) {
    std::unordered_map<u64, std::uint32_t> seen;
    for (std::uint32_t i = 0; i < out->conjugators.size(); ++i) {
      const MatModQ& y = out->conjugators[i];
      const MatModQ v = kind == 0 ? mat_mul(g0_inv, conjugate(y, g0)) : mat_mul(g0p, conjugate(y, g0p_inv));
      if (seen.emplace(pack(v.raw()), i).second) values[kind].push_back({v, i});
    }
  }

  std::vector<MatModQ> elements{MatModQ::identity(d, pl.pa)};
  out->reached.emplace(pack(elements.front().raw()), PairSearch::Node{});
  for (std::size_t k = 0; k < out->schedule.size(); ++k) {
    const auto& vs = values[out->schedule[k] == PairKind::lower ? 0 : 1];
    const std::size_t n = elements.size();
    for (std::size_t e = 0; e < n; ++e) {
      const u64 parent = pack(elements[e].raw());
      for (const auto& [v, y] : vs) {
        MatModQ prod = mat_mul(elements[e], v);
        if (out->reached.emplace(pack(prod.raw()), PairSearch::Node{k + 1, parent, y}).second) elements.push_back(std::move(prod));
      }
    }
  }
  return out;
}

struct PrimeData {
  PrimeLevel level;
  FactoredModulus fm;
  MatModQ g0, g0p;
  std::optional<TriangularizationResult> tri;    // of g0
  std::optional<TriangularizationResult> tri_t;  // of transpose(g0p)
  std::shared_ptr<const PairSearch> search;      // set iff the seeds are degenerate at p
};

const TriangularizationResult& require_tri(const std::optional<TriangularizationResult>& t, const PrimeLevel& pl) {
  if (!t) {
    std::ostringstream os;
    os << "seeds are degenerate at p = " << pl.p << "; only full decompositions are available there";
    throw PreconditionError(os.str());
  }
  return *t;
}

}  // namespace

struct DecompositionContext::Data {
  MatModQ g0, g0p;
  FactoredModulus fm;
  int L = 2;
  std::vector<PrimeData> primes;
};

namespace {

std::vector<PrimeLevel> prime_levels(const FactoredModulus& fm, int L) {
  std::vector<PrimeLevel> out;
  for (const auto& f : fm.factors()) out.push_back({f.p, f.alpha, f.value, L});
  return out;
}

void require_seed_level(const FactoredModulus& fm, int L) {
  if (L < 2) throw PreconditionError("level L must be at least 2");
  if (fm.factors().empty() || fm.min_exponent() < 4 * (L - 1)) {
    std::ostringstream os;
    os << "modulus too small: every prime exponent must be at least 4(L-1) = " << 4 * (L - 1);
    throw PreconditionError(os.str());
  }
}

}  // namespace

TriangularizationResult step1_triangularize(const MatModQ& g0, int L) {
  const FactoredModulus fm = factorize_any(g0.modulus());
  require_seed_level(fm, L);
  const SeedCheck sc = check_seed(g0, {SeedVariant::lower, L, fm, SeedStrictness::relaxed});
  if (!sc) throw PreconditionError("g0 is not a lower seed: " + sc.diagnostic);
  std::vector<TriangularizationResult> parts;
  for (const auto& pl : prime_levels(fm, L)) parts.push_back(triangularize_prime(reduce_level(g0, pl.pa), pl));
  if (parts.size() == 1) return parts.front();

  auto glue_field = [&](auto getter) {
    std::vector<MatModQ> ms;
    for (const auto& r : parts) ms.push_back(getter(r));
    return glue(ms);
  };
  TriangularizationResult out{glue_field([](const auto& r) { return r.x; }), glue_field([](const auto& r) { return r.g1; }), {}, {}};
  for (std::size_t i = 0; i < parts.front().row_conjugators.size(); ++i) {
    out.row_conjugators.push_back(glue_field([i](const auto& r) { return r.row_conjugators[i]; }));
    out.intermediates.push_back(glue_field([i](const auto& r) { return r.intermediates[i]; }));
  }
  return out;
}

DecompositionContext DecompositionContext::make(const MatModQ& g0, const MatModQ& g0p, int L) {
  if (g0.modulus() != g0p.modulus()) throw ModulusMismatch("seeds have different moduli");
  if (g0.dim() != g0p.dim()) throw PreconditionError("seeds have different dimensions");
  if (g0.dim() < 2) throw PreconditionError("dimension must be at least 2");
  const FactoredModulus fm = factorize_any(g0.modulus());
  require_seed_level(fm, L);
  const FactoredModulus fml = fm.with_level(L);
  const SeedCheck lower = check_seed(g0, {SeedVariant::lower, L, fml, SeedStrictness::exact});
  if (!lower) throw PreconditionError("g0 is not a lower seed: " + lower.diagnostic);
  const SeedCheck upper = check_seed(g0p, {SeedVariant::upper, L, fml, SeedStrictness::exact});
  if (!upper) throw PreconditionError("g0' is not an upper seed: " + upper.diagnostic);

  auto data = std::make_shared<Data>(Data{g0, g0p, fml, L, {}});
  for (const auto& pl : prime_levels(fm, L)) {
    const MatModQ a = reduce_level(g0, pl.pa);
    const MatModQ b = reduce_level(g0p, pl.pa);
    FactoredModulus pfm = FactoredModulus(pl.pa, {{pl.p, pl.alpha, pl.pa}}).with_level(L);
    PrimeData pd{pl, std::move(pfm), a, b, std::nullopt, std::nullopt, nullptr};
    auto degenerate = [&](const SeedCheck& c) { return std::find(c.degenerate_primes.begin(), c.degenerate_primes.end(), pl.p) != c.degenerate_primes.end(); };
    if (degenerate(lower) || degenerate(upper)) {
      pd.search = build_pair_search(a, b, pl);
    } else {
      pd.tri = triangularize_prime(a, pl);
      pd.tri_t = triangularize_prime(transpose(b), pl);
    }
    data->primes.push_back(std::move(pd));
  }
  DecompositionContext ctx;
  ctx.data_ = std::move(data);
  return ctx;
}

const MatModQ& DecompositionContext::g0() const { return data_->g0; }
const MatModQ& DecompositionContext::g0p() const { return data_->g0p; }
const FactoredModulus& DecompositionContext::modulus() const { return data_->fm; }
int DecompositionContext::L() const { return data_->L; }

MatModQ ConjugateWord::evaluate() const {
  MatModQ acc = MatModQ::identity(ctx_.dim(), ctx_.q());
  for (const auto& l : letters_) {
    const MatModQ& s = ctx_.base(l.base);
    const MatModQ b = l.sign > 0 ? s : mat_inv(s);
    acc = mat_mul(acc, conjugate(l.conjugator, b));
  }
  return acc;
}

namespace {

std::vector<Letter> compact_letters(const std::vector<Letter>& in) {
  std::vector<Letter> out;
  for (const auto& l : in) {
    if (!out.empty() && out.back().base == l.base && out.back().sign == -l.sign && out.back().conjugator == l.conjugator) {
      out.pop_back();
    } else {
      out.push_back(l);
    }
  }
  return out;
}

// Conjugators (A, B) with I + c = (A s A^{-1})^{-1} (B s B^{-1}) where s is
// the seed triangularized by `tri`.
std::pair<MatModQ, MatModQ> lower_unipotent_conjugators(const RawMat& c, const TriangularizationResult& tri, const PrimeLevel& pl) {
  const int d = c.dim();
  const RawMat& b = tri.g1.raw();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i <= j && c.at(i, j) != 0) throw PreconditionError("unipotent target must be strictly triangular");
      if (i > j && vp(c.at(i, j), pl.p, pl.alpha) < 2 * (pl.L - 1)) {
        std::ostringstream os;
        os << "entry (" << i << "," << j << ") of the unipotent target has " << pl.p << "-valuation below " << 2 * (pl.L - 1);
        throw PreconditionError(os.str());
      }
    }
  }
  const RawMat u = RawMat::identity(d, pl.pa) + c;
  const RawMat g2 = b * u;
  // y b = g2 y, y lower unipotent, solved one subdiagonal at a time.
  RawMat y = RawMat::identity(d, pl.pa);
  for (int s = 1; s < d; ++s) {
    for (int k = 0; k + s < d; ++k) {
      const int i = k + s;
      u64 r = sub_mod(g2.at(i, k), b.at(i, k), pl.pa);
      for (int m = k + 1; m < i; ++m) {
        r = add_mod(r, mul_mod(g2.at(i, m), y.at(m, k), pl.pa), pl.pa);
        r = sub_mod(r, mul_mod(y.at(i, m), b.at(m, k), pl.pa), pl.pa);
      }
      y.set(i, k, divide_by(r, sub_mod(b.at(k, k), b.at(i, i), pl.pa), pl));
    }
  }
  const MatModQ ym = MatModQ::trusted(std::move(y));
  if (!(mat_mul(mat_inv(tri.g1), conjugate(ym, tri.g1)).raw() == u)) {
    throw InternalError("unipotent conjugation equation failed to verify");
  }
  return {tri.x, mat_mul(ym, tri.x)};
}

std::vector<Letter> prime_step2(const RawMat& c, const PrimeData& pd) {
  auto [a, b] = lower_unipotent_conjugators(c, require_tri(pd.tri, pd.level), pd.level);
  return pair_letters(PairKind::lower, a, b);
}

std::vector<Letter> prime_step3(const RawMat& f, const PrimeData& pd) {
  auto [a, b] = lower_unipotent_conjugators(f.transpose(), require_tri(pd.tri_t, pd.level), pd.level);
  return pair_letters(PairKind::upper, transpose(mat_inv(b)), transpose(mat_inv(a)));
}

std::vector<Letter> prime_step4(int k, int l, u64 lambda, const PrimeData& pd) {
  const int d = pd.g0.dim();
  const u64 pa = pd.level.pa;
  const int a = std::min(k, l);
  const int b = std::max(k, l);
  const u64 la = k < l ? lambda % pa : inv_mod(lambda % pa, pa);
  RawMat block(2, pa);
  block.set(0, 0, la);
  block.set(1, 1, inv_mod(la, pa));
  const FourFactor ff = solve_four_factor(MatModQ::from_raw(block), pd.fm);

  auto single = [&](int i, int j, u64 v) {
    RawMat m(d, pa);
    m.set(i, j, v);
    return m;
  };
  std::vector<Letter> out;
  for (auto part : {prime_step3(single(a, b, ff.x), pd), prime_step2(single(b, a, ff.y), pd), prime_step3(single(a, b, ff.z), pd),
                    prime_step2(single(b, a, ff.w), pd)}) {
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::vector<Letter> search_step5(const MatModQ& gamma, const PrimeData& pd) {
  const PairSearch& ps = *pd.search;
  std::vector<std::uint32_t> ys(ps.schedule.size(), 0);
  u64 key = pack(gamma.raw());
  for (;;) {
    const auto it = ps.reached.find(key);
    if (it == ps.reached.end()) {
      std::ostringstream os;
      os << "target is not reachable within the letter budget at the degenerate prime " << pd.level.p;
      throw PreconditionError(os.str());
    }
    if (it->second.layer == 0) break;
    ys[it->second.layer - 1] = it->second.y;
    key = it->second.parent;
  }
  const MatModQ id = MatModQ::identity(gamma.dim(), ps.pa);
  std::vector<Letter> out;
  for (std::size_t k = 0; k < ps.schedule.size(); ++k) {
    auto pair = pair_letters(ps.schedule[k], id, ps.conjugators[ys[k]]);
    out.insert(out.end(), pair.begin(), pair.end());
  }
  return out;
}

std::vector<Letter> prime_step5(const MatModQ& gamma, const PrimeData& pd, Step5Trace* trace) {
  const int d = gamma.dim();
  const u64 pa = pd.level.pa;
  const u64 level = ipow(pd.level.p, 4 * (pd.level.L - 1));
  if (!is_congruent_identity(gamma, level)) {
    std::ostringstream os;
    os << "target is not congruent to I mod " << level;
    throw PreconditionError(os.str());
  }
  if (pd.search) return search_step5(gamma, pd);
  auto check_level = [&](const RawMat& r) {
    if (!is_congruent_identity(r, level)) throw InternalError("remainder left the congruence subgroup");
  };

  RawMat r = gamma.raw();
  std::vector<RawMat> clear_inv;
  for (int j = 0; j + 1 < d; ++j) {
    const u64 pivot_inv = inv_mod(r.at(j, j), pa);
    RawMat c(d, pa), c_inv(d, pa);
    for (int i = j + 1; i < d; ++i) {
      const u64 z = mul_mod(r.at(i, j), pivot_inv, pa);
      c.set(i, j, neg_mod(z, pa));
      c_inv.set(i, j, z);
    }
    r = unipotent_from(c).raw() * r;
    check_level(r);
    if (trace) trace->remainders.push_back(MatModQ::trusted(r));
    clear_inv.push_back(std::move(c_inv));
  }
  std::vector<u64> scale_inv;
  for (int j = 0; j + 1 < d; ++j) {
    const u64 mu = inv_mod(r.at(j, j), pa);
    r = make_scaling(j, j + 1, Residue::from_unsigned(mu, pa), d).raw() * r;
    check_level(r);
    if (trace) trace->remainders.push_back(MatModQ::trusted(r));
    if (r.at(j, j) != 1 % pa) throw InternalError("scaling did not normalize the pivot");
    scale_inv.push_back(inv_mod(mu, pa));
  }
  if (!r.is_upper_triangular()) throw InternalError("remainder is not upper triangular");
  for (int i = 0; i < d; ++i) {
    if (r.at(i, i) != 1 % pa) throw InternalError("remainder is not unipotent");
  }

  std::vector<Letter> out;
  auto append = [&out](std::vector<Letter> part) { out.insert(out.end(), part.begin(), part.end()); };
  for (const auto& c : clear_inv) append(prime_step2(c, pd));
  for (int j = 0; j + 1 < d; ++j) append(prime_step4(j, j + 1, scale_inv[static_cast<std::size_t>(j)], pd));
  append(prime_step3(r - RawMat::identity(d, pa), pd));
  return out;
}

ConjugateWord glue_words(const std::vector<std::vector<Letter>>& per_prime, const DecompositionContext& ctx, WordForm form) {
  const auto& first = per_prime.front();
  for (const auto& w : per_prime) {
    if (w.size() != first.size()) throw InternalError("per-prime letter schedules have different lengths");
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i].base != first[i].base || w[i].sign != first[i].sign) throw InternalError("per-prime letter schedules diverge");
    }
  }
  std::vector<Letter> letters;
  std::vector<MatModQ> parts;
  for (std::size_t i = 0; i < first.size(); ++i) {
    parts.clear();
    for (const auto& w : per_prime) parts.push_back(w[i].conjugator);
    letters.push_back({glue(parts), first[i].base, first[i].sign});
  }
  if (form == WordForm::compact) letters = compact_letters(letters);
  return ConjugateWord(ctx, std::move(letters));
}

template <typename F>
ConjugateWord per_prime_word(const DecompositionContext& ctx, WordForm form, F&& make) {
  std::vector<std::vector<Letter>> parts;
  for (const auto& pd : ctx.data().primes) parts.push_back(make(pd));
  return glue_words(parts, ctx, form);
}

void require_matrix(const RawMat& m, const DecompositionContext& ctx) {
  if (m.modulus() != ctx.q()) throw ModulusMismatch("target modulus differs from the seeds' modulus");
  if (m.dim() != ctx.dim()) throw PreconditionError("target dimension differs from the seeds' dimension");
}

}  // namespace

ConjugateWord compact(const ConjugateWord& w) { return ConjugateWord(w.context(), compact_letters(w.letters())); }

ConjugateWord step2_lower_unipotent_word(const RawMat& c, const DecompositionContext& ctx, WordForm form) {
  require_matrix(c, ctx);
  return per_prime_word(ctx, form, [&](const PrimeData& pd) { return prime_step2(reduce_level(c, pd.level.pa), pd); });
}

ConjugateWord step3_upper_unipotent_word(const RawMat& f, const DecompositionContext& ctx, WordForm form) {
  require_matrix(f, ctx);
  return per_prime_word(ctx, form, [&](const PrimeData& pd) { return prime_step3(reduce_level(f, pd.level.pa), pd); });
}

FourFactor solve_four_factor(const MatModQ& m, const FactoredModulus& fm) {
  if (m.dim() != 2) throw PreconditionError("four-factor solve needs a 2x2 matrix");
  if (m.modulus() != fm.q()) throw ModulusMismatch("matrix modulus differs from the factored modulus");
  const u64 q = fm.q();
  const u64 q2 = fm.q2();
  if (q % q2 != 0 || !is_congruent_identity(m, q2)) throw PreconditionError("four-factor target is not congruent to I mod q2");
  const u64 step = fm.radical_power(2 * (fm.level() - 1));
  // yz = e - 1, then x = (b - z)/e and w = (c - y)/e.
  const u64 e = m.at(1, 1);
  const u64 em1 = sub_mod(e, 1 % q, q);
  FourFactor f;
  if (em1 != 0) {
    f.y = step % q;
    f.z = em1 / step;
  }
  const u64 e_inv = inv_mod(e, q);
  f.x = mul_mod(sub_mod(m.at(0, 1), f.z, q), e_inv, q);
  f.w = mul_mod(sub_mod(m.at(1, 0), f.y, q), e_inv, q);
  if (!(four_factor_product(f, q) == m)) throw InternalError("four-factor solution failed to verify");
  return f;
}

MatModQ four_factor_product(const FourFactor& f, u64 q) {
  auto upper = [q](u64 v) { return MatModQ::trusted(RawMat::from_unsigned(2, q, std::vector<u64>{1, v, 0, 1})); };
  auto lower = [q](u64 v) { return MatModQ::trusted(RawMat::from_unsigned(2, q, std::vector<u64>{1, 0, v, 1})); };
  return mat_mul(mat_mul(upper(f.x), lower(f.y)), mat_mul(upper(f.z), lower(f.w)));
}

ConjugateWord step4_scaling_word(int k, int l, const Residue& lambda, const DecompositionContext& ctx, WordForm form) {
  const int d = ctx.dim();
  if (k == l || k < 0 || l < 0 || k >= d || l >= d) throw PreconditionError("scaling indices must be distinct and in range");
  if (lambda.modulus() != ctx.q()) throw ModulusMismatch("scaling factor modulus differs from the seeds' modulus");
  const u64 q2 = ctx.modulus().q2();
  if (lambda.value() % q2 != 1 % q2) {
    std::ostringstream os;
    os << "scaling factor " << lambda.value() << " is not congruent to 1 mod " << q2;
    throw PreconditionError(os.str());
  }
  return per_prime_word(ctx, form, [&](const PrimeData& pd) { return prime_step4(k, l, lambda.value() % pd.level.pa, pd); });
}

ConjugateWord step5_prime_power_decompose(const MatModQ& gamma, const DecompositionContext& ctx, Step5Trace* trace, WordForm form) {
  require_matrix(gamma.raw(), ctx);
  if (ctx.data().primes.size() != 1) throw PreconditionError("step 5 needs a prime-power modulus");
  return per_prime_word(ctx, form, [&](const PrimeData& pd) { return prime_step5(gamma, pd, trace); });
}

std::vector<std::vector<Letter>> step6_per_prime_words(const MatModQ& gamma, const DecompositionContext& ctx) {
  require_matrix(gamma.raw(), ctx);
  const u64 q2 = ctx.modulus().q2();
  if (!is_congruent_identity(gamma, q2)) {
    std::ostringstream os;
    os << "target is not congruent to I mod " << q2;
    throw PreconditionError(os.str());
  }
  std::vector<std::vector<Letter>> parts;
  for (const auto& pd : ctx.data().primes) parts.push_back(prime_step5(reduce_level(gamma, pd.level.pa), pd, nullptr));
  return parts;
}

ConjugateWord step6_decompose(const MatModQ& gamma, const DecompositionContext& ctx, WordForm form) {
  return glue_words(step6_per_prime_words(gamma, ctx), ctx, form);
}

namespace {

VerifyResult verify_letters(const std::vector<Letter>& letters, const MatModQ& g0, const MatModQ& g0p, u64 depth, const MatModQ& target) {
  const int d = g0.dim();
  const u64 q = g0.modulus();
  std::ostringstream os;
  if (target.modulus() != q || target.dim() != d) return {false, "target shape or modulus differs from the word's context"};
  if (letters.size() > static_cast<std::size_t>(word_length_bound(d))) {
    os << "length " << letters.size() << " exceeds the bound " << word_length_bound(d);
    return {false, os.str()};
  }
  MatModQ acc = MatModQ::identity(d, q);
  const MatModQ g0_inv = mat_inv(g0), g0p_inv = mat_inv(g0p);
  for (std::size_t i = 0; i < letters.size(); ++i) {
    const Letter& l = letters[i];
    if (l.conjugator.modulus() != q || l.conjugator.dim() != d) {
      os << "letter " << i << " has a conjugator of the wrong shape";
      return {false, os.str()};
    }
    if (l.sign != 1 && l.sign != -1) {
      os << "letter " << i << " has sign " << l.sign;
      return {false, os.str()};
    }
    if (!is_congruent_identity(l.conjugator, depth)) {
      os << "conjugator depth: letter " << i << " is not congruent to I mod " << depth;
      return {false, os.str()};
    }
    const MatModQ& b = l.base == Base::g0 ? (l.sign > 0 ? g0 : g0_inv) : (l.sign > 0 ? g0p : g0p_inv);
    acc = mat_mul(acc, conjugate(l.conjugator, b));
  }
  if (!(acc == target)) return {false, "evaluation differs from the target"};
  return {true, {}};
}

}  // namespace

VerifyResult verify_word(const ConjugateWord& word, const MatModQ& target) {
  const auto& ctx = word.context();
  return verify_letters(word.letters(), ctx.g0(), ctx.g0p(), ctx.modulus().radical_power(ctx.L() - 1), target);
}

VerifyResult verify_reduction(const ConjugateWord& word, u64 m, const MatModQ& target_mod_m) {
  const auto& ctx = word.context();
  if (m == 0 || ctx.q() % m != 0) throw PreconditionError("reduction modulus must divide q");
  u64 depth = 1;
  for (const auto& f : ctx.modulus().factors()) {
    if (m % f.p == 0) depth *= ipow(f.p, ctx.L() - 1);
  }
  std::vector<Letter> reduced;
  for (const auto& l : word.letters()) reduced.push_back({reduce_level(l.conjugator, m), l.base, l.sign});
  return verify_letters(reduced, reduce_level(ctx.g0(), m), reduce_level(ctx.g0p(), m), depth, target_mod_m);
}

namespace {

u64 uniform_below(u64 n, std::mt19937_64& rng) { return std::uniform_int_distribution<u64>(0, n - 1)(rng); }

u64 uniform_unit(u64 p, u64 pa, std::mt19937_64& rng) {
  for (;;) {
    const u64 v = uniform_below(pa, rng);
    if (v % p != 0) return v;
  }
}

// Sets a(0,0) so that det(a) = 1; false when the (0,0) cofactor is not a unit.
bool fix_determinant(RawMat& a) {
  const u64 q = a.modulus();
  a.set(0, 0, 0);
  const RawMat adj = a.adjugate();
  if (!is_unit_mod(adj.at(0, 0), q)) return false;
  u64 s = 0;
  for (int j = 1; j < a.dim(); ++j) s = add_mod(s, mul_mod(a.at(0, j), adj.at(j, 0), q), q);
  a.set(0, 0, mul_mod(sub_mod(1 % q, s, q), inv_mod(adj.at(0, 0), q), q));
  return true;
}

}  // namespace

MatModQ sample_seed(int d, const FactoredModulus& fm, SeedVariant variant, int L, std::mt19937_64& rng) {
  require_seed_level(fm, L);
  if (d < 2 || d > kMaxDim) throw PreconditionError("dimension out of range");
  fm.with_level(L).require_units_for_dimension(d);
  // Off-diagonal entries get exact valuations by construction; only the
  // determinant fix can spoil the diagonal. A prime where no draw has a
  // diagonal distinct mod p^L (p = 2, L = 2, d = 2) settles for units.
  constexpr int kDistinctAttempts = 2000;
  std::vector<MatModQ> parts;
  for (const auto& f : fm.factors()) {
    const FactoredModulus pfm = FactoredModulus(f.value, {f}).with_level(L);
    const SeedConditions cond{variant, L, pfm, SeedStrictness::exact};
    for (int attempt = 0;; ++attempt) {
      if (attempt > 100000) throw InternalError("seed sampling did not converge");
      RawMat a(d, f.value);
      for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
          if (i == j) {
            a.set(i, j, uniform_unit(f.p, f.value, rng));
          } else {
            const int k = ((i > j) == (variant == SeedVariant::lower)) ? L - 1 : 2 * (L - 1);
            const u64 pk = ipow(f.p, k);
            a.set(i, j, mul_mod(pk, uniform_unit(f.p, f.value / pk, rng), f.value));
          }
        }
      }
      if (!fix_determinant(a) || a.at(0, 0) % f.p == 0) continue;
      MatModQ m = MatModQ::from_raw(std::move(a));
      if (attempt >= kDistinctAttempts || check_seed(m, cond)) {
        parts.push_back(std::move(m));
        break;
      }
    }
  }
  MatModQ out = glue(parts);
  const SeedCheck sc = check_seed(out, {variant, L, fm.with_level(L), SeedStrictness::exact});
  if (!sc) throw PreconditionError("no seed found: " + sc.diagnostic);
  return out;
}

MatModQ sample_congruence_element(int d, u64 q, u64 m, std::mt19937_64& rng) {
  if (m == 0 || q % m != 0) throw PreconditionError("level must divide the modulus");
  for (u64 p : factorize_any(q).primes()) {
    if (m % p != 0) throw PreconditionError("every prime of the modulus must divide the level");
  }
  RawMat a(d, q);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const u64 v = mul_mod(m % q, uniform_below(q / m, rng), q);
      a.set(i, j, i == j ? add_mod(v, 1 % q, q) : v);
    }
  }
  if (!fix_determinant(a)) throw InternalError("cofactor of a congruence element is not a unit");
  return MatModQ::from_raw(std::move(a));
}

json word_to_json(const ConjugateWord& w) {
  const auto& ctx = w.context();
  json letters = json::array();
  for (const auto& l : w.letters()) {
    letters.push_back({{"conjugator", matrix_to_json(l.conjugator.raw())}, {"base", l.base == Base::g0 ? "g0" : "g0p"}, {"sign", l.sign}});
  }
  json factors = json::array();
  for (const auto& f : ctx.modulus().factors()) factors.push_back({f.p, f.alpha});
  return {{"letters", letters},
          {"context",
           {{"g0", matrix_to_json(ctx.g0().raw())},
            {"g0p", matrix_to_json(ctx.g0p().raw())},
            {"modulus", ctx.q()},
            {"factors", factors},
            {"L", ctx.L()}}}};
}

ConjugateWord word_from_json(const json& j) {
  try {
    const json& c = j.at("context");
    const u64 q = c.at("modulus").get<u64>();
    const int L = c.at("L").get<int>();
    const RawMat g0 = matrix_from_json(c.at("g0"), q);
    const RawMat g0p = matrix_from_json(c.at("g0p"), q);
    DecompositionContext ctx = DecompositionContext::make(MatModQ::from_raw(g0), MatModQ::from_raw(g0p), L);
    std::vector<Letter> letters;
    for (const auto& l : j.at("letters")) {
      const std::string base = l.at("base").get<std::string>();
      if (base != "g0" && base != "g0p") throw ConfigError("letter base must be g0 or g0p");
      const int sign = l.at("sign").get<int>();
      if (sign != 1 && sign != -1) throw ConfigError("letter sign must be 1 or -1");
      RawMat x = matrix_from_json(l.at("conjugator"), q);
      if (x.dim() != ctx.dim()) throw ConfigError("conjugator dimension differs from the seeds");
      letters.push_back({MatModQ::from_raw(std::move(x)), base == "g0" ? Base::g0 : Base::g0p, sign});
    }
    return ConjugateWord(std::move(ctx), std::move(letters));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed word: ") + e.what());
  }
}

}  // namespace logdiam
