#include "logdiam/certify.hpp"

#include <algorithm>
#include <sstream>

namespace logdiam {

namespace {

bool power_divides(const FactoredModulus& fm, int k) {
  return std::all_of(fm.factors().begin(), fm.factors().end(), [k](const PrimePower& f) { return f.alpha >= k; });
}

/// q0^k, which must divide q.
u64 level_mod(const FactoredModulus& fm, int k) {
  if (!power_divides(fm, k)) {
    throw PreconditionError("q0^" + std::to_string(k) + " does not divide q = " + std::to_string(fm.q()));
  }
  return fm.radical_power(k);
}

bool vec_zero_mod(const std::vector<u64>& v, u64 m) {
  return std::all_of(v.begin(), v.end(), [m](u64 x) { return x % m == 0; });
}

/// v = (q0^{L-1}, 0, ..., 0) mod q0^L.
bool is_v0_shape(const std::vector<u64>& v, const FactoredModulus& fm) {
  const int L = fm.level();
  const u64 m = level_mod(fm, L);
  if (v.empty() || v[0] % m != fm.radical_power(L - 1) % m) return false;
  return std::all_of(v.begin() + 1, v.end(), [m](u64 x) { return x % m == 0; });
}

std::vector<u64> vec_sub(const std::vector<u64>& a, const std::vector<u64>& b, u64 q) {
  std::vector<u64> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = sub_mod(a[i], b[i], q);
  return out;
}

std::string describe(const MatModQ& m) { return to_string(m.raw()); }

std::string describe(const std::vector<u64>& v) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  os << ')';
  return os.str();
}

SeedConditions seed_conditions(SeedVariant variant, const FactoredModulus& fm) { return {variant, fm.level(), fm}; }

void check_word(const GenSet& s, u64 q, const KitElement& k, const std::string& name, std::vector<std::string>& out) {
  if (evaluate_word(s, q, k.word) != k.element) out.push_back(name + ": word does not evaluate to the element");
}

void check_seed_into(const MatModQ& m, SeedVariant v, const FactoredModulus& fm, const std::string& name, std::vector<std::string>& out) {
  const SeedCheck c = check_seed(m, seed_conditions(v, fm));
  if (!c) out.push_back(name + ": " + c.diagnostic);
}

const MatModQ& component(const GroupElement& g, int k) {
  return std::get<ProductModQ>(g).components[static_cast<std::size_t>(k)];
}

/// Lifts a conjugate word over one SL component to a word in S: each
/// letter x s^{+-1} x^{-1} becomes w_x w_s^{+-1} w_x^{-1}.
struct Lifted {
  CayleyWord word;
  std::size_t max_conjugator = 0;
};

Lifted lift(const ConjugateWord& cw, const DistanceOracle& oracle, const GenSet& s, const CayleyWord& g0_word, const CayleyWord& g0p_word) {
  Lifted out;
  const CayleyWord g0_inv = inverse_word(s, g0_word);
  const CayleyWord g0p_inv = inverse_word(s, g0p_word);
  for (const auto& l : cw.letters()) {
    const CayleyWord x = oracle.query(l.conjugator).word;
    out.max_conjugator = std::max(out.max_conjugator, x.length());
    out.word.append(x);
    if (l.base == Base::g0) out.word.append(l.sign > 0 ? g0_word : g0_inv);
    else out.word.append(l.sign > 0 ? g0p_word : g0p_inv);
    out.word.append(inverse_word(s, x));
  }
  return out;
}

LengthAccount account(int N, std::vector<LengthTerm> terms, std::size_t length) {
  LengthAccount a;
  a.N = N;
  a.terms = std::move(terms);
  a.length = length;
  for (const auto& t : a.terms) a.bound += t.coefficient * t.measured;
  return a;
}

nlohmann::json kit_element_json(const KitElement& k) { return {{"element", element_to_json(k.element)}, {"word", k.word.indices}}; }

KitElement kit_element_from_json(const nlohmann::json& j, const GenSet& s, u64 q, const std::string& name) {
  if (!j.is_object() || !j.contains("word")) throw ConfigError("kit element " + name + " needs a \"word\"");
  CayleyWord w = cayley_word_from_json(nlohmann::json{{"indices", j["word"]}}, s);
  KitElement k{evaluate_word(s, q, w), w};
  if (j.contains("element") && element_from_json(j["element"], s.kind(), s.dims(), q) != k.element) {
    throw ConfigError("kit element " + name + " does not match its word");
  }
  return k;
}

FactoredModulus kit_modulus(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("q") || !j.contains("L")) throw ConfigError("kit needs \"q\" and \"L\"");
  return factorize(j["q"].get<u64>()).with_level(j["L"].get<int>());
}

SearchResult kernel_search(const GenSet& s, u64 q, const CosetKey& key, const ElementPredicate& pred, const SearchOptions& opts) {
  return search_in_kernel(s, q, key, pred, opts);
}

void require_found(const std::vector<std::pair<std::string, const SearchResult*>>& results) {
  std::string missing, found;
  for (const auto& [name, r] : results) {
    (r->found ? found : missing) += (r->found ? found : missing).empty() ? name : ", " + name;
  }
  if (!missing.empty()) {
    throw BudgetError("kit search ran out of budget; missing: " + missing + (found.empty() ? "" : "; found: " + found));
  }
}

}  // namespace

// ---------------------------------------------------------------- identities

AffineModQ key_identity(const MatModQ& T, const std::vector<u64>& v, const std::vector<u64>& v0) {
  const u64 q = T.modulus();
  const AffineModQ tv = AffineModQ::make(T, v);
  const AffineModQ lhs = affine_mul(affine_mul(affine_inv(tv), AffineModQ::make(MatModQ::identity(T.dim(), q), v0)), tv);
  const AffineModQ rhs = AffineModQ::make(MatModQ::identity(T.dim(), q), mat_inv(T).raw().apply(v0));
  if (lhs != rhs) throw InternalError("key identity fails: the affine product law is inconsistent");
  return lhs;
}

TranslationPair solve_translation_pair(const std::vector<u64>& v, const std::vector<u64>& v0, const FactoredModulus& fm) {
  const int L = fm.level();
  const u64 q = fm.q();
  const std::size_t d = v0.size();
  if (d < 2 || v.size() != d) throw PreconditionError("translation pair needs vectors of one length d >= 2");
  const u64 deep = level_mod(fm, 5 * (L - 1));
  const u64 step = fm.radical_power(L - 1);
  if (!vec_zero_mod(v, deep)) throw PreconditionError("v is not 0 mod q0^{5(L-1)} = " + std::to_string(deep));
  if (!is_v0_shape(v0, fm)) throw PreconditionError("v0 is not (q0^{L-1}, 0, ..., 0) mod q0^L");

  // a = v0[0] = q0^{L-1} u with u a unit; x / a for x = 0 mod q0^{L-1} is
  // (x / q0^{L-1}) u^{-1}.
  const u64 u = (v0[0] / step) % q;
  const u64 u_inv = inv_mod(u, q);
  auto div_a = [&](u64 x) {
    if (x % step != 0) throw InternalError("division by the first coordinate of v0 is not exact");
    return mul_mod(x / step, u_inv, q);
  };

  // A = D C: C = I + c e_1^T with c_1 = 0 shifts coordinates 2..d, D =
  // diag(lambda, lambda^{-1}, 1, ...) scales the first coordinate.
  const u64 lambda = add_mod(1, div_a(v[0]), q);
  const u64 lambda_inv = inv_mod(lambda, q);
  std::vector<u64> c(d, 0);
  // second coordinate: lambda^{-1}(v0_2 + a c_2) = v0_2 + v_2
  c[1] = div_a(sub_mod(mul_mod(lambda, add_mod(v0[1], v[1], q), q), v0[1], q));
  for (std::size_t j = 2; j < d; ++j) c[j] = div_a(v[j]);

  const int dd = static_cast<int>(d);
  RawMat C = RawMat::identity(dd, q);
  for (std::size_t j = 1; j < d; ++j) C.set(static_cast<int>(j), 0, c[j]);
  RawMat D = RawMat::identity(dd, q);
  D.set(0, 0, lambda);
  D.set(1, 1, lambda_inv);
  TranslationPair out{MatModQ::from_raw(D * C), MatModQ::identity(dd, q)};

  const u64 shallow = level_mod(fm, 4 * (L - 1));
  const auto diff = vec_sub(out.A.raw().apply(v0), out.B.raw().apply(v0), q);
  if (diff != v || !is_congruent_identity(out.A, shallow)) {
    throw InternalError("translation pair construction failed for v = " + describe(v) + ", v0 = " + describe(v0));
  }
  return out;
}

// ---------------------------------------------------------------- kits

std::vector<std::string> check_sa_kit(const SaKit& kit, const GenSet& s) {
  std::vector<std::string> out;
  if (s.kind() != GroupKind::SA) return {"generating set is not of kind SA"};
  const auto& fm = kit.fm;
  const int L = fm.level();
  const u64 q = fm.q();
  const u64 deep = level_mod(fm, 5 * (L - 1));
  const u64 shallow = level_mod(fm, 4 * (L - 1));
  check_word(s, q, kit.t1, "t1", out);
  check_word(s, q, kit.t1p, "t1'", out);
  check_word(s, q, kit.t2, "t2", out);
  const auto& t1 = std::get<AffineModQ>(kit.t1.element);
  const auto& t1p = std::get<AffineModQ>(kit.t1p.element);
  const auto& t2 = std::get<AffineModQ>(kit.t2.element);
  check_seed_into(t1.linear, SeedVariant::lower, fm, "T1", out);
  check_seed_into(t1p.linear, SeedVariant::upper, fm, "T1'", out);
  if (!vec_zero_mod(t1.trans, deep)) out.push_back("v1 is not 0 mod " + std::to_string(deep));
  if (!vec_zero_mod(t1p.trans, deep)) out.push_back("v1' is not 0 mod " + std::to_string(deep));
  if (!is_congruent_identity(t2.linear, shallow)) out.push_back("T2 is not I mod " + std::to_string(shallow));
  if (!is_v0_shape(t2.trans, fm)) out.push_back("v2 = " + describe(t2.trans) + " is not (q0^{L-1}, 0, ..., 0) mod q0^L");
  return out;
}

std::vector<std::string> check_product_kit(const ProductKit& kit, const GenSet& s) {
  std::vector<std::string> out;
  if (s.kind() != GroupKind::product || s.dims().size() != 2 || s.dims()[0] != s.dims()[1]) {
    return {"generating set is not a product of two SL_d of equal dimension"};
  }
  const auto& fm = kit.fm;
  const u64 q = fm.q();
  const u64 deep = level_mod(fm, 5 * (fm.level() - 1));
  const std::pair<const KitElement*, std::string> named[] = {{&kit.p1, "(P1,Q1)"}, {&kit.p1p, "(P1',Q1')"}, {&kit.p2, "(P2,Q2)"}, {&kit.p2p, "(P2',Q2')"}};
  for (const auto& [k, name] : named) check_word(s, q, *k, name, out);
  check_seed_into(component(kit.p1.element, 0), SeedVariant::lower, fm, "P1", out);
  check_seed_into(component(kit.p1p.element, 0), SeedVariant::upper, fm, "P1'", out);
  check_seed_into(component(kit.p2.element, 1), SeedVariant::lower, fm, "Q2", out);
  check_seed_into(component(kit.p2p.element, 1), SeedVariant::upper, fm, "Q2'", out);
  const std::string m = std::to_string(deep);
  if (!is_congruent_identity(component(kit.p1.element, 1), deep)) out.push_back("Q1 is not I mod " + m);
  if (!is_congruent_identity(component(kit.p1p.element, 1), deep)) out.push_back("Q1' is not I mod " + m);
  if (!is_congruent_identity(component(kit.p2.element, 0), deep)) out.push_back("P2 is not I mod " + m);
  if (!is_congruent_identity(component(kit.p2p.element, 0), deep)) out.push_back("P2' is not I mod " + m);
  return out;
}

SaKit find_sa_kit(const GenSet& s, const FactoredModulus& fm, const SearchOptions& opts) {
  if (s.kind() != GroupKind::SA) throw PreconditionError("SA kit needs an SA generating set");
  const int L = fm.level();
  const u64 q = fm.q();
  const u64 deep = level_mod(fm, 5 * (L - 1));
  const u64 shallow = level_mod(fm, 4 * (L - 1));
  auto trans_key = [deep](const GroupElement& g) {
    auto t = std::get<AffineModQ>(g).trans;
    for (auto& x : t) x %= deep;
    return t;
  };
  auto seed_pred = [&](SeedVariant v) {
    return [&fm, v, deep](const GroupElement& g) {
      const auto& a = std::get<AffineModQ>(g);
      return vec_zero_mod(a.trans, deep) && static_cast<bool>(check_seed(a.linear, seed_conditions(v, fm)));
    };
  };
  auto linear_key = [shallow](const GroupElement& g) {
    const auto data = reduce_level(std::get<AffineModQ>(g).linear, shallow).raw().data();
    return std::vector<u64>(data.begin(), data.end());
  };
  auto t2_pred = [&fm, shallow](const GroupElement& g) {
    const auto& a = std::get<AffineModQ>(g);
    return is_congruent_identity(a.linear, shallow) && is_v0_shape(a.trans, fm);
  };
  const auto r1 = kernel_search(s, q, trans_key, seed_pred(SeedVariant::lower), opts);
  const auto r1p = kernel_search(s, q, trans_key, seed_pred(SeedVariant::upper), opts);
  const auto r2 = kernel_search(s, q, linear_key, t2_pred, opts);
  require_found({{"t1", &r1}, {"t1'", &r1p}, {"t2", &r2}});
  return SaKit{fm, {*r1.element, r1.word}, {*r1p.element, r1p.word}, {*r2.element, r2.word}};
}

ProductKit find_product_kit(const GenSet& s, const FactoredModulus& fm, const SearchOptions& opts) {
  if (s.kind() != GroupKind::product || s.dims().size() != 2 || s.dims()[0] != s.dims()[1]) {
    throw PreconditionError("product kit needs SL_d x SL_d");
  }
  const u64 q = fm.q();
  const u64 deep = level_mod(fm, 5 * (fm.level() - 1));
  auto key_of = [deep](int k) {
    return [deep, k](const GroupElement& g) {
      const auto data = reduce_level(component(g, k), deep).raw().data();
      return std::vector<u64>(data.begin(), data.end());
    };
  };
  // seed in component `seed_at`, identity mod q0^{5(L-1)} in the other
  auto pred = [&fm, deep](int seed_at, SeedVariant v) {
    return [&fm, deep, seed_at, v](const GroupElement& g) {
      return is_congruent_identity(component(g, 1 - seed_at), deep) &&
             static_cast<bool>(check_seed(component(g, seed_at), seed_conditions(v, fm)));
    };
  };
  const auto r1 = kernel_search(s, q, key_of(1), pred(0, SeedVariant::lower), opts);
  const auto r1p = kernel_search(s, q, key_of(1), pred(0, SeedVariant::upper), opts);
  const auto r2 = kernel_search(s, q, key_of(0), pred(1, SeedVariant::lower), opts);
  const auto r2p = kernel_search(s, q, key_of(0), pred(1, SeedVariant::upper), opts);
  require_found({{"(P1,Q1)", &r1}, {"(P1',Q1')", &r1p}, {"(P2,Q2)", &r2}, {"(P2',Q2')", &r2p}});
  return ProductKit{fm, {*r1.element, r1.word}, {*r1p.element, r1p.word}, {*r2.element, r2.word}, {*r2p.element, r2p.word}};
}

nlohmann::json kit_to_json(const SaKit& kit) {
  return {{"kind", "SA"},
          {"q", kit.fm.q()},
          {"L", kit.fm.level()},
          {"t1", kit_element_json(kit.t1)},
          {"t1p", kit_element_json(kit.t1p)},
          {"t2", kit_element_json(kit.t2)}};
}

nlohmann::json kit_to_json(const ProductKit& kit) {
  return {{"kind", "product"},
          {"q", kit.fm.q()},
          {"L", kit.fm.level()},
          {"p1", kit_element_json(kit.p1)},
          {"p1p", kit_element_json(kit.p1p)},
          {"p2", kit_element_json(kit.p2)},
          {"p2p", kit_element_json(kit.p2p)}};
}

SaKit sa_kit_from_json(const nlohmann::json& j, const GenSet& s) {
  const auto fm = kit_modulus(j);
  for (const char* k : {"t1", "t1p", "t2"})
    if (!j.contains(k)) throw ConfigError(std::string("SA kit is missing \"") + k + "\"");
  return SaKit{fm, kit_element_from_json(j["t1"], s, fm.q(), "t1"), kit_element_from_json(j["t1p"], s, fm.q(), "t1p"),
               kit_element_from_json(j["t2"], s, fm.q(), "t2")};
}

ProductKit product_kit_from_json(const nlohmann::json& j, const GenSet& s) {
  const auto fm = kit_modulus(j);
  for (const char* k : {"p1", "p1p", "p2", "p2p"})
    if (!j.contains(k)) throw ConfigError(std::string("product kit is missing \"") + k + "\"");
  return ProductKit{fm, kit_element_from_json(j["p1"], s, fm.q(), "p1"), kit_element_from_json(j["p1p"], s, fm.q(), "p1p"),
                    kit_element_from_json(j["p2"], s, fm.q(), "p2"), kit_element_from_json(j["p2p"], s, fm.q(), "p2p")};
}

nlohmann::json certificate_to_json(const Certificate& c) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : c.account.terms) {
    terms.push_back({{"term", t.name}, {"coefficient", t.coefficient}, {"measured", t.measured}, {"product", t.coefficient * t.measured}});
  }
  return {{"target", element_to_json(c.target)},
          {"word", c.word.indices},
          {"length", c.word.length()},
          {"accounting", {{"N", c.account.N}, {"terms", terms}, {"bound", c.account.bound}, {"within", c.account.within()}}},
          {"inheritance", c.inheritance}};
}

// ---------------------------------------------------------------- Case 1

struct SaCertifier::Impl {
  GenSet s;
  SaKit kit;
  DecompositionContext ctx;
  DistanceOracle oracle;
  CayleyWord v0_word;
  std::vector<u64> v0;
  std::size_t c1 = 0;  // longest conjugator word inside v0_word
};

SaCertifier::SaCertifier(GenSet s, SaKit kit, const CertifyOptions& opts) {
  if (const auto bad = check_sa_kit(kit, s); !bad.empty()) {
    std::string msg = "SA kit violates its conditions:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw PreconditionError(msg);
  }
  const auto& t1 = std::get<AffineModQ>(kit.t1.element);
  const auto& t1p = std::get<AffineModQ>(kit.t1p.element);
  const auto& t2 = std::get<AffineModQ>(kit.t2.element);
  const int L = kit.fm.level();
  const u64 q = kit.fm.q();
  auto ctx = DecompositionContext::make(t1.linear, t1p.linear, L);
  DistanceOracle oracle(project_component(s, 0), q, opts.oracle_ball, opts.bfs);

  // prod x (T1, v1)^{+-1} x^{-1} = (T2^{-1}, *), then (T2, v2) closes it to (I, v0)
  const auto lifted = lift(step6_decompose(mat_inv(t2.linear), ctx), oracle, s, kit.t1.word, kit.t1p.word);
  CayleyWord w = lifted.word;
  w.append(kit.t2.word);
  const auto e = std::get<AffineModQ>(evaluate_word(s, q, w));
  if (e.linear != MatModQ::identity(t2.dim(), q)) throw InternalError("(I, v0) word has a nontrivial linear part");
  if (!is_v0_shape(e.trans, kit.fm)) {
    throw PreconditionError("v0 = " + describe(e.trans) + " lost the (q0^{L-1}, 0, ..., 0) shape; the conjugator words carry translations");
  }
  impl_ = std::make_shared<Impl>(Impl{std::move(s), std::move(kit), std::move(ctx), std::move(oracle), std::move(w), e.trans, lifted.max_conjugator});
}

const std::vector<u64>& SaCertifier::v0() const { return impl_->v0; }
const CayleyWord& SaCertifier::v0_word() const { return impl_->v0_word; }

Certificate SaCertifier::certify(const AffineModQ& target) const {
  const auto& im = *impl_;
  const auto& fm = im.kit.fm;
  const int L = fm.level();
  const u64 q = fm.q();
  if (target.modulus() != q || target.dim() != im.s.dim()) throw PreconditionError("target does not live in SA_d(Z/qZ) of the kit");
  const u64 shallow = level_mod(fm, 4 * (L - 1));
  const u64 deep = level_mod(fm, 5 * (L - 1));
  if (!is_congruent_identity(target.linear, shallow)) {
    throw PreconditionError("target linear part is not I mod q0^{4(L-1)} = " + std::to_string(shallow));
  }
  std::size_t c1 = im.c1;

  // linear part: (T, u) as a product of conjugates of the seed elements
  Certificate cert{target, {}, {}, {}};
  const auto lifted = lift(step6_decompose(target.linear, im.ctx), im.oracle, im.s, im.kit.t1.word, im.kit.t1p.word);
  c1 = std::max(c1, lifted.max_conjugator);
  cert.word = lifted.word;
  const auto head = std::get<AffineModQ>(evaluate_word(im.s, q, cert.word));
  const auto rest = affine_mul(affine_inv(head), target);
  if (rest.linear != MatModQ::identity(target.dim(), q)) throw InternalError("linear decomposition missed its target");

  // translation: (I, v') = (I, A v0)(I, B v0)^{-1}, each conjugated from (I, v0)
  if (std::any_of(rest.trans.begin(), rest.trans.end(), [](u64 x) { return x != 0; })) {
    if (!vec_zero_mod(rest.trans, deep)) {
      throw PreconditionError("translation remainder " + describe(rest.trans) + " is not 0 mod q0^{5(L-1)} = " + std::to_string(deep));
    }
    const auto pair = solve_translation_pair(rest.trans, im.v0, fm);
    const CayleyWord wa = im.oracle.query(pair.A).word;
    const CayleyWord wb = im.oracle.query(pair.B).word;
    c1 = std::max({c1, wa.length(), wb.length()});
    cert.word.append(wa);
    cert.word.append(im.v0_word);
    cert.word.append(inverse_word(im.s, wa));
    cert.word.append(wb);
    cert.word.append(inverse_word(im.s, im.v0_word));
    cert.word.append(inverse_word(im.s, wb));
  }
  if (std::get<AffineModQ>(evaluate_word(im.s, q, cert.word)) != target) throw InternalError("SA certificate does not evaluate to its target");

  const std::size_t N = static_cast<std::size_t>(word_length_bound(target.dim()));
  const std::size_t c2 = std::max({im.kit.t1.word.length(), im.kit.t1p.word.length(), im.kit.t2.word.length()});
  cert.account = account(static_cast<int>(N), {{"c1", 4 + 6 * N, c1}, {"c2", 2 + 3 * N, c2}}, cert.word.length());
  return cert;
}

Certificate assemble_sa_certificate(const AffineModQ& target, const SaKit& kit, const GenSet& s, const CertifyOptions& opts) {
  return SaCertifier(s, kit, opts).certify(target);
}

// ---------------------------------------------------------------- Case 2

struct ProductCertifier::Impl {
  GenSet s;
  ProductKit kit;
  DistanceOracle pr1, pr2;
  // (I, Q3), (I, Q3'), (P3, I), (P3', I) with their words
  MatModQ q3, q3p, p3, p3p;
  CayleyWord q3_word, q3p_word, p3_word, p3p_word;
  DecompositionContext ctx_q, ctx_p;  // seeds (Q3, Q3') and (P3, P3')
  std::size_t c3 = 0, c4 = 0;
  std::vector<std::string> inheritance;
};

namespace {

struct Derived {
  MatModQ seed;
  CayleyWord word;
  std::size_t max_conjugator = 0;
};

/// prod x (K, *)^{+-1} x^{-1} = (cancel^{-1}, *) in component `work`, then
/// the closing kit element leaves (I, seed) with the seed in the other
/// component.
Derived derive_seed(const GenSet& s, u64 q, int work, const MatModQ& cancel, const DecompositionContext& ctx, const DistanceOracle& oracle,
                    const CayleyWord& g0_word, const CayleyWord& g0p_word, const CayleyWord& closing) {
  const auto lifted = lift(step6_decompose(mat_inv(cancel), ctx), oracle, s, g0_word, g0p_word);
  Derived out{MatModQ::identity(s.dim(), q), lifted.word, lifted.max_conjugator};
  out.word.append(closing);
  const auto e = evaluate_word(s, q, out.word);
  if (component(e, work) != MatModQ::identity(s.dim(), q)) throw InternalError("derived seed word does not clear its component");
  out.seed = component(e, 1 - work);
  return out;
}

void inherit(const MatModQ& m, SeedVariant v, const FactoredModulus& fm, const std::string& name, std::vector<std::string>& log) {
  const SeedCheck c = check_seed(m, seed_conditions(v, fm));
  if (!c) throw InheritanceFailure(name + " fails the " + (v == SeedVariant::lower ? "lower" : "upper") + " seed conditions: " + c.diagnostic +
                                   "\n  " + name + " = " + describe(m));
  log.push_back(name + " " + (v == SeedVariant::lower ? "lower" : "upper") + ": ok");
}

}  // namespace

ProductCertifier::ProductCertifier(GenSet s, ProductKit kit, const CertifyOptions& opts) {
  if (const auto bad = check_product_kit(kit, s); !bad.empty()) {
    std::string msg = "product kit violates its conditions:";
    for (const auto& b : bad) msg += "\n  " + b;
    throw PreconditionError(msg);
  }
  const auto& fm = kit.fm;
  const int L = fm.level();
  const u64 q = fm.q();
  DistanceOracle pr1(project_component(s, 0), q, opts.oracle_ball, opts.bfs);
  DistanceOracle pr2(project_component(s, 1), q, opts.oracle_ball, opts.bfs);
  const auto ctx1 = DecompositionContext::make(component(kit.p1.element, 0), component(kit.p1p.element, 0), L);
  const auto ctx2 = DecompositionContext::make(component(kit.p2.element, 1), component(kit.p2p.element, 1), L);

  std::vector<std::string> log;
  const auto q3 = derive_seed(s, q, 0, component(kit.p2.element, 0), ctx1, pr1, kit.p1.word, kit.p1p.word, kit.p2.word);
  const auto q3p = derive_seed(s, q, 0, component(kit.p2p.element, 0), ctx1, pr1, kit.p1.word, kit.p1p.word, kit.p2p.word);
  const auto p3 = derive_seed(s, q, 1, component(kit.p1.element, 1), ctx2, pr2, kit.p2.word, kit.p2p.word, kit.p1.word);
  const auto p3p = derive_seed(s, q, 1, component(kit.p1p.element, 1), ctx2, pr2, kit.p2.word, kit.p2p.word, kit.p1p.word);
  inherit(q3.seed, SeedVariant::lower, fm, "Q3", log);
  inherit(q3p.seed, SeedVariant::upper, fm, "Q3'", log);
  inherit(p3.seed, SeedVariant::lower, fm, "P3", log);
  inherit(p3p.seed, SeedVariant::upper, fm, "P3'", log);

  impl_ = std::make_shared<Impl>(Impl{std::move(s), std::move(kit), std::move(pr1), std::move(pr2), q3.seed, q3p.seed, p3.seed, p3p.seed,
                                      q3.word, q3p.word, p3.word, p3p.word, DecompositionContext::make(q3.seed, q3p.seed, L),
                                      DecompositionContext::make(p3.seed, p3p.seed, L),
                                      std::max(q3.max_conjugator, q3p.max_conjugator), std::max(p3.max_conjugator, p3p.max_conjugator),
                                      std::move(log)});
}

const MatModQ& ProductCertifier::q3() const { return impl_->q3; }
const MatModQ& ProductCertifier::q3p() const { return impl_->q3p; }
const MatModQ& ProductCertifier::p3() const { return impl_->p3; }
const MatModQ& ProductCertifier::p3p() const { return impl_->p3p; }
const std::vector<std::string>& ProductCertifier::inheritance() const { return impl_->inheritance; }

Certificate ProductCertifier::certify(const ProductModQ& target) const {
  const auto& im = *impl_;
  const auto& fm = im.kit.fm;
  const u64 q = fm.q();
  if (target.modulus() != q || target.components.size() != 2 || target.components[0].dim() != im.s.dim() ||
      target.components[1].dim() != im.s.dim()) {
    throw PreconditionError("target does not live in the product group of the kit");
  }
  const u64 shallow = level_mod(fm, 4 * (fm.level() - 1));
  for (const auto& c : target.components) {
    if (!is_congruent_identity(c, shallow)) throw PreconditionError("target component is not I mod q0^{4(L-1)} = " + std::to_string(shallow));
  }

  // (P, Q) = (P, I)(I, Q)
  const auto left = lift(step6_decompose(target.components[0], im.ctx_p), im.pr1, im.s, im.p3_word, im.p3p_word);
  const auto right = lift(step6_decompose(target.components[1], im.ctx_q), im.pr2, im.s, im.q3_word, im.q3p_word);
  Certificate cert{target, {}, {}, {}};
  cert.word = left.word;
  cert.word.append(right.word);
  cert.inheritance = im.inheritance;
  if (std::get<ProductModQ>(evaluate_word(im.s, q, cert.word)) != target) throw InternalError("product certificate does not evaluate to its target");

  const std::size_t N = static_cast<std::size_t>(word_length_bound(im.s.dim()));
  const std::size_t c3 = std::max(im.c3, left.max_conjugator);
  const std::size_t c4 = std::max(im.c4, right.max_conjugator);
  const std::size_t c5 = std::max({im.kit.p1.word.length(), im.kit.p1p.word.length(), im.kit.p2.word.length(), im.kit.p2p.word.length()});
  const std::size_t coef = 2 * N * N + 2 * N;
  cert.account = account(static_cast<int>(N), {{"c3", coef, c3}, {"c4", coef, c4}, {"c5", coef, c5}}, cert.word.length());
  return cert;
}

Certificate assemble_product_certificate(const ProductModQ& target, const ProductKit& kit, const GenSet& s, const CertifyOptions& opts) {
  return ProductCertifier(s, kit, opts).certify(target);
}

}  // namespace logdiam
