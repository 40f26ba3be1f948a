#pragma once

// Generator-word certificates for SA_d and SL_d x SL_d quotients. A kit of
// auxiliary elements (found by search) supplies seeds for the bounded
// generation of bddgen; conjugator words come from a distance oracle on the
// relevant projection of S.

#include <string>
#include <vector>

#include <json.hpp>

#include "logdiam/bddgen.hpp"
#include "logdiam/cayley.hpp"

namespace logdiam {

/// Q3 or Q3' (or their mirrors P3, P3') failed the seed conditions.
class InheritanceFailure : public Error {
 public:
  using Error::Error;
};

/// (T, v)^{-1} (I, v0) (T, v), computed with affine_mul and checked against
/// (I, T^{-1} v0). Throws InternalError on a mismatch.
AffineModQ key_identity(const MatModQ& T, const std::vector<u64>& v, const std::vector<u64>& v0);

struct TranslationPair {
  MatModQ A;
  MatModQ B;
};

/// A v0 - B v0 = v with A, B = I mod q0^{4(L-1)}. Requires q0^{5(L-1)} | q,
/// v = 0 mod q0^{5(L-1)}, v0 = (q0^{L-1}, 0, ..., 0) mod q0^L and d >= 2.
/// Here B = I and A = H_{12}^lambda (I + c e_1^T) with c_1 = 0.
TranslationPair solve_translation_pair(const std::vector<u64>& v, const std::vector<u64>& v0, const FactoredModulus& fm);

struct KitElement {
  GroupElement element;
  CayleyWord word;
};

/// Case 1 kit: (T1, v1) and (T1', v1') carry the lower/upper seed
/// conditions with v1, v1' = 0 mod q0^{5(L-1)}; T2 = I mod q0^{4(L-1)} and
/// v2 = (q0^{L-1}, 0, ..., 0) mod q0^L.
struct SaKit {
  FactoredModulus fm;  ///< with level L
  KitElement t1, t1p, t2;
};

/// Case 2 kit: P1, Q2 lower seeds; P1', Q2' upper seeds; Q1, Q1', P2, P2'
/// = I mod q0^{5(L-1)}.
struct ProductKit {
  FactoredModulus fm;
  KitElement p1, p1p, p2, p2p;
};

/// Every violated kit condition, one line each; empty when the kit is valid.
std::vector<std::string> check_sa_kit(const SaKit& kit, const GenSet& s);
std::vector<std::string> check_product_kit(const ProductKit& kit, const GenSet& s);

/// Kits by coset-collision search (cayley::search_in_kernel). Throws
/// BudgetError naming the missing elements when the search budget runs out.
SaKit find_sa_kit(const GenSet& s, const FactoredModulus& fm, const SearchOptions& opts = {});
ProductKit find_product_kit(const GenSet& s, const FactoredModulus& fm, const SearchOptions& opts = {});

nlohmann::json kit_to_json(const SaKit& kit);
nlohmann::json kit_to_json(const ProductKit& kit);
/// Elements are recomputed from the words; a stored "element" must agree.
SaKit sa_kit_from_json(const nlohmann::json& j, const GenSet& s);
ProductKit product_kit_from_json(const nlohmann::json& j, const GenSet& s);

struct LengthTerm {
  std::string name;          ///< c1, c2 (Case 1) or c3, c4, c5 (Case 2)
  std::size_t coefficient;   ///< from the pinned N = word_length_bound(d)
  std::size_t measured;      ///< longest word of that kind actually used
};

struct LengthAccount {
  int N = 0;
  std::vector<LengthTerm> terms;
  std::size_t length = 0;
  std::size_t bound = 0;  ///< sum of coefficient * measured
  bool within() const { return length <= bound; }
};

struct Certificate {
  GroupElement target;
  CayleyWord word;
  LengthAccount account;
  /// Seed checks on the derived seeds (Case 2 only).
  std::vector<std::string> inheritance;
};

nlohmann::json certificate_to_json(const Certificate& c);

struct CertifyOptions {
  std::size_t oracle_ball = std::size_t{1} << 19;
  BfsOptions bfs;
};

/// Case 1. Admissible targets: (T, v) with T = I mod q0^{4(L-1)} whose
/// translation remainder after the linear part is 0 mod q0^{5(L-1)}.
class SaCertifier {
 public:
  SaCertifier(GenSet s, SaKit kit, const CertifyOptions& opts = {});
  Certificate certify(const AffineModQ& target) const;
  /// (I, v0) and its word.
  const std::vector<u64>& v0() const;
  const CayleyWord& v0_word() const;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

/// Case 2 for k = 2, d1 = d2. Admissible targets: (P, Q) with both
/// components = I mod q0^{4(L-1)}.
class ProductCertifier {
 public:
  ProductCertifier(GenSet s, ProductKit kit, const CertifyOptions& opts = {});
  Certificate certify(const ProductModQ& target) const;
  /// The derived seeds: (I, Q3), (I, Q3'), (P3, I), (P3', I).
  const MatModQ& q3() const;
  const MatModQ& q3p() const;
  const MatModQ& p3() const;
  const MatModQ& p3p() const;
  const std::vector<std::string>& inheritance() const;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

Certificate assemble_sa_certificate(const AffineModQ& target, const SaKit& kit, const GenSet& s, const CertifyOptions& opts = {});
Certificate assemble_product_certificate(const ProductModQ& target, const ProductKit& kit, const GenSet& s,
                                         const CertifyOptions& opts = {});

}  // namespace logdiam
