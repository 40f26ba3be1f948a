#pragma once

// Elements of SL_d(Z/qZ), products of SL groups and SA_d(Z/qZ), plus the
// congruence predicates used on the seed elements of the bounded-generation
// construction.

#include <span>
#include <string>
#include <vector>

#include "logdiam/modarith.hpp"

namespace logdiam {

inline constexpr int kMaxDim = 8;

/// Square matrix over Z/qZ with no determinant constraint. Used for
/// intermediate computations before det = 1 has been established.
class RawMat {
 public:
  RawMat(int d, u64 q);
  static RawMat identity(int d, u64 q);
  static RawMat from_signed(int d, u64 q, std::span<const i64> row_major);
  static RawMat from_unsigned(int d, u64 q, std::span<const u64> row_major);

  int dim() const { return d_; }
  u64 modulus() const { return q_; }
  u64 at(int i, int j) const { return a_[static_cast<std::size_t>(i * d_ + j)]; }
  void set(int i, int j, u64 v) { a_[static_cast<std::size_t>(i * d_ + j)] = v % q_; }
  std::span<const u64> data() const { return a_; }
  Residue entry(int i, int j) const { return Residue::from_unsigned(at(i, j), q_); }

  RawMat operator*(const RawMat& o) const;
  RawMat operator+(const RawMat& o) const;
  RawMat operator-(const RawMat& o) const;
  bool operator==(const RawMat& o) const = default;

  u64 det() const;
  RawMat adjugate() const;
  RawMat transpose() const;
  std::vector<u64> apply(std::span<const u64> v) const;

  bool is_lower_triangular() const;
  bool is_upper_triangular() const;

 private:
  int d_ = 0;
  u64 q_ = 1;
  std::vector<u64> a_;
};

/// Element of SL_d(Z/qZ); construction verifies det = 1.
class MatModQ {
 public:
  static MatModQ from_raw(RawMat m);
  static MatModQ identity(int d, u64 q) { return MatModQ(RawMat::identity(d, q)); }
  static MatModQ from_signed(int d, u64 q, std::span<const i64> row_major) {
    return from_raw(RawMat::from_signed(d, q, row_major));
  }

  const RawMat& raw() const { return m_; }
  int dim() const { return m_.dim(); }
  u64 modulus() const { return m_.modulus(); }
  u64 at(int i, int j) const { return m_.at(i, j); }
  Residue entry(int i, int j) const { return m_.entry(i, j); }
  bool operator==(const MatModQ& o) const = default;

  /// Wraps a matrix whose determinant is already known to be 1.
  static MatModQ trusted(RawMat m) { return MatModQ(std::move(m)); }

 private:
  explicit MatModQ(RawMat m) : m_(std::move(m)) {}
  RawMat m_;
};

MatModQ mat_mul(const MatModQ& a, const MatModQ& b);
/// Inverse by adjugate times det^{-1}. Throws NotAUnit when det is not a unit.
RawMat mat_inv(const RawMat& a);
MatModQ mat_inv(const MatModQ& a);
MatModQ transpose(const MatModQ& a);
MatModQ conjugate(const MatModQ& g, const MatModQ& h);  ///< g h g^{-1}

/// Diagonal matrix with lambda at (k,k), lambda^{-1} at (l,l) (0-based).
MatModQ make_scaling(int k, int l, const Residue& lambda, int d);

/// Element of SA_d(Z/qZ) = SL_d(Z/qZ) x (Z/qZ)^d acting by x -> linear x + trans.
struct AffineModQ {
  MatModQ linear;
  std::vector<u64> trans;

  static AffineModQ identity(int d, u64 q);
  static AffineModQ make(MatModQ linear, std::vector<u64> trans);
  int dim() const { return linear.dim(); }
  u64 modulus() const { return linear.modulus(); }
  std::vector<u64> apply(std::span<const u64> x) const;
  bool operator==(const AffineModQ&) const = default;
};

/// (h1, u1)(h2, u2) = (h1 h2, h1 u2 + u1): composition of affine maps.
AffineModQ affine_mul(const AffineModQ& a, const AffineModQ& b);
AffineModQ affine_inv(const AffineModQ& a);
/// Linear part (the quotient homomorphism onto SL_d).
inline const MatModQ& theta(const AffineModQ& g) { return g.linear; }
/// Translation part g(0).
inline const std::vector<u64>& tau(const AffineModQ& g) { return g.trans; }

/// Element of SL_{d_1}(Z/qZ) x ... x SL_{d_k}(Z/qZ).
struct ProductModQ {
  std::vector<MatModQ> components;

  static ProductModQ identity(std::span<const int> dims, u64 q);
  static ProductModQ make(std::vector<MatModQ> components);
  u64 modulus() const { return components.front().modulus(); }
  bool operator==(const ProductModQ&) const = default;
};

ProductModQ product_mul(const ProductModQ& a, const ProductModQ& b);
ProductModQ product_inv(const ProductModQ& a);

/// Entrywise reduction to a divisor modulus. Throws if q2 does not divide q.
RawMat reduce_level(const RawMat& a, u64 q2);
MatModQ reduce_level(const MatModQ& a, u64 q2);
AffineModQ reduce_level(const AffineModQ& a, u64 q2);
ProductModQ reduce_level(const ProductModQ& a, u64 q2);

/// Membership in the principal congruence subgroup of level m (m | q).
bool is_congruent_identity(const RawMat& a, u64 m);
bool is_congruent_identity(const MatModQ& a, u64 m);
bool is_congruent_identity(const AffineModQ& a, u64 m);
bool is_congruent_identity(const ProductModQ& a, u64 m);

enum class SeedVariant { lower, upper };

/// `exact` demands the "p^k || a" valuations on both triangles. `relaxed`
/// only demands p^{2(L-1)} | a on the far triangle; it is the shape preserved
/// through the row-by-row triangularization.
enum class SeedStrictness { exact, relaxed };

struct SeedConditions {
  SeedVariant variant = SeedVariant::lower;
  int L = 2;
  FactoredModulus modulus;
  SeedStrictness strictness = SeedStrictness::exact;
};

struct SeedCheck {
  bool ok = false;
  std::string diagnostic;
  /// Primes p at which two diagonal entries coincide mod p^L. Possible even
  /// for valid seeds (e.g. p = 2, L = 2, d = 2 forces a_00 = a_11 mod 4).
  std::vector<u64> degenerate_primes;
  explicit operator bool() const { return ok; }
};

/// Seed predicate: (1) the diagonal consists of units, pairwise distinct in
/// Z/q1Z; (2)/(3) strict-lower and strict-upper valuations as prescribed by
/// the variant at every prime. Throws PreconditionError if g's modulus is not
/// cond.modulus.q or some exponent of q is below 4(L-1).
SeedCheck check_seed(const MatModQ& g, const SeedConditions& cond);

std::string to_string(const RawMat& m);

}  // namespace logdiam
