#pragma once

// Exact arithmetic over Z/mZ for factored moduli: residues with explicit
// moduli, p-adic valuations, CRT and multivariate Hensel lifting.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "logdiam/error.hpp"

namespace logdiam {

using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;
using i128 = __int128;

/// Largest modulus accepted anywhere in the library. Products of two
/// residues are formed in 128 bits, so 2^63 leaves headroom for sums.
inline constexpr u64 kMaxModulus = u64{1} << 62;

inline u64 mul_mod(u64 a, u64 b, u64 m) { return static_cast<u64>(static_cast<u128>(a) * b % m); }
inline u64 add_mod(u64 a, u64 b, u64 m) { return static_cast<u64>((static_cast<u128>(a) + b) % m); }
inline u64 sub_mod(u64 a, u64 b, u64 m) { return a >= b ? a - b : static_cast<u64>(static_cast<u128>(a) + m - b); }
inline u64 neg_mod(u64 a, u64 m) { return a == 0 ? 0 : m - a; }

/// Reduces a signed integer into [0, m).
u64 reduce_signed(i64 x, u64 m);
u64 reduce_signed(i128 x, u64 m);

u64 pow_mod(u64 base, u64 exp, u64 m);
u64 gcd_u64(u64 a, u64 b);
bool is_unit_mod(u64 a, u64 m);
/// Inverse of a mod m. Throws NotAUnit when gcd(a, m) != 1.
u64 inv_mod(u64 a, u64 m);
/// p^e, throwing PreconditionError when it does not fit below kMaxModulus.
u64 ipow(u64 p, int e);
bool is_prime(u64 n);

/// p-adic valuation of an integer representative, capped at `cap`.
/// Zero has valuation `cap`.
int vp(u64 x, u64 p, int cap);

/// Euler phi of a prime power p^e.
u64 phi_prime_power(u64 p, int e);

/// A value in [0, modulus) tagged with its modulus. Arithmetic between
/// residues with different moduli throws ModulusMismatch.
class Residue {
 public:
  Residue(i64 value, u64 modulus);
  static Residue from_unsigned(u64 value, u64 modulus);

  u64 value() const { return value_; }
  u64 modulus() const { return modulus_; }

  Residue operator+(const Residue& o) const;
  Residue operator-(const Residue& o) const;
  Residue operator*(const Residue& o) const;
  Residue operator-() const;
  bool operator==(const Residue& o) const = default;

  bool is_unit() const;
  Residue inverse() const;
  /// Image under Z/mZ -> Z/m'Z; m' must divide m.
  Residue reduce(u64 new_modulus) const;

 private:
  Residue() = default;
  void require_same(const Residue& o) const;

  u64 value_ = 0;
  u64 modulus_ = 1;
};

struct PrimePower {
  u64 p = 0;
  int alpha = 0;
  u64 value = 1;  ///< p^alpha
  bool operator==(const PrimePower&) const = default;
};

/// A modulus q together with its prime factorization and, once a level L is
/// attached, the derived levels q0 = prod p, q1 = prod p^L, q2 = prod p^{4(L-1)}.
class FactoredModulus {
 public:
  FactoredModulus() = default;
  /// Validates that `factors` are distinct increasing primes multiplying to q.
  FactoredModulus(u64 q, std::vector<PrimePower> factors);

  u64 q() const { return q_; }
  const std::vector<PrimePower>& factors() const { return factors_; }
  std::vector<u64> primes() const;
  int min_exponent() const;

  bool has_level() const { return level_.has_value(); }
  /// Throws PreconditionError when no level is attached.
  int level() const;
  /// Copy with level L attached. Requires L >= 2.
  FactoredModulus with_level(int L) const;

  /// prod p_i^k (k may exceed alpha_i; the result then need not divide q).
  u64 radical_power(int k) const;
  u64 q0() const { return radical_power(1); }
  u64 q1() const { return radical_power(level()); }
  u64 q2() const { return radical_power(4 * (level() - 1)); }

  /// Checks that Z/p^L has at least d units for every prime of q.
  void require_units_for_dimension(int d) const;

  bool operator==(const FactoredModulus&) const = default;

 private:
  u64 q_ = 1;
  std::vector<PrimePower> factors_;
  std::optional<int> level_;
};

/// Prime factorization of n >= 2 (primes strictly increasing).
FactoredModulus factorize(u64 n);
/// Like factorize but also accepts n = 1 (empty factor list).
FactoredModulus factorize_any(u64 n);

struct Valuation {
  int value = 0;
  bool saturated = false;  ///< x == 0 mod p^r; value is then r
  bool operator==(const Valuation&) const = default;
};

/// ord_p(x) for x modulo a power of p. Zero is reported as r, saturated.
/// Throws PreconditionError when the modulus is not a power of p.
Valuation valuation(const Residue& x, u64 p);

/// The unique residue mod prod m_i reducing to every part. Moduli must be
/// pairwise coprime.
Residue crt_combine(std::span<const Residue> parts);

// ---------------------------------------------------------------------------
// Polynomial systems and Hensel lifting.

struct Monomial {
  i64 coeff = 0;
  std::vector<std::uint32_t> exponents;  ///< one entry per variable
};

struct Polynomial {
  std::vector<Monomial> terms;

  u64 evaluate(std::span<const u64> x, u64 modulus) const;
  Polynomial derivative(std::size_t var) const;
};

/// Integer polynomial system over Z_p, posed at some level p^s.
struct PolySystem {
  std::size_t num_vars = 0;
  std::vector<Polynomial> equations;
  u64 prime = 0;

  /// Throws PreconditionError if an exponent vector has the wrong length.
  void validate() const;
  std::vector<u64> evaluate(std::span<const u64> x, u64 modulus) const;
  /// Jacobian d F_i / d x_j, row-major, reduced mod `modulus`.
  std::vector<u64> jacobian(std::span<const u64> x, u64 modulus) const;
};

/// Raised by hensel_lift_system when the Jacobian is singular mod p.
class JacobianSingular : public PreconditionError {
 public:
  JacobianSingular(std::string what, std::vector<u64> jacobian_mod_p, std::size_t failing_column);
  const std::vector<u64>& jacobian_mod_p() const { return jacobian_; }
  std::size_t failing_column() const { return column_; }

 private:
  std::vector<u64> jacobian_;
  std::size_t column_;
};

/// Solves A x = b over Z/p^k where A (n x n, row-major) is invertible mod p.
/// Throws JacobianSingular with the failing column when no unit pivot exists.
std::vector<u64> solve_unit_system(std::vector<u64> a, std::vector<u64> b, std::size_t n, u64 p, u64 modulus);

/// Newton lift of a root x0 (given mod p^{s0}) to a root mod p^{target}.
/// The returned vector has residues mod p^{target} and agrees with x0 mod p^{s0}.
std::vector<Residue> hensel_lift_system(const PolySystem& sys, std::span<const Residue> x0, int target);

struct LevelChoice {
  std::map<u64, int> per_prime;  ///< smallest L >= 2 with phi(p^L) >= d
  int L = 2;                      ///< max over primes and beta_i + 1
};

/// Level selection: per prime the least L >= 2 giving d units mod p^L, and
/// overall L = max(L0, beta_i + 1) for the optional strong-approximation
/// exponents `betas`.
LevelChoice min_level_L0(int d, std::span<const u64> primes, std::span<const int> betas = {});

}  // namespace logdiam
