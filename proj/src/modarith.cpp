#include "logdiam/modarith.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <tuple>
#include <utility>

namespace logdiam {

u64 reduce_signed(i64 x, u64 m) { return reduce_signed(static_cast<i128>(x), m); }

u64 reduce_signed(i128 x, u64 m) {
  if (m == 0) throw PreconditionError("modulus must be positive");
  i128 r = x % static_cast<i128>(m);
  if (r < 0) r += m;
  return static_cast<u64>(r);
}

u64 pow_mod(u64 base, u64 exp, u64 m) {
  u64 result = 1 % m;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

u64 gcd_u64(u64 a, u64 b) { return std::gcd(a, b); }

bool is_unit_mod(u64 a, u64 m) { return m == 1 || gcd_u64(a % m, m) == 1; }

u64 inv_mod(u64 a, u64 m) {
  if (m == 1) return 0;
  i128 t = 0, new_t = 1;
  i128 r = m, new_r = a % m;
  while (new_r != 0) {
    i128 quotient = r / new_r;
    std::tie(t, new_t) = std::pair<i128, i128>{new_t, t - quotient * new_t};
    std::tie(r, new_r) = std::pair<i128, i128>{new_r, r - quotient * new_r};
  }
  if (r != 1) {
    std::ostringstream os;
    os << a << " is not a unit mod " << m;
    throw NotAUnit(os.str());
  }
  return reduce_signed(t, m);
}

u64 ipow(u64 p, int e) {
  if (e < 0) throw PreconditionError("negative exponent");
  u128 result = 1;
  for (int i = 0; i < e; ++i) {
    result *= p;
    if (result >= kMaxModulus) {
      std::ostringstream os;
      os << p << "^" << e << " exceeds the supported modulus range";
      throw PreconditionError(os.str());
    }
  }
  return static_cast<u64>(result);
}

namespace {

bool miller_rabin_witness(u64 n, u64 a, u64 d, int s) {
  u64 x = pow_mod(a, d, n);
  if (x == 1 || x == n - 1) return false;
  for (int i = 1; i < s; ++i) {
    x = mul_mod(x, x, n);
    if (x == n - 1) return false;
  }
  return true;
}

u64 pollard_rho(u64 n) {
  if (n % 2 == 0) return 2;
  for (u64 c = 1;; ++c) {
    u64 x = 2, y = 2, d = 1;
    auto f = [&](u64 v) { return add_mod(mul_mod(v, v, n), c, n); };
    while (d == 1) {
      x = f(x);
      y = f(f(y));
      d = gcd_u64(x > y ? x - y : y - x, n);
    }
    if (d != n) return d;
  }
}

void factor_into(u64 n, std::vector<u64>& out) {
  if (n == 1) return;
  if (is_prime(n)) {
    out.push_back(n);
    return;
  }
  u64 d = pollard_rho(n);
  factor_into(d, out);
  factor_into(n / d, out);
}

}  // namespace

bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % p == 0) return n == p;
  }
  u64 d = n - 1;
  int s = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++s;
  }
  for (u64 a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (miller_rabin_witness(n, a, d, s)) return false;
  }
  return true;
}

int vp(u64 x, u64 p, int cap) {
  if (x == 0) return cap;
  int v = 0;
  while (v < cap && x % p == 0) {
    x /= p;
    ++v;
  }
  return v;
}

u64 phi_prime_power(u64 p, int e) {
  if (e == 0) return 1;
  return ipow(p, e - 1) * (p - 1);
}

// ---------------------------------------------------------------------------

Residue::Residue(i64 value, u64 modulus) {
  if (modulus == 0 || modulus >= kMaxModulus) throw PreconditionError("residue modulus out of range");
  modulus_ = modulus;
  value_ = reduce_signed(value, modulus);
}

Residue Residue::from_unsigned(u64 value, u64 modulus) {
  if (modulus == 0 || modulus >= kMaxModulus) throw PreconditionError("residue modulus out of range");
  Residue r;
  r.modulus_ = modulus;
  r.value_ = value % modulus;
  return r;
}

void Residue::require_same(const Residue& o) const {
  if (modulus_ != o.modulus_) {
    std::ostringstream os;
    os << "mixed moduli " << modulus_ << " and " << o.modulus_;
    throw ModulusMismatch(os.str());
  }
}

Residue Residue::operator+(const Residue& o) const {
  require_same(o);
  return from_unsigned(add_mod(value_, o.value_, modulus_), modulus_);
}

Residue Residue::operator-(const Residue& o) const {
  require_same(o);
  return from_unsigned(sub_mod(value_, o.value_, modulus_), modulus_);
}

Residue Residue::operator*(const Residue& o) const {
  require_same(o);
  return from_unsigned(mul_mod(value_, o.value_, modulus_), modulus_);
}

Residue Residue::operator-() const { return from_unsigned(neg_mod(value_, modulus_), modulus_); }

bool Residue::is_unit() const { return is_unit_mod(value_, modulus_); }

Residue Residue::inverse() const { return from_unsigned(inv_mod(value_, modulus_), modulus_); }

Residue Residue::reduce(u64 new_modulus) const {
  if (new_modulus == 0 || modulus_ % new_modulus != 0) {
    std::ostringstream os;
    os << new_modulus << " does not divide " << modulus_;
    throw PreconditionError(os.str());
  }
  return from_unsigned(value_ % new_modulus, new_modulus);
}

// ---------------------------------------------------------------------------

FactoredModulus::FactoredModulus(u64 q, std::vector<PrimePower> factors) : q_(q), factors_(std::move(factors)) {
  if (q == 0 || q >= kMaxModulus) throw PreconditionError("modulus out of range");
  u128 product = 1;
  u64 last = 0;
  for (auto& f : factors_) {
    if (!is_prime(f.p) || f.alpha < 1 || f.p <= last) {
      throw PreconditionError("factorization must list distinct increasing primes with positive exponents");
    }
    f.value = ipow(f.p, f.alpha);
    product *= f.value;
    last = f.p;
  }
  if (product != q) throw PreconditionError("prime powers do not multiply to q");
}

std::vector<u64> FactoredModulus::primes() const {
  std::vector<u64> out;
  for (const auto& f : factors_) out.push_back(f.p);
  return out;
}

int FactoredModulus::min_exponent() const {
  int m = 0;
  for (std::size_t i = 0; i < factors_.size(); ++i) m = i == 0 ? factors_[i].alpha : std::min(m, factors_[i].alpha);
  return m;
}

int FactoredModulus::level() const {
  if (!level_) throw PreconditionError("no level L attached to modulus");
  return *level_;
}

FactoredModulus FactoredModulus::with_level(int L) const {
  if (L < 2) throw PreconditionError("level L must be at least 2");
  FactoredModulus copy = *this;
  copy.level_ = L;
  return copy;
}

u64 FactoredModulus::radical_power(int k) const {
  u128 result = 1;
  for (const auto& f : factors_) {
    result *= ipow(f.p, k);
    if (result >= kMaxModulus) throw PreconditionError("derived level exceeds the supported modulus range");
  }
  return static_cast<u64>(result);
}

void FactoredModulus::require_units_for_dimension(int d) const {
  const int L = level();
  for (const auto& f : factors_) {
    if (phi_prime_power(f.p, L) < static_cast<u64>(d)) {
      std::ostringstream os;
      os << "Z/" << f.p << "^" << L << " has fewer than " << d << " units";
      throw PreconditionError(os.str());
    }
  }
}

FactoredModulus factorize(u64 n) {
  if (n < 2) throw PreconditionError("factorize requires n >= 2");
  return factorize_any(n);
}

FactoredModulus factorize_any(u64 n) {
  if (n == 0) throw PreconditionError("factorize requires a positive integer");
  std::vector<u64> primes;
  u64 m = n;
  for (u64 p = 2; p < 1000 && p * p <= m; ++p) {
    while (m % p == 0) {
      primes.push_back(p);
      m /= p;
    }
  }
  factor_into(m, primes);
  std::sort(primes.begin(), primes.end());
  std::vector<PrimePower> factors;
  for (u64 p : primes) {
    if (!factors.empty() && factors.back().p == p) {
      ++factors.back().alpha;
    } else {
      factors.push_back({p, 1, p});
    }
  }
  return FactoredModulus(n, std::move(factors));
}

Valuation valuation(const Residue& x, u64 p) {
  if (p < 2 || !is_prime(p)) throw PreconditionError("valuation base must be prime");
  u64 m = x.modulus();
  int r = 0;
  while (m % p == 0) {
    m /= p;
    ++r;
  }
  if (m != 1) {
    std::ostringstream os;
    os << "modulus " << x.modulus() << " is not a power of " << p;
    throw PreconditionError(os.str());
  }
  if (x.value() == 0) return {r, true};
  return {vp(x.value(), p, r), false};
}

Residue crt_combine(std::span<const Residue> parts) {
  if (parts.empty()) return Residue(0, 1);
  u64 value = parts[0].value();
  u64 modulus = parts[0].modulus();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const u64 m = parts[i].modulus();
    if (gcd_u64(modulus, m) != 1) {
      std::ostringstream os;
      os << "CRT moduli " << modulus << " and " << m << " are not coprime";
      throw PreconditionError(os.str());
    }
    const u128 combined = static_cast<u128>(modulus) * m;
    if (combined >= kMaxModulus) throw PreconditionError("CRT modulus exceeds the supported range");
    // value + modulus * t == parts[i] (mod m)
    const u64 diff = sub_mod(parts[i].value(), value % m, m);
    const u64 t = mul_mod(diff, inv_mod(modulus % m, m), m);
    value = static_cast<u64>(value + static_cast<u128>(modulus) * t);
    modulus = static_cast<u64>(combined);
  }
  return Residue::from_unsigned(value, modulus);
}

// ---------------------------------------------------------------------------

u64 Polynomial::evaluate(std::span<const u64> x, u64 modulus) const {
  u64 total = 0;
  for (const auto& term : terms) {
    u64 v = reduce_signed(term.coeff, modulus);
    for (std::size_t j = 0; j < term.exponents.size() && v != 0; ++j) {
      if (term.exponents[j] > 0) v = mul_mod(v, pow_mod(x[j], term.exponents[j], modulus), modulus);
    }
    total = add_mod(total, v, modulus);
  }
  return total;
}

Polynomial Polynomial::derivative(std::size_t var) const {
  Polynomial out;
  for (const auto& term : terms) {
    if (var >= term.exponents.size() || term.exponents[var] == 0) continue;
    Monomial m = term;
    const i128 c = static_cast<i128>(m.coeff) * m.exponents[var];
    if (c > INT64_MAX || c < INT64_MIN) throw PreconditionError("derivative coefficient overflow");
    m.coeff = static_cast<i64>(c);
    --m.exponents[var];
    out.terms.push_back(std::move(m));
  }
  return out;
}

void PolySystem::validate() const {
  if (prime < 2 || !is_prime(prime)) throw PreconditionError("polynomial system needs a prime");
  for (const auto& eq : equations) {
    for (const auto& term : eq.terms) {
      if (term.exponents.size() != num_vars) throw PreconditionError("exponent vector length differs from variable count");
    }
  }
}

std::vector<u64> PolySystem::evaluate(std::span<const u64> x, u64 modulus) const {
  std::vector<u64> out;
  out.reserve(equations.size());
  for (const auto& eq : equations) out.push_back(eq.evaluate(x, modulus));
  return out;
}

std::vector<u64> PolySystem::jacobian(std::span<const u64> x, u64 modulus) const {
  std::vector<u64> jac(equations.size() * num_vars);
  for (std::size_t i = 0; i < equations.size(); ++i) {
    for (std::size_t j = 0; j < num_vars; ++j) jac[i * num_vars + j] = equations[i].derivative(j).evaluate(x, modulus);
  }
  return jac;
}

JacobianSingular::JacobianSingular(std::string what, std::vector<u64> jacobian_mod_p, std::size_t failing_column)
    : PreconditionError(std::move(what)), jacobian_(std::move(jacobian_mod_p)), column_(failing_column) {}

std::vector<u64> solve_unit_system(std::vector<u64> a, std::vector<u64> b, std::size_t n, u64 p, u64 modulus) {
  const std::vector<u64> original = a;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = n;
    for (std::size_t row = col; row < n; ++row) {
      if (a[row * n + col] % p != 0) {
        pivot = row;
        break;
      }
    }
    if (pivot == n) {
      std::vector<u64> mod_p(original.size());
      for (std::size_t i = 0; i < original.size(); ++i) mod_p[i] = original[i] % p;
      std::ostringstream os;
      os << "Jacobian singular mod " << p << ": no unit pivot in column " << col;
      throw JacobianSingular(os.str(), std::move(mod_p), col);
    }
    if (pivot != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[pivot * n + k], a[col * n + k]);
      std::swap(b[pivot], b[col]);
    }
    const u64 inv = inv_mod(a[col * n + col], modulus);
    for (std::size_t k = 0; k < n; ++k) a[col * n + k] = mul_mod(a[col * n + k], inv, modulus);
    b[col] = mul_mod(b[col], inv, modulus);
    for (std::size_t row = 0; row < n; ++row) {
      if (row == col) continue;
      const u64 factor = a[row * n + col];
      if (factor == 0) continue;
      for (std::size_t k = 0; k < n; ++k) {
        a[row * n + k] = sub_mod(a[row * n + k], mul_mod(factor, a[col * n + k], modulus), modulus);
      }
      b[row] = sub_mod(b[row], mul_mod(factor, b[col], modulus), modulus);
    }
  }
  return b;
}

std::vector<Residue> hensel_lift_system(const PolySystem& sys, std::span<const Residue> x0, int target) {
  sys.validate();
  if (x0.size() != sys.num_vars) throw PreconditionError("initial vector length differs from variable count");
  if (sys.equations.size() != sys.num_vars) throw PreconditionError("Hensel lifting needs a square system");
  const u64 p = sys.prime;
  u64 base_modulus = x0.empty() ? p : x0[0].modulus();
  for (const auto& r : x0) {
    if (r.modulus() != base_modulus) throw ModulusMismatch("initial vector mixes moduli");
  }
  const Valuation level = valuation(Residue(0, base_modulus), p);
  const int s0 = level.value;
  if (s0 < 1) throw PreconditionError("initial level must be at least p^1");
  if (target < s0) throw PreconditionError("target level below the initial level");

  std::vector<u64> x(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) x[i] = x0[i].value();
  for (u64 v : sys.evaluate(x, base_modulus)) {
    if (v != 0) throw PreconditionError("initial vector is not a solution at its level");
  }
  // Singularity is a mod-p property; report it before lifting.
  solve_unit_system(sys.jacobian(x, p), std::vector<u64>(sys.num_vars, 0), sys.num_vars, p, p);

  const std::size_t n = sys.num_vars;
  int level_now = s0;
  while (level_now < target) {
    const int next = std::min(target, 2 * level_now);
    const u64 modulus = ipow(p, next);
    const std::vector<u64> f = sys.evaluate(x, modulus);
    const std::vector<u64> delta = solve_unit_system(sys.jacobian(x, modulus), f, n, p, modulus);
    for (std::size_t i = 0; i < n; ++i) x[i] = sub_mod(x[i] % modulus, delta[i], modulus);
    level_now = next;
  }

  const u64 final_modulus = ipow(p, target);
  for (u64 v : sys.evaluate(x, final_modulus)) {
    if (v != 0) throw InternalError("Hensel lift failed final verification");
  }
  std::vector<Residue> out;
  out.reserve(n);
  for (u64 v : x) out.push_back(Residue::from_unsigned(v, final_modulus));
  return out;
}

LevelChoice min_level_L0(int d, std::span<const u64> primes, std::span<const int> betas) {
  if (d < 2) throw PreconditionError("dimension must be at least 2");
  LevelChoice choice;
  int overall = 2;
  for (u64 p : primes) {
    int L = 2;
    while (phi_prime_power(p, L) < static_cast<u64>(d)) ++L;
    choice.per_prime[p] = L;
    overall = std::max(overall, L);
  }
  for (int beta : betas) overall = std::max(overall, beta + 1);
  choice.L = overall;
  return choice;
}

}  // namespace logdiam
