#include "logdiam/matmod.hpp"

#include <sstream>

namespace logdiam {

namespace {

void require_compatible(const RawMat& a, const RawMat& b) {
  if (a.dim() != b.dim()) throw PreconditionError("matrix dimension mismatch");
  if (a.modulus() != b.modulus()) {
    std::ostringstream os;
    os << "matrix moduli differ: " << a.modulus() << " vs " << b.modulus();
    throw ModulusMismatch(os.str());
  }
}

void require_divides(u64 m, u64 q) {
  if (m == 0 || q % m != 0) {
    std::ostringstream os;
    os << m << " does not divide " << q;
    throw PreconditionError(os.str());
  }
}

// Determinant of the k x k matrix given row-major, division free: Laplace
// expansion along successive rows with memoisation over column subsets.
u64 det_subset_dp(const std::vector<u64>& a, int k, u64 q) {
  if (k == 0) return 1 % q;
  const std::size_t full = (std::size_t{1} << k) - 1;
  std::vector<u64> dp(full + 1, 0);
  dp[0] = 1 % q;
  for (std::size_t mask = 1; mask <= full; ++mask) {
    const int row = __builtin_popcountll(mask) - 1;
    u64 acc = 0;
    int pos = 0;
    for (int j = 0; j < k; ++j) {
      if (!(mask & (std::size_t{1} << j))) continue;
      const u64 term = mul_mod(a[static_cast<std::size_t>(row * k + j)], dp[mask ^ (std::size_t{1} << j)], q);
      acc = ((row + pos) % 2 == 0) ? add_mod(acc, term, q) : sub_mod(acc, term, q);
      ++pos;
    }
    dp[mask] = acc;
  }
  return dp[full];
}

}  // namespace

RawMat::RawMat(int d, u64 q) : d_(d), q_(q) {
  if (d < 1 || d > kMaxDim) throw PreconditionError("matrix dimension out of range");
  if (q == 0 || q >= kMaxModulus) throw PreconditionError("matrix modulus out of range");
  a_.assign(static_cast<std::size_t>(d * d), 0);
}

RawMat RawMat::identity(int d, u64 q) {
  RawMat m(d, q);
  for (int i = 0; i < d; ++i) m.set(i, i, 1);
  return m;
}

RawMat RawMat::from_signed(int d, u64 q, std::span<const i64> row_major) {
  RawMat m(d, q);
  if (row_major.size() != m.a_.size()) throw PreconditionError("wrong number of matrix entries");
  for (std::size_t i = 0; i < row_major.size(); ++i) m.a_[i] = reduce_signed(row_major[i], q);
  return m;
}

RawMat RawMat::from_unsigned(int d, u64 q, std::span<const u64> row_major) {
  RawMat m(d, q);
  if (row_major.size() != m.a_.size()) throw PreconditionError("wrong number of matrix entries");
  for (std::size_t i = 0; i < row_major.size(); ++i) m.a_[i] = row_major[i] % q;
  return m;
}

RawMat RawMat::operator*(const RawMat& o) const {
  require_compatible(*this, o);
  RawMat out(d_, q_);
  for (int i = 0; i < d_; ++i) {
    for (int j = 0; j < d_; ++j) {
      u128 acc = 0;
      for (int k = 0; k < d_; ++k) acc += static_cast<u128>(at(i, k)) * o.at(k, j);
      out.a_[static_cast<std::size_t>(i * d_ + j)] = static_cast<u64>(acc % q_);
    }
  }
  return out;
}

RawMat RawMat::operator+(const RawMat& o) const {
  require_compatible(*this, o);
  RawMat out(d_, q_);
  for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = add_mod(a_[i], o.a_[i], q_);
  return out;
}

RawMat RawMat::operator-(const RawMat& o) const {
  require_compatible(*this, o);
  RawMat out(d_, q_);
  for (std::size_t i = 0; i < a_.size(); ++i) out.a_[i] = sub_mod(a_[i], o.a_[i], q_);
  return out;
}

u64 RawMat::det() const { return det_subset_dp(a_, d_, q_); }

RawMat RawMat::adjugate() const {
  RawMat adj(d_, q_);
  if (d_ == 1) {
    adj.set(0, 0, 1);
    return adj;
  }
  std::vector<u64> minor(static_cast<std::size_t>((d_ - 1) * (d_ - 1)));
  for (int i = 0; i < d_; ++i) {
    for (int j = 0; j < d_; ++j) {
      std::size_t idx = 0;
      for (int r = 0; r < d_; ++r) {
        if (r == i) continue;
        for (int c = 0; c < d_; ++c) {
          if (c == j) continue;
          minor[idx++] = at(r, c);
        }
      }
      const u64 m = det_subset_dp(minor, d_ - 1, q_);
      // adj(A)_{ji} = (-1)^{i+j} M_{ij}
      adj.set(j, i, (i + j) % 2 == 0 ? m : neg_mod(m, q_));
    }
  }
  return adj;
}

RawMat RawMat::transpose() const {
  RawMat t(d_, q_);
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j) t.set(j, i, at(i, j));
  return t;
}

std::vector<u64> RawMat::apply(std::span<const u64> v) const {
  if (v.size() != static_cast<std::size_t>(d_)) throw PreconditionError("vector length differs from matrix dimension");
  std::vector<u64> out(v.size());
  for (int i = 0; i < d_; ++i) {
    u128 acc = 0;
    for (int k = 0; k < d_; ++k) acc += static_cast<u128>(at(i, k)) * (v[static_cast<std::size_t>(k)] % q_);
    out[static_cast<std::size_t>(i)] = static_cast<u64>(acc % q_);
  }
  return out;
}

bool RawMat::is_lower_triangular() const {
  for (int i = 0; i < d_; ++i)
    for (int j = i + 1; j < d_; ++j)
      if (at(i, j) != 0) return false;
  return true;
}

bool RawMat::is_upper_triangular() const {
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < i; ++j)
      if (at(i, j) != 0) return false;
  return true;
}

MatModQ MatModQ::from_raw(RawMat m) {
  const u64 det = m.det();
  if (det != 1 % m.modulus()) {
    std::ostringstream os;
    os << "determinant is " << det << " mod " << m.modulus() << ", not 1";
    throw PreconditionError(os.str());
  }
  return MatModQ(std::move(m));
}

MatModQ mat_mul(const MatModQ& a, const MatModQ& b) { return MatModQ::trusted(a.raw() * b.raw()); }

RawMat mat_inv(const RawMat& a) {
  const u64 det = a.det();
  const u64 det_inv = inv_mod(det, a.modulus());
  RawMat adj = a.adjugate();
  RawMat out(a.dim(), a.modulus());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) out.set(i, j, mul_mod(adj.at(i, j), det_inv, a.modulus()));
  return out;
}

MatModQ mat_inv(const MatModQ& a) { return MatModQ::trusted(a.raw().adjugate()); }

MatModQ transpose(const MatModQ& a) { return MatModQ::trusted(a.raw().transpose()); }

MatModQ conjugate(const MatModQ& g, const MatModQ& h) { return mat_mul(mat_mul(g, h), mat_inv(g)); }

MatModQ make_scaling(int k, int l, const Residue& lambda, int d) {
  if (k == l || k < 0 || l < 0 || k >= d || l >= d) throw PreconditionError("scaling indices must be distinct and in range");
  if (!lambda.is_unit()) throw NotAUnit("scaling factor is not a unit");
  RawMat m = RawMat::identity(d, lambda.modulus());
  m.set(k, k, lambda.value());
  m.set(l, l, lambda.inverse().value());
  return MatModQ::trusted(std::move(m));
}

AffineModQ AffineModQ::identity(int d, u64 q) { return {MatModQ::identity(d, q), std::vector<u64>(static_cast<std::size_t>(d), 0)}; }

AffineModQ AffineModQ::make(MatModQ linear, std::vector<u64> trans) {
  if (trans.size() != static_cast<std::size_t>(linear.dim())) throw PreconditionError("translation length differs from dimension");
  for (auto& t : trans) t %= linear.modulus();
  return {std::move(linear), std::move(trans)};
}

std::vector<u64> AffineModQ::apply(std::span<const u64> x) const {
  std::vector<u64> out = linear.raw().apply(x);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = add_mod(out[i], trans[i], modulus());
  return out;
}

AffineModQ affine_mul(const AffineModQ& a, const AffineModQ& b) {
  require_compatible(a.linear.raw(), b.linear.raw());
  AffineModQ out{mat_mul(a.linear, b.linear), a.linear.raw().apply(b.trans)};
  for (std::size_t i = 0; i < out.trans.size(); ++i) out.trans[i] = add_mod(out.trans[i], a.trans[i], a.modulus());
  return out;
}

AffineModQ affine_inv(const AffineModQ& a) {
  MatModQ inv = mat_inv(a.linear);
  std::vector<u64> t = inv.raw().apply(a.trans);
  for (auto& x : t) x = neg_mod(x, a.modulus());
  return {std::move(inv), std::move(t)};
}

ProductModQ ProductModQ::identity(std::span<const int> dims, u64 q) {
  ProductModQ out;
  for (int d : dims) out.components.push_back(MatModQ::identity(d, q));
  return out;
}

ProductModQ ProductModQ::make(std::vector<MatModQ> components) {
  if (components.empty()) throw PreconditionError("product element needs at least one component");
  for (const auto& c : components) {
    if (c.modulus() != components.front().modulus()) throw ModulusMismatch("product components must share the modulus");
  }
  return {std::move(components)};
}

ProductModQ product_mul(const ProductModQ& a, const ProductModQ& b) {
  if (a.components.size() != b.components.size()) throw PreconditionError("product arity mismatch");
  ProductModQ out;
  for (std::size_t i = 0; i < a.components.size(); ++i) out.components.push_back(mat_mul(a.components[i], b.components[i]));
  return out;
}

ProductModQ product_inv(const ProductModQ& a) {
  ProductModQ out;
  for (const auto& c : a.components) out.components.push_back(mat_inv(c));
  return out;
}

RawMat reduce_level(const RawMat& a, u64 q2) {
  require_divides(q2, a.modulus());
  return RawMat::from_unsigned(a.dim(), q2, a.data());
}

MatModQ reduce_level(const MatModQ& a, u64 q2) { return MatModQ::trusted(reduce_level(a.raw(), q2)); }

AffineModQ reduce_level(const AffineModQ& a, u64 q2) {
  AffineModQ out{reduce_level(a.linear, q2), a.trans};
  for (auto& t : out.trans) t %= q2;
  return out;
}

ProductModQ reduce_level(const ProductModQ& a, u64 q2) {
  ProductModQ out;
  for (const auto& c : a.components) out.components.push_back(reduce_level(c, q2));
  return out;
}

bool is_congruent_identity(const RawMat& a, u64 m) {
  require_divides(m, a.modulus());
  for (int i = 0; i < a.dim(); ++i) {
    for (int j = 0; j < a.dim(); ++j) {
      const u64 expect = (i == j) ? 1 % m : 0;
      if (a.at(i, j) % m != expect) return false;
    }
  }
  return true;
}

bool is_congruent_identity(const MatModQ& a, u64 m) { return is_congruent_identity(a.raw(), m); }

bool is_congruent_identity(const AffineModQ& a, u64 m) {
  if (!is_congruent_identity(a.linear, m)) return false;
  for (u64 t : a.trans)
    if (t % m != 0) return false;
  return true;
}

bool is_congruent_identity(const ProductModQ& a, u64 m) {
  for (const auto& c : a.components)
    if (!is_congruent_identity(c, m)) return false;
  return true;
}

SeedCheck check_seed(const MatModQ& g, const SeedConditions& cond) {
  const FactoredModulus& fm = cond.modulus;
  const int L = cond.L;
  if (L < 2) throw PreconditionError("seed level L must be at least 2");
  if (g.modulus() != fm.q()) {
    std::ostringstream os;
    os << "seed modulus " << g.modulus() << " differs from " << fm.q();
    throw PreconditionError(os.str());
  }
  if (fm.factors().empty() || fm.min_exponent() < 4 * (L - 1)) {
    std::ostringstream os;
    os << "modulus too small: every prime exponent must be at least 4(L-1) = " << 4 * (L - 1);
    throw PreconditionError(os.str());
  }
  const int d = g.dim();
  const int near = L - 1;
  const int far = 2 * (L - 1);
  const bool lower = cond.variant == SeedVariant::lower;
  const bool relaxed = cond.strictness == SeedStrictness::relaxed;

  auto fail = [](std::string msg) { return SeedCheck{false, std::move(msg), {}}; };

  SeedCheck out{true, {}, {}};
  const u64 q1 = fm.radical_power(L);
  for (int i = 0; i < d; ++i) {
    if (!is_unit_mod(g.at(i, i), fm.q())) {
      std::ostringstream os;
      os << "diagonal entry " << i << " is not a unit";
      return fail(os.str());
    }
    for (int j = 0; j < i; ++j) {
      if (g.at(i, i) % q1 == g.at(j, j) % q1) {
        std::ostringstream os;
        os << "diagonal entries " << j << " and " << i << " coincide mod q1 = " << q1;
        return fail(os.str());
      }
    }
  }
  for (const auto& f : fm.factors()) {
    const u64 pl = ipow(f.p, L);
    bool degenerate = false;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < i; ++j) degenerate = degenerate || g.at(i, i) % pl == g.at(j, j) % pl;
    if (degenerate) out.degenerate_primes.push_back(f.p);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        if (i == j) continue;
        const bool below = i > j;
        const int want = (below == lower) ? near : far;
        const int v = vp(g.at(i, j) % f.value, f.p, f.alpha);
        const bool saturated = g.at(i, j) % f.value == 0;
        const bool ok = (want == far && relaxed) ? v >= far : (v == want && !saturated);
        if (!ok) {
          std::ostringstream os;
          os << "entry (" << i << "," << j << ") has " << f.p << "-valuation " << v << (saturated ? " (saturated)" : "")
             << ", expected " << (want == far && relaxed ? "at least " : "exactly ") << want;
          return fail(os.str());
        }
      }
    }
  }
  return out;
}

std::string to_string(const RawMat& m) {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < m.dim(); ++i) {
    os << (i ? ",[" : "[");
    for (int j = 0; j < m.dim(); ++j) os << (j ? "," : "") << m.at(i, j);
    os << "]";
  }
  os << "] mod " << m.modulus();
  return os.str();
}

}  // namespace logdiam
