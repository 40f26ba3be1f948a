#include "logdiam/genset.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

namespace logdiam {

using nlohmann::json;

std::string to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::SL: return "SL";
    case GroupKind::SA: return "SA";
    case GroupKind::product: return "product";
  }
  return "?";
}

GroupKind parse_group_kind(const std::string& s) {
  if (s == "SL") return GroupKind::SL;
  if (s == "SA") return GroupKind::SA;
  if (s == "product") return GroupKind::product;
  throw ConfigError("unknown group kind '" + s + "' (expected SL, SA or product)");
}

IntMatrix IntMatrix::identity(int d) {
  IntMatrix m{d, std::vector<i64>(static_cast<std::size_t>(d * d), 0)};
  for (int i = 0; i < d; ++i) m.a[static_cast<std::size_t>(i * d + i)] = 1;
  return m;
}

namespace {

i128 checked(i128 v) {
  constexpr i128 limit = static_cast<i128>(1) << 100;
  if (v > limit || v < -limit) throw PreconditionError("integer matrix arithmetic overflow");
  return v;
}

i128 det_dp(const std::vector<i128>& a, int k) {
  if (k == 0) return 1;
  const std::size_t full = (std::size_t{1} << k) - 1;
  std::vector<i128> dp(full + 1, 0);
  dp[0] = 1;
  for (std::size_t mask = 1; mask <= full; ++mask) {
    const int row = __builtin_popcountll(mask) - 1;
    i128 acc = 0;
    int pos = 0;
    for (int j = 0; j < k; ++j) {
      if (!(mask & (std::size_t{1} << j))) continue;
      const i128 term = checked(a[static_cast<std::size_t>(row * k + j)] * dp[mask ^ (std::size_t{1} << j)]);
      acc = checked(((row + pos) % 2 == 0) ? acc + term : acc - term);
      ++pos;
    }
    dp[mask] = acc;
  }
  return dp[full];
}

i64 narrow(i128 v) {
  if (v > INT64_MAX || v < INT64_MIN) throw PreconditionError("integer matrix entry overflow");
  return static_cast<i64>(v);
}

}  // namespace

i64 int_det(const IntMatrix& m) {
  std::vector<i128> a(m.a.begin(), m.a.end());
  return narrow(det_dp(a, m.d));
}

IntMatrix int_inverse(const IntMatrix& m) {
  if (int_det(m) != 1) throw PreconditionError("integer inverse requires determinant 1");
  const int d = m.d;
  IntMatrix out{d, std::vector<i64>(static_cast<std::size_t>(d * d), 0)};
  if (d == 1) {
    out.a[0] = 1;
    return out;
  }
  std::vector<i128> minor(static_cast<std::size_t>((d - 1) * (d - 1)));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      std::size_t idx = 0;
      for (int r = 0; r < d; ++r) {
        if (r == i) continue;
        for (int c = 0; c < d; ++c) {
          if (c != j) minor[idx++] = m.at(r, c);
        }
      }
      const i128 cof = det_dp(minor, d - 1);
      out.a[static_cast<std::size_t>(j * d + i)] = narrow((i + j) % 2 == 0 ? cof : -cof);
    }
  }
  return out;
}

IntMatrix int_mul(const IntMatrix& a, const IntMatrix& b) {
  if (a.d != b.d) throw PreconditionError("integer matrix dimension mismatch");
  const int d = a.d;
  IntMatrix out{d, std::vector<i64>(static_cast<std::size_t>(d * d), 0)};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      i128 acc = 0;
      for (int k = 0; k < d; ++k) acc = checked(acc + static_cast<i128>(a.at(i, k)) * b.at(k, j));
      out.a[static_cast<std::size_t>(i * d + j)] = narrow(acc);
    }
  return out;
}

namespace {

IntElement int_element_inverse(GroupKind kind, const IntElement& g) {
  IntElement inv;
  for (const auto& b : g.blocks) inv.blocks.push_back(int_inverse(b));
  if (kind == GroupKind::SA) {
    const IntMatrix& h = inv.blocks.front();
    inv.trans.assign(g.trans.size(), 0);
    for (int i = 0; i < h.d; ++i) {
      i128 acc = 0;
      for (int k = 0; k < h.d; ++k) acc = checked(acc + static_cast<i128>(h.at(i, k)) * g.trans[static_cast<std::size_t>(k)]);
      inv.trans[static_cast<std::size_t>(i)] = narrow(-acc);
    }
  }
  return inv;
}

void validate_shape(GroupKind kind, const std::vector<int>& dims, const IntElement& g) {
  const std::size_t nblocks = kind == GroupKind::product ? dims.size() : 1;
  if (g.blocks.size() != nblocks) throw ConfigError("generator has the wrong number of blocks");
  for (std::size_t i = 0; i < nblocks; ++i) {
    const int d = dims[i];
    if (g.blocks[i].d != d || g.blocks[i].a.size() != static_cast<std::size_t>(d * d)) {
      throw ConfigError("generator block has the wrong dimension");
    }
    if (int_det(g.blocks[i]) != 1) throw ConfigError("generator does not have determinant 1 over Z");
  }
  const std::size_t ntrans = kind == GroupKind::SA ? static_cast<std::size_t>(dims[0]) : 0;
  if (g.trans.size() != ntrans) throw ConfigError("generator has the wrong translation length");
}

}  // namespace

GenSet GenSet::make(GroupKind kind, std::vector<int> dims, std::vector<IntElement> generators, bool close_symmetric) {
  if (dims.empty()) throw ConfigError("group needs at least one dimension");
  if (kind != GroupKind::product && dims.size() != 1) throw ConfigError("SL and SA groups take exactly one dimension");
  for (int d : dims) {
    if (d < 1 || d > kMaxDim) throw ConfigError("dimension out of range");
  }
  if (generators.empty()) throw ConfigError("generating set is empty");
  for (const auto& g : generators) validate_shape(kind, dims, g);

  GenSet s;
  s.kind_ = kind;
  s.dims_ = std::move(dims);
  s.gens_ = std::move(generators);
  const std::size_t original = s.gens_.size();
  s.inverse_.assign(original, SIZE_MAX);
  for (std::size_t i = 0; i < s.gens_.size(); ++i) {
    if (i < s.inverse_.size() && s.inverse_[i] != SIZE_MAX) continue;
    const IntElement inv = int_element_inverse(kind, s.gens_[i]);
    std::size_t found = SIZE_MAX;
    for (std::size_t j = 0; j < s.gens_.size(); ++j) {
      if (s.gens_[j] == inv) {
        found = j;
        break;
      }
    }
    if (found == SIZE_MAX) {
      if (!close_symmetric) {
        std::ostringstream os;
        os << "generating set is not symmetric: inverse of generator " << i << " is missing";
        throw ConfigError(os.str());
      }
      s.gens_.push_back(inv);
      s.inverse_.push_back(i);
      found = s.gens_.size() - 1;
    }
    if (i >= s.inverse_.size()) s.inverse_.resize(i + 1, SIZE_MAX);
    s.inverse_[i] = found;
    if (found >= s.inverse_.size()) s.inverse_.resize(found + 1, SIZE_MAX);
    s.inverse_[found] = i;
  }
  return s;
}

GenSet elementary_sl(int d) {
  std::vector<IntElement> gens;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      for (i64 sign : {1, -1}) {
        IntMatrix m = IntMatrix::identity(d);
        m.a[static_cast<std::size_t>(i * d + j)] = sign;
        gens.push_back({{m}, {}});
      }
    }
  }
  // For d = 2 this is T, T^-1, U, U^-1.
  return GenSet::make(GroupKind::SL, {d}, std::move(gens));
}

GenSet elementary_sa(int d) {
  std::vector<IntElement> gens;
  const GenSet linear = elementary_sl(d);
  for (const auto& g : linear.generators()) gens.push_back({g.blocks, std::vector<i64>(static_cast<std::size_t>(d), 0)});
  for (int i = 0; i < d; ++i) {
    for (i64 sign : {1, -1}) {
      std::vector<i64> t(static_cast<std::size_t>(d), 0);
      t[static_cast<std::size_t>(i)] = sign;
      gens.push_back({{IntMatrix::identity(d)}, t});
    }
  }
  return GenSet::make(GroupKind::SA, {d}, std::move(gens));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

IntMatrix int_matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix must be a non-empty array of rows");
  IntMatrix m;
  m.d = static_cast<int>(j.size());
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != j.size()) throw ConfigError("matrix must be square");
    for (const auto& v : row) {
      if (!v.is_number_integer()) throw ConfigError("matrix entries must be integers");
      m.a.push_back(v.get<i64>());
    }
  }
  return m;
}

json int_matrix_to_json(const IntMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.d; ++i) {
    json row = json::array();
    for (int j = 0; j < m.d; ++j) row.push_back(m.at(i, j));
    rows.push_back(row);
  }
  return rows;
}

bool is_matrix_json(const json& j) { return j.is_array() && !j.empty() && j[0].is_array() && (j[0].empty() || j[0][0].is_number()); }

IntElement product_generator_from_json(const json& j, const std::vector<int>& dims) {
  IntElement g;
  if (j.is_object() && j.contains("components")) {
    for (const auto& c : j.at("components")) g.blocks.push_back(int_matrix_from_json(c));
  } else if (is_matrix_json(j)) {
    // Block-diagonal integer matrix.
    const IntMatrix big = int_matrix_from_json(j);
    const int total = std::accumulate(dims.begin(), dims.end(), 0);
    if (big.d != total) throw ConfigError("block-diagonal generator size differs from sum of dims");
    int offset = 0;
    for (int d : dims) {
      IntMatrix block{d, {}};
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) block.a.push_back(big.at(offset + r, offset + c));
      g.blocks.push_back(block);
      offset += d;
    }
    for (int r = 0; r < total; ++r) {
      for (int c = 0; c < total; ++c) {
        int br = 0, bc = 0, acc = 0;
        for (std::size_t b = 0; b < dims.size(); ++b) {
          if (r >= acc && r < acc + dims[b]) br = static_cast<int>(b);
          if (c >= acc && c < acc + dims[b]) bc = static_cast<int>(b);
          acc += dims[b];
        }
        if (br != bc && big.at(r, c) != 0) throw ConfigError("product generator is not block diagonal");
      }
    }
  } else if (j.is_array()) {
    for (const auto& c : j) g.blocks.push_back(int_matrix_from_json(c));
  } else {
    throw ConfigError("product generator must be a list of component matrices");
  }
  return g;
}

}  // namespace

GenSet genset_from_json(const json& j) {
  try {
    if (!j.is_object()) throw ConfigError("group spec must be a JSON object");
    const GroupKind kind = parse_group_kind(j.at("kind").get<std::string>());
    std::vector<int> dims = j.at("dims").get<std::vector<int>>();
    const bool close = j.value("close_symmetric", false);
    std::vector<IntElement> gens;
    for (const auto& g : j.at("generators")) {
      switch (kind) {
        case GroupKind::SL: gens.push_back({{int_matrix_from_json(g)}, {}}); break;
        case GroupKind::SA:
          if (!g.is_object()) throw ConfigError("SA generators must be {\"linear\":..., \"trans\":...}");
          gens.push_back({{int_matrix_from_json(g.at("linear"))}, g.at("trans").get<std::vector<i64>>()});
          break;
        case GroupKind::product: gens.push_back(product_generator_from_json(g, dims)); break;
      }
    }
    return GenSet::make(kind, std::move(dims), std::move(gens), close);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed group spec: ") + e.what());
  }
}

json genset_to_json(const GenSet& s) {
  json gens = json::array();
  for (const auto& g : s.generators()) {
    switch (s.kind()) {
      case GroupKind::SL: gens.push_back(int_matrix_to_json(g.blocks[0])); break;
      case GroupKind::SA: gens.push_back({{"linear", int_matrix_to_json(g.blocks[0])}, {"trans", g.trans}}); break;
      case GroupKind::product: {
        json comps = json::array();
        for (const auto& b : g.blocks) comps.push_back(int_matrix_to_json(b));
        gens.push_back({{"components", comps}});
        break;
      }
    }
  }
  return {{"kind", to_string(s.kind())}, {"dims", s.dims()}, {"generators", gens}};
}

GenSet load_genset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open group spec file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
  return genset_from_json(j);
}

// ---------------------------------------------------------------------------
// Elements

GroupKind kind_of(const GroupElement& g) {
  return std::visit(
      [](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, MatModQ>) return GroupKind::SL;
        else if constexpr (std::is_same_v<T, AffineModQ>) return GroupKind::SA;
        else return GroupKind::product;
      },
      g);
}

u64 modulus_of(const GroupElement& g) {
  return std::visit([](const auto& e) { return e.modulus(); }, g);
}

GroupElement element_identity(GroupKind kind, const std::vector<int>& dims, u64 q) {
  switch (kind) {
    case GroupKind::SL: return MatModQ::identity(dims.at(0), q);
    case GroupKind::SA: return AffineModQ::identity(dims.at(0), q);
    case GroupKind::product: return ProductModQ::identity(dims, q);
  }
  throw InternalError("unknown group kind");
}

GroupElement element_mul(const GroupElement& a, const GroupElement& b) {
  if (a.index() != b.index()) throw PreconditionError("cannot multiply elements of different group kinds");
  switch (a.index()) {
    case 0: return mat_mul(std::get<0>(a), std::get<0>(b));
    case 1: return affine_mul(std::get<1>(a), std::get<1>(b));
    default: return product_mul(std::get<2>(a), std::get<2>(b));
  }
}

GroupElement element_inv(const GroupElement& a) {
  switch (a.index()) {
    case 0: return mat_inv(std::get<0>(a));
    case 1: return affine_inv(std::get<1>(a));
    default: return product_inv(std::get<2>(a));
  }
}

GroupElement element_reduce(const GroupElement& a, u64 q2) {
  return std::visit([q2](const auto& e) -> GroupElement { return reduce_level(e, q2); }, a);
}

bool element_is_congruent_identity(const GroupElement& a, u64 m) {
  return std::visit([m](const auto& e) { return is_congruent_identity(e, m); }, a);
}

GroupElement reduce_generator(const GenSet& s, std::size_t i, u64 q) {
  const IntElement& g = s.generators().at(i);
  switch (s.kind()) {
    case GroupKind::SL: return MatModQ::trusted(RawMat::from_signed(g.blocks[0].d, q, g.blocks[0].a));
    case GroupKind::SA: {
      std::vector<u64> t;
      for (i64 v : g.trans) t.push_back(reduce_signed(v, q));
      return AffineModQ{MatModQ::trusted(RawMat::from_signed(g.blocks[0].d, q, g.blocks[0].a)), std::move(t)};
    }
    case GroupKind::product: {
      ProductModQ p;
      for (const auto& b : g.blocks) p.components.push_back(MatModQ::trusted(RawMat::from_signed(b.d, q, b.a)));
      return p;
    }
  }
  throw InternalError("unknown group kind");
}

json matrix_to_json(const RawMat& m) {
  json rows = json::array();
  for (int i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.dim(); ++j) row.push_back(m.at(i, j));
    rows.push_back(row);
  }
  return rows;
}

RawMat matrix_from_json(const json& j, u64 q) {
  const IntMatrix m = int_matrix_from_json(j);
  return RawMat::from_signed(m.d, q, m.a);
}

json element_to_json(const GroupElement& g) {
  switch (g.index()) {
    case 0: return matrix_to_json(std::get<0>(g).raw());
    case 1: {
      const auto& a = std::get<1>(g);
      return {{"linear", matrix_to_json(a.linear.raw())}, {"trans", a.trans}};
    }
    default: {
      json comps = json::array();
      for (const auto& c : std::get<2>(g).components) comps.push_back(matrix_to_json(c.raw()));
      return {{"components", comps}};
    }
  }
}

GroupElement element_from_json(const json& j, GroupKind kind, const std::vector<int>& dims, u64 q) {
  try {
    switch (kind) {
      case GroupKind::SL: {
        RawMat m = matrix_from_json(j, q);
        if (m.dim() != dims.at(0)) throw ConfigError("element dimension differs from the group");
        return MatModQ::from_raw(std::move(m));
      }
      case GroupKind::SA: {
        RawMat m = matrix_from_json(j.at("linear"), q);
        if (m.dim() != dims.at(0)) throw ConfigError("element dimension differs from the group");
        std::vector<u64> t;
        for (const auto& v : j.at("trans")) t.push_back(reduce_signed(v.get<i64>(), q));
        return AffineModQ::make(MatModQ::from_raw(std::move(m)), std::move(t));
      }
      case GroupKind::product: {
        const json& comps = j.is_object() ? j.at("components") : j;
        if (comps.size() != dims.size()) throw ConfigError("element arity differs from the group");
        std::vector<MatModQ> parts;
        for (std::size_t i = 0; i < comps.size(); ++i) {
          RawMat m = matrix_from_json(comps[i], q);
          if (m.dim() != dims[i]) throw ConfigError("element component dimension differs from the group");
          parts.push_back(MatModQ::from_raw(std::move(m)));
        }
        return ProductModQ::make(std::move(parts));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed element: ") + e.what());
  }
  throw InternalError("unknown group kind");
}

}  // namespace logdiam
