#include "logdiam/cayley.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <variant>

namespace logdiam {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
constexpr std::size_t kRepsPerKey = 4;

u128 checked_mul(u128 a, u128 b) {
  if (a != 0 && b > ~u128{0} / a) throw BudgetError("group order does not fit in 128 bits");
  return a * b;
}

u128 checked_pow(u128 base, u64 e) {
  u128 r = 1;
  for (u64 i = 0; i < e; ++i) r = checked_mul(r, base);
  return r;
}

u128 sl_order(int d, u64 q) {
  if (q == 1) return 1;
  u128 r = 1;
  const auto fm = factorize(q);
  for (const auto& f : fm.factors()) {
    const u64 dd = static_cast<u64>(d);
    r = checked_mul(r, checked_pow(f.p, (static_cast<u64>(f.alpha) - 1) * (dd * dd - 1)));
    r = checked_mul(r, checked_pow(f.p, dd * (dd - 1) / 2));
    for (int k = 2; k <= d; ++k) r = checked_mul(r, checked_pow(f.p, static_cast<u64>(k)) - 1);
  }
  return r;
}

/// Group elements as flat arrays of residues: blocks row-major, then the
/// translation for SA.
class FlatGroup {
 public:
  FlatGroup(const GenSet& s, u64 q) : kind_(s.kind()), dims_(s.dims()), q_(q) {
    std::size_t off = 0;
    for (int d : dims_) {
      blocks_.push_back({off, d});
      off += static_cast<std::size_t>(d * d);
    }
    if (kind_ == GroupKind::SA) {
      trans_ = off;
      off += static_cast<std::size_t>(dims_.front());
    }
    width_ = off;
    const int maxd = *std::max_element(dims_.begin(), dims_.end());
    const u128 bound = static_cast<u128>(q - 1) * (q - 1) * static_cast<u128>(maxd + 1);
    fast_ = bound < (static_cast<u128>(1) << 64);
    identity_ = flatten(element_identity(kind_, dims_, q));
    for (std::size_t i = 0; i < s.size(); ++i) gens_.push_back(flatten(reduce_generator(s, i, q)));
  }

  std::size_t width() const { return width_; }
  u64 q() const { return q_; }
  std::size_t num_generators() const { return gens_.size(); }
  const u64* generator(std::size_t i) const { return gens_[i].data(); }
  const std::vector<u64>& identity() const { return identity_; }

  void mul(const u64* a, const u64* b, u64* out) const {
    for (const auto& [off, d] : blocks_) {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          if (fast_) {
            u64 acc = 0;
            for (int k = 0; k < d; ++k) acc += a[off + static_cast<std::size_t>(i * d + k)] * b[off + static_cast<std::size_t>(k * d + j)];
            out[off + static_cast<std::size_t>(i * d + j)] = acc % q_;
          } else {
            u64 acc = 0;
            for (int k = 0; k < d; ++k)
              acc = add_mod(acc, mul_mod(a[off + static_cast<std::size_t>(i * d + k)], b[off + static_cast<std::size_t>(k * d + j)], q_), q_);
            out[off + static_cast<std::size_t>(i * d + j)] = acc;
          }
        }
    }
    if (kind_ == GroupKind::SA) {
      const int d = dims_.front();
      for (int i = 0; i < d; ++i) {
        if (fast_) {
          u64 acc = a[trans_ + static_cast<std::size_t>(i)];
          for (int j = 0; j < d; ++j) acc += a[static_cast<std::size_t>(i * d + j)] * b[trans_ + static_cast<std::size_t>(j)];
          out[trans_ + static_cast<std::size_t>(i)] = acc % q_;
        } else {
          u64 acc = a[trans_ + static_cast<std::size_t>(i)];
          for (int j = 0; j < d; ++j) acc = add_mod(acc, mul_mod(a[static_cast<std::size_t>(i * d + j)], b[trans_ + static_cast<std::size_t>(j)], q_), q_);
          out[trans_ + static_cast<std::size_t>(i)] = acc;
        }
      }
    }
  }

  std::vector<u64> flatten(const GroupElement& g) const {
    if (kind_of(g) != kind_ || modulus_of(g) != q_) throw PreconditionError("element does not belong to this Cayley graph");
    std::vector<u64> out;
    out.reserve(width_);
    auto put = [&](const MatModQ& m, int d) {
      if (m.dim() != d) throw PreconditionError("element has the wrong dimension");
      const auto data = m.raw().data();
      out.insert(out.end(), data.begin(), data.end());
    };
    if (const auto* m = std::get_if<MatModQ>(&g)) {
      put(*m, dims_.front());
    } else if (const auto* a = std::get_if<AffineModQ>(&g)) {
      put(a->linear, dims_.front());
      out.insert(out.end(), a->trans.begin(), a->trans.end());
    } else {
      const auto& p = std::get<ProductModQ>(g);
      if (p.components.size() != dims_.size()) throw PreconditionError("element has the wrong number of components");
      for (std::size_t k = 0; k < dims_.size(); ++k) put(p.components[k], dims_[k]);
    }
    return out;
  }

  GroupElement unflatten(const u64* a) const {
    auto block = [&](std::size_t off, int d) {
      return MatModQ::trusted(RawMat::from_unsigned(d, q_, std::span<const u64>(a + off, static_cast<std::size_t>(d * d))));
    };
    switch (kind_) {
      case GroupKind::SL:
        return block(0, dims_.front());
      case GroupKind::SA:
        return AffineModQ{block(0, dims_.front()), std::vector<u64>(a + trans_, a + width_)};
      case GroupKind::product: {
        ProductModQ p;
        for (const auto& [off, d] : blocks_) p.components.push_back(block(off, d));
        return p;
      }
    }
    throw InternalError("unknown group kind");
  }

 private:
  GroupKind kind_;
  std::vector<int> dims_;
  u64 q_;
  std::vector<std::pair<std::size_t, int>> blocks_;
  std::size_t trans_ = 0;
  std::size_t width_ = 0;
  bool fast_ = false;
  std::vector<u64> identity_;
  std::vector<std::vector<u64>> gens_;
};

enum class PackMode { bits, base, bytes };

struct Packer {
  PackMode mode = PackMode::bits;
  u64 q = 1;
  std::size_t width = 0;
  unsigned bits = 0;
  std::size_t nbytes = 0;

  static Packer choose(u64 q, std::size_t width) {
    Packer p;
    p.q = q;
    p.width = width;
    p.bits = static_cast<unsigned>(std::bit_width(q - 1));
    p.nbytes = std::max<std::size_t>(1, (p.bits + 7) / 8);
    if (p.bits * width <= 128) return p;
    u128 reach = 1;
    bool fits = true;
    for (std::size_t i = 0; i < width && fits; ++i) {
      if (reach > ~u128{0} / q) fits = false;
      else reach *= q;
    }
    p.mode = fits ? PackMode::base : PackMode::bytes;
    return p;
  }

  bool narrow() const { return mode != PackMode::bytes; }

  void encode(const u64* a, u128& k) const {
    k = 0;
    if (mode == PackMode::bits) {
      for (std::size_t i = width; i-- > 0;) k = (k << bits) | a[i];
    } else {
      for (std::size_t i = width; i-- > 0;) k = k * q + a[i];
    }
  }
  void decode(u128 k, u64* a) const {
    if (mode == PackMode::bits) {
      const u128 mask = (static_cast<u128>(1) << bits) - 1;
      for (std::size_t i = 0; i < width; ++i) {
        a[i] = static_cast<u64>(k & mask);
        k >>= bits;
      }
    } else {
      for (std::size_t i = 0; i < width; ++i) {
        a[i] = static_cast<u64>(k % q);
        k /= q;
      }
    }
  }
  void encode(const u64* a, std::string& k) const {
    k.assign(width * nbytes, '\0');
    for (std::size_t i = 0; i < width; ++i)
      for (std::size_t b = 0; b < nbytes; ++b) k[i * nbytes + b] = static_cast<char>((a[i] >> (8 * b)) & 0xff);
  }
  void decode(const std::string& k, u64* a) const {
    for (std::size_t i = 0; i < width; ++i) {
      u64 v = 0;
      for (std::size_t b = nbytes; b-- > 0;) v = (v << 8) | static_cast<unsigned char>(k[i * nbytes + b]);
      a[i] = v;
    }
  }
};

inline u64 splitmix(u64 x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct KeyHash {
  std::size_t operator()(u128 k) const { return splitmix(static_cast<u64>(k) ^ splitmix(static_cast<u64>(k >> 64))); }
  std::size_t operator()(const std::string& k) const { return std::hash<std::string>{}(k); }
};

struct ExpandResult {
  std::size_t added = 0;
  bool capped = false;
  bool stopped = false;
};

/// BFS tree over one Cayley graph. Vertex i was reached from parent[i] by
/// the generator gen[i]; layer k is [layer_end[k-1], layer_end[k]).
template <class Key>
class Tree {
 public:
  Tree(std::shared_ptr<const FlatGroup> fg, Packer pk) : fg_(std::move(fg)), pk_(pk) {}

  const FlatGroup& group() const { return *fg_; }
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::size_t>& layer_end() const { return layer_end_; }
  std::size_t last_layer_size() const {
    return layer_end_.size() < 2 ? layer_end_.back() : layer_end_.back() - layer_end_[layer_end_.size() - 2];
  }
  int radius() const { return static_cast<int>(layer_end_.size()) - 1; }

  Key key_of(const u64* a) const {
    Key k;
    pk_.encode(a, k);
    return k;
  }
  std::vector<u64> flat(std::size_t i) const {
    std::vector<u64> a(fg_->width());
    pk_.decode(keys_[i], a.data());
    return a;
  }
  std::uint32_t find(const Key& k) const {
    const auto it = index_.find(k);
    return it == index_.end() ? kNone : it->second;
  }
  std::uint32_t find(const std::vector<u64>& a) const { return find(key_of(a.data())); }
  int depth(std::size_t i) const {
    return static_cast<int>(std::upper_bound(layer_end_.begin(), layer_end_.end(), i) - layer_end_.begin());
  }
  std::uint32_t parent(std::size_t i) const { return parent_[i]; }
  std::uint16_t gen(std::size_t i) const { return gen_[i]; }

  /// Generators from the root to vertex i.
  std::vector<std::uint32_t> path(std::size_t i) const {
    std::vector<std::uint32_t> out;
    for (std::size_t v = i; parent_[v] != kNone; v = parent_[v]) out.push_back(gen_[v]);
    std::reverse(out.begin(), out.end());
    return out;
  }
  /// Generators from vertex i back to the root (for trees grown with
  /// inverse generators).
  std::vector<std::uint32_t> chain(std::size_t i) const {
    std::vector<std::uint32_t> out;
    for (std::size_t v = i; parent_[v] != kNone; v = parent_[v]) out.push_back(gen_[v]);
    return out;
  }

  /// Removes the newest layer (never the root).
  void drop_last_layer() {
    if (layer_end_.size() < 2) return;
    const std::size_t begin = layer_end_[layer_end_.size() - 2];
    for (std::size_t i = begin; i < keys_.size(); ++i) index_.erase(keys_[i]);
    keys_.resize(begin);
    parent_.resize(begin);
    gen_.resize(begin);
    layer_end_.pop_back();
  }

  void set_root(const std::vector<u64>& a) {
    insert(key_of(a.data()), kNone, 0);
    layer_end_.push_back(1);
  }

  /// Expands the newest layer, multiplying by generator mult[g] and storing
  /// g. on_new sees every new vertex in discovery order; returning true stops.
  ExpandResult expand(const std::vector<std::size_t>& mult, std::size_t cap, int threads,
                      const std::function<bool(std::size_t)>& on_new = {}) {
    ExpandResult r;
    const std::size_t begin = layer_end_.size() < 2 ? 0 : layer_end_[layer_end_.size() - 2];
    const std::size_t end = layer_end_.back();
    const std::size_t w = fg_->width();
    auto accept = [&](const Key& k, std::size_t parent, std::size_t g) {
      if (!insert(k, static_cast<std::uint32_t>(parent), static_cast<std::uint16_t>(g))) return false;
      ++r.added;
      if (on_new && on_new(keys_.size() - 1)) r.stopped = true;
      if (keys_.size() >= cap && !r.stopped) r.capped = true;
      return r.stopped || r.capped;
    };

    const std::size_t n = end - begin;
    const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(n / 4096)));
    if (nthreads <= 1) {
      std::vector<u64> x(w), y(w);
      for (std::size_t i = begin; i < end; ++i) {
        pk_.decode(keys_[i], x.data());
        for (std::size_t g = 0; g < mult.size(); ++g) {
          fg_->mul(x.data(), fg_->generator(mult[g]), y.data());
          if (accept(key_of(y.data()), i, g)) goto done;
        }
      }
    } else {
      struct Candidate {
        Key key;
        std::size_t parent;
        std::size_t gen;
      };
      std::vector<std::vector<Candidate>> parts(static_cast<std::size_t>(nthreads));
      std::vector<std::thread> pool;
      for (int t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t] {
          const std::size_t lo = begin + n * static_cast<std::size_t>(t) / static_cast<std::size_t>(nthreads);
          const std::size_t hi = begin + n * static_cast<std::size_t>(t + 1) / static_cast<std::size_t>(nthreads);
          std::vector<u64> x(w), y(w);
          auto& out = parts[static_cast<std::size_t>(t)];
          for (std::size_t i = lo; i < hi; ++i) {
            pk_.decode(keys_[i], x.data());
            for (std::size_t g = 0; g < mult.size(); ++g) {
              fg_->mul(x.data(), fg_->generator(mult[g]), y.data());
              Key k = key_of(y.data());
              if (index_.find(k) == index_.end()) out.push_back({std::move(k), i, g});
            }
          }
        });
      }
      for (auto& th : pool) th.join();
      for (auto& part : parts)
        for (auto& c : part)
          if (accept(c.key, c.parent, c.gen)) goto done;
    }
  done:
    if (r.added > 0) layer_end_.push_back(keys_.size());
    return r;
  }

 private:
  bool insert(const Key& k, std::uint32_t parent, std::uint16_t g) {
    if (keys_.size() >= kNone) throw BudgetError("vertex count exceeds the index range");
    const auto [it, fresh] = index_.emplace(k, static_cast<std::uint32_t>(keys_.size()));
    if (!fresh) return false;
    keys_.push_back(k);
    parent_.push_back(parent);
    gen_.push_back(g);
    return true;
  }

  std::shared_ptr<const FlatGroup> fg_;
  Packer pk_;
  std::unordered_map<Key, std::uint32_t, KeyHash> index_;
  std::vector<Key> keys_;
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint16_t> gen_;
  std::vector<std::size_t> layer_end_;
};

using AnyTree = std::variant<Tree<u128>, Tree<std::string>>;

AnyTree make_tree(const std::shared_ptr<const FlatGroup>& fg) {
  const Packer pk = Packer::choose(fg->q(), fg->width());
  if (pk.narrow()) return Tree<u128>(fg, pk);
  return Tree<std::string>(fg, pk);
}

std::vector<std::size_t> forward_mult(const GenSet& s) {
  std::vector<std::size_t> m(s.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = i;
  return m;
}

void check_generator_count(const GenSet& s) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max()) throw PreconditionError("too many generators");
  if (s.size() == 0) throw PreconditionError("empty generating set");
}

std::size_t vertex_cap(const GenSet& s, u64 q, const BfsOptions& opts) {
  return std::max<std::size_t>(1, opts.memory_budget / bytes_per_vertex(s, q));
}

CayleyWord to_word(std::vector<std::uint32_t> v) { return CayleyWord{std::move(v)}; }

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::string key_bytes(const std::vector<u64>& v) {
  std::string s(v.size() * sizeof(u64), '\0');
  std::memcpy(s.data(), v.data(), s.size());
  return s;
}

}  // namespace

// ---------------------------------------------------------------- words

GroupElement evaluate_word(const GenSet& s, u64 q, const CayleyWord& w) {
  std::vector<GroupElement> gens;
  for (std::size_t i = 0; i < s.size(); ++i) gens.push_back(reduce_generator(s, i, q));
  GroupElement acc = element_identity(s.kind(), s.dims(), q);
  for (auto i : w.indices) {
    if (i >= gens.size()) throw PreconditionError("word index out of range");
    acc = element_mul(acc, gens[i]);
  }
  return acc;
}

CayleyWord inverse_word(const GenSet& s, const CayleyWord& w) {
  CayleyWord out;
  out.indices.reserve(w.length());
  for (auto it = w.indices.rbegin(); it != w.indices.rend(); ++it) {
    if (*it >= s.size()) throw PreconditionError("word index out of range");
    out.indices.push_back(static_cast<std::uint32_t>(s.inverse_of()[*it]));
  }
  return out;
}

nlohmann::json cayley_word_to_json(const CayleyWord& w) { return {{"indices", w.indices}}; }

CayleyWord cayley_word_from_json(const nlohmann::json& j, const GenSet& s) {
  if (!j.is_object() || !j.contains("indices") || !j["indices"].is_array()) throw ConfigError("word needs an \"indices\" array");
  CayleyWord w;
  for (const auto& v : j["indices"]) {
    if (!v.is_number_unsigned() || v.get<u64>() >= s.size()) throw ConfigError("word index out of range");
    w.indices.push_back(v.get<std::uint32_t>());
  }
  return w;
}

GenSet project_component(const GenSet& s, int k) {
  if (k < 0 || static_cast<std::size_t>(k) >= s.dims().size()) throw PreconditionError("component index out of range");
  std::vector<IntElement> gens;
  for (const auto& g : s.generators()) gens.push_back({{g.blocks[static_cast<std::size_t>(k)]}, {}});
  return GenSet::make(GroupKind::SL, {s.dims()[static_cast<std::size_t>(k)]}, std::move(gens));
}

// ---------------------------------------------------------------- orders

u128 group_order(GroupKind kind, const std::vector<int>& dims, u64 q) {
  if (q == 0) throw PreconditionError("modulus must be positive");
  u128 r = 1;
  for (int d : dims) r = checked_mul(r, sl_order(d, q));
  if (kind == GroupKind::SA) r = checked_mul(r, checked_pow(q, static_cast<u64>(dims.front())));
  return r;
}

std::string to_string(u128 v) {
  if (v == 0) return "0";
  std::string s;
  while (v > 0) {
    s.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(s.begin(), s.end());
  return s;
}

std::size_t bytes_per_vertex(const GenSet& s, u64 q) {
  std::size_t width = 0;
  for (int d : s.dims()) width += static_cast<std::size_t>(d * d);
  if (s.kind() == GroupKind::SA) width += static_cast<std::size_t>(s.dim());
  const Packer pk = Packer::choose(q, width);
  // key copy in the vertex list and in the hash node, node overhead, bucket,
  // parent and generator
  const std::size_t key = pk.narrow() ? 16 : 32 + width * pk.nbytes;
  return 2 * key + 40 + 8 + 6;
}

// ---------------------------------------------------------------- enumeration

struct EnumeratedGroup::Impl {
  std::shared_ptr<const FlatGroup> fg;
  AnyTree tree;
  std::vector<std::size_t> layer_sizes;
};

std::size_t EnumeratedGroup::size() const {
  return std::visit([](const auto& t) { return t.size(); }, impl_->tree);
}

int EnumeratedGroup::depth() const { return static_cast<int>(impl_->layer_sizes.size()) - 1; }

const std::vector<std::size_t>& EnumeratedGroup::layer_sizes() const { return impl_->layer_sizes; }

std::optional<std::size_t> EnumeratedGroup::index_of(const GroupElement& g) const {
  const auto flat = impl_->fg->flatten(g);
  const std::uint32_t i = std::visit([&](const auto& t) { return t.find(flat); }, impl_->tree);
  if (i == kNone) return std::nullopt;
  return i;
}

GroupElement EnumeratedGroup::element(std::size_t i) const {
  if (i >= size()) throw PreconditionError("vertex index out of range");
  const auto flat = std::visit([&](const auto& t) { return t.flat(i); }, impl_->tree);
  return impl_->fg->unflatten(flat.data());
}

int EnumeratedGroup::distance(std::size_t i) const {
  if (i >= size()) throw PreconditionError("vertex index out of range");
  return std::visit([&](const auto& t) { return t.depth(i); }, impl_->tree);
}

CayleyWord EnumeratedGroup::word(std::size_t i) const {
  if (i >= size()) throw PreconditionError("vertex index out of range");
  return to_word(std::visit([&](const auto& t) { return t.path(i); }, impl_->tree));
}

EnumeratedGroup enumerate_from(const GenSet& s, u64 q, const GroupElement& root, const BfsOptions& opts) {
  check_generator_count(s);
  const std::size_t per = bytes_per_vertex(s, q);
  const u128 order = group_order(s.kind(), s.dims(), q);
  if (order > static_cast<u128>(opts.memory_budget / per)) {
    throw BudgetError("group of order " + to_string(order) + " mod " + std::to_string(q) + " needs more than the " +
                      std::to_string(opts.memory_budget) + " byte budget");
  }
  auto fg = std::make_shared<const FlatGroup>(s, q);
  auto impl = std::make_shared<EnumeratedGroup::Impl>(EnumeratedGroup::Impl{fg, make_tree(fg), {}});
  const auto mult = forward_mult(s);
  const std::size_t cap = vertex_cap(s, q, opts) + 1;
  std::visit(
      [&](auto& t) {
        t.set_root(impl->fg->flatten(root));
        while (true) {
          const auto r = t.expand(mult, cap, opts.threads);
          if (r.capped) throw BudgetError("closure exceeds the vertex budget");
          if (r.added == 0) break;
        }
        std::size_t prev = 0;
        for (std::size_t e : t.layer_end()) {
          impl->layer_sizes.push_back(e - prev);
          prev = e;
        }
      },
      impl->tree);
  EnumeratedGroup out;
  out.impl_ = std::move(impl);
  return out;
}

EnumeratedGroup enumerate_group(const GenSet& s, u64 q, const BfsOptions& opts) {
  return enumerate_from(s, q, element_identity(s.kind(), s.dims(), q), opts);
}

// ---------------------------------------------------------------- distances

namespace {

template <class Key>
DistanceResult meet_word(const Tree<Key>& fwd, std::size_t fi, const Tree<Key>& bwd, std::size_t bi) {
  DistanceResult r;
  r.word.indices = fwd.path(fi);
  const auto tail = bwd.chain(bi);
  r.word.indices.insert(r.word.indices.end(), tail.begin(), tail.end());
  r.distance = static_cast<int>(r.word.length());
  return r;
}

/// Scans the newest layer of `grown` for vertices of `other`; returns the
/// pair (grown index, other index) with the smallest total depth.
template <class Key>
std::optional<std::pair<std::size_t, std::size_t>> best_meet(const Tree<Key>& grown, const Tree<Key>& other) {
  const auto& ends = grown.layer_end();
  const std::size_t begin = ends.size() < 2 ? 0 : ends[ends.size() - 2];
  std::optional<std::pair<std::size_t, std::size_t>> best;
  int best_total = std::numeric_limits<int>::max();
  for (std::size_t i = begin; i < ends.back(); ++i) {
    const std::uint32_t j = other.find(grown.flat(i));
    if (j == kNone) continue;
    const int total = grown.depth(i) + other.depth(j);
    if (total < best_total) {
      best_total = total;
      best = std::pair{i, static_cast<std::size_t>(j)};
    }
  }
  return best;
}

}  // namespace

DistanceResult bfs_distance(const GenSet& s, u64 q, const GroupElement& target, const BfsOptions& opts) {
  check_generator_count(s);
  auto fg = std::make_shared<const FlatGroup>(s, q);
  const auto tflat = fg->flatten(target);
  const std::size_t cap = vertex_cap(s, q, opts);
  const auto fmult = forward_mult(s);
  std::vector<std::size_t> bmult(s.size());
  for (std::size_t g = 0; g < s.size(); ++g) bmult[g] = s.inverse_of()[g];

  AnyTree fwd_any = make_tree(fg);
  return std::visit(
      [&](auto& fwd) -> DistanceResult {
        using T = std::decay_t<decltype(fwd)>;
        T bwd = fwd;
        fwd.set_root(fg->identity());
        bwd.set_root(tflat);
        if (fwd.find(tflat) != kNone) return {};
        while (true) {
          const bool grow_fwd = fwd.last_layer_size() <= bwd.last_layer_size();
          T& grown = grow_fwd ? fwd : bwd;
          const T& other = grow_fwd ? bwd : fwd;
          const auto r = grown.expand(grow_fwd ? fmult : bmult, cap, opts.threads);
          if (r.capped || fwd.size() + bwd.size() > cap) throw BudgetError("bidirectional search exceeds the vertex budget");
          if (r.added == 0) throw TargetUnreachable("target is not in the subgroup generated by S mod " + std::to_string(q));
          if (const auto m = best_meet(grown, other)) {
            return grow_fwd ? meet_word(fwd, m->first, bwd, m->second) : meet_word(fwd, m->second, bwd, m->first);
          }
        }
      },
      fwd_any);
}

struct DistanceOracle::Impl {
  GenSet s;
  u64 q;
  BfsOptions opts;
  std::shared_ptr<const FlatGroup> fg;
  AnyTree ball;
  bool complete = false;
  struct Memo {
    std::mutex m;
    std::map<std::vector<u64>, DistanceResult> answers;
  };
  std::shared_ptr<Memo> memo = std::make_shared<Memo>();
};

DistanceOracle::DistanceOracle(const GenSet& s, u64 q, std::size_t ball_vertices, const BfsOptions& opts) {
  check_generator_count(s);
  auto fg = std::make_shared<const FlatGroup>(s, q);
  auto impl = std::make_shared<Impl>(Impl{s, q, opts, fg, make_tree(fg), false});
  const std::size_t cap = std::min(vertex_cap(s, q, opts), std::max<std::size_t>(ball_vertices, 1));
  const auto mult = forward_mult(s);
  std::visit(
      [&](auto& t) {
        t.set_root(impl->fg->identity());
        // Only complete layers are kept: a layer is attempted when the
        // ball is still below the cap and discarded if it overflows.
        while (t.size() < cap) {
          const auto r = t.expand(mult, std::numeric_limits<std::size_t>::max(), opts.threads);
          if (r.added == 0) {
            impl->complete = true;
            break;
          }
          if (t.size() > cap && t.radius() > 1) {
            t.drop_last_layer();
            break;
          }
        }
      },
      impl->ball);
  impl_ = std::move(impl);
}

DistanceResult DistanceOracle::query(const GroupElement& target) const {
  const auto& im = *impl_;
  const auto tflat = im.fg->flatten(target);
  {
    std::lock_guard lock(im.memo->m);
    if (const auto it = im.memo->answers.find(tflat); it != im.memo->answers.end()) return it->second;
  }
  const std::size_t cap = vertex_cap(im.s, im.q, im.opts);
  std::vector<std::size_t> bmult(im.s.size());
  for (std::size_t g = 0; g < im.s.size(); ++g) bmult[g] = im.s.inverse_of()[g];
  DistanceResult out = std::visit(
      [&](const auto& ball) -> DistanceResult {
        using T = std::decay_t<decltype(ball)>;
        const std::uint32_t hit = ball.find(tflat);
        if (hit != kNone) return {ball.depth(hit), to_word(ball.path(hit))};
        if (im.complete) throw TargetUnreachable("target is not in the subgroup generated by S mod " + std::to_string(im.q));
        T bwd(im.fg, Packer::choose(im.q, im.fg->width()));
        bwd.set_root(tflat);
        while (true) {
          const auto r = bwd.expand(bmult, cap, im.opts.threads);
          if (r.capped || ball.size() + bwd.size() > cap) throw BudgetError("distance query exceeds the vertex budget");
          if (r.added == 0) throw TargetUnreachable("target is not in the subgroup generated by S mod " + std::to_string(im.q));
          if (const auto m = best_meet(bwd, ball)) return meet_word(ball, m->second, bwd, m->first);
        }
      },
      im.ball);
  std::lock_guard lock(im.memo->m);
  im.memo->answers.emplace(tflat, out);
  return out;
}

int DistanceOracle::ball_radius() const {
  return std::visit([](const auto& t) { return t.radius(); }, impl_->ball);
}

std::size_t DistanceOracle::ball_size() const {
  return std::visit([](const auto& t) { return t.size(); }, impl_->ball);
}

bool DistanceOracle::complete() const { return impl_->complete; }
const GenSet& DistanceOracle::genset() const { return impl_->s; }
u64 DistanceOracle::q() const { return impl_->q; }

// ---------------------------------------------------------------- diameters

DiameterRecord diameter(const GenSet& s, u64 q, const BfsOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto g = enumerate_group(s, q, opts);
  DiameterRecord r;
  r.q = q;
  r.order = g.size();
  r.diameter = g.depth();
  if (q >= 2) r.ratio = r.diameter / std::log(static_cast<double>(q));
  r.ms = elapsed_ms(t0);
  return r;
}

ScanResult diameter_scan(const GenSet& s, std::vector<u64> qs, const BfsOptions& opts) {
  std::sort(qs.begin(), qs.end());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
  ScanResult out;
  for (u64 q : qs) {
    try {
      out.records.push_back(diameter(s, q, opts));
    } catch (const BudgetError& e) {
      out.failures.push_back({q, e.what()});
      continue;
    }
    const auto& r = out.records.back();
    if (q >= 3 && r.ratio && (!out.fitted_c || *r.ratio > *out.fitted_c)) {
      out.fitted_c = r.ratio;
      out.argmax_q = q;
    }
  }
  return out;
}

std::string scan_csv(const ScanResult& r, bool stable) {
  std::ostringstream os;
  os << "q,|Xq|,diam,ratio,ms\n";
  char buf[64];
  for (const auto& rec : r.records) {
    os << rec.q << ',' << to_string(rec.order) << ',' << rec.diameter << ',';
    if (rec.ratio) {
      std::snprintf(buf, sizeof buf, "%.6f", *rec.ratio);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.3f", stable ? 0.0 : rec.ms);
    os << ',' << buf << '\n';
  }
  return os.str();
}

nlohmann::json scan_summary(const ScanResult& r) {
  nlohmann::json j;
  j["records"] = r.records.size();
  j["fitted_c"] = r.fitted_c ? nlohmann::json(*r.fitted_c) : nlohmann::json(nullptr);
  j["argmax_q"] = r.argmax_q ? nlohmann::json(*r.argmax_q) : nlohmann::json(nullptr);
  j["failures"] = nlohmann::json::array();
  for (const auto& f : r.failures) j["failures"].push_back({{"q", f.q}, {"reason", f.reason}});
  return j;
}

bool surjectivity_check(const GenSet& s, u64 q, const BfsOptions& opts) {
  if (q == 1) return true;
  return static_cast<u128>(enumerate_group(s, q, opts).size()) == group_order(s.kind(), s.dims(), q);
}

// ---------------------------------------------------------------- search

namespace {

SearchResult random_walks(const GenSet& s, u64 q, const FlatGroup& fg, const ElementPredicate& pred, const SearchOptions& opts,
                          std::size_t examined) {
  SearchResult out;
  out.examined = examined;
  if (q < 2 || opts.walk_retries <= 0) return out;
  const int len = 4 * static_cast<int>(std::ceil(opts.c_guess * std::log(static_cast<double>(q))));
  std::mt19937_64 rng(opts.seed);
  std::vector<u64> x(fg.width()), y(fg.width());
  for (int attempt = 0; attempt < opts.walk_retries; ++attempt) {
    x = fg.identity();
    CayleyWord w;
    for (int step = 0; step < len; ++step) {
      const auto g = static_cast<std::uint32_t>(rng() % s.size());
      fg.mul(x.data(), fg.generator(g), y.data());
      std::swap(x, y);
      w.indices.push_back(g);
      ++out.examined;
      GroupElement e = fg.unflatten(x.data());
      if (pred(e)) {
        out.found = true;
        out.element = std::move(e);
        out.word = std::move(w);
        out.radius = static_cast<int>(out.word.length());
        out.via_walk = true;
        return out;
      }
    }
  }
  return out;
}

}  // namespace

SearchResult search_with_predicate(const GenSet& s, u64 q, const ElementPredicate& pred, const SearchOptions& opts) {
  check_generator_count(s);
  auto fg = std::make_shared<const FlatGroup>(s, q);
  AnyTree any = make_tree(fg);
  const std::size_t cap = std::min(opts.max_vertices, vertex_cap(s, q, opts.bfs));
  const auto mult = forward_mult(s);
  return std::visit(
      [&](auto& t) -> SearchResult {
        SearchResult out;
        std::optional<std::size_t> hit;
        auto test = [&](std::size_t i) {
          ++out.examined;
          if (pred(fg->unflatten(t.flat(i).data()))) hit = i;
          return hit.has_value();
        };
        t.set_root(fg->identity());
        bool exhausted = false;
        if (!test(0)) {
          while (t.radius() < opts.max_radius) {
            const auto r = t.expand(mult, cap, opts.bfs.threads, test);
            if (r.stopped || r.capped) break;
            if (r.added == 0) {
              exhausted = true;
              break;
            }
          }
        }
        if (hit) {
          out.found = true;
          out.element = fg->unflatten(t.flat(*hit).data());
          out.word = to_word(t.path(*hit));
          out.radius = t.depth(*hit);
          return out;
        }
        if (exhausted) return out;
        return random_walks(s, q, *fg, pred, opts, out.examined);
      },
      any);
}

SearchResult search_in_kernel(const GenSet& s, u64 q, const CosetKey& key, const ElementPredicate& pred, const SearchOptions& opts) {
  check_generator_count(s);
  auto fg = std::make_shared<const FlatGroup>(s, q);
  AnyTree any = make_tree(fg);
  const std::size_t cap = std::min(opts.max_vertices, vertex_cap(s, q, opts.bfs));
  const auto mult = forward_mult(s);
  return std::visit(
      [&](auto& t) -> SearchResult {
        SearchResult out;
        std::unordered_map<std::string, std::vector<std::uint32_t>> reps;
        std::optional<GroupElement> found;
        CayleyWord found_word;
        auto visit = [&](std::size_t i) {
          const GroupElement y = fg->unflatten(t.flat(i).data());
          auto& bucket = reps[key_bytes(key(y))];
          for (std::uint32_t x : bucket) {
            ++out.examined;
            const GroupElement ex = fg->unflatten(t.flat(x).data());
            GroupElement c = element_mul(element_inv(ex), y);
            if (pred(c)) {
              found = std::move(c);
              found_word = inverse_word(s, to_word(t.path(x)));
              found_word.append(to_word(t.path(i)));
              return true;
            }
          }
          if (bucket.size() < kRepsPerKey) bucket.push_back(static_cast<std::uint32_t>(i));
          return false;
        };
        t.set_root(fg->identity());
        visit(0);
        while (!found && t.radius() < opts.max_radius) {
          const auto r = t.expand(mult, cap, opts.bfs.threads, visit);
          if (r.stopped || r.capped || r.added == 0) break;
        }
        if (found) {
          out.found = true;
          out.element = std::move(found);
          out.word = std::move(found_word);
          out.radius = static_cast<int>(out.word.length());
        }
        return out;
      },
      any);
}

}  // namespace logdiam
