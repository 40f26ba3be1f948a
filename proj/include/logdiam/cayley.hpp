#pragma once

// Implicit Cayley graphs X_q = Cay(pi_q(Gamma), pi_q(S)). Elements are never
// listed up front: vertices are discovered by right multiplication with the
// generators and stored under a canonical packed key.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "logdiam/genset.hpp"

namespace logdiam {

/// The target is not in the subgroup generated by S mod q.
class TargetUnreachable : public Error {
 public:
  using Error::Error;
};

/// Generator indices into a GenSet, evaluated left to right.
struct CayleyWord {
  std::vector<std::uint32_t> indices;

  std::size_t length() const { return indices.size(); }
  void append(const CayleyWord& o) { indices.insert(indices.end(), o.indices.begin(), o.indices.end()); }
  bool operator==(const CayleyWord&) const = default;
};

GroupElement evaluate_word(const GenSet& s, u64 q, const CayleyWord& w);
/// Reversed word with every index replaced by the index of its inverse.
CayleyWord inverse_word(const GenSet& s, const CayleyWord& w);
nlohmann::json cayley_word_to_json(const CayleyWord& w);
CayleyWord cayley_word_from_json(const nlohmann::json& j, const GenSet& s);

/// Component k of every generator as an SL generating set (the linear part
/// for SA). Indices are preserved, so a word over the projection is also a
/// word over s.
GenSet project_component(const GenSet& s, int k);

/// Closed-formula order of SL_d(Z/qZ), SA_d(Z/qZ) or the product group.
/// Throws BudgetError when the order does not fit in 128 bits.
u128 group_order(GroupKind kind, const std::vector<int>& dims, u64 q);
std::string to_string(u128 v);

struct BfsOptions {
  std::size_t memory_budget = std::size_t{2} << 30;  ///< bytes
  int threads = 1;
};

/// Bytes charged per stored vertex for the budget, by key width.
std::size_t bytes_per_vertex(const GenSet& s, u64 q);

/// The closure of pi_q(S) with BFS-tree words. Index i is the discovery
/// position; ties go to the earliest parent and then the lowest generator.
class EnumeratedGroup {
 public:
  std::size_t size() const;
  /// Largest distance from the root.
  int depth() const;
  const std::vector<std::size_t>& layer_sizes() const;
  std::optional<std::size_t> index_of(const GroupElement& g) const;
  GroupElement element(std::size_t i) const;
  int distance(std::size_t i) const;
  /// Word w with root * w = element(i).
  CayleyWord word(std::size_t i) const;

  struct Impl;

 private:
  friend EnumeratedGroup enumerate_from(const GenSet&, u64, const GroupElement&, const BfsOptions&);
  std::shared_ptr<const Impl> impl_;
};

/// Full BFS from the identity. Refuses with BudgetError when the
/// closed-formula order times bytes_per_vertex exceeds the budget.
EnumeratedGroup enumerate_group(const GenSet& s, u64 q, const BfsOptions& opts = {});
/// Full BFS from an arbitrary root (used to check vertex transitivity).
EnumeratedGroup enumerate_from(const GenSet& s, u64 q, const GroupElement& root, const BfsOptions& opts = {});

struct DistanceResult {
  int distance = 0;
  CayleyWord word;
};

/// Bidirectional BFS between the identity and target.
DistanceResult bfs_distance(const GenSet& s, u64 q, const GroupElement& target, const BfsOptions& opts = {});

/// Many distance queries against one graph: a forward ball of complete
/// layers is built once, each query searches backwards from its target.
class DistanceOracle {
 public:
  DistanceOracle(const GenSet& s, u64 q, std::size_t ball_vertices, const BfsOptions& opts = {});
  DistanceResult query(const GroupElement& target) const;
  int ball_radius() const;
  std::size_t ball_size() const;
  /// True when the ball is the whole closure.
  bool complete() const;
  const GenSet& genset() const;
  u64 q() const;

  struct Impl;

 private:
  std::shared_ptr<const Impl> impl_;
};

struct DiameterRecord {
  u64 q = 1;
  u128 order = 1;
  int diameter = 0;
  std::optional<double> ratio;  ///< diameter / ln q, absent for q = 1
  double ms = 0;
};

DiameterRecord diameter(const GenSet& s, u64 q, const BfsOptions& opts = {});

struct ScanFailure {
  u64 q = 0;
  std::string reason;
};

struct ScanResult {
  std::vector<DiameterRecord> records;  ///< sorted by q
  std::vector<ScanFailure> failures;
  std::optional<double> fitted_c;  ///< max ratio over q >= 3
  std::optional<u64> argmax_q;
};

ScanResult diameter_scan(const GenSet& s, std::vector<u64> qs, const BfsOptions& opts = {});
/// Columns q,|Xq|,diam,ratio,ms. With stable set the ms column is 0 so the
/// output depends only on the inputs.
std::string scan_csv(const ScanResult& r, bool stable = false);
nlohmann::json scan_summary(const ScanResult& r);

/// Closure order equals the closed-formula order of the full group.
bool surjectivity_check(const GenSet& s, u64 q, const BfsOptions& opts = {});

using ElementPredicate = std::function<bool(const GroupElement&)>;

struct SearchOptions {
  int max_radius = 8;
  std::size_t max_vertices = std::size_t{1} << 20;
  double c_guess = 2.0;  ///< walk length is 4 * ceil(c_guess * ln q)
  int walk_retries = 256;
  std::uint64_t seed = 1;
  BfsOptions bfs;
};

struct SearchResult {
  bool found = false;
  std::optional<GroupElement> element;
  CayleyWord word;
  int radius = 0;  ///< BFS layer of the hit (word length for walks)
  bool via_walk = false;
  std::size_t examined = 0;
};

/// First element in BFS order (then on random walks) satisfying pred.
SearchResult search_with_predicate(const GenSet& s, u64 q, const ElementPredicate& pred, const SearchOptions& opts = {});

using CosetKey = std::function<std::vector<u64>(const GroupElement&)>;

/// Searches the subgroup H where key(x) == key(y) iff x^{-1} y in H: every
/// pair of BFS vertices x, y with equal keys gives the candidate x^{-1} y
/// with word inverse(w_x) w_y.
SearchResult search_in_kernel(const GenSet& s, u64 q, const CosetKey& key, const ElementPredicate& pred,
                              const SearchOptions& opts = {});

}  // namespace logdiam
