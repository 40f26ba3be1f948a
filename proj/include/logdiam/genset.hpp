#pragma once

// Symmetric generating sets of integer matrices (or affine pairs) and the
// element type that unifies the three supported group kinds.

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "logdiam/matmod.hpp"

namespace logdiam {

enum class GroupKind { SL, SA, product };

std::string to_string(GroupKind kind);
GroupKind parse_group_kind(const std::string& s);

struct IntMatrix {
  int d = 0;
  std::vector<i64> a;  ///< row-major

  static IntMatrix identity(int d);
  i64 at(int i, int j) const { return a[static_cast<std::size_t>(i * d + j)]; }
  bool operator==(const IntMatrix&) const = default;
};

/// Exact determinant over Z. Throws PreconditionError on overflow.
i64 int_det(const IntMatrix& m);
/// Inverse over Z of a determinant-one matrix (its adjugate).
IntMatrix int_inverse(const IntMatrix& m);
IntMatrix int_mul(const IntMatrix& a, const IntMatrix& b);

/// One generator over Z. SL: one block. SA: one block plus a translation.
/// product: one block per factor.
struct IntElement {
  std::vector<IntMatrix> blocks;
  std::vector<i64> trans;
  bool operator==(const IntElement&) const = default;
};

/// Finite symmetric generating set S. Every generator has determinant 1 over
/// Z and the inverse of every generator is also present.
class GenSet {
 public:
  /// Validates kind/dims/shapes, det = 1 and symmetry. With close_symmetric
  /// set, missing inverses are appended (in order) instead of rejected.
  static GenSet make(GroupKind kind, std::vector<int> dims, std::vector<IntElement> generators, bool close_symmetric = false);

  GroupKind kind() const { return kind_; }
  const std::vector<int>& dims() const { return dims_; }
  const std::vector<IntElement>& generators() const { return gens_; }
  std::size_t size() const { return gens_.size(); }
  /// inverse_of()[i] is the index of the inverse of generator i.
  const std::vector<std::size_t>& inverse_of() const { return inverse_; }
  /// Dimension of the SL / SA part (first block).
  int dim() const { return dims_.front(); }

 private:
  GroupKind kind_ = GroupKind::SL;
  std::vector<int> dims_;
  std::vector<IntElement> gens_;
  std::vector<std::size_t> inverse_;
};

/// {T, T^-1, U, U^-1} with T = [[1,1],[0,1]], U = [[1,0],[1,1]] generalised
/// to the elementary matrices I +- E_ij (i != j) of SL_d(Z).
GenSet elementary_sl(int d);
/// SA_d: the zero-translation lifts of elementary_sl(d) followed by the unit
/// translations (I, +-e_i).
GenSet elementary_sa(int d);

GenSet genset_from_json(const nlohmann::json& j);
nlohmann::json genset_to_json(const GenSet& s);
GenSet load_genset(const std::string& path);

using GroupElement = std::variant<MatModQ, AffineModQ, ProductModQ>;

GroupKind kind_of(const GroupElement& g);
u64 modulus_of(const GroupElement& g);
GroupElement element_identity(GroupKind kind, const std::vector<int>& dims, u64 q);
GroupElement element_mul(const GroupElement& a, const GroupElement& b);
GroupElement element_inv(const GroupElement& a);
GroupElement element_reduce(const GroupElement& a, u64 q2);
bool element_is_congruent_identity(const GroupElement& a, u64 m);

/// Image of generator i of S in the group mod q.
GroupElement reduce_generator(const GenSet& s, std::size_t i, u64 q);

nlohmann::json matrix_to_json(const RawMat& m);
RawMat matrix_from_json(const nlohmann::json& j, u64 q);
nlohmann::json element_to_json(const GroupElement& g);
/// Parses an element of the given kind; `dims` fixes the shape.
GroupElement element_from_json(const nlohmann::json& j, GroupKind kind, const std::vector<int>& dims, u64 q);

}  // namespace logdiam
