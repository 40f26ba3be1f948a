#pragma once

// Bounded generation of the congruence subgroup G_q(q2) by conjugates of two
// seed elements g0 (lower shape) and g0' (upper shape). Every element of
// G_q(q2) is written as a product of at most 10d - 8 elements x s^{+-1} x^{-1}
// with s in {g0, g0'} and x = I mod q0^{L-1}.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "logdiam/matmod.hpp"

namespace logdiam {

/// Pinned length budget: d-1 clearings (2 letters), d-1 scalings (8 letters)
/// and one final unipotent (2 letters).
constexpr int word_length_bound(int d) { return 10 * d - 8; }

enum class Base { g0, g0p };

struct Letter {
  MatModQ conjugator;
  Base base = Base::g0;
  int sign = 1;
  bool operator==(const Letter&) const = default;
};

struct TriangularizationResult {
  MatModQ x;   ///< conjugator, = I mod q0^{L-1}
  MatModQ g1;  ///< x g0 x^{-1}, lower triangular
  /// Row-clearing conjugators x_1, ..., x_{d-1}; x = x_{d-1} ... x_1.
  std::vector<MatModQ> row_conjugators;
  /// g0 after each row clearing (the last one is g1).
  std::vector<MatModQ> intermediates;
};

/// Conjugates the lower-shaped seed g0 to a lower triangular matrix, one row
/// at a time, solving each row's quadratic system by Hensel lifting. Works
/// prime by prime and glues by CRT.
TriangularizationResult step1_triangularize(const MatModQ& g0, int L);

/// The two seeds, the factored modulus with its level, and the cached
/// per-prime triangularizations. Cheap to copy.
class DecompositionContext {
 public:
  /// Validates both seeds with check_seed (exact strictness); throws
  /// PreconditionError with the diagnostic otherwise.
  static DecompositionContext make(const MatModQ& g0, const MatModQ& g0p, int L);

  const MatModQ& g0() const;
  const MatModQ& g0p() const;
  const FactoredModulus& modulus() const;
  int L() const;
  int dim() const { return g0().dim(); }
  u64 q() const { return modulus().q(); }
  const MatModQ& base(Base b) const { return b == Base::g0 ? g0() : g0p(); }

  struct Data;
  const Data& data() const { return *data_; }

 private:
  std::shared_ptr<const Data> data_;
};

class ConjugateWord {
 public:
  explicit ConjugateWord(DecompositionContext ctx, std::vector<Letter> letters = {})
      : ctx_(std::move(ctx)), letters_(std::move(letters)) {}

  const DecompositionContext& context() const { return ctx_; }
  const std::vector<Letter>& letters() const { return letters_; }
  std::vector<Letter>& letters() { return letters_; }
  std::size_t length() const { return letters_.size(); }

  /// prod_i x_i s_i^{e_i} x_i^{-1}, left to right.
  MatModQ evaluate() const;

 private:
  DecompositionContext ctx_;
  std::vector<Letter> letters_;
};

/// Synchronized words keep every fixed letter pattern (zero targets give
/// canceling pairs); compact words have adjacent canceling pairs removed.
enum class WordForm { compact, synchronized };

/// Free reduction: repeatedly drops adjacent letters with equal conjugator
/// and base and opposite signs.
ConjugateWord compact(const ConjugateWord& w);

/// I + c for strict-lower c with every entry = 0 mod p^{2(L-1)} at every
/// prime, as (x g0^{-1} x^{-1})(x' g0 x'^{-1}).
ConjugateWord step2_lower_unipotent_word(const RawMat& c, const DecompositionContext& ctx, WordForm form = WordForm::compact);
/// Mirror of step2 for strict-upper f, using g0'.
ConjugateWord step3_upper_unipotent_word(const RawMat& f, const DecompositionContext& ctx, WordForm form = WordForm::compact);

/// x, y, z, w with [[1,x],[0,1]][[1,0],[y,1]][[1,z],[0,1]][[1,0],[w,1]] = m.
struct FourFactor {
  u64 x = 0, y = 0, z = 0, w = 0;
};
/// Closed-form factorization of a 2x2 determinant-one matrix m = I mod q2;
/// all four parameters are divisible by q0^{2(L-1)}. `fm` carries the level.
FourFactor solve_four_factor(const MatModQ& m, const FactoredModulus& fm);
MatModQ four_factor_product(const FourFactor& f, u64 q);

/// H_{kl}^lambda (0-based k != l) for lambda = 1 mod q2; at most 8 letters.
ConjugateWord step4_scaling_word(int k, int l, const Residue& lambda, const DecompositionContext& ctx,
                                 WordForm form = WordForm::compact);

struct Step5Trace {
  /// Running remainder after each left multiplication (clearings, then
  /// scalings); every entry lies in G(p^{4(L-1)}).
  std::vector<MatModQ> remainders;
};

/// Decomposition over a prime-power modulus. Throws PreconditionError when
/// q is not a prime power or gamma is not = I mod q2.
ConjugateWord step5_prime_power_decompose(const MatModQ& gamma, const DecompositionContext& ctx, Step5Trace* trace = nullptr,
                                          WordForm form = WordForm::compact);

/// General modulus: synchronized per-prime decompositions glued by CRT.
ConjugateWord step6_decompose(const MatModQ& gamma, const DecompositionContext& ctx, WordForm form = WordForm::compact);

/// The synchronized per-prime words that step6 glues, one per prime of q,
/// each over its own prime-power modulus.
std::vector<std::vector<Letter>> step6_per_prime_words(const MatModQ& gamma, const DecompositionContext& ctx);

struct VerifyResult {
  bool ok = false;
  std::string detail;
  explicit operator bool() const { return ok; }
};

/// Checks length <= word_length_bound(d), every conjugator = I mod
/// q0^{L-1}, and evaluate(word) = target.
VerifyResult verify_word(const ConjugateWord& word, const MatModQ& target);

/// The same checks on the image of the word mod m (m | q): conjugators and
/// seeds reduced mod m, depth prod_{p | m} p^{L-1}.
VerifyResult verify_reduction(const ConjugateWord& word, u64 m, const MatModQ& target_mod_m);

/// Random seed of the given shape over fm (level L), uniform over the
/// admissible off-diagonal and diagonal choices up to the determinant fix.
MatModQ sample_seed(int d, const FactoredModulus& fm, SeedVariant variant, int L, std::mt19937_64& rng);
/// Uniform random element of G_q(m); every prime of q must divide m.
MatModQ sample_congruence_element(int d, u64 q, u64 m, std::mt19937_64& rng);

nlohmann::json word_to_json(const ConjugateWord& w);
ConjugateWord word_from_json(const nlohmann::json& j);

}  // namespace logdiam
