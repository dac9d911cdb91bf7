#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcompat/linalg.hpp"

namespace qcompat {

/// Raised when an exhaustive enumeration would exceed its size guard.
class TooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

constexpr double kDefaultPovmTol = 1e-9;

enum class ViolationKind { NonHermitian, NotPositive, NotSubIdentity, SumNotIdentity };

const char* to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  int index = -1;      // effect index, -1 for whole-POVM checks
  double amount = 0;   // min eigenvalue, anti-Hermitian norm or residual
  std::string describe() const;
};

class PovmValidationError : public std::invalid_argument {
 public:
  explicit PovmValidationError(std::vector<Violation> v);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// An operator with 0 <= E <= 1 up to the given tolerance.
class Effect {
 public:
  static Effect validate(const HermitianMatrixd& m, double tol = kDefaultPovmTol);
  const HermitianMatrixd& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.dim(); }

 private:
  explicit Effect(HermitianMatrixd m) : m_(std::move(m)) {}
  HermitianMatrixd m_;
};

/// Finite-outcome POVM; outcome k (zero-based) corresponds to effects()[k].
class Povm {
 public:
  Eigen::Index dim() const { return effects_.front().dim(); }
  int num_outcomes() const { return static_cast<int>(effects_.size()); }
  const std::vector<HermitianMatrixd>& effects() const { return effects_; }
  const HermitianMatrixd& operator[](int k) const { return effects_.at(k); }

  friend bool operator==(const Povm& a, const Povm& b) { return a.effects_ == b.effects_; }

 private:
  friend Povm validate_povm(std::vector<HermitianMatrixd> effects, double tol);
  explicit Povm(std::vector<HermitianMatrixd> e) : effects_(std::move(e)) {}
  std::vector<HermitianMatrixd> effects_;
};

/// Checks every effect against 0 <= E <= 1 and the sum against the identity;
/// throws PovmValidationError listing each violated invariant.
Povm validate_povm(std::vector<HermitianMatrixd> effects, double tol = kDefaultPovmTol);
/// Raw-matrix entry point; non-Hermitian inputs are reported as violations.
Povm validate_povm(const std::vector<MatrixXc>& raw, double tol = kDefaultPovmTol);

class DensityMatrix {
 public:
  static DensityMatrix validate(const HermitianMatrixd& m, double tol = kDefaultPovmTol);
  static DensityMatrix pure(const VectorXc& ket);
  const HermitianMatrixd& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.dim(); }

 private:
  explicit DensityMatrix(HermitianMatrixd m) : m_(std::move(m)) {}
  HermitianMatrixd m_;
};

/// k outcomes, each effect I/k.
Povm trivial_povm(int k, Eigen::Index d);

/// p_k = Tr[rho A_k].
std::vector<double> outcome_probabilities(const DensityMatrix& rho, const Povm& a);

/// lambda A_k + (1 - lambda) I/n.
Povm mix_with_trivial(const Povm& a, double lambda);

/// Appends zero effects up to `target` outcomes.
Povm pad_with_zero(const Povm& a, int target);

/// Sum of the effects selected by `subset` (zero-based outcome indices).
HermitianMatrixd subset_sum(const Povm& m, const std::vector<int>& subset);

struct BinaryMargin {
  std::vector<int> subset;  // zero-based, always contains outcome 0
  Povm povm;                // (A(X), A(X^c))
};

/// One coarse-graining per complementary pair {X, X^c}; 2^(n-1) - 1 in total,
/// enumerated by increasing bitmask over outcomes 1..n-1.
std::vector<BinaryMargin> binary_margins(const Povm& a);

constexpr int kMaxSubsetSearchOutcomes = 25;

/// Lexicographically smallest S with |sum_{i in S} M_i - target|_F <= tol,
/// searched exhaustively.
std::optional<std::vector<int>> subset_sum_range_inclusion(const Povm& m, const HermitianMatrixd& target,
                                                           double tol = 1e-9);

}  // namespace qcompat
