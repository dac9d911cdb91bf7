#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qcompat/linalg.hpp"

namespace qcompat {

/// Raised when the affine constraints admit no solution at all, independent of
/// the cone (targets outside the range of the constraint map).
class InconsistentProblem : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Blocks = std::vector<MatrixXc>;

/// One summand L_cb of a general constraint: a real-linear map from hvec(X_b)
/// to hvec coordinates of constraint c's target space.
struct LinearTerm {
  int constraint = 0;
  int block = 0;
  Eigen::MatrixXd map;
};

/// Find Hermitian blocks X_1..X_v, all PSD, with sum_b L_cb(X_b) = T_c.
///
/// Two constraint encodings are supported. The marginal form has
/// L_cb(X) = K(c,b) X for a real coefficient matrix K and equal block and
/// target dimensions; the affine projection then acts on each matrix
/// coordinate independently through the pseudoinverse of K. The general form
/// carries an arbitrary linear map per (c, b) pair and projects through the
/// pseudoinverse of the stacked real constraint matrix.
///
/// `trace_bound` is an a-priori bound on Tr[X_b] over every feasible point;
/// witness verification relies on it.
class AffinePsdProblem {
 public:
  static AffinePsdProblem marginal(Eigen::MatrixXd coeff, std::vector<HermitianMatrixd> targets,
                                   double trace_bound);
  static AffinePsdProblem general(std::vector<Eigen::Index> block_dims, std::vector<LinearTerm> terms,
                                  std::vector<HermitianMatrixd> targets, double trace_bound);

  bool is_marginal() const { return marginal_; }
  int num_blocks() const { return static_cast<int>(block_dims_.size()); }
  int num_constraints() const { return static_cast<int>(targets_.size()); }
  const std::vector<Eigen::Index>& block_dims() const { return block_dims_; }
  const std::vector<HermitianMatrixd>& targets() const { return targets_; }
  double trace_bound() const { return trace_bound_; }
  /// Marginal form only; empty matrix otherwise.
  const Eigen::MatrixXd& coeff() const { return coeff_; }
  const std::vector<LinearTerm>& terms() const { return terms_; }

  /// Optional transportation shape (rows, cols) for two-marginal problems
  /// whose blocks are ordered row-major; enables the closed-form projection.
  void set_transport_shape(int rows, int cols);
  std::optional<std::pair<int, int>> transport_shape() const { return transport_; }

  /// Constraint values sum_b L_cb(X_b), one matrix per constraint.
  Blocks apply(const Blocks& x) const;
  /// Adjoint map: S_b = sum_c L_cb^*(Y_c).
  Blocks adjoint(const Blocks& duals) const;
  /// Frobenius-nearest point of the affine constraint set.
  void project_affine_in_place(Blocks& x) const;
  /// Least-squares solution Y of adjoint(Y) = z.
  Blocks adjoint_least_squares(const Blocks& z) const;
  /// max_c |sum_b L_cb(X_b) - T_c|_F
  double residual(const Blocks& x) const;

  /// Same encoding, same block/constraint layout, coefficients and targets
  /// equal within `tol`.
  bool structurally_equal(const AffinePsdProblem& other, double tol = 1e-12) const;

 private:
  AffinePsdProblem() = default;
  void build_general_operator();

  bool marginal_ = true;
  std::vector<Eigen::Index> block_dims_;
  std::vector<HermitianMatrixd> targets_;
  double trace_bound_ = 0;

  Eigen::MatrixXd coeff_;
  Eigen::MatrixXd coeff_pinv_;  // v x c

  std::vector<LinearTerm> terms_;
  Eigen::MatrixXd stacked_;       // rows: constraints, cols: blocks (hvec coordinates)
  Eigen::MatrixXd stacked_pinv_;
  Eigen::VectorXd target_vec_;
  std::vector<Eigen::Index> row_offset_, col_offset_;

  std::optional<std::pair<int, int>> transport_;
};

/// Public projection on validated Hermitian blocks.
std::vector<HermitianMatrixd> project_affine(const std::vector<HermitianMatrixd>& blocks,
                                             const AffinePsdProblem& problem);

/// Closed-form projection onto {row sums = rows_target, column sums = cols_target}
/// for an rows x cols grid of matrices stored row-major.
void project_transport(Blocks& x, int rows, int cols, const std::vector<HermitianMatrixd>& row_targets,
                       const std::vector<HermitianMatrixd>& col_targets);

enum class FeasibilityStatus { Feasible, Infeasible, Indeterminate };

const char* to_string(FeasibilityStatus s);

/// Farkas dual certificate. When verify_witness holds, no PSD blocks with
/// Tr[X_b] <= trace_bound satisfy the constraints.
struct Witness {
  std::vector<HermitianMatrixd> duals;
  double cone_slack = 0;  // max(0, -min_b lambda_min(sum_c L_cb^*(Y_c)))
  double objective = 0;   // sum_c Tr[Y_c T_c]
  bool operator==(const Witness&) const = default;
};

/// Recomputes slack and objective for the given duals.
Witness make_witness(std::vector<HermitianMatrixd> duals, const AffinePsdProblem& problem);
bool verify_witness(const Witness& w, const AffinePsdProblem& problem);

struct SolverConfig {
  int max_iters = 50000;
  double feas_tol = 1e-8;
  int stall_window = 200;
  double stall_rel_tol = 1e-9;
  int check_every = 10;
  int burn_in = 100;
  bool facial_reduction = true;
  /// Run shifted-cone stages {X >= shift * 1} before the plain cone.
  bool interior_shift = true;
  /// A shifted stage ends when its displacement shrinks by less than 1% over this many iterations.
  int plateau_window = 1000;
  bool operator==(const SolverConfig&) const = default;
};

struct SolverDiagnostics {
  int iterations = 0;
  double residual = 0;
  double min_eigenvalue = 0;
  double displacement = 0;
  int monotonicity_violations = 0;
  bool face_reduced = false;
  bool operator==(const SolverDiagnostics&) const = default;
};

struct FeasibilityOutcome {
  FeasibilityStatus status = FeasibilityStatus::Indeterminate;
  std::vector<HermitianMatrixd> blocks;  // Feasible only
  std::optional<Witness> witness;        // Infeasible only
  SolverDiagnostics diagnostics;
};

/// Dykstra alternating projections between the product of PSD cones and the
/// affine constraint set, started from all-zero blocks.
FeasibilityOutcome solve(const AffinePsdProblem& problem, const SolverConfig& config = {});

/// Eigenvalue clipping on a raw Hermitian block; returns the smallest eigenvalue seen.
double clip_to_psd(MatrixXc& block);
/// Raises every eigenvalue below `floor` to `floor`; returns the old minimum.
double clip_above(MatrixXc& block, double floor);

}  // namespace qcompat
