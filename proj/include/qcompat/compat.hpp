#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qcompat/feasibility.hpp"
#include "qcompat/povm.hpp"

namespace qcompat {

/// A consistency check between proven verdicts failed; indicates a bug.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Relation { COM, ND, JM, COEX };
enum class Verdict { Holds, Fails, Indeterminate };

const char* to_string(Relation r);
const char* to_string(Verdict v);
Relation relation_from_string(const std::string& s);
Verdict verdict_from_string(const std::string& s);

struct CheckConfig {
  SolverConfig solver;
  double com_tol = 1e-8;
  double subset_tol = 1e-9;
  /// Upper bound on the number of binary margins entering a coexistence check.
  int max_margins = 20;
  /// Upper bound on the number of joint outcomes of a collection problem.
  long max_joint_outcomes = 1L << 20;
  bool operator==(const CheckConfig&) const = default;
};

struct CompatReport {
  Relation relation = Relation::JM;
  Verdict verdict = Verdict::Indeterminate;
  std::string method;

  // Certificates; which ones are present depends on relation and verdict.
  std::vector<std::vector<double>> commutator_norms;        // COM
  std::vector<HermitianMatrixd> blocks;                     // joint POVM / Choi blocks
  std::optional<Witness> witness;                           // verified Farkas witness
  std::vector<std::vector<int>> subset_certificates;        // COEX via a supplied witness POVM
  std::vector<std::vector<int>> collection;                 // COEX: (observable, subset) of kept margins
  double certificate_residual = 0;

  // Effective parameters.
  double feas_tol = 0;
  double com_tol = 0;
  int max_iters = 0;
  SolverDiagnostics diagnostics;
  double seconds = 0;
  bool operator==(const CompatReport&) const = default;
};

/// Joint-outcome blocks ordered with the first observable's outcome most
/// significant; one constraint per (observable, outcome) in the same order.
AffinePsdProblem build_collection_problem(const std::vector<Povm>& observables,
                                          long max_joint_outcomes = 1L << 20);
AffinePsdProblem build_jm_problem(const Povm& a, const Povm& b);
/// Choi-matrix encoding of an A-instrument whose total channel leaves every
/// B effect invariant in the Heisenberg picture.
AffinePsdProblem build_nd_problem(const Povm& a, const Povm& b);

/// Heisenberg-picture map of a Choi matrix C = sum_kl |k><l| (x) Lambda(|k><l|):
/// Lambda^dagger(Y) = (Tr_2[C (1 (x) Y)])^T.
MatrixXc choi_adjoint(const MatrixXc& choi, const MatrixXc& y);
/// Choi matrix of rho -> sum_k K_k rho K_k^dagger.
MatrixXc choi_of_kraus(const std::vector<MatrixXc>& kraus);

CompatReport com_check(const Povm& a, const Povm& b, double tol = 1e-8);
CompatReport jm_check(const Povm& a, const Povm& b, const CheckConfig& config = {});
CompatReport jm_collection_check(const std::vector<Povm>& observables, const CheckConfig& config = {});
/// The binary margins of A and B with trivial and duplicate observables removed.
/// Each entry records (0 for A / 1 for B, canonical subset).
std::vector<std::pair<int, BinaryMargin>> coexistence_collection(const Povm& a, const Povm& b,
                                                                 int max_margins = 20);
CompatReport coex_check(const Povm& a, const Povm& b, const CheckConfig& config = {},
                        const std::optional<Povm>& witness_povm = std::nullopt);
CompatReport nd_check(const Povm& a, const Povm& b, const CheckConfig& config = {});

CompatReport check_relation(Relation r, const Povm& a, const Povm& b, const CheckConfig& config = {});

struct RobustnessStep {
  double lambda = 0;
  Verdict verdict = Verdict::Indeterminate;
  int iterations = 0;
  bool operator==(const RobustnessStep&) const = default;
};

struct RobustnessResult {
  Relation relation = Relation::JM;
  double lambda_lower = 0;
  double lambda_upper = 1;
  bool conservative = false;  // some step was Indeterminate and treated as not-Holds
  bool holds_at_one = false;
  double tol = 1e-4;
  std::vector<RobustnessStep> steps;
  bool operator==(const RobustnessResult&) const = default;
};

/// Largest lambda with the relation holding for (mix(A, lambda), mix(B, lambda)),
/// bracketed by bisection to width <= tol.
RobustnessResult robustness(const Povm& a, const Povm& b, Relation relation, const CheckConfig& config = {},
                            double tol = 1e-4);

struct HierarchyReport {
  CompatReport com, nd, jm, coex;
  std::vector<Verdict> verdicts() const { return {com.verdict, nd.verdict, jm.verdict, coex.verdict}; }
  bool operator==(const HierarchyReport&) const = default;
};

/// Runs COM, ND, JM and COEX; throws InternalError if a stage holds while a
/// later stage fails.
HierarchyReport hierarchy_report(const Povm& a, const Povm& b, const CheckConfig& config = {});

}  // namespace qcompat
