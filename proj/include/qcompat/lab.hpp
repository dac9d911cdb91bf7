#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qcompat/compat.hpp"

namespace qcompat::lab {

/// The coexistent-but-not-jointly-measurable pair on C^3:
///   A_i = (1 - |i><i|)/2, B_1 = |psi><psi|/2, B_2 = 1 - B_1,
///   psi = (|1> + |2> + |3>)/sqrt(3),
/// together with the 5-outcome POVM M whose range contains every A_i and B_j.
struct Counterexample {
  Povm a;
  Povm b;
  Povm m;
  VectorXc psi;
};

Counterexample build_counterexample();

struct CounterexampleVerification {
  // Stage 1: each of A_1, A_2, A_3, B_1, B_2 as a subset sum of M (zero-based).
  std::vector<std::vector<int>> subset_sums;
  bool stage1 = false;
  // Stage 2: the binary-margin collection is jointly measurable.
  CompatReport collection;
  bool stage2 = false;
  // Stage 3: A and B are not jointly measurable, with a verified witness.
  CompatReport joint;
  bool witness_verified = false;
  bool stage3 = false;
  // Stage 4: the rank-one argument. J_i1 = c_i B_1 and
  // <i|A_i|i> = c_i <i|B_1|i> + <i|J_i2|i> >= c_i <i|B_1|i> caps c_i.
  std::vector<double> diagonal_a;   // <i|A_i|i>
  std::vector<double> overlaps;     // |<i|psi>|^2
  std::vector<double> max_weight;   // <i|A_i|i> / <i|B_1|i>
  std::vector<double> b1_spectrum;
  double b1_deficit = 0;            // |B_1 - sum_i max_weight_i B_1|_F
  bool stage4 = false;
  double seconds = 0;

  bool passed() const { return stage1 && stage2 && stage3 && stage4; }
  bool operator==(const CounterexampleVerification&) const = default;
};

CounterexampleVerification verify_counterexample(const CheckConfig& config = {});

struct PaddingCase {
  int n = 0;
  int m = 0;
  Verdict coex = Verdict::Indeterminate;
  Verdict jm = Verdict::Indeterminate;
  bool witness_verified = false;
  bool passed() const { return coex == Verdict::Holds && jm == Verdict::Fails && witness_verified; }
  bool operator==(const PaddingCase&) const = default;
};

std::vector<PaddingCase> padding_experiment(const std::vector<std::pair<int, int>>& sizes,
                                            const CheckConfig& config = {});

struct SegmentPoint {
  double lambda = 0;
  Verdict jm = Verdict::Indeterminate;
  Verdict coex = Verdict::Indeterminate;
  int jm_iterations = 0;
  int coex_iterations = 0;
  double jm_residual = 0;
  bool operator==(const SegmentPoint&) const = default;
};

struct SegmentReport {
  int steps = 0;
  std::vector<SegmentPoint> grid;
  RobustnessResult jm_bracket;
  std::vector<SegmentPoint> refinement;  // fine grid straddling the bracket
  bool jm_holds_at_zero = false;
  bool jm_fails_at_one = false;
  bool coex_everywhere = false;
  bool monotone = false;
  bool refinement_consistent = false;
  double coex_minus_jm_fraction = 0;  // 1 - lambda*_JM
  bool passed() const {
    return jm_holds_at_zero && jm_fails_at_one && coex_everywhere && monotone && refinement_consistent &&
           coex_minus_jm_fraction > 0;
  }
  bool operator==(const SegmentReport&) const = default;
};

/// Classifies (mix(A, l), mix(B, l)) on an even grid over [0, 1] and brackets
/// the JM threshold of the counterexample pair by bisection.
SegmentReport segment_experiment(int steps, const CheckConfig& config = {}, double bisect_tol = 1e-4);

// ---------------------------------------------------------------------------
// Random POVMs

using Rng = std::mt19937_64;

/// Per-trial generator seeded from (seed, trial).
Rng trial_rng(std::uint64_t seed, std::uint64_t trial);

/// Ginibre-induced POVM: A_i = S^{-1/2} G_i G_i^dagger S^{-1/2}, S = sum_i G_i G_i^dagger,
/// with G_i complex Gaussian d x rank.
Povm random_povm(int n, Eigen::Index d, Rng& rng, Eigen::Index rank = 0);
DensityMatrix random_density(Eigen::Index d, Rng& rng);
/// POVM diagonal in the given unitary basis, with random spectra.
Povm random_diagonal_povm(int n, const MatrixXc& basis, Rng& rng);
MatrixXc random_unitary(Eigen::Index d, Rng& rng);

struct Interval {
  double lower = 0;
  double upper = 0;
  bool operator==(const Interval&) const = default;
};

/// 95% Wilson score interval for k successes out of n.
Interval wilson_interval(int successes, int trials, double z = 1.959963984540054);

struct SampleRecord {
  int trial = 0;
  Verdict jm = Verdict::Indeterminate;
  Verdict coex = Verdict::Indeterminate;
  int jm_iterations = 0;
  int coex_iterations = 0;
  double jm_residual = 0;
  double coex_residual = 0;
  bool coex_checked = true;  // false when the pair exceeds the coexistence guards
  bool operator==(const SampleRecord&) const = default;
};

struct SampleReport {
  int n = 0, m = 0, d = 0, trials = 0;
  std::uint64_t seed = 0;
  std::vector<SampleRecord> records;
  int jm_holds = 0;
  int coex_fails = 0;
  int coex_not_jm = 0;
  int indeterminate = 0;
  int hierarchy_violations = 0;
  Interval jm_interval, non_coex_interval, coex_not_jm_interval;
  bool operator==(const SampleReport&) const = default;
};

/// Runs `count` independent tasks on `jobs` threads; results keep index order.
void parallel_for(int count, int jobs, const std::function<void(int)>& task);

SampleReport sample_pairs(int n, int m, int d, int trials, std::uint64_t seed, const CheckConfig& config = {},
                          int jobs = 1);

struct SuiteTrials {
  int binary = 100;
  int ball = 100;
  int hierarchy = 200;
};

struct PropertyFamily {
  std::string name;
  int trials = 0;
  int passed = 0;
  int failed = 0;
  int indeterminate = 0;
  std::vector<int> failing_trials;
  bool operator==(const PropertyFamily&) const = default;
};

struct SuiteReport {
  std::uint64_t seed = 0;
  PropertyFamily binary_equivalence;
  PropertyFamily sufficient_ball;
  PropertyFamily hierarchy;
  bool passed() const;
  bool operator==(const SuiteReport&) const = default;
};

SuiteReport property_suite(std::uint64_t seed, const CheckConfig& config = {}, SuiteTrials trials = {},
                           int jobs = 1);

/// A random pair for the hierarchy family: trial index selects between
/// Ginibre, noisy Ginibre, commuting and constructed-jointly-measurable pairs.
std::pair<Povm, Povm> hierarchy_pair(std::uint64_t seed, int trial);

}  // namespace qcompat::lab
