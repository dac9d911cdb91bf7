#include "doctest.h"
#include "support.hpp"

using namespace qcompat;
using namespace testing;

namespace {

Blocks raw(const std::vector<HermitianMatrixd>& h) {
  Blocks out;
  for (const auto& b : h) out.push_back(b.matrix());
  return out;
}

std::vector<HermitianMatrixd> to_vector(const Blocks& x) {
  std::vector<HermitianMatrixd> out;
  for (const auto& b : x) out.emplace_back(b);
  return out;
}

Blocks zeros(const AffinePsdProblem& p) {
  Blocks out;
  for (auto d : p.block_dims()) out.push_back(MatrixXc::Zero(d, d));
  return out;
}

double blocks_diff(const Blocks& a, const Blocks& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("project_affine examples") {
  const auto trivial = jm_problem(trivial_povm(3, 3), trivial_povm(2, 3));
  for (const auto& b : project_affine(to_vector(zeros(trivial)), trivial))
    CHECK(max_entry_diff(b.matrix(), MatrixXc::Identity(3, 3) / 6.0) < 1e-14);

  const auto ref = reference_pair();
  const auto p = jm_problem(ref.a, ref.b);
  const auto x = project_affine(to_vector(zeros(p)), p);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      const MatrixXc expect = ref.a[i].matrix() / 2.0 + ref.b[j].matrix() / 3.0 - MatrixXc::Identity(3, 3) / 6.0;
      CHECK(max_entry_diff(x[i * 2 + j].matrix(), expect) < 1e-14);
    }

  // A feasible input is a fixed point.
  std::vector<HermitianMatrixd> joint;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) joint.push_back((1.0 / 6) * HermitianMatrixd::identity(3));
  for (size_t b = 0; b < joint.size(); ++b)
    CHECK(frobenius_distance(project_affine(joint, trivial)[b], joint[b]) < 1e-12);
}

TEST_CASE("transport closed form agrees with the generic projection") {
  for (int t = 0; t < 50; ++t) {
    auto rng = lab::trial_rng(21, t);
    const int n = 2 + t % 3, m = 2 + (t / 3) % 3;
    const auto a = lab::random_povm(n, 3, rng), b = lab::random_povm(m, 3, rng);
    std::vector<HermitianMatrixd> targets = a.effects();
    targets.insert(targets.end(), b.effects().begin(), b.effects().end());
    const auto generic = AffinePsdProblem::marginal(transport_coeff(n, m), targets, 3.0);
    auto fast = generic;
    fast.set_transport_shape(n, m);
    Blocks x1;
    std::mt19937_64 r(t);
    for (int k = 0; k < n * m; ++k) x1.push_back(random_hermitian(3, r).matrix());
    Blocks x2 = x1;
    generic.project_affine_in_place(x1);
    fast.project_affine_in_place(x2);
    CHECK(blocks_diff(x1, x2) <= 1e-12);
  }
}

TEST_CASE("project_affine is idempotent and lands on the constraints") {
  for (int t = 0; t < 100; ++t) {
    const auto inst = constructed_instance(t);
    std::mt19937_64 rng(t);
    Blocks x;
    for (auto d : inst.problem.block_dims()) x.push_back(random_hermitian(d, rng).matrix());
    inst.problem.project_affine_in_place(x);
    double scale = 1;
    for (const auto& m : x) scale = std::max(scale, m.norm());
    CHECK(inst.problem.residual(x) <= 1e-12 * scale);
    Blocks y = x;
    inst.problem.project_affine_in_place(y);
    CHECK(blocks_diff(x, y) <= 1e-12 * scale);
  }
}

TEST_CASE("project_affine is the nearest point of the affine set") {
  const auto inst = constructed_instance(4);
  std::mt19937_64 rng(4);
  Blocks x;
  for (auto d : inst.problem.block_dims()) x.push_back(random_hermitian(d, rng).matrix());
  Blocks p = x;
  inst.problem.project_affine_in_place(p);
  // The planted blocks and the mid-point with p also satisfy the constraints.
  const Blocks planted = raw(inst.planted);
  CHECK(blocks_diff(x, p) <= blocks_diff(x, planted) + 1e-12);
  // x - p is orthogonal to every feasible direction.
  double inner = 0;
  for (size_t b = 0; b < x.size(); ++b) inner += (x[b] - p[b]).cwiseProduct((planted[b] - p[b]).conjugate()).sum().real();
  CHECK(std::abs(inner) < 1e-10);
}

TEST_CASE("inconsistent targets are rejected at construction") {
  std::vector<HermitianMatrixd> targets = {HermitianMatrixd::identity(2), HermitianMatrixd::identity(2),
                                           HermitianMatrixd::identity(2), 2.0 * HermitianMatrixd::identity(2)};
  CHECK_THROWS_AS(AffinePsdProblem::marginal(transport_coeff(2, 2), targets, 2.0), InconsistentProblem);
}

TEST_CASE("solve examples") {
  const auto trivial = solve(jm_problem(trivial_povm(3, 3), trivial_povm(2, 3)));
  REQUIRE(trivial.status == FeasibilityStatus::Feasible);
  for (const auto& b : trivial.blocks) CHECK(max_entry_diff(b.matrix(), MatrixXc::Identity(3, 3) / 6.0) < 1e-8);

  const auto ref = reference_pair();
  const auto p = jm_problem(ref.a, ref.b);
  const auto out = solve(p);
  REQUIRE(out.status == FeasibilityStatus::Infeasible);
  REQUIRE(out.witness.has_value());
  CHECK(verify_witness(*out.witness, p));
  CHECK(out.blocks.empty());

  // Same observable twice: copying the outcome gives J_ij = delta_ij A_i.
  auto rng = lab::trial_rng(22, 0);
  const auto a = lab::random_povm(3, 3, rng);
  const auto copy = jm_problem(a, a);
  const auto c = solve(copy);
  REQUIRE(c.status == FeasibilityStatus::Feasible);
  CHECK(!c.witness.has_value());
  std::vector<HermitianMatrixd> diag;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) diag.push_back(i == j ? a[i] : HermitianMatrixd::zero(3));
  CHECK(copy.residual(raw(diag)) < 1e-14);
  CHECK(copy.residual(raw(c.blocks)) <= 1e-8);
}

TEST_CASE("solve is deterministic") {
  const auto ref = reference_pair();
  const auto p = build_collection_problem({binary_margins(ref.a)[0].povm, binary_margins(ref.a)[1].povm,
                                           binary_margins(ref.a)[2].povm, ref.b});
  const auto x = solve(p), y = solve(p);
  CHECK(x.status == y.status);
  CHECK(x.blocks == y.blocks);
  CHECK(x.diagnostics == y.diagnostics);
}

TEST_CASE("constructed feasible instances solve as feasible") {
  int feasible = 0;
  for (int t = 0; t < 100; ++t) {
    const auto inst = constructed_instance(t);
    const auto out = solve(inst.problem);
    CHECK_MESSAGE(out.status == FeasibilityStatus::Feasible, "instance " << t);
    if (out.status != FeasibilityStatus::Feasible) continue;
    ++feasible;
    CHECK(inst.problem.residual(raw(out.blocks)) <= 1e-8);
    for (const auto& b : out.blocks) CHECK(min_eigenvalue(b) >= -1e-8);
  }
  CHECK(feasible == 100);
}

TEST_CASE("boundary instances never come back infeasible") {
  int feasible = 0;
  for (int t = 0; t < 25; ++t) {
    const auto inst = constructed_instance(t, 1);
    const auto out = solve(inst.problem);
    CHECK_MESSAGE(out.status != FeasibilityStatus::Infeasible, "instance " << t);
    CHECK_FALSE(out.witness.has_value());
    feasible += out.status == FeasibilityStatus::Feasible;
  }
  // Without a strictly feasible point convergence is sublinear; most still finish.
  CHECK(feasible >= 20);
}

TEST_CASE("step monotonicity is counted only after burn-in") {
  // Dykstra steps need not shrink monotonically; the counter is a diagnostic.
  SolverConfig cfg;
  cfg.interior_shift = false;
  cfg.facial_reduction = false;
  for (int t = 0; t < 10; ++t) {
    const auto d = solve(constructed_instance(t).problem, cfg).diagnostics;
    CHECK(d.monotonicity_violations >= 0);
    CHECK(d.monotonicity_violations <= d.iterations);
  }
  cfg.max_iters = 300;
  cfg.burn_in = 1000;
  CHECK(solve(constructed_instance(1).problem, cfg).diagnostics.monotonicity_violations == 0);
}

TEST_CASE("verify_witness examples") {
  const auto ref = reference_pair();
  const auto p = jm_problem(ref.a, ref.b);
  std::vector<HermitianMatrixd> zero(p.num_constraints(), HermitianMatrixd::zero(3));
  const auto w0 = make_witness(zero, p);
  CHECK(w0.objective == 0.0);
  CHECK_FALSE(verify_witness(w0, p));

  // A feasible problem admits no separating functional: random duals never verify.
  const auto trivial = jm_problem(trivial_povm(3, 3), trivial_povm(2, 3));
  std::mt19937_64 rng(23);
  for (int t = 0; t < 200; ++t) {
    std::vector<HermitianMatrixd> y;
    for (int c = 0; c < trivial.num_constraints(); ++c) y.push_back(random_hermitian(3, rng));
    CHECK_FALSE(verify_witness(make_witness(y, trivial), trivial));
  }
  // Nor does the (vanishing) displacement at a solution.
  const auto sol = solve(trivial);
  REQUIRE(sol.status == FeasibilityStatus::Feasible);
  Blocks disp = raw(sol.blocks);
  for (auto& m : disp) {
    Blocks one = {m};
    clip_to_psd(one[0]);
    m = m - one[0];
  }
  const Blocks y = trivial.adjoint_least_squares(disp);
  std::vector<HermitianMatrixd> yh;
  for (const auto& m : y) yh.push_back(herm(0.5 * (m + m.adjoint())));
  CHECK_FALSE(verify_witness(make_witness(yh, trivial), trivial));

  // Witness from solve is invariant under recomputation.
  const auto out = solve(p);
  REQUIRE(out.witness.has_value());
  const auto again = make_witness(out.witness->duals, p);
  CHECK(again.objective == doctest::Approx(out.witness->objective).epsilon(1e-12));
  double top = 0;
  for (const auto& y2 : out.witness->duals) top = std::max(top, y2.norm());
  CHECK(top == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.witness->objective < -out.witness->cone_slack * p.num_blocks() * p.trace_bound() - 1e-9);
}

TEST_CASE("solver configuration is validated") {
  SolverConfig bad;
  bad.max_iters = 0;
  CHECK_THROWS_AS(solve(jm_problem(trivial_povm(2, 2), trivial_povm(2, 2)), bad), InvalidInput);
  bad = {};
  bad.feas_tol = -1;
  CHECK_THROWS_AS(solve(jm_problem(trivial_povm(2, 2), trivial_povm(2, 2)), bad), InvalidInput);
}

TEST_CASE("tiny budgets end indeterminate rather than throwing") {
  const auto ref = reference_pair();
  SolverConfig cfg;
  cfg.max_iters = 3;
  const auto out = solve(jm_problem(ref.a, ref.b), cfg);
  CHECK(out.status == FeasibilityStatus::Indeterminate);
  CHECK(out.blocks.empty());
  CHECK_FALSE(out.witness.has_value());
  CHECK(out.diagnostics.iterations == 3);
}
