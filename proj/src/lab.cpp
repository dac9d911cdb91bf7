#include "qcompat/lab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace qcompat::lab {

namespace {

using Clock = std::chrono::steady_clock;

HermitianMatrixd herm(const MatrixXc& m) { return HermitianMatrixd(m, 1e-6); }

}  // namespace

Counterexample build_counterexample() {
  const Eigen::Index d = 3;
  VectorXc psi = VectorXc::Ones(d) / std::sqrt(3.0);
  const auto one = HermitianMatrixd::identity(d);
  std::vector<HermitianMatrixd> a, m;
  for (Eigen::Index i = 0; i < d; ++i) a.push_back(0.5 * (one - HermitianMatrixd::projector(basis_ket(d, i))));
  const HermitianMatrixd b1 = 0.5 * HermitianMatrixd::projector(psi);
  for (Eigen::Index i = 0; i < d; ++i) m.push_back(0.5 * HermitianMatrixd::projector(basis_ket(d, i)));
  m.push_back(b1);
  m.push_back(0.5 * one - b1);
  return {validate_povm(std::move(a)), validate_povm({b1, one - b1}), validate_povm(std::move(m)), psi};
}

CounterexampleVerification verify_counterexample(const CheckConfig& config) {
  const auto t0 = Clock::now();
  const auto ce = build_counterexample();
  CounterexampleVerification v;

  v.stage1 = true;
  for (const Povm* p : {&ce.a, &ce.b})
    for (const auto& e : p->effects()) {
      auto s = subset_sum_range_inclusion(ce.m, e, config.subset_tol);
      v.stage1 = v.stage1 && s.has_value();
      v.subset_sums.push_back(s.value_or(std::vector<int>{}));
    }

  v.collection = coex_check(ce.a, ce.b, config);
  v.stage2 = v.collection.verdict == Verdict::Holds && v.collection.method == "collection" &&
             v.collection.collection.size() == 4;

  v.joint = jm_check(ce.a, ce.b, config);
  v.witness_verified = v.joint.witness && verify_witness(*v.joint.witness, build_jm_problem(ce.a, ce.b));
  v.stage3 = v.joint.verdict == Verdict::Fails && v.witness_verified;

  const auto& b1 = ce.b[0];
  v.b1_spectrum.resize(3);
  const auto eig = herm_eig(b1);
  for (int i = 0; i < 3; ++i) v.b1_spectrum[i] = eig.eigenvalues(i);
  double total_weight = 0;
  bool ok = std::abs(v.b1_spectrum[0]) <= 1e-12 && std::abs(v.b1_spectrum[1]) <= 1e-12 &&
            std::abs(v.b1_spectrum[2] - 0.5) <= 1e-12;
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double diag = ce.a[static_cast<int>(i)](i, i).real();
    const double overlap = std::norm(ce.psi(i));
    const double b1_diag = b1(i, i).real();
    v.diagonal_a.push_back(diag);
    v.overlaps.push_back(overlap);
    v.max_weight.push_back(std::max(0.0, diag / b1_diag));
    total_weight += v.max_weight.back();
    ok = ok && std::abs(diag) <= 1e-12 && std::abs(overlap - 1.0 / 3.0) <= 1e-12 && v.max_weight.back() <= 1e-12;
  }
  v.b1_deficit = ((1.0 - total_weight) * b1).norm();
  v.stage4 = ok && v.b1_deficit > 0.25;
  v.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return v;
}

std::vector<PaddingCase> padding_experiment(const std::vector<std::pair<int, int>>& sizes,
                                            const CheckConfig& config) {
  const auto ce = build_counterexample();
  std::vector<PaddingCase> out;
  for (const auto& [n, m] : sizes) {
    if (n < 3 || m < 2) throw InvalidInput("padding: need n' >= 3 and m' >= 2");
    const Povm a = pad_with_zero(ce.a, n);
    const Povm b = pad_with_zero(ce.b, m);
    PaddingCase pc;
    pc.n = n;
    pc.m = m;
    pc.coex = coex_check(a, b, config).verdict;
    const auto jm = jm_check(a, b, config);
    pc.jm = jm.verdict;
    pc.witness_verified = jm.witness && verify_witness(*jm.witness, build_jm_problem(a, b));
    out.push_back(pc);
  }
  return out;
}

namespace {

SegmentPoint classify(const Povm& a, const Povm& b, double lambda, const CheckConfig& config, bool with_coex) {
  SegmentPoint p;
  p.lambda = lambda;
  const Povm am = mix_with_trivial(a, lambda);
  const Povm bm = mix_with_trivial(b, lambda);
  const auto jm = jm_check(am, bm, config);
  p.jm = jm.verdict;
  p.jm_iterations = jm.diagnostics.iterations;
  p.jm_residual = jm.certificate_residual;
  if (with_coex) {
    const auto cx = coex_check(am, bm, config);
    p.coex = cx.verdict;
    p.coex_iterations = cx.diagnostics.iterations;
  }
  return p;
}

}  // namespace

SegmentReport segment_experiment(int steps, const CheckConfig& config, double bisect_tol) {
  if (steps < 2) throw InvalidInput("segment: need at least 2 grid steps");
  const auto ce = build_counterexample();
  SegmentReport r;
  r.steps = steps;
  for (int k = 0; k < steps; ++k) {
    const double lambda = (k == steps - 1) ? 1.0 : double(k) / double(steps - 1);
    r.grid.push_back(classify(ce.a, ce.b, lambda, config, true));
  }
  r.jm_holds_at_zero = r.grid.front().jm == Verdict::Holds;
  r.jm_fails_at_one = r.grid.back().jm == Verdict::Fails;
  r.coex_everywhere = std::all_of(r.grid.begin(), r.grid.end(), [](const auto& p) { return p.coex == Verdict::Holds; });
  r.monotone = true;
  bool seen_fail = false;
  for (const auto& p : r.grid) {
    if (p.jm == Verdict::Fails) seen_fail = true;
    if (p.jm == Verdict::Holds && seen_fail) r.monotone = false;
  }

  r.jm_bracket = robustness(ce.a, ce.b, Relation::JM, config, bisect_tol);
  r.coex_minus_jm_fraction = 1.0 - r.jm_bracket.lambda_upper;

  // Fine grid across the bracket: everything below the lower end holds,
  // everything above the upper end does not.
  const double lo = r.jm_bracket.lambda_lower;
  const double hi = r.jm_bracket.lambda_upper;
  r.refinement_consistent = !r.jm_bracket.holds_at_one;
  for (int k = 0; k <= 10; ++k) {
    const double lambda = std::clamp(lo - 5e-3 + k * (hi - lo + 1e-2) / 10.0, 0.0, 1.0);
    auto p = classify(ce.a, ce.b, lambda, config, false);
    if (lambda <= lo && p.jm != Verdict::Holds) r.refinement_consistent = false;
    if (lambda >= hi && p.jm == Verdict::Holds) r.refinement_consistent = false;
    r.refinement.push_back(p);
  }
  return r;
}

// ---------------------------------------------------------------------------

Rng trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return Rng(seq);
}

namespace {

MatrixXc ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXc g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(i, j) = {re, im};
    }
  return g;
}

MatrixXc inverse_sqrt(const MatrixXc& s) {
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(s);
  const Eigen::VectorXd w = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * w.cast<std::complex<double>>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

Povm random_povm(int n, Eigen::Index d, Rng& rng, Eigen::Index rank) {
  if (n < 1 || d < 1) throw InvalidInput("random_povm: need n >= 1 and d >= 1");
  if (rank <= 0) rank = d;
  if (n * rank < d) throw InvalidInput("random_povm: need n * rank >= d for a full-rank normalizer");
  std::vector<MatrixXc> gg;
  MatrixXc s = MatrixXc::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    const MatrixXc g = ginibre(d, rank, rng);
    gg.push_back(g * g.adjoint());
    s += gg.back();
  }
  const MatrixXc w = inverse_sqrt(s);
  std::vector<HermitianMatrixd> effects;
  for (const auto& p : gg) effects.push_back(herm(w * p * w));
  return validate_povm(std::move(effects));
}

DensityMatrix random_density(Eigen::Index d, Rng& rng) {
  const MatrixXc g = ginibre(d, d, rng);
  MatrixXc rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::validate(herm(rho));
}

MatrixXc random_unitary(Eigen::Index d, Rng& rng) {
  const MatrixXc g = ginibre(d, d, rng);
  Eigen::HouseholderQR<MatrixXc> qr(g);
  MatrixXc q = qr.householderQ();
  const MatrixXc r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < d; ++k) {
    const auto z = r(k, k);
    if (std::abs(z) > 0) q.col(k) *= z / std::abs(z);
  }
  return q;
}

Povm random_diagonal_povm(int n, const MatrixXc& basis, Rng& rng) {
  const auto d = basis.rows();
  std::exponential_distribution<double> expo(1.0);
  std::vector<Eigen::VectorXd> diag(n, Eigen::VectorXd::Zero(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    double total = 0;
    for (int i = 0; i < n; ++i) total += (diag[i](k) = expo(rng));
    for (int i = 0; i < n; ++i) diag[i](k) /= total;
  }
  std::vector<HermitianMatrixd> effects;
  for (int i = 0; i < n; ++i)
    effects.push_back(herm(basis * diag[i].cast<std::complex<double>>().asDiagonal() * basis.adjoint()));
  return validate_povm(std::move(effects));
}

Interval wilson_interval(int k, int n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double p = double(k) / n;
  const double z2 = z * z;
  const double denom = 1 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

void parallel_for(int count, int jobs, const std::function<void(int)>& task) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += jobs) task(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

SampleReport sample_pairs(int n, int m, int d, int trials, std::uint64_t seed, const CheckConfig& config, int jobs) {
  if (trials < 1) throw InvalidInput("sample: need at least one trial");
  if (n < 1 || m < 1 || d < 1) throw InvalidInput("sample: outcome counts and dimension must be positive");
  SampleReport r;
  r.n = n;
  r.m = m;
  r.d = d;
  r.trials = trials;
  r.seed = seed;
  r.records.resize(trials);
  parallel_for(trials, jobs, [&](int t) {
    auto rng = trial_rng(seed, t);
    const Povm a = random_povm(n, d, rng);
    const Povm b = random_povm(m, d, rng);
    SampleRecord rec;
    rec.trial = t;
    const auto jm = jm_check(a, b, config);
    rec.jm = jm.verdict;
    rec.jm_iterations = jm.diagnostics.iterations;
    rec.jm_residual = jm.diagnostics.residual;
    try {
      const auto cx = coex_check(a, b, config);
      rec.coex = cx.verdict;
      rec.coex_iterations = cx.diagnostics.iterations;
      rec.coex_residual = cx.diagnostics.residual;
    } catch (const TooLarge&) {
      rec.coex_checked = false;
    }
    r.records[t] = rec;
  });
  for (const auto& rec : r.records) {
    r.jm_holds += rec.jm == Verdict::Holds;
    r.coex_fails += rec.coex == Verdict::Fails;
    r.coex_not_jm += rec.coex == Verdict::Holds && rec.jm == Verdict::Fails;
    r.indeterminate += rec.jm == Verdict::Indeterminate || (rec.coex_checked && rec.coex == Verdict::Indeterminate);
    r.hierarchy_violations += rec.jm == Verdict::Holds && rec.coex == Verdict::Fails;
  }
  r.jm_interval = wilson_interval(r.jm_holds, trials);
  r.non_coex_interval = wilson_interval(r.coex_fails, trials);
  r.coex_not_jm_interval = wilson_interval(r.coex_not_jm, trials);
  return r;
}

// ---------------------------------------------------------------------------

std::pair<Povm, Povm> hierarchy_pair(std::uint64_t seed, int trial) {
  auto rng = trial_rng(seed ^ 0x5eedULL, static_cast<std::uint64_t>(trial));
  std::uniform_int_distribution<int> two_three(2, 3);
  const int d = two_three(rng);
  const int n = two_three(rng);
  const int m = two_three(rng);
  switch (trial % 4) {
    case 0:
      return {random_povm(n, d, rng), random_povm(m, d, rng)};
    case 1: {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double lambda = unit(rng);
      return {mix_with_trivial(random_povm(n, d, rng), lambda), mix_with_trivial(random_povm(m, d, rng), lambda)};
    }
    case 2: {
      const MatrixXc u = random_unitary(d, rng);
      return {random_diagonal_povm(n, u, rng), random_diagonal_povm(m, u, rng)};
    }
    default: {
      const Povm joint = random_povm(n * m, d, rng);
      std::vector<HermitianMatrixd> a(n, HermitianMatrixd::zero(d)), b(m, HermitianMatrixd::zero(d));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
          a[i] += joint[i * m + j];
          b[j] += joint[i * m + j];
        }
      return {validate_povm(std::move(a)), validate_povm(std::move(b))};
    }
  }
}

bool SuiteReport::passed() const {
  auto ok = [](const PropertyFamily& f) { return f.failed == 0 && f.passed + f.failed + f.indeterminate == f.trials; };
  return ok(binary_equivalence) && ok(sufficient_ball) && ok(hierarchy) && binary_equivalence.indeterminate == 0 &&
         sufficient_ball.indeterminate == 0 && hierarchy.indeterminate * 20 < std::max(1, hierarchy.trials);
}

namespace {

enum class TrialResult { Pass, Fail, Indeterminate };

PropertyFamily run_family(const std::string& name, int trials, int jobs, const std::function<TrialResult(int)>& body) {
  std::vector<TrialResult> results(trials, TrialResult::Indeterminate);
  parallel_for(trials, jobs, [&](int t) { results[t] = body(t); });
  PropertyFamily f;
  f.name = name;
  f.trials = trials;
  for (int t = 0; t < trials; ++t) switch (results[t]) {
      case TrialResult::Pass: ++f.passed; break;
      case TrialResult::Fail:
        ++f.failed;
        f.failing_trials.push_back(t);
        break;
      case TrialResult::Indeterminate: ++f.indeterminate; break;
    }
  return f;
}

}  // namespace

SuiteReport property_suite(std::uint64_t seed, const CheckConfig& config, SuiteTrials trials, int jobs) {
  SuiteReport s;
  s.seed = seed;

  s.binary_equivalence = run_family("binary-equivalence", trials.binary, jobs, [&](int t) {
    auto rng = trial_rng(seed ^ 0xb1a7ULL, t);
    const int d = 2 + t % 2;
    std::uniform_real_distribution<double> unit(0.3, 1.0);
    const double lambda = unit(rng);
    const Povm a = mix_with_trivial(random_povm(2, d, rng), lambda);
    const Povm b = mix_with_trivial(random_povm(2, d, rng), lambda);
    std::vector<Povm> margins;
    for (const auto& [tag, mg] : coexistence_collection(a, b, config.max_margins)) margins.push_back(mg.povm);
    if (margins.size() != 2) return TrialResult::Fail;
    if (!build_jm_problem(a, b).structurally_equal(build_collection_problem(margins))) return TrialResult::Fail;
    const auto jm = jm_check(a, b, config).verdict;
    const auto cx = coex_check(a, b, config).verdict;
    if (jm == Verdict::Indeterminate || cx == Verdict::Indeterminate) return TrialResult::Indeterminate;
    return jm == cx ? TrialResult::Pass : TrialResult::Fail;
  });

  s.sufficient_ball = run_family("sufficient-ball", trials.ball, jobs, [&](int t) {
    auto rng = trial_rng(seed ^ 0xba11ULL, t);
    std::uniform_int_distribution<int> two_three(2, 3);
    const int d = two_three(rng), n = two_three(rng), m = two_three(rng);
    const Povm a = mix_with_trivial(random_povm(n, d, rng), 0.5);
    const Povm b = mix_with_trivial(random_povm(m, d, rng), 0.5);
    for (const auto& e : a.effects())
      if (min_eigenvalue(e) < 1.0 / (2 * n) - 1e-12) return TrialResult::Fail;
    for (const auto& e : b.effects())
      if (min_eigenvalue(e) < 1.0 / (2 * m) - 1e-12) return TrialResult::Fail;
    const auto v = jm_check(a, b, config).verdict;
    if (v == Verdict::Indeterminate) return TrialResult::Indeterminate;
    return v == Verdict::Holds ? TrialResult::Pass : TrialResult::Fail;
  });

  s.hierarchy = run_family("hierarchy", trials.hierarchy, jobs, [&](int t) {
    const auto [a, b] = hierarchy_pair(seed, t);
    try {
      const auto h = hierarchy_report(a, b, config);
      for (auto v : h.verdicts())
        if (v == Verdict::Indeterminate) return TrialResult::Indeterminate;
      return TrialResult::Pass;
    } catch (const InternalError&) {
      return TrialResult::Fail;
    }
  });
  return s;
}

}  // namespace qcompat::lab
