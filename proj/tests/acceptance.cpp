// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <mutex>
#include <thread>

#include "cli_runner.hpp"
#include "qcompat/io.hpp"
#include "support.hpp"

using namespace qcompat;
using namespace testing;

namespace {

// Pinned tolerances.
constexpr double kExactTol = 1e-12;
constexpr double kProp1Seconds = 30;
constexpr double kBracketWidth = 1e-3;
constexpr double kSegmentPinTol = 1e-3;
constexpr double kQubitTarget = 0.70711;
constexpr double kQubitTol = 2e-3;
constexpr double kIndeterminateRate = 0.05;
constexpr double kIdempotenceTol = 1e-12;
constexpr std::uint64_t kSeed = 20240521;

int jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// Soundness ledger shared by every criterion: each report's certificate is
// re-checked against its own verdict, and a Holds verdict may never carry a
// verified witness.
struct Soundness {
  std::mutex mu;
  int reports = 0;
  std::vector<std::string> problems;

  void record(const CompatReport& r, const std::function<AffinePsdProblem()>& rebuild, const std::string& label) {
    std::string issue;
    if (r.verdict == Verdict::Holds && r.witness && verify_witness(*r.witness, rebuild()))
      issue = "Holds together with a verified witness";
    if (r.verdict == Verdict::Fails && r.method != "commutators" && (!r.witness || !verify_witness(*r.witness, rebuild())))
      issue = "Fails without a verified witness";
    std::lock_guard lock(mu);
    ++reports;
    if (!issue.empty()) problems.push_back(label + ": " + issue);
  }
} soundness;

struct Line {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Line> lines;

void report(int id, bool pass, const std::string& detail) {
  lines.push_back({id, pass, detail});
  std::printf("[%s] criterion %2d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void counterexample() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto v = lab::verify_counterexample();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto ref = reference_pair();
  std::vector<Povm> margins;
  for (const auto& [tag, m] : coexistence_collection(ref.a, ref.b)) margins.push_back(m.povm);
  soundness.record(v.collection, [&] { return build_collection_problem(margins); }, "prop1 collection");
  soundness.record(v.joint, [&] { return build_jm_problem(ref.a, ref.b); }, "prop1 joint");

  bool trace = v.diagonal_a.size() == 3 && v.overlaps.size() == 3;
  for (double x : v.diagonal_a) trace &= std::abs(x) <= kExactTol;
  for (double x : v.overlaps) trace &= std::abs(x - 1.0 / 3) <= kExactTol;
  const bool witness = v.joint.witness &&
                       v.joint.witness->objective < -1e-9 && verify_witness(*v.joint.witness, build_jm_problem(ref.a, ref.b));
  const bool pass = v.passed() && v.collection.blocks.size() == 16 && witness && trace && secs <= kProp1Seconds;
  report(1, pass,
         fmt("stages %d%d%d%d, 16 blocks %s, witness objective %.3g, proof trace %s, %.2f s", v.stage1, v.stage2,
             v.stage3, v.stage4, v.collection.blocks.size() == 16 ? "yes" : "no",
             v.joint.witness ? v.joint.witness->objective : 0.0, trace ? "ok" : "off", secs));
}

void padding() {
  const auto cases = lab::padding_experiment({{4, 2}, {4, 3}, {5, 2}});
  bool pass = cases.size() == 3;
  std::string detail;
  for (const auto& c : cases) {
    pass &= c.passed();
    detail += fmt("(%d,%d): COEX %s JM %s; ", c.n, c.m, to_string(c.coex), to_string(c.jm));
  }
  report(2, pass, detail);
}

void segment() {
  const auto r = lab::segment_experiment(11);
  const auto again = lab::segment_experiment(11);
  const double lo = r.jm_bracket.lambda_lower, hi = r.jm_bracket.lambda_upper;
  const double mid = 0.5 * (lo + hi);
  bool coex = r.grid.size() == 11;
  for (const auto& p : r.grid) coex &= p.coex == Verdict::Holds;
  const bool pass = r.passed() && coex && hi - lo <= kBracketWidth && lo > 0 && hi < 1 &&
                    std::abs(mid - kSegmentJmThreshold) <= kSegmentPinTol && again.jm_bracket.lambda_lower == lo &&
                    again.jm_bracket.lambda_upper == hi;
  report(3, pass,
         fmt("lambda*_JM in [%.10f, %.10f] (width %.2g, pinned %.6f), COEX on all %zu grid points: %s", lo, hi,
             hi - lo, kSegmentJmThreshold, r.grid.size(), coex ? "yes" : "no"));
}

void qubit() {
  const Eigen::Vector3d x(1, 0, 0), z(0, 0, 1);
  const auto r = robustness(unbiased_qubit(x), unbiased_qubit(z), Relation::JM);
  const double mid = 0.5 * (r.lambda_lower + r.lambda_upper);
  const double oracle = qubit_threshold(x, z);
  const bool pass = !r.conservative && std::abs(mid - kQubitTarget) <= kQubitTol &&
                    std::abs(mid - oracle) <= kQubitTol && r.lambda_lower <= oracle && oracle <= r.lambda_upper;
  report(4, pass, fmt("lambda* in [%.8f, %.8f], analytic oracle %.8f", r.lambda_lower, r.lambda_upper, oracle));
}

void hierarchy() {
  constexpr int trials = 200;
  std::vector<std::vector<Verdict>> verdicts(trials);
  std::vector<int> dims(trials);
  lab::parallel_for(trials, jobs(), [&](int t) {
    const auto [a, b] = lab::hierarchy_pair(kSeed, t);
    dims[t] = static_cast<int>(a.dim());
    const CheckConfig cfg;
    const auto com = com_check(a, b, cfg.com_tol);
    const auto nd = nd_check(a, b, cfg);
    const auto jm = jm_check(a, b, cfg);
    const auto coex = coex_check(a, b, cfg);
    const std::string tag = "hierarchy trial " + std::to_string(t);
    soundness.record(nd, [&] { return build_nd_problem(a, b); }, tag + " ND");
    soundness.record(jm, [&] { return build_jm_problem(a, b); }, tag + " JM");
    soundness.record(coex, [&] {
      std::vector<Povm> m;
      for (const auto& [i, mg] : coexistence_collection(a, b)) m.push_back(mg.povm);
      return build_collection_problem(m);
    }, tag + " COEX");
    verdicts[t] = {com.verdict, nd.verdict, jm.verdict, coex.verdict};
  });
  int violations = 0, indeterminate = 0, d2 = 0;
  for (int t = 0; t < trials; ++t) {
    const auto& v = verdicts[t];
    d2 += dims[t] == 2;
    for (size_t s = 0; s < 4; ++s)
      for (size_t u = s + 1; u < 4; ++u) violations += v[s] == Verdict::Holds && v[u] == Verdict::Fails;
    for (auto x : v) indeterminate += x == Verdict::Indeterminate;
  }
  const double rate = double(indeterminate) / (4.0 * trials);
  report(5, violations == 0 && rate < kIndeterminateRate && d2 > 0 && d2 < trials,
         fmt("%d pairs (%d with d = 2), %d violations, Indeterminate rate %.2f%%", trials, d2, violations,
             100 * rate));
}

void suites() {
  const auto s = lab::property_suite(kSeed, {}, {100, 100, 1}, jobs());
  const auto& b = s.binary_equivalence;
  report(6, b.trials == 100 && b.passed == 100,
         fmt("%d pairs, %d agree, %d disagree, %d Indeterminate", b.trials, b.passed, b.failed, b.indeterminate));
  const auto& ball = s.sufficient_ball;
  report(7, ball.trials == 100 && ball.passed == 100,
         fmt("%d pairs, JM Holds on %d, Fails on %d, Indeterminate on %d", ball.trials, ball.passed, ball.failed,
             ball.indeterminate));
}

void solver_soundness() {
  int feasible = 0, witnesses_on_feasible = 0;
  double worst_idem = 0;
  for (int t = 0; t < 100; ++t) {
    const auto inst = constructed_instance(t);
    const auto out = solve(inst.problem);
    feasible += out.status == FeasibilityStatus::Feasible;
    witnesses_on_feasible += out.witness && verify_witness(*out.witness, inst.problem);
    std::mt19937_64 rng(t);
    std::vector<HermitianMatrixd> x;
    for (auto d : inst.problem.block_dims()) x.push_back(random_hermitian(d, rng));
    const auto once = project_affine(x, inst.problem), twice = project_affine(once, inst.problem);
    double diff = 0, scale = 0;
    for (size_t i = 0; i < once.size(); ++i) {
      diff += (once[i].matrix() - twice[i].matrix()).squaredNorm();
      scale += once[i].matrix().squaredNorm();
    }
    worst_idem = std::max(worst_idem, std::sqrt(diff) / std::max(1.0, std::sqrt(scale)));
  }
  std::lock_guard lock(soundness.mu);
  const bool pass = feasible == 100 && witnesses_on_feasible == 0 && worst_idem <= kIdempotenceTol &&
                    soundness.problems.empty() && soundness.reports > 0;
  std::string detail = fmt("%d/100 constructed instances Feasible, %d verified witnesses on them, idempotence %.2g, "
                           "%d reports re-checked with %zu inconsistencies",
                           feasible, witnesses_on_feasible, worst_idem, soundness.reports, soundness.problems.size());
  for (const auto& p : soundness.problems) detail += "\n    " + p;
  report(8, pass, detail);
}

void sampling() {
  const auto r = lab::sample_pairs(2, 2, 2, 200, kSeed, {}, jobs());
  const bool pass = r.trials == 200 && r.jm_holds > 0 && r.coex_fails > 0 && r.jm_interval.lower > 0 &&
                    r.non_coex_interval.lower > 0 && r.hierarchy_violations == 0;
  report(9, pass,
         fmt("JM %d/200 (Wilson [%.3f, %.3f]), not COEX %d/200 (Wilson [%.3f, %.3f]), Indeterminate %d", r.jm_holds,
             r.jm_interval.lower, r.jm_interval.upper, r.coex_fails, r.non_coex_interval.lower,
             r.non_coex_interval.upper, r.indeterminate));
}

void cli() {
  const std::string a = data_file("counter_a.json"), b = data_file("counter_b.json"), m = data_file("counter_m.json");
  const std::string xn = data_file("qubit_x_noisy.json"), zn = data_file("qubit_z_noisy.json");
  struct Case {
    std::string args;
    int exit;
    std::function<io::json(const io::json&)> round_trip;
  };
  auto via = [](auto from) { return [from](const io::json& j) { return io::to_json(from(j)); }; };
  const auto compat = via(io::compat_report_from_json);
  const std::vector<Case> cases = {
      {"validate " + a, 0, nullptr},
      {"validate " + data_file("bad_sum.json"), 2, nullptr},
      {"com " + a + " " + b, 1, compat},
      {"com " + a + " " + data_file("trivial3.json"), 0, compat},
      {"nd " + a + " " + b, 1, compat},
      {"nd " + a + " " + data_file("trivial3.json"), 0, compat},
      {"jm " + a + " " + b, 1, compat},
      {"jm " + xn + " " + zn, 0, compat},
      {"jm --max-iters 5 " + a + " " + b, 3, compat},
      {"jm " + a + " " + data_file("qubit_x.json"), 2, nullptr},
      {"coex " + a + " " + b, 0, compat},
      {"coex --witness " + m + " " + a + " " + b, 0, compat},
      {"coex --max-iters 5 " + a + " " + b, 3, compat},
      {"hierarchy " + xn + " " + zn, 0, via(io::hierarchy_from_json)},
      {"robustness --bisect-tol 1e-2 " + a + " " + b, 0, via(io::robustness_from_json)},
      {"robustness --relation COEX " + a + " " + b, 0, via(io::robustness_from_json)},
      {"prop1", 0, via(io::counterexample_from_json)},
      {"segment --steps 3 --bisect-tol 1e-2", 0, via(io::segment_from_json)},
      {"sample --trials 8", 0, via(io::sample_from_json)},
      {"suite --trials 4 --hierarchy-trials 4", 0, via(io::suite_from_json)},
      {"no-such-verb", 2, nullptr},
  };
  int ok = 0;
  std::string bad;
  for (const auto& c : cases) {
    const auto r = run_cli(c.args + " --format structured");
    bool good = r.exit_code == c.exit;
    if (good && c.round_trip) {
      try {
        const auto doc = io::parse_document(r.out);
        good = io::dump(c.round_trip(doc.at("result"))) == io::dump(doc.at("result"));
      } catch (const std::exception&) {
        good = false;
      }
    }
    ok += good;
    if (!good) bad += fmt("\n    '%s' exited %d (expected %d)", c.args.c_str(), r.exit_code, c.exit);
  }
  report(10, ok == static_cast<int>(cases.size()),
         fmt("%d/%zu verb invocations with the expected exit code and a lossless structured round-trip", ok,
             cases.size()) + bad);
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void()>>> criteria = {
      {1, counterexample}, {2, padding}, {3, segment}, {4, qubit},      {5, hierarchy},
      {6, suites},         {9, sampling}, {10, cli},   {8, solver_soundness}};
  for (const auto& [id, run] : criteria) {
    try {
      run();
    } catch (const std::exception& e) {
      report(id, false, std::string("threw: ") + e.what());
    }
  }
  int failed = 0;
  for (const auto& l : lines) failed += !l.pass;
  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 && lines.size() == 10 ? 0 : 1;
}
