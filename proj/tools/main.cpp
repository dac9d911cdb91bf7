// qcompat command-line driver.
//
// Exit codes: 0 holds / success, 1 fails, 2 invalid input, 3 indeterminate,
// 4 internal error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qcompat/io.hpp"

namespace {

using qcompat::io::json;

constexpr std::uint64_t kDefaultSeed = 20240521;

enum Exit { kHolds = 0, kFails = 1, kInvalid = 2, kIndeterminate = 3, kInternal = 4 };

struct Options {
  std::string format = "human";
  std::string out;
  std::string csv;
  double tol = qcompat::SolverConfig{}.feas_tol;
  double povm_tol = qcompat::kDefaultPovmTol;
  double com_tol = qcompat::CheckConfig{}.com_tol;
  int max_iters = qcompat::SolverConfig{}.max_iters;
  std::uint64_t seed = kDefaultSeed;
  int steps = 11;
  int trials = 0;  // 0: 200 for sample, 100 for suite
  int hierarchy_trials = 200;
  int jobs = 1;
  int n = 2, m = 2, d = 2;
  double bisect_tol = 1e-4;
  std::string relation = "JM";
  std::string witness;
  std::vector<std::string> files;
};

int exit_for(qcompat::Verdict v) {
  switch (v) {
    case qcompat::Verdict::Holds: return kHolds;
    case qcompat::Verdict::Fails: return kFails;
    case qcompat::Verdict::Indeterminate: return kIndeterminate;
  }
  return kInternal;
}

qcompat::CheckConfig check_config(const Options& o) {
  qcompat::CheckConfig c;
  c.solver.feas_tol = o.tol;
  c.solver.max_iters = o.max_iters;
  c.com_tol = o.com_tol;
  return c;
}

json echo_config(const std::string& verb, const Options& o) {
  json j = {{"verb", verb}, {"check", qcompat::io::to_json(check_config(o))}, {"povm_tol", o.povm_tol}};
  if (!o.files.empty()) j["inputs"] = o.files;
  if (!o.witness.empty()) j["witness"] = o.witness;
  if (verb == "robustness" || verb == "segment") j["bisect_tol"] = o.bisect_tol;
  if (verb == "robustness") j["relation"] = o.relation;
  if (verb == "segment") j["steps"] = o.steps;
  if (verb == "sample") {
    j["n"] = o.n;
    j["m"] = o.m;
    j["d"] = o.d;
  }
  if (verb == "sample" || verb == "suite") {
    j["seed"] = o.seed;
    j["trials"] = o.trials;
    j["jobs"] = o.jobs;
  }
  if (verb == "suite") j["hierarchy_trials"] = o.hierarchy_trials;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
    if (!std::cout) throw std::runtime_error("cannot write to standard output");
    return;
  }
  std::ofstream f(path, std::ios::binary);
  f << text;
  f.close();
  if (!f) throw std::runtime_error("cannot write " + path);
}

template <typename Report>
void emit(const std::string& verb, const Options& o, const Report& r) {
  if (o.format == "structured") {
    const json doc = {{"command", echo_config(verb, o)}, {"result", qcompat::io::to_json(r)}};
    write_text(o.out, qcompat::io::dump(doc) + "\n");
  } else {
    write_text(o.out, qcompat::io::human(r));
  }
}

int run(const std::string& verb, const Options& o) {
  using namespace qcompat;
  const auto cfg = check_config(o);
  auto povm = [&](size_t k) { return io::read_povm_file(o.files.at(k), o.povm_tol); };

  if (verb == "validate") {
    const Povm p = povm(0);
    if (o.format == "structured") {
      const json doc = {{"command", echo_config(verb, o)},
                        {"result", {{"valid", true}, {"dim", p.dim()}, {"num_outcomes", p.num_outcomes()}}}};
      write_text(o.out, io::dump(doc) + "\n");
    } else {
      write_text(o.out, "valid POVM: dim " + std::to_string(p.dim()) + ", " + std::to_string(p.num_outcomes()) +
                            " outcomes\n");
    }
    return kHolds;
  }
  if (verb == "jm" || verb == "coex" || verb == "com" || verb == "nd") {
    const Povm a = povm(0), b = povm(1);
    CompatReport r;
    if (verb == "jm") r = jm_check(a, b, cfg);
    if (verb == "com") r = com_check(a, b, cfg.com_tol);
    if (verb == "nd") r = nd_check(a, b, cfg);
    if (verb == "coex") {
      std::optional<Povm> w;
      if (!o.witness.empty()) w = io::read_povm_file(o.witness, o.povm_tol);
      r = coex_check(a, b, cfg, w);
    }
    emit(verb, o, r);
    return exit_for(r.verdict);
  }
  if (verb == "hierarchy") {
    const auto r = hierarchy_report(povm(0), povm(1), cfg);
    emit(verb, o, r);
    for (auto v : r.verdicts())
      if (v == Verdict::Indeterminate) return kIndeterminate;
    return kHolds;
  }
  if (verb == "robustness") {
    const auto r = robustness(povm(0), povm(1), relation_from_string(o.relation), cfg, o.bisect_tol);
    emit(verb, o, r);
    return r.conservative ? kIndeterminate : kHolds;
  }
  if (verb == "prop1") {
    const auto r = lab::verify_counterexample(cfg);
    emit(verb, o, r);
    return r.passed() ? kHolds : kFails;
  }
  if (verb == "segment") {
    const auto r = lab::segment_experiment(o.steps, cfg, o.bisect_tol);
    emit(verb, o, r);
    if (!o.csv.empty()) write_text(o.csv, io::segment_csv(r));
    return r.passed() ? kHolds : kFails;
  }
  if (verb == "sample") {
    const auto r = lab::sample_pairs(o.n, o.m, o.d, o.trials, o.seed, cfg, o.jobs);
    emit(verb, o, r);
    if (!o.csv.empty()) write_text(o.csv, io::sample_csv(r));
    if (r.hierarchy_violations > 0) return kInternal;
    return kHolds;
  }
  if (verb == "suite") {
    const auto r = lab::property_suite(o.seed, cfg, {o.trials, o.trials, o.hierarchy_trials}, o.jobs);
    emit(verb, o, r);
    return r.passed() ? kHolds : kFails;
  }
  throw std::logic_error("unhandled verb " + verb);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compatibility of finite quantum measurements (POVMs)."};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "human or structured")
        ->check(CLI::IsMember({"human", "structured"}))
        ->capture_default_str();
    sub->add_option("--out", o.out, "write the report here instead of stdout");
    sub->add_option("--tol", o.tol, "feasibility tolerance")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--max-iters", o.max_iters, "solver iteration budget per check")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--povm-tol", o.povm_tol, "POVM validation tolerance")->capture_default_str();
    sub->add_option("--com-tol", o.com_tol, "commutator norm tolerance")->capture_default_str();
  };
  auto files = [&](CLI::App* sub, int count) {
    sub->add_option("files", o.files, count == 1 ? "POVM file" : "POVM files A and B")->required()->expected(count);
  };

  auto* validate = app.add_subcommand("validate", "Parse and validate a POVM file");
  files(validate, 1);
  for (auto [verb, what] : {std::pair{"jm", "joint measurability"}, {"coex", "coexistence"}, {"com", "commutativity"},
                             {"nd", "non-disturbance"}, {"hierarchy", ""}}) {
    auto* sub = app.add_subcommand(verb, std::string("Check ") + what + " of a pair of POVMs");
    files(sub, 2);
  }
  app.get_subcommand("coex")->add_option("--witness", o.witness, "POVM whose subset sums may certify coexistence");
  app.get_subcommand("hierarchy")->description("Run COM, ND, JM and COEX on a pair of POVMs");
  auto* rob = app.add_subcommand("robustness", "Largest white-noise weight keeping JM or COEX");
  files(rob, 2);
  rob->add_option("--relation", o.relation)->check(CLI::IsMember({"JM", "COEX"}))->capture_default_str();
  rob->add_option("--bisect-tol", o.bisect_tol)->capture_default_str()->check(CLI::PositiveNumber);
  app.add_subcommand("prop1", "Verify the coexistent but not jointly measurable pair on C^3");
  auto* seg = app.add_subcommand("segment", "Classify the noisy counterexample along the segment to the trivial pair");
  seg->add_option("--steps", o.steps, "grid points on [0, 1]")->capture_default_str()->check(CLI::Range(2, 100000));
  seg->add_option("--bisect-tol", o.bisect_tol)->capture_default_str()->check(CLI::PositiveNumber);
  seg->add_option("--csv", o.csv, "write the grid as CSV");
  auto* sample = app.add_subcommand("sample", "Classify random POVM pairs");
  sample->add_option("--n", o.n)->capture_default_str()->check(CLI::Range(1, 31));
  sample->add_option("--m", o.m)->capture_default_str()->check(CLI::Range(1, 31));
  sample->add_option("--d", o.d)->capture_default_str()->check(CLI::Range(1, 50));
  sample->add_option("--csv", o.csv, "write one row per trial as CSV");
  auto* suite = app.add_subcommand("suite", "Run the randomized property suites");
  suite->add_option("--hierarchy-trials", o.hierarchy_trials)->capture_default_str()->check(CLI::PositiveNumber);
  sample->add_option("--trials", o.trials, "random pairs [200]")->check(CLI::PositiveNumber);
  suite->add_option("--trials", o.trials, "trials for the binary and sufficient-ball families [100]")
      ->check(CLI::PositiveNumber);
  for (auto* sub : {sample, suite}) {
    sub->add_option("--seed", o.seed)->capture_default_str();
    sub->add_option("--jobs", o.jobs, "worker threads; results do not depend on it")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
  }
  for (auto* sub : app.get_subcommands([](CLI::App*) { return true; })) common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }
  if (o.trials == 0) o.trials = sample->parsed() ? 200 : 100;

  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    return run(verb, o);
  } catch (const qcompat::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
}
