#include "qcompat/compat.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace qcompat {

const char* to_string(Relation r) {
  switch (r) {
    case Relation::COM: return "COM";
    case Relation::ND: return "ND";
    case Relation::JM: return "JM";
    case Relation::COEX: return "COEX";
  }
  return "?";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "Holds";
    case Verdict::Fails: return "Fails";
    case Verdict::Indeterminate: return "Indeterminate";
  }
  return "?";
}

Relation relation_from_string(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return std::toupper(c); });
  if (u == "COM") return Relation::COM;
  if (u == "ND") return Relation::ND;
  if (u == "JM") return Relation::JM;
  if (u == "COEX") return Relation::COEX;
  throw InvalidInput("unknown relation '" + s + "'");
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "Holds") return Verdict::Holds;
  if (s == "Fails") return Verdict::Fails;
  if (s == "Indeterminate") return Verdict::Indeterminate;
  throw InvalidInput("unknown verdict '" + s + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

void require_same_dim(const Povm& a, const Povm& b) {
  if (a.dim() != b.dim())
    throw InvalidInput("observables act on different dimensions: " + std::to_string(a.dim()) + " vs " +
                       std::to_string(b.dim()));
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

CompatReport report_from_outcome(Relation rel, const AffinePsdProblem& problem, FeasibilityOutcome outcome,
                                 const CheckConfig& cfg) {
  CompatReport r;
  r.relation = rel;
  r.method = "dykstra";
  r.feas_tol = cfg.solver.feas_tol;
  r.com_tol = cfg.com_tol;
  r.max_iters = cfg.solver.max_iters;
  r.diagnostics = outcome.diagnostics;
  switch (outcome.status) {
    case FeasibilityStatus::Feasible: {
      Blocks x;
      for (const auto& b : outcome.blocks) x.push_back(b.matrix());
      r.certificate_residual = problem.residual(x);
      double lo = 0;
      for (const auto& b : outcome.blocks) lo = std::min(lo, min_eigenvalue(b));
      if (r.certificate_residual > 10 * cfg.solver.feas_tol || lo < -10 * cfg.solver.feas_tol)
        throw InternalError("feasible certificate does not re-validate");
      r.verdict = Verdict::Holds;
      r.blocks = std::move(outcome.blocks);
      break;
    }
    case FeasibilityStatus::Infeasible:
      if (!outcome.witness || !verify_witness(*outcome.witness, problem))
        throw InternalError("infeasibility witness does not verify");
      r.verdict = Verdict::Fails;
      r.witness = std::move(outcome.witness);
      break;
    case FeasibilityStatus::Indeterminate:
      r.verdict = Verdict::Indeterminate;
      break;
  }
  return r;
}

bool nearly_zero(const HermitianMatrixd& m) { return m.norm() <= 1e-12; }

}  // namespace

AffinePsdProblem build_collection_problem(const std::vector<Povm>& observables, long max_joint_outcomes) {
  if (observables.empty()) throw InvalidInput("collection: no observables");
  const auto d = observables.front().dim();
  long total = 1;
  int rows = 0;
  std::vector<int> offset;
  for (const auto& o : observables) {
    if (o.dim() != d) throw InvalidInput("collection: observables act on different dimensions");
    offset.push_back(rows);
    rows += o.num_outcomes();
    total *= o.num_outcomes();
    if (total > max_joint_outcomes)
      throw TooLarge("collection: more than " + std::to_string(max_joint_outcomes) + " joint outcomes");
  }
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(rows, total);
  for (long g = 0; g < total; ++g) {
    long rem = g;
    for (int l = static_cast<int>(observables.size()) - 1; l >= 0; --l) {
      const int nl = observables[l].num_outcomes();
      k(offset[l] + rem % nl, g) = 1.0;
      rem /= nl;
    }
  }
  std::vector<HermitianMatrixd> targets;
  for (const auto& o : observables)
    for (const auto& e : o.effects()) targets.push_back(e);
  auto p = AffinePsdProblem::marginal(std::move(k), std::move(targets), static_cast<double>(d));
  if (observables.size() == 2) p.set_transport_shape(observables[0].num_outcomes(), observables[1].num_outcomes());
  return p;
}

AffinePsdProblem build_jm_problem(const Povm& a, const Povm& b) {
  require_same_dim(a, b);
  return build_collection_problem({a, b});
}

MatrixXc choi_adjoint(const MatrixXc& choi, const MatrixXc& y) {
  const auto d = y.rows();
  if (choi.rows() != d * d) throw InvalidInput("choi_adjoint: dimension mismatch");
  // Lambda^dagger(Y)_{lk} = sum_{ab} C_{(k,a),(l,b)} Y_{ba}
  MatrixXc out(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = 0; l < d; ++l)
      out(l, k) = choi.block(k * d, l * d, d, d).cwiseProduct(y.transpose()).sum();
  return out;
}

MatrixXc choi_of_kraus(const std::vector<MatrixXc>& kraus) {
  const auto d = kraus.front().cols();
  MatrixXc c = MatrixXc::Zero(d * d, d * d);
  for (const auto& kk : kraus) {
    // (1 (x) K)|Omega> = sum_k |k> (x) K|k>
    VectorXc v(d * d);
    for (Eigen::Index k = 0; k < d; ++k) v.segment(k * d, d) = kk.col(k);
    c += v * v.adjoint();
  }
  return c;
}

AffinePsdProblem build_nd_problem(const Povm& a, const Povm& b) {
  require_same_dim(a, b);
  const auto d = a.dim();
  const int n = a.num_outcomes();
  const int m = b.num_outcomes();
  auto map_for = [d](const MatrixXc& y) {
    const auto dd = d * d;
    Eigen::MatrixXd map(d * d, dd * dd);
    for (Eigen::Index k = 0; k < dd * dd; ++k) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(dd * dd);
      e(k) = 1;
      map.col(k) = hvec(choi_adjoint(hunvec(e, dd), y));
    }
    return map;
  };
  const Eigen::MatrixXd unit_map = map_for(MatrixXc::Identity(d, d));
  std::vector<LinearTerm> terms;
  std::vector<HermitianMatrixd> targets;
  for (int i = 0; i < n; ++i) {
    terms.push_back({i, i, unit_map});
    targets.push_back(a[i]);
  }
  for (int j = 0; j < m; ++j) {
    const Eigen::MatrixXd mj = map_for(b[j].matrix());
    for (int i = 0; i < n; ++i) terms.push_back({n + j, i, mj});
    targets.push_back(b[j]);
  }
  // Tr C_i = Tr Lambda_i^dagger(1) = Tr A_i <= d
  return AffinePsdProblem::general(std::vector<Eigen::Index>(n, d * d), std::move(terms), std::move(targets),
                                   static_cast<double>(d));
}

CompatReport com_check(const Povm& a, const Povm& b, double tol) {
  require_same_dim(a, b);
  const auto t0 = Clock::now();
  CompatReport r;
  r.relation = Relation::COM;
  r.method = "commutators";
  r.com_tol = tol;
  double worst = 0;
  for (const auto& ai : a.effects()) {
    std::vector<double> row;
    for (const auto& bj : b.effects()) {
      const double c = (ai.matrix() * bj.matrix() - bj.matrix() * ai.matrix()).norm();
      worst = std::max(worst, c);
      row.push_back(c);
    }
    r.commutator_norms.push_back(std::move(row));
  }
  r.certificate_residual = worst;
  r.verdict = worst <= tol ? Verdict::Holds : Verdict::Fails;
  r.seconds = seconds_since(t0);
  return r;
}

CompatReport jm_collection_check(const std::vector<Povm>& observables, const CheckConfig& config) {
  const auto t0 = Clock::now();
  const auto problem = build_collection_problem(observables, config.max_joint_outcomes);
  auto r = report_from_outcome(Relation::JM, problem, solve(problem, config.solver), config);
  r.seconds = seconds_since(t0);
  return r;
}

CompatReport jm_check(const Povm& a, const Povm& b, const CheckConfig& config) {
  require_same_dim(a, b);
  return jm_collection_check({a, b}, config);
}

std::vector<std::pair<int, BinaryMargin>> coexistence_collection(const Povm& a, const Povm& b, int max_margins) {
  require_same_dim(a, b);
  auto count = [](const Povm& p) { return p.num_outcomes() < 2 ? 0L : (1L << (p.num_outcomes() - 1)) - 1; };
  if (a.num_outcomes() > 31 || b.num_outcomes() > 31 || count(a) + count(b) > max_margins)
    throw TooLarge("coexistence: " + std::to_string(count(a) + count(b)) + " binary margins exceed the limit of " +
                   std::to_string(max_margins));
  std::vector<std::pair<int, BinaryMargin>> kept;
  auto consider = [&](int tag, const Povm& p) {
    if (p.num_outcomes() < 2) return;
    for (auto& mg : binary_margins(p)) {
      const auto& e = mg.povm[0];
      const auto& f = mg.povm[1];
      if (nearly_zero(e) || nearly_zero(f)) continue;
      const bool dup = std::any_of(kept.begin(), kept.end(), [&](const auto& k) {
        return frobenius_distance(k.second.povm[0], e) <= 1e-12 || frobenius_distance(k.second.povm[1], e) <= 1e-12;
      });
      if (!dup) kept.emplace_back(tag, std::move(mg));
    }
  };
  consider(0, a);
  consider(1, b);
  return kept;
}

CompatReport coex_check(const Povm& a, const Povm& b, const CheckConfig& config,
                        const std::optional<Povm>& witness_povm) {
  require_same_dim(a, b);
  const auto t0 = Clock::now();
  std::vector<std::vector<int>> subsets;
  if (witness_povm) {
    require_same_dim(a, *witness_povm);
    bool all = true;
    for (const Povm* p : {&a, &b})
      for (const auto& e : p->effects()) {
        auto s = subset_sum_range_inclusion(*witness_povm, e, config.subset_tol);
        if (!s) {
          all = false;
          break;
        }
        subsets.push_back(std::move(*s));
      }
    if (all) {
      CompatReport r;
      r.relation = Relation::COEX;
      r.verdict = Verdict::Holds;
      r.method = "subset-sums";
      r.subset_certificates = std::move(subsets);
      r.feas_tol = config.solver.feas_tol;
      r.com_tol = config.com_tol;
      r.max_iters = config.solver.max_iters;
      r.certificate_residual = 0;
      for (size_t i = 0; i < r.subset_certificates.size(); ++i) {
        const auto& target = i < static_cast<size_t>(a.num_outcomes()) ? a[i] : b[i - a.num_outcomes()];
        r.certificate_residual = std::max(
            r.certificate_residual, frobenius_distance(subset_sum(*witness_povm, r.subset_certificates[i]), target));
      }
      r.seconds = seconds_since(t0);
      return r;
    }
    subsets.clear();
  }

  const auto kept = coexistence_collection(a, b, config.max_margins);
  std::vector<std::vector<int>> listing;
  std::vector<Povm> observables;
  for (const auto& [tag, mg] : kept) {
    std::vector<int> row{tag};
    row.insert(row.end(), mg.subset.begin(), mg.subset.end());
    listing.push_back(std::move(row));
    observables.push_back(mg.povm);
  }
  CompatReport r;
  if (observables.empty()) {
    r.verdict = Verdict::Holds;
    r.method = "trivial";
    r.feas_tol = config.solver.feas_tol;
    r.com_tol = config.com_tol;
    r.max_iters = config.solver.max_iters;
  } else {
    r = jm_collection_check(observables, config);
    r.method = "collection";
  }
  r.relation = Relation::COEX;
  r.collection = std::move(listing);
  r.seconds = seconds_since(t0);
  return r;
}

CompatReport nd_check(const Povm& a, const Povm& b, const CheckConfig& config) {
  const auto t0 = Clock::now();
  const auto problem = build_nd_problem(a, b);
  // The Lueders instrument sqrt(A_i) . sqrt(A_i) leaves B invariant whenever A
  // and B commute; try it before searching.
  FeasibilityOutcome lueders;
  Blocks choi;
  for (const auto& ai : a.effects()) {
    const auto eig = herm_eig(ai);
    const Eigen::VectorXd root = eig.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    const MatrixXc k = eig.eigenvectors * root.cast<std::complex<double>>().asDiagonal() * eig.eigenvectors.adjoint();
    choi.push_back(choi_of_kraus({k}));
  }
  if (problem.residual(choi) <= config.solver.feas_tol) {
    lueders.status = FeasibilityStatus::Feasible;
    for (const auto& c : choi) lueders.blocks.emplace_back(c);
    lueders.diagnostics.residual = problem.residual(choi);
    auto r = report_from_outcome(Relation::ND, problem, std::move(lueders), config);
    r.method = "lueders";
    r.seconds = seconds_since(t0);
    return r;
  }
  auto r = report_from_outcome(Relation::ND, problem, solve(problem, config.solver), config);
  r.seconds = seconds_since(t0);
  return r;
}

CompatReport check_relation(Relation rel, const Povm& a, const Povm& b, const CheckConfig& config) {
  switch (rel) {
    case Relation::COM: return com_check(a, b, config.com_tol);
    case Relation::ND: return nd_check(a, b, config);
    case Relation::JM: return jm_check(a, b, config);
    case Relation::COEX: return coex_check(a, b, config);
  }
  throw InvalidInput("unknown relation");
}

RobustnessResult robustness(const Povm& a, const Povm& b, Relation relation, const CheckConfig& config, double tol) {
  if (relation != Relation::JM && relation != Relation::COEX)
    throw InvalidInput("robustness is defined for JM and COEX only");
  if (!(tol > 0)) throw InvalidInput("robustness: tolerance must be positive");
  require_same_dim(a, b);
  RobustnessResult res;
  res.relation = relation;
  res.tol = tol;
  auto probe = [&](double lambda) {
    const auto r = check_relation(relation, mix_with_trivial(a, lambda), mix_with_trivial(b, lambda), config);
    res.steps.push_back({lambda, r.verdict, r.diagnostics.iterations});
    if (r.verdict == Verdict::Indeterminate) res.conservative = true;
    return r.verdict;
  };
  if (probe(1.0) == Verdict::Holds) {
    res.holds_at_one = true;
    res.lambda_lower = res.lambda_upper = 1.0;
    return res;
  }
  if (probe(0.0) != Verdict::Holds) throw InvalidInput("robustness: relation does not hold at lambda = 0");
  double lo = 0, hi = 1;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (probe(mid) == Verdict::Holds ? lo : hi) = mid;
  }
  res.lambda_lower = lo;
  res.lambda_upper = hi;
  return res;
}

HierarchyReport hierarchy_report(const Povm& a, const Povm& b, const CheckConfig& config) {
  HierarchyReport h{com_check(a, b, config.com_tol), nd_check(a, b, config), jm_check(a, b, config),
                    coex_check(a, b, config)};
  const auto v = h.verdicts();
  for (size_t s = 0; s < v.size(); ++s)
    for (size_t t = s + 1; t < v.size(); ++t)
      if (v[s] == Verdict::Holds && v[t] == Verdict::Fails)
        throw InternalError(std::string("hierarchy violated: stage ") + std::to_string(s) + " holds but stage " +
                            std::to_string(t) + " fails");
  return h;
}

}  // namespace qcompat
