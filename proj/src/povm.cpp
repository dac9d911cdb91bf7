#include "qcompat/povm.hpp"

#include <cmath>
#include <sstream>

namespace qcompat {

const char* to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::NonHermitian: return "NonHermitian";
    case ViolationKind::NotPositive: return "NotPositive";
    case ViolationKind::NotSubIdentity: return "NotSubIdentity";
    case ViolationKind::SumNotIdentity: return "SumNotIdentity";
  }
  return "?";
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (index >= 0) os << " at effect " << index + 1;
  switch (kind) {
    case ViolationKind::NonHermitian: os << ": anti-Hermitian norm " << amount; break;
    case ViolationKind::NotPositive: os << ": min eigenvalue " << amount; break;
    case ViolationKind::NotSubIdentity: os << ": max eigenvalue " << amount; break;
    case ViolationKind::SumNotIdentity: os << ": |sum - I|_F = " << amount; break;
  }
  return os.str();
}

namespace {
std::string join(const std::vector<Violation>& v) {
  std::string s = "invalid POVM";
  for (const auto& x : v) s += "; " + x.describe();
  return s;
}
}  // namespace

PovmValidationError::PovmValidationError(std::vector<Violation> v)
    : std::invalid_argument(join(v)), violations_(std::move(v)) {}

Effect Effect::validate(const HermitianMatrixd& m, double tol) {
  std::vector<Violation> bad;
  const double lo = min_eigenvalue(m);
  const double hi = max_eigenvalue(m);
  if (lo < -tol) bad.push_back({ViolationKind::NotPositive, 0, lo});
  if (hi > 1 + tol) bad.push_back({ViolationKind::NotSubIdentity, 0, hi});
  if (!bad.empty()) throw PovmValidationError(std::move(bad));
  return Effect(m);
}

Povm validate_povm(std::vector<HermitianMatrixd> effects, double tol) {
  if (effects.empty()) throw InvalidInput("POVM needs at least one effect");
  const auto d = effects.front().dim();
  for (const auto& e : effects)
    if (e.dim() != d) throw InvalidInput("POVM effects have mismatched dimensions");
  std::vector<Violation> bad;
  HermitianMatrixd sum = HermitianMatrixd::zero(d);
  for (size_t k = 0; k < effects.size(); ++k) {
    const double lo = min_eigenvalue(effects[k]);
    const double hi = max_eigenvalue(effects[k]);
    if (lo < -tol) bad.push_back({ViolationKind::NotPositive, static_cast<int>(k), lo});
    if (hi > 1 + tol) bad.push_back({ViolationKind::NotSubIdentity, static_cast<int>(k), hi});
    sum += effects[k];
  }
  const double res = frobenius_distance(sum, HermitianMatrixd::identity(d));
  if (res > tol) bad.push_back({ViolationKind::SumNotIdentity, -1, res});
  if (!bad.empty()) throw PovmValidationError(std::move(bad));
  return Povm(std::move(effects));
}

Povm validate_povm(const std::vector<MatrixXc>& raw, double tol) {
  if (raw.empty()) throw InvalidInput("POVM needs at least one effect");
  const auto d = raw.front().rows();
  std::vector<HermitianMatrixd> effects;
  std::vector<Violation> bad;
  for (size_t k = 0; k < raw.size(); ++k) {
    const auto& m = raw[k];
    if (m.rows() != m.cols()) throw InvalidInput("effect " + std::to_string(k + 1) + " is not square");
    if (m.rows() != d) throw InvalidInput("effect " + std::to_string(k + 1) + " has mismatched dimension");
    if (!all_finite(m)) throw InvalidInput("effect " + std::to_string(k + 1) + " has non-finite entries");
    const double anti = (m - m.adjoint()).norm() * 0.5;
    if (anti > HermitianMatrixd::kDefaultRejectTol * std::max(1.0, m.norm()))
      bad.push_back({ViolationKind::NonHermitian, static_cast<int>(k), anti});
    effects.emplace_back(m, std::numeric_limits<double>::infinity());
  }
  if (!bad.empty()) {
    try {
      validate_povm(effects, tol);
    } catch (const PovmValidationError& e) {
      bad.insert(bad.end(), e.violations().begin(), e.violations().end());
    }
    throw PovmValidationError(std::move(bad));
  }
  return validate_povm(std::move(effects), tol);
}

DensityMatrix DensityMatrix::validate(const HermitianMatrixd& m, double tol) {
  if (min_eigenvalue(m) < -tol) throw InvalidInput("density matrix is not positive semidefinite");
  if (std::abs(m.trace() - 1.0) > tol) throw InvalidInput("density matrix trace is not 1");
  return DensityMatrix(m);
}

DensityMatrix DensityMatrix::pure(const VectorXc& ket) {
  return validate(HermitianMatrixd::projector(ket.normalized()));
}

Povm trivial_povm(int k, Eigen::Index d) {
  if (k < 1 || d < 1) throw InvalidInput("trivial_povm: need k >= 1 and d >= 1");
  return validate_povm(std::vector<HermitianMatrixd>(k, (1.0 / k) * HermitianMatrixd::identity(d)));
}

std::vector<double> outcome_probabilities(const DensityMatrix& rho, const Povm& a) {
  if (rho.dim() != a.dim()) throw InvalidInput("outcome_probabilities: dimension mismatch");
  std::vector<double> p;
  p.reserve(a.num_outcomes());
  for (const auto& e : a.effects()) p.push_back(frobenius_inner(rho.matrix(), e));
  return p;
}

Povm mix_with_trivial(const Povm& a, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidInput("mix_with_trivial: lambda must lie in [0, 1]");
  const int n = a.num_outcomes();
  const HermitianMatrixd noise = ((1.0 - lambda) / n) * HermitianMatrixd::identity(a.dim());
  std::vector<HermitianMatrixd> e;
  e.reserve(n);
  for (const auto& ak : a.effects()) e.push_back(lambda * ak + noise);
  return validate_povm(std::move(e));
}

Povm pad_with_zero(const Povm& a, int target) {
  if (target < a.num_outcomes()) throw InvalidInput("pad_with_zero: target smaller than outcome count");
  std::vector<HermitianMatrixd> e = a.effects();
  e.resize(target, HermitianMatrixd::zero(a.dim()));
  return validate_povm(std::move(e));
}

HermitianMatrixd subset_sum(const Povm& m, const std::vector<int>& subset) {
  HermitianMatrixd s = HermitianMatrixd::zero(m.dim());
  for (int k : subset) s += m[k];
  return s;
}

std::vector<BinaryMargin> binary_margins(const Povm& a) {
  const int n = a.num_outcomes();
  if (n < 2) throw InvalidInput("binary_margins: a single-outcome POVM has no binary coarse-grainings");
  if (n > 30) throw TooLarge("binary_margins: too many outcomes");
  std::vector<BinaryMargin> out;
  const unsigned rest = 1u << (n - 1);
  // mask over outcomes 1..n-1; the all-ones mask gives X = everything, skipped.
  for (unsigned mask = 0; mask + 1 < rest; ++mask) {
    std::vector<int> in{0}, out_set;
    for (int k = 1; k < n; ++k) ((mask >> (k - 1)) & 1u ? in : out_set).push_back(k);
    std::vector<HermitianMatrixd> pair{subset_sum(a, in), subset_sum(a, out_set)};
    out.push_back({std::move(in), validate_povm(std::move(pair))});
  }
  return out;
}

namespace {

struct SubsetSearch {
  const Povm& m;
  const MatrixXc& target;
  double tol;
  std::vector<int> path;
  std::optional<std::vector<int>> found;

  // Preorder over "append a larger index" visits subsets in lexicographic order.
  bool visit(const MatrixXc& partial, int next) {
    if ((partial - target).norm() <= tol) {
      found = path;
      return true;
    }
    for (int k = next; k < m.num_outcomes(); ++k) {
      path.push_back(k);
      if (visit(partial + m[k].matrix(), k + 1)) return true;
      path.pop_back();
    }
    return false;
  }
};

}  // namespace

std::optional<std::vector<int>> subset_sum_range_inclusion(const Povm& m, const HermitianMatrixd& target,
                                                           double tol) {
  if (target.dim() != m.dim()) throw InvalidInput("subset_sum_range_inclusion: dimension mismatch");
  if (m.num_outcomes() > kMaxSubsetSearchOutcomes)
    throw TooLarge("subset_sum_range_inclusion: more than " + std::to_string(kMaxSubsetSearchOutcomes) +
                   " outcomes");
  SubsetSearch s{m, target.matrix(), tol, {}, std::nullopt};
  s.visit(MatrixXc::Zero(m.dim(), m.dim()), 0);
  return s.found;
}

}  // namespace qcompat
