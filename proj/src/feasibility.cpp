#include "qcompat/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qcompat {
namespace {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return Eigen::MatrixXd::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = 1e-12 * std::max(1.0, s.size() > 0 ? s(0) : 0.0) * std::max(a.rows(), a.cols());
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double blocks_distance(const Blocks& a, const Blocks& b) {
  double s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return std::sqrt(s);
}

void hermitize(MatrixXc& m) { m = ((m + m.adjoint()) * 0.5).eval(); }

std::vector<HermitianMatrixd> to_hermitian(const Blocks& x) {
  std::vector<HermitianMatrixd> out;
  out.reserve(x.size());
  for (const auto& b : x) out.emplace_back(b, 1e-6);
  return out;
}

double min_block_eigenvalue(const Blocks& x) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& b : x) {
    if (b.rows() == 0) continue;
    if (!b.allFinite()) return -std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(b, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues()(0));
  }
  return lo;
}

}  // namespace

const char* to_string(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::Feasible: return "Feasible";
    case FeasibilityStatus::Infeasible: return "Infeasible";
    case FeasibilityStatus::Indeterminate: return "Indeterminate";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// AffinePsdProblem

AffinePsdProblem AffinePsdProblem::marginal(Eigen::MatrixXd coeff, std::vector<HermitianMatrixd> targets,
                                            double trace_bound) {
  if (coeff.rows() != static_cast<Eigen::Index>(targets.size()))
    throw InvalidInput("marginal problem: coefficient rows " + std::to_string(coeff.rows()) +
                       " != number of targets " + std::to_string(targets.size()));
  if (targets.empty() || coeff.cols() < 1) throw InvalidInput("marginal problem: empty problem");
  const Eigen::Index d = targets.front().dim();
  for (const auto& t : targets)
    if (t.dim() != d) throw InvalidInput("marginal problem: targets must share one dimension");
  if (!coeff.allFinite()) throw InvalidInput("marginal problem: non-finite coefficients");

  AffinePsdProblem p;
  p.marginal_ = true;
  p.block_dims_.assign(coeff.cols(), d);
  p.targets_ = std::move(targets);
  p.trace_bound_ = trace_bound;
  p.coeff_ = std::move(coeff);
  p.coeff_pinv_ = pseudo_inverse(p.coeff_);

  // Targets must lie in the range of K, coordinatewise.
  double scale = 1;
  for (const auto& t : p.targets_) scale = std::max(scale, t.norm());
  Blocks t(p.targets_.size());
  for (size_t c = 0; c < t.size(); ++c) t[c] = p.targets_[c].matrix();
  const Eigen::MatrixXd kp = p.coeff_ * p.coeff_pinv_;
  for (size_t c = 0; c < t.size(); ++c) {
    MatrixXc r = t[c];
    for (size_t c2 = 0; c2 < t.size(); ++c2) r -= kp(c, c2) * t[c2];
    if (r.norm() > 1e-8 * scale)
      throw InconsistentProblem("marginal problem: targets violate a linear dependency of the constraints "
                                "(residual " + std::to_string(r.norm()) + " at constraint " +
                                std::to_string(c) + ")");
  }
  return p;
}

AffinePsdProblem AffinePsdProblem::general(std::vector<Eigen::Index> block_dims, std::vector<LinearTerm> terms,
                                           std::vector<HermitianMatrixd> targets, double trace_bound) {
  if (block_dims.empty() || targets.empty()) throw InvalidInput("general problem: empty problem");
  for (auto d : block_dims)
    if (d < 1) throw InvalidInput("general problem: block dimensions must be positive");
  for (const auto& term : terms) {
    if (term.constraint < 0 || term.constraint >= static_cast<int>(targets.size()) || term.block < 0 ||
        term.block >= static_cast<int>(block_dims.size()))
      throw InvalidInput("general problem: term index out of range");
    const auto dt = targets[term.constraint].dim();
    const auto db = block_dims[term.block];
    if (term.map.rows() != dt * dt || term.map.cols() != db * db)
      throw InvalidInput("general problem: term map has wrong shape");
  }
  AffinePsdProblem p;
  p.marginal_ = false;
  p.block_dims_ = std::move(block_dims);
  p.terms_ = std::move(terms);
  p.targets_ = std::move(targets);
  p.trace_bound_ = trace_bound;
  p.build_general_operator();

  const Eigen::VectorXd r = p.stacked_ * (p.stacked_pinv_ * p.target_vec_) - p.target_vec_;
  if (r.norm() > 1e-8 * std::max(1.0, p.target_vec_.norm()))
    throw InconsistentProblem("general problem: targets outside the range of the constraint map (residual " +
                              std::to_string(r.norm()) + ")");
  return p;
}

void AffinePsdProblem::build_general_operator() {
  row_offset_.assign(targets_.size() + 1, 0);
  for (size_t c = 0; c < targets_.size(); ++c)
    row_offset_[c + 1] = row_offset_[c] + targets_[c].dim() * targets_[c].dim();
  col_offset_.assign(block_dims_.size() + 1, 0);
  for (size_t b = 0; b < block_dims_.size(); ++b)
    col_offset_[b + 1] = col_offset_[b] + block_dims_[b] * block_dims_[b];
  stacked_ = Eigen::MatrixXd::Zero(row_offset_.back(), col_offset_.back());
  for (const auto& term : terms_)
    stacked_.block(row_offset_[term.constraint], col_offset_[term.block], term.map.rows(), term.map.cols()) +=
        term.map;
  stacked_pinv_ = pseudo_inverse(stacked_);
  target_vec_.resize(row_offset_.back());
  for (size_t c = 0; c < targets_.size(); ++c)
    target_vec_.segment(row_offset_[c], row_offset_[c + 1] - row_offset_[c]) = hvec(targets_[c].matrix());
}

void AffinePsdProblem::set_transport_shape(int rows, int cols) {
  if (!marginal_ || rows * cols != num_blocks() || rows + cols != num_constraints())
    throw InvalidInput("transport shape does not match the problem layout");
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      for (int c = 0; c < rows + cols; ++c) {
        const double expect = (c == i || c == rows + j) ? 1.0 : 0.0;
        if (coeff_(c, i * cols + j) != expect)
          throw InvalidInput("transport shape: coefficients are not a row/column incidence matrix");
      }
  transport_ = std::make_pair(rows, cols);
}

Blocks AffinePsdProblem::apply(const Blocks& x) const {
  Blocks out(targets_.size());
  if (marginal_) {
    const auto d = block_dims_.front();
    for (size_t c = 0; c < targets_.size(); ++c) {
      out[c] = MatrixXc::Zero(d, d);
      for (size_t b = 0; b < x.size(); ++b)
        if (coeff_(c, b) != 0.0) out[c] += coeff_(c, b) * x[b];
    }
    return out;
  }
  Eigen::VectorXd xv(col_offset_.back());
  for (size_t b = 0; b < x.size(); ++b) xv.segment(col_offset_[b], col_offset_[b + 1] - col_offset_[b]) = hvec(x[b]);
  const Eigen::VectorXd yv = stacked_ * xv;
  for (size_t c = 0; c < targets_.size(); ++c)
    out[c] = hunvec(yv.segment(row_offset_[c], row_offset_[c + 1] - row_offset_[c]), targets_[c].dim());
  return out;
}

Blocks AffinePsdProblem::adjoint(const Blocks& duals) const {
  Blocks out(block_dims_.size());
  if (marginal_) {
    const auto d = block_dims_.front();
    for (size_t b = 0; b < block_dims_.size(); ++b) {
      out[b] = MatrixXc::Zero(d, d);
      for (size_t c = 0; c < duals.size(); ++c)
        if (coeff_(c, b) != 0.0) out[b] += coeff_(c, b) * duals[c];
    }
    return out;
  }
  Eigen::VectorXd yv(row_offset_.back());
  for (size_t c = 0; c < duals.size(); ++c)
    yv.segment(row_offset_[c], row_offset_[c + 1] - row_offset_[c]) = hvec(duals[c]);
  const Eigen::VectorXd sv = stacked_.transpose() * yv;
  for (size_t b = 0; b < block_dims_.size(); ++b)
    out[b] = hunvec(sv.segment(col_offset_[b], col_offset_[b + 1] - col_offset_[b]), block_dims_[b]);
  return out;
}

void AffinePsdProblem::project_affine_in_place(Blocks& x) const {
  if (x.size() != block_dims_.size()) throw InvalidInput("project_affine: wrong number of blocks");
  for (size_t b = 0; b < x.size(); ++b)
    if (x[b].rows() != block_dims_[b] || x[b].cols() != block_dims_[b])
      throw InvalidInput("project_affine: block " + std::to_string(b) + " has wrong dimension");
  if (marginal_) {
    if (transport_) {
      const auto [rows, cols] = *transport_;
      std::vector<HermitianMatrixd> rt(targets_.begin(), targets_.begin() + rows);
      std::vector<HermitianMatrixd> ct(targets_.begin() + rows, targets_.end());
      project_transport(x, rows, cols, rt, ct);
      return;
    }
    Blocks r = apply(x);
    for (size_t c = 0; c < r.size(); ++c) r[c] -= targets_[c].matrix();
    for (size_t b = 0; b < x.size(); ++b)
      for (size_t c = 0; c < r.size(); ++c)
        if (coeff_pinv_(b, c) != 0.0) x[b] -= coeff_pinv_(b, c) * r[c];
    return;
  }
  Eigen::VectorXd xv(col_offset_.back());
  for (size_t b = 0; b < x.size(); ++b) xv.segment(col_offset_[b], col_offset_[b + 1] - col_offset_[b]) = hvec(x[b]);
  xv -= stacked_pinv_ * (stacked_ * xv - target_vec_);
  for (size_t b = 0; b < x.size(); ++b)
    x[b] = hunvec(xv.segment(col_offset_[b], col_offset_[b + 1] - col_offset_[b]), block_dims_[b]);
}

Blocks AffinePsdProblem::adjoint_least_squares(const Blocks& z) const {
  Blocks y(targets_.size());
  if (marginal_) {
    const auto d = block_dims_.front();
    for (size_t c = 0; c < y.size(); ++c) {
      y[c] = MatrixXc::Zero(d, d);
      for (size_t b = 0; b < z.size(); ++b)
        if (coeff_pinv_(b, c) != 0.0) y[c] += coeff_pinv_(b, c) * z[b];
    }
    return y;
  }
  Eigen::VectorXd zv(col_offset_.back());
  for (size_t b = 0; b < z.size(); ++b) zv.segment(col_offset_[b], col_offset_[b + 1] - col_offset_[b]) = hvec(z[b]);
  const Eigen::VectorXd yv = stacked_pinv_.transpose() * zv;
  for (size_t c = 0; c < y.size(); ++c)
    y[c] = hunvec(yv.segment(row_offset_[c], row_offset_[c + 1] - row_offset_[c]), targets_[c].dim());
  return y;
}

double AffinePsdProblem::residual(const Blocks& x) const {
  const Blocks v = apply(x);
  double r = 0;
  for (size_t c = 0; c < v.size(); ++c) {
    const double e = (v[c] - targets_[c].matrix()).norm();
    if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
    r = std::max(r, e);
  }
  return r;
}

bool AffinePsdProblem::structurally_equal(const AffinePsdProblem& o, double tol) const {
  if (marginal_ != o.marginal_ || block_dims_ != o.block_dims_ || targets_.size() != o.targets_.size()) return false;
  for (size_t c = 0; c < targets_.size(); ++c)
    if (targets_[c].dim() != o.targets_[c].dim() || frobenius_distance(targets_[c], o.targets_[c]) > tol)
      return false;
  if (std::abs(trace_bound_ - o.trace_bound_) > tol) return false;
  if (marginal_) return (coeff_ - o.coeff_).cwiseAbs().maxCoeff() <= tol;
  return stacked_.rows() == o.stacked_.rows() && stacked_.cols() == o.stacked_.cols() &&
         (stacked_ - o.stacked_).cwiseAbs().maxCoeff() <= tol;
}

std::vector<HermitianMatrixd> project_affine(const std::vector<HermitianMatrixd>& blocks,
                                             const AffinePsdProblem& problem) {
  Blocks x;
  x.reserve(blocks.size());
  for (const auto& b : blocks) x.push_back(b.matrix());
  problem.project_affine_in_place(x);
  for (auto& b : x) hermitize(b);
  return to_hermitian(x);
}

void project_transport(Blocks& x, int rows, int cols, const std::vector<HermitianMatrixd>& row_targets,
                       const std::vector<HermitianMatrixd>& col_targets) {
  // x'_ij = x_ij + (a_i - r_i)/cols + (b_j - c_j)/rows - (s - t)/(rows cols), where
  // s is the mean of the two target totals, so inconsistent totals are split evenly.
  const auto d = x.front().rows();
  std::vector<MatrixXc> row_gap(rows), col_gap(cols);
  MatrixXc total_x = MatrixXc::Zero(d, d), total_a = MatrixXc::Zero(d, d), total_b = MatrixXc::Zero(d, d);
  for (int i = 0; i < rows; ++i) {
    row_gap[i] = row_targets[i].matrix();
    total_a += row_targets[i].matrix();
    for (int j = 0; j < cols; ++j) row_gap[i] -= x[i * cols + j];
  }
  for (int j = 0; j < cols; ++j) {
    col_gap[j] = col_targets[j].matrix();
    total_b += col_targets[j].matrix();
    for (int i = 0; i < rows; ++i) col_gap[j] -= x[i * cols + j];
  }
  for (const auto& b : x) total_x += b;
  const MatrixXc total_gap = ((total_a + total_b) * 0.5 - total_x) / double(rows * cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      x[i * cols + j] += row_gap[i] / double(cols) + col_gap[j] / double(rows) - total_gap;
}

// ---------------------------------------------------------------------------
// Witness

Witness make_witness(std::vector<HermitianMatrixd> duals, const AffinePsdProblem& problem) {
  if (static_cast<int>(duals.size()) != problem.num_constraints())
    throw InvalidInput("witness: wrong number of dual matrices");
  Blocks y;
  y.reserve(duals.size());
  double objective = 0;
  for (size_t c = 0; c < duals.size(); ++c) {
    if (duals[c].dim() != problem.targets()[c].dim()) throw InvalidInput("witness: dual dimension mismatch");
    y.push_back(duals[c].matrix());
    objective += frobenius_inner(duals[c], problem.targets()[c]);
  }
  const Blocks s = problem.adjoint(y);
  const double lo = min_block_eigenvalue(s);
  Witness w;
  w.duals = std::move(duals);
  w.cone_slack = std::max(0.0, -lo);
  w.objective = objective;
  return w;
}

bool verify_witness(const Witness& w, const AffinePsdProblem& problem) {
  if (static_cast<int>(w.duals.size()) != problem.num_constraints()) return false;
  const Witness fresh = make_witness(w.duals, problem);
  const double margin = fresh.cone_slack * problem.num_blocks() * problem.trace_bound();
  return fresh.objective < -margin - 1e-9;
}

// ---------------------------------------------------------------------------
// Solver

double clip_to_psd(MatrixXc& block) { return clip_above(block, 0.0); }

double clip_above(MatrixXc& block, double floor) {
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(block, Eigen::ComputeEigenvectors);
  const double lo = es.eigenvalues()(0);
  if (lo >= floor) return lo;
  const Eigen::VectorXd clipped = es.eigenvalues().cwiseMax(floor);
  block = es.eigenvectors() * clipped.cast<std::complex<double>>().asDiagonal() * es.eigenvectors().adjoint();
  hermitize(block);
  return lo;
}

namespace {

// Dual direction whose adjoint is close to the identity on every block. Adding
// a multiple of it to a near-witness removes its cone slack at a cost of
// <U, T> per unit instead of the cruder num_blocks * trace_bound.
struct InteriorDirection {
  Blocks u;
  double floor = 0;  // min eigenvalue of adjoint(u)
};

std::optional<InteriorDirection> interior_direction(const AffinePsdProblem& problem) {
  Blocks id;
  for (auto d : problem.block_dims()) id.push_back(MatrixXc::Identity(d, d));
  InteriorDirection dir;
  dir.u = problem.adjoint_least_squares(id);
  for (auto& m : dir.u) hermitize(m);
  dir.floor = min_block_eigenvalue(problem.adjoint(dir.u));
  if (!(dir.floor > 0.5)) return std::nullopt;
  return dir;
}

std::optional<Witness> normalized_witness(Blocks y, const AffinePsdProblem& problem) {
  double top = 0;
  for (auto& m : y) {
    hermitize(m);
    top = std::max(top, m.norm());
  }
  if (!(top > 0) || !std::isfinite(top)) return std::nullopt;
  std::vector<HermitianMatrixd> duals;
  duals.reserve(y.size());
  for (auto& m : y) duals.emplace_back(MatrixXc(m / top), 1e-6);
  Witness w = make_witness(std::move(duals), problem);
  if (!verify_witness(w, problem)) return std::nullopt;
  return w;
}

std::optional<Witness> witness_from_displacement(const Blocks& z, const AffinePsdProblem& problem,
                                                 const std::optional<InteriorDirection>& dir) {
  Blocks y = problem.adjoint_least_squares(z);
  for (auto& m : y) m = -m;
  if (dir) {
    const double lo = min_block_eigenvalue(problem.adjoint(y));
    if (std::isfinite(lo) && lo < 0) {
      Blocks shifted = y;
      const double t = -lo / dir->floor * (1 + 1e-9);
      for (size_t c = 0; c < y.size(); ++c) shifted[c] += t * dir->u[c];
      if (auto w = normalized_witness(std::move(shifted), problem)) return w;
    }
  }
  return normalized_witness(std::move(y), problem);
}

// Dykstra's alternating projections between the affine set and the PSD cone.
// The cone is first replaced by {X >= shift * 1} for a decreasing sequence of
// shifts: when the problem has some slack this reaches a point of the original
// feasible set far sooner than the unshifted iteration, whose convergence near
// the boundary is slow. A stage ends once its displacement stops shrinking;
// the last stage uses the unshifted cone and runs to the end of the budget.
FeasibilityOutcome dykstra(const AffinePsdProblem& problem, const SolverConfig& cfg) {
  const int v = problem.num_blocks();
  FeasibilityOutcome out;
  auto& diag = out.diagnostics;

  Blocks x(v), y(v), p(v);
  for (int b = 0; b < v; ++b) {
    const auto d = problem.block_dims()[b];
    x[b] = MatrixXc::Zero(d, d);
  }
  problem.project_affine_in_place(x);

  auto finish_feasible = [&](Blocks& sol, int it) {
    for (auto& m : sol) hermitize(m);
    diag.iterations = it;
    diag.residual = problem.residual(sol);
    diag.min_eigenvalue = min_block_eigenvalue(sol);
    out.status = FeasibilityStatus::Feasible;
    out.blocks = to_hermitian(sol);
  };

  // Starting point may already be feasible.
  if (min_block_eigenvalue(x) >= -cfg.feas_tol && problem.residual(x) <= cfg.feas_tol) {
    finish_feasible(x, 0);
    return out;
  }

  const auto dir = interior_direction(problem);
  Eigen::Index widest = 1;
  for (auto d : problem.block_dims()) widest = std::max(widest, d);
  const double unit = problem.trace_bound() / double(widest);
  std::vector<double> shifts;
  if (cfg.interior_shift) shifts = {1e-3 * unit, 1e-4 * unit, 1e-5 * unit};
  shifts.push_back(0.0);

  size_t stage = 0;
  int stage_start = 0;
  double plateau_ref = std::numeric_limits<double>::infinity();
  double stall_ref = std::numeric_limits<double>::infinity();
  double prev_step = std::numeric_limits<double>::infinity();
  auto reset_stage = [&](int it) {
    for (int b = 0; b < v; ++b) p[b] = MatrixXc::Zero(x[b].rows(), x[b].cols());
    stage_start = it;
    plateau_ref = stall_ref = prev_step = std::numeric_limits<double>::infinity();
  };
  reset_stage(0);

  Blocks x_next(v);
  int it = 0;
  while (it < cfg.max_iters) {
    ++it;
    const double shift = shifts[stage];
    for (int b = 0; b < v; ++b) {
      y[b] = x[b] + p[b];
      clip_above(y[b], shift);
      p[b] += x[b] - y[b];
    }
    if (problem.residual(y) <= cfg.feas_tol) {
      diag.displacement = blocks_distance(x, y);
      finish_feasible(y, it);
      return out;
    }
    x_next = y;
    problem.project_affine_in_place(x_next);
    const double step = blocks_distance(x_next, x);
    if (it - stage_start > cfg.burn_in && step > prev_step + 1e-10) ++diag.monotonicity_violations;
    prev_step = step;
    std::swap(x, x_next);

    if (it % cfg.check_every == 0 && min_block_eigenvalue(x) >= -cfg.feas_tol &&
        problem.residual(x) <= cfg.feas_tol) {
      diag.displacement = blocks_distance(x, y);
      Blocks sol = x;
      finish_feasible(sol, it);
      return out;
    }
    if ((it - stage_start) % cfg.stall_window != 0) continue;

    const double disp = blocks_distance(x, y);
    diag.displacement = disp;
    if (disp > 10 * cfg.feas_tol) {
      Blocks z(v);
      for (int b = 0; b < v; ++b) z[b] = x[b] - y[b];
      if (auto w = witness_from_displacement(z, problem, dir)) {
        diag.iterations = it;
        diag.residual = problem.residual(y);
        diag.min_eigenvalue = min_block_eigenvalue(x);
        out.status = FeasibilityStatus::Infeasible;
        out.witness = std::move(w);
        return out;
      }
    }
    if (shift > 0) {
      const int per_check = std::max(1, cfg.plateau_window / cfg.stall_window);
      if ((it - stage_start) % (per_check * cfg.stall_window) == 0) {
        if (disp > 0.99 * plateau_ref) {
          ++stage;
          reset_stage(it);
        } else {
          plateau_ref = disp;
        }
      }
    } else {
      // Displacement has settled at a positive value but no witness verifies.
      if (disp > 10 * cfg.feas_tol && std::abs(stall_ref - disp) <= cfg.stall_rel_tol * disp) break;
      stall_ref = disp;
    }
  }
  if (it == cfg.max_iters) {
    Blocks z(v);
    for (int b = 0; b < v; ++b) z[b] = x[b] - y[b];
    if (auto w = witness_from_displacement(z, problem, dir)) {
      diag.iterations = it;
      diag.residual = problem.residual(y);
      diag.min_eigenvalue = min_block_eigenvalue(x);
      diag.displacement = blocks_distance(x, y);
      out.status = FeasibilityStatus::Infeasible;
      out.witness = std::move(w);
      return out;
    }
  }
  diag.iterations = it;
  diag.residual = problem.residual(y);
  diag.min_eigenvalue = min_block_eigenvalue(x);
  diag.displacement = blocks_distance(x, y);
  out.status = FeasibilityStatus::Indeterminate;
  return out;
}

// For marginal problems with nonnegative coefficients and PSD targets, every
// feasible block satisfies K(c,b) X_b <= T_c, so its range lies inside the
// intersection of the ranges of those targets. Returns per-block isometries
// onto that intersection, or nullopt when no block is restricted.
std::optional<std::vector<MatrixXc>> range_restrictions(const AffinePsdProblem& problem) {
  if (!problem.is_marginal()) return std::nullopt;
  const auto& k = problem.coeff();
  if (k.minCoeff() < 0) return std::nullopt;
  const auto d = problem.block_dims().front();
  std::vector<MatrixXc> kernel_proj;
  for (const auto& t : problem.targets()) {
    const auto eig = herm_eig(t);
    const double cut = 1e-10 * std::max(1.0, t.norm());
    if (eig.eigenvalues(0) < -cut) return std::nullopt;
    MatrixXc q = MatrixXc::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      if (eig.eigenvalues(i) <= cut) q += eig.eigenvectors.col(i) * eig.eigenvectors.col(i).adjoint();
    kernel_proj.push_back(q);
  }
  bool restricted = false;
  std::vector<MatrixXc> iso(problem.num_blocks());
  for (int b = 0; b < problem.num_blocks(); ++b) {
    MatrixXc sum = MatrixXc::Zero(d, d);
    for (int c = 0; c < problem.num_constraints(); ++c)
      if (k(c, b) > 0) sum += kernel_proj[c];
    Eigen::SelfAdjointEigenSolver<MatrixXc> es(sum, Eigen::ComputeEigenvectors);
    Eigen::Index r = 0;
    while (r < d && es.eigenvalues()(r) < 1e-8) ++r;
    iso[b] = es.eigenvectors().leftCols(r);
    if (r < d) restricted = true;
  }
  if (!restricted) return std::nullopt;
  return iso;
}

Eigen::MatrixXd conjugation_map(const MatrixXc& iso, double scale) {
  const auto r = iso.cols();
  const auto d = iso.rows();
  Eigen::MatrixXd m(d * d, r * r);
  for (Eigen::Index k = 0; k < r * r; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(r * r);
    e(k) = 1;
    const MatrixXc z = hunvec(e, r);
    m.col(k) = hvec(MatrixXc(scale * iso * z * iso.adjoint()));
  }
  return m;
}

std::optional<FeasibilityOutcome> solve_on_face(const AffinePsdProblem& problem, const SolverConfig& cfg) {
  const auto iso = range_restrictions(problem);
  if (!iso) return std::nullopt;
  std::vector<Eigen::Index> dims;
  std::vector<int> kept;
  for (int b = 0; b < problem.num_blocks(); ++b)
    if ((*iso)[b].cols() > 0) {
      kept.push_back(b);
      dims.push_back((*iso)[b].cols());
    }
  if (kept.empty()) return std::nullopt;
  std::vector<LinearTerm> terms;
  for (int c = 0; c < problem.num_constraints(); ++c)
    for (size_t kb = 0; kb < kept.size(); ++kb) {
      const double coef = problem.coeff()(c, kept[kb]);
      if (coef != 0.0)
        terms.push_back({c, static_cast<int>(kb), conjugation_map((*iso)[kept[kb]], coef)});
    }
  std::optional<AffinePsdProblem> reduced;
  try {
    reduced = AffinePsdProblem::general(dims, std::move(terms), problem.targets(), problem.trace_bound());
  } catch (const InconsistentProblem&) {
    return std::nullopt;
  }
  FeasibilityOutcome r = dykstra(*reduced, cfg);
  if (r.status != FeasibilityStatus::Feasible) {
    FeasibilityOutcome out;
    out.status = r.status;
    out.diagnostics = r.diagnostics;
    out.diagnostics.face_reduced = true;
    return out;
  }

  const auto d = problem.block_dims().front();
  Blocks lifted(problem.num_blocks(), MatrixXc::Zero(d, d));
  for (size_t kb = 0; kb < kept.size(); ++kb) {
    const auto& v = (*iso)[kept[kb]];
    lifted[kept[kb]] = v * r.blocks[kb].matrix() * v.adjoint();
    hermitize(lifted[kept[kb]]);
  }
  const double res = problem.residual(lifted);
  const double lo = min_block_eigenvalue(lifted);
  if (res > cfg.feas_tol || lo < -cfg.feas_tol) return std::nullopt;
  FeasibilityOutcome out;
  out.status = FeasibilityStatus::Feasible;
  out.blocks = to_hermitian(lifted);
  out.diagnostics = r.diagnostics;
  out.diagnostics.residual = res;
  out.diagnostics.min_eigenvalue = lo;
  out.diagnostics.face_reduced = true;
  return out;
}

}  // namespace

FeasibilityOutcome solve(const AffinePsdProblem& problem, const SolverConfig& config) {
  if (config.max_iters < 1 || config.feas_tol <= 0 || config.stall_window < 1 || config.check_every < 1 ||
      config.plateau_window < 1)
    throw InvalidInput("solver config: iteration counts and tolerances must be positive");
  if (config.facial_reduction) {
    if (auto r = solve_on_face(problem, config)) {
      if (r->status == FeasibilityStatus::Feasible || r->status == FeasibilityStatus::Indeterminate) return *r;
      // The face problem is infeasible, hence so is the original; a witness
      // has to be found for the original problem itself.
    }
  }
  return dykstra(problem, config);
}

}  // namespace qcompat
