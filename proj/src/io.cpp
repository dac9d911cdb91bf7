#include "qcompat/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace qcompat::io {

namespace {

json num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double as_num(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw ParseError("expected a number, got \"" + s + "\"");
  }
  if (!j.is_number()) throw ParseError("expected a number, got " + j.dump());
  return j.get<double>();
}

const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw ParseError(std::string("expected an object holding \"") + key + "\"");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing field \"") + key + "\"");
  return *it;
}

double num_field(const json& j, const char* key) { return as_num(field(j, key)); }

template <typename T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field \"") + key + "\": " + e.what());
  }
}

json hermitian_list(const std::vector<HermitianMatrixd>& ms) {
  json out = json::array();
  for (const auto& m : ms) out.push_back(matrix_to_json(m.matrix()));
  return out;
}

std::vector<HermitianMatrixd> hermitian_list_from(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of matrices");
  std::vector<HermitianMatrixd> out;
  for (size_t k = 0; k < j.size(); ++k) {
    const auto loc = where + "[" + std::to_string(k) + "]";
    const MatrixXc m = matrix_from_json(j[k], loc);
    if (m.rows() != m.cols()) throw ParseError(loc + ": matrix is not square");
    out.emplace_back(m);
  }
  return out;
}

json num_list(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(num(x));
  return out;
}

std::vector<double> num_list_from(const json& j) {
  if (!j.is_array()) throw ParseError("expected an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) out.push_back(as_num(x));
  return out;
}

void write_value(std::string& out, const json& j, int indent, int depth);

void newline(std::string& out, int indent, int depth) {
  if (indent < 0) return;
  out += '\n';
  out.append(static_cast<size_t>(indent * depth), ' ');
}

// Arrays of scalars stay on one line so matrices remain readable.
bool flat(const json& j) {
  for (const auto& x : j)
    if (x.is_structured() && !(x.is_array() && x.size() == 2 && x[0].is_number() && x[1].is_number()))
      return false;
  return true;
}

void write_value(std::string& out, const json& j, int indent, int depth) {
  switch (j.type()) {
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += num(v).dump();
        break;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      break;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        break;
      }
      const bool inline_items = indent < 0 || flat(j);
      out += '[';
      bool first = true;
      for (const auto& x : j) {
        if (!first) out += inline_items ? ", " : ",";
        first = false;
        if (!inline_items) newline(out, indent, depth + 1);
        write_value(out, x, inline_items ? -1 : indent, depth + 1);
      }
      if (!inline_items) newline(out, indent, depth);
      out += ']';
      break;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        break;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(out, indent, depth + 1);
        out += json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        write_value(out, it.value(), indent, depth + 1);
      }
      newline(out, indent, depth);
      out += '}';
      break;
    }
    default:
      out += j.dump();
  }
}

json diagnostics_json(const SolverDiagnostics& d) {
  return {{"iterations", d.iterations},
          {"residual", num(d.residual)},
          {"min_eigenvalue", num(d.min_eigenvalue)},
          {"displacement", num(d.displacement)},
          {"monotonicity_violations", d.monotonicity_violations},
          {"face_reduced", d.face_reduced}};
}

SolverDiagnostics diagnostics_from(const json& j) {
  SolverDiagnostics d;
  d.iterations = get<int>(j, "iterations");
  d.residual = num_field(j, "residual");
  d.min_eigenvalue = num_field(j, "min_eigenvalue");
  d.displacement = num_field(j, "displacement");
  d.monotonicity_violations = get<int>(j, "monotonicity_violations");
  d.face_reduced = get<bool>(j, "face_reduced");
  return d;
}

Relation relation_from(const json& j, const char* key) {
  try {
    return relation_from_string(get<std::string>(j, key));
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(e.what());
  }
}

Verdict verdict_from(const json& j, const char* key) {
  try {
    return verdict_from_string(get<std::string>(j, key));
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(e.what());
  }
}

json interval_json(const lab::Interval& i) { return {num(i.lower), num(i.upper)}; }

lab::Interval interval_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ParseError("interval must be [lower, upper]");
  return {as_num(j[0]), as_num(j[1])};
}

json segment_point_json(const lab::SegmentPoint& p) {
  return {{"lambda", num(p.lambda)},
          {"jm", to_string(p.jm)},
          {"coex", to_string(p.coex)},
          {"jm_iterations", p.jm_iterations},
          {"coex_iterations", p.coex_iterations},
          {"jm_residual", num(p.jm_residual)}};
}

lab::SegmentPoint segment_point_from(const json& j) {
  lab::SegmentPoint p;
  p.lambda = num_field(j, "lambda");
  p.jm = verdict_from(j, "jm");
  p.coex = verdict_from(j, "coex");
  p.jm_iterations = get<int>(j, "jm_iterations");
  p.coex_iterations = get<int>(j, "coex_iterations");
  p.jm_residual = num_field(j, "jm_residual");
  return p;
}

json family_json(const lab::PropertyFamily& f) {
  return {{"name", f.name},
          {"trials", f.trials},
          {"passed", f.passed},
          {"failed", f.failed},
          {"indeterminate", f.indeterminate},
          {"failing_trials", f.failing_trials}};
}

lab::PropertyFamily family_from(const json& j) {
  lab::PropertyFamily f;
  f.name = get<std::string>(j, "name");
  f.trials = get<int>(j, "trials");
  f.passed = get<int>(j, "passed");
  f.failed = get<int>(j, "failed");
  f.indeterminate = get<int>(j, "indeterminate");
  f.failing_trials = get<std::vector<int>>(j, "failing_trials");
  return f;
}

std::string csv_num(double v) {
  const json j = num(v);
  return j.is_string() ? j.get<std::string>() : dump(j);
}

std::string fmt(double v, int digits = 10) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrices and POVM files

json matrix_to_json(const MatrixXc& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back({num(m(i, k).real()), num(m(i, k).imag())});
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXc matrix_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  MatrixXc m;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = j[static_cast<size_t>(i)];
    const auto loc = where + " row " + std::to_string(i);
    if (!row.is_array()) throw ParseError(loc + ": expected an array of entries");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      if (cols == 0) throw ParseError(loc + ": empty row");
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError(loc + ": has " + std::to_string(row.size()) + " entries, expected " + std::to_string(cols));
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      const auto& e = row[static_cast<size_t>(k)];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ParseError(loc + " entry " + std::to_string(k) + ": expected [re, im]");
      m(i, k) = {e[0].get<double>(), e[1].get<double>()};
    }
  }
  return m;
}

Povm parse_povm(const std::string& text, double tol) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("POVM document must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "dim" && it.key() != "effects") throw ParseError("unknown field \"" + it.key() + "\"");
  const auto& dim = field(j, "dim");
  if (!dim.is_number_integer() || dim.get<long>() < 1) throw ParseError("\"dim\" must be a positive integer");
  const auto d = static_cast<Eigen::Index>(dim.get<long>());
  const auto& effects = field(j, "effects");
  if (!effects.is_array() || effects.empty()) throw ParseError("\"effects\" must be a non-empty array");
  std::vector<MatrixXc> ms;
  for (size_t k = 0; k < effects.size(); ++k) {
    const auto where = "effect " + std::to_string(k);
    MatrixXc m = matrix_from_json(effects[k], where);
    if (m.rows() != m.cols())
      throw ParseError(where + ": matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                       ", not square");
    if (m.rows() != d)
      throw DimMismatch(where + ": dimension " + std::to_string(m.rows()) + " differs from dim " +
                        std::to_string(d));
    ms.push_back(std::move(m));
  }
  return validate_povm(ms, tol);
}

Povm read_povm_file(const std::string& path, double tol) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_povm(ss.str(), tol);
}

std::string write_povm(const Povm& p) {
  json effects = json::array();
  for (const auto& e : p.effects()) effects.push_back(matrix_to_json(e.matrix()));
  return dump({{"dim", p.dim()}, {"effects", effects}}) + "\n";
}

std::string dump(const json& j, int indent) {
  std::string out;
  write_value(out, j, indent, 0);
  return out;
}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed document: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Reports

json to_json(const CheckConfig& c) {
  const auto& s = c.solver;
  return {{"solver",
           {{"max_iters", s.max_iters},
            {"feas_tol", num(s.feas_tol)},
            {"stall_window", s.stall_window},
            {"stall_rel_tol", num(s.stall_rel_tol)},
            {"check_every", s.check_every},
            {"burn_in", s.burn_in},
            {"facial_reduction", s.facial_reduction},
            {"interior_shift", s.interior_shift},
            {"plateau_window", s.plateau_window}}},
          {"com_tol", num(c.com_tol)},
          {"subset_tol", num(c.subset_tol)},
          {"max_margins", c.max_margins},
          {"max_joint_outcomes", c.max_joint_outcomes}};
}

CheckConfig check_config_from_json(const json& j) {
  CheckConfig c;
  const auto& s = field(j, "solver");
  c.solver.max_iters = get<int>(s, "max_iters");
  c.solver.feas_tol = num_field(s, "feas_tol");
  c.solver.stall_window = get<int>(s, "stall_window");
  c.solver.stall_rel_tol = num_field(s, "stall_rel_tol");
  c.solver.check_every = get<int>(s, "check_every");
  c.solver.burn_in = get<int>(s, "burn_in");
  c.solver.facial_reduction = get<bool>(s, "facial_reduction");
  c.solver.interior_shift = get<bool>(s, "interior_shift");
  c.solver.plateau_window = get<int>(s, "plateau_window");
  c.com_tol = num_field(j, "com_tol");
  c.subset_tol = num_field(j, "subset_tol");
  c.max_margins = get<int>(j, "max_margins");
  c.max_joint_outcomes = get<long>(j, "max_joint_outcomes");
  return c;
}

json to_json(const CompatReport& r) {
  json norms = json::array();
  for (const auto& row : r.commutator_norms) norms.push_back(num_list(row));
  json witness = nullptr;
  if (r.witness)
    witness = {{"duals", hermitian_list(r.witness->duals)},
               {"cone_slack", num(r.witness->cone_slack)},
               {"objective", num(r.witness->objective)}};
  return {{"relation", to_string(r.relation)},
          {"verdict", to_string(r.verdict)},
          {"method", r.method},
          {"commutator_norms", norms},
          {"blocks", hermitian_list(r.blocks)},
          {"witness", witness},
          {"subset_certificates", r.subset_certificates},
          {"collection", r.collection},
          {"certificate_residual", num(r.certificate_residual)},
          {"feas_tol", num(r.feas_tol)},
          {"com_tol", num(r.com_tol)},
          {"max_iters", r.max_iters},
          {"diagnostics", diagnostics_json(r.diagnostics)},
          {"seconds", num(r.seconds)}};
}

CompatReport compat_report_from_json(const json& j) {
  CompatReport r;
  r.relation = relation_from(j, "relation");
  r.verdict = verdict_from(j, "verdict");
  r.method = get<std::string>(j, "method");
  const auto& norms = field(j, "commutator_norms");
  if (!norms.is_array()) throw ParseError("commutator_norms must be an array");
  for (const auto& row : norms) r.commutator_norms.push_back(num_list_from(row));
  r.blocks = hermitian_list_from(field(j, "blocks"), "blocks");
  const auto& w = field(j, "witness");
  if (!w.is_null()) {
    Witness wit;
    wit.duals = hermitian_list_from(field(w, "duals"), "witness duals");
    wit.cone_slack = num_field(w, "cone_slack");
    wit.objective = num_field(w, "objective");
    r.witness = std::move(wit);
  }
  r.subset_certificates = get<std::vector<std::vector<int>>>(j, "subset_certificates");
  r.collection = get<std::vector<std::vector<int>>>(j, "collection");
  r.certificate_residual = num_field(j, "certificate_residual");
  r.feas_tol = num_field(j, "feas_tol");
  r.com_tol = num_field(j, "com_tol");
  r.max_iters = get<int>(j, "max_iters");
  r.diagnostics = diagnostics_from(field(j, "diagnostics"));
  r.seconds = num_field(j, "seconds");
  return r;
}

json to_json(const RobustnessResult& r) {
  json steps = json::array();
  for (const auto& s : r.steps)
    steps.push_back({{"lambda", num(s.lambda)}, {"verdict", to_string(s.verdict)}, {"iterations", s.iterations}});
  return {{"relation", to_string(r.relation)},
          {"lambda_lower", num(r.lambda_lower)},
          {"lambda_upper", num(r.lambda_upper)},
          {"conservative", r.conservative},
          {"holds_at_one", r.holds_at_one},
          {"tol", num(r.tol)},
          {"steps", steps}};
}

RobustnessResult robustness_from_json(const json& j) {
  RobustnessResult r;
  r.relation = relation_from(j, "relation");
  r.lambda_lower = num_field(j, "lambda_lower");
  r.lambda_upper = num_field(j, "lambda_upper");
  r.conservative = get<bool>(j, "conservative");
  r.holds_at_one = get<bool>(j, "holds_at_one");
  r.tol = num_field(j, "tol");
  for (const auto& s : field(j, "steps"))
    r.steps.push_back({num_field(s, "lambda"), verdict_from(s, "verdict"), get<int>(s, "iterations")});
  return r;
}

json to_json(const HierarchyReport& r) {
  return {{"COM", to_json(r.com)}, {"ND", to_json(r.nd)}, {"JM", to_json(r.jm)}, {"COEX", to_json(r.coex)}};
}

HierarchyReport hierarchy_from_json(const json& j) {
  HierarchyReport r;
  r.com = compat_report_from_json(field(j, "COM"));
  r.nd = compat_report_from_json(field(j, "ND"));
  r.jm = compat_report_from_json(field(j, "JM"));
  r.coex = compat_report_from_json(field(j, "COEX"));
  return r;
}

json to_json(const lab::CounterexampleVerification& r) {
  return {{"passed", r.passed()},
          {"stage1", {{"passed", r.stage1}, {"subset_sums", r.subset_sums}}},
          {"stage2", {{"passed", r.stage2}, {"collection", to_json(r.collection)}}},
          {"stage3", {{"passed", r.stage3}, {"witness_verified", r.witness_verified}, {"joint", to_json(r.joint)}}},
          {"stage4",
           {{"passed", r.stage4},
            {"diagonal_a", num_list(r.diagonal_a)},
            {"overlaps", num_list(r.overlaps)},
            {"max_weight", num_list(r.max_weight)},
            {"b1_spectrum", num_list(r.b1_spectrum)},
            {"b1_deficit", num(r.b1_deficit)}}},
          {"seconds", num(r.seconds)}};
}

lab::CounterexampleVerification counterexample_from_json(const json& j) {
  lab::CounterexampleVerification r;
  const auto& s1 = field(j, "stage1");
  r.stage1 = get<bool>(s1, "passed");
  r.subset_sums = get<std::vector<std::vector<int>>>(s1, "subset_sums");
  const auto& s2 = field(j, "stage2");
  r.stage2 = get<bool>(s2, "passed");
  r.collection = compat_report_from_json(field(s2, "collection"));
  const auto& s3 = field(j, "stage3");
  r.stage3 = get<bool>(s3, "passed");
  r.witness_verified = get<bool>(s3, "witness_verified");
  r.joint = compat_report_from_json(field(s3, "joint"));
  const auto& s4 = field(j, "stage4");
  r.stage4 = get<bool>(s4, "passed");
  r.diagonal_a = num_list_from(field(s4, "diagonal_a"));
  r.overlaps = num_list_from(field(s4, "overlaps"));
  r.max_weight = num_list_from(field(s4, "max_weight"));
  r.b1_spectrum = num_list_from(field(s4, "b1_spectrum"));
  r.b1_deficit = num_field(s4, "b1_deficit");
  r.seconds = num_field(j, "seconds");
  return r;
}

json to_json(const std::vector<lab::PaddingCase>& r) {
  json cases = json::array();
  for (const auto& c : r)
    cases.push_back({{"n", c.n},
                     {"m", c.m},
                     {"coex", to_string(c.coex)},
                     {"jm", to_string(c.jm)},
                     {"witness_verified", c.witness_verified}});
  return {{"cases", cases}};
}

std::vector<lab::PaddingCase> padding_from_json(const json& j) {
  std::vector<lab::PaddingCase> out;
  for (const auto& c : field(j, "cases")) {
    lab::PaddingCase p;
    p.n = get<int>(c, "n");
    p.m = get<int>(c, "m");
    p.coex = verdict_from(c, "coex");
    p.jm = verdict_from(c, "jm");
    p.witness_verified = get<bool>(c, "witness_verified");
    out.push_back(p);
  }
  return out;
}

json to_json(const lab::SegmentReport& r) {
  json grid = json::array(), refinement = json::array();
  for (const auto& p : r.grid) grid.push_back(segment_point_json(p));
  for (const auto& p : r.refinement) refinement.push_back(segment_point_json(p));
  return {{"passed", r.passed()},
          {"steps", r.steps},
          {"grid", grid},
          {"jm_bracket", to_json(r.jm_bracket)},
          {"refinement", refinement},
          {"jm_holds_at_zero", r.jm_holds_at_zero},
          {"jm_fails_at_one", r.jm_fails_at_one},
          {"coex_everywhere", r.coex_everywhere},
          {"monotone", r.monotone},
          {"refinement_consistent", r.refinement_consistent},
          {"coex_minus_jm_fraction", num(r.coex_minus_jm_fraction)}};
}

lab::SegmentReport segment_from_json(const json& j) {
  lab::SegmentReport r;
  r.steps = get<int>(j, "steps");
  for (const auto& p : field(j, "grid")) r.grid.push_back(segment_point_from(p));
  r.jm_bracket = robustness_from_json(field(j, "jm_bracket"));
  for (const auto& p : field(j, "refinement")) r.refinement.push_back(segment_point_from(p));
  r.jm_holds_at_zero = get<bool>(j, "jm_holds_at_zero");
  r.jm_fails_at_one = get<bool>(j, "jm_fails_at_one");
  r.coex_everywhere = get<bool>(j, "coex_everywhere");
  r.monotone = get<bool>(j, "monotone");
  r.refinement_consistent = get<bool>(j, "refinement_consistent");
  r.coex_minus_jm_fraction = num_field(j, "coex_minus_jm_fraction");
  return r;
}

json to_json(const lab::SampleReport& r) {
  json records = json::array();
  for (const auto& t : r.records)
    records.push_back({{"trial", t.trial},
                       {"jm", to_string(t.jm)},
                       {"coex", to_string(t.coex)},
                       {"jm_iterations", t.jm_iterations},
                       {"coex_iterations", t.coex_iterations},
                       {"jm_residual", num(t.jm_residual)},
                       {"coex_residual", num(t.coex_residual)},
                       {"coex_checked", t.coex_checked}});
  return {{"n", r.n},
          {"m", r.m},
          {"d", r.d},
          {"trials", r.trials},
          {"seed", r.seed},
          {"jm_holds", r.jm_holds},
          {"coex_fails", r.coex_fails},
          {"coex_not_jm", r.coex_not_jm},
          {"indeterminate", r.indeterminate},
          {"hierarchy_violations", r.hierarchy_violations},
          {"jm_interval", interval_json(r.jm_interval)},
          {"non_coex_interval", interval_json(r.non_coex_interval)},
          {"coex_not_jm_interval", interval_json(r.coex_not_jm_interval)},
          {"records", records}};
}

lab::SampleReport sample_from_json(const json& j) {
  lab::SampleReport r;
  r.n = get<int>(j, "n");
  r.m = get<int>(j, "m");
  r.d = get<int>(j, "d");
  r.trials = get<int>(j, "trials");
  r.seed = get<std::uint64_t>(j, "seed");
  r.jm_holds = get<int>(j, "jm_holds");
  r.coex_fails = get<int>(j, "coex_fails");
  r.coex_not_jm = get<int>(j, "coex_not_jm");
  r.indeterminate = get<int>(j, "indeterminate");
  r.hierarchy_violations = get<int>(j, "hierarchy_violations");
  r.jm_interval = interval_from(field(j, "jm_interval"));
  r.non_coex_interval = interval_from(field(j, "non_coex_interval"));
  r.coex_not_jm_interval = interval_from(field(j, "coex_not_jm_interval"));
  for (const auto& t : field(j, "records")) {
    lab::SampleRecord rec;
    rec.trial = get<int>(t, "trial");
    rec.jm = verdict_from(t, "jm");
    rec.coex = verdict_from(t, "coex");
    rec.jm_iterations = get<int>(t, "jm_iterations");
    rec.coex_iterations = get<int>(t, "coex_iterations");
    rec.jm_residual = num_field(t, "jm_residual");
    rec.coex_residual = num_field(t, "coex_residual");
    rec.coex_checked = get<bool>(t, "coex_checked");
    r.records.push_back(rec);
  }
  return r;
}

json to_json(const lab::SuiteReport& r) {
  return {{"passed", r.passed()},
          {"seed", r.seed},
          {"binary_equivalence", family_json(r.binary_equivalence)},
          {"sufficient_ball", family_json(r.sufficient_ball)},
          {"hierarchy", family_json(r.hierarchy)}};
}

lab::SuiteReport suite_from_json(const json& j) {
  lab::SuiteReport r;
  r.seed = get<std::uint64_t>(j, "seed");
  r.binary_equivalence = family_from(field(j, "binary_equivalence"));
  r.sufficient_ball = family_from(field(j, "sufficient_ball"));
  r.hierarchy = family_from(field(j, "hierarchy"));
  return r;
}

// ---------------------------------------------------------------------------
// Human-readable output

std::string human(const CompatReport& r) {
  std::ostringstream os;
  os << to_string(r.relation) << ": " << to_string(r.verdict) << " (" << r.method << ")\n";
  if (!r.commutator_norms.empty()) {
    double worst = 0;
    for (const auto& row : r.commutator_norms)
      for (double v : row) worst = std::max(worst, v);
    os << "  largest commutator norm " << fmt(worst) << " (tol " << fmt(r.com_tol) << ")\n";
  }
  if (!r.blocks.empty())
    os << "  certificate: " << r.blocks.size() << " blocks, residual " << fmt(r.certificate_residual) << "\n";
  if (r.witness)
    os << "  witness: objective " << fmt(r.witness->objective) << ", cone slack " << fmt(r.witness->cone_slack)
       << "\n";
  for (const auto& s : r.subset_certificates) {
    os << "  subset sum {";
    for (size_t k = 0; k < s.size(); ++k) os << (k ? ", " : "") << s[k] + 1;
    os << "}\n";
  }
  if (r.relation != Relation::COM || r.diagnostics.iterations > 0)
    os << "  iterations " << r.diagnostics.iterations << " / " << r.max_iters << ", residual "
       << fmt(r.diagnostics.residual) << ", feas_tol " << fmt(r.feas_tol) << "\n";
  os << "  time " << fmt(r.seconds, 3) << " s\n";
  return os.str();
}

std::string human(const RobustnessResult& r) {
  std::ostringstream os;
  os << to_string(r.relation) << " robustness: lambda* in [" << fmt(r.lambda_lower) << ", " << fmt(r.lambda_upper)
     << "]";
  if (r.holds_at_one) os << " (holds without noise)";
  if (r.conservative) os << " (conservative: some steps were indeterminate)";
  os << "\n  " << r.steps.size() << " steps, tol " << fmt(r.tol) << "\n";
  return os.str();
}

std::string human(const HierarchyReport& r) {
  std::ostringstream os;
  os << "COM: " << to_string(r.com.verdict) << "\n";
  os << "ND: " << to_string(r.nd.verdict) << "\n";
  os << "JM: " << to_string(r.jm.verdict) << "\n";
  os << "COEX: " << to_string(r.coex.verdict) << "\n";
  return os.str();
}

std::string human(const lab::CounterexampleVerification& r) {
  auto mark = [](bool ok) { return ok ? "ok" : "FAILED"; };
  std::ostringstream os;
  os << "stage 1 (subset sums into M): " << mark(r.stage1) << "\n";
  for (const auto& s : r.subset_sums) {
    os << "  {";
    for (size_t k = 0; k < s.size(); ++k) os << (k ? ", " : "") << s[k] + 1;
    os << "}\n";
  }
  os << "stage 2 (binary margins jointly measurable): " << mark(r.stage2) << ", "
     << r.collection.collection.size() << " margins, " << r.collection.blocks.size() << " joint outcomes\n";
  os << "stage 3 (A, B not jointly measurable): " << mark(r.stage3);
  if (r.joint.witness)
    os << ", witness objective " << fmt(r.joint.witness->objective) << ", slack "
       << fmt(r.joint.witness->cone_slack);
  os << "\n";
  os << "stage 4 (rank-one argument): " << mark(r.stage4) << "\n";
  for (size_t i = 0; i < r.overlaps.size(); ++i)
    os << "  i=" << i + 1 << ": <i|A_i|i> = " << fmt(r.diagonal_a[i]) << ", |<i|psi>|^2 = " << fmt(r.overlaps[i])
       << ", max weight " << fmt(r.max_weight[i]) << "\n";
  os << "verdict: " << (r.passed() ? "all stages passed" : "FAILED") << " in " << fmt(r.seconds, 3) << " s\n";
  return os.str();
}

std::string human(const std::vector<lab::PaddingCase>& r) {
  std::ostringstream os;
  for (const auto& c : r)
    os << "(" << c.n << ", " << c.m << "): COEX " << to_string(c.coex) << ", JM " << to_string(c.jm)
       << (c.witness_verified ? " (witness verified)" : "") << "\n";
  return os.str();
}

std::string human(const lab::SegmentReport& r) {
  std::ostringstream os;
  os << "lambda        JM             COEX\n";
  for (const auto& p : r.grid)
    os << std::left << std::setw(14) << fmt(p.lambda, 6) << std::setw(15) << to_string(p.jm) << to_string(p.coex)
       << "\n";
  os << "JM threshold in [" << fmt(r.jm_bracket.lambda_lower) << ", " << fmt(r.jm_bracket.lambda_upper) << "]\n";
  os << "COEX minus JM fraction of the segment: " << fmt(r.coex_minus_jm_fraction, 6) << "\n";
  os << "checks: " << (r.passed() ? "passed" : "FAILED") << "\n";
  return os.str();
}

std::string human(const lab::SampleReport& r) {
  std::ostringstream os;
  auto line = [&](const char* what, int k, lab::Interval i) {
    os << what << k << "/" << r.trials << " = " << fmt(double(k) / r.trials, 4) << "  [" << fmt(i.lower, 4) << ", "
       << fmt(i.upper, 4) << "]\n";
  };
  os << "(n, m, d) = (" << r.n << ", " << r.m << ", " << r.d << "), seed " << r.seed << "\n";
  line("JM holds:        ", r.jm_holds, r.jm_interval);
  line("COEX fails:      ", r.coex_fails, r.non_coex_interval);
  line("COEX but not JM: ", r.coex_not_jm, r.coex_not_jm_interval);
  os << "indeterminate " << r.indeterminate << ", hierarchy violations " << r.hierarchy_violations << "\n";
  return os.str();
}

std::string human(const lab::SuiteReport& r) {
  std::ostringstream os;
  for (const auto* f : {&r.binary_equivalence, &r.sufficient_ball, &r.hierarchy})
    os << f->name << ": " << f->passed << " passed, " << f->failed << " failed, " << f->indeterminate
       << " indeterminate of " << f->trials << "\n";
  os << "suite " << (r.passed() ? "passed" : "FAILED") << " (seed " << r.seed << ")\n";
  return os.str();
}

std::string segment_csv(const lab::SegmentReport& r) {
  std::string out = "lambda,jm,coex,jm_iterations,coex_iterations,jm_residual\n";
  for (const auto& p : r.grid)
    out += csv_num((p.lambda)) + "," + to_string(p.jm) + "," + to_string(p.coex) + "," +
           std::to_string(p.jm_iterations) + "," + std::to_string(p.coex_iterations) + "," +
           csv_num((p.jm_residual)) + "\n";
  return out;
}

std::string sample_csv(const lab::SampleReport& r) {
  std::string out = "trial,jm,coex,jm_iterations,coex_iterations,jm_residual,coex_residual\n";
  for (const auto& t : r.records)
    out += std::to_string(t.trial) + "," + to_string(t.jm) + "," + (t.coex_checked ? to_string(t.coex) : "skipped") +
           "," + std::to_string(t.jm_iterations) + "," + std::to_string(t.coex_iterations) + "," +
           csv_num((t.jm_residual)) + "," + csv_num((t.coex_residual)) + "\n";
  return out;
}

}  // namespace qcompat::io
