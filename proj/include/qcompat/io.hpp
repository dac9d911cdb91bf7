#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "qcompat/compat.hpp"
#include "qcompat/lab.hpp"

namespace qcompat {

/// Malformed document: bad syntax, wrong field types, non-square matrices.
class ParseError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Well-formed matrices whose sizes disagree with the declared dimension.
class DimMismatch : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

using ValidationError = PovmValidationError;

namespace io {

using json = nlohmann::json;

/// Wire format: nested arrays, row-major, entries [re, im].
json matrix_to_json(const MatrixXc& m);
/// `where` names the location for diagnostics. Rows must be of equal length.
MatrixXc matrix_from_json(const json& j, const std::string& where);

/// POVM document: {"dim": d, "effects": [matrix, ...]}.
Povm parse_povm(const std::string& text, double tol = kDefaultPovmTol);
Povm read_povm_file(const std::string& path, double tol = kDefaultPovmTol);
std::string write_povm(const Povm& p);

/// Compact JSON with every double printed to 17 significant digits;
/// non-finite values become the strings "inf", "-inf" and "nan".
std::string dump(const json& j, int indent = 2);
json parse_document(const std::string& text);

json to_json(const CheckConfig& c);
json to_json(const CompatReport& r);
json to_json(const RobustnessResult& r);
json to_json(const HierarchyReport& r);
json to_json(const lab::CounterexampleVerification& r);
json to_json(const std::vector<lab::PaddingCase>& r);
json to_json(const lab::SegmentReport& r);
json to_json(const lab::SampleReport& r);
json to_json(const lab::SuiteReport& r);

CheckConfig check_config_from_json(const json& j);
CompatReport compat_report_from_json(const json& j);
RobustnessResult robustness_from_json(const json& j);
HierarchyReport hierarchy_from_json(const json& j);
lab::CounterexampleVerification counterexample_from_json(const json& j);
std::vector<lab::PaddingCase> padding_from_json(const json& j);
lab::SegmentReport segment_from_json(const json& j);
lab::SampleReport sample_from_json(const json& j);
lab::SuiteReport suite_from_json(const json& j);

std::string human(const CompatReport& r);
std::string human(const RobustnessResult& r);
std::string human(const HierarchyReport& r);
std::string human(const lab::CounterexampleVerification& r);
std::string human(const std::vector<lab::PaddingCase>& r);
std::string human(const lab::SegmentReport& r);
std::string human(const lab::SampleReport& r);
std::string human(const lab::SuiteReport& r);

/// One header line, then one row per grid point.
std::string segment_csv(const lab::SegmentReport& r);
/// One header line, then one row per trial.
std::string sample_csv(const lab::SampleReport& r);

}  // namespace io
}  // namespace qcompat
