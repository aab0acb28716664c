#pragma once

#include "roughflow/flow.hpp"
#include "roughflow/poly_field.hpp"
#include "roughflow/rough_driver.hpp"
#include "roughflow/tensor_series.hpp"

#include "json.hpp"

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace roughflow::io {

/// All manifests and reports preserve key insertion order so repeated runs
/// produce byte-identical files.
using Json = nlohmann::ordered_json;

/// Malformed or inconsistent input; the message names the file and, for JSON
/// syntax errors, the line and column.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses a JSON file. Syntax errors are rethrown as ParseError with
/// "<path>:<line>:<column>: <reason>".
Json load_json_file(const std::string& path);

/// Pretty-prints with two-space indent and a trailing newline.
void write_json_file(const std::string& path, const Json& j);

// --- tensor series --------------------------------------------------------
// {width, depth, levels: [[..], ..]} with one array per level 1..depth in
// lexicographic word order (first letter most significant). The scalar part
// is 1 unless an explicit "scalar" key says otherwise.

Json series_to_json(const TruncatedTensorSeries& s);
TruncatedTensorSeries series_from_json(const Json& j);

// --- rough drivers ---------------------------------------------------------
// {width, p, times: [..], segments: [series, ..]} with one group-like series
// per adjacent grid cell.

Json driver_to_json(const RoughDriver& d);
RoughDriver driver_from_json(const Json& j);

// --- polynomial/trig fields ------------------------------------------------
// {dim, coords: [[term, ..], ..]} with one term list per output coordinate.
// term = {coeff, exps: [..], t_exp, trig: [{axis, fn, pow}, ..]}; "exps" are
// the coordinate powers, "t_exp" (default 0) the time power, and each trig
// entry multiplies by fn(x_axis)^pow with fn in {"sin", "cos"}.

Json field_to_json(const PolyVectorField& f);
PolyVectorField field_from_json(const Json& j);

/// Accepts a bare field object, a JSON array of them, or {fields: [..]}.
std::vector<PolyVectorField> fields_from_json(const Json& j);
Json fields_to_json(const std::vector<PolyVectorField>& fs);

// --- solver configuration --------------------------------------------------
// Flat object of overrides; unknown keys are rejected so typos surface as
// input errors instead of silently running defaults.

SolverConfig config_from_json(const Json& j, SolverConfig base = {});
Json config_to_json(const SolverConfig& cfg);

/// Applies one "key=value" override string on top of cfg.
SolverConfig apply_override(const SolverConfig& cfg, const std::string& kv);

// --- CSV -------------------------------------------------------------------

/// Shortest-of-17-significant-digits decimal form, '.' separator, locale
/// independent; parses back to the identical double.
std::string format_double(double v);

/// Comma-separated writer; numeric cells go through format_double.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);

  void header(const std::vector<std::string>& names);
  void row(const std::vector<double>& values);
  void raw_row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
};

}  // namespace roughflow::io
