#pragma once

#include "roughflow/flow.hpp"
#include "roughflow/io.hpp"

#include <map>
#include <string>
#include <vector>

namespace roughflow::scenarios {

/// Fully resolved problem instance: driver, fields, drift, initial points and
/// solver configuration, ready for the flow/derivative routines.
struct Scenario {
  std::string name;
  RoughDriver driver;
  std::vector<PolyVectorField> fields;
  PolyVectorField v0;
  std::vector<Vec> x0s;
  SolverConfig config;
  int n_params = 0;            // > 0: the first coordinates are frozen parameters
  bool expect_explosion = false;
  io::Json params;             // resolved scenario parameters, echoed in manifests
};

/// True when ref names a preset ("builtin:<name>").
bool is_builtin(const std::string& ref);

/// Preset catalog:
///   drift           constant scalar drift, zero driver; phi(x) = x + c T
///   compliant       dense smooth 2-d lift with bounded trig fields
///   linear          scalar linear field along a line path; phi(x) = x e^{vT}
///   commuting       two commuting linear 2-d fields on a smooth lift
///   counterexample  pure-area driver with (x sin y, x); explodes at t = 1/a
///   sensitivity     parameter-augmented bilinear field a x on a line path
std::vector<std::string> builtin_names();

/// Resolves "builtin:<name>" or a scenario config file
/// {driver, fields, v0, p, T, x0, config}, where driver/fields/v0 may be
/// file paths (relative to the config file), "builtin:" references, or inline
/// objects. Overrides are "key=value" strings: scenario parameters (a, T,
/// amp, segments, c, v, ...) are consumed first, everything else must be a
/// solver-config key.
Scenario make_scenario(const std::string& ref,
                       const std::vector<std::string>& overrides = {});

/// Builtin driver generators, also reachable from scenario files as
/// driver: "builtin:<name>" -- zero1, line1, smooth2, area2. Consumed knobs
/// are erased from `knobs`; every resolved value is echoed into `resolved`.
RoughDriver builtin_driver(const std::string& name,
                           std::map<std::string, double>& knobs,
                           io::Json& resolved);

/// Builtin field sets -- linear1, bounded2, commuting2, counterexample2,
/// param_linear2. Same knob contract as builtin_driver.
std::vector<PolyVectorField> builtin_fields(const std::string& name,
                                            std::map<std::string, double>& knobs,
                                            io::Json& resolved);

}  // namespace roughflow::scenarios
