#pragma once

#include <string>

#include <json.hpp>

#include "bbmlab/energy.hpp"
#include "bbmlab/functions.hpp"
#include "bbmlab/kernels.hpp"
#include "bbmlab/weights.hpp"

namespace bbmlab {

using json = nlohmann::json;

/// Loads a config file; JSON and a flat TOML subset (sections, key = value,
/// strings, numbers, booleans, scalar arrays, # comments) are accepted.
json load_config_file(const std::string& path);
json parse_toml_subset(const std::string& text);

/// {type: fractional|ramp_indicator|dominated_indicator|zero|table|expr}
KernelFamily kernel_from_spec(const json& spec);

/// {type: one|product|expr}
WeightFamily weight_from_spec(const json& spec, int dim);

/// {dim, lo[], hi[], h} or {dim, support_radius, margin, h} (box snapped to
/// a whole number of cells).
Grid grid_from_spec(const json& spec);

/// "hat" | "gaussian(0.5)" | {type/spec, shift[], scale} | {csv: path}
ClosedForm function_from_spec(const json& spec, int dim);
GridFunction grid_function_from_spec(const json& spec, const Grid& g);

DoubleLimitSchedule schedule_from_spec(const json& spec);

EnergyOptions energy_options_from_config(const json& cfg);

}  // namespace bbmlab
