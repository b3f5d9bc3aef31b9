#pragma once

#include <string>

#include "icsrange/plant/plant.hpp"

namespace icsrange::plant {

/// Desk-scale two-tank process: raw water tank T101 fed through MV101 and
/// drained by P101/P102 into the ultra-filtration tank T301, which P301 drains
/// towards reverse osmosis. P201 doses the T101->T301 stream.
PlantState default_plant();

/// Plant configuration, JSON text. Unknown keys are rejected.
PlantState parse_plant_config(const std::string& json_text);
PlantState load_plant_config(const std::string& path);
std::string dump_plant_config(const PlantState& state);

/// One line-delimited record: time and the ground truth of every sensor.
std::string snapshot_record(const PlantState& state);

}  // namespace icsrange::plant
