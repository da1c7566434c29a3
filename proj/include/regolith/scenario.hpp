#pragma once

#include "regolith/engine.hpp"

#include <optional>
#include <string>
#include <vector>

namespace regolith {

struct OutputSettings {
    int32_t frame_stride = 10; // export every this many steps (plus the final step)
    bool pgm = true;
    bool text = false;
    bool obj = false;
    bool particles_csv = false;
    std::optional<std::pair<double, double>> height_range; // quantization range; else dry run
};

struct Scenario {
    WorldConfig world;
    double t_end = 0.0;
    std::vector<CharacterSpec> characters;
    OutputSettings output;
};

// Plain sectioned "key = value" text; see the shipped demo scenario for the
// full grammar. Relative paths resolve against the scenario file directory.
// Preset material names resolve to the bundled parameter sets; validation
// warnings go to warnings_out when given.
Scenario load_scenario(const std::string& path, std::vector<std::string>* warnings_out = nullptr);

} // namespace regolith
