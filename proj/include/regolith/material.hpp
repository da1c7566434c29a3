#pragma once

#include <string>
#include <vector>

namespace regolith {

// The five user-facing ground-material parameters plus the per-step erosion
// iteration cap. Angles are slopes in radians.
struct MaterialParams {
    double theta_in = 0.8;     // slope threshold next to contacting geometry
    double theta_out = 0.436;  // slope threshold away from contact
    double roughness = 0.2;    // fraction of the average height difference moved per pass
    double theta_stop = 0.8;   // pass-termination slope (liquidity)
    double compression = 0.3;  // fraction of displaced material pushed outward
    int max_erosion_iters = 200;

    // Hard invariant violations throw; questionable-but-legal settings (a
    // stop threshold below theta_out can never be reached by eroding) are
    // returned as warnings.
    std::vector<std::string> validate() const;
};

// Bundled materials: sand, mud, snow.
bool is_material_preset(const std::string& name);
MaterialParams material_preset(const std::string& name);

// Plain "key = value" material file; keys inside_slope, outside_slope,
// roughness, liquidity, compression, max_erosion_iters. '#' comments.
MaterialParams load_material_file(const std::string& path);
void save_material_file(const std::string& path, const MaterialParams& params);

} // namespace regolith
