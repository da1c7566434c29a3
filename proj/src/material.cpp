#include "regolith/material.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace regolith {

std::vector<std::string> MaterialParams::validate() const {
    constexpr double half_pi = 1.5707963267948966;
    if (!(compression >= 0.0 && compression <= 1.0)) throw std::invalid_argument("compression must be in [0, 1]");
    if (!(roughness >= 0.0 && roughness <= 1.0)) throw std::invalid_argument("roughness must be in [0, 1]");
    for (double a : {theta_in, theta_out, theta_stop}) {
        if (!(a >= 0.0 && a <= half_pi)) throw std::invalid_argument("slope thresholds must be in [0, pi/2]");
    }
    if (max_erosion_iters < 1) throw std::invalid_argument("max_erosion_iters must be >= 1");
    std::vector<std::string> warnings;
    if (theta_stop < theta_out) {
        warnings.push_back("liquidity (theta_stop) below outside slope: erosion cannot settle below "
                           "theta_out, passes will stop only at the iteration cap or a fixed point");
    }
    return warnings;
}

bool is_material_preset(const std::string& name) {
    return name == "sand" || name == "mud" || name == "snow";
}

MaterialParams material_preset(const std::string& name) {
    MaterialParams p;
    if (name == "sand") {
        p.theta_in = 0.8;
        p.theta_out = 0.436;
        p.roughness = 0.2;
        p.theta_stop = 0.8;
        p.compression = 0.3;
    } else if (name == "mud") {
        p.theta_in = 1.57;
        p.theta_out = 1.1;
        p.roughness = 0.2;
        p.theta_stop = 1.1;
        p.compression = 0.41;
    } else if (name == "snow") {
        p.theta_in = 1.57;
        p.theta_out = 1.57;
        p.roughness = 0.2;
        p.theta_stop = 1.57;
        p.compression = 0.0;
    } else {
        throw std::invalid_argument("unknown material preset '" + name + "'");
    }
    return p;
}

MaterialParams load_material_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open material file");
    MaterialParams p;
    bool got_in = false, got_out = false, got_rough = false, got_stop = false, got_comp = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key, eq;
        if (!(ls >> key)) continue;
        double value = 0.0;
        if (!(ls >> eq >> value) || eq != "=") {
            std::ostringstream os;
            os << path << ":" << line_no << ": expected 'key = value'";
            throw std::runtime_error(os.str());
        }
        if (key == "inside_slope") {
            p.theta_in = value;
            got_in = true;
        } else if (key == "outside_slope") {
            p.theta_out = value;
            got_out = true;
        } else if (key == "roughness") {
            p.roughness = value;
            got_rough = true;
        } else if (key == "liquidity") {
            p.theta_stop = value;
            got_stop = true;
        } else if (key == "compression") {
            p.compression = value;
            got_comp = true;
        } else if (key == "max_erosion_iters") {
            p.max_erosion_iters = int(value);
        } else {
            std::ostringstream os;
            os << path << ":" << line_no << ": unknown material key '" << key << "'";
            throw std::runtime_error(os.str());
        }
    }
    if (!(got_in && got_out && got_rough && got_stop && got_comp)) {
        throw std::runtime_error(path + ": material file missing one of inside_slope, outside_slope, "
                                        "roughness, liquidity, compression");
    }
    p.validate();
    return p;
}

void save_material_file(const std::string& path, const MaterialParams& p) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out.precision(17);
    out << "inside_slope = " << p.theta_in << "\n";
    out << "outside_slope = " << p.theta_out << "\n";
    out << "roughness = " << p.roughness << "\n";
    out << "liquidity = " << p.theta_stop << "\n";
    out << "compression = " << p.compression << "\n";
    out << "max_erosion_iters = " << p.max_erosion_iters << "\n";
}

} // namespace regolith
