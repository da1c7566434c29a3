#include "regolith/scenario.hpp"

#include "regolith/heightmap_io.hpp"
#include "regolith/material.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace regolith {

namespace {

struct Section {
    std::string kind;              // e.g. "grid", "character"
    std::string label;             // e.g. the character name
    int line = 0;
    std::vector<std::pair<std::string, std::string>> entries;

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : entries) {
            if (k == key) return &v;
        }
        return nullptr;
    }
};

[[noreturn]] void fail(const std::string& path, int line, const std::string& why) {
    std::ostringstream os;
    os << path << ":" << line << ": " << why;
    throw std::runtime_error(os.str());
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

std::vector<Section> parse_sections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open scenario file");
    std::vector<Section> sections;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail(path, line_no, "unterminated section header");
            std::istringstream hs(t.substr(1, t.size() - 2));
            Section s;
            s.line = line_no;
            hs >> s.kind;
            std::getline(hs, s.label);
            s.label = trim(s.label);
            sections.push_back(std::move(s));
            continue;
        }
        if (sections.empty()) fail(path, line_no, "entry before any [section]");
        const size_t eq = t.find('=');
        if (eq == std::string::npos) fail(path, line_no, "expected 'key = value'");
        sections.back().entries.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return sections;
}

double to_double(const std::string& path, const Section& s, const std::string& key,
                 const std::string& v) {
    try {
        size_t used = 0;
        const double d = std::stod(v, &used);
        if (trim(v.substr(used)).empty()) return d;
    } catch (const std::exception&) {
    }
    fail(path, s.line, "value of '" + key + "' is not a number: '" + v + "'");
}

int64_t to_int(const std::string& path, const Section& s, const std::string& key,
               const std::string& v) {
    try {
        size_t used = 0;
        const int64_t d = std::stoll(v, &used);
        if (trim(v.substr(used)).empty()) return d;
    } catch (const std::exception&) {
    }
    fail(path, s.line, "value of '" + key + "' is not an integer: '" + v + "'");
}

bool to_bool(const std::string& path, const Section& s, const std::string& key,
             const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(path, s.line, "value of '" + key + "' is not a boolean: '" + v + "'");
}

} // namespace

Scenario load_scenario(const std::string& path, std::vector<std::string>* warnings_out) {
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return (fp.is_absolute() ? fp : base / fp).string();
    };

    Scenario scenario;
    WorldConfig& world = scenario.world;
    bool have_grid = false, have_time = false, have_material = false;
    std::string init_type = "flat";
    double init_height = 0.0;
    NoiseParams noise;
    std::string import_path;
    int32_t next_body_id = 0;

    for (const Section& s : parse_sections(path)) {
        if (s.kind == "grid") {
            have_grid = true;
            for (const auto& [k, v] : s.entries) {
                if (k == "cell_size") world.grid.cell_size = to_double(path, s, k, v);
                else if (k == "rows") world.grid.rows = int32_t(to_int(path, s, k, v));
                else if (k == "cols") world.grid.cols = int32_t(to_int(path, s, k, v));
                else if (k == "origin") {
                    std::istringstream vs(v);
                    if (!(vs >> world.grid.origin_x >> world.grid.origin_z)) {
                        fail(path, s.line, "origin needs two numbers");
                    }
                } else if (k == "depth_margin") world.grid.depth_margin = to_double(path, s, k, v);
                else fail(path, s.line, "unknown grid key '" + k + "'");
            }
        } else if (s.kind == "init") {
            for (const auto& [k, v] : s.entries) {
                if (k == "type") init_type = v;
                else if (k == "height") init_height = to_double(path, s, k, v);
                else if (k == "amplitude") noise.amplitude = to_double(path, s, k, v);
                else if (k == "lattice_spacing") noise.lattice_spacing = to_double(path, s, k, v);
                else if (k == "seed") noise.seed = uint64_t(to_int(path, s, k, v));
                else if (k == "path") import_path = resolve(v);
                else fail(path, s.line, "unknown init key '" + k + "'");
            }
        } else if (s.kind == "material") {
            have_material = true;
            bool from_preset = false;
            for (const auto& [k, v] : s.entries) {
                if (k == "preset") {
                    if (!is_material_preset(v)) fail(path, s.line, "unknown material preset '" + v + "'");
                    world.material = material_preset(v);
                    from_preset = true;
                } else if (k == "file") {
                    world.material = load_material_file(resolve(v));
                    from_preset = true;
                } else if (k == "inside_slope") world.material.theta_in = to_double(path, s, k, v);
                else if (k == "outside_slope") world.material.theta_out = to_double(path, s, k, v);
                else if (k == "roughness") world.material.roughness = to_double(path, s, k, v);
                else if (k == "liquidity") world.material.theta_stop = to_double(path, s, k, v);
                else if (k == "compression") world.material.compression = to_double(path, s, k, v);
                else if (k == "max_erosion_iters") world.material.max_erosion_iters = int(to_int(path, s, k, v));
                else fail(path, s.line, "unknown material key '" + k + "'");
            }
            (void)from_preset;
        } else if (s.kind == "time") {
            have_time = true;
            double t_start = 0.0, t_end = 0.0, dt = world.dt;
            for (const auto& [k, v] : s.entries) {
                if (k == "start") t_start = to_double(path, s, k, v);
                else if (k == "end") t_end = to_double(path, s, k, v);
                else if (k == "dt") dt = to_double(path, s, k, v);
                else fail(path, s.line, "unknown time key '" + k + "'");
            }
            if (!(dt > 0.0)) fail(path, s.line, "dt must be > 0");
            if (!(t_end > t_start)) fail(path, s.line, "time range is empty");
            world.t_start = t_start;
            world.dt = dt;
            scenario.t_end = t_end;
        } else if (s.kind == "particles") {
            for (const auto& [k, v] : s.entries) {
                if (k == "enabled") world.particles_enabled = to_bool(path, s, k, v);
                else if (k == "adhesion") world.particles.adhesion = to_double(path, s, k, v);
                else if (k == "particle_volume") world.particles.particle_volume = to_double(path, s, k, v);
                else if (k == "half_life") world.particles.half_life = to_double(path, s, k, v);
                else if (k == "min_accel") world.particles.min_accel = to_double(path, s, k, v);
                else if (k == "gamma") world.particles.gamma = to_double(path, s, k, v);
                else if (k == "velocity_jitter") world.particles.velocity_jitter = to_double(path, s, k, v);
                else if (k == "gravity") {
                    std::istringstream vs(v);
                    if (!(vs >> world.particles.gravity.x >> world.particles.gravity.y >>
                          world.particles.gravity.z)) {
                        fail(path, s.line, "gravity needs three numbers");
                    }
                } else fail(path, s.line, "unknown particles key '" + k + "'");
            }
        } else if (s.kind == "output") {
            for (const auto& [k, v] : s.entries) {
                if (k == "frame_stride") scenario.output.frame_stride = int32_t(to_int(path, s, k, v));
                else if (k == "pgm") scenario.output.pgm = to_bool(path, s, k, v);
                else if (k == "text") scenario.output.text = to_bool(path, s, k, v);
                else if (k == "obj") scenario.output.obj = to_bool(path, s, k, v);
                else if (k == "particles") scenario.output.particles_csv = to_bool(path, s, k, v);
                else if (k == "height_range") {
                    double lo = 0.0, hi = 0.0;
                    std::istringstream vs(v);
                    if (!(vs >> lo >> hi) || hi < lo) fail(path, s.line, "height_range needs 'min max'");
                    scenario.output.height_range = {lo, hi};
                } else fail(path, s.line, "unknown output key '" + k + "'");
            }
        } else if (s.kind == "sim") {
            for (const auto& [k, v] : s.entries) {
                if (k == "seed") world.seed = uint64_t(to_int(path, s, k, v));
                else if (k == "margin_cells") world.margin_cells = int32_t(to_int(path, s, k, v));
                else fail(path, s.line, "unknown sim key '" + k + "'");
            }
        } else if (s.kind == "character") {
            CharacterSpec chr;
            chr.character_id = int32_t(scenario.characters.size());
            chr.name = s.label.empty() ? ("character" + std::to_string(chr.character_id)) : s.label;
            for (const auto& [k, v] : s.entries) {
                if (k != "body") fail(path, s.line, "unknown character key '" + k + "'");
                std::istringstream vs(v);
                std::string mesh_path, traj_path;
                if (!(vs >> mesh_path >> traj_path)) {
                    fail(path, s.line, "body needs 'mesh.obj trajectory.txt [trajectory body id]'");
                }
                int64_t select_id = -1;
                vs >> select_id;

                BodySpec body;
                body.body_id = next_body_id++;
                body.mesh = std::make_shared<TriangleMesh>(load_mesh(resolve(mesh_path)));
                auto trajectories = load_trajectories(resolve(traj_path));
                if (select_id >= 0) {
                    const auto it = trajectories.find(int32_t(select_id));
                    if (it == trajectories.end()) {
                        fail(path, s.line, "trajectory file has no body id " + std::to_string(select_id));
                    }
                    body.trajectory = std::make_shared<Trajectory>(it->second);
                } else {
                    if (trajectories.size() != 1) {
                        fail(path, s.line, "trajectory file holds several bodies; select one by id");
                    }
                    body.trajectory = std::make_shared<Trajectory>(trajectories.begin()->second);
                }
                chr.bodies.push_back(std::move(body));
            }
            if (chr.bodies.empty()) fail(path, s.line, "character without bodies");
            scenario.characters.push_back(std::move(chr));
        } else {
            fail(path, s.line, "unknown section '" + s.kind + "'");
        }
    }

    if (!have_grid) throw std::runtime_error(path + ": missing [grid] section");
    if (!have_time) throw std::runtime_error(path + ": missing [time], need start/end/dt");
    if (!have_material) throw std::runtime_error(path + ": missing [material] section");
    if (!world.grid.valid()) throw std::runtime_error(path + ": invalid grid configuration");
    if (scenario.output.frame_stride < 1) throw std::runtime_error(path + ": frame_stride must be >= 1");

    if (init_type == "flat") {
        world.init = TerrainInitializer::flat(init_height);
    } else if (init_type == "noise") {
        world.init = TerrainInitializer::noise(noise);
    } else if (init_type == "import") {
        if (import_path.empty()) throw std::runtime_error(path + ": import init needs a path");
        const HeightField f = load_heightmap_any(import_path);
        if (f.cell_size > 0.0 && std::abs(f.cell_size - world.grid.cell_size) > 1e-12) {
            throw std::runtime_error(path + ": imported heightmap cell size differs from the grid");
        }
        if (f.rows != world.grid.rows || f.cols != world.grid.cols) {
            throw std::runtime_error(path + ": imported heightmap shape differs from the grid extent");
        }
        world.init = TerrainInitializer::imported(f.rows, f.cols, f.heights);
    } else {
        throw std::runtime_error(path + ": unknown init type '" + init_type + "'");
    }

    world.steps = int32_t(std::ceil((scenario.t_end - world.t_start) / world.dt - 1e-9));
    if (world.steps < 1) throw std::runtime_error(path + ": time range shorter than one step");
    world.particles.validate();
    const auto warnings = world.material.validate();
    if (warnings_out) {
        for (const auto& w : warnings) warnings_out->push_back(w);
        for (const CharacterSpec& chr : scenario.characters) {
            for (const BodySpec& body : chr.bodies) {
                if (!body.trajectory->covers(world.t_start) ||
                    !body.trajectory->covers(scenario.t_end)) {
                    warnings_out->push_back("trajectory of body " + std::to_string(body.body_id) +
                                            " does not cover the full time range; poses clamp");
                }
            }
        }
    }
    return scenario;
}

} // namespace regolith
