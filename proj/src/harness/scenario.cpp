// SPDX-License-Identifier: Apache-2.0
#include "harness/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace isac::harness {

namespace {

using nlohmann::json;

constexpr double kDeg = M_PI / 180.0;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::invalid_argument(path + ": " + what);
}

void check_known_keys(const json& obj, const std::string& path,
                      const std::set<std::string>& known, LoadReport* report) {
    if (!report) return;
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!known.count(key))
            report->warnings.push_back("unknown field '" + path + key + "' ignored");
    }
}

double get_num(const json& obj, const std::string& path, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) fail(path + key, "expected a number");
    return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer()) fail(path + key, "expected an integer");
    return obj[key].get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) fail(path + key, "expected a boolean");
    return obj[key].get<bool>();
}

Eigen::Vector3d get_vec3(const json& obj, const std::string& path, const char* key,
                         const Eigen::Vector3d& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& a = obj[key];
    if (!a.is_array() || a.size() != 3) fail(path + key, "expected an array of 3 numbers");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

GridAxis parse_axis(const json& obj, const std::string& path, const char* key,
                    const GridAxis& fallback, double unit, LoadReport* report) {
    if (!obj.contains(key)) return fallback;
    const auto& a = obj[key];
    const std::string p = path + key + ".";
    check_known_keys(a, p, {"start", "stop", "step"}, report);
    GridAxis axis = fallback;
    axis.start = get_num(a, p, "start", fallback.start / unit) * unit;
    axis.stop = get_num(a, p, "stop", fallback.stop / unit) * unit;
    axis.step = get_num(a, p, "step", fallback.step / unit) * unit;
    if (!(axis.step > 0.0) || axis.stop < axis.start) fail(p, "bad axis range");
    return axis;
}

// Default user ring: 30 m from the transmitter at 45 degrees elevation from
// boresight, distinct azimuths, mild misalignment per user.
UserUca default_user(int k) {
    UserUca u;
    u.radius = 0.5;
    const double az = (120.0 + 75.0 * k) * kDeg;
    const double colat = 45.0 * kDeg;
    const double ring = 30.0;
    u.center = {ring * std::sin(colat) * std::cos(az), ring * std::sin(colat) * std::sin(az),
                ring * std::cos(colat)};
    u.yaw = (k % 2 == 0 ? 1.0 : -1.0) * 1.5 * kDeg;
    u.pitch = (k % 2 == 0 ? -1.0 : 1.0) * 1.0 * kDeg;
    u.offset = {0.05 * (k + 1), -0.03 * (k + 1), 0.02};
    return u;
}

ScatterScene default_scene() {
    ScatterScene scene;
    scene.points = {{39.0, 10.0 * kDeg, 50.0 * kDeg, 1.0},
                    {25.0, 30.0 * kDeg, 38.0 * kDeg, 1.0},
                    {18.0, 55.0 * kDeg, 16.0 * kDeg, 1.0}};
    scene.v = 3.0;
    scene.jammer_index = 0;
    scene.n_j = 1;
    return scene;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text, LoadReport* report) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario JSON parse error: ") + e.what());
    }
    if (!root.is_object()) throw std::invalid_argument("scenario: top level must be an object");

    Scenario sc;
    sc.scene = default_scene();

    check_known_keys(root, "",
                     {"experiment", "seed", "system", "geometry", "scene", "users", "noise_var",
                      "gamma_s_db", "jnr_db", "emusic", "hopping", "ao"},
                     report);

    if (root.contains("experiment")) {
        if (!root["experiment"].is_string()) fail("experiment", "expected a string");
        sc.experiment = root["experiment"].get<std::string>();
    }
    if (root.contains("seed")) {
        if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
            fail("seed", "expected an unsigned integer");
        sc.seed = root["seed"].get<std::uint64_t>();
    }
    sc.noise_var = get_num(root, "", "noise_var", sc.noise_var);
    if (!(sc.noise_var > 0.0)) fail("noise_var", "must be > 0");
    sc.sensing.noise_var = sc.noise_var;
    sc.sensing.gamma_s_db = get_num(root, "", "gamma_s_db", sc.sensing.gamma_s_db);
    sc.jnr_db = get_num(root, "", "jnr_db", sc.jnr_db);

    if (root.contains("system")) {
        const auto& s = root["system"];
        const std::string p = "system.";
        check_known_keys(s, p, {"n_t", "n_f", "n_f_prime", "delta_f_hz", "f_0_hz", "t_cp_s", "beta"},
                         report);
        sc.cfg.n_t = get_int(s, p, "n_t", sc.cfg.n_t);
        sc.cfg.n_f = get_int(s, p, "n_f", sc.cfg.n_f);
        sc.cfg.n_f_prime = get_int(s, p, "n_f_prime", std::max(sc.cfg.n_f, sc.cfg.n_f_prime));
        sc.cfg.delta_f = get_num(s, p, "delta_f_hz", sc.cfg.delta_f);
        sc.cfg.f_0 = get_num(s, p, "f_0_hz", sc.cfg.f_0);
        sc.cfg.t_cp = get_num(s, p, "t_cp_s", sc.cfg.t_cp);
        sc.cfg.beta = get_num(s, p, "beta", sc.cfg.beta);
    }
    if (sc.cfg.n_f_prime < sc.cfg.n_f) sc.cfg.n_f_prime = sc.cfg.n_f;
    try {
        sc.cfg.validate();
    } catch (const std::invalid_argument& e) {
        fail("system", e.what());
    }

    int user_count = 2;
    if (root.contains("users")) {
        const auto& u = root["users"];
        const std::string p = "users.";
        check_known_keys(u, p, {"count", "mode_counts"}, report);
        user_count = get_int(u, p, "count", 2);
        if (u.contains("mode_counts")) {
            if (!u["mode_counts"].is_array()) fail(p + "mode_counts", "expected an array");
            sc.mode_counts.clear();
            for (const auto& v : u["mode_counts"]) sc.mode_counts.push_back(v.get<int>());
        }
    }
    if (user_count < 1) fail("users.count", "must be >= 1");
    if (static_cast<int>(sc.mode_counts.size()) != user_count) {
        if (root.contains("users") && root["users"].contains("mode_counts"))
            fail("users.mode_counts", "length must equal users.count");
        // split the non-sensing modes roughly evenly
        sc.mode_counts.assign(static_cast<std::size_t>(user_count),
                              (sc.cfg.n_t - 1) / user_count);
    }
    int total_modes = 1;
    for (int n : sc.mode_counts) {
        if (n < 1) fail("users.mode_counts", "every user needs at least one mode");
        total_modes += n;
    }
    if (total_modes > sc.cfg.n_t) fail("users.mode_counts", "mode sets exceed n_t - 1");

    if (root.contains("geometry")) {
        const auto& g = root["geometry"];
        const std::string p = "geometry.";
        check_known_keys(g, p, {"r_t_m", "r_r_m", "users"}, report);
        sc.geom.r_t = get_num(g, p, "r_t_m", sc.geom.r_t);
        sc.geom.r_r = get_num(g, p, "r_r_m", sc.geom.r_r);
        if (g.contains("users")) {
            if (!g["users"].is_array()) fail(p + "users", "expected an array");
            int k = 0;
            for (const auto& ju : g["users"]) {
                const std::string up = p + "users[" + std::to_string(k) + "].";
                check_known_keys(ju, up,
                                 {"radius_m", "center_m", "yaw_deg", "pitch_deg", "offset_m"},
                                 report);
                UserUca u = default_user(k);
                u.radius = get_num(ju, up, "radius_m", u.radius);
                u.center = get_vec3(ju, up, "center_m", u.center);
                u.yaw = get_num(ju, up, "yaw_deg", u.yaw / kDeg) * kDeg;
                u.pitch = get_num(ju, up, "pitch_deg", u.pitch / kDeg) * kDeg;
                u.offset = get_vec3(ju, up, "offset_m", u.offset);
                sc.geom.users.push_back(u);
                ++k;
            }
        }
    }
    while (static_cast<int>(sc.geom.users.size()) < user_count)
        sc.geom.users.push_back(default_user(static_cast<int>(sc.geom.users.size())));
    if (static_cast<int>(sc.geom.users.size()) > user_count)
        fail("geometry.users", "more user arrays than users.count");
    try {
        sc.geom.validate();
    } catch (const std::invalid_argument& e) {
        fail("geometry", e.what());
    }

    if (root.contains("scene")) {
        const auto& s = root["scene"];
        const std::string p = "scene.";
        check_known_keys(s, p, {"points", "v_mps", "jammer_index", "n_j", "jammer_array_radius_m"},
                         report);
        if (s.contains("points")) {
            if (!s["points"].is_array() || s["points"].empty())
                fail(p + "points", "expected a non-empty array");
            sc.scene.points.clear();
            int g = 0;
            for (const auto& jp : s["points"]) {
                const std::string pp = p + "points[" + std::to_string(g) + "].";
                check_known_keys(jp, pp, {"range_m", "azimuth_deg", "elevation_deg", "rcs"},
                                 report);
                ScatterPoint pt;
                pt.range = get_num(jp, pp, "range_m", 0.0);
                pt.azimuth = get_num(jp, pp, "azimuth_deg", 0.0) * kDeg;
                pt.elevation = get_num(jp, pp, "elevation_deg", 0.0) * kDeg;
                pt.rcs = get_num(jp, pp, "rcs", 1.0);
                sc.scene.points.push_back(pt);
                ++g;
            }
        }
        sc.scene.v = get_num(s, p, "v_mps", sc.scene.v);
        sc.scene.jammer_index = get_int(s, p, "jammer_index", sc.scene.jammer_index);
        sc.scene.n_j = get_int(s, p, "n_j", sc.scene.n_j);
        sc.scene.jammer_array_radius = get_num(s, p, "jammer_array_radius_m",
                                               sc.scene.jammer_array_radius);
    }
    try {
        sc.scene.validate(sc.geom, sc.cfg.n_t);
    } catch (const std::invalid_argument& e) {
        fail("scene", e.what());
    }

    if (root.contains("emusic")) {
        const auto& e = root["emusic"];
        const std::string p = "emusic.";
        check_known_keys(e, p,
                         {"rho", "nu", "g_hat", "conventional", "n_sweeps", "max_points",
                          "rel_height", "min_separation_cells", "angle_gate_deg", "range_gate_m",
                          "min_beam_dominance", "theta_deg", "phi_deg", "range_m", "v_mps",
                          "n_slow", "t_slow_s", "velocity_draws"},
                         report);
        sc.sensing.rho = get_num(e, p, "rho", sc.sensing.rho);
        sc.sensing.nu = get_num(e, p, "nu", sc.sensing.nu);
        sc.sensing.g_hat = get_int(e, p, "g_hat", sc.sensing.g_hat);
        sc.sensing.conventional = get_bool(e, p, "conventional", sc.sensing.conventional);
        sc.sensing.n_sweeps = get_int(e, p, "n_sweeps", sc.sensing.n_sweeps);
        sc.sensing.max_points = get_int(e, p, "max_points", sc.sensing.max_points);
        sc.sensing.rel_height = get_num(e, p, "rel_height", sc.sensing.rel_height);
        sc.sensing.min_separation_cells =
            get_int(e, p, "min_separation_cells", sc.sensing.min_separation_cells);
        sc.sensing.angle_gate = get_num(e, p, "angle_gate_deg", sc.sensing.angle_gate / kDeg) * kDeg;
        sc.sensing.range_gate = get_num(e, p, "range_gate_m", sc.sensing.range_gate);
        sc.sensing.min_beam_dominance =
            get_num(e, p, "min_beam_dominance", sc.sensing.min_beam_dominance);
        sc.sensing.theta_axis = parse_axis(e, p, "theta_deg", sc.sensing.theta_axis, kDeg, report);
        sc.sensing.phi_axis = parse_axis(e, p, "phi_deg", sc.sensing.phi_axis, kDeg, report);
        sc.sensing.range_axis = parse_axis(e, p, "range_m", sc.sensing.range_axis, 1.0, report);
        sc.sensing.v_axis = parse_axis(e, p, "v_mps", sc.sensing.v_axis, 1.0, report);
        sc.sensing.n_slow = get_int(e, p, "n_slow", sc.sensing.n_slow);
        sc.sensing.t_slow = get_num(e, p, "t_slow_s", sc.sensing.t_slow);
        sc.sensing.velocity_draws = get_int(e, p, "velocity_draws", sc.sensing.velocity_draws);
        if (sc.sensing.n_sweeps < 1) fail(p + "n_sweeps", "must be >= 1");
        if (!(sc.sensing.rho > 0.0) || sc.sensing.rho > 1.0) fail(p + "rho", "must be in (0, 1]");
        if (!(sc.sensing.nu > 0.0)) fail(p + "nu", "must be > 0");
    }

    if (root.contains("hopping")) {
        const auto& h = root["hopping"];
        const std::string p = "hopping.";
        check_known_keys(h, p, {"key", "index_bits", "slot"}, report);
        if (h.contains("key")) {
            if (h["key"].is_string())
                sc.hop_key = std::stoull(h["key"].get<std::string>(), nullptr, 16);
            else if (h["key"].is_number_unsigned() || h["key"].is_number_integer())
                sc.hop_key = h["key"].get<std::uint64_t>();
            else
                fail(p + "key", "expected hex string or integer");
        }
        if (h.contains("index_bits")) {
            if (!h["index_bits"].is_string()) fail(p + "index_bits", "expected a hex string");
            sc.index_bits = h["index_bits"].get<std::string>();
        }
        sc.ao_slot = get_int(h, p, "slot", sc.ao_slot);
        if (sc.ao_slot < 1 || sc.ao_slot > sc.cfg.n_t) fail(p + "slot", "slot out of range");
    }

    if (root.contains("ao")) {
        const auto& a = root["ao"];
        const std::string p = "ao.";
        check_known_keys(a, p,
                         {"total_power", "comm_budget_scale", "tol", "max_iterations"}, report);
        sc.total_power = get_num(a, p, "total_power", sc.total_power);
        sc.comm_budget_scale = get_num(a, p, "comm_budget_scale", sc.comm_budget_scale);
        sc.ao_tol = get_num(a, p, "tol", sc.ao_tol);
        sc.ao_max_iterations = get_int(a, p, "max_iterations", sc.ao_max_iterations);
        if (!(sc.comm_budget_scale > 0.0)) fail(p + "comm_budget_scale", "must be > 0");
    }

    return sc;
}

Scenario load_scenario(const std::string& path, LoadReport* report) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("scenario file not found: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), report);
}

ScenarioDerived derive(const Scenario& sc) {
    ScenarioDerived d;
    d.sweep_modes = sensing_sweep_modes(sc.cfg.n_t);
    const auto jam_elems = jammer_element_positions(
        scatter_position(sc.scene.points[static_cast<std::size_t>(sc.scene.jammer_index)]),
        sc.scene.n_j, sc.scene.jammer_array_radius);
    d.channels = build_channel_set(sc.cfg, sc.geom, sc.scene, d.sweep_modes, jam_elems);
    d.gamma_s_linear = std::pow(10.0, sc.sensing.gamma_s_db / 10.0);

    const MatrixXd p_sens =
        sensing_power_sizing(d.channels.h_s, d.gamma_s_linear, sc.noise_var);
    d.sensing_power_q.resize(sc.cfg.n_f);
    for (int q = 0; q < sc.cfg.n_f; ++q) d.sensing_power_q(q) = p_sens(q, sc.ao_slot - 1);

    d.total_power = sc.total_power > 0.0
                        ? sc.total_power
                        : (1.0 + sc.comm_budget_scale) * d.sensing_power_q.sum();
    d.power_floor =
        (d.total_power - d.sensing_power_q.sum()) / (sc.cfg.n_t * sc.cfg.n_t);

    const double jnr = std::pow(10.0, sc.jnr_db / 10.0);
    d.jam_power = jnr * sc.cfg.n_t * sc.noise_var / d.channels.h_jam[0][0].squaredNorm();
    return d;
}

}  // namespace isac::harness
