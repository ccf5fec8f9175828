#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "driftpath/errors.hpp"
#include "driftpath/geo.hpp"
#include "driftpath/grid.hpp"
#include "driftpath/pathing.hpp"
#include "driftpath/report.hpp"

namespace driftpath {

// Choke points cut by default: two Panama cells and two Gibraltar cells.
inline std::vector<GeoPoint> default_barriers() {
    return {make_geo_point(-79.7, 9.07), make_geo_point(-80.73, 8.66),
            make_geo_point(-5.6, 36.0), make_geo_point(-5.61, 35.88)};
}

struct RunConfig {
    std::string data_path;
    GridKind grid_kind = GridKind::hexdggs;
    int hex_resolution = 3;
    double lonlat_cell_size_deg = 1.0;
    double cutoff_days = 5.0;
    double sample_interval_hours = 6.0;
    std::vector<GeoPoint> barriers = default_barriers();
    std::vector<std::pair<std::string, GeoPoint>> locations;
    TimeObjective objective = TimeObjective::most_likely;
    std::size_t bootstrap_samples = 100;
    std::size_t rotations = 100;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string output_dir = ".";
    std::string matrix_base;  // when set, load this persisted matrix instead of estimating
};

inline const char* to_string(GridKind k) {
    return k == GridKind::hexdggs ? "hexdggs" : "lonlat";
}

inline const char* to_string(TimeObjective o) {
    return o == TimeObjective::most_likely ? "most_likely" : "shortest_time";
}

inline GridKind parse_grid_kind(const std::string& s) {
    if (s == "hexdggs") return GridKind::hexdggs;
    if (s == "lonlat") return GridKind::lonlat;
    throw DataError("unknown grid kind: " + s);
}

inline TimeObjective parse_objective(const std::string& s) {
    if (s == "most_likely") return TimeObjective::most_likely;
    if (s == "shortest_time") return TimeObjective::shortest_time;
    throw DataError("unknown objective: " + s);
}

inline SpatialIndex make_index(const RunConfig& cfg) {
    if (cfg.grid_kind == GridKind::hexdggs) return SpatialIndex::hexdggs(cfg.hex_resolution);
    return SpatialIndex::lonlat(cfg.lonlat_cell_size_deg);
}

namespace detail {

inline std::string cfg_trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string unquote(std::string v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
        return v.substr(1, v.size() - 2);
    return v;
}

inline double cfg_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw DataError("config key " + key + ": not a number: " + v);
    return x;
}

inline long long cfg_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw DataError("config key " + key + ": not an integer: " + v);
    return x;
}

inline GeoPoint cfg_point(const std::string& key, const std::string& v) {
    const std::size_t comma = v.find(',');
    if (comma == std::string::npos)
        throw DataError("config key " + key + ": expected lon,lat: " + v);
    const double lon = cfg_double(key, cfg_trim(v.substr(0, comma)));
    const double lat = cfg_double(key, cfg_trim(v.substr(comma + 1)));
    return make_geo_point(lon, lat);
}

}  // namespace detail

// Flat key = value config, TOML-like: '#' comments, quoted strings allowed,
// barrier.<n> and location.<label> entries replace/extend the defaults.
inline RunConfig parse_flat_config(std::istream& in, RunConfig cfg = RunConfig{}) {
    std::string line;
    bool barriers_replaced = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::cfg_trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::cfg_trim(line.substr(0, eq));
        const std::string value = detail::unquote(detail::cfg_trim(line.substr(eq + 1)));
        if (key == "data") cfg.data_path = value;
        else if (key == "grid") cfg.grid_kind = parse_grid_kind(value);
        else if (key == "resolution") cfg.hex_resolution = static_cast<int>(detail::cfg_int(key, value));
        else if (key == "cell_size_deg") cfg.lonlat_cell_size_deg = detail::cfg_double(key, value);
        else if (key == "t_l_days") cfg.cutoff_days = detail::cfg_double(key, value);
        else if (key == "sample_interval_hours") cfg.sample_interval_hours = detail::cfg_double(key, value);
        else if (key == "objective") cfg.objective = parse_objective(value);
        else if (key == "bootstrap_samples") cfg.bootstrap_samples = static_cast<std::size_t>(detail::cfg_int(key, value));
        else if (key == "rotations") cfg.rotations = static_cast<std::size_t>(detail::cfg_int(key, value));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(detail::cfg_int(key, value));
        else if (key == "jobs") cfg.jobs = static_cast<int>(detail::cfg_int(key, value));
        else if (key == "output_dir") cfg.output_dir = value;
        else if (key == "matrix") cfg.matrix_base = value;
        else if (key == "barriers") {
            if (value == "none") { cfg.barriers.clear(); barriers_replaced = true; }
            else if (value == "default") { cfg.barriers = default_barriers(); barriers_replaced = true; }
            else throw DataError("config key barriers: expected none or default");
        } else if (key.rfind("barrier.", 0) == 0) {
            if (!barriers_replaced) { cfg.barriers.clear(); barriers_replaced = true; }
            cfg.barriers.push_back(detail::cfg_point(key, value));
        } else if (key.rfind("location.", 0) == 0) {
            const std::string label = key.substr(9);
            if (label.empty()) throw DataError("config: empty location label");
            for (const auto& [existing, pt] : cfg.locations) {
                (void)pt;
                if (existing == label) throw DataError("config: duplicate location label " + label);
            }
            cfg.locations.emplace_back(label, detail::cfg_point(key, value));
        } else {
            throw DataError("config line " + std::to_string(line_no) + ": unknown key " + key);
        }
    }
    return cfg;
}

inline report::json config_to_json(const RunConfig& cfg) {
    report::json barriers = report::json::array();
    for (const GeoPoint& b : cfg.barriers) barriers.push_back({b.lon, b.lat});
    report::json locations = report::json::object();
    for (const auto& [label, p] : cfg.locations) locations[label] = {p.lon, p.lat};
    return report::json{{"data", cfg.data_path},
                        {"grid", to_string(cfg.grid_kind)},
                        {"resolution", cfg.hex_resolution},
                        {"cell_size_deg", cfg.lonlat_cell_size_deg},
                        {"t_l_days", cfg.cutoff_days},
                        {"sample_interval_hours", cfg.sample_interval_hours},
                        {"objective", to_string(cfg.objective)},
                        {"bootstrap_samples", cfg.bootstrap_samples},
                        {"rotations", cfg.rotations},
                        {"seed", cfg.seed},
                        {"jobs", cfg.jobs},
                        {"output_dir", cfg.output_dir},
                        {"matrix", cfg.matrix_base},
                        {"barriers", std::move(barriers)},
                        {"locations", std::move(locations)}};
}

inline RunConfig config_from_json(const report::json& j) {
    RunConfig cfg;
    cfg.data_path = j.at("data").get<std::string>();
    cfg.grid_kind = parse_grid_kind(j.at("grid").get<std::string>());
    cfg.hex_resolution = j.at("resolution").get<int>();
    cfg.lonlat_cell_size_deg = j.at("cell_size_deg").get<double>();
    cfg.cutoff_days = j.at("t_l_days").get<double>();
    cfg.sample_interval_hours = j.at("sample_interval_hours").get<double>();
    cfg.objective = parse_objective(j.at("objective").get<std::string>());
    cfg.bootstrap_samples = j.at("bootstrap_samples").get<std::size_t>();
    cfg.rotations = j.at("rotations").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.jobs = j.at("jobs").get<int>();
    cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.matrix_base = j.at("matrix").get<std::string>();
    cfg.barriers.clear();
    for (const auto& b : j.at("barriers"))
        cfg.barriers.push_back(make_geo_point(b.at(0).get<double>(), b.at(1).get<double>()));
    cfg.locations.clear();
    for (const auto& [label, p] : j.at("locations").items())
        cfg.locations.emplace_back(label, make_geo_point(p.at(0).get<double>(), p.at(1).get<double>()));
    return cfg;
}

// Every effective setting lands in the manifest; a run is reproducible from
// it alone (same build, same data file).
struct Manifest {
    std::string subcommand;
    RunConfig cfg;
    report::json args = report::json::object();
};

inline report::json manifest_to_json(const Manifest& m) {
    return report::json{{"tool", "driftpath"},
                        {"subcommand", m.subcommand},
                        {"config", config_to_json(m.cfg)},
                        {"args", m.args}};
}

inline Manifest manifest_from_json(const report::json& j) {
    Manifest m;
    m.subcommand = j.at("subcommand").get<std::string>();
    m.cfg = config_from_json(j.at("config"));
    if (j.contains("args")) m.args = j.at("args");
    return m;
}

// A config file is either flat key = value text or an emitted JSON manifest
// (detected by a leading '{'); manifests restore subcommand arguments too.
inline Manifest load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        report::json j = report::json::parse(text, nullptr, true, true);
        return manifest_from_json(j);
    }
    std::istringstream flat(text);
    Manifest m;
    m.cfg = parse_flat_config(flat);
    return m;
}

}  // namespace driftpath
