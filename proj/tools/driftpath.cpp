// driftpath: travel-time analysis of drifter trajectories on a global grid.
//
// Subcommands: estimate, pairwise, map, bootstrap, rotate, sensitivity,
// validate. Settings come from defaults, then an optional config file
// (flat key = value, or a previously emitted manifest.json), then flags.
// Every run writes manifest.json; re-running with that manifest as the
// config reproduces the outputs byte for byte.

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "driftpath/errors.hpp"
#include "driftpath/geo.hpp"
#include "driftpath/grid.hpp"
#include "driftpath/ingest.hpp"
#include "driftpath/oracle.hpp"
#include "driftpath/pathing.hpp"
#include "driftpath/report.hpp"
#include "driftpath/rng.hpp"
#include "driftpath/runconfig.hpp"
#include "driftpath/stats.hpp"
#include "driftpath/transition.hpp"
#include "driftpath/uncertainty.hpp"

namespace fs = std::filesystem;
using namespace driftpath;

namespace {

std::string sanitize_label(const std::string& label) {
    std::string out;
    for (char c : label) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '-' || c == '_';
        out += ok ? c : '_';
    }
    return out.empty() ? std::string("x") : out;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
}

GeoPoint parse_point_arg(const std::string& what, const std::string& v) {
    try {
        return detail::cfg_point(what, v);
    } catch (const DataError& e) {
        throw std::invalid_argument(e.what());
    }
}

// Holds parsed flag values plus their CLI11 handles so we can tell which
// were actually given and should override the config file.
struct CommonOpts {
    std::string config, data, grid, objective, output_dir, matrix;
    int resolution = 3;
    double cell_size = 1.0, tl = 5.0, interval = 6.0;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::uint64_t samples = 100, rotations = 100;
    std::vector<std::string> locations, barriers;
    bool no_barriers = false;

    CLI::Option *o_config = nullptr, *o_data = nullptr, *o_grid = nullptr, *o_res = nullptr,
                *o_cell = nullptr, *o_tl = nullptr, *o_interval = nullptr, *o_obj = nullptr,
                *o_seed = nullptr, *o_jobs = nullptr, *o_samples = nullptr, *o_rot = nullptr,
                *o_out = nullptr, *o_matrix = nullptr, *o_loc = nullptr, *o_bar = nullptr,
                *o_nobar = nullptr;

    void attach(CLI::App* a) {
        o_config = a->add_option("--config", config,
                                 "config file: flat key = value, or an emitted manifest.json");
        o_data = a->add_option("--data", data, "trajectory CSV (header id,time,lon,lat)");
        o_grid = a->add_option("--grid", grid, "grid kind: hexdggs or lonlat");
        o_res = a->add_option("--resolution", resolution, "hexdggs resolution (default 3)");
        o_cell = a->add_option("--cell-size-deg", cell_size, "lonlat cell size in degrees");
        o_tl = a->add_option("--t-l-days", tl, "transition gap in days (default 5)");
        o_interval = a->add_option("--sample-interval-hours", interval,
                                   "trajectory sampling interval (default 6)");
        o_obj = a->add_option("--objective", objective, "most_likely or shortest_time");
        o_seed = a->add_option("--seed", seed, "master RNG seed");
        o_jobs = a->add_option("--jobs", jobs, "worker threads; results do not depend on it");
        o_samples = a->add_option("--bootstrap-samples", samples, "bootstrap sample count B");
        o_rot = a->add_option("--rotations", rotations, "rotation ensemble size");
        o_out = a->add_option("--output-dir", output_dir, "where outputs are written");
        o_matrix = a->add_option("--matrix", matrix,
                                 "persisted matrix base path; skips estimation");
        o_loc = a->add_option("--location", locations,
                              "labeled point label=lon,lat (repeatable; replaces config list)");
        o_bar = a->add_option("--barrier", barriers,
                              "removed cell at lon,lat (repeatable; replaces default list)");
        o_nobar = a->add_flag("--no-barriers", no_barriers, "keep all cells (no removal)");
    }

    Manifest merged(const std::string& subcommand) const {
        Manifest m;
        if (o_config->count()) {
            m = load_config_file(config);
            if (!m.subcommand.empty() && m.subcommand != subcommand)
                throw std::invalid_argument("config manifest was emitted by subcommand '" +
                                            m.subcommand + "', not '" + subcommand + "'");
        }
        RunConfig& c = m.cfg;
        if (o_data->count()) c.data_path = data;
        if (o_grid->count()) c.grid_kind = parse_grid_kind(grid);
        if (o_res->count()) c.hex_resolution = resolution;
        if (o_cell->count()) c.lonlat_cell_size_deg = cell_size;
        if (o_tl->count()) c.cutoff_days = tl;
        if (o_interval->count()) c.sample_interval_hours = interval;
        if (o_obj->count()) c.objective = parse_objective(objective);
        if (o_seed->count()) c.seed = seed;
        if (o_jobs->count()) c.jobs = jobs;
        if (o_samples->count()) c.bootstrap_samples = static_cast<std::size_t>(samples);
        if (o_rot->count()) c.rotations = static_cast<std::size_t>(rotations);
        if (o_out->count()) c.output_dir = output_dir;
        if (o_matrix->count()) c.matrix_base = matrix;
        if (o_loc->count()) {
            c.locations.clear();
            for (const std::string& s : locations) {
                const std::size_t eq = s.find('=');
                if (eq == std::string::npos || eq == 0)
                    throw std::invalid_argument("--location expects label=lon,lat, got: " + s);
                c.locations.emplace_back(s.substr(0, eq),
                                         parse_point_arg("--location", s.substr(eq + 1)));
            }
        }
        if (no_barriers) {
            c.barriers.clear();
        } else if (o_bar->count()) {
            c.barriers.clear();
            for (const std::string& s : barriers)
                c.barriers.push_back(parse_point_arg("--barrier", s));
        }
        m.subcommand = subcommand;  // args from a manifest config stay available
        return m;
    }
};

struct Pipeline {
    SpatialIndex idx;
    TransitionMatrix T;
    LoadReport report{};
    bool loaded_matrix = false;
};

Pipeline build_pipeline(const RunConfig& cfg) {
    if (!cfg.matrix_base.empty()) {
        TransitionMatrix T = load_matrix(cfg.matrix_base);
        SpatialIndex idx = T.grid;
        return Pipeline{std::move(idx), std::move(T), LoadReport{}, true};
    }
    if (cfg.data_path.empty())
        throw DataError("no input: set data = <csv> (or --data), or matrix = <base path>");
    SpatialIndex idx = make_index(cfg);
    LoadResult lr =
        load_trajectories(cfg.data_path, TrajectoryFormat::csv, cfg.sample_interval_hours);
    TransitionMatrix T = estimate_matrix(lr.store, idx, cfg.cutoff_days);
    if (!cfg.barriers.empty()) T = remove_states(T, cfg.barriers, idx);
    return Pipeline{std::move(idx), std::move(T), lr.report, false};
}

void write_manifest(const Manifest& m) {
    report::write_json(out_path(m.cfg, "manifest.json"), manifest_to_json(m));
}

TrajectoryStore load_store(const RunConfig& cfg) {
    if (cfg.data_path.empty())
        throw DataError("this subcommand re-estimates from data: set data = <csv> or --data");
    return load_trajectories(cfg.data_path, TrajectoryFormat::csv, cfg.sample_interval_hours)
        .store;
}

std::vector<PairQuery> location_pairs(const RunConfig& cfg,
                                      std::vector<std::pair<std::string, std::string>>* names) {
    std::vector<PairQuery> pairs;
    for (const auto& [lo, po] : cfg.locations) {
        for (const auto& [ld, pd] : cfg.locations) {
            if (lo == ld) continue;
            pairs.push_back({po, pd});
            if (names) names->emplace_back(lo, ld);
        }
    }
    return pairs;
}

int cmd_estimate(Manifest m) {
    const RunConfig& cfg = m.cfg;
    TrajectoryStore store = load_store(cfg);
    const SpatialIndex idx = make_index(cfg);
    TransitionMatrix T = estimate_matrix(store, idx, cfg.cutoff_days);
    RemoveReport rr;
    if (!cfg.barriers.empty()) T = remove_states(T, cfg.barriers, idx, &rr);
    fs::create_directories(cfg.output_dir);
    save_matrix(T, out_path(cfg, "matrix"));
    write_manifest(m);
    std::size_t transitions = T.prob.size();
    std::printf("estimated %zu states, %zu transitions (gap %d steps, T_L %.3f days)\n",
                T.num_states(), transitions, T.gap_steps, T.lagrangian_cutoff_days);
    if (!cfg.barriers.empty())
        std::printf("removed %zu barrier cells (%zu barrier points outside the state set)\n",
                    rr.removed.size(), rr.absent_points.size());
    std::printf("wrote %s.{states.csv,triplets.csv,meta}\n", out_path(cfg, "matrix").c_str());
    return 0;
}

int cmd_pairwise(Manifest m) {
    const RunConfig& cfg = m.cfg;
    if (cfg.locations.empty())
        throw std::invalid_argument("pairwise needs at least one location.<label> = lon,lat");
    Pipeline p = build_pipeline(cfg);
    const PathGraph g = build_graph(p.T);
    fs::create_directories(cfg.output_dir);

    std::vector<report::PairwiseEntry> entries;
    for (const auto& [lo, po] : cfg.locations) {
        for (const auto& [ld, pd] : cfg.locations) {
            report::PairwiseEntry e;
            e.origin = lo;
            e.destination = ld;
            if (lo == ld) {
                entries.push_back(e);  // diagonal: 0 days, ok
                continue;
            }
            try {
                const CellId oc = p.idx.cell_of(po);
                const CellId dc = p.idx.cell_of(pd);
                Path path;
                TravelTimeEstimate t;
                if (cfg.objective == TimeObjective::most_likely) {
                    path = most_likely_path(g, oc, dc);
                    t = expected_travel_time(p.T, path);
                } else {
                    std::tie(path, t) = shortest_time_path(p.T, oc, dc);
                }
                e.days = t.days;
                e.steps = t.steps;
                e.log_probability = path.log_probability;
                e.status = oc == dc ? MemberStatus::zero : MemberStatus::ok;
                report::write_json(
                    out_path(cfg, "path_" + sanitize_label(lo) + "_" + sanitize_label(ld) +
                                      ".geojson"),
                    report::path_feature_collection(p.idx, path, t));
            } catch (const UnknownStateError&) {
                e.status = MemberStatus::unknown_state;
            } catch (const DisconnectedError&) {
                e.status = MemberStatus::disconnected;
            }
            entries.push_back(e);
        }
    }
    report::write_pairwise_csv(out_path(cfg, "travel_times.csv"), entries);
    write_manifest(m);

    std::printf("%-10s %-10s %12s %10s %s\n", "origin", "dest", "days", "years", "status");
    for (const report::PairwiseEntry& e : entries) {
        if (e.origin == e.destination) continue;
        if (e.status == MemberStatus::ok || e.status == MemberStatus::zero)
            std::printf("%-10s %-10s %12.3f %10.3f %s\n", e.origin.c_str(),
                        e.destination.c_str(), e.days, e.days / 365.25, to_string(e.status));
        else
            std::printf("%-10s %-10s %12s %10s %s\n", e.origin.c_str(), e.destination.c_str(),
                        "-", "-", to_string(e.status));
    }
    std::printf("wrote %s\n", out_path(cfg, "travel_times.csv").c_str());
    return 0;
}

int cmd_map(Manifest m, const std::string& anchor_arg, std::string direction_arg) {
    // manifest args fill anything the flags left unset
    std::optional<GeoPoint> anchor;
    if (!anchor_arg.empty()) {
        anchor = parse_point_arg("--anchor", anchor_arg);
    } else if (m.args.contains("anchor")) {
        const auto& a = m.args["anchor"];
        anchor = make_geo_point(a.at(0).get<double>(), a.at(1).get<double>());
    }
    if (direction_arg.empty() && m.args.contains("direction"))
        direction_arg = m.args["direction"].get<std::string>();
    if (direction_arg.empty()) direction_arg = "from";
    if (!anchor) throw std::invalid_argument("map needs --anchor lon,lat");
    MapDirection dir;
    if (direction_arg == "from" || direction_arg == "from_anchor")
        dir = MapDirection::from_anchor;
    else if (direction_arg == "to" || direction_arg == "to_anchor")
        dir = MapDirection::to_anchor;
    else
        throw std::invalid_argument("--direction must be from or to, got: " + direction_arg);

    const RunConfig& cfg = m.cfg;
    Pipeline p = build_pipeline(cfg);
    const CellId ac = p.idx.cell_of(*anchor);
    const std::map<CellId, TravelTimeEstimate> times =
        one_to_all_times(p.T, ac, dir, cfg.objective);

    std::vector<report::MapEntry> rows;
    rows.reserve(times.size());
    for (const auto& [cell, t] : times) rows.push_back({cell, t.days, t.steps});

    fs::create_directories(cfg.output_dir);
    report::write_map_csv(out_path(cfg, "map.csv"), p.idx, rows);
    report::write_json(out_path(cfg, "map.geojson"),
                       report::map_feature_collection(p.idx, rows));
    m.args = report::json{{"anchor", {anchor->lon, anchor->lat}},
                          {"direction", dir == MapDirection::from_anchor ? "from_anchor"
                                                                         : "to_anchor"}};
    write_manifest(m);

    double max_days = 0.0;
    for (const auto& r : rows) max_days = std::max(max_days, r.days);
    std::printf("%zu reachable cells %s anchor %s; max %.3f days\n", rows.size(),
                dir == MapDirection::from_anchor ? "from" : "to",
                to_hex_string(ac).c_str(), max_days);
    std::printf("wrote %s and map.geojson\n", out_path(cfg, "map.csv").c_str());
    return 0;
}

int cmd_bootstrap(Manifest m) {
    const RunConfig& cfg = m.cfg;
    if (cfg.locations.size() < 2)
        throw std::invalid_argument("bootstrap needs at least two locations");
    TrajectoryStore store = load_store(cfg);
    const SpatialIndex idx = make_index(cfg);
    std::vector<std::pair<std::string, std::string>> names;
    const std::vector<PairQuery> pairs = location_pairs(cfg, &names);
    const std::vector<BootstrapResult> results =
        bootstrap_travel_times(store, idx, pairs, cfg.bootstrap_samples, cfg.cutoff_days,
                               cfg.barriers, cfg.seed, cfg.jobs);

    fs::create_directories(cfg.output_dir);
    std::ofstream summary = report::open_out(out_path(cfg, "bootstrap_summary.csv"));
    summary << "origin,destination,samples,mean_days,sd_days,failures\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const BootstrapResult& r = results[i];
        const std::string tag =
            sanitize_label(names[i].first) + "_" + sanitize_label(names[i].second);
        report::write_members_csv(out_path(cfg, "members_bootstrap_" + tag + ".csv"),
                                  "bootstrap", r.members);
        report::write_json(out_path(cfg, "paths_bootstrap_" + tag + ".geojson"),
                           report::member_paths_feature_collection(r.members));
        summary << report::csv_escape(names[i].first) << ","
                << report::csv_escape(names[i].second) << "," << r.members.size() << ",";
        if (r.available)
            summary << detail::fmt_g17(r.mean_days) << "," << detail::fmt_g17(r.sd_days);
        else
            summary << ",";
        summary << "," << r.failure_count << "\n";
        if (r.available)
            std::printf("%s -> %s: %.3f +/- %.3f days (%zu/%zu members)\n",
                        names[i].first.c_str(), names[i].second.c_str(), r.mean_days,
                        r.sd_days, r.members.size() - r.failure_count, r.members.size());
        else
            std::printf("%s -> %s: no successful members\n", names[i].first.c_str(),
                        names[i].second.c_str());
    }
    summary.close();
    write_manifest(m);
    std::printf("wrote %s\n", out_path(cfg, "bootstrap_summary.csv").c_str());
    return 0;
}

int cmd_rotate(Manifest m) {
    const RunConfig& cfg = m.cfg;
    if (cfg.locations.size() < 2)
        throw std::invalid_argument("rotate needs at least two locations");
    TrajectoryStore store = load_store(cfg);
    const SpatialIndex idx = make_index(cfg);
    std::vector<std::pair<std::string, std::string>> names;
    const std::vector<PairQuery> pairs = location_pairs(cfg, &names);
    const std::vector<RotationEnsembleResult> results = rotation_ensemble(
        store, idx, pairs, cfg.rotations, cfg.cutoff_days, cfg.barriers, cfg.seed, cfg.jobs);

    fs::create_directories(cfg.output_dir);
    std::ofstream summary = report::open_out(out_path(cfg, "rotate_summary.csv"));
    summary << "origin,destination,rotations,mean_days,sd_days,zero_count,failures\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const RotationEnsembleResult& r = results[i];
        const std::string tag =
            sanitize_label(names[i].first) + "_" + sanitize_label(names[i].second);
        report::write_members_csv(out_path(cfg, "members_rotate_" + tag + ".csv"), "rotation",
                                  r.members);
        report::write_json(out_path(cfg, "paths_rotate_" + tag + ".geojson"),
                           report::member_paths_feature_collection(r.members));
        summary << report::csv_escape(names[i].first) << ","
                << report::csv_escape(names[i].second) << "," << r.members.size() << ",";
        if (r.available)
            summary << detail::fmt_g17(r.mean_days) << "," << detail::fmt_g17(r.sd_days);
        else
            summary << ",";
        summary << "," << r.zero_count << "," << r.failure_count << "\n";
        if (r.available)
            std::printf("%s -> %s: %.3f +/- %.3f days (%zu zeros, %zu failures)\n",
                        names[i].first.c_str(), names[i].second.c_str(), r.mean_days,
                        r.sd_days, r.zero_count, r.failure_count);
        else
            std::printf("%s -> %s: no successful members\n", names[i].first.c_str(),
                        names[i].second.c_str());
    }
    summary.close();
    write_manifest(m);
    std::printf("wrote %s\n", out_path(cfg, "rotate_summary.csv").c_str());
    return 0;
}

int cmd_sensitivity(Manifest m, std::vector<double> cutoffs, double reference,
                    bool reference_given) {
    if (cutoffs.empty() && m.args.contains("cutoffs"))
        cutoffs = m.args["cutoffs"].get<std::vector<double>>();
    if (!reference_given && m.args.contains("reference_t_l_days")) {
        reference = m.args["reference_t_l_days"].get<double>();
        reference_given = true;
    }
    const RunConfig& cfg = m.cfg;
    if (cutoffs.size() < 2)
        throw std::invalid_argument("sensitivity needs --cutoffs with at least two values");
    if (!reference_given) reference = cfg.cutoff_days;
    bool ref_found = false;
    for (double c : cutoffs) ref_found = ref_found || c == reference;
    if (!ref_found)
        throw std::invalid_argument("reference T_L must be one of the cutoffs");
    for (double c : cutoffs) {
        const double gap = c * 24.0 / cfg.sample_interval_hours;
        if (gap < 0.5 || std::abs(gap - std::round(gap)) > 1e-9)
            throw std::invalid_argument(
                "cutoff " + std::to_string(c) +
                " days is not a whole number of sampling steps");
    }
    if (cfg.locations.size() < 2)
        throw std::invalid_argument("sensitivity needs at least two locations");

    TrajectoryStore store = load_store(cfg);
    const SpatialIndex idx = make_index(cfg);
    std::vector<std::pair<std::string, std::string>> names;
    const std::vector<PairQuery> pairs = location_pairs(cfg, &names);

    // off-diagonal travel times per cutoff; missing entries stay unset
    auto times_for = [&](double cutoff) {
        TransitionMatrix T = estimate_matrix(store, idx, cutoff);
        if (!cfg.barriers.empty()) T = remove_states(T, cfg.barriers, idx);
        const PathGraph g = build_graph(T);
        std::vector<std::optional<double>> days(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            try {
                const CellId oc = idx.cell_of(pairs[i].first);
                const CellId dc = idx.cell_of(pairs[i].second);
                if (cfg.objective == TimeObjective::most_likely) {
                    const Path path = most_likely_path(g, oc, dc);
                    days[i] = expected_travel_time(T, path).days;
                } else {
                    days[i] = shortest_time_path(T, oc, dc).second.days;
                }
            } catch (const UnknownStateError&) {
            } catch (const DisconnectedError&) {
            }
        }
        return days;
    };

    const std::vector<std::optional<double>> ref_days = times_for(reference);
    std::vector<report::SensitivityRow> rows;
    for (double c : cutoffs) {
        const std::vector<std::optional<double>> d =
            c == reference ? ref_days : times_for(c);
        std::vector<double> a, b;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (d[i] && ref_days[i]) {
                a.push_back(*d[i]);
                b.push_back(*ref_days[i]);
            }
        }
        report::SensitivityRow row;
        row.cutoff_days = c;
        row.pairs_used = a.size();
        row.pairs_excluded = pairs.size() - a.size();
        row.is_reference = c == reference;
        if (a.size() >= 2) {
            const std::optional<double> r = spearman(a, b);
            row.defined = r.has_value();
            if (r) row.spearman = *r;
        }
        rows.push_back(row);
        if (row.defined)
            std::printf("T_L %6.2f days: spearman %+.4f (%zu pairs, %zu excluded)%s\n", c,
                        row.spearman, row.pairs_used, row.pairs_excluded,
                        row.is_reference ? " [reference]" : "");
        else
            std::printf("T_L %6.2f days: spearman undefined (%zu pairs, %zu excluded)%s\n", c,
                        row.pairs_used, row.pairs_excluded,
                        row.is_reference ? " [reference]" : "");
    }
    fs::create_directories(cfg.output_dir);
    report::write_sensitivity_csv(out_path(cfg, "sensitivity.csv"), rows);
    m.args = report::json{{"cutoffs", cutoffs}, {"reference_t_l_days", reference}};
    write_manifest(m);
    std::printf("wrote %s\n", out_path(cfg, "sensitivity.csv").c_str());
    return 0;
}

// Built-in cross-checks of the estimator, the path search, and the travel
// time formula against directly computable cases.
int cmd_validate() {
    int failures = 0;
    auto check = [&](const char* name, bool ok) {
        std::printf("%s %s\n", ok ? "ok  " : "FAIL", name);
        if (!ok) ++failures;
    };

    {
        // two-cell occupancy [A,A,B,B] at gap 1: row A splits evenly, B stays
        SpatialIndex idx = SpatialIndex::lonlat(1.0);
        TrajectoryStore s;
        s.sample_interval_hours = 24.0;
        Trajectory tr;
        tr.id = "t";
        tr.sample_interval_hours = 24.0;
        tr.positions = {make_geo_point(0.5, 0.5), make_geo_point(0.5, 0.5),
                        make_geo_point(1.5, 0.5), make_geo_point(1.5, 0.5)};
        s.trajectories.push_back(tr);
        TransitionMatrix T = estimate_matrix(s, idx, 1.0);
        const CellId A = idx.cell_of(make_geo_point(0.5, 0.5));
        const CellId B = idx.cell_of(make_geo_point(1.5, 0.5));
        check("hand-counted two-cell fixture",
              T.at(T.state_index(A), T.state_index(A)) == 0.5 &&
                  T.at(T.state_index(A), T.state_index(B)) == 0.5 &&
                  T.at(T.state_index(B), T.state_index(B)) == 1.0);
    }

    {
        // holding-time pmf sums to 1 for staying probabilities up to 0.99
        SpatialIndex idx = SpatialIndex::lonlat(1.0);
        const CellId a = idx.cell_of(make_geo_point(0.5, 0.5));
        const CellId b = idx.cell_of(make_geo_point(1.5, 0.5));
        bool ok = true;
        for (double stay : {0.0, 0.5, 0.9, 0.99}) {
            TransitionMatrix T = matrix_from_entries(
                idx, {a, b}, {{0, 0, stay}, {0, 1, 1.0 - stay}, {1, 1, 1.0}});
            double sum = 0.0;
            for (long k = 1; k <= 4000; ++k)
                sum += holding_time_pmf(T, a, b, k);
            ok = ok && std::abs(sum - 1.0) < 1e-10;
        }
        check("holding-time pmf normalization", ok);
    }

    {
        // expected edge time 3 steps for T_ii = 0.5, T_ij = 0.25; MC agrees
        SpatialIndex idx = SpatialIndex::lonlat(1.0);
        const CellId a = idx.cell_of(make_geo_point(0.5, 0.5));
        const CellId b = idx.cell_of(make_geo_point(1.5, 0.5));
        TransitionMatrix T = matrix_from_entries(
            idx, {a, b}, {{0, 0, 0.5}, {0, 1, 0.25}, {1, 1, 1.0}});
        const Path p{{a, b}, 0.0};
        const TravelTimeEstimate t = expected_travel_time(T, p);
        rng::Engine eng(12345);
        const McEstimate mc = constrained_edge_time_mc(T, a, b, 100000, eng);
        check("expected edge time vs direct simulation",
              t.steps == 3.0 && std::abs(mc.mean - 3.0) < 0.06);
    }

    {
        // one-way ring: travel time is hop count forward, n - hops backward
        const int n = 8;
        SpatialIndex idx = SpatialIndex::lonlat(1.0);
        std::vector<CellId> cells;
        for (int i = 0; i < n; ++i)
            cells.push_back(idx.cell_of(make_geo_point(i + 0.5, 0.5)));
        std::vector<std::tuple<std::size_t, std::size_t, double>> entries;
        std::vector<CellId> sorted = cells;
        std::sort(sorted.begin(), sorted.end());
        auto pos = [&](CellId c) {
            return static_cast<std::size_t>(
                std::lower_bound(sorted.begin(), sorted.end(), c) - sorted.begin());
        };
        for (int i = 0; i < n; ++i)
            entries.push_back({pos(cells[i]), pos(cells[(i + 1) % n]), 1.0});
        TransitionMatrix T = matrix_from_entries(idx, sorted, entries, 5.0, 20);
        const PathGraph g = build_graph(T);
        const Path fwd = most_likely_path(g, cells[0], cells[3]);
        const Path rev = most_likely_path(g, cells[3], cells[0]);
        check("ring world directional asymmetry",
              expected_travel_time(T, fwd).days == 15.0 &&
                  expected_travel_time(T, rev).days == 25.0);
    }

    {
        // search agrees with exhaustive enumeration on random small matrices
        bool ok = true;
        rng::Engine eng(777);
        SpatialIndex idx = SpatialIndex::lonlat(1.0);
        for (int rep = 0; rep < 20 && ok; ++rep) {
            const std::size_t n = 4 + rep % 3;
            std::vector<CellId> cells;
            for (std::size_t i = 0; i < n; ++i)
                cells.push_back(idx.cell_of(
                    make_geo_point(static_cast<double>(i) + 0.5, 10.5)));
            std::sort(cells.begin(), cells.end());
            std::vector<std::tuple<std::size_t, std::size_t, double>> entries;
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<double> w(n, 0.0);
                double tot = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (rng::uniform01(eng) < 0.6) {
                        w[j] = 0.05 + rng::uniform01(eng);
                        tot += w[j];
                    }
                }
                if (tot == 0.0) {
                    w[i] = 1.0;
                    tot = 1.0;
                }
                for (std::size_t j = 0; j < n; ++j)
                    if (w[j] > 0.0) entries.push_back({i, j, w[j] / tot});
            }
            TransitionMatrix T = matrix_from_entries(idx, cells, entries);
            const PathGraph g = build_graph(T);
            for (TimeObjective obj :
                 {TimeObjective::most_likely, TimeObjective::shortest_time}) {
                for (std::size_t a = 0; a < n && ok; ++a) {
                    for (std::size_t b = 0; b < n && ok; ++b) {
                        Path fast, slow;
                        bool fast_ok = true, slow_ok = true;
                        try {
                            fast = obj == TimeObjective::most_likely
                                       ? most_likely_path(g, cells[a], cells[b])
                                       : shortest_time_path(T, cells[a], cells[b]).first;
                        } catch (const DisconnectedError&) {
                            fast_ok = false;
                        }
                        try {
                            slow = enumerate_best_path(T, cells[a], cells[b], obj);
                        } catch (const DisconnectedError&) {
                            slow_ok = false;
                        }
                        if (fast_ok != slow_ok) {
                            ok = false;
                            break;
                        }
                        if (!fast_ok) continue;
                        if (fast.cells == slow.cells) continue;
                        if (obj == TimeObjective::most_likely)
                            ok = std::abs(fast.log_probability - slow.log_probability) < 1e-9;
                        else
                            ok = std::abs(expected_travel_time(T, fast).steps -
                                          expected_travel_time(T, slow).steps) < 1e-9;
                    }
                }
            }
        }
        check("path search vs exhaustive enumeration", ok);
    }

    std::printf(failures == 0 ? "all checks passed\n" : "%d check(s) failed\n", failures);
    return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"travel-time analysis of drifter trajectories on a global grid"};
    app.require_subcommand(1);

    CommonOpts est, pw, mp, bs, rot, sens;
    CLI::App* c_est = app.add_subcommand("estimate", "estimate and persist a transition matrix");
    est.attach(c_est);
    CLI::App* c_pw = app.add_subcommand("pairwise", "travel times between all location pairs");
    pw.attach(c_pw);
    CLI::App* c_map = app.add_subcommand("map", "travel times between one anchor and every cell");
    mp.attach(c_map);
    std::string anchor_arg, direction_arg;
    c_map->add_option("--anchor", anchor_arg, "anchor point lon,lat");
    c_map->add_option("--direction", direction_arg, "from (anchor to cells) or to");
    CLI::App* c_bs = app.add_subcommand("bootstrap", "trajectory-resampling uncertainty");
    bs.attach(c_bs);
    CLI::App* c_rot = app.add_subcommand("rotate", "grid-rotation (discretization) uncertainty");
    rot.attach(c_rot);
    CLI::App* c_sens =
        app.add_subcommand("sensitivity", "rank correlation of travel times across T_L choices");
    sens.attach(c_sens);
    std::vector<double> cutoffs;
    double reference = 0.0;
    CLI::Option* o_ref = c_sens->add_option("--reference", reference,
                                            "reference T_L in days (must be in --cutoffs)");
    c_sens->add_option("--cutoffs", cutoffs, "T_L values in days (comma separated)")
        ->delimiter(',');
    CLI::App* c_val = app.add_subcommand("validate", "run built-in cross-checks");

    try {
        app.parse(argc, argv);
        if (c_est->parsed()) return cmd_estimate(est.merged("estimate"));
        if (c_pw->parsed()) return cmd_pairwise(pw.merged("pairwise"));
        if (c_map->parsed()) return cmd_map(mp.merged("map"), anchor_arg, direction_arg);
        if (c_bs->parsed()) return cmd_bootstrap(bs.merged("bootstrap"));
        if (c_rot->parsed()) return cmd_rotate(rot.merged("rotate"));
        if (c_sens->parsed())
            return cmd_sensitivity(sens.merged("sensitivity"), cutoffs, reference,
                                   o_ref->count() > 0);
        if (c_val->parsed()) return cmd_validate();
        return 1;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    } catch (const UnknownStateError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const DisconnectedError& e) {
        std::fprintf(stderr, "computation failed: %s\n", e.what());
        return 3;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
