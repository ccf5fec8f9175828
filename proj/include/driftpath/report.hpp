#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "driftpath/errors.hpp"
#include "driftpath/grid.hpp"
#include "driftpath/pathing.hpp"
#include "driftpath/transition.hpp"
#include "driftpath/uncertainty.hpp"

namespace driftpath::report {

using json = nlohmann::ordered_json;

inline std::string csv_escape(const std::string& field) {
    bool needs_quotes = false;
    for (char c : field)
        if (c == ',' || c == '"' || c == '\n' || c == '\r') needs_quotes = true;
    if (!needs_quotes) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline std::string fmt_fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open output file: " + path);
    return out;
}

struct PairwiseEntry {
    std::string origin;
    std::string destination;
    MemberStatus status = MemberStatus::ok;
    double days = 0.0;
    double steps = 0.0;  // expected cutoff units, fractional
    double log_probability = 0.0;
};

inline void write_pairwise_csv(const std::string& path,
                               const std::vector<PairwiseEntry>& entries) {
    std::ofstream out = open_out(path);
    out << "origin,destination,status,days,years,steps,log_probability\n";
    for (const PairwiseEntry& e : entries) {
        out << csv_escape(e.origin) << "," << csv_escape(e.destination) << ","
            << to_string(e.status) << ",";
        if (e.status == MemberStatus::ok || e.status == MemberStatus::zero)
            out << detail::fmt_g17(e.days) << "," << detail::fmt_g17(e.days / 365.25) << ","
                << detail::fmt_g17(e.steps) << "," << detail::fmt_g17(e.log_probability);
        else
            out << ",,,";
        out << "\n";
    }
}

struct MapEntry {
    CellId cell;
    double days = 0.0;
    double steps = 0.0;
};

inline void write_map_csv(const std::string& path, const SpatialIndex& idx,
                          const std::vector<MapEntry>& rows) {
    std::ofstream out = open_out(path);
    out << "cell,lon,lat,days,steps\n";
    for (const MapEntry& r : rows) {
        const GeoPoint c = idx.cell_centroid(r.cell);
        out << to_hex_string(r.cell) << "," << detail::fmt_g17(c.lon) << ","
            << detail::fmt_g17(c.lat) << "," << detail::fmt_g17(r.days) << ","
            << detail::fmt_g17(r.steps) << "\n";
    }
}

inline void write_members_csv(const std::string& path, const std::string& kind,
                              const std::vector<MemberOutcome>& members) {
    std::ofstream out = open_out(path);
    out << "member,kind,seed,days,status\n";
    for (std::size_t i = 0; i < members.size(); ++i) {
        const MemberOutcome& m = members[i];
        out << i << "," << csv_escape(kind) << "," << m.seed << ",";
        if (m.success()) out << detail::fmt_g17(m.days);
        out << "," << to_string(m.status) << "\n";
    }
}

struct SensitivityRow {
    double cutoff_days = 0.0;
    bool defined = false;  // spearman undefined on constant sequences
    double spearman = 0.0;
    std::size_t pairs_used = 0;
    std::size_t pairs_excluded = 0;
    bool is_reference = false;
};

inline void write_sensitivity_csv(const std::string& path,
                                  const std::vector<SensitivityRow>& rows) {
    std::ofstream out = open_out(path);
    out << "t_l_days,spearman,pairs_used,pairs_excluded,is_reference\n";
    for (const SensitivityRow& r : rows) {
        out << detail::fmt_g17(r.cutoff_days) << ",";
        if (r.defined) out << detail::fmt_g17(r.spearman);
        else out << "undefined";
        out << "," << r.pairs_used << "," << r.pairs_excluded << ","
            << (r.is_reference ? 1 : 0) << "\n";
    }
}

namespace geojson {

// Keep rings/lines continuous across the antimeridian: shift each longitude
// by a multiple of 360 so consecutive vertices never jump more than 180.
inline std::vector<GeoPoint> unwrap(const std::vector<GeoPoint>& pts) {
    std::vector<GeoPoint> out = pts;
    for (std::size_t i = 1; i < out.size(); ++i) {
        while (out[i].lon - out[i - 1].lon > 180.0) out[i].lon -= 360.0;
        while (out[i].lon - out[i - 1].lon < -180.0) out[i].lon += 360.0;
    }
    return out;
}

inline json coords(const std::vector<GeoPoint>& pts) {
    json arr = json::array();
    for (const GeoPoint& p : pts) arr.push_back(json::array({p.lon, p.lat}));
    return arr;
}

inline json line_string(const std::vector<GeoPoint>& pts) {
    return json{{"type", "LineString"}, {"coordinates", coords(unwrap(pts))}};
}

inline json cell_polygon(const SpatialIndex& idx, CellId cell) {
    std::vector<GeoPoint> ring = idx.cell_boundary(cell);
    ring = unwrap(ring);
    ring.push_back(ring.front());  // closed ring
    return json{{"type", "Polygon"}, {"coordinates", json::array({coords(ring)})}};
}

inline json feature(json geometry, json properties) {
    return json{{"type", "Feature"}, {"geometry", std::move(geometry)},
                {"properties", std::move(properties)}};
}

inline json feature_collection(json features) {
    return json{{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

}  // namespace geojson

// A path as a centroid LineString feature plus (optionally) one MultiPolygon
// feature of the member cells; both carry the same properties.
inline json path_feature_collection(const SpatialIndex& idx, const Path& p,
                                    const TravelTimeEstimate& t, bool include_cells = true) {
    std::vector<GeoPoint> centroids;
    centroids.reserve(p.cells.size());
    for (const CellId& c : p.cells) centroids.push_back(idx.cell_centroid(c));
    json cells = json::array();
    for (const CellId& c : p.cells) cells.push_back(to_hex_string(c));
    json props = {{"log_probability", p.log_probability},
                  {"steps", t.steps},
                  {"days", t.days},
                  {"cells", cells}};

    json features = json::array();
    features.push_back(geojson::feature(geojson::line_string(centroids), props));
    if (include_cells) {
        json multi = json::array();
        for (const CellId& c : p.cells) {
            std::vector<GeoPoint> ring = geojson::unwrap(idx.cell_boundary(c));
            ring.push_back(ring.front());
            multi.push_back(json::array({geojson::coords(ring)}));
        }
        features.push_back(geojson::feature(
            json{{"type", "MultiPolygon"}, {"coordinates", std::move(multi)}}, props));
    }
    return geojson::feature_collection(std::move(features));
}

// Choropleth source: one Polygon feature per cell with its travel time.
inline json map_feature_collection(const SpatialIndex& idx, const std::vector<MapEntry>& rows) {
    json features = json::array();
    for (const MapEntry& r : rows) {
        json props = {{"cell", to_hex_string(r.cell)}, {"days", r.days}, {"steps", r.steps}};
        features.push_back(geojson::feature(geojson::cell_polygon(idx, r.cell), props));
    }
    return geojson::feature_collection(std::move(features));
}

// Member paths collapsed by geometry; `weight` counts how many members used
// the same path, for dark-line rendering.
inline json member_paths_feature_collection(const std::vector<MemberOutcome>& members) {
    auto key_of = [](const std::vector<GeoPoint>& pts) {
        std::string k;
        k.reserve(pts.size() * 16);
        for (const GeoPoint& p : pts) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g;", p.lon, p.lat);
            k += buf;
        }
        return k;
    };
    std::map<std::string, std::pair<std::vector<GeoPoint>, std::size_t>> grouped;
    for (const MemberOutcome& m : members) {
        if (!m.success() || m.display_path.size() < 2) continue;
        auto& slot = grouped[key_of(m.display_path)];
        if (slot.second == 0) slot.first = m.display_path;
        slot.second += 1;
    }
    json features = json::array();
    for (const auto& [key, entry] : grouped) {
        (void)key;
        json props = {{"weight", entry.second}};
        features.push_back(geojson::feature(geojson::line_string(entry.first), props));
    }
    return geojson::feature_collection(std::move(features));
}

inline void write_json(const std::string& path, const json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

}  // namespace driftpath::report
