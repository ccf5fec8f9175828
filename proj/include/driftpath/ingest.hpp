#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "driftpath/errors.hpp"
#include "driftpath/geo.hpp"
#include "driftpath/rng.hpp"

namespace driftpath {

// One regularly sampled trajectory segment. Loading splits source drifters at
// sampling gaps, so several Trajectory records can share a source id (the
// split ones get a "#k" suffix).
struct Trajectory {
    std::string id;
    std::int64_t start_time = 0;  // UTC epoch seconds
    double sample_interval_hours = 6.0;
    std::vector<GeoPoint> positions;
};

struct TrajectoryStore {
    std::vector<Trajectory> trajectories;
    double sample_interval_hours = 6.0;

    std::size_t size() const { return trajectories.size(); }
};

struct LoadReport {
    std::size_t rows = 0;
    std::size_t dropped_rows = 0;  // blank lines
    std::size_t source_ids = 0;
    std::size_t segments = 0;
    std::size_t single_point_segments = 0;
};

struct LoadResult {
    TrajectoryStore store;
    LoadReport report;
};

enum class TrajectoryFormat { csv };

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// RFC 4180 field split: quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

// Accepts integer epoch seconds or ISO-8601 UTC (YYYY-MM-DD[T ]HH:MM[:SS][Z]).
inline std::int64_t parse_time(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) throw DataError("empty time field");

    bool numeric = true;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (!(std::isdigit(static_cast<unsigned char>(c)) || (i == 0 && (c == '-' || c == '+'))))
            numeric = false;
    }
    if (numeric) {
        char* end = nullptr;
        const long long v = std::strtoll(s.c_str(), &end, 10);
        if (end == nullptr || *end != '\0') throw DataError("malformed epoch time: " + s);
        return v;
    }

    int year;
    unsigned mon, day, hh, mm, ss = 0;
    char sep;
    int consumed = 0;
    if (std::sscanf(s.c_str(), "%d-%2u-%2u%c%2u:%2u%n", &year, &mon, &day, &sep, &hh, &mm,
                    &consumed) != 6 ||
        (sep != 'T' && sep != ' '))
        throw DataError("malformed time (want ISO-8601 UTC or epoch seconds): " + s);
    std::size_t pos = static_cast<std::size_t>(consumed);
    if (pos < s.size() && s[pos] == ':') {
        int c2 = 0;
        if (std::sscanf(s.c_str() + pos, ":%2u%n", &ss, &c2) != 1)
            throw DataError("malformed time: " + s);
        pos += static_cast<std::size_t>(c2);
    }
    if (pos < s.size() && s[pos] == 'Z') ++pos;
    if (pos != s.size()) throw DataError("trailing characters in time: " + s);
    if (mon < 1 || mon > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60)
        throw DataError("time component out of range: " + s);
    return days_from_civil(year, mon, day) * 86400 + hh * 3600 + mm * 60 + ss;
}

inline double parse_double(const std::string& raw, const char* what) {
    const std::string s = trim(raw);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end == nullptr || *end != '\0')
        throw DataError(std::string("malformed ") + what + ": " + raw);
    return v;
}

}  // namespace detail

// Loads the canonical trajectory CSV (header `id,time,lon,lat`). Rows are
// grouped by id and sorted by time; any spacing larger than the sample
// interval splits the drifter into separate segments, and spacings that are
// not whole multiples of the interval are rejected.
inline LoadResult load_trajectories(const std::string& path,
                                    TrajectoryFormat format = TrajectoryFormat::csv,
                                    double sample_interval_hours = 6.0) {
    (void)format;  // single format today
    if (sample_interval_hours <= 0)
        throw std::invalid_argument("sample interval must be positive");
    const std::int64_t interval_s =
        static_cast<std::int64_t>(std::llround(sample_interval_hours * 3600.0));
    if (interval_s <= 0) throw std::invalid_argument("sample interval too small");

    std::ifstream in(path);
    if (!in) throw DataError("cannot open trajectory file: " + path);

    LoadResult out;
    out.store.sample_interval_hours = sample_interval_hours;

    struct Row {
        std::int64_t time;
        GeoPoint pos;
        std::size_t line;
    };
    std::map<std::string, std::vector<Row>> groups;

    std::string line;
    std::size_t lineno = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (lineno == 1 && line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF)
            line.erase(0, 3);  // UTF-8 BOM
        if (detail::trim(line).empty()) {
            if (saw_header) ++out.report.dropped_rows;
            continue;
        }
        if (!saw_header) {
            if (detail::trim(line) != "id,time,lon,lat")
                throw DataError("line " + std::to_string(lineno) +
                                ": expected header 'id,time,lon,lat'");
            saw_header = true;
            continue;
        }
        const std::vector<std::string> f = detail::split_csv(line);
        if (f.size() != 4)
            throw DataError("line " + std::to_string(lineno) + ": expected 4 fields, got " +
                            std::to_string(f.size()));
        Row row;
        row.line = lineno;
        try {
            row.time = detail::parse_time(f[1]);
            row.pos = make_geo_point(detail::parse_double(f[2], "lon"),
                                     detail::parse_double(f[3], "lat"));
        } catch (const std::exception& e) {
            throw DataError("line " + std::to_string(lineno) + ": " + e.what());
        }
        const std::string id = detail::trim(f[0]);
        if (id.empty()) throw DataError("line " + std::to_string(lineno) + ": empty id");
        groups[id].push_back(row);
        ++out.report.rows;
    }

    out.report.source_ids = groups.size();
    for (auto& [id, rows] : groups) {
        std::stable_sort(rows.begin(), rows.end(),
                         [](const Row& a, const Row& b) { return a.time < b.time; });
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (rows[i].time == rows[i - 1].time)
                throw DataError("duplicate (id, time) for id '" + id + "' at line " +
                                std::to_string(rows[i].line));

        std::size_t seg_no = 0;
        Trajectory cur;
        auto flush = [&]() {
            if (cur.positions.empty()) return;
            ++seg_no;
            cur.id = seg_no == 1 ? id : id + "#" + std::to_string(seg_no);
            cur.sample_interval_hours = sample_interval_hours;
            if (cur.positions.size() == 1) ++out.report.single_point_segments;
            ++out.report.segments;
            out.store.trajectories.push_back(std::move(cur));
            cur = Trajectory{};
        };
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i > 0) {
                const std::int64_t dt = rows[i].time - rows[i - 1].time;
                if (dt % interval_s != 0)
                    throw DataError("id '" + id + "' line " + std::to_string(rows[i].line) +
                                    ": spacing " + std::to_string(dt) +
                                    " s is not a multiple of the sample interval " +
                                    std::to_string(interval_s) + " s");
                if (dt != interval_s) flush();
            }
            if (cur.positions.empty()) cur.start_time = rows[i].time;
            cur.positions.push_back(rows[i].pos);
        }
        flush();
    }

    return out;
}

inline TrajectoryStore rotate_store(const TrajectoryStore& s, const Rotation& r) {
    TrajectoryStore out;
    out.sample_interval_hours = s.sample_interval_hours;
    out.trajectories.reserve(s.trajectories.size());
    for (const Trajectory& t : s.trajectories) {
        Trajectory rt;
        rt.id = t.id;
        rt.start_time = t.start_time;
        rt.sample_interval_hours = t.sample_interval_hours;
        rt.positions.reserve(t.positions.size());
        for (const GeoPoint& p : t.positions) rt.positions.push_back(rotate_point(r, p));
        out.trajectories.push_back(std::move(rt));
    }
    return out;
}

// Whole-trajectory resampling: N uniform draws with replacement.
inline TrajectoryStore resample_with_replacement(const TrajectoryStore& s, rng::Engine& eng) {
    if (s.trajectories.empty()) throw DataError("cannot resample an empty store");
    TrajectoryStore out;
    out.sample_interval_hours = s.sample_interval_hours;
    const std::size_t n = s.trajectories.size();
    out.trajectories.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.trajectories.push_back(s.trajectories[rng::uniform_index(eng, n)]);
    return out;
}

}  // namespace driftpath
