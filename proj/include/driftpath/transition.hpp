#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "driftpath/errors.hpp"
#include "driftpath/grid.hpp"
#include "driftpath/ingest.hpp"

namespace driftpath {

struct CellSequence {
    std::vector<CellId> cells;
    double sample_interval_hours = 6.0;
};

inline CellSequence discretize(const Trajectory& t, const SpatialIndex& idx) {
    CellSequence seq;
    seq.sample_interval_hours = t.sample_interval_hours;
    seq.cells.reserve(t.positions.size());
    for (const GeoPoint& p : t.positions) seq.cells.push_back(idx.cell_of(p));
    return seq;
}

// Sparse row-stochastic transition matrix over the visited state set, stored
// compressed-row. States are kept sorted by id so runs are reproducible
// regardless of input order. The state set contains every cell that appears
// in at least one counted pair, as source or destination; destination-only
// states keep an empty row (they stay valid path endpoints).
struct TransitionMatrix {
    SpatialIndex grid = SpatialIndex::hexdggs(3);
    std::vector<CellId> states;
    std::vector<std::size_t> row_ptr;   // states.size() + 1 entries
    std::vector<std::uint32_t> col;     // state index per entry
    std::vector<double> prob;
    std::vector<std::int64_t> row_counts;
    double lagrangian_cutoff_days = 5.0;
    int gap_steps = 20;
    bool edited = false;

    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::size_t num_states() const { return states.size(); }

    std::size_t state_index(CellId c) const {
        const auto it = std::lower_bound(states.begin(), states.end(), c);
        if (it == states.end() || *it != c) return npos;
        return static_cast<std::size_t>(it - states.begin());
    }

    double at(std::size_t i, std::size_t j) const {
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            if (col[k] == j) return prob[k];
        return 0.0;
    }

    double self_prob(std::size_t i) const { return at(i, i); }

    double row_sum(std::size_t i) const {
        double s = 0.0;
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += prob[k];
        return s;
    }
};

namespace detail {

// Rebuilds the CSR arrays from per-row maps keyed by cell id.
inline TransitionMatrix assemble(const SpatialIndex& grid,
                                 const std::map<CellId, std::map<CellId, double>>& rows,
                                 const std::map<CellId, std::int64_t>& counts,
                                 double cutoff_days, int gap_steps, bool edited) {
    TransitionMatrix m;
    m.grid = grid;
    m.lagrangian_cutoff_days = cutoff_days;
    m.gap_steps = gap_steps;
    m.edited = edited;

    std::unordered_set<std::uint64_t> seen;
    for (const auto& [s, row] : rows) {
        seen.insert(s.value);
        for (const auto& [q, p] : row) {
            (void)p;
            seen.insert(q.value);
        }
    }
    for (const auto& [s, c] : counts) {
        (void)c;
        seen.insert(s.value);
    }
    m.states.reserve(seen.size());
    for (std::uint64_t v : seen) m.states.push_back({v});
    std::sort(m.states.begin(), m.states.end());

    m.row_ptr.assign(m.states.size() + 1, 0);
    m.row_counts.assign(m.states.size(), 0);
    for (std::size_t i = 0; i < m.states.size(); ++i) {
        m.row_ptr[i] = m.col.size();
        if (const auto rit = rows.find(m.states[i]); rit != rows.end()) {
            for (const auto& [q, p] : rit->second) {
                m.col.push_back(static_cast<std::uint32_t>(m.state_index(q)));
                m.prob.push_back(p);
            }
        }
        if (const auto cit = counts.find(m.states[i]); cit != counts.end())
            m.row_counts[i] = cit->second;
    }
    m.row_ptr[m.states.size()] = m.col.size();
    return m;
}

}  // namespace detail

// Direct constructor for synthetic matrices: entries are (row state index,
// col state index, probability) over the given state list.
inline TransitionMatrix matrix_from_entries(
    const SpatialIndex& grid, std::vector<CellId> states,
    std::vector<std::tuple<std::size_t, std::size_t, double>> entries,
    double cutoff_days = 5.0, int gap_steps = 1) {
    std::sort(states.begin(), states.end());
    std::map<CellId, std::map<CellId, double>> rows;
    std::map<CellId, std::int64_t> counts;
    for (const CellId& s : states) counts[s] = 0;
    for (const auto& [i, j, p] : entries) {
        rows[states.at(i)][states.at(j)] = p;
        ++counts[states.at(i)];
    }
    return detail::assemble(grid, rows, counts, cutoff_days, gap_steps, false);
}

// The gap-method estimate: pooled counts of state pairs (g_i, g_{i+gap}) at
// every start index, normalized per source row.
inline TransitionMatrix estimate_matrix(const TrajectoryStore& s, const SpatialIndex& idx,
                                        double cutoff_days) {
    if (s.trajectories.empty()) throw DataError("cannot estimate a matrix from an empty store");
    if (!(cutoff_days > 0)) throw std::invalid_argument("cutoff must be positive");

    const double gap_real = cutoff_days * 24.0 / s.sample_interval_hours;
    const double gap_round = std::round(gap_real);
    if (gap_round < 1.0 || std::fabs(gap_real - gap_round) > 1e-9)
        throw DataError("cutoff of " + std::to_string(cutoff_days) +
                        " days is not a whole positive number of samples at " +
                        std::to_string(s.sample_interval_hours) + " h spacing");
    const int gap = static_cast<int>(gap_round);

    std::unordered_map<std::uint64_t, std::unordered_map<std::uint64_t, std::int64_t>> pair_counts;
    std::unordered_map<std::uint64_t, std::int64_t> row_totals;
    std::unordered_set<std::uint64_t> dest_only;

    for (const Trajectory& t : s.trajectories) {
        const CellSequence seq = discretize(t, idx);
        const std::size_t n = seq.cells.size();
        if (n <= static_cast<std::size_t>(gap)) continue;
        for (std::size_t i = 0; i + gap < n; ++i) {
            const std::uint64_t a = seq.cells[i].value;
            const std::uint64_t b = seq.cells[i + gap].value;
            ++pair_counts[a][b];
            ++row_totals[a];
            dest_only.insert(b);
        }
    }

    std::map<CellId, std::map<CellId, double>> rows;
    std::map<CellId, std::int64_t> counts;
    for (const auto& [a, row] : pair_counts) {
        const double total = static_cast<double>(row_totals.at(a));
        for (const auto& [b, c] : row) rows[{a}][{b}] = static_cast<double>(c) / total;
        counts[{a}] = row_totals.at(a);
    }
    for (std::uint64_t b : dest_only)
        if (counts.find({b}) == counts.end()) counts[{b}] = 0;

    return detail::assemble(idx, rows, counts, cutoff_days, gap, false);
}

struct RemoveReport {
    std::vector<CellId> removed;          // barrier cells deleted from the state set
    std::vector<GeoPoint> absent_points;  // barrier points whose cell was not a state
};

// Deletes the rows and columns of every cell containing a barrier point.
// Surviving rows are deliberately NOT renormalized: probability mass into the
// removed states vanishes and the matrix is flagged edited.
inline TransitionMatrix remove_states(const TransitionMatrix& T,
                                      const std::vector<GeoPoint>& barriers,
                                      const SpatialIndex& idx, RemoveReport* report = nullptr) {
    if (!(idx == T.grid))
        throw std::invalid_argument("barrier grid does not match the matrix grid");

    std::unordered_set<std::uint64_t> doomed;
    RemoveReport local;
    for (const GeoPoint& p : barriers) {
        const CellId c = idx.cell_of(p);
        if (T.state_index(c) != TransitionMatrix::npos) {
            if (doomed.insert(c.value).second) local.removed.push_back(c);
        } else {
            local.absent_points.push_back(p);
        }
    }
    if (report != nullptr) *report = local;
    if (doomed.empty()) return T;

    std::map<CellId, std::map<CellId, double>> rows;
    std::map<CellId, std::int64_t> counts;
    for (std::size_t i = 0; i < T.num_states(); ++i) {
        if (doomed.count(T.states[i].value)) continue;
        counts[T.states[i]] = T.row_counts[i];
        for (std::size_t k = T.row_ptr[i]; k < T.row_ptr[i + 1]; ++k) {
            const CellId q = T.states[T.col[k]];
            if (doomed.count(q.value)) continue;
            rows[T.states[i]][q] = T.prob[k];
        }
    }
    return detail::assemble(T.grid, rows, counts, T.lagrangian_cutoff_days, T.gap_steps, true);
}

// Adds an artificial transition from the cell at `from` to the cell at `to`,
// sized so the per-edge expected crossing time equals crossing_days:
// T[e][e]/T[e][w] + 1 = crossing_days / T_L. Row e stops summing to 1; the
// result is flagged edited.
inline TransitionMatrix inject_transition(const TransitionMatrix& T, const GeoPoint& from,
                                          const GeoPoint& to, const SpatialIndex& idx,
                                          double crossing_days) {
    if (!(idx == T.grid))
        throw std::invalid_argument("injection grid does not match the matrix grid");
    if (!(crossing_days > T.lagrangian_cutoff_days))
        throw std::invalid_argument("crossing time must exceed the Lagrangian cutoff");

    const CellId e = idx.cell_of(from);
    const CellId w = idx.cell_of(to);
    const std::size_t ie = T.state_index(e);
    if (ie == TransitionMatrix::npos)
        throw UnknownStateError("injection source cell " + to_hex_string(e) + " is not a state");
    const double t_ee = T.self_prob(ie);
    if (t_ee <= 0.0)
        throw DataError("cell " + to_hex_string(e) +
                        " has no self-transition; crossing time cannot be tuned");

    const double t_ew = t_ee / (crossing_days / T.lagrangian_cutoff_days - 1.0);

    std::map<CellId, std::map<CellId, double>> rows;
    std::map<CellId, std::int64_t> counts;
    for (std::size_t i = 0; i < T.num_states(); ++i) {
        counts[T.states[i]] = T.row_counts[i];
        for (std::size_t k = T.row_ptr[i]; k < T.row_ptr[i + 1]; ++k)
            rows[T.states[i]][T.states[T.col[k]]] = T.prob[k];
    }
    if (counts.find(w) == counts.end()) counts[w] = 0;
    rows[e][w] = t_ew;
    return detail::assemble(T.grid, rows, counts, T.lagrangian_cutoff_days, T.gap_steps, true);
}

// ---------------------------------------------------------------------------
// Persistence: <base>.states.csv (hex ids, one per line), <base>.triplets.csv
// (row,col,prob indices into the states file), <base>.meta (key=value lines).
// Probabilities are written with 17 significant digits so the round-trip is
// bit-exact.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline void save_matrix(const TransitionMatrix& T, const std::string& base) {
    {
        std::ofstream out(base + ".states.csv");
        if (!out) throw DataError("cannot write " + base + ".states.csv");
        for (const CellId& s : T.states) out << to_hex_string(s) << "\n";
    }
    {
        std::ofstream out(base + ".triplets.csv");
        if (!out) throw DataError("cannot write " + base + ".triplets.csv");
        out << "row,col,prob\n";
        for (std::size_t i = 0; i < T.num_states(); ++i)
            for (std::size_t k = T.row_ptr[i]; k < T.row_ptr[i + 1]; ++k)
                out << i << "," << T.col[k] << "," << detail::fmt_g17(T.prob[k]) << "\n";
    }
    {
        std::ofstream out(base + ".meta");
        if (!out) throw DataError("cannot write " + base + ".meta");
        if (T.grid.kind() == GridKind::hexdggs) {
            out << "kind=hexdggs\n";
            out << "resolution=" << T.grid.resolution() << "\n";
        } else {
            out << "kind=lonlat\n";
            out << "cell_size_deg=" << detail::fmt_g17(T.grid.cell_size_deg()) << "\n";
        }
        out << "t_l_days=" << detail::fmt_g17(T.lagrangian_cutoff_days) << "\n";
        out << "gap_steps=" << T.gap_steps << "\n";
        out << "edited=" << (T.edited ? 1 : 0) << "\n";
        out << "row_counts=";
        for (std::size_t i = 0; i < T.row_counts.size(); ++i) {
            if (i) out << ",";
            out << T.row_counts[i];
        }
        out << "\n";
    }
}

inline TransitionMatrix load_matrix(const std::string& base) {
    std::ifstream meta(base + ".meta");
    if (!meta) throw DataError("cannot open " + base + ".meta");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(meta, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    for (const char* key : {"kind", "t_l_days", "gap_steps", "edited", "row_counts"})
        if (kv.find(key) == kv.end())
            throw DataError(base + ".meta: missing key '" + std::string(key) + "'");

    TransitionMatrix T;
    if (kv["kind"] == "hexdggs") {
        if (kv.find("resolution") == kv.end()) throw DataError(base + ".meta: missing resolution");
        T.grid = SpatialIndex::hexdggs(std::atoi(kv["resolution"].c_str()));
    } else if (kv["kind"] == "lonlat") {
        if (kv.find("cell_size_deg") == kv.end())
            throw DataError(base + ".meta: missing cell_size_deg");
        T.grid = SpatialIndex::lonlat(std::strtod(kv["cell_size_deg"].c_str(), nullptr));
    } else {
        throw DataError(base + ".meta: unknown grid kind '" + kv["kind"] + "'");
    }
    T.lagrangian_cutoff_days = std::strtod(kv["t_l_days"].c_str(), nullptr);
    T.gap_steps = std::atoi(kv["gap_steps"].c_str());
    T.edited = kv["edited"] == "1";

    std::ifstream st(base + ".states.csv");
    if (!st) throw DataError("cannot open " + base + ".states.csv");
    while (std::getline(st, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        T.states.push_back(parse_cell(line));
    }
    for (std::size_t i = 1; i < T.states.size(); ++i)
        if (!(T.states[i - 1] < T.states[i]))
            throw DataError(base + ".states.csv: states not strictly increasing");

    T.row_counts.assign(T.num_states(), 0);
    {
        std::size_t i = 0;
        std::stringstream ss(kv["row_counts"]);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            if (i >= T.row_counts.size())
                throw DataError(base + ".meta: more row_counts than states");
            T.row_counts[i++] = std::strtoll(tok.c_str(), nullptr, 10);
        }
        if (i != T.row_counts.size() && !T.states.empty())
            throw DataError(base + ".meta: row_counts length mismatch");
    }

    std::ifstream tr(base + ".triplets.csv");
    if (!tr) throw DataError("cannot open " + base + ".triplets.csv");
    std::getline(tr, line);  // header
    T.row_ptr.assign(T.num_states() + 1, 0);
    std::size_t cur_row = 0;
    std::size_t lineno = 1;
    while (std::getline(tr, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t row, colv;
        double p;
        char extra;
        if (std::sscanf(line.c_str(), "%zu,%zu,%lf%c", &row, &colv, &p, &extra) != 3)
            throw DataError(base + ".triplets.csv line " + std::to_string(lineno) +
                            ": malformed triplet");
        if (row >= T.num_states() || colv >= T.num_states())
            throw DataError(base + ".triplets.csv line " + std::to_string(lineno) +
                            ": index out of range");
        if (row < cur_row)
            throw DataError(base + ".triplets.csv: rows out of order");
        while (cur_row < row) T.row_ptr[++cur_row] = T.col.size();
        T.col.push_back(static_cast<std::uint32_t>(colv));
        T.prob.push_back(p);
    }
    while (cur_row < T.num_states()) T.row_ptr[++cur_row] = T.col.size();
    return T;
}

// Exact structural equality, doubles compared bitwise (persistence tests).
inline bool matrices_identical(const TransitionMatrix& a, const TransitionMatrix& b) {
    auto bits = [](double x) {
        std::uint64_t u;
        std::memcpy(&u, &x, sizeof u);
        return u;
    };
    if (!(a.grid == b.grid) || a.states != b.states || a.row_ptr != b.row_ptr ||
        a.col != b.col || a.row_counts != b.row_counts || a.gap_steps != b.gap_steps ||
        a.edited != b.edited)
        return false;
    if (bits(a.lagrangian_cutoff_days) != bits(b.lagrangian_cutoff_days)) return false;
    if (a.prob.size() != b.prob.size()) return false;
    for (std::size_t i = 0; i < a.prob.size(); ++i)
        if (bits(a.prob[i]) != bits(b.prob[i])) return false;
    return true;
}

}  // namespace driftpath
