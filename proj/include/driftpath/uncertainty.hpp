#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "driftpath/errors.hpp"
#include "driftpath/geo.hpp"
#include "driftpath/ingest.hpp"
#include "driftpath/pathing.hpp"
#include "driftpath/rng.hpp"
#include "driftpath/transition.hpp"

namespace driftpath {

using PairQuery = std::pair<GeoPoint, GeoPoint>;  // origin, destination

enum class MemberStatus {
    ok,            // path found, positive travel time possible
    zero,          // both endpoints landed in the same cell (time 0, a success)
    disconnected,  // no path under this member's matrix
    unknown_state  // an endpoint cell held no data under this member
};

inline const char* to_string(MemberStatus s) {
    switch (s) {
        case MemberStatus::ok: return "ok";
        case MemberStatus::zero: return "zero";
        case MemberStatus::disconnected: return "disconnected";
        default: return "unknown_state";
    }
}

// One ensemble member's answer for one pair. display_path holds base-frame
// positions (cell centroids; for rotation members they are mapped back
// through the inverse rotation).
struct MemberOutcome {
    std::uint64_t seed = 0;
    MemberStatus status = MemberStatus::disconnected;
    double days = std::numeric_limits<double>::quiet_NaN();
    std::vector<GeoPoint> display_path;

    bool success() const {
        return status == MemberStatus::ok || status == MemberStatus::zero;
    }
};

struct BootstrapResult {
    std::vector<MemberOutcome> members;  // one per bootstrap sample
    double mean_days = std::numeric_limits<double>::quiet_NaN();
    double sd_days = std::numeric_limits<double>::quiet_NaN();
    std::size_t failure_count = 0;
    bool available = false;
};

struct RotationEnsembleResult {
    std::vector<MemberOutcome> members;  // one per rotation
    double mean_days = std::numeric_limits<double>::quiet_NaN();  // zeros included
    double sd_days = std::numeric_limits<double>::quiet_NaN();
    std::size_t zero_count = 0;
    std::size_t failure_count = 0;
    bool available = false;
};

namespace detail {

// Deterministic work pool: members are independent, results land in
// preassigned slots, so the reduction order (and output) never depends on
// scheduling.
template <typename Fn>
void parallel_members(std::size_t count, int jobs, Fn&& fn) {
    if (jobs < 1) jobs = 1;
    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(jobs), count == 0 ? 1 : count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Streaming mean/sd (divisor n-1). Identical inputs give an exactly zero
// spread, which the degenerate one-trajectory bootstrap relies on.
struct RunningStats {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double sd() const {
        return n < 2 ? 0.0 : std::sqrt(m2 / static_cast<double>(n - 1));
    }
};

inline void aggregate(const std::vector<MemberOutcome>& members, double& mean, double& sd,
                      std::size_t& failures, bool& available) {
    RunningStats stats;
    for (const MemberOutcome& m : members)
        if (m.success()) stats.add(m.days);
    failures = members.size() - stats.n;
    available = stats.n > 0;
    if (!available) return;
    mean = stats.mean;
    sd = stats.sd();
}

inline std::vector<GeoPoint> centroid_path(const SpatialIndex& idx, const Path& p,
                                           const Rotation& back) {
    std::vector<GeoPoint> out;
    out.reserve(p.cells.size());
    for (const CellId& c : p.cells) out.push_back(rotate_point(back, idx.cell_centroid(c)));
    return out;
}

inline MemberOutcome query_pair(const TransitionMatrix& T, const PathGraph& g,
                                const SpatialIndex& idx, CellId oc, CellId dc,
                                const Rotation& back) {
    MemberOutcome out;
    if (oc == dc) {
        out.status = MemberStatus::zero;
        out.days = 0.0;
        out.display_path = centroid_path(idx, Path{{oc}, 0.0}, back);
        return out;
    }
    try {
        const Path p = most_likely_path(g, oc, dc);
        out.days = expected_travel_time(T, p).days;
        out.status = MemberStatus::ok;
        out.display_path = centroid_path(idx, p, back);
    } catch (const UnknownStateError&) {
        out.status = MemberStatus::unknown_state;
    } catch (const DisconnectedError&) {
        out.status = MemberStatus::disconnected;
    }
    return out;
}

}  // namespace detail

// One bootstrap member: resample, re-estimate, remove barriers, answer every
// pair. Exposed so seed-level behavior is testable in isolation.
inline std::vector<MemberOutcome> bootstrap_member(const TrajectoryStore& s,
                                                   const SpatialIndex& idx,
                                                   const std::vector<PairQuery>& pairs,
                                                   double cutoff_days,
                                                   const std::vector<GeoPoint>& barriers,
                                                   std::uint64_t member_seed) {
    rng::Engine eng(member_seed);
    const TrajectoryStore resampled = resample_with_replacement(s, eng);
    const TransitionMatrix T =
        remove_states(estimate_matrix(resampled, idx, cutoff_days), barriers, idx);
    const PathGraph g = build_graph(T);
    std::vector<MemberOutcome> out;
    out.reserve(pairs.size());
    for (const PairQuery& pq : pairs) {
        MemberOutcome m = detail::query_pair(T, g, idx, idx.cell_of(pq.first),
                                             idx.cell_of(pq.second), Rotation::identity());
        m.seed = member_seed;
        out.push_back(std::move(m));
    }
    return out;
}

// One rotation member with a fixed rotation: rotate data, barriers, and query
// points together, then run the standard pipeline in the rotated frame.
inline std::vector<MemberOutcome> rotation_member(const TrajectoryStore& s,
                                                  const SpatialIndex& idx,
                                                  const std::vector<PairQuery>& pairs,
                                                  const Rotation& rot, double cutoff_days,
                                                  const std::vector<GeoPoint>& barriers) {
    const TrajectoryStore rotated = rotate_store(s, rot);
    std::vector<GeoPoint> rot_barriers;
    rot_barriers.reserve(barriers.size());
    for (const GeoPoint& b : barriers) rot_barriers.push_back(rotate_point(rot, b));
    const TransitionMatrix T =
        remove_states(estimate_matrix(rotated, idx, cutoff_days), rot_barriers, idx);
    const PathGraph g = build_graph(T);
    const Rotation back = rot.inverse();
    std::vector<MemberOutcome> out;
    out.reserve(pairs.size());
    for (const PairQuery& pq : pairs) {
        const CellId oc = idx.cell_of(rotate_point(rot, pq.first));
        const CellId dc = idx.cell_of(rotate_point(rot, pq.second));
        out.push_back(detail::query_pair(T, g, idx, oc, dc, back));
    }
    return out;
}

// Whole-trajectory bootstrap over the full pipeline, one result per pair.
// Member seeds derive from the master seed by index, so results are identical
// for any `jobs` setting.
inline std::vector<BootstrapResult> bootstrap_travel_times(
    const TrajectoryStore& s, const SpatialIndex& idx, const std::vector<PairQuery>& pairs,
    std::size_t B, double cutoff_days, const std::vector<GeoPoint>& barriers,
    std::uint64_t seed, int jobs = 1) {
    if (B < 2) throw std::invalid_argument("bootstrap needs B >= 2");
    std::vector<std::vector<MemberOutcome>> by_member(B);
    detail::parallel_members(B, jobs, [&](std::size_t b) {
        by_member[b] = bootstrap_member(s, idx, pairs, cutoff_days, barriers,
                                        rng::derive_seed(seed, b));
    });

    std::vector<BootstrapResult> results(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        BootstrapResult& r = results[p];
        r.members.reserve(B);
        for (std::size_t b = 0; b < B; ++b) r.members.push_back(by_member[b][p]);
        detail::aggregate(r.members, r.mean_days, r.sd_days, r.failure_count, r.available);
    }
    return results;
}

// Random-rotation ensemble; time 0 entries (endpoints sharing a cell) are
// successes and enter the means.
inline std::vector<RotationEnsembleResult> rotation_ensemble(
    const TrajectoryStore& s, const SpatialIndex& idx, const std::vector<PairQuery>& pairs,
    std::size_t n_rot, double cutoff_days, const std::vector<GeoPoint>& barriers,
    std::uint64_t seed, int jobs = 1) {
    if (n_rot < 1) throw std::invalid_argument("rotation ensemble needs n_rot >= 1");
    std::vector<std::vector<MemberOutcome>> by_member(n_rot);
    detail::parallel_members(n_rot, jobs, [&](std::size_t m) {
        const std::uint64_t member_seed = rng::derive_seed(seed, m);
        rng::Engine eng(member_seed);
        const Rotation rot = sample_uniform_rotation(eng);
        std::vector<MemberOutcome> outcomes =
            rotation_member(s, idx, pairs, rot, cutoff_days, barriers);
        for (MemberOutcome& o : outcomes) o.seed = member_seed;
        by_member[m] = std::move(outcomes);
    });

    std::vector<RotationEnsembleResult> results(pairs.size());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        RotationEnsembleResult& r = results[p];
        r.members.reserve(n_rot);
        for (std::size_t m = 0; m < n_rot; ++m) r.members.push_back(by_member[m][p]);
        detail::aggregate(r.members, r.mean_days, r.sd_days, r.failure_count, r.available);
        for (const MemberOutcome& m : r.members)
            if (m.status == MemberStatus::zero) ++r.zero_count;
    }
    return results;
}

// Pooled uncertainty over an n_rot x B sample matrix (NaN marks failures).
// pooled: one standard deviation over all samples (discretization + data).
// per_rotation_mean: mean of the within-rotation standard deviations (data
// sampling alone).
enum class PoolMode { pooled, per_rotation_mean };

inline double pooled_standard_error(const std::vector<std::vector<double>>& rot_boot,
                                    PoolMode mode) {
    if (mode == PoolMode::pooled) {
        detail::RunningStats all;
        for (const auto& row : rot_boot)
            for (double x : row)
                if (std::isfinite(x)) all.add(x);
        if (all.n < 2) throw DataError("pooled standard error needs at least 2 samples");
        return all.sd();
    }

    double total = 0.0;
    std::size_t rows = 0;
    for (const auto& row : rot_boot) {
        detail::RunningStats within;
        for (double x : row)
            if (std::isfinite(x)) within.add(x);
        if (within.n < 2) continue;
        total += within.sd();
        ++rows;
    }
    if (rows == 0)
        throw DataError("per-rotation standard error needs a rotation with >= 2 samples");
    return total / static_cast<double>(rows);
}

}  // namespace driftpath
