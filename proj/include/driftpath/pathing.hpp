#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <tuple>
#include <vector>

#include "driftpath/errors.hpp"
#include "driftpath/transition.hpp"

namespace driftpath {

// A state sequence with consecutive entries distinct. A single-cell path is
// the o = d case: zero edges, probability 1.
struct Path {
    std::vector<CellId> cells;
    double log_probability = 0.0;
};

// Expected travel time along a path. steps is in cutoff units (each edge
// contributes its expected holding time, at least 1); days = steps * T_L.
struct TravelTimeEstimate {
    double steps = 0.0;
    double days = 0.0;
    std::vector<double> per_edge;
};

enum class TimeObjective { most_likely, shortest_time };
enum class MapDirection { from_anchor, to_anchor };

// Directed graph over the matrix states: one edge per strictly positive
// off-diagonal entry, weighted -ln T[i][j]. Self-loops are excluded (paths
// never repeat a cell consecutively); they re-enter through holding times.
struct PathGraph {
    struct Edge {
        std::uint32_t to;
        double weight;  // -ln prob
        double prob;
    };
    std::vector<CellId> states;
    std::vector<std::vector<Edge>> out;
    std::vector<double> self_prob;
    double lagrangian_cutoff_days = 5.0;

    std::size_t state_index(CellId c) const {
        const auto it = std::lower_bound(states.begin(), states.end(), c);
        if (it == states.end() || *it != c) return TransitionMatrix::npos;
        return static_cast<std::size_t>(it - states.begin());
    }
};

inline PathGraph build_graph(const TransitionMatrix& T) {
    PathGraph g;
    g.states = T.states;
    g.lagrangian_cutoff_days = T.lagrangian_cutoff_days;
    g.out.resize(T.num_states());
    g.self_prob.assign(T.num_states(), 0.0);
    for (std::size_t i = 0; i < T.num_states(); ++i) {
        for (std::size_t k = T.row_ptr[i]; k < T.row_ptr[i + 1]; ++k) {
            const std::uint32_t j = T.col[k];
            const double p = T.prob[k];
            if (p <= 0.0) continue;
            if (j == i) {
                g.self_prob[i] = p;
            } else {
                g.out[i].push_back({j, -std::log(p), p});
            }
        }
    }
    return g;
}

namespace detail {

struct EdgeRef {
    std::uint32_t to;
    double weight;
};

constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

// Nonnegative-weight single-source search. The frontier pops by
// (distance, cell id), so at equal distance the smaller cell expands first
// and becomes the retained parent: run-to-run deterministic paths.
struct SearchTree {
    std::vector<double> dist;
    std::vector<std::size_t> parent;
};

inline SearchTree dijkstra(const std::vector<std::vector<EdgeRef>>& adj,
                           const std::vector<CellId>& states, std::size_t source) {
    const std::size_t n = adj.size();
    SearchTree t;
    t.dist.assign(n, std::numeric_limits<double>::infinity());
    t.parent.assign(n, kNoParent);
    std::vector<char> done(n, 0);

    using Item = std::tuple<double, std::uint64_t, std::uint32_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    t.dist[source] = 0.0;
    heap.emplace(0.0, states[source].value, static_cast<std::uint32_t>(source));

    while (!heap.empty()) {
        const auto [d, id, u] = heap.top();
        heap.pop();
        (void)id;
        if (done[u]) continue;
        done[u] = 1;
        for (const EdgeRef& e : adj[u]) {
            const double nd = d + e.weight;
            if (nd < t.dist[e.to]) {
                t.dist[e.to] = nd;
                t.parent[e.to] = u;
                heap.emplace(nd, states[e.to].value, e.to);
            }
        }
    }
    return t;
}

inline std::vector<std::size_t> walk_parents(const SearchTree& t, std::size_t source,
                                             std::size_t target) {
    std::vector<std::size_t> chain;
    for (std::size_t v = target; v != kNoParent; v = t.parent[v]) {
        chain.push_back(v);
        if (v == source) break;
    }
    std::reverse(chain.begin(), chain.end());
    return chain;  // source .. target in search order
}

inline std::size_t require_state(const PathGraph& g, CellId c, const char* role) {
    const std::size_t i = g.state_index(c);
    if (i == TransitionMatrix::npos)
        throw UnknownStateError(std::string(role) + " cell " + to_hex_string(c) +
                                " is not a state of the matrix");
    return i;
}

inline std::vector<std::vector<EdgeRef>> objective_adjacency(const PathGraph& g,
                                                             TimeObjective objective,
                                                             bool reversed) {
    std::vector<std::vector<EdgeRef>> adj(g.out.size());
    for (std::size_t u = 0; u < g.out.size(); ++u) {
        for (const PathGraph::Edge& e : g.out[u]) {
            const double w = objective == TimeObjective::most_likely
                                 ? e.weight
                                 : g.self_prob[u] / e.prob + 1.0;
            if (reversed) {
                adj[e.to].push_back({static_cast<std::uint32_t>(u), w});
            } else {
                adj[u].push_back({e.to, w});
            }
        }
    }
    return adj;
}

inline Path path_from_chain(const PathGraph& g, const std::vector<std::size_t>& chain) {
    Path p;
    p.cells.reserve(chain.size());
    for (std::size_t v : chain) p.cells.push_back(g.states[v]);
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        for (const PathGraph::Edge& e : g.out[chain[i]]) {
            if (e.to == chain[i + 1]) {
                p.log_probability += std::log(e.prob);
                break;
            }
        }
    }
    return p;
}

}  // namespace detail

// The path maximizing the product of transition probabilities, found as the
// minimum of summed -ln T over the graph (exact: absence of a path in the
// search means no path exists).
inline Path most_likely_path(const PathGraph& g, CellId o, CellId d) {
    const std::size_t io = detail::require_state(g, o, "origin");
    const std::size_t id = detail::require_state(g, d, "destination");
    if (io == id) return Path{{o}, 0.0};

    const auto adj = detail::objective_adjacency(g, TimeObjective::most_likely, false);
    const detail::SearchTree t = detail::dijkstra(adj, g.states, io);
    if (!std::isfinite(t.dist[id]))
        throw DisconnectedError("no path from " + to_hex_string(o) + " to " + to_hex_string(d));
    return detail::path_from_chain(g, detail::walk_parents(t, io, id));
}

// Probability that the chain dwells exactly k steps in i before moving to j,
// conditioned on the next path cell being j: a^{k-1}(1-a) with
// a = T[i][i] / (T[i][i] + T[i][j]).
inline double holding_time_pmf(const TransitionMatrix& T, CellId i, CellId j, long k) {
    if (i == j) throw std::invalid_argument("holding time needs distinct cells");
    if (k < 1) throw std::invalid_argument("holding time index starts at 1");
    const std::size_t ii = T.state_index(i);
    const std::size_t ij = T.state_index(j);
    if (ii == TransitionMatrix::npos || ij == TransitionMatrix::npos)
        throw UnknownStateError("holding time cells must be states of the matrix");
    const double tii = T.at(ii, ii);
    const double tij = T.at(ii, ij);
    // a = 1 would put zero mass on every k; the law needs a positive jump probability
    if (tij <= 0.0)
        throw DataError("zero transition probability on edge " + to_hex_string(i) + " -> " +
                        to_hex_string(j));
    const double a = tii / (tii + tij);
    return std::pow(a, static_cast<double>(k - 1)) * (1.0 - a);
}

// Expected number of cutoff steps along the path: each edge contributes the
// mean of its holding-time law, T[i][i]/T[i][j] + 1.
inline TravelTimeEstimate expected_travel_time(const TransitionMatrix& T, const Path& p) {
    TravelTimeEstimate est;
    for (std::size_t n = 0; n + 1 < p.cells.size(); ++n) {
        const CellId a = p.cells[n];
        const CellId b = p.cells[n + 1];
        const std::size_t ia = T.state_index(a);
        const std::size_t ib = T.state_index(b);
        if (ia == TransitionMatrix::npos || ib == TransitionMatrix::npos)
            throw UnknownStateError("path cell " +
                                    to_hex_string(ia == TransitionMatrix::npos ? a : b) +
                                    " is not a state of the matrix");
        const double pab = T.at(ia, ib);
        if (pab <= 0.0)
            throw DataError("zero transition probability on path edge " + to_hex_string(a) +
                            " -> " + to_hex_string(b));
        est.per_edge.push_back(T.at(ia, ia) / pab + 1.0);
        est.steps += est.per_edge.back();
    }
    est.days = est.steps * T.lagrangian_cutoff_days;
    return est;
}

// Minimizes the expected travel time itself: per-edge weights are the
// expected holding times (all >= 1, so the same nonnegative-weight search
// applies).
inline std::pair<Path, TravelTimeEstimate> shortest_time_path(const TransitionMatrix& T,
                                                              CellId o, CellId d) {
    const PathGraph g = build_graph(T);
    const std::size_t io = detail::require_state(g, o, "origin");
    const std::size_t id = detail::require_state(g, d, "destination");
    if (io == id) {
        Path p{{o}, 0.0};
        return {p, expected_travel_time(T, p)};
    }
    const auto adj = detail::objective_adjacency(g, TimeObjective::shortest_time, false);
    const detail::SearchTree t = detail::dijkstra(adj, g.states, io);
    if (!std::isfinite(t.dist[id]))
        throw DisconnectedError("no path from " + to_hex_string(o) + " to " + to_hex_string(d));
    const Path p = detail::path_from_chain(g, detail::walk_parents(t, io, id));
    return {p, expected_travel_time(T, p)};
}

// Single-source travel times between the anchor and every reachable cell.
// One search builds the shortest-path tree in the chosen objective; times are
// then evaluated along tree paths (oriented forward for to_anchor queries).
inline std::map<CellId, TravelTimeEstimate> one_to_all_times(const TransitionMatrix& T,
                                                             CellId anchor,
                                                             MapDirection direction,
                                                             TimeObjective objective) {
    const PathGraph g = build_graph(T);
    const std::size_t ia = detail::require_state(g, anchor, "anchor");
    const bool reversed = direction == MapDirection::to_anchor;
    const auto adj = detail::objective_adjacency(g, objective, reversed);
    const detail::SearchTree t = detail::dijkstra(adj, g.states, ia);

    std::map<CellId, TravelTimeEstimate> out;
    for (std::size_t v = 0; v < g.states.size(); ++v) {
        if (!std::isfinite(t.dist[v])) continue;
        std::vector<std::size_t> chain = detail::walk_parents(t, ia, v);
        if (reversed) std::reverse(chain.begin(), chain.end());  // forward: cell -> anchor
        out[g.states[v]] = expected_travel_time(T, detail::path_from_chain(g, chain));
    }
    return out;
}

}  // namespace driftpath
