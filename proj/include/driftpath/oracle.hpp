#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftpath/errors.hpp"
#include "driftpath/pathing.hpp"
#include "driftpath/rng.hpp"
#include "driftpath/transition.hpp"

// Brute-force validators. These deliberately re-derive results by the most
// literal method available so they can cross-check the estimator and the
// graph searches on small instances.

namespace driftpath {

struct ChainRun {
    std::vector<CellId> states;
    std::size_t steps = 0;  // transitions taken
};

// Samples a realization of the chain from `start`. Refuses edited matrices:
// their rows no longer define probability distributions.
inline ChainRun simulate_chain(const TransitionMatrix& T, CellId start, std::size_t max_steps,
                               rng::Engine& eng) {
    if (T.edited)
        throw std::invalid_argument("cannot simulate an edited matrix (rows not stochastic)");
    std::size_t cur = T.state_index(start);
    if (cur == TransitionMatrix::npos)
        throw UnknownStateError("start cell " + to_hex_string(start) + " is not a state");

    ChainRun run;
    run.states.push_back(start);
    while (run.steps < max_steps) {
        const std::size_t lo = T.row_ptr[cur], hi = T.row_ptr[cur + 1];
        if (lo == hi) break;  // absorbing: no outgoing mass
        const double u = rng::uniform01(eng);
        double acc = 0.0;
        std::size_t pick = hi - 1;  // fp guard: fall through to the last entry
        for (std::size_t k = lo; k < hi; ++k) {
            acc += T.prob[k];
            if (u < acc) {
                pick = k;
                break;
            }
        }
        cur = T.col[pick];
        run.states.push_back(T.states[cur]);
        ++run.steps;
    }
    return run;
}

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;
};

// Monte Carlo holding time for edge i -> j: repeated draws over the
// renormalized two-outcome law {stay in i, jump to j} until the jump occurs.
inline McEstimate constrained_edge_time_mc(const TransitionMatrix& T, CellId i, CellId j,
                                           std::size_t n_samples, rng::Engine& eng) {
    if (n_samples < 1) throw std::invalid_argument("need at least one sample");
    const std::size_t ii = T.state_index(i);
    const std::size_t ij = T.state_index(j);
    if (ii == TransitionMatrix::npos || ij == TransitionMatrix::npos)
        throw UnknownStateError("holding time cells must be states of the matrix");
    const double tii = T.at(ii, ii);
    const double tij = T.at(ii, ij);
    // the law conditions on the jump happening; with zero jump mass it never does
    if (tij <= 0.0)
        throw DataError("zero transition probability on edge " + to_hex_string(i) + " -> " +
                        to_hex_string(j));
    const double a = tii / (tii + tij);

    double sum = 0.0, sumsq = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        double k = 1.0;
        while (rng::uniform01(eng) < a) k += 1.0;
        sum += k;
        sumsq += k * k;
    }
    McEstimate est;
    est.mean = sum / static_cast<double>(n_samples);
    if (n_samples > 1) {
        const double var =
            (sumsq - sum * sum / static_cast<double>(n_samples)) /
            static_cast<double>(n_samples - 1);
        est.se = std::sqrt(var < 0 ? 0 : var) / std::sqrt(static_cast<double>(n_samples));
    }
    return est;
}

// Exhaustive optimum over simple paths o -> d. Simple paths suffice for both
// objectives: every edge weight is nonnegative (-ln T >= 0 because T <= 1;
// per-edge expected times are >= 1), so cutting a cycle out of any walk never
// increases the objective, and some optimal path is cycle-free.
inline Path enumerate_best_path(const TransitionMatrix& T, CellId o, CellId d,
                                TimeObjective objective) {
    if (T.num_states() > 12)
        throw std::invalid_argument("exhaustive enumeration is limited to 12 states");
    const std::size_t io = T.state_index(o);
    const std::size_t id = T.state_index(d);
    if (io == TransitionMatrix::npos || id == TransitionMatrix::npos)
        throw UnknownStateError("origin or destination is not a state of the matrix");
    if (io == id) return Path{{o}, 0.0};

    const std::size_t n = T.num_states();
    struct Cand {
        std::vector<std::size_t> chain;
        double value;
    };
    bool found = false;
    Cand best;

    std::vector<std::size_t> chain{io};
    std::vector<char> used(n, 0);
    used[io] = 1;

    auto edge_value = [&](std::size_t u, std::size_t v) {
        const double p = T.at(u, v);
        return objective == TimeObjective::most_likely ? -std::log(p)
                                                       : T.at(u, u) / p + 1.0;
    };

    auto lex_smaller = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        const std::size_t m = std::min(a.size(), b.size());
        for (std::size_t i = 0; i < m; ++i) {
            if (T.states[a[i]] != T.states[b[i]]) return T.states[a[i]] < T.states[b[i]];
        }
        return a.size() < b.size();
    };

    std::function<void(std::size_t, double)> dfs = [&](std::size_t u, double value) {
        if (u == id) {
            if (!found || value < best.value ||
                (value == best.value && lex_smaller(chain, best.chain))) {
                best = {chain, value};
                found = true;
            }
            return;
        }
        for (std::size_t k = T.row_ptr[u]; k < T.row_ptr[u + 1]; ++k) {
            const std::size_t v = T.col[k];
            if (v == u || used[v] || T.prob[k] <= 0.0) continue;
            used[v] = 1;
            chain.push_back(v);
            dfs(v, value + edge_value(u, v));
            chain.pop_back();
            used[v] = 0;
        }
    };
    dfs(io, 0.0);

    if (!found)
        throw DisconnectedError("no path from " + to_hex_string(o) + " to " + to_hex_string(d));

    Path p;
    for (std::size_t v : best.chain) p.cells.push_back(T.states[v]);
    for (std::size_t i = 0; i + 1 < best.chain.size(); ++i)
        p.log_probability += std::log(T.at(best.chain[i], best.chain[i + 1]));
    return p;
}

}  // namespace driftpath
