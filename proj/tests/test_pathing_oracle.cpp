#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "driftpath/oracle.hpp"
#include "driftpath/pathing.hpp"
#include "testutil.hpp"

using namespace driftpath;

// The graph searches against exhaustive enumeration on random instances:
// every pair, both objectives, connectivity verdicts included.

TEST_CASE("graph searches agree with exhaustive enumeration") {
    const SpatialIndex idx = SpatialIndex::lonlat(1.0);
    rng::Engine eng(90210);

    for (int round = 0; round < 200; ++round) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng::uniform_index(eng, 7));
        const double density = 0.35 + 0.3 * rng::uniform01(eng);
        const TransitionMatrix T = testutil::random_matrix(idx, n, eng, density);
        const PathGraph g = build_graph(T);

        for (std::size_t o = 0; o < n; ++o) {
            for (std::size_t d = 0; d < n; ++d) {
                const CellId co = T.states[o];
                const CellId cd = T.states[d];

                // Most probable route.
                bool search_ok = true, enum_ok = true;
                Path ps, pe;
                try {
                    ps = most_likely_path(g, co, cd);
                } catch (const DisconnectedError&) {
                    search_ok = false;
                }
                try {
                    pe = enumerate_best_path(T, co, cd, TimeObjective::most_likely);
                } catch (const DisconnectedError&) {
                    enum_ok = false;
                }
                INFO("round " << round << " pair " << o << " -> " << d);
                REQUIRE(search_ok == enum_ok);
                if (search_ok) {
                    CHECK(std::fabs(ps.log_probability - pe.log_probability) < 1e-9);
                    // equal-weight alternatives may tie-break differently; a
                    // distinct route is fine when the objective is an exact tie
                    if (ps.cells != pe.cells)
                        CHECK(std::fabs(ps.log_probability - pe.log_probability) < 1e-12);
                }

                // Fastest route.
                bool fast_ok = true, efast_ok = true;
                Path pf, pef;
                TravelTimeEstimate tf;
                try {
                    auto res = shortest_time_path(T, co, cd);
                    pf = res.first;
                    tf = res.second;
                } catch (const DisconnectedError&) {
                    fast_ok = false;
                }
                try {
                    pef = enumerate_best_path(T, co, cd, TimeObjective::shortest_time);
                } catch (const DisconnectedError&) {
                    efast_ok = false;
                }
                REQUIRE(fast_ok == efast_ok);
                if (fast_ok) {
                    const double enum_steps =
                        pef.cells.size() < 2 ? 0.0 : expected_travel_time(T, pef).steps;
                    CHECK(std::fabs(tf.steps - enum_steps) < 1e-9 * std::max(1.0, enum_steps));
                    if (pf.cells != pef.cells)
                        CHECK(std::fabs(tf.steps - enum_steps) <
                              1e-12 * std::max(1.0, enum_steps));
                }
            }
        }
    }
}
