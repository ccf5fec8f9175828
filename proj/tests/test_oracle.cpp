#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "driftpath/oracle.hpp"
#include "testutil.hpp"

using namespace driftpath;

namespace {

const SpatialIndex kIdx = SpatialIndex::lonlat(1.0);

std::vector<CellId> row_cells(std::size_t n) {
    std::vector<CellId> cells;
    for (std::size_t i = 0; i < n; ++i)
        cells.push_back(kIdx.cell_of(make_geo_point(-170.5 + 2.0 * static_cast<double>(i), 20.5)));
    return cells;
}

}  // namespace

TEST_CASE("a deterministic chain walks straight into the absorbing cell") {
    const std::vector<CellId> cells = row_cells(2);
    const TransitionMatrix T = matrix_from_entries(
        kIdx, cells, {{0, 1, 1.0}, {1, 1, 1.0}});
    rng::Engine eng(1);
    const ChainRun run = simulate_chain(T, cells[0], 5, eng);
    REQUIRE(run.states.size() == 6);
    CHECK(run.steps == 5);
    CHECK(run.states[0] == cells[0]);
    for (std::size_t i = 1; i < run.states.size(); ++i) CHECK(run.states[i] == cells[1]);
}

TEST_CASE("a row with no outgoing mass stops the walk") {
    const std::vector<CellId> cells = row_cells(2);
    const TransitionMatrix T = matrix_from_entries(kIdx, cells, {{0, 1, 1.0}});
    rng::Engine eng(2);
    const ChainRun run = simulate_chain(T, cells[0], 100, eng);
    CHECK(run.steps == 1);  // one hop, then the empty row of cell 1
    CHECK(run.states.back() == cells[1]);
}

TEST_CASE("simulation is seed deterministic and guards its inputs") {
    const std::vector<CellId> cells = row_cells(3);
    const TransitionMatrix T = matrix_from_entries(
        kIdx, cells, {{0, 0, 0.3}, {0, 1, 0.4}, {0, 2, 0.3}, {1, 0, 1.0}, {2, 0, 1.0}});

    rng::Engine a(42), b(42);
    const ChainRun ra = simulate_chain(T, cells[0], 200, a);
    const ChainRun rb = simulate_chain(T, cells[0], 200, b);
    CHECK(ra.states == rb.states);

    const CellId stranger = kIdx.cell_of(make_geo_point(100.5, -40.5));
    rng::Engine c(1);
    CHECK_THROWS_AS(simulate_chain(T, stranger, 10, c), UnknownStateError);

    const TransitionMatrix edited = remove_states(
        T, {kIdx.cell_centroid(cells[2])}, kIdx);
    CHECK_THROWS_AS(simulate_chain(edited, cells[0], 10, c), std::invalid_argument);
}

TEST_CASE("single-step frequencies match the row within sampling error") {
    const std::vector<CellId> cells = row_cells(3);
    const std::vector<double> probs = {0.2, 0.3, 0.5};
    const TransitionMatrix T = matrix_from_entries(
        kIdx, cells,
        {{0, 0, probs[0]}, {0, 1, probs[1]}, {0, 2, probs[2]}, {1, 1, 1.0}, {2, 2, 1.0}});

    rng::Engine eng(777);
    const int n = 100000;
    std::map<std::uint64_t, int> hits;
    for (int i = 0; i < n; ++i) {
        const ChainRun run = simulate_chain(T, cells[0], 1, eng);
        REQUIRE(run.steps == 1);
        ++hits[run.states[1].value];
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
        const double freq = static_cast<double>(hits[cells[j].value]) / n;
        const double se = std::sqrt(probs[j] * (1.0 - probs[j]) / n);
        CHECK(std::fabs(freq - probs[j]) < 3.0 * se);
    }
}

TEST_CASE("monte carlo edge times collapse when there is no dwell") {
    const std::vector<CellId> cells = row_cells(2);
    const TransitionMatrix T = matrix_from_entries(kIdx, cells, {{0, 1, 1.0}});
    rng::Engine eng(5);
    const McEstimate est = constrained_edge_time_mc(T, cells[0], cells[1], 2000, eng);
    CHECK(est.mean == 1.0);  // every draw is exactly one step
    CHECK(est.se == 0.0);
}

TEST_CASE("monte carlo edge times agree with the analytic mean") {
    const std::vector<CellId> cells = row_cells(3);

    SECTION("balanced dwell: two steps expected") {
        const TransitionMatrix T = matrix_from_entries(
            kIdx, cells, {{0, 0, 0.4}, {0, 1, 0.4}, {0, 2, 0.2}});
        rng::Engine eng(6);
        const McEstimate est = constrained_edge_time_mc(T, cells[0], cells[1], 100000, eng);
        CHECK(est.se > 0.0);
        CHECK(std::fabs(est.mean - 2.0) < 3.0 * est.se);
    }

    SECTION("heavier dwell: three steps expected") {
        const TransitionMatrix T = matrix_from_entries(
            kIdx, cells, {{0, 0, 0.5}, {0, 1, 0.25}, {0, 2, 0.25}});
        rng::Engine eng(7);
        const McEstimate est = constrained_edge_time_mc(T, cells[0], cells[1], 100000, eng);
        CHECK(std::fabs(est.mean - 3.0) < 3.0 * est.se);

        // The analytic value is also the per-edge term of the path estimate.
        const TravelTimeEstimate t = expected_travel_time(T, Path{{cells[0], cells[1]}, 0.0});
        CHECK(t.per_edge[0] == 3.0);
    }

    SECTION("misuse is rejected") {
        const TransitionMatrix T = matrix_from_entries(
            kIdx, cells, {{0, 0, 0.5}, {0, 1, 0.5}});
        rng::Engine eng(8);
        CHECK_THROWS_AS(constrained_edge_time_mc(T, cells[0], cells[1], 0, eng),
                        std::invalid_argument);
        const CellId stranger = kIdx.cell_of(make_geo_point(100.5, -40.5));
        CHECK_THROWS_AS(constrained_edge_time_mc(T, stranger, cells[1], 10, eng),
                        UnknownStateError);
        CHECK_THROWS_AS(constrained_edge_time_mc(T, cells[0], cells[2], 10, eng), DataError);
    }
}

TEST_CASE("exhaustive search handles the small instances exactly") {
    const std::vector<CellId> two = row_cells(2);
    const TransitionMatrix E = matrix_from_entries(kIdx, two, {{0, 1, 1.0}});
    const Path direct = enumerate_best_path(E, two[0], two[1], TimeObjective::most_likely);
    REQUIRE(direct.cells.size() == 2);
    CHECK(direct.log_probability == 0.0);

    const std::vector<CellId> three = row_cells(3);
    const TransitionMatrix T = matrix_from_entries(
        kIdx, three, {{0, 2, 0.1}, {0, 1, 0.9}, {1, 2, 0.9}});
    const Path detour = enumerate_best_path(T, three[0], three[2], TimeObjective::most_likely);
    REQUIRE(detour.cells.size() == 3);
    CHECK(detour.cells[1] == three[1]);
    CHECK(std::fabs(detour.log_probability - std::log(0.81)) < 1e-12);

    const Path self = enumerate_best_path(T, three[1], three[1], TimeObjective::most_likely);
    CHECK(self.cells.size() == 1);
    CHECK(self.log_probability == 0.0);

    CHECK_THROWS_AS(enumerate_best_path(T, three[2], three[0], TimeObjective::most_likely),
                    DisconnectedError);
    const CellId stranger = kIdx.cell_of(make_geo_point(100.5, -40.5));
    CHECK_THROWS_AS(enumerate_best_path(T, stranger, three[0], TimeObjective::most_likely),
                    UnknownStateError);
}

TEST_CASE("exhaustive search refuses instances beyond twelve states") {
    const std::vector<CellId> cells = row_cells(13);
    std::vector<std::tuple<std::size_t, std::size_t, double>> entries;
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) entries.push_back({i, i + 1, 1.0});
    const TransitionMatrix T = matrix_from_entries(kIdx, cells, entries);
    CHECK_THROWS_AS(enumerate_best_path(T, cells[0], cells[12], TimeObjective::most_likely),
                    std::invalid_argument);
}
