#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "driftpath/transition.hpp"
#include "testutil.hpp"

using namespace driftpath;

namespace {

// Builds a store whose cell footprint is chosen directly: each inner vector is
// the centroid sequence of one trajectory on a 1-degree grid.
TrajectoryStore store_from_cells(const std::vector<std::vector<GeoPoint>>& tracks,
                                 double interval_hours) {
    TrajectoryStore s;
    s.sample_interval_hours = interval_hours;
    int n = 0;
    for (const auto& track : tracks) {
        Trajectory t;
        t.id = "t" + std::to_string(n++);
        t.sample_interval_hours = interval_hours;
        t.positions = track;
        s.trajectories.push_back(std::move(t));
    }
    return s;
}

const GeoPoint A = make_geo_point(10.5, 20.5);
const GeoPoint B = make_geo_point(11.5, 20.5);
const GeoPoint C = make_geo_point(12.5, 20.5);

// Literal re-count of the estimator for cross-checking: same integers, same
// single division, so agreement must be bitwise.
std::map<std::pair<std::uint64_t, std::uint64_t>, double> naive_estimate(
    const TrajectoryStore& s, const SpatialIndex& idx, int gap) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, long> pairs;
    std::map<std::uint64_t, long> totals;
    for (const Trajectory& t : s.trajectories) {
        std::vector<CellId> cells;
        for (const GeoPoint& p : t.positions) cells.push_back(idx.cell_of(p));
        for (std::size_t i = 0; i + gap < cells.size(); ++i) {
            ++pairs[{cells[i].value, cells[i + gap].value}];
            ++totals[cells[i].value];
        }
    }
    std::map<std::pair<std::uint64_t, std::uint64_t>, double> out;
    for (const auto& [key, c] : pairs)
        out[key] = static_cast<double>(c) / static_cast<double>(totals[key.first]);
    return out;
}

}  // namespace

TEST_CASE("discretize maps each fix to its cell") {
    const SpatialIndex idx = SpatialIndex::lonlat(1.0);
    Trajectory t;
    t.sample_interval_hours = 6.0;
    t.positions = {A, make_geo_point(10.9, 20.1), B};
    const CellSequence seq = discretize(t, idx);
    REQUIRE(seq.cells.size() == 3);
    CHECK(seq.cells[0] == idx.cell_of(A));
    CHECK(seq.cells[0] == seq.cells[1]);
    CHECK(seq.cells[2] == idx.cell_of(B));
    CHECK(seq.sample_interval_hours == 6.0);
}

TEST_CASE("the textbook two-cell sequence counts overlapping windows") {
    const SpatialIndex idx = SpatialIndex::lonlat(1.0);
    // Cell footprint A, A, B, B at 6-hourly sampling.
    const TrajectoryStore s = store_from_cells({{A, A, B, B}}, 6.0);

    SECTION("one-sample gap") {
        const TransitionMatrix T = estimate_matrix(s, idx, 0.25);
        REQUIRE(T.gap_steps == 1);
        REQUIRE(T.num_states() == 2);
        const std::size_t ia = T.state_index(idx.cell_of(A));
        const std::size_t ib = T.state_index(idx.cell_of(B));
        REQUIRE(ia != TransitionMatrix::npos);
        REQUIRE(ib != TransitionMatrix::npos);
        CHECK(T.at(ia, ia) == 0.5);
        CHECK(T.at(ia, ib) == 0.5);
        CHECK(T.at(ib, ib) == 1.0);
        CHECK(T.row_counts[ia] == 2);
        CHECK(T.row_counts[ib] == 1);
        CHECK_FALSE(T.edited);
    }

    SECTION("two-sample gap leaves the last cell destination-only") {
        const TransitionMatrix T = estimate_matrix(s, idx, 0.5);
        REQUIRE(T.gap_steps == 2);
        REQUIRE(T.num_states() == 2);
        const std::size_t ia = T.state_index(idx.cell_of(A));
        const std::size_t ib = T.state_index(idx.cell_of(B));
        CHECK(T.at(ia, ib) == 1.0);
        CHECK(T.at(ia, ia) == 0.0);
        CHECK(T.row_counts[ia] == 2);
        // B never sources a pair: empty row, zero count, still a state.
        CHECK(T.row_ptr[ib + 1] == T.row_ptr[ib]);
        CHECK(T.row_counts[ib] == 0);
    }
}

TEST_CASE("trajectories pool into shared rows") {
    const SpatialIndex idx = SpatialIndex::lonlat(1.0);
    const TrajectoryStore s = store_from_cells({{A, B}, {A, C}}, 6.0);
    const TransitionMatrix T = estimate_matrix(s, idx, 0.25);
    const std::size_t ia = T.state_index(idx.cell_of(A));
    CHECK(T.at(ia, T.state_index(idx.cell_of(B))) == 0.5);
    CHECK(T.at(ia, T.state_index(idx.cell_of(C))) == 0.5);
    CHECK(T.row_counts[ia] == 2);
}

TEST_CASE("unusable estimation inputs are rejected") {
    const SpatialIndex idx = SpatialIndex::lonlat(1.0);
    TrajectoryStore empty;
    CHECK_THROWS_AS(estimate_matrix(empty, idx, 5.0), DataError);

    TrajectoryStore s = store_from_cells({{A, B}}, 36.0);
    CHECK_THROWS_AS(estimate_matrix(s, idx, 5.0), DataError);  // 3.33 samples per cutoff
    CHECK_THROWS_AS(estimate_matrix(s, idx, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(estimate_matrix(s, idx, -5.0), std::invalid_argument);
    CHECK_NOTHROW(estimate_matrix(s, idx, 1.5));  // exactly one 36-h sample
}

TEST_CASE("trajectories shorter than the gap contribute nothing") {
    const SpatialIndex idx = SpatialIndex::lonlat(1.0);
    // Gap 2: the two-point track has no (i, i+2) pair.
    const TrajectoryStore s = store_from_cells({{A, B}, {A, A, B}}, 6.0);
    const TransitionMatrix T = estimate_matrix(s, idx, 0.5);
    const std::size_t ia = T.state_index(idx.cell_of(A));
    CHECK(T.row_counts[ia] == 1);
    CHECK(T.at(ia, T.state_index(idx.cell_of(B))) == 1.0);
}

TEST_CASE("input order never changes the estimate") {
    const SpatialIndex idx = SpatialIndex::hexdggs(3);
    TrajectoryStore s = testutil::eastward_store(12, 120, 31);
    TrajectoryStore rev = s;
    std::reverse(rev.trajectories.begin(), rev.trajectories.end());
    CHECK(matrices_identical(estimate_matrix(s, idx, 5.0), estimate_matrix(rev, idx, 5.0)));
}

TEST_CASE("the estimator agrees with a literal re-count") {
    const SpatialIndex idx = SpatialIndex::hexdggs(3);
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const TrajectoryStore s = testutil::eastward_store(10, 90, seed);
        const TransitionMatrix T = estimate_matrix(s, idx, 5.0);
        const auto naive = naive_estimate(s, idx, T.gap_steps);

        std::size_t entries = 0;
        for (std::size_t i = 0; i < T.num_states(); ++i) {
            for (std::size_t k = T.row_ptr[i]; k < T.row_ptr[i + 1]; ++k) {
                const auto key = std::make_pair(T.states[i].value, T.states[T.col[k]].value);
                REQUIRE(naive.count(key) == 1);
                CHECK(naive.at(key) == T.prob[k]);  // same integer ratio, bitwise
                ++entries;
            }
        }
        CHECK(entries == naive.size());
    }
}

TEST_CASE("rows sum to one and counts reconcile") {
    const SpatialIndex idx = SpatialIndex::hexdggs(3);
    const TrajectoryStore s = testutil::eastward_store(20, 150, 88);
    const TransitionMatrix T = estimate_matrix(s, idx, 5.0);

    long long expected_pairs = 0;
    for (const Trajectory& t : s.trajectories) {
        const long long n = static_cast<long long>(t.positions.size());
        expected_pairs += std::max(0LL, n - T.gap_steps);
    }
    long long counted = 0;
    for (std::size_t i = 0; i < T.num_states(); ++i) {
        counted += T.row_counts[i];
        if (T.row_ptr[i + 1] > T.row_ptr[i]) {
            CHECK(std::fabs(T.row_sum(i) - 1.0) < 1e-12);
            CHECK(T.row_counts[i] > 0);
        } else {
            CHECK(T.row_counts[i] == 0);
        }
        for (std::size_t k = T.row_ptr[i]; k < T.row_ptr[i + 1]; ++k) {
            CHECK(T.prob[k] > 0.0);
            CHECK(T.prob[k] <= 1.0);
        }
    }
    CHECK(counted == expected_pairs);
}

TEST_CASE("state removal deletes rows and columns without renormalizing") {
    const SpatialIndex idx = SpatialIndex::lonlat(1.0);
    const TrajectoryStore s = store_from_cells({{A, A, B, B}, {A, C, C, B}}, 6.0);
    const TransitionMatrix T = estimate_matrix(s, idx, 0.25);

    SECTION("no barriers leaves the matrix untouched") {
        const TransitionMatrix U = remove_states(T, {}, idx);
        CHECK(matrices_identical(T, U));
        CHECK_FALSE(U.edited);
    }

    SECTION("a barrier point anywhere in the cell removes it") {
        RemoveReport rep;
        const GeoPoint inside_c = make_geo_point(12.01, 20.99);
        const TransitionMatrix U = remove_states(T, {inside_c}, idx, &rep);
        REQUIRE(rep.removed.size() == 1);
        CHECK(rep.removed[0] == idx.cell_of(C));
        CHECK(rep.absent_points.empty());
        CHECK(U.edited);
        CHECK(U.num_states() == 2);
        CHECK(U.state_index(idx.cell_of(C)) == TransitionMatrix::npos);

        // Row A was 1/3 each to A, B, C; the C third just vanishes.
        const std::size_t ia = U.state_index(idx.cell_of(A));
        CHECK(U.at(ia, ia) == T.at(T.state_index(idx.cell_of(A)), T.state_index(idx.cell_of(A))));
        CHECK(std::fabs(U.row_sum(ia) - 2.0 / 3.0) < 1e-15);
        CHECK(U.row_counts[ia] == 3);  // counts describe the original data
    }

    SECTION("barrier points outside the state set are reported, not fatal") {
        RemoveReport rep;
        const TransitionMatrix U = remove_states(T, {make_geo_point(-150.0, -40.0)}, idx, &rep);
        CHECK(rep.removed.empty());
        REQUIRE(rep.absent_points.size() == 1);
        CHECK(matrices_identical(T, U));
    }

    SECTION("grid mismatch is a usage error") {
        CHECK_THROWS_AS(remove_states(T, {A}, SpatialIndex::lonlat(2.0)), std::invalid_argument);
    }
}

TEST_CASE("injected transitions hit the requested crossing time exactly") {
    const SpatialIndex idx = SpatialIndex::lonlat(1.0);
    const std::vector<CellId> states = {idx.cell_of(A), idx.cell_of(B)};

    SECTION("the dyadic self-probability keeps every step exact") {
        const TransitionMatrix T = matrix_from_entries(
            idx, states, {{0, 0, 19.0 / 32.0}, {0, 1, 13.0 / 32.0}}, 5.0, 20);
        const std::size_t ie = T.state_index(idx.cell_of(A));
        const TransitionMatrix U = inject_transition(T, A, B, idx, 100.0);
        CHECK(U.edited);
        const std::size_t je = U.state_index(idx.cell_of(A));
        const std::size_t jw = U.state_index(idx.cell_of(B));
        const double t_ee = U.at(je, je);
        const double t_ew = U.at(je, jw);
        CHECK(t_ee == T.at(ie, ie));
        CHECK(t_ee / t_ew == 19.0);                       // exactly (100 / 5) - 1
        CHECK((t_ee / t_ew + 1.0) * 5.0 == 100.0);        // per-edge expected days
    }

    SECTION("crossing equal to twice the cutoff equates the two probabilities") {
        const TransitionMatrix T =
            matrix_from_entries(idx, states, {{0, 0, 0.7}, {0, 1, 0.3}}, 5.0, 20);
        const TransitionMatrix U = inject_transition(T, A, B, idx, 10.0);
        const std::size_t je = U.state_index(idx.cell_of(A));
        const std::size_t jw = U.state_index(idx.cell_of(B));
        CHECK(U.at(je, jw) == U.at(je, je));
    }

    SECTION("the destination cell joins the state set when new") {
        const TransitionMatrix T =
            matrix_from_entries(idx, states, {{0, 0, 1.0}}, 5.0, 20);
        const TransitionMatrix U = inject_transition(T, A, C, idx, 50.0);
        CHECK(U.num_states() == 3);
        const std::size_t jc = U.state_index(idx.cell_of(C));
        REQUIRE(jc != TransitionMatrix::npos);
        CHECK(U.row_ptr[jc + 1] == U.row_ptr[jc]);  // empty row, valid endpoint
    }

    SECTION("bad crossing requests are rejected") {
        const TransitionMatrix T =
            matrix_from_entries(idx, states, {{0, 0, 0.7}, {0, 1, 0.3}}, 5.0, 20);
        CHECK_THROWS_AS(inject_transition(T, A, B, idx, 5.0), std::invalid_argument);
        CHECK_THROWS_AS(inject_transition(T, A, B, idx, 4.0), std::invalid_argument);

        const TransitionMatrix NoSelf =
            matrix_from_entries(idx, states, {{0, 1, 1.0}}, 5.0, 20);
        CHECK_THROWS_AS(inject_transition(NoSelf, A, B, idx, 100.0), DataError);
        CHECK_THROWS_AS(inject_transition(T, C, B, idx, 100.0), UnknownStateError);
    }
}

TEST_CASE("matrices survive the round trip to disk bit for bit") {
    testutil::TempDir dir("transition_io");
    const SpatialIndex idx = SpatialIndex::hexdggs(3);
    const TrajectoryStore s = testutil::eastward_store(15, 120, 5);
    const TransitionMatrix T = estimate_matrix(s, idx, 5.0);

    save_matrix(T, dir.path("m"));
    const TransitionMatrix U = load_matrix(dir.path("m"));
    CHECK(matrices_identical(T, U));

    // Editing state survives too.
    const TransitionMatrix E = remove_states(
        T, {idx.cell_centroid(T.states[T.num_states() / 2])}, idx);
    save_matrix(E, dir.path("e"));
    CHECK(matrices_identical(E, load_matrix(dir.path("e"))));

    // A lonlat matrix exercises the other metadata branch.
    const SpatialIndex box = SpatialIndex::lonlat(1.0);
    const TransitionMatrix L = estimate_matrix(store_from_cells({{A, A, B, B}}, 6.0), box, 0.25);
    save_matrix(L, dir.path("l"));
    CHECK(matrices_identical(L, load_matrix(dir.path("l"))));
}

TEST_CASE("corrupt matrix files fail loudly") {
    testutil::TempDir dir("transition_corrupt");
    const SpatialIndex idx = SpatialIndex::lonlat(1.0);
    const TransitionMatrix T = estimate_matrix(store_from_cells({{A, A, B, B}}, 6.0), idx, 0.25);
    save_matrix(T, dir.path("m"));

    CHECK_THROWS_AS(load_matrix(dir.path("nothing_here")), DataError);

    auto corrupt = [&](const std::string& suffix, const std::string& body) {
        std::ofstream out(dir.path("m") + suffix, std::ios::binary | std::ios::trunc);
        out << body;
    };

    SECTION("missing metadata key") {
        corrupt(".meta", "kind=lonlat\ncell_size_deg=1\n");
        CHECK_THROWS_AS(load_matrix(dir.path("m")), DataError);
    }
    SECTION("unknown grid kind") {
        corrupt(".meta", "kind=cubes\nt_l_days=5\ngap_steps=1\nedited=0\nrow_counts=2,1\n");
        CHECK_THROWS_AS(load_matrix(dir.path("m")), DataError);
    }
    SECTION("triplet index out of range") {
        corrupt(".triplets.csv", "row,col,prob\n0,9,0.5\n");
        CHECK_THROWS_AS(load_matrix(dir.path("m")), DataError);
    }
    SECTION("malformed triplet") {
        corrupt(".triplets.csv", "row,col,prob\n0,0,not-a-number\n");
        CHECK_THROWS_AS(load_matrix(dir.path("m")), DataError);
    }
    SECTION("unsorted states") {
        const std::string a = to_hex_string(T.states[0]);
        const std::string b = to_hex_string(T.states[1]);
        corrupt(".states.csv", b + "\n" + a + "\n");
        CHECK_THROWS_AS(load_matrix(dir.path("m")), DataError);
    }
    SECTION("row_counts length mismatch") {
        corrupt(".meta", "kind=lonlat\ncell_size_deg=1\nt_l_days=5\ngap_steps=1\nedited=0\n"
                         "row_counts=2\n");
        CHECK_THROWS_AS(load_matrix(dir.path("m")), DataError);
    }
}
