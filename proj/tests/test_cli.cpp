#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "driftpath/ingest.hpp"
#include "driftpath/transition.hpp"
#include "testutil.hpp"

using namespace driftpath;
namespace fs = std::filesystem;

namespace {

std::string cli_binary() {
    const char* p = std::getenv("DRIFTPATH_CLI");
    REQUIRE(p != nullptr);
    return p;
}

int run_cli(const std::string& args, const std::string& log_path) {
    const std::string cmd = cli_binary() + " " + args + " > " + log_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// One drifter lapping the equator eastward at exactly half a degree per
// 6-hour sample: on a 10-degree grid with a 5-day cutoff every counted pair
// is exactly one cell east, so the estimated matrix is a deterministic
// 36-cell ring and all travel times are hand-computable.
void write_ring_csv(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    out << "id,time,lon,lat\n";
    char buf[64];
    for (int i = 0; i <= 740; ++i) {
        const double lon = normalize_lon(-175.0 + 0.5 * i);
        std::snprintf(buf, sizeof buf, "ring,%d,%.17g,0.5\n", i * 21600, lon);
        out << buf;
    }
}

std::map<std::string, std::string> csv_row_by_key(
    const std::vector<std::vector<std::string>>& rows, const std::vector<std::string>& header,
    const std::string& key_col, const std::string& key) {
    std::size_t key_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == key_col) key_idx = i;
    REQUIRE(key_idx < header.size());
    for (const auto& r : rows) {
        if (r.size() > key_idx && r[key_idx] == key) {
            std::map<std::string, std::string> out;
            for (std::size_t i = 0; i < header.size() && i < r.size(); ++i) out[header[i]] = r[i];
            return out;
        }
    }
    FAIL("no row with " << key_col << " = " << key);
    return {};
}

std::vector<std::string> read_header(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return testutil::split_line(line);
}

}  // namespace

TEST_CASE("usage problems exit 1, data problems exit 2") {
    testutil::TempDir dir("cli_exits");
    const std::string log = dir.path("log.txt");

    CHECK(run_cli("", log) == 1);                       // missing subcommand
    CHECK(run_cli("frobnicate", log) == 1);             // unknown subcommand
    CHECK(run_cli("--help", log) == 0);
    CHECK(run_cli("estimate --help", log) == 0);

    // Unreadable data is a data error.
    CHECK(run_cli("estimate --data " + dir.path("nope.csv") + " --output-dir " + dir.str(),
                  log) == 2);

    write_ring_csv(dir.path("ring.csv"));
    const std::string common = " --data " + dir.path("ring.csv") +
                               " --grid lonlat --cell-size-deg 10 --no-barriers --output-dir " + dir.str();

    CHECK(run_cli("pairwise" + common, log) == 1);      // no locations
    CHECK(run_cli("map" + common, log) == 1);           // no anchor
    CHECK(run_cli("map" + common + " --anchor nonsense", log) == 1);
    // Anchor parses but lands outside the visited states.
    CHECK(run_cli("map" + common + " --anchor=0,80", log) == 2);
    // Sensitivity demands the reference among the cutoffs.
    CHECK(run_cli("sensitivity" + common +
                      " --location A=-175,0.5 --location B=-145,0.5"
                      " --cutoffs 2.5,5 --reference 10",
                  log) == 1);
}

TEST_CASE("the built-in checks pass") {
    testutil::TempDir dir("cli_validate");
    CHECK(run_cli("validate", dir.path("log.txt")) == 0);
}

TEST_CASE("estimate writes the same matrix the library computes") {
    testutil::TempDir dir("cli_estimate");
    write_ring_csv(dir.path("ring.csv"));
    const int rc = run_cli("estimate --data " + dir.path("ring.csv") +
                               " --grid lonlat --cell-size-deg 10 --no-barriers --output-dir " + dir.str(),
                           dir.path("log.txt"));
    INFO(slurp(dir.path("log.txt")));
    REQUIRE(rc == 0);

    const TransitionMatrix want =
        estimate_matrix(load_trajectories(dir.path("ring.csv")).store,
                        SpatialIndex::lonlat(10.0), 5.0);
    const TransitionMatrix got = load_matrix(dir.path("matrix"));
    CHECK(matrices_identical(want, got));
    CHECK(got.num_states() == 36);
    CHECK(fs::exists(dir.path("manifest.json")));
}

TEST_CASE("ring-world travel times are exact and asymmetric") {
    testutil::TempDir dir("cli_pairwise");
    write_ring_csv(dir.path("ring.csv"));
    const std::string log = dir.path("log.txt");
    const int rc = run_cli("pairwise --data " + dir.path("ring.csv") +
                               " --grid lonlat --cell-size-deg 10 --no-barriers --output-dir " + dir.str() +
                               " --location A=-175,0.5 --location B=-145,0.5",
                           log);
    INFO(slurp(log));
    REQUIRE(rc == 0);

    const std::string csv = dir.path("travel_times.csv");
    const auto header = read_header(csv);
    REQUIRE(header == std::vector<std::string>{"origin", "destination", "status", "days",
                                               "years", "steps", "log_probability"});
    const auto rows = testutil::read_csv(csv);
    REQUIRE(rows.size() == 4);  // 2 diagonal + 2 ordered pairs

    std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>> entry;
    for (const auto& r : rows) {
        std::map<std::string, std::string> m;
        for (std::size_t i = 0; i < header.size() && i < r.size(); ++i) m[header[i]] = r[i];
        entry[{r[0], r[1]}] = m;
    }

    // Three cells east with the current: 3 hops of exactly one cutoff each.
    CHECK(entry.at({"A", "B"}).at("status") == "ok");
    CHECK(std::stod(entry.at({"A", "B"}).at("days")) == 15.0);
    CHECK(std::stod(entry.at({"A", "B"}).at("steps")) == 3.0);
    CHECK(std::stod(entry.at({"A", "B"}).at("log_probability")) == 0.0);
    // The way back is all the way around: 33 hops.
    CHECK(std::stod(entry.at({"B", "A"}).at("days")) == 165.0);
    CHECK(std::stod(entry.at({"B", "A"}).at("steps")) == 33.0);
    // Diagonal entries are zero-day successes.
    CHECK(entry.at({"A", "A"}).at("status") == "ok");
    CHECK(std::stod(entry.at({"A", "A"}).at("days")) == 0.0);
    CHECK(std::stod(entry.at({"B", "B"}).at("days")) == 0.0);

    // The per-pair GeoJSON parses and follows the path cell count.
    const nlohmann::json gj = nlohmann::json::parse(slurp(dir.path("path_A_B.geojson")));
    CHECK(gj.at("type") == "FeatureCollection");
    const auto& line = gj.at("features").at(0);
    CHECK(line.at("geometry").at("type") == "LineString");
    CHECK(line.at("geometry").at("coordinates").size() == 4);  // A, two middles, B
    CHECK(line.at("properties").at("days").get<double>() == 15.0);
}

TEST_CASE("a single location yields just its zero diagonal") {
    testutil::TempDir dir("cli_single");
    write_ring_csv(dir.path("ring.csv"));
    const int rc = run_cli("pairwise --data " + dir.path("ring.csv") +
                               " --grid lonlat --cell-size-deg 10 --no-barriers --output-dir " + dir.str() +
                               " --location A=-175,0.5",
                           dir.path("log.txt"));
    REQUIRE(rc == 0);
    const auto rows = testutil::read_csv(dir.path("travel_times.csv"));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][0] == "A");
    CHECK(rows[0][1] == "A");
    CHECK(std::stod(rows[0][3]) == 0.0);
}

TEST_CASE("a saved matrix replays identically through --matrix") {
    testutil::TempDir dir("cli_matrix");
    write_ring_csv(dir.path("ring.csv"));
    const std::string log = dir.path("log.txt");
    fs::create_directories(dir.path("a"));
    fs::create_directories(dir.path("b"));

    REQUIRE(run_cli("estimate --data " + dir.path("ring.csv") +
                        " --grid lonlat --cell-size-deg 10 --no-barriers --output-dir " + dir.str(),
                    log) == 0);
    REQUIRE(run_cli("pairwise --data " + dir.path("ring.csv") +
                        " --grid lonlat --cell-size-deg 10 --no-barriers --output-dir " + dir.path("a") +
                        " --location A=-175,0.5 --location B=-145,0.5",
                    log) == 0);
    REQUIRE(run_cli("pairwise --matrix " + dir.path("matrix") + " --output-dir " + dir.path("b") +
                        " --location A=-175,0.5 --location B=-145,0.5",
                    log) == 0);
    CHECK(slurp(dir.path("a/travel_times.csv")) == slurp(dir.path("b/travel_times.csv")));
}

TEST_CASE("map times grow by one cutoff per downstream hop") {
    testutil::TempDir dir("cli_map");
    write_ring_csv(dir.path("ring.csv"));
    const std::string log = dir.path("log.txt");
    const std::string common = "map --data " + dir.path("ring.csv") +
                               " --grid lonlat --cell-size-deg 10 --no-barriers --anchor=-175,0.5 ";
    fs::create_directories(dir.path("from"));
    fs::create_directories(dir.path("to"));

    REQUIRE(run_cli(common + "--output-dir " + dir.path("from"), log) == 0);
    REQUIRE(run_cli(common + "--direction to --output-dir " + dir.path("to"), log) == 0);

    const auto header = read_header(dir.path("from/map.csv"));
    REQUIRE(header == std::vector<std::string>{"cell", "lon", "lat", "days", "steps"});
    const auto fwd = testutil::read_csv(dir.path("from/map.csv"));
    const auto back = testutil::read_csv(dir.path("to/map.csv"));
    REQUIRE(fwd.size() == 36);
    REQUIRE(back.size() == 36);

    // Anchor cell: zero in both directions.
    const auto f0 = csv_row_by_key(fwd, header, "lon", "-175");
    CHECK(std::stod(f0.at("days")) == 0.0);
    const auto b0 = csv_row_by_key(back, header, "lon", "-175");
    CHECK(std::stod(b0.at("days")) == 0.0);

    // Three cells downstream: 15 days out, 165 days home.
    const auto f3 = csv_row_by_key(fwd, header, "lon", "-145");
    CHECK(std::stod(f3.at("days")) == 15.0);
    const auto b3 = csv_row_by_key(back, header, "lon", "-145");
    CHECK(std::stod(b3.at("days")) == 165.0);

    // Every hop adds exactly one cutoff: the day values are 0, 5, ..., 175.
    std::vector<double> days;
    for (const auto& r : fwd) days.push_back(std::stod(r[3]));
    std::sort(days.begin(), days.end());
    for (std::size_t i = 0; i < days.size(); ++i) CHECK(days[i] == 5.0 * static_cast<double>(i));

    const nlohmann::json gj = nlohmann::json::parse(slurp(dir.path("from/map.geojson")));
    CHECK(gj.at("features").size() == 36);
}

TEST_CASE("sensitivity reports exact agreement across ring cutoffs") {
    testutil::TempDir dir("cli_sens");
    write_ring_csv(dir.path("ring.csv"));
    const std::string log = dir.path("log.txt");
    const int rc = run_cli("sensitivity --data " + dir.path("ring.csv") +
                               " --grid lonlat --cell-size-deg 10 --no-barriers --output-dir " + dir.str() +
                               " --location A=-175,0.5 --location B=-145,0.5"
                               " --cutoffs 2.5,5 --reference 5",
                           log);
    INFO(slurp(log));
    REQUIRE(rc == 0);

    const auto header = read_header(dir.path("sensitivity.csv"));
    REQUIRE(header == std::vector<std::string>{"t_l_days", "spearman", "pairs_used",
                                               "pairs_excluded", "is_reference"});
    const auto rows = testutil::read_csv(dir.path("sensitivity.csv"));
    REQUIRE(rows.size() == 2);

    const auto ref = csv_row_by_key(rows, header, "t_l_days", "5");
    CHECK(std::stod(ref.at("spearman")) == 1.0);
    CHECK(ref.at("is_reference") == "1");
    CHECK(ref.at("pairs_used") == "2");
    CHECK(ref.at("pairs_excluded") == "0");

    // At T_L 2.5 the drifter covers half a cell per window; expected times
    // double in steps but agree in days, so the ranks match exactly.
    const auto half = csv_row_by_key(rows, header, "t_l_days", "2.5");
    CHECK(std::stod(half.at("spearman")) == 1.0);
    CHECK(half.at("is_reference") == "0");
    CHECK(half.at("pairs_used") == "2");
}

TEST_CASE("bootstrap on the one-drifter ring is degenerate and documented") {
    testutil::TempDir dir("cli_boot");
    write_ring_csv(dir.path("ring.csv"));
    const std::string log = dir.path("log.txt");
    const int rc = run_cli("bootstrap --data " + dir.path("ring.csv") +
                               " --grid lonlat --cell-size-deg 10 --no-barriers --output-dir " + dir.str() +
                               " --location A=-175,0.5 --location B=-145,0.5"
                               " --bootstrap-samples 4 --seed 11",
                           log);
    INFO(slurp(log));
    REQUIRE(rc == 0);

    const auto header = read_header(dir.path("bootstrap_summary.csv"));
    REQUIRE(header == std::vector<std::string>{"origin", "destination", "samples", "mean_days",
                                               "sd_days", "failures"});
    const auto rows = testutil::read_csv(dir.path("bootstrap_summary.csv"));
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        CHECK(r[2] == "4");
        CHECK(std::stod(r[4]) == 0.0);  // single-trajectory store: exactly zero spread
        CHECK(r[5] == "0");
    }
    const auto ab = csv_row_by_key(rows, header, "destination", "B");
    CHECK(std::stod(ab.at("mean_days")) == 15.0);

    const auto members = testutil::read_csv(dir.path("members_bootstrap_A_B.csv"));
    REQUIRE(members.size() == 4);
    for (const auto& m : members) CHECK(std::stod(m.at(3)) == 15.0);
}

TEST_CASE("rerunning from the manifest reproduces every byte") {
    testutil::TempDir dir("cli_manifest");
    write_ring_csv(dir.path("ring.csv"));
    const std::string log = dir.path("log.txt");
    fs::create_directories(dir.path("out"));
    REQUIRE(run_cli("pairwise --data " + dir.path("ring.csv") +
                        " --grid lonlat --cell-size-deg 10 --no-barriers --output-dir " + dir.path("out") +
                        " --location A=-175,0.5 --location B=-145,0.5",
                    log) == 0);

    // Stash the originals, then replay from the emitted manifest alone.
    fs::create_directories(dir.path("keep"));
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir.path("out"))) {
        names.push_back(e.path().filename().string());
        fs::copy_file(e.path(), dir.path("keep") / e.path().filename());
    }
    REQUIRE(names.size() >= 3);  // csv, geojson, manifest

    REQUIRE(run_cli("pairwise --config " + dir.path("out/manifest.json"), log) == 0);
    for (const std::string& name : names) {
        INFO(name);
        CHECK(slurp(dir.path("out/" + name)) == slurp(dir.path("keep/" + name)));
    }

    const nlohmann::json m = nlohmann::json::parse(slurp(dir.path("out/manifest.json")));
    CHECK(m.at("tool") == "driftpath");
    CHECK(m.at("subcommand") == "pairwise");
    CHECK(m.at("config").at("grid") == "lonlat");
}
