#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2x/cli.hpp"
#include "v2x/scenario.hpp"

using namespace v2x;

namespace {

struct Run {
    int status = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Run result;
    result.status = cli::run_command(args, out, err);
    result.out = out.str();
    result.err = err.str();
    return result;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::vector<std::string> cells;
        std::istringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    FAIL("missing column " << name);
    return 0;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("v2x_test_" + name);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("grid scenario construction") {
    const Scenario three = build_grid_scenario(3, 3, 250.0, SystemParams{}, 1);
    CHECK(three.topology.nodes().size() == 9);
    CHECK(three.topology.edges().size() == 24);
    CHECK(three.source == 0);
    CHECK(three.destination == 8);
    CHECK(three.topology.node(8).x == 500.0);
    CHECK(three.topology.node(8).y == -500.0);
    for (const auto& edge : three.topology.edges()) {
        CHECK(edge.lambda >= 0.05);
        CHECK(edge.lambda <= 0.3);
    }

    const Scenario two = build_grid_scenario(2, 2, 250.0, SystemParams{}, 1);
    CHECK(two.topology.nodes().size() == 4);
    CHECK(two.topology.edges().size() == 8);

    CHECK(build_grid_scenario(3, 3, 250.0, SystemParams{}, 5).topology ==
          build_grid_scenario(3, 3, 250.0, SystemParams{}, 5).topology);
    CHECK_FALSE(build_grid_scenario(3, 3, 250.0, SystemParams{}, 5).topology ==
                build_grid_scenario(3, 3, 250.0, SystemParams{}, 6).topology);
    CHECK_THROWS_AS(build_grid_scenario(1, 3, 250.0, SystemParams{}, 1), Error);
}

TEST_CASE("scenario JSON round trip") {
    Scenario scenario = build_grid_scenario(3, 4, 200.0, SystemParams{}, 12, 0.08, 0.2);
    scenario.params.alpha = 0.3;
    scenario.params.epsilon = 0.01;
    scenario.max_hops = 6;
    add_full_backhaul(scenario.topology);
    scenario.broadcast.entries[{sim::Scheme::SD, 3}] = 0.12;

    const auto doc = scenario_to_json(scenario);
    const Scenario parsed = scenario_from_json(doc);
    CHECK(parsed == scenario);
    CHECK(scenario_to_json(parsed) == doc);

    const auto path = temp_file("roundtrip.json");
    save_scenario(scenario, path.string());
    CHECK(load_scenario(path.string()) == scenario);
    std::filesystem::remove(path);
}

TEST_CASE("scenario JSON from a grid description") {
    const auto doc = nlohmann::json::parse(R"({"grid": {"rows": 3, "cols": 3}, "seed": 1})");
    const Scenario parsed = scenario_from_json(doc);
    CHECK(parsed.topology == default_scenario().topology);
    CHECK(parsed.destination == 8);
}

TEST_CASE("scenario JSON errors") {
    auto code_of = [](const std::string& text) {
        try {
            scenario_from_json(nlohmann::json::parse(text));
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidRegime;  // sentinel: no error
    };
    CHECK(code_of(R"({"grid": {"rows": 3}, "colour": 1})") == ErrorCode::ConfigParse);
    CHECK(code_of(R"({"params": {"T": "long"}, "grid": {}})") == ErrorCode::ConfigParse);
    CHECK(code_of(R"({"seed": 2})") == ErrorCode::ConfigParse);
    CHECK(code_of(R"({"grid": {}, "arrival_interval": [0.3, 0.1]})") == ErrorCode::InvalidArgument);
    CHECK(code_of(R"({"grid": {}, "source": 8, "destination": 8})") == ErrorCode::InvalidArgument);
}

TEST_CASE("optimize-global at alpha 0 ends the window at T") {
    const auto result = run({"optimize-global", "--alpha", "0"});
    REQUIRE(result.status == 0);
    const auto rows = parse_csv(result.out);
    REQUIRE(rows.size() == 13);
    const auto t_col = column(rows[0], "t_star");
    const auto selected = column(rows[0], "selected");
    int winners = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        CHECK(rows[r][t_col] == "20");
        winners += rows[r][selected] == "1";
    }
    CHECK(winners == 1);
}

TEST_CASE("commands are reproducible") {
    const std::vector<std::string> simulate{"simulate", "--snapshots", "1", "--seed", "3"};
    const auto a = run(simulate);
    const auto b = run(simulate);
    REQUIRE(a.status == 0);
    CHECK(a.out == b.out);
    CHECK_FALSE(a.out.empty());

    std::vector<std::string> threaded{"simulate", "--snapshots", "3000", "--seed", "3", "--t", "6"};
    auto one = threaded;
    one.insert(one.end(), {"--threads", "1"});
    auto many = threaded;
    many.insert(many.end(), {"--threads", "4"});
    CHECK(run(one).out == run(many).out);
}

TEST_CASE("sweep over t") {
    const auto result = run({"sweep", "--variable", "t", "--alpha", "0.5", "--from", "0", "--to",
                             "20", "--steps", "40"});
    REQUIRE(result.status == 0);
    const auto rows = parse_csv(result.out);
    REQUIRE(rows.size() == 42);
    const auto objective = column(rows[0], "objective");
    const auto value = column(rows[0], "value");
    CHECK(rows[1][value] == "0");
    CHECK(rows.back()[value] == "20");

    // Rises to its peak and does not rise again afterwards.
    std::vector<double> series;
    for (std::size_t r = 1; r < rows.size(); ++r) series.push_back(std::stod(rows[r][objective]));
    const auto peak = std::max_element(series.begin(), series.end()) - series.begin();
    for (std::size_t i = 1; i <= static_cast<std::size_t>(peak); ++i) {
        CHECK(series[i] >= series[i - 1] - 1e-9);
    }
    for (std::size_t i = peak + 1; i < series.size(); ++i) CHECK(series[i] <= series[i - 1] + 1e-9);

    const auto grid = run({"sweep", "--variable", "alpha", "--grid", "0,0.5,1"});
    REQUIRE(grid.status == 0);
    CHECK(parse_csv(grid.out).size() == 4);

    const auto beams = run({"sweep", "--variable", "scheme_beams", "--scheme", "SD", "--grid",
                            "1,2,4", "--snapshots", "200"});
    REQUIRE(beams.status == 0);
    const auto beam_rows = parse_csv(beams.out);
    CHECK(beam_rows.size() == 4);
    CHECK_FALSE(beam_rows[1][column(beam_rows[0], "mean_latency")].empty());
}

TEST_CASE("json output and file output") {
    const auto path = temp_file("compare.csv");
    const auto written = run({"compare", "--alpha", "0.5", "--out", path.string()});
    REQUIRE(written.status == 0);
    CHECK(written.out.empty());
    std::ifstream in(path);
    std::stringstream text;
    text << in.rdbuf();
    const auto rows = parse_csv(text.str());
    REQUIRE(rows.size() == 4);
    CHECK(rows[1][0] == "proposed");
    CHECK(rows[2][0] == "spr");
    CHECK(rows[3][0] == "gpsr");
    std::filesystem::remove(path);

    const auto json = run({"compare", "--alpha", "0.5", "--json"});
    REQUIRE(json.status == 0);
    const auto doc = nlohmann::json::parse(json.out);
    CHECK(doc.is_array());
    CHECK(doc.size() == 3);
}

TEST_CASE("error exits") {
    const auto missing = run({"analyze", "--scenario", "/nonexistent/scenario.json"});
    CHECK(missing.status == 1);
    CHECK(missing.err.rfind("Error: config-parse:", 0) == 0);

    const auto path = temp_file("split.json");
    write_text(path, R"({"topology": {"nodes": [{"id": 0, "x": 0, "y": 0}, {"id": 1, "x": 1, "y": 0}],
                        "edges": [{"from": 1, "to": 0, "lambda": 0.1}]},
                        "source": 0, "destination": 1})");
    const auto unreachable = run({"optimize-global", "--scenario", path.string()});
    CHECK(unreachable.status == 1);
    CHECK(unreachable.err.rfind("Error: no-route:", 0) == 0);
    std::filesystem::remove(path);

    const auto scheme = run({"analyze", "--scheme", "XD"});
    CHECK(scheme.status == 1);
    CHECK(scheme.err.rfind("Error: unknown-scheme:", 0) == 0);

    CHECK(run({"frobnicate"}).status != 0);
    CHECK(run({"analyze", "--alpha", "1.5"}).status == 1);
    CHECK(run({"sweep", "--variable", "t", "--grid", "3,1,2"}).status == 1);
}

TEST_CASE("backhaul without links warns") {
    const auto result = run({"simulate", "--backhaul", "--snapshots", "100", "--t", "0"});
    CHECK(result.status == 0);
    CHECK(result.err.find("Warning:") != std::string::npos);
}
