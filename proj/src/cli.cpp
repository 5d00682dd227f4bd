#include "v2x/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "v2x/closed_form.hpp"
#include "v2x/model_core.hpp"
#include "v2x/simulator.hpp"

namespace v2x::cli {

namespace {

using nlohmann::json;

struct Options {
    std::string scenario_path;
    std::optional<double> alpha;
    std::optional<double> t;
    std::optional<std::uint64_t> snapshots;
    std::optional<std::uint64_t> seed;
    bool backhaul = false;
    std::optional<std::string> scheme;
    int beams = 1;
    std::string out_path;
    std::optional<int> max_hops;
    std::string rate_model = "min-of-means";
    std::string mode = "physical";
    std::string hop_norm = "per-hop";
    unsigned threads = 0;
    bool json = false;
    // sweep
    std::string variable = "t";
    std::vector<double> grid;
    std::optional<double> from;
    std::optional<double> to;
    int steps = 0;
};

// Rows of JSON scalars; written either as CSV or as an array of records.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<json>> rows;
};

std::string csv_cell(const json& value) {
    if (value.is_null()) return "";
    if (value.is_number_integer() || value.is_number_unsigned()) return value.dump();
    if (value.is_number()) return format_number(value.get<double>());
    if (value.is_boolean()) return value.get<bool>() ? "1" : "0";
    const std::string text = value.get<std::string>();
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string quoted = "\"";
    for (char c : text) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

void write_table(const Table& table, bool as_json, std::ostream& out) {
    if (as_json) {
        json records = json::array();
        for (const auto& row : table.rows) {
            json record = json::object();
            for (std::size_t i = 0; i < table.header.size(); ++i) record[table.header[i]] = row[i];
            records.push_back(record);
        }
        out << records.dump(2) << '\n';
        return;
    }
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        out << (i ? "," : "") << table.header[i];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_cell(row[i]);
        out << '\n';
    }
}

void emit(const Table& table, const Options& opts, std::ostream& out) {
    if (opts.out_path.empty()) {
        write_table(table, opts.json, out);
        return;
    }
    std::ofstream file(opts.out_path);
    if (!file) throw Error(ErrorCode::InvalidArgument, "cannot write " + opts.out_path);
    write_table(table, opts.json, file);
}

std::string join_windows(const std::vector<double>& values) {
    std::string text;
    for (std::size_t i = 0; i < values.size(); ++i) {
        text += (i ? ";" : "") + format_number(values[i]);
    }
    return text;
}

Scenario prepare_scenario(const Options& opts, std::ostream& err) {
    Scenario scenario = opts.scenario_path.empty() ? default_scenario()
                                                   : load_scenario(opts.scenario_path);
    if (opts.alpha) scenario.params.alpha = *opts.alpha;
    if (opts.max_hops) scenario.max_hops = *opts.max_hops;
    for (const auto& warning : scenario.broadcast.validate()) {
        err << "Warning: broadcast table: " << warning << '\n';
    }
    if (opts.scheme) {
        scenario.params.delta_t = sim::delta_t_for_scheme(sim::scheme_from_string(*opts.scheme),
                                                           opts.beams, scenario.broadcast);
    }
    scenario.validate();
    return scenario;
}

opt::HopNormalization hop_normalization(const Options& opts) {
    if (opts.hop_norm == "per-hop") return opt::HopNormalization::PerHop;
    if (opts.hop_norm == "shared") return opt::HopNormalization::Shared;
    throw Error(ErrorCode::InvalidArgument, "unknown hop normalization '" + opts.hop_norm + "'");
}

routing::RouteSet routes_of(const Scenario& scenario) {
    return routing::enumerate_routes(scenario.topology, scenario.source, scenario.destination,
                                     scenario.max_hops);
}

void report_regimes(const routing::RouteSet& set, const SystemParams& params, std::ostream& err) {
    std::set<std::string> seen;
    for (const auto& route : set.routes) {
        for (const auto& warning : model::regime_warnings(route, params)) {
            if (seen.insert(warning).second) err << "Warning: " << warning << '\n';
        }
    }
}

std::vector<std::pair<NodeId, NodeId>> backhaul_links(const Scenario& scenario,
                                                      std::ostream& err) {
    if (!scenario.topology.backhaul_links().empty()) return scenario.topology.backhaul_links();
    err << "Warning: scenario defines no backhaul links; linking every adjacent RSU pair\n";
    routing::Topology mesh = scenario.topology;
    add_full_backhaul(mesh);
    return mesh.backhaul_links();
}

sim::SimConfig sim_config(const Scenario& scenario, const Options& opts,
                          std::uint64_t default_snapshots) {
    sim::SimConfig config;
    config.snapshots = opts.snapshots.value_or(default_snapshots);
    config.seed = opts.seed.value_or(scenario.seed);
    config.backhaul_enabled = opts.backhaul;
    config.mode = sim::sampling_mode_from_string(opts.mode);
    config.threads = opts.threads;
    return config;
}

sim::EmpiricalEstimate run_simulation(const Scenario& scenario, const Route& route,
                                      std::span<const double> t_hat, const Options& opts,
                                      std::uint64_t default_snapshots, std::ostream& err) {
    const auto config = sim_config(scenario, opts, default_snapshots);
    if (opts.backhaul) {
        const auto links = backhaul_links(scenario, err);
        return sim::simulate_with_backhaul(route, t_hat, scenario.params, config, links);
    }
    return sim::simulate_route(route, t_hat, scenario.params, config);
}

routing::Topology scaled_topology(const routing::Topology& base, double factor) {
    if (!(factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda scale must be positive");
    routing::Topology scaled;
    for (const auto& node : base.nodes()) scaled.add_node(node.id, node.x, node.y);
    for (const auto& edge : base.edges()) scaled.add_edge(edge.from, edge.to, edge.lambda * factor);
    for (const auto& [a, b] : base.backhaul_links()) scaled.add_backhaul(a, b);
    return scaled;
}

// --- subcommands -----------------------------------------------------------

void cmd_analyze(const Options& opts, std::ostream& out, std::ostream& err) {
    const Scenario scenario = prepare_scenario(opts, err);
    const auto& params = scenario.params;
    const double t = opts.t.value_or(params.T / 2.0);
    const auto set = routes_of(scenario);
    report_regimes(set, params, err);

    Table table{{"route", "nodes", "hops", "t", "e2e_latency", "rate_min_of_means",
                 "rate_closed_form"},
                {}};
    for (std::size_t i = 0; i < set.routes.size(); ++i) {
        const auto& route = set.routes[i];
        const auto est = model::estimate(route, t, params);
        table.rows.push_back({i, format_nodes(route), route.size(), t, est.e2e_latency,
                              est.e2e_rate, closed::e2e_rate_closed(route, t, params)});
    }
    emit(table, opts, out);
}

void cmd_optimize(const Options& opts, bool distributed, std::ostream& out, std::ostream& err) {
    const Scenario scenario = prepare_scenario(opts, err);
    const auto model = opt::rate_model_from_string(opts.rate_model);
    const auto set = routes_of(scenario);
    report_regimes(set, scenario.params, err);
    const double alpha = scenario.params.alpha;

    const auto result =
        distributed ? routing::distributed_routing(set, scenario.params, alpha, model,
                                                   hop_normalization(opts))
                    : routing::global_routing(set, scenario.params, alpha, model);
    Table table{{"route", "nodes", "hops", distributed ? "t_hat" : "t_star", "objective",
                 "e2e_latency", "e2e_rate", "selected"},
                {}};
    for (std::size_t i = 0; i < set.routes.size(); ++i) {
        const auto& o = result.per_route[i];
        json window = distributed ? json(join_windows(o.t_hat)) : json(o.t_star);
        table.rows.push_back({i, format_nodes(set.routes[i]), set.routes[i].size(), window,
                              o.objective, o.e2e_latency, o.e2e_rate,
                              i == result.best.route_index ? 1 : 0});
    }
    emit(table, opts, out);
}

void cmd_simulate(const Options& opts, std::ostream& out, std::ostream& err) {
    const Scenario scenario = prepare_scenario(opts, err);
    const auto& params = scenario.params;
    const auto model = opt::rate_model_from_string(opts.rate_model);
    const auto set = routes_of(scenario);
    const auto best = routing::global_routing(set, params, params.alpha, model);
    const Route& route = best.route;
    const double t = opts.t.value_or(best.best.t_star);
    const std::vector<double> t_hat(route.size(), t);

    const auto empirical = run_simulation(scenario, route, t_hat, opts, 1000, err);
    const auto analytic = model::estimate(route, t, params);

    double p_fwd = 0.0, p_succ = 0.0, p_fail = 0.0;
    for (const auto& hop : route.hops) {
        p_fwd += model::p_courier_forward(hop);
        p_succ += model::p_success(hop, t, params);
        p_fail += model::p_failure(hop, t, params);
    }
    const double k = static_cast<double>(route.size());

    Table table{{"nodes", "t", "snapshots", "seed", "quantity", "analytic", "empirical", "se",
                 "rel_error"},
                {}};
    auto add = [&](const std::string& name, double model_value, double observed, json se) {
        json rel = model_value != 0.0 ? json((observed - model_value) / model_value) : json();
        table.rows.push_back({format_nodes(route), t, empirical.snapshots,
                              sim_config(scenario, opts, 1000).seed, name, model_value, observed,
                              se, rel});
    };
    add("e2e_latency", analytic.e2e_latency, empirical.mean_latency, empirical.se_latency);
    add("e2e_rate", analytic.e2e_rate, empirical.mean_rate, empirical.se_rate);
    add("e2e_rate_closed_form", closed::e2e_rate_closed(route, t, params), empirical.mean_rate,
        empirical.se_rate);
    add("p_fwd", p_fwd / k, empirical.frequency(sim::Branch::CourierForward), json());
    add("p_succ", p_succ / k, empirical.frequency(sim::Branch::DiscoverySuccess), json());
    add("p_fail", p_fail / k,
        empirical.frequency(sim::Branch::DiscoveryFailure) +
            empirical.frequency(sim::Branch::BackhaulForward),
        json());
    emit(table, opts, out);
}

void cmd_compare(const Options& opts, std::ostream& out, std::ostream& err) {
    const Scenario scenario = prepare_scenario(opts, err);
    const auto model = opt::rate_model_from_string(opts.rate_model);
    const auto rows = compare_selectors(scenario, scenario.params.alpha, model);
    Table table{{"selector", "nodes", "hops", "t_star", "objective", "e2e_latency", "e2e_rate"},
                {}};
    for (const auto& row : rows) {
        table.rows.push_back({row.selector, format_nodes(row.route), row.route.size(),
                              row.outcome.t_star, row.outcome.objective, row.outcome.e2e_latency,
                              row.outcome.e2e_rate});
    }
    emit(table, opts, out);
}

std::vector<double> sweep_grid(const Options& opts, const Scenario& scenario) {
    std::vector<double> grid = opts.grid;
    if (grid.empty() && opts.from && opts.to && opts.steps > 0) {
        for (int i = 0; i <= opts.steps; ++i) {
            grid.push_back(*opts.from + (*opts.to - *opts.from) * i / opts.steps);
        }
    }
    if (grid.empty()) {
        if (opts.variable == "t") {
            for (int i = 0; i <= 100; ++i) grid.push_back(scenario.params.T * i / 100.0);
        } else if (opts.variable == "alpha") {
            for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
        } else if (opts.variable == "scheme_beams") {
            for (int m = 1; m <= 16; ++m) grid.push_back(m);
        } else {
            throw Error(ErrorCode::InvalidArgument,
                        "sweep over " + opts.variable + " needs --grid or --from/--to/--steps");
        }
    }
    if (!std::is_sorted(grid.begin(), grid.end())) {
        throw Error(ErrorCode::InvalidArgument, "sweep grid must be sorted");
    }
    return grid;
}

void cmd_sweep(const Options& opts, std::ostream& out, std::ostream& err) {
    static const std::set<std::string> variables{"t", "alpha", "lambda_scale", "scheme_beams"};
    if (!variables.count(opts.variable)) {
        throw Error(ErrorCode::InvalidArgument, "unknown sweep variable '" + opts.variable + "'");
    }
    if (opts.variable == "scheme_beams" && !opts.scheme) {
        throw Error(ErrorCode::InvalidArgument, "scheme_beams sweeps need --scheme");
    }
    Options base_opts = opts;
    if (opts.variable == "scheme_beams") base_opts.scheme.reset();
    const Scenario base = prepare_scenario(base_opts, err);
    const auto model = opt::rate_model_from_string(opts.rate_model);
    const auto grid = sweep_grid(opts, base);

    Table table{{"variable", "value", "nodes", "t", "objective", "e2e_latency", "e2e_rate",
                 "t_hat", "mean_latency", "se_latency", "mean_rate", "se_rate", "p_fwd",
                 "p_succ", "p_fail"},
                {}};

    auto add_row = [&](double value, const Scenario& scenario, const Route& route, double t,
                       double objective, double latency, double rate,
                       const std::vector<double>& t_hat) {
        std::vector<json> row{opts.variable, value,   format_nodes(route), t,
                              objective,     latency, rate,                join_windows(t_hat)};
        if (opts.snapshots) {
            const std::vector<double> windows(route.size(), t);
            const auto e = run_simulation(scenario, route, windows, opts, 0, err);
            row.insert(row.end(),
                       {e.mean_latency, e.se_latency, e.mean_rate, e.se_rate,
                        e.frequency(sim::Branch::CourierForward),
                        e.frequency(sim::Branch::DiscoverySuccess),
                        e.frequency(sim::Branch::DiscoveryFailure) +
                            e.frequency(sim::Branch::BackhaulForward)});
        } else {
            row.insert(row.end(), 7, json());
        }
        table.rows.push_back(std::move(row));
    };

    if (opts.variable == "t") {
        const auto set = routes_of(base);
        const double alpha = base.params.alpha;
        const auto global = routing::global_routing(set, base.params, alpha, model);
        const auto distributed = routing::distributed_routing(set, base.params, alpha, model,
                                                                hop_normalization(opts));
        const opt::RouteEvaluator winner(global.route, base.params, model);
        const auto objective = opt::global_objective(winner, alpha, global.norm);
        for (double t : grid) {
            if (!(t >= 0.0 && t <= base.params.T)) {
                throw Error(ErrorCode::InvalidArgument, "sweep values for t must lie in [0, T]");
            }
            add_row(t, base, global.route, t, objective(t), winner.latency(t), winner.rate(t),
                    distributed.best.t_hat);
        }
    } else {
        for (double value : grid) {
            Scenario scenario = base;
            if (opts.variable == "alpha") {
                scenario.params.alpha = value;
            } else if (opts.variable == "lambda_scale") {
                scenario.topology = scaled_topology(base.topology, value);
            } else {
                scenario.params.delta_t =
                    sim::delta_t_for_scheme(sim::scheme_from_string(*opts.scheme),
                                            static_cast<int>(value), scenario.broadcast);
            }
            scenario.validate();
            const auto set = routes_of(scenario);
            const double alpha = scenario.params.alpha;
            const auto global = routing::global_routing(set, scenario.params, alpha, model);
            const auto distributed =
                routing::distributed_routing(set, scenario.params, alpha, model,
                                             hop_normalization(opts));
            add_row(value, scenario, global.route, global.best.t_star, global.best.objective,
                    global.best.e2e_latency, global.best.e2e_rate, distributed.best.t_hat);
        }
    }
    emit(table, opts, out);
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<ComparisonRow> compare_selectors(const Scenario& scenario, double alpha,
                                             opt::RateModel model) {
    const auto& params = scenario.params;
    const auto set = routes_of(scenario);
    const Route spr = routing::spr_route(scenario.topology, scenario.source, scenario.destination);
    const Route gpsr =
        routing::gpsr_route(scenario.topology, scenario.source, scenario.destination);

    std::vector<opt::RouteEvaluator> evaluators;
    for (const auto& route : set.routes) evaluators.emplace_back(route, params, model);
    evaluators.emplace_back(spr, params, model);
    evaluators.emplace_back(gpsr, params, model);
    const auto norm = opt::build_normalization(evaluators);

    ComparisonRow proposed{"proposed", {}, {}};
    for (std::size_t i = 0; i < set.routes.size(); ++i) {
        auto outcome = opt::solve_global(evaluators[i], alpha, norm);
        outcome.route_index = i;
        if (i == 0 || outcome.objective > proposed.outcome.objective) {
            proposed.outcome = outcome;
            proposed.route = set.routes[i];
        }
    }
    ComparisonRow spr_row{"spr", spr, opt::solve_global(evaluators[set.routes.size()], alpha, norm)};
    ComparisonRow gpsr_row{"gpsr", gpsr,
                           opt::solve_global(evaluators[set.routes.size() + 1], alpha, norm)};
    return {proposed, spr_row, gpsr_row};
}

std::string format_number(double value) {
    std::ostringstream text;
    text << std::setprecision(12) << value;
    return text.str();
}

std::string format_nodes(const Route& route) {
    std::string text;
    const auto nodes = route.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        text += (i ? "-" : "") + std::to_string(nodes[i]);
    }
    return text;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multihop V2X data delivery: analysis, optimization and simulation", "v2xroute"};
    app.require_subcommand(1);
    Options opts;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--scenario", opts.scenario_path, "Scenario JSON file");
        sub->add_option("--alpha", opts.alpha, "Weight of the data rate in [0, 1]");
        sub->add_option("--max-hops", opts.max_hops, "Drop candidate routes longer than this");
        sub->add_option("--scheme", opts.scheme, "Broadcast scheme TD, FD, CD or SD");
        sub->add_option("--beams", opts.beams, "Simultaneous beams M");
        sub->add_option("--rate-model", opts.rate_model, "min-of-means or closed-form");
        sub->add_option("--out", opts.out_path, "Write results to this file");
        sub->add_flag("--json", opts.json, "Emit JSON records instead of CSV");
    };
    auto simulation = [&](CLI::App* sub) {
        sub->add_option("--snapshots", opts.snapshots, "Monte Carlo snapshots");
        sub->add_option("--seed", opts.seed, "Simulation seed (default: scenario seed)");
        sub->add_flag("--backhaul", opts.backhaul, "Forward failures over RSU backhaul links");
        sub->add_option("--mode", opts.mode, "physical or independent trial sampling");
        sub->add_option("--threads", opts.threads, "Worker threads (0 = all cores)");
    };

    auto* analyze = app.add_subcommand("analyze", "Expected latency and rate of every route");
    common(analyze);
    analyze->add_option("--t", opts.t, "Discovery window (default T/2)");

    auto* global = app.add_subcommand("optimize-global", "Shared discovery window per route");
    common(global);
    auto* distributed =
        app.add_subcommand("optimize-distributed", "Per-hop discovery windows per route");
    common(distributed);
    distributed->add_option("--hop-norm", opts.hop_norm, "per-hop or shared normalization");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo versus the analytic model");
    common(simulate);
    simulation(simulate);
    simulate->add_option("--t", opts.t, "Discovery window (default: optimal t)");

    auto* compare = app.add_subcommand("compare", "Proposed routing versus SPR and GPSR");
    common(compare);

    auto* sweep = app.add_subcommand("sweep", "CSV over a parameter grid");
    common(sweep);
    simulation(sweep);
    sweep->add_option("--hop-norm", opts.hop_norm, "per-hop or shared normalization");
    sweep->add_option("--variable", opts.variable, "t, alpha, lambda_scale or scheme_beams");
    sweep->add_option("--grid", opts.grid, "Explicit values")->delimiter(',');
    sweep->add_option("--from", opts.from, "First grid value");
    sweep->add_option("--to", opts.to, "Last grid value");
    sweep->add_option("--steps", opts.steps, "Grid intervals between --from and --to");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (analyze->parsed()) cmd_analyze(opts, out, err);
        if (global->parsed()) cmd_optimize(opts, false, out, err);
        if (distributed->parsed()) cmd_optimize(opts, true, out, err);
        if (simulate->parsed()) cmd_simulate(opts, out, err);
        if (compare->parsed()) cmd_compare(opts, out, err);
        if (sweep->parsed()) cmd_sweep(opts, out, err);
    } catch (const Error& e) {
        err << "Error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "Error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace v2x::cli
