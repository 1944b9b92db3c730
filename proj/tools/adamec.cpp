// adamec: command line front end for the partition / offload toolkit.
//
// Subcommands:
//   build-graph      synthesize an operator graph and write it as JSON
//   train-predictor  fit per-device latency predictors and report accuracy
//   prepartition     evaluate cut points and write atom manifests
//   simulate         replay a scenario under one or more strategies
//   report           merge metric logs into comparison tables
//
// Exit codes: 0 success, 2 invalid input, 3 insufficient data, 4 I/O failure.
// ADAMEC_LOG=info|debug enables progress output on stderr; default is quiet.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adamec/adamec.hpp"

namespace {

int log_level() {
    const char* env = std::getenv("ADAMEC_LOG");
    if (env == nullptr) return 0;
    const std::string v(env);
    if (v == "debug") return 2;
    if (v == "info") return 1;
    return 0;
}

void info(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "adamec: " << msg << "\n";
}

void debug(const std::string& msg) {
    if (log_level() >= 2) std::cerr << "adamec: " << msg << "\n";
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) adamec::raise(adamec::ErrorCode::IoError, "cannot create directory '" + dir + "'");
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) adamec::raise(adamec::ErrorCode::IoError, "cannot open '" + path + "' for writing");
    out << content;
    if (!out) adamec::raise(adamec::ErrorCode::IoError, "write failed for '" + path + "'");
    debug("wrote " + path);
}

// Canonical number text shared with the JSON dumps, so CSV and JSON agree.
std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return nlohmann::json(v).dump();
}

// --- train-predictor ---------------------------------------------------------

struct TrainArgs {
    std::string out;
    std::uint64_t seed = 1;
    double samples_scale = 1.0;
};

void cmd_train_predictor(const TrainArgs& a) {
    if (!(a.samples_scale > 0.0))
        adamec::raise(adamec::ErrorCode::InvalidArgument, "--samples-scale must be > 0");
    ensure_dir(a.out);

    adamec::PredictorConfig cfg;
    cfg.seed = a.seed;
    for (auto& [kind, budget] : cfg.samples_per_kind)
        budget = static_cast<int>(budget * a.samples_scale);

    std::string csv =
        "device,kind,train_configs,eval_configs,acc10,r2,mae_ms,"
        "low_mem_mae_raw,low_mem_mae_corrected,low_mem_rows,bias_degenerate\n";

    const std::vector<adamec::DeviceProfile> devices = {adamec::mobile_profile(),
                                                        adamec::edge_profile()};
    for (const auto& device : devices) {
        info("training predictor for device '" + device.id + "'");
        const auto predictor = adamec::train_predictor(device, cfg);
        predictor.save(a.out + "/" + device.id + ".predictor.json");
        for (const auto& [kind, r] : predictor.reports()) {
            csv += device.id;
            csv += ',';
            csv += adamec::to_string(kind);
            csv += ',';
            csv += std::to_string(r.train_configs);
            csv += ',';
            csv += std::to_string(r.eval_configs);
            csv += ',';
            csv += num(r.acc10);
            csv += ',';
            csv += num(r.r2);
            csv += ',';
            csv += num(r.mae_ms);
            csv += ',';
            csv += num(r.low_mem_mae_raw);
            csv += ',';
            csv += num(r.low_mem_mae_corrected);
            csv += ',';
            csv += std::to_string(r.low_mem_rows);
            csv += ',';
            csv += r.bias_degenerate ? "1" : "0";
            csv += '\n';
        }
        debug("digest " + device.id + " = " + std::to_string(predictor.digest()));
    }
    write_file(a.out + "/predictor_metrics.csv", csv);
}

// --- build-graph --------------------------------------------------------------

struct GraphArgs {
    std::string model = "alexnet";
    int scale = 1;
    std::string out;
};

void cmd_build_graph(const GraphArgs& a) {
    const auto graph = adamec::build_model(a.model, a.scale);
    if (const auto parent = std::filesystem::path(a.out).parent_path(); !parent.empty())
        ensure_dir(parent.string());
    adamec::save_graph(graph, a.out);
    info("graph '" + graph.name + "': " + std::to_string(graph.nodes.size()) + " operators");
}

// --- prepartition -------------------------------------------------------------

struct PrepartitionArgs {
    std::string graph;
    std::string out;
    std::string models;  // empty: closed-form oracle costs
    adamec::PrepartitionContext ctx;
};

void cmd_prepartition(const PrepartitionArgs& a) {
    const auto graph = adamec::load_graph(a.graph);
    ensure_dir(a.out);

    // Keep predictors alive for the duration of the cost evaluation.
    std::optional<adamec::LatencyPredictor> mobile, edge;
    adamec::CostFns costs;
    if (a.models.empty()) {
        costs = adamec::oracle_costs(adamec::mobile_profile(), adamec::edge_profile());
    } else {
        mobile = adamec::LatencyPredictor::load(a.models + "/mobile.predictor.json");
        edge = adamec::LatencyPredictor::load(a.models + "/edge.predictor.json");
        costs = adamec::predictor_costs(*mobile, *edge);
    }

    const auto evals = adamec::evaluate_cuts(graph, costs, a.ctx);
    const auto scheme = adamec::prepartition(graph, costs, a.ctx);
    adamec::save_scheme(scheme, a.out);

    std::string csv = "index,crossing_bytes,t_exe_ms,t_tran_ms,saving_ms,benefit,retained\n";
    for (const auto& e : evals) {
        csv += std::to_string(e.index);
        csv += ',';
        csv += std::to_string(e.crossing_bytes);
        csv += ',';
        csv += num(e.t_exe_ms);
        csv += ',';
        csv += num(e.t_tran_ms);
        csv += ',';
        csv += num(e.saving_ms);
        csv += ',';
        csv += num(e.benefit);
        csv += ',';
        csv += e.retained ? "1" : "0";
        csv += '\n';
    }
    write_file(a.out + "/" + graph.name + ".benefits.csv", csv);
    info("scheme '" + graph.name + "': " + std::to_string(scheme.atoms.size()) + " atoms from " +
         std::to_string(evals.size()) + " candidate cuts");
}

// --- simulate -----------------------------------------------------------------

struct SimulateArgs {
    std::string scenario;
    std::string out;
    std::string models;  // empty: decisions use the oracle cost model
    std::vector<std::string> strategies;
    std::optional<std::uint64_t> seed;
    std::optional<int> k;
    std::optional<double> mu_d;
    std::optional<double> lambda1, lambda2;
    std::optional<double> alpha, beta, gamma;
};

void cmd_simulate(const SimulateArgs& a) {
    adamec::Scenario base = adamec::load_scenario(a.scenario);
    if (a.seed) base.seed = *a.seed;
    if (a.k) base.search.k = *a.k;
    if (a.mu_d) base.search.mu_d = *a.mu_d;
    if (a.lambda1) base.search.weights.lambda1 = *a.lambda1;
    if (a.lambda2) base.search.weights.lambda2 = *a.lambda2;
    if (a.alpha) base.search.priorities.alpha = *a.alpha;
    if (a.beta) base.search.priorities.beta = *a.beta;
    if (a.gamma) base.search.priorities.gamma = *a.gamma;
    base.validate();
    ensure_dir(a.out);

    // Decisions may be guided by trained predictors (one per device id), but
    // request latencies are always priced by the oracle so strategies stay
    // comparable on the same ground truth.
    std::vector<adamec::LatencyPredictor> predictors;
    std::optional<adamec::PlacementCostModel> decision_model;
    if (!a.models.empty()) {
        predictors.reserve(base.devices.size());
        for (const auto& dev : base.devices)
            predictors.push_back(adamec::LatencyPredictor::load(a.models + "/" + dev.profile.id +
                                                                ".predictor.json"));
        std::vector<const adamec::LatencyPredictor*> ptrs;
        for (const auto& p : predictors) ptrs.push_back(&p);
        decision_model = adamec::predictor_cost_model(std::move(ptrs));
    }

    std::vector<adamec::Strategy> strategies;
    if (a.strategies.empty()) {
        strategies.push_back(base.strategy);
    } else {
        for (const auto& name : a.strategies)
            strategies.push_back(adamec::strategy_from_string(name));
    }

    std::string summary = "strategy,metric,value\n";
    for (const auto strategy : strategies) {
        info("simulating '" + base.name + "' with strategy " +
             std::string(adamec::to_string(strategy)));
        adamec::Runtime runtime(base, strategy, decision_model);
        const adamec::MetricsLog log = runtime.run();

        const std::string stem = a.out + "/" + base.name + "." + adamec::to_string(strategy);
        write_file(stem + ".metrics.json", adamec::to_json(log).dump(2) + "\n");
        write_file(stem + ".metrics.csv", adamec::metrics_csv(log));
        for (const auto& [metric, value] : adamec::summary_stats(log)) {
            summary += adamec::to_string(strategy);
            summary += ',';
            summary += metric;
            summary += ',';
            summary += num(value);
            summary += '\n';
        }
    }
    write_file(a.out + "/" + base.name + ".summary.csv", summary);
}

// --- report -------------------------------------------------------------------

struct ReportArgs {
    std::vector<std::string> logs;
    std::string out;
};

void cmd_report(const ReportArgs& a) {
    ensure_dir(a.out);
    std::string merged = "scenario,strategy,t_s,metric,device,value\n";
    std::string aggregates = "scenario,strategy,metric,value\n";
    for (const auto& path : a.logs) {
        const adamec::MetricsLog log = adamec::load_metrics(path);
        const std::string prefix = log.scenario + "," + log.strategy + ",";
        std::istringstream rows(adamec::metrics_csv(log));
        std::string line;
        std::getline(rows, line);  // per-log header; merged.csv carries its own
        while (std::getline(rows, line)) merged += prefix + line + "\n";
        for (const auto& [metric, value] : adamec::summary_stats(log))
            aggregates += prefix + metric + "," + num(value) + "\n";
        debug("merged " + path);
    }
    write_file(a.out + "/merged.csv", merged);
    write_file(a.out + "/aggregates.csv", aggregates);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"operator-level DNN partitioning and edge offload simulator"};
    app.require_subcommand(1);

    GraphArgs graph_args;
    auto* build_graph = app.add_subcommand("build-graph", "synthesize an operator graph as JSON");
    build_graph->add_option("--model", graph_args.model, "model family")
        ->required()
        ->check(CLI::IsMember(adamec::known_model_specs()));
    build_graph->add_option("--scale", graph_args.scale, "width/depth multiplier")
        ->check(CLI::PositiveNumber);
    build_graph->add_option("--out", graph_args.out, "output JSON path")->required();
    build_graph->callback([&] { cmd_build_graph(graph_args); });

    TrainArgs train_args;
    auto* train = app.add_subcommand("train-predictor", "fit per-device latency predictors");
    train->add_option("--out", train_args.out, "output directory")->required();
    train->add_option("--seed", train_args.seed, "sampling seed");
    train->add_option("--samples-scale", train_args.samples_scale,
                      "scale factor on per-kind sample budgets");
    train->callback([&] { cmd_train_predictor(train_args); });

    PrepartitionArgs prep_args;
    auto* prep = app.add_subcommand("prepartition", "evaluate cuts and write atom manifests");
    prep->add_option("--graph", prep_args.graph, "operator graph JSON")->required();
    prep->add_option("--out", prep_args.out, "output directory")->required();
    prep->add_option("--models", prep_args.models, "predictor directory (default: oracle costs)");
    prep->add_option("--bandwidth", prep_args.ctx.bandwidth_mbps, "reference bandwidth, Mbps");
    prep->add_option("--t-user", prep_args.ctx.t_user_ms, "reference response deadline, ms");
    prep->add_option("--lambda1", prep_args.ctx.lambda1, "weight of the latency-saving term");
    prep->add_option("--lambda2", prep_args.ctx.lambda2, "weight of the deadline penalty");
    prep->callback([&] { cmd_prepartition(prep_args); });

    SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate", "replay a scenario and write metric logs");
    sim->add_option("--scenario", sim_args.scenario, "scenario JSON")->required();
    sim->add_option("--out", sim_args.out, "output directory")->required();
    sim->add_option("--models", sim_args.models, "predictor directory guiding decisions");
    sim->add_option("--strategy", sim_args.strategies,
                    "strategy override, repeatable (adamec, on_device, once_offload, "
                    "layer_incremental)");
    sim->add_option("--seed", sim_args.seed, "seed override");
    sim->add_option("--k", sim_args.k, "search beam width");
    sim->add_option("--mu-d", sim_args.mu_d, "phase-1 goal distance");
    sim->add_option("--lambda1", sim_args.lambda1, "benefit: latency-saving weight");
    sim->add_option("--lambda2", sim_args.lambda2, "benefit: deadline penalty weight");
    sim->add_option("--alpha", sim_args.alpha, "distance priority: deadline overrun");
    sim->add_option("--beta", sim_args.beta, "distance priority: compute overrun");
    sim->add_option("--gamma", sim_args.gamma, "distance priority: memory overrun");
    sim->callback([&] { cmd_simulate(sim_args); });

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "merge metric logs into comparison tables");
    report->add_option("logs", report_args.logs, "metric log JSON paths")->required();
    report->add_option("--out", report_args.out, "output directory")->required();
    report->callback([&] { cmd_report(report_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const adamec::Error& e) {
        std::cerr << "adamec: error: " << e.what() << "\n";
        switch (e.code()) {
            case adamec::ErrorCode::InsufficientData:
                return 3;
            case adamec::ErrorCode::IoError:
                return 4;
            default:
                return 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "adamec: error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
