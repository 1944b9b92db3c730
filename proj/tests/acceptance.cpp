// Release gate. Each check prints one PASS/FAIL line; the process exits
// nonzero if any check fails. Checks 1-10 compute a canonical transcript of
// their outputs; the whole battery runs twice and check 11 passes when both
// transcripts are byte-identical.
//
//  1. combination-space counts at operator / layer / atom granularity
//  2. cut filter soundness against an independent benefit re-evaluation
//  3. adaptive search matches exhaustive enumeration at small scale
//  4. offload planner matches brute-force hypercube shortest paths
//  5. predictor accuracy and memory-bias correction on the noisy oracle
//  6. bias-model analytic gradients vs central differences
//  7. closed-form oracle patterns (staircase, quadratic, threshold, monotone)
//  8. stable-scenario latency timelines: adamec vs once/layer baselines
//  9. per-device resident bytes vs the full-replication baseline
// 10. dynamic-scenario replay: one decision per context change, <10 ms each
// 11. determinism: the 1-10 transcript is byte-identical across reruns

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "adamec/adamec.hpp"

#ifndef ADAMEC_SOURCE_DIR
#error "ADAMEC_SOURCE_DIR must point at the repository root"
#endif

namespace {

using namespace adamec;

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return nlohmann::json(v).dump();
}

bool close(double a, double b, double rel) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

std::uint64_t ipow(std::uint64_t base, int exp) {
    std::uint64_t out = 1;
    for (int i = 0; i < exp; ++i) out *= base;
    return out;
}

struct CheckResult {
    bool pass = true;
    std::string note;       // human-readable summary, may include wall times
    std::string canonical;  // deterministic transcript, compared across passes

    void require(bool cond, const std::string& what) {
        if (!cond) {
            pass = false;
            note += (note.empty() ? "" : "; ") + what;
        }
    }
};

double wall_ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

// --- 1. combination-space counts ---------------------------------------------

CheckResult check_counts() {
    CheckResult r;
    const auto t0 = std::chrono::steady_clock::now();

    const auto graph = build_model("alexnet", 1);
    const auto scheme =
        prepartition(graph, oracle_costs(mobile_profile(), edge_profile()), {4.79, 1000.0, 1.0, 1.0});
    const int locations = 3;  // local + two edge devices

    const std::uint64_t by_op = ipow(locations, static_cast<int>(graph.nodes.size()));
    const std::uint64_t by_layer = ipow(locations, graph.block_count());
    const std::uint64_t by_atom = ipow(locations, static_cast<int>(scheme.atoms.size()));

    r.require(graph.nodes.size() == 23, "operator count is " + std::to_string(graph.nodes.size()));
    r.require(graph.block_count() == 8, "layer count is " + std::to_string(graph.block_count()));
    r.require(scheme.atoms.size() == 5, "atom count is " + std::to_string(scheme.atoms.size()));
    r.require(by_op == 94143178827ULL, "3^23 mismatch");
    r.require(by_layer == 6561ULL, "3^8 mismatch");
    r.require(by_atom == 243ULL, "3^5 mismatch");

    const double ms = wall_ms_since(t0);
    r.require(ms < 1000.0, "took " + fmt(ms) + " ms");
    std::ostringstream canon;
    canon << by_op << "/" << by_layer << "/" << by_atom;
    r.canonical = canon.str();
    if (r.pass) r.note = "3^23=" + std::to_string(by_op) + ", 3^8=6561, 3^5=243";
    return r;
}

// --- 2. cut filter soundness --------------------------------------------------

CheckResult check_filter() {
    CheckResult r;
    const auto t0 = std::chrono::steady_clock::now();
    const auto costs = oracle_costs(mobile_profile(), edge_profile());

    Rng rng(20260815);
    int retained_total = 0, cuts_total = 0;
    for (const std::string model : {"alexnet", "googlenet", "resnet18"}) {
        const auto graph = build_model(model, 1);

        // independent ingredients: per-operator costs and prefix/suffix sums
        std::vector<double> mob, edg;
        for (const auto& op : graph.nodes) {
            mob.push_back(costs.mobile_ms(op));
            edg.push_back(costs.edge_ms(op));
        }
        double t_device = 0.0;
        for (const double v : mob) t_device += v;

        for (int trial = 0; trial < 50; ++trial) {
            PrepartitionContext ctx;
            ctx.bandwidth_mbps = rng.uniform(1.0, 50.0);
            ctx.t_user_ms = rng.uniform(200.0, 4000.0);
            ctx.lambda1 = rng.uniform(0.5, 2.0);
            ctx.lambda2 = rng.uniform(0.5, 2.0);

            const auto evals = evaluate_cuts(graph, costs, ctx);
            for (const auto& e : evals) {
                double prefix = 0.0, suffix = 0.0;
                for (int i = 0; i < e.index; ++i) prefix += mob[static_cast<std::size_t>(i)];
                for (std::size_t i = static_cast<std::size_t>(e.index); i < edg.size(); ++i)
                    suffix += edg[i];
                const double exe = prefix + suffix;
                const double tran = static_cast<double>(e.crossing_bytes +
                                                        static_cast<std::uint64_t>(
                                                            graph.output_bytes())) *
                                    8e-3 / ctx.bandwidth_mbps;
                const double saving = t_device - exe;
                double benefit;
                if (saving <= 0.0) {
                    benefit = -std::numeric_limits<double>::infinity();
                } else {
                    benefit = ctx.lambda1 * std::log(saving / tran) -
                              ctx.lambda2 * std::max(0.0, exe + tran - ctx.t_user_ms);
                }
                r.require(close(benefit, e.benefit, 1e-9),
                          model + " cut " + std::to_string(e.index) + " benefit mismatch");
                r.require(e.retained == (benefit > 0.0),
                          model + " cut " + std::to_string(e.index) + " retention contradicts sign");
                if (e.retained) ++retained_total;
                ++cuts_total;
            }
        }
    }
    r.require(retained_total > 0, "no context retained any cut");
    r.require(retained_total < cuts_total, "no context rejected any cut");

    const double ms = wall_ms_since(t0);
    r.require(ms < 10000.0, "took " + fmt(ms) + " ms");
    r.canonical = std::to_string(cuts_total) + ":" + std::to_string(retained_total);
    if (r.pass)
        r.note = std::to_string(cuts_total) + " cut evaluations, " +
                 std::to_string(retained_total) + " retained, signs all consistent";
    return r;
}

// --- 3. search optimality at small scale ---------------------------------------

CheckResult check_search_optimality() {
    CheckResult r;
    const auto t0 = std::chrono::steady_clock::now();

    Rng rng(3);
    int feasible_count = 0, infeasible_count = 0;
    for (int trial = 0; trial < 120 && r.pass; ++trial) {
        const int n_atoms = static_cast<int>(rng.uniform_int(2, 6));
        const int n_loc = static_cast<int>(rng.uniform_int(2, 3));

        std::vector<std::uint64_t> boundary;
        for (int i = 0; i <= n_atoms; ++i)
            boundary.push_back(static_cast<std::uint64_t>(rng.uniform_int(1000, 500000)));

        std::vector<Atom> atoms;
        for (int a = 0; a < n_atoms; ++a) {
            Atom atom;
            atom.id = "a" + std::to_string(a);
            atom.index = a;
            const int n_ops = static_cast<int>(rng.uniform_int(1, 2));
            for (int o = 0; o < n_ops; ++o) {
                const std::vector<int> kernels{1, 3, 5};
                const int k = rng.pick(kernels);
                const auto op = make_operator(
                    atom.id + "op" + std::to_string(o), OperatorKind::Conv, a,
                    k + static_cast<int>(rng.uniform_int(1, 43)),
                    static_cast<int>(rng.uniform_int(1, 96)),
                    static_cast<int>(rng.uniform_int(1, 96)), k,
                    static_cast<int>(rng.uniform_int(1, 2)));
                atom.param_bytes += op.param_bytes;
                atom.mflops += operator_flops(op);
                atom.ops.push_back(op);
            }
            atom.in_bytes = boundary[static_cast<std::size_t>(a)];
            atom.out_bytes = boundary[static_cast<std::size_t>(a) + 1];
            atom.manifest_bytes = 256;
            atoms.push_back(std::move(atom));
        }

        std::vector<DeviceProfile> profiles;
        ContextSnapshot ctx;
        ctx.bandwidth_mbps = rng.uniform(1.0, 50.0);
        ctx.t_user_ms = rng.uniform(5.0, 5000.0);
        for (int loc = 0; loc < n_loc; ++loc) {
            DeviceProfile p;
            p.id = "d" + std::to_string(loc);
            p.speed_macs_per_ms = rng.uniform(5e4, 5e6);
            p.fixed_overhead_ms = rng.uniform(0.01, 0.2);
            p.noise = 0.05;
            p.seed = rng.next_u64();
            profiles.push_back(std::move(p));
            DeviceBudget b;
            b.id = "d" + std::to_string(loc);
            b.mem_budget_mb = rng.uniform(0.05, 4.0);
            b.compute_budget_mflops = rng.uniform(1.0, 2000.0);
            ctx.devices.push_back(std::move(b));
        }

        const auto model = oracle_cost_model(profiles);
        SearchParams params;
        params.k = n_atoms * n_loc;
        params.mu_d = 0.0;

        const std::vector<int> current(static_cast<std::size_t>(n_atoms), 0);
        const auto result = adaptive_search(current, atoms, ctx, model, params);

        // exhaustive reference over every assignment vector
        const AtomCostTable table(atoms, ctx, model);
        const double t_device = annotate(current, atoms, ctx, table).latency_ms;
        bool any_feasible = false;
        double best = -std::numeric_limits<double>::infinity();
        std::vector<int> assign(static_cast<std::size_t>(n_atoms), 0);
        const auto total = ipow(static_cast<std::uint64_t>(n_loc), n_atoms);
        for (std::uint64_t code = 0; code < total; ++code) {
            std::uint64_t c = code;
            for (int a = 0; a < n_atoms; ++a) {
                assign[static_cast<std::size_t>(a)] = static_cast<int>(c % n_loc);
                c /= n_loc;
            }
            const auto v = annotate(assign, atoms, ctx, table);
            if (!feasible(v, ctx)) continue;
            any_feasible = true;
            best = std::max(best, scheme_benefit(v, ctx, t_device, params.weights));
        }

        r.require(result.feasible == any_feasible,
                  "trial " + std::to_string(trial) + " feasibility flag mismatch");
        if (any_feasible) {
            ++feasible_count;
            r.require(close(result.benefit, best, 1e-9),
                      "trial " + std::to_string(trial) + " benefit " + fmt(result.benefit) +
                          " != optimum " + fmt(best));
        } else {
            ++infeasible_count;
        }
    }
    r.require(feasible_count >= 10, "too few feasible instances");
    r.require(infeasible_count >= 10, "too few infeasible instances");

    const double ms = wall_ms_since(t0);
    r.require(ms < 30000.0, "took " + fmt(ms) + " ms");
    r.canonical = std::to_string(feasible_count) + ":" + std::to_string(infeasible_count);
    if (r.pass)
        r.note = "120 instances (" + std::to_string(feasible_count) + " feasible, " +
                 std::to_string(infeasible_count) + " infeasible), all optimal";
    return r;
}

// --- 4. planner optimality -----------------------------------------------------

CheckResult check_planner_optimality() {
    CheckResult r;
    const auto t0 = std::chrono::steady_clock::now();

    Rng rng(4);
    double total_sum = 0.0;
    for (int trial = 0; trial < 120 && r.pass; ++trial) {
        const int n_atoms = static_cast<int>(rng.uniform_int(3, 8));
        const int n_loc = static_cast<int>(rng.uniform_int(2, 4));

        std::vector<Atom> atoms;
        for (int a = 0; a < n_atoms; ++a) {
            Atom atom;
            atom.id = "a" + std::to_string(a);
            atom.index = a;
            atom.param_bytes = static_cast<std::uint64_t>(rng.uniform_int(100, 10000000));
            atom.manifest_bytes = static_cast<std::uint64_t>(rng.uniform_int(64, 2048));
            atoms.push_back(std::move(atom));
        }

        ContextSnapshot ctx;
        ctx.bandwidth_mbps = rng.uniform(1.0, 60.0);
        ctx.t_user_ms = 1000.0;
        for (int loc = 0; loc < n_loc; ++loc) {
            DeviceBudget b;
            b.id = "d" + std::to_string(loc);
            b.mem_budget_mb = 64.0;
            b.compute_budget_mflops = 1e6;
            ctx.devices.push_back(std::move(b));
        }

        std::vector<int> current, target;
        for (int a = 0; a < n_atoms; ++a)
            current.push_back(static_cast<int>(rng.uniform_int(0, n_loc - 1)));
        target = current;
        const int differing = static_cast<int>(rng.uniform_int(1, 4));
        std::vector<int> idx(static_cast<std::size_t>(n_atoms));
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        for (int d = 0; d < differing; ++d) {
            const auto a = static_cast<std::size_t>(idx[static_cast<std::size_t>(d)]);
            int loc = current[a];
            while (loc == current[a]) loc = static_cast<int>(rng.uniform_int(0, n_loc - 1));
            target[a] = loc;
        }

        std::map<std::pair<int, std::string>, bool> resident;
        for (int loc = 0; loc < n_loc; ++loc)
            for (const auto& atom : atoms)
                resident[{loc, atom.id}] = rng.next_double() < 0.3;
        const ResidencyFn resident_fn = [&](int loc, const std::string& id) {
            return resident.at({loc, id});
        };

        const auto plan = plan_offload(current, target, atoms, ctx, resident_fn);
        r.require(verify_plan(plan, current, target, atoms),
                  "trial " + std::to_string(trial) + " plan does not replay onto target");

        // brute-force shortest path over the differing-atom hypercube
        std::vector<double> weights;
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            if (current[a] == target[a]) continue;
            double w = 0.0;
            if (!resident.at({target[a], atoms[a].id}))
                w = static_cast<double>(atoms[a].manifest_bytes + atoms[a].param_bytes) * 8e-3 /
                    ctx.bandwidth_mbps;
            weights.push_back(w);
        }
        const std::size_t states = std::size_t{1} << weights.size();
        std::vector<double> dist(states, std::numeric_limits<double>::infinity());
        dist[0] = 0.0;
        for (std::size_t s = 0; s < states; ++s)  // topological order over subsets
            for (std::size_t bit = 0; bit < weights.size(); ++bit)
                if (!(s & (std::size_t{1} << bit)))
                    dist[s | (std::size_t{1} << bit)] =
                        std::min(dist[s | (std::size_t{1} << bit)], dist[s] + weights[bit]);
        const double brute = dist[states - 1];

        r.require(close(plan.total_overhead_ms, brute, 1e-12),
                  "trial " + std::to_string(trial) + " total " + fmt(plan.total_overhead_ms) +
                      " != brute " + fmt(brute));
        r.require(plan.moves.size() == weights.size(),
                  "trial " + std::to_string(trial) + " wrong move count");
        for (std::size_t i = 1; i < plan.moves.size(); ++i) {
            const auto& prev = plan.moves[i - 1];
            const auto& cur = plan.moves[i];
            r.require(prev.overhead_ms <= cur.overhead_ms + 1e-15,
                      "trial " + std::to_string(trial) + " moves not cheapest-first");
            if (prev.overhead_ms == cur.overhead_ms)
                r.require(prev.atom < cur.atom,
                          "trial " + std::to_string(trial) + " tie not atom-ordered");
        }
        total_sum += plan.total_overhead_ms;
    }

    const double ms = wall_ms_since(t0);
    r.require(ms < 30000.0, "took " + fmt(ms) + " ms");
    r.canonical = fmt(total_sum);
    if (r.pass) r.note = "120 instances, totals match brute force, orderings canonical";
    return r;
}

// --- 5. predictor quality -------------------------------------------------------

CheckResult check_predictor() {
    CheckResult r;
    const auto t0 = std::chrono::steady_clock::now();

    const auto device = edge_profile();  // noise 0.05
    PredictorConfig cfg;
    cfg.samples_per_kind = {{OperatorKind::Conv, cfg.samples_per_kind.at(OperatorKind::Conv)}};
    const auto predictor = train_predictor(device, cfg);
    const auto& report = predictor.reports().at(OperatorKind::Conv);

    r.require(report.acc10 >= 0.85, "held-out acc10 " + fmt(report.acc10) + " < 0.85");
    r.require(report.r2 >= 0.90, "held-out R^2 " + fmt(report.r2) + " < 0.90");

    // sub-threshold RMSE, forest-only vs bias-corrected, on fresh configs
    Rng rng(5);
    double sq_raw = 0.0, sq_cor = 0.0;
    const int n_eval = 300;
    for (int i = 0; i < n_eval; ++i) {
        const auto op = detail::sample_operator_config(OperatorKind::Conv, rng);
        const double avail = rng.uniform(0.15, 0.85) * memory_threshold_mb(device, op);
        const double truth = execution_latency_ms(device, op, avail);
        const double raw = predictor.predict_base_ms(op);
        const double cor = predictor.predict_ms(op, avail);
        sq_raw += (raw - truth) * (raw - truth);
        sq_cor += (cor - truth) * (cor - truth);
    }
    const double rmse_raw = std::sqrt(sq_raw / n_eval);
    const double rmse_cor = std::sqrt(sq_cor / n_eval);
    r.require(rmse_cor <= 0.70 * rmse_raw, "bias correction reduces sub-threshold RMSE only " +
                                               fmt(rmse_raw) + " -> " + fmt(rmse_cor));

    const double ms = wall_ms_since(t0);
    r.require(ms < 300000.0, "took " + fmt(ms) + " ms");
    r.canonical = fmt(report.acc10) + "/" + fmt(report.r2) + "/" + fmt(rmse_raw) + "/" +
                  fmt(rmse_cor);
    if (r.pass)
        r.note = "Conv acc10=" + fmt(report.acc10) + " R^2=" + fmt(report.r2) +
                 " sub-threshold RMSE " + fmt(rmse_raw) + " -> " + fmt(rmse_cor);
    return r;
}

// --- 6. bias gradient check -----------------------------------------------------

CheckResult check_gradient() {
    CheckResult r;
    const auto t0 = std::chrono::steady_clock::now();

    BiasModel model;
    model.init(16, 99);
    Rng rng(6);
    for (auto& p : model.parameters()) p += 0.05 * (2.0 * rng.next_double() - 1.0);

    std::vector<double> analytic;
    double worst = 0.0;
    for (int point = 0; point < 20; ++point) {
        const std::array<double, 3> x{rng.uniform(0.1, 50.0), rng.uniform(0.1, 20.0),
                                      rng.uniform(0.1, 300.0)};
        const double y = rng.uniform(-2.0, 2.0);
        model.loss_and_grad(x, y, &analytic);
        auto& params = model.parameters();
        for (std::size_t p = 0; p < params.size(); ++p) {
            const double keep = params[p];
            const double h = 1e-6 * std::max(1.0, std::abs(keep));
            params[p] = keep + h;
            const double up = model.loss_and_grad(x, y, nullptr);
            params[p] = keep - h;
            const double down = model.loss_and_grad(x, y, nullptr);
            params[p] = keep;
            const double numeric = (up - down) / (2.0 * h);
            worst = std::max(worst, std::abs(analytic[p] - numeric) /
                                        std::max({std::abs(analytic[p]), std::abs(numeric), 1e-6}));
        }
    }
    r.require(worst < 1e-4, "worst relative gradient error " + fmt(worst));

    const double ms = wall_ms_since(t0);
    r.require(ms < 5000.0, "took " + fmt(ms) + " ms");
    r.canonical = fmt(worst);
    if (r.pass) r.note = "20 points, worst relative error " + fmt(worst);
    return r;
}

// --- 7. oracle patterns ----------------------------------------------------------

CheckResult check_oracle_patterns() {
    CheckResult r;
    const auto t0 = std::chrono::steady_clock::now();

    auto dev = edge_profile("edge", 7);
    dev.noise = 0.0;

    // channel staircase: work is rounded up to 32-channel lanes
    const auto conv_cin = [&](int cin) {
        return execution_latency_ms(
            dev, make_operator("c", OperatorKind::Conv, 1, 34, cin, 16, 3, 1), kAmpleMemoryMb);
    };
    r.require(conv_cin(1) == conv_cin(32), "staircase flat within a lane");
    r.require(conv_cin(33) == conv_cin(64), "staircase flat within the next lane");
    r.require(conv_cin(65) > conv_cin(64), "staircase steps at the lane boundary");

    // quadratic growth in output size (stride 2: hw 33 -> out 16, hw 17 -> out 8)
    const auto conv_hw = [&](int hw) {
        return execution_latency_ms(dev,
                                    make_operator("c", OperatorKind::Conv, 1, hw, 32, 32, 3, 2),
                                    kAmpleMemoryMb) -
               dev.fixed_overhead_ms;
    };
    r.require(close(conv_hw(33) / conv_hw(17), 4.0, 1e-12), "quadratic growth in output size");

    // memory threshold: flat above, multiplicative penalty below
    const auto op = make_operator("c", OperatorKind::Conv, 1, 34, 3, 16, 3, 1);
    const double m0 = memory_threshold_mb(dev, op);
    const double ample = execution_latency_ms(dev, op, kAmpleMemoryMb);
    r.require(execution_latency_ms(dev, op, 2.0 * m0) == ample, "flat above the threshold");
    r.require(execution_latency_ms(dev, op, m0) == ample, "flat at the threshold");
    r.require(close(execution_latency_ms(dev, op, 0.5 * m0),
                    ample * (1.0 + dev.penalty_slope * 0.5), 1e-12),
              "penalty multiplier at half threshold");
    r.require(execution_latency_ms(dev, op, -1.0) == execution_latency_ms(dev, op, 0.0),
              "negative availability clamps to zero");

    // monotone: latency never decreases as memory tightens
    double prev = 0.0;
    bool monotone = true;
    for (const double frac : {1.0, 0.8, 0.6, 0.4, 0.2, 0.0}) {
        const double lat = execution_latency_ms(dev, op, m0 * frac);
        monotone = monotone && lat >= prev;
        prev = lat;
    }
    r.require(monotone, "latency not monotone in memory pressure");

    const double ms = wall_ms_since(t0);
    r.require(ms < 5000.0, "took " + fmt(ms) + " ms");
    r.canonical = fmt(ample) + "/" + fmt(m0);
    if (r.pass) r.note = "staircase, quadratic, threshold, monotonicity all exact";
    return r;
}

// --- 8/9. stable-scenario timelines ----------------------------------------------

Scenario load_repo_scenario(const std::string& name) {
    return load_scenario(std::string(ADAMEC_SOURCE_DIR) + "/scenarios/" + name);
}

CheckResult check_latency_timeline() {
    CheckResult r;
    const auto t0 = std::chrono::steady_clock::now();

    const auto scenario = load_repo_scenario("googlenet_stable.json");
    const auto ada = Runtime(scenario, Strategy::Adamec).run();
    const auto once = Runtime(scenario, Strategy::OnceOffload).run();
    const auto layer = Runtime(scenario, Strategy::LayerIncremental).run();
    const auto local = Runtime(scenario, Strategy::OnDevice).run();
    const double t_local = local.responses.front().latency_ms;

    r.require(ada.responses.size() == layer.responses.size() &&
                  ada.responses.size() == once.responses.size(),
              "request grids differ");

    bool non_increasing = true;
    for (std::size_t i = 1; i < ada.responses.size(); ++i)
        non_increasing =
            non_increasing && ada.responses[i].latency_ms <= ada.responses[i - 1].latency_ms + 1e-9;
    r.require(non_increasing, "adamec latency series increases");

    const auto first_improvement = [&](const MetricsLog& log) {
        for (const auto& resp : log.responses)
            if (resp.latency_ms < t_local - 1e-9) return resp.t_s;
        return std::numeric_limits<double>::infinity();
    };
    const double fi_ada = first_improvement(ada);
    const double fi_once = first_improvement(once);
    r.require(std::isfinite(fi_ada), "adamec never improves on local");
    r.require(fi_ada < fi_once, "adamec first improvement " + fmt(fi_ada) +
                                    " not earlier than once_offload " + fmt(fi_once));

    int layer_above = 0;
    for (std::size_t i = 0; i < ada.responses.size(); ++i) {
        r.require(ada.responses[i].t_s == layer.responses[i].t_s, "request times differ");
        if (layer.responses[i].latency_ms > ada.responses[i].latency_ms + 1e-9) ++layer_above;
    }
    r.require(layer_above >= 1, "layer_incremental never above adamec");

    const double ms = wall_ms_since(t0);
    r.require(ms < 60000.0, "took " + fmt(ms) + " ms");
    std::ostringstream canon;
    canon << fmt(fi_ada) << "/" << fmt(fi_once) << "/" << layer_above;
    for (const auto& resp : ada.responses) canon << "," << fmt(resp.latency_ms);
    r.canonical = canon.str();
    if (r.pass)
        r.note = "first improvement " + fmt(fi_ada) + " s vs " + fmt(fi_once) + " s, layer above at " +
                 std::to_string(layer_above) + " request(s)";
    return r;
}

CheckResult check_memory_timeline() {
    CheckResult r;
    const auto t0 = std::chrono::steady_clock::now();

    const auto scenario = load_repo_scenario("googlenet_stable.json");
    const auto ada = Runtime(scenario, Strategy::Adamec).run();
    const auto once = Runtime(scenario, Strategy::OnceOffload).run();

    // full replication: every active device holds the whole model at all times
    const auto graph = build_model(scenario.model, scenario.scale);
    double total_mb = 0.0;
    for (const auto& op : graph.nodes) total_mb += static_cast<double>(op.param_bytes) / 1e6;

    double once_edge_peak = 0.0;
    for (const auto& sample : once.memory)
        if (sample.device != scenario.devices.front().profile.id)
            once_edge_peak = std::max(once_edge_peak, sample.resident_mb);
    r.require(close(once_edge_peak, total_mb, 1e-12),
              "replication baseline edge peak " + fmt(once_edge_peak) + " != whole model " +
                  fmt(total_mb));

    bool all_bounded = true, strict_somewhere = false;
    for (const auto& sample : ada.memory) {
        all_bounded = all_bounded && sample.resident_mb <= total_mb + 1e-12;
        if (sample.resident_mb < total_mb - 1e-12) strict_somewhere = true;
    }
    r.require(all_bounded, "adamec resident bytes exceed full replication");
    r.require(strict_somewhere, "adamec never strictly below full replication");

    const double ms = wall_ms_since(t0);
    r.require(ms < 60000.0, "took " + fmt(ms) + " ms");
    std::ostringstream canon;
    canon << fmt(total_mb);
    for (const auto& sample : ada.memory)
        canon << "," << sample.device << ":" << fmt(sample.resident_mb);
    r.canonical = canon.str();
    if (r.pass)
        r.note = "resident <= " + fmt(total_mb) + " MB replication bound everywhere, strictly below during ramp";
    return r;
}

// --- 10. dynamic-scenario replay ---------------------------------------------------

CheckResult check_dynamic_replay() {
    CheckResult r;
    const auto t0 = std::chrono::steady_clock::now();

    const auto scenario = load_repo_scenario("googlenet_dynamic.json");
    const auto log = Runtime(scenario).run();
    const auto rerun = Runtime(scenario).run();
    r.require(to_json(log).dump() == to_json(rerun).dump(), "replay is not deterministic");

    // one decision per context change, at the event's timestamp
    for (const auto& event : scenario.events) {
        int at_event = 0;
        for (const auto& d : log.decisions)
            if (d.t_s == event.t_s && d.trigger != "initial") ++at_event;
        r.require(at_event == 1, "event at t=" + fmt(event.t_s) + " produced " +
                                     std::to_string(at_event) + " decisions");
    }
    r.require(log.decisions.size() == scenario.events.size() + 1,
              "decision count != events + initial");

    int violations = 0;
    for (const auto& d : log.decisions) {
        if (d.trigger == "violation") {
            ++violations;
            r.require(d.adopted, "violation at t=" + fmt(d.t_s) + " not re-planned");
        }
        r.require(d.search_wall_ms < 10.0,
                  "search at t=" + fmt(d.t_s) + " took " + fmt(d.search_wall_ms) + " ms");
    }
    r.require(violations >= 1, "no invalidating event in the dynamic scenario");

    const double ms = wall_ms_since(t0);
    r.require(ms < 60000.0, "took " + fmt(ms) + " ms");
    std::ostringstream canon;
    for (const auto& d : log.decisions)
        canon << fmt(d.t_s) << ":" << d.trigger << ":" << (d.adopted ? 1 : 0) << ":" << d.moves
              << ";";
    canon << to_json(log).dump();
    r.canonical = canon.str();
    if (r.pass)
        r.note = std::to_string(scenario.events.size()) + " events -> " +
                 std::to_string(log.decisions.size() - 1) + " decisions (" +
                 std::to_string(violations) + " invalidating), all searches < 10 ms";
    return r;
}

struct Battery {
    std::vector<CheckResult> results;
    std::string transcript;
};

Battery run_battery() {
    Battery b;
    b.results.push_back(check_counts());
    b.results.push_back(check_filter());
    b.results.push_back(check_search_optimality());
    b.results.push_back(check_planner_optimality());
    b.results.push_back(check_predictor());
    b.results.push_back(check_gradient());
    b.results.push_back(check_oracle_patterns());
    b.results.push_back(check_latency_timeline());
    b.results.push_back(check_memory_timeline());
    b.results.push_back(check_dynamic_replay());
    for (std::size_t i = 0; i < b.results.size(); ++i)
        b.transcript += std::to_string(i + 1) + "|" + b.results[i].canonical + "\n";
    return b;
}

}  // namespace

int main() {
    static const char* kNames[] = {
        "combination-space counts (operator/layer/atom)",
        "cut filter soundness vs independent re-evaluation",
        "adaptive search optimal on exhaustive small instances",
        "offload plans match brute-force shortest paths",
        "predictor accuracy and memory-bias correction",
        "bias-model gradients match central differences",
        "oracle staircase/quadratic/threshold/monotonicity",
        "stable scenario: adamec timeline vs baselines",
        "resident bytes bounded by full replication",
        "dynamic scenario replay and decision latency",
        "byte-identical rerun of checks 1-10",
    };

    const Battery first = run_battery();
    const Battery second = run_battery();

    CheckResult determinism;
    determinism.require(first.transcript == second.transcript, "transcripts differ between runs");
    if (determinism.pass)
        determinism.note = std::to_string(first.transcript.size()) + " transcript bytes identical";

    std::vector<CheckResult> all = first.results;
    all.push_back(determinism);

    bool ok = true;
    for (std::size_t i = 0; i < all.size(); ++i) {
        ok = ok && all[i].pass;
        std::printf("%s %2zu. %s%s%s\n", all[i].pass ? "PASS" : "FAIL", i + 1, kNames[i],
                    all[i].note.empty() ? "" : ": ", all[i].note.c_str());
    }
    return ok ? 0 : 1;
}
