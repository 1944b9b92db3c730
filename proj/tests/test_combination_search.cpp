#include "adamec/combination_search.hpp"

#include <cmath>
#include <optional>

#include "test_support.hpp"

using namespace adamec;

namespace {

struct AlexnetFixture {
    DnnGraph graph = build_model("alexnet", 1);
    PartitionScheme scheme = prepartition(graph, oracle_costs(mobile_profile(), edge_profile()));
    std::vector<DeviceProfile> profiles{mobile_profile(), edge_profile("edge1", 2),
                                        edge_profile("edge2", 3)};
    PlacementCostModel model = oracle_cost_model(profiles);

    ContextSnapshot ample_ctx() const {
        ContextSnapshot ctx;
        ctx.bandwidth_mbps = 40.0;
        ctx.t_user_ms = 10000.0;
        ctx.devices = {{"mobile", 512.0, 1e6, true},
                       {"edge1", 512.0, 1e6, true},
                       {"edge2", 512.0, 1e6, true}};
        return ctx;
    }
};

double sum_atom_ms(const Atom& atom, const DeviceProfile& dev, double avail) {
    double total = 0.0;
    for (const auto& op : atom.ops) total += execution_latency_ms(dev, op, avail);
    return total;
}

// Randomized small instance: 2-6 single-op atoms, 1-3 edge devices, budgets
// drawn around the demand scale so feasibility varies across instances.
struct RandomInstance {
    std::vector<Atom> atoms;
    ContextSnapshot ctx;
    PlacementCostModel model;
    std::vector<int> start;
};

RandomInstance random_instance(std::uint64_t seed) {
    Rng rng(derive_rng(seed, hash_string("search-instance")).next_u64());
    RandomInstance inst;

    const int n_atoms = static_cast<int>(rng.uniform_int(2, 6));
    const int n_edge = static_cast<int>(rng.uniform_int(1, 3));
    std::uint64_t boundary = rng.uniform_int(1000, 1000000);
    double total_mflops = 0.0;
    double total_param_mb = 0.0;
    for (int a = 0; a < n_atoms; ++a) {
        Atom atom;
        atom.index = a;
        atom.id = "rand/atom" + std::to_string(a);
        atom.first_op = atom.last_op = a;
        const int hw = static_cast<int>(rng.uniform_int(8, 48));
        const int cin = static_cast<int>(rng.uniform_int(1, 128));
        const int cout = static_cast<int>(rng.uniform_int(1, 128));
        atom.ops.push_back(make_operator("op" + std::to_string(a), OperatorKind::Conv, a, hw, cin,
                                         cout, 3, 1));
        atom.mflops = atom.ops[0].mflops;
        atom.param_bytes = static_cast<std::uint64_t>(atom.ops[0].param_bytes);
        atom.in_bytes = boundary;
        boundary = rng.uniform_int(1000, 1000000);
        atom.out_bytes = boundary;
        total_mflops += atom.mflops;
        total_param_mb += static_cast<double>(atom.param_bytes) / 1e6;
        inst.atoms.push_back(std::move(atom));
    }

    // Edge locations run faster than local; speeds vary per instance.
    std::vector<double> ms_per_mflop(static_cast<std::size_t>(n_edge) + 1);
    std::vector<double> overhead(static_cast<std::size_t>(n_edge) + 1);
    ms_per_mflop[0] = rng.uniform(2.0, 6.0);
    overhead[0] = rng.uniform(0.01, 0.2);
    for (int j = 1; j <= n_edge; ++j) {
        ms_per_mflop[static_cast<std::size_t>(j)] = rng.uniform(0.1, 3.0);
        overhead[static_cast<std::size_t>(j)] = rng.uniform(0.01, 0.2);
    }
    inst.model = PlacementCostModel{
        [ms_per_mflop, overhead](int loc, const OperatorNode& op, double) {
            return overhead[static_cast<std::size_t>(loc)] +
                   op.mflops * ms_per_mflop[static_cast<std::size_t>(loc)];
        }};

    double t_dev = 0.0;
    for (const auto& atom : inst.atoms) t_dev += overhead[0] + atom.mflops * ms_per_mflop[0];

    // Memory demand is dominated by the peak boundary tensor, not conv
    // params, so budgets scale with both; tight deadlines and slow links are
    // the main source of infeasible instances.
    double peak_boundary_mb = 0.0;
    for (const auto& atom : inst.atoms)
        peak_boundary_mb = std::max(
            {peak_boundary_mb, static_cast<double>(atom.in_bytes) / 1e6,
             static_cast<double>(atom.out_bytes) / 1e6});
    const double mem_scale = total_param_mb + peak_boundary_mb;

    inst.ctx.bandwidth_mbps = rng.uniform(1.0, 100.0);
    inst.ctx.t_user_ms = t_dev * rng.uniform(0.25, 1.6);
    inst.ctx.devices.push_back({"local", rng.uniform(0.4 * mem_scale, 2.2 * mem_scale),
                                rng.uniform(0.4 * total_mflops, 2.2 * total_mflops), true});
    for (int j = 1; j <= n_edge; ++j)
        inst.ctx.devices.push_back({"edge" + std::to_string(j),
                                    rng.uniform(0.4 * mem_scale, 2.2 * mem_scale),
                                    rng.uniform(0.4 * total_mflops, 2.2 * total_mflops), true});

    inst.start.assign(static_cast<std::size_t>(n_atoms), 0);
    for (auto& loc : inst.start) loc = static_cast<int>(rng.uniform_int(0, n_edge));
    return inst;
}

struct ExhaustiveResult {
    std::optional<CombinationVertex> best_feasible;
    double best_benefit = -std::numeric_limits<double>::infinity();
    CombinationVertex min_distance;
    double min_d = std::numeric_limits<double>::infinity();
};

ExhaustiveResult exhaustive(const RandomInstance& inst, const SearchParams& params) {
    const AtomCostTable table(inst.atoms, inst.ctx, inst.model);
    const double t_dev =
        annotate(std::vector<int>(inst.atoms.size(), 0), inst.atoms, inst.ctx, table).latency_ms;
    const int locations = inst.ctx.location_count();

    ExhaustiveResult out;
    std::vector<int> assignment(inst.atoms.size(), 0);
    while (true) {
        const auto v = annotate(assignment, inst.atoms, inst.ctx, table);
        const double d = distance(v, inst.ctx, params.priorities);
        if (feasible(v, inst.ctx)) {
            const double benefit = scheme_benefit(v, inst.ctx, t_dev, params.weights);
            if (!out.best_feasible || benefit > out.best_benefit ||
                (benefit == out.best_benefit && v.assignment < out.best_feasible->assignment)) {
                out.best_feasible = v;
                out.best_benefit = benefit;
            }
        }
        if (d < out.min_d || (d == out.min_d && v.assignment < out.min_distance.assignment)) {
            out.min_distance = v;
            out.min_d = d;
        }
        // Odometer over assignment vectors.
        std::size_t pos = 0;
        while (pos < assignment.size() && ++assignment[pos] == locations) assignment[pos++] = 0;
        if (pos == assignment.size()) break;
    }
    return out;
}

}  // namespace

TEST_CASE("annotation sums demands and transfers") {
    const AlexnetFixture fx;
    const auto& atoms = fx.scheme.atoms;
    REQUIRE(atoms.size() == 5);
    const auto ctx = fx.ample_ctx();

    SECTION("all-local carries no transfers and the whole model") {
        const auto v = annotate({0, 0, 0, 0, 0}, atoms, ctx, fx.model);
        CHECK(v.transmission_ms == 0.0);
        // Full parameter set plus the largest boundary tensor (43264 bytes
        // entering atom 1).
        CHECK_THAT(v.mem_demand_mb[0], Catch::Matchers::WithinRel(8.750992, 1e-12));
        CHECK(v.mem_demand_mb[1] == 0.0);
        CHECK(v.mem_demand_mb[2] == 0.0);
        CHECK_THAT(v.compute_demand_mflops[0], Catch::Matchers::WithinRel(49.457408, 1e-12));
        double expect = 0.0;
        for (const auto& atom : atoms) expect += sum_atom_ms(atom, fx.profiles[0], 512.0);
        CHECK_THAT(v.latency_ms, Catch::Matchers::WithinRel(expect, 1e-12));
    }

    SECTION("first atom on edge1 uploads the input and one boundary") {
        const auto v = annotate({1, 0, 0, 0, 0}, atoms, ctx, fx.model);
        CHECK_THAT(v.mem_demand_mb[1], Catch::Matchers::WithinRel(0.063744, 1e-12));
        CHECK_THAT(v.mem_demand_mb[0], Catch::Matchers::WithinRel(8.730512, 1e-12));
        CHECK(v.mem_demand_mb[2] == 0.0);
        // input 12288 bytes + atom0/atom1 boundary 43264 bytes at 40 Mbps
        CHECK_THAT(v.transmission_ms, Catch::Matchers::WithinRel(11.1104, 1e-12));
        CHECK_THAT(v.compute_demand_mflops[1], Catch::Matchers::WithinRel(7.824448, 1e-12));
    }

    SECTION("edge-resident suffix pays the result return") {
        const auto v = annotate({0, 0, 0, 0, 1}, atoms, ctx, fx.model);
        // atom3/atom4 boundary 1024 bytes + result 400 bytes
        CHECK_THAT(v.transmission_ms,
                   Catch::Matchers::WithinRel(1424.0 * 8e-3 / 40.0, 1e-12));
    }

    SECTION("annotation is deterministic") {
        const auto a = annotate({1, 2, 0, 1, 0}, atoms, ctx, fx.model);
        const auto b = annotate({1, 2, 0, 1, 0}, atoms, ctx, fx.model);
        CHECK(a.latency_ms == b.latency_ms);
        CHECK(a.transmission_ms == b.transmission_ms);
        CHECK(a.mem_demand_mb == b.mem_demand_mb);
        CHECK(a.compute_demand_mflops == b.compute_demand_mflops);
    }

    SECTION("bad assignments are rejected") {
        CHECK_THROWS_MATCHES(annotate({0, 0}, atoms, ctx, fx.model), Error,
                             HasCode(ErrorCode::InvalidArgument));
        CHECK_THROWS_MATCHES(annotate({0, 0, 0, 0, 7}, atoms, ctx, fx.model), Error,
                             HasCode(ErrorCode::InvalidArgument));
        auto gone = ctx;
        gone.devices[2].active = false;
        CHECK_THROWS_MATCHES(annotate({0, 0, 0, 0, 2}, atoms, gone, fx.model), Error,
                             HasCode(ErrorCode::DeviceUnavailable));
    }
}

TEST_CASE("neighbors move exactly one atom to each other active location") {
    const AlexnetFixture fx;
    const auto ctx = fx.ample_ctx();

    const std::vector<int> home{0, 0, 0, 0, 0};
    const auto near = neighbor_assignments(home, ctx);
    CHECK(near.size() == 10);  // 5 atoms x 2 alternative locations
    for (const auto& n : near) {
        int diffs = 0;
        for (std::size_t i = 0; i < n.size(); ++i) diffs += n[i] != home[i];
        CHECK(diffs == 1);
        // Moving the changed atom back recreates the original assignment.
        bool involution = false;
        for (const auto& back : neighbor_assignments(n, ctx))
            involution = involution || back == home;
        CHECK(involution);
    }

    auto one_edge = ctx;
    one_edge.devices.resize(2);
    CHECK(neighbor_assignments({0}, one_edge).size() == 1);

    auto inactive = ctx;
    inactive.devices[2].active = false;
    CHECK(neighbor_assignments(home, inactive).size() == 5);
}

TEST_CASE("constraint distance is a one-sided euclidean gap") {
    ContextSnapshot ctx;
    ctx.t_user_ms = 100.0;
    ctx.devices = {{"local", 10.0, 50.0, true}};

    CombinationVertex v;
    v.assignment = {0};
    v.latency_ms = 103.0;            // over by 3
    v.compute_demand_mflops = {54.0};  // over by 4
    v.mem_demand_mb = {10.0};        // exactly at the budget

    CHECK(distance(v, ctx) == 5.0);
    CHECK_FALSE(feasible(v, ctx));

    SECTION("scaling all priorities by c scales d by sqrt(c)") {
        DistancePriorities scaled{4.0, 4.0, 4.0};
        CHECK_THAT(distance(v, ctx, scaled), Catch::Matchers::WithinRel(10.0, 1e-12));
    }

    SECTION("headroom is free") {
        v.latency_ms = 10.0;
        v.compute_demand_mflops = {1.0};
        v.mem_demand_mb = {0.5};
        CHECK(distance(v, ctx) == 0.0);
        CHECK(feasible(v, ctx));
    }

    SECTION("invalid priorities are rejected") {
        CHECK_THROWS_MATCHES(distance(v, ctx, DistancePriorities{0.0, 0.0, 0.0}), Error,
                             HasCode(ErrorCode::InvalidArgument));
        CHECK_THROWS_MATCHES(distance(v, ctx, DistancePriorities{-1.0, 1.0, 1.0}), Error,
                             HasCode(ErrorCode::InvalidArgument));
    }
}

TEST_CASE("feasibility coincides with zero distance on annotated vertices") {
    Rng rng(4242);
    const AlexnetFixture fx;
    for (int trial = 0; trial < 40; ++trial) {
        ContextSnapshot ctx;
        ctx.bandwidth_mbps = rng.uniform(5.0, 80.0);
        ctx.t_user_ms = rng.uniform(50.0, 600.0);
        for (int j = 0; j < 3; ++j)
            ctx.devices.push_back({"d" + std::to_string(j), rng.uniform(0.0, 12.0),
                                   rng.uniform(0.0, 60.0), true});
        std::vector<int> assignment(5);
        for (auto& a : assignment) a = static_cast<int>(rng.uniform_int(0, 2));
        const auto v = annotate(assignment, fx.scheme.atoms, ctx, fx.model);
        CHECK((distance(v, ctx) == 0.0) == feasible(v, ctx));
    }
}

TEST_CASE("scheme benefit trades saving for transfer and overrun") {
    ContextSnapshot ctx;
    ctx.t_user_ms = 1000.0;
    ctx.devices = {{"local", 1.0, 1.0, true}};

    CombinationVertex v;
    v.assignment = {0, 1};
    v.latency_ms = 60.0;
    v.transmission_ms = 10.0;

    const double t_dev = 100.0;
    CHECK_THAT(scheme_benefit(v, ctx, t_dev), Catch::Matchers::WithinRel(1.6094379124341003, 1e-12));

    SECTION("deadline overrun is charged") {
        ctx.t_user_ms = 55.0;
        CHECK_THAT(scheme_benefit(v, ctx, t_dev),
                   Catch::Matchers::WithinRel(1.6094379124341003 - 5.0, 1e-12));
        CHECK_THAT(scheme_benefit(v, ctx, t_dev, {1.0, 2.0}),
                   Catch::Matchers::WithinRel(1.6094379124341003 - 10.0, 1e-12));
    }

    SECTION("transfer-free schemes are neutral") {
        v.transmission_ms = 0.0;
        CHECK(scheme_benefit(v, ctx, t_dev) == 0.0);
    }

    SECTION("schemes slower than local are disqualified") {
        v.latency_ms = 200.0;
        v.transmission_ms = 10.0;
        CHECK(std::isinf(scheme_benefit(v, ctx, t_dev)));
        CHECK(scheme_benefit(v, ctx, t_dev) < 0.0);
    }
}

TEST_CASE("adaptive search matches exhaustive enumeration on random instances") {
    int feasible_instances = 0;
    int infeasible_instances = 0;
    for (std::uint64_t seed = 0; seed < 120; ++seed) {
        INFO("instance seed " << seed);
        const auto inst = random_instance(seed);

        SearchParams params;
        params.k = static_cast<int>(inst.atoms.size()) * inst.ctx.location_count();
        const auto oracle = exhaustive(inst, params);
        const auto got = adaptive_search(inst.start, inst.atoms, inst.ctx, inst.model, params);

        REQUIRE(got.feasible == oracle.best_feasible.has_value());
        if (oracle.best_feasible) {
            ++feasible_instances;
            CHECK(got.benefit == oracle.best_benefit);
            CHECK(feasible(got.vertex, inst.ctx));
            CHECK(got.vertex.assignment == oracle.best_feasible->assignment);
        } else {
            ++infeasible_instances;
            CHECK(got.distance == oracle.min_d);
            CHECK(got.vertex.assignment == oracle.min_distance.assignment);
        }
        CHECK(got.expansions <= params.max_expansions);
    }
    // The sampler must exercise both regimes.
    CHECK(feasible_instances >= 20);
    CHECK(infeasible_instances >= 10);
}

TEST_CASE("search handles the degenerate feasibility regimes") {
    const AlexnetFixture fx;

    SECTION("only the all-local vertex is feasible") {
        ContextSnapshot ctx;
        ctx.bandwidth_mbps = 40.0;
        ctx.t_user_ms = 100000.0;
        ctx.devices = {{"mobile", 512.0, 1e6, true}, {"edge1", 0.0, 0.0, true},
                       {"edge2", 0.0, 0.0, true}};
        const auto got = adaptive_search({0, 0, 0, 0, 0}, fx.scheme.atoms, ctx, fx.model);
        CHECK(got.feasible);
        CHECK(got.vertex.assignment == std::vector<int>{0, 0, 0, 0, 0});
        CHECK(got.benefit == 0.0);
    }

    SECTION("nothing feasible returns the closest vertex flagged infeasible") {
        const auto inst = random_instance(7);
        auto ctx = inst.ctx;
        ctx.t_user_ms = 1e-6;
        for (auto& d : ctx.devices) d.mem_budget_mb = 0.0;
        SearchParams params;
        params.k = static_cast<int>(inst.atoms.size()) * ctx.location_count();
        RandomInstance tight{inst.atoms, ctx, inst.model, inst.start};
        const auto oracle = exhaustive(tight, params);
        REQUIRE_FALSE(oracle.best_feasible.has_value());
        const auto got = adaptive_search(inst.start, inst.atoms, ctx, inst.model, params);
        CHECK_FALSE(got.feasible);
        CHECK(got.distance == oracle.min_d);
        CHECK(got.vertex.assignment == oracle.min_distance.assignment);
    }
}

TEST_CASE("search is deterministic and fast at alexnet scale") {
    const AlexnetFixture fx;
    auto ctx = fx.ample_ctx();
    ctx.t_user_ms = 400.0;
    ctx.devices[0].mem_budget_mb = 16.0;
    ctx.devices[1].mem_budget_mb = 8.0;
    ctx.devices[2].mem_budget_mb = 8.0;

    const auto a = adaptive_search({0, 0, 0, 0, 0}, fx.scheme.atoms, ctx, fx.model);
    const auto b = adaptive_search({0, 0, 0, 0, 0}, fx.scheme.atoms, ctx, fx.model);
    CHECK(a.vertex.assignment == b.vertex.assignment);
    CHECK(a.benefit == b.benefit);
    CHECK(a.expansions == b.expansions);
    CHECK(a.rounds == b.rounds);

    CHECK(a.decision_ms < 10.0);

    // Best feasible benefit in the beam never regresses across rounds.
    double prev = -std::numeric_limits<double>::infinity();
    for (const double r : a.round_best_benefit) {
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("search parameter validation") {
    const AlexnetFixture fx;
    const auto ctx = fx.ample_ctx();

    SearchParams bad_k;
    bad_k.k = 0;
    CHECK_THROWS_MATCHES(adaptive_search({0, 0, 0, 0, 0}, fx.scheme.atoms, ctx, fx.model, bad_k),
                         Error, HasCode(ErrorCode::InvalidArgument));

    SearchParams bad_mu;
    bad_mu.mu_d = -1.0;
    CHECK_THROWS_MATCHES(adaptive_search({0, 0, 0, 0, 0}, fx.scheme.atoms, ctx, fx.model, bad_mu),
                         Error, HasCode(ErrorCode::InvalidArgument));

    ContextSnapshot no_local;
    no_local.devices = {{"local", 1.0, 1.0, false}};
    CHECK_THROWS_MATCHES(adaptive_search({0, 0, 0, 0, 0}, fx.scheme.atoms, no_local, fx.model),
                         Error, HasCode(ErrorCode::InvalidArgument));
}
