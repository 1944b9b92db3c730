#pragma once

// Context-adaptive combination search: atoms are assigned to devices, each
// assignment (a combination vertex) is annotated with predicted latency and
// per-device memory/compute demand, and a two-phase beam search over the
// implicit one-move-apart graph finds a feasible, maximum-benefit vertex when
// the deployment context changes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "adamec/cost_oracle.hpp"
#include "adamec/errors.hpp"
#include "adamec/latency_predictor.hpp"
#include "adamec/prepartition.hpp"

namespace adamec {

// A deployment context at one instant: uplink bandwidth, the user latency
// requirement, and per-location budgets. Location 0 is the local mobile
// host; locations 1..n are edge devices. Inactive entries keep their index
// so assignments stay stable across device leave/join.
struct DeviceBudget {
    std::string id;
    double mem_budget_mb = 0.0;
    double compute_budget_mflops = 0.0;
    bool active = true;
    bool operator==(const DeviceBudget&) const = default;
};

struct ContextSnapshot {
    double t_s = 0.0;
    double bandwidth_mbps = 40.0;
    double t_user_ms = 1000.0;
    std::vector<DeviceBudget> devices;  // [0] = local host

    bool operator==(const ContextSnapshot&) const = default;

    int location_count() const { return static_cast<int>(devices.size()); }

    void validate() const {
        if (devices.empty() || !devices[0].active)
            raise(ErrorCode::InvalidArgument, "context: the local device must exist and be active");
        if (!(bandwidth_mbps > 0.0) || !std::isfinite(bandwidth_mbps))
            raise(ErrorCode::InvalidArgument, "context: bandwidth must be positive");
        if (!(t_user_ms > 0.0) || !std::isfinite(t_user_ms))
            raise(ErrorCode::InvalidArgument, "context: latency requirement must be positive");
        for (const auto& d : devices)
            if (!(d.mem_budget_mb >= 0.0) || !(d.compute_budget_mflops >= 0.0))
                raise(ErrorCode::InvalidArgument, "context: budgets must be non-negative");
    }
};

inline nlohmann::json to_json(const ContextSnapshot& ctx) {
    nlohmann::json devices = nlohmann::json::array();
    for (const auto& d : ctx.devices)
        devices.push_back(nlohmann::json{{"id", d.id},
                                         {"mem_budget_mb", d.mem_budget_mb},
                                         {"compute_budget_mflops", d.compute_budget_mflops},
                                         {"active", d.active}});
    return nlohmann::json{{"t_s", ctx.t_s},
                          {"bandwidth_mbps", ctx.bandwidth_mbps},
                          {"t_user_ms", ctx.t_user_ms},
                          {"devices", devices}};
}

inline ContextSnapshot snapshot_from_json(const nlohmann::json& j) {
    ContextSnapshot ctx;
    ctx.t_s = j.at("t_s").get<double>();
    ctx.bandwidth_mbps = j.at("bandwidth_mbps").get<double>();
    ctx.t_user_ms = j.at("t_user_ms").get<double>();
    for (const auto& jd : j.at("devices")) {
        DeviceBudget d;
        d.id = jd.at("id").get<std::string>();
        d.mem_budget_mb = jd.at("mem_budget_mb").get<double>();
        d.compute_budget_mflops = jd.at("compute_budget_mflops").get<double>();
        d.active = jd.value("active", true);
        ctx.devices.push_back(std::move(d));
    }
    return ctx;
}

// Per-location operator cost callback: latency of one operator on the given
// location under the given available memory.
struct PlacementCostModel {
    std::function<double(int location, const OperatorNode& op, double avail_mem_mb)> op_ms;
};

inline PlacementCostModel oracle_cost_model(std::vector<DeviceProfile> profiles) {
    return PlacementCostModel{[profiles = std::move(profiles)](int location, const OperatorNode& op,
                                                               double avail_mem_mb) {
        if (location < 0 || location >= static_cast<int>(profiles.size()))
            raise(ErrorCode::InvalidArgument, "cost model: unknown location");
        return execution_latency_ms(profiles[static_cast<std::size_t>(location)], op, avail_mem_mb);
    }};
}

inline PlacementCostModel predictor_cost_model(std::vector<const LatencyPredictor*> predictors) {
    return PlacementCostModel{
        [predictors = std::move(predictors)](int location, const OperatorNode& op, double avail_mem_mb) {
            if (location < 0 || location >= static_cast<int>(predictors.size()) ||
                predictors[static_cast<std::size_t>(location)] == nullptr)
                raise(ErrorCode::InvalidArgument, "cost model: unknown location");
            return predictors[static_cast<std::size_t>(location)]->predict_ms(op, avail_mem_mb);
        }};
}

// Atom execution latencies for every active location, evaluated once per
// context so vertex annotation stays cheap inside the search loop. Available
// memory per location is that location's memory budget.
class AtomCostTable {
  public:
    AtomCostTable(const std::vector<Atom>& atoms, const ContextSnapshot& ctx,
                  const PlacementCostModel& model) {
        ctx.validate();
        if (!model.op_ms) raise(ErrorCode::InvalidArgument, "cost model: callback must be set");
        if (atoms.empty()) raise(ErrorCode::InvalidArgument, "cost table: no atoms");
        const int locations = ctx.location_count();
        cost_.assign(static_cast<std::size_t>(locations),
                     std::vector<double>(atoms.size(), std::numeric_limits<double>::quiet_NaN()));
        for (int loc = 0; loc < locations; ++loc) {
            if (!ctx.devices[static_cast<std::size_t>(loc)].active) continue;
            const double avail = ctx.devices[static_cast<std::size_t>(loc)].mem_budget_mb;
            for (std::size_t a = 0; a < atoms.size(); ++a) {
                double total = 0.0;
                for (const OperatorNode& op : atoms[a].ops) total += model.op_ms(loc, op, avail);
                cost_[static_cast<std::size_t>(loc)][a] = total;
            }
        }
    }

    double atom_ms(int location, std::size_t atom) const {
        return cost_[static_cast<std::size_t>(location)][atom];
    }

  private:
    std::vector<std::vector<double>> cost_;
};

// One atom-to-device assignment with its predicted cost annotations.
// assignment[j] is the location index of atom j.
struct CombinationVertex {
    std::vector<int> assignment;
    double latency_ms = 0.0;       // total predicted response time
    double transmission_ms = 0.0;  // transfer share of latency_ms
    std::vector<double> mem_demand_mb;
    std::vector<double> compute_demand_mflops;
    bool operator==(const CombinationVertex& other) const { return assignment == other.assignment; }
};

namespace detail {

inline void check_assignment(const std::vector<int>& assignment, const std::vector<Atom>& atoms,
                             const ContextSnapshot& ctx) {
    if (assignment.size() != atoms.size())
        raise(ErrorCode::InvalidArgument, "annotate: assignment length must equal the atom count");
    for (const int loc : assignment) {
        if (loc < 0 || loc >= ctx.location_count())
            raise(ErrorCode::InvalidArgument, "annotate: assignment references an unknown location");
        if (!ctx.devices[static_cast<std::size_t>(loc)].active)
            raise(ErrorCode::DeviceUnavailable,
                  "annotate: device " + ctx.devices[static_cast<std::size_t>(loc)].id + " is inactive");
    }
}

}  // namespace detail

inline CombinationVertex annotate(const std::vector<int>& assignment, const std::vector<Atom>& atoms,
                                  const ContextSnapshot& ctx, const AtomCostTable& table) {
    detail::check_assignment(assignment, atoms, ctx);

    CombinationVertex v;
    v.assignment = assignment;
    v.mem_demand_mb.assign(static_cast<std::size_t>(ctx.location_count()), 0.0);
    v.compute_demand_mflops.assign(static_cast<std::size_t>(ctx.location_count()), 0.0);

    std::vector<std::uint64_t> peak_bytes(static_cast<std::size_t>(ctx.location_count()), 0);
    double exec_ms = 0.0;
    std::uint64_t transfer_bytes = 0;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        const auto loc = static_cast<std::size_t>(assignment[a]);
        exec_ms += table.atom_ms(assignment[a], a);
        v.compute_demand_mflops[loc] += atoms[a].mflops;
        v.mem_demand_mb[loc] += static_cast<double>(atoms[a].param_bytes);
        peak_bytes[loc] = std::max({peak_bytes[loc], atoms[a].in_bytes, atoms[a].out_bytes});
        if (a + 1 < atoms.size() && assignment[a] != assignment[a + 1])
            transfer_bytes += atoms[a].out_bytes;
    }
    if (assignment.front() != 0) transfer_bytes += atoms.front().in_bytes;
    if (assignment.back() != 0) transfer_bytes += atoms.back().out_bytes;

    for (std::size_t loc = 0; loc < peak_bytes.size(); ++loc)
        v.mem_demand_mb[loc] = (v.mem_demand_mb[loc] + static_cast<double>(peak_bytes[loc])) / 1e6;

    v.transmission_ms =
        transfer_bytes == 0
            ? 0.0
            : transmission_latency_ms(static_cast<std::int64_t>(transfer_bytes), ctx.bandwidth_mbps);
    v.latency_ms = exec_ms + v.transmission_ms;
    return v;
}

inline CombinationVertex annotate(const std::vector<int>& assignment, const std::vector<Atom>& atoms,
                                  const ContextSnapshot& ctx, const PlacementCostModel& model) {
    return annotate(assignment, atoms, ctx, AtomCostTable(atoms, ctx, model));
}

// All assignments one atom-move away: every atom relocated to every other
// active location, ordered (atom asc, location asc) for determinism.
inline std::vector<std::vector<int>> neighbor_assignments(const std::vector<int>& assignment,
                                                          const ContextSnapshot& ctx) {
    std::vector<std::vector<int>> out;
    for (std::size_t a = 0; a < assignment.size(); ++a) {
        for (int loc = 0; loc < ctx.location_count(); ++loc) {
            if (loc == assignment[a] || !ctx.devices[static_cast<std::size_t>(loc)].active) continue;
            auto next = assignment;
            next[a] = loc;
            out.push_back(std::move(next));
        }
    }
    return out;
}

struct DistancePriorities {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
};

inline void validate(const DistancePriorities& p) {
    if (!(p.alpha >= 0.0) || !(p.beta >= 0.0) || !(p.gamma >= 0.0) ||
        !(p.alpha + p.beta + p.gamma > 0.0))
        raise(ErrorCode::InvalidArgument,
              "distance priorities must be non-negative with at least one positive");
}

inline bool feasible(const CombinationVertex& v, const ContextSnapshot& ctx) {
    if (v.latency_ms > ctx.t_user_ms) return false;
    for (std::size_t j = 0; j < v.mem_demand_mb.size(); ++j) {
        if (v.compute_demand_mflops[j] > ctx.devices[j].compute_budget_mflops) return false;
        if (v.mem_demand_mb[j] > ctx.devices[j].mem_budget_mb) return false;
    }
    return true;
}

// Euclidean gap to the context constraints: one-sided, so d = 0 exactly on
// the feasible set (for positive priorities).
inline double distance(const CombinationVertex& v, const ContextSnapshot& ctx,
                       const DistancePriorities& priorities = {}) {
    validate(priorities);
    const auto hinge = [](double x) { return std::max(0.0, x); };
    double sum = priorities.alpha * std::pow(hinge(v.latency_ms - ctx.t_user_ms), 2);
    for (std::size_t j = 0; j < v.mem_demand_mb.size(); ++j) {
        sum += priorities.beta *
               std::pow(hinge(v.compute_demand_mflops[j] - ctx.devices[j].compute_budget_mflops), 2);
        sum += priorities.gamma * std::pow(hinge(v.mem_demand_mb[j] - ctx.devices[j].mem_budget_mb), 2);
    }
    return std::sqrt(sum);
}

struct BenefitWeights {
    double lambda1 = 1.0;
    double lambda2 = 1.0;
};

// Offloading benefit of a whole scheme: log of the execution saving over the
// transfer cost, minus the deadline overrun. Transfer-free schemes score 0;
// schemes that execute slower than local score -inf.
inline double scheme_benefit(const CombinationVertex& v, const ContextSnapshot& ctx,
                             double t_device_ms, const BenefitWeights& weights = {}) {
    if (v.transmission_ms <= 0.0) return 0.0;
    const double saving = t_device_ms - (v.latency_ms - v.transmission_ms);
    if (saving <= 0.0) return -std::numeric_limits<double>::infinity();
    return weights.lambda1 * std::log(saving / v.transmission_ms) -
           weights.lambda2 * std::max(0.0, v.latency_ms - ctx.t_user_ms);
}

struct SearchParams {
    int k = 8;               // beam width
    double mu_d = 0.0;       // phase-1 goal distance
    int max_expansions = 10000;
    BenefitWeights weights;
    DistancePriorities priorities;
};

inline void validate(const SearchParams& p) {
    if (p.k < 1) raise(ErrorCode::InvalidArgument, "search params: k must be >= 1");
    if (!(p.mu_d >= 0.0)) raise(ErrorCode::InvalidArgument, "search params: mu_d must be >= 0");
    if (p.max_expansions < 1)
        raise(ErrorCode::InvalidArgument, "search params: max_expansions must be >= 1");
    validate(p.priorities);
}

struct SearchResult {
    CombinationVertex vertex;
    bool feasible = false;
    double benefit = 0.0;
    double distance = 0.0;
    int expansions = 0;  // vertices annotated
    int rounds = 0;      // phase-2 expansion rounds
    double decision_ms = 0.0;
    std::vector<double> round_best_benefit;  // best feasible benefit in the beam per phase-2 round
};

// Two-phase adaptive search over the implicit one-move graph. Vertices are
// annotated lazily and each annotated vertex is expanded at most once; every
// round expands the k most promising unexpanded vertices. Phase 1 ranks by
// constraint distance until some vertex reaches d <= mu_d; phase 2 ranks by
// offloading benefit (feasible vertices first) and keeps expanding while
// unexpanded vertices remain, so below the expansion cap the reachable space
// is covered and the returned feasible vertex is the true benefit optimum.
// If nothing feasible was found, the minimum-distance vertex is returned
// flagged infeasible.
inline SearchResult adaptive_search(const std::vector<int>& current,
                                    const std::vector<Atom>& atoms, const ContextSnapshot& ctx,
                                    const PlacementCostModel& model, const SearchParams& params = {}) {
    const auto t_start = std::chrono::steady_clock::now();
    validate(params);
    const AtomCostTable table(atoms, ctx, model);

    struct Scored {
        CombinationVertex v;
        double d = 0.0;
        double benefit = 0.0;
        bool feasible = false;
        bool expanded = false;
    };

    const double t_device =
        annotate(std::vector<int>(atoms.size(), 0), atoms, ctx, table).latency_ms;

    std::map<std::vector<int>, Scored> pool;
    int expansions = 0;
    bool have_feasible = false;
    bool goal_found = false;
    Scored best_feasible, best_distance;

    const auto score = [&](const std::vector<int>& assignment) {
        Scored s;
        s.v = annotate(assignment, atoms, ctx, table);
        s.d = distance(s.v, ctx, params.priorities);
        s.feasible = feasible(s.v, ctx);
        s.benefit = scheme_benefit(s.v, ctx, t_device, params.weights);
        if (s.d <= params.mu_d) goal_found = true;
        if (s.feasible &&
            (!have_feasible || s.benefit > best_feasible.benefit ||
             (s.benefit == best_feasible.benefit && s.v.assignment < best_feasible.v.assignment))) {
            best_feasible = s;
            have_feasible = true;
        }
        if (pool.empty() || s.d < best_distance.d ||
            (s.d == best_distance.d && s.v.assignment < best_distance.v.assignment))
            best_distance = s;
        pool.emplace(assignment, s);
        ++expansions;
    };

    const auto by_distance = [](const Scored* a, const Scored* b) {
        return a->d != b->d ? a->d < b->d : a->v.assignment < b->v.assignment;
    };
    // Feasible vertices first, best benefit first; the infeasible tail is
    // ordered by distance so near-feasible candidates expand early.
    const auto by_benefit = [](const Scored* a, const Scored* b) {
        if (a->feasible != b->feasible) return a->feasible;
        if (a->feasible) return a->benefit != b->benefit ? a->benefit > b->benefit
                                                         : a->v.assignment < b->v.assignment;
        return a->d != b->d ? a->d < b->d : a->v.assignment < b->v.assignment;
    };

    // Expands the k best unexpanded vertices under `cmp`; returns false once
    // no unexpanded vertex remains.
    const auto expand_round = [&](auto cmp) {
        std::vector<Scored*> open;
        for (auto& [assignment, entry] : pool)
            if (!entry.expanded) open.push_back(&entry);
        if (open.empty()) return false;
        const auto take = std::min(open.size(), static_cast<std::size_t>(params.k));
        std::partial_sort(open.begin(), open.begin() + static_cast<std::ptrdiff_t>(take), open.end(),
                          cmp);
        open.resize(take);
        for (Scored* entry : open) {
            entry->expanded = true;
            for (auto& next : neighbor_assignments(entry->v.assignment, ctx)) {
                if (expansions >= params.max_expansions) return true;
                if (!pool.count(next)) score(next);
            }
        }
        return true;
    };

    score(current);

    // Phase 1: reach the feasible region.
    while (!goal_found && expansions < params.max_expansions) {
        if (!expand_round(by_distance)) break;
    }

    SearchResult result;
    // Phase 2: maximize benefit among feasible vertices.
    if (goal_found) {
        while (expansions < params.max_expansions) {
            if (!expand_round(by_benefit)) break;
            ++result.rounds;
            result.round_best_benefit.push_back(
                have_feasible ? best_feasible.benefit
                              : -std::numeric_limits<double>::infinity());
        }
    }

    const Scored& pick = have_feasible ? best_feasible : best_distance;
    result.vertex = pick.v;
    result.feasible = pick.feasible;
    result.benefit = pick.benefit;
    result.distance = pick.d;
    result.expansions = expansions;
    result.decision_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

}  // namespace adamec
