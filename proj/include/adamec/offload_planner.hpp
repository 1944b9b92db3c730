#pragma once

// Offload plan decision: given the current and target combination vertices,
// compute the cheapest ordered sequence of per-atom moves. Each move ships an
// atom's manifest and parameters over the uplink, so its overhead is the
// transmission latency at plan-time bandwidth; atoms already resident on the
// target device (runtime cache hit) move for free but stay in the plan for
// placement bookkeeping.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "adamec/combination_search.hpp"
#include "adamec/cost_oracle.hpp"
#include "adamec/errors.hpp"
#include "adamec/prepartition.hpp"

namespace adamec {

struct OffloadMove {
    std::string atom;
    int from = 0;
    int to = 0;
    double overhead_ms = 0.0;
    bool operator==(const OffloadMove&) const = default;
};

struct OffloadPlan {
    std::vector<OffloadMove> moves;
    double total_overhead_ms = 0.0;
    bool operator==(const OffloadPlan&) const = default;
};

inline nlohmann::json to_json(const OffloadMove& m) {
    return nlohmann::json{
        {"atom", m.atom}, {"from", m.from}, {"to", m.to}, {"overhead_ms", m.overhead_ms}};
}

inline nlohmann::json to_json(const OffloadPlan& plan) {
    nlohmann::json moves = nlohmann::json::array();
    for (const auto& m : plan.moves) moves.push_back(to_json(m));
    return nlohmann::json{{"schema", "adamec-plan/1"},
                          {"moves", moves},
                          {"total_overhead_ms", plan.total_overhead_ms}};
}

inline OffloadMove move_from_json(const nlohmann::json& j) {
    OffloadMove m;
    m.atom = j.at("atom").get<std::string>();
    m.from = j.at("from").get<int>();
    m.to = j.at("to").get<int>();
    m.overhead_ms = j.at("overhead_ms").get<double>();
    return m;
}

inline OffloadPlan plan_from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != "adamec-plan/1")
        raise(ErrorCode::IoError, "plan: unknown schema tag");
    OffloadPlan plan;
    for (const auto& jm : j.at("moves")) plan.moves.push_back(move_from_json(jm));
    plan.total_overhead_ms = j.at("total_overhead_ms").get<double>();
    return plan;
}

// Queried by the planner to skip bytes for atoms a device already holds.
using ResidencyFn = std::function<bool(int location, const std::string& atom_id)>;

// Bytes a move actually ships: the atom manifest plus its parameters.
inline std::uint64_t atom_payload_bytes(const Atom& atom) {
    return atom.manifest_bytes + atom.param_bytes;
}

inline double move_overhead_ms(const Atom& atom, int from, int to, const ContextSnapshot& ctx,
                               const ResidencyFn& resident = {}) {
    if (to == from) return 0.0;
    if (resident && resident(to, atom.id)) return 0.0;
    return transmission_latency_ms(atom_payload_bytes(atom), ctx.bandwidth_mbps);
}

namespace detail {

// Dijkstra over the hypercube spanned by the differing atoms: vertices are
// subsets of moved atoms, edges move one atom from its current to its target
// placement. Restricting to this hypercube is safe pruning of the full
// combination graph: edge weights are non-negative and any placement outside
// {current, target} forces the atom to move again later, so a detour can tie
// but never beat a direct move. Returns the shortest-path total to the fully
// moved vertex.
inline double hypercube_total(const std::vector<double>& weights) {
    const std::size_t h = weights.size();
    const std::size_t states = std::size_t{1} << h;
    std::vector<double> dist(states, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[0] = 0.0;
    queue.push({0.0, 0});
    while (!queue.empty()) {
        const auto [d, s] = queue.top();
        queue.pop();
        if (d > dist[s]) continue;
        if (s + 1 == states) break;
        for (std::size_t bit = 0; bit < h; ++bit) {
            if (s & (std::size_t{1} << bit)) continue;
            const std::size_t next = s | (std::size_t{1} << bit);
            const double nd = d + weights[bit];
            if (nd < dist[next]) {
                dist[next] = nd;
                queue.push({nd, next});
            }
        }
    }
    return dist[states - 1];
}

}  // namespace detail

// Computes the minimum-overhead plan turning `current` into `target`. Every
// move ordering shares the shortest-path total (weights do not depend on
// position), so the path is canonicalized to the earliest-benefit ordering:
// moves ascend by overhead, cheapest atom first, atom index breaking ties.
inline OffloadPlan plan_offload(const std::vector<int>& current, const std::vector<int>& target,
                                const std::vector<Atom>& atoms, const ContextSnapshot& ctx,
                                const ResidencyFn& resident = {}) {
    ctx.validate();
    if (current.size() != atoms.size() || target.size() != atoms.size())
        raise(ErrorCode::InvalidArgument, "plan: assignments must cover the same atom set");
    for (const int loc : current)
        if (loc < 0 || loc >= ctx.location_count())
            raise(ErrorCode::InvalidArgument, "plan: current assignment references an unknown location");
    detail::check_assignment(target, atoms, ctx);

    OffloadPlan plan;
    std::vector<double> weights;
    for (std::size_t a = 0; a < atoms.size(); ++a) {
        if (current[a] == target[a]) continue;
        OffloadMove m;
        m.atom = atoms[a].id;
        m.from = current[a];
        m.to = target[a];
        m.overhead_ms = move_overhead_ms(atoms[a], current[a], target[a], ctx, resident);
        weights.push_back(m.overhead_ms);
        plan.moves.push_back(std::move(m));
    }

    std::stable_sort(plan.moves.begin(), plan.moves.end(),
                     [](const OffloadMove& a, const OffloadMove& b) {
                         return a.overhead_ms < b.overhead_ms;
                     });
    // Beyond ~20 differing atoms the hypercube is too large to materialize;
    // the closed form (sum of direct weights) is provably the same total.
    if (weights.empty()) return plan;
    if (weights.size() <= 20) {
        plan.total_overhead_ms = detail::hypercube_total(weights);
    } else {
        for (const double w : weights) plan.total_overhead_ms += w;
    }
    return plan;
}

// Replays the plan: true iff the moves map `current` onto `target` with each
// atom moved at most once and every move's source matching the replay state.
inline bool verify_plan(const OffloadPlan& plan, const std::vector<int>& current,
                        const std::vector<int>& target, const std::vector<Atom>& atoms) {
    if (current.size() != atoms.size() || target.size() != atoms.size()) return false;
    std::map<std::string, std::size_t> index;
    for (std::size_t a = 0; a < atoms.size(); ++a) index[atoms[a].id] = a;

    auto state = current;
    std::vector<bool> moved(atoms.size(), false);
    for (const auto& m : plan.moves) {
        const auto it = index.find(m.atom);
        if (it == index.end()) return false;
        const std::size_t a = it->second;
        if (moved[a] || m.from == m.to || state[a] != m.from) return false;
        moved[a] = true;
        state[a] = m.to;
    }
    return state == target;
}

}  // namespace adamec
