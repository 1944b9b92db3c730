#pragma once

// Deterministic event-driven simulation of the offloading runtime. Requests
// arrive on a virtual clock; atoms transfer asynchronously over the uplink
// and execute remotely only after their transfer acknowledgment; context
// changes re-validate the adopted combination and trigger a fresh search and
// offload plan when it became infeasible or a clearly better one exists;
// per-device atom caches retain stale atoms and evict first-in-first-out.
// The module also hosts the coupled baseline strategies (all-local, whole-
// model once-offloading, layer-incremental offloading) under full-replication
// memory accounting so strategies compare on one metrics schema.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "adamec/combination_search.hpp"
#include "adamec/cost_oracle.hpp"
#include "adamec/errors.hpp"
#include "adamec/model_graph.hpp"
#include "adamec/offload_planner.hpp"
#include "adamec/prepartition.hpp"

namespace adamec {

enum class Strategy { Adamec, OnDevice, OnceOffload, LayerIncremental };

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Adamec:           return "adamec";
        case Strategy::OnDevice:         return "on_device";
        case Strategy::OnceOffload:      return "once_offload";
        case Strategy::LayerIncremental: return "layer_incremental";
    }
    return "unknown";
}

inline Strategy strategy_from_string(const std::string& s) {
    if (s == "adamec") return Strategy::Adamec;
    if (s == "on_device") return Strategy::OnDevice;
    if (s == "once_offload") return Strategy::OnceOffload;
    if (s == "layer_incremental") return Strategy::LayerIncremental;
    raise(ErrorCode::InvalidArgument, "unknown strategy '" + s + "'");
}

// A device as declared by a scenario: its hardware profile plus the budgets
// it contributes to the deployment context. Index 0 is the local host.
struct DeviceSpec {
    DeviceProfile profile;
    double mem_budget_mb = 0.0;
    double compute_budget_mflops = 0.0;
    bool active = true;
    bool operator==(const DeviceSpec&) const = default;
};

// A timestamped change of the deployment context. Absent fields keep their
// current value; device entries address declared devices by id and can move
// budgets or toggle participation (join/leave).
struct ContextEvent {
    struct DeviceChange {
        std::string id;
        std::optional<double> mem_budget_mb;
        std::optional<double> compute_budget_mflops;
        std::optional<bool> active;
        bool operator==(const DeviceChange&) const = default;
    };

    double t_s = 0.0;
    std::string label;
    std::optional<double> bandwidth_mbps;
    std::optional<double> t_user_ms;
    std::vector<DeviceChange> devices;
    bool operator==(const ContextEvent&) const = default;
};

struct Scenario {
    std::string name;
    std::string model = "alexnet";
    int scale = 1;
    PrepartitionContext nominal;  // once-for-all reference + initial bandwidth/T_user
    std::vector<DeviceSpec> devices;
    std::vector<ContextEvent> events;
    std::vector<double> request_t_s;
    double horizon_s = 60.0;
    Strategy strategy = Strategy::Adamec;
    double hysteresis = 0.05;  // adopt an improvement only beyond this fraction
    SearchParams search;
    std::uint64_t seed = 1;

    void validate() const {
        const auto known = known_model_specs();
        if (std::find(known.begin(), known.end(), model) == known.end())
            raise(ErrorCode::InvalidArgument, "scenario: unknown model '" + model + "'");
        if (scale < 1) raise(ErrorCode::InvalidArgument, "scenario: scale must be >= 1");
        adamec::validate(nominal);
        adamec::validate(search);
        if (devices.empty() || !devices[0].active)
            raise(ErrorCode::InvalidArgument, "scenario: the local device must exist and be active");
        for (const auto& d : devices) {
            if (d.profile.id.empty())
                raise(ErrorCode::InvalidArgument, "scenario: device ids must be set");
            if (!(d.mem_budget_mb >= 0.0) || !(d.compute_budget_mflops >= 0.0))
                raise(ErrorCode::InvalidArgument, "scenario: budgets must be non-negative");
        }
        if (!(horizon_s > 0.0))
            raise(ErrorCode::InvalidArgument, "scenario: horizon must be positive");
        if (!(hysteresis >= 0.0))
            raise(ErrorCode::InvalidArgument, "scenario: hysteresis must be non-negative");
        double prev = 0.0;
        for (const auto& e : events) {
            if (e.t_s < prev || e.t_s > horizon_s)
                raise(ErrorCode::InvalidArgument, "scenario: events must be time-sorted within the horizon");
            prev = e.t_s;
            for (const auto& dc : e.devices)
                if (device_index(dc.id) < 0)
                    raise(ErrorCode::InvalidArgument, "scenario: event references unknown device '" + dc.id + "'");
        }
        prev = 0.0;
        for (const double t : request_t_s) {
            if (t < prev || t > horizon_s)
                raise(ErrorCode::InvalidArgument, "scenario: requests must be time-sorted within the horizon");
            prev = t;
        }
    }

    int device_index(const std::string& id) const {
        for (std::size_t i = 0; i < devices.size(); ++i)
            if (devices[i].profile.id == id) return static_cast<int>(i);
        return -1;
    }

    ContextSnapshot initial_context() const {
        ContextSnapshot ctx;
        ctx.t_s = 0.0;
        ctx.bandwidth_mbps = nominal.bandwidth_mbps;
        ctx.t_user_ms = nominal.t_user_ms;
        for (const auto& d : devices)
            ctx.devices.push_back({d.profile.id, d.mem_budget_mb, d.compute_budget_mflops, d.active});
        return ctx;
    }
};

inline nlohmann::json to_json(const ContextEvent& e) {
    nlohmann::json j{{"t_s", e.t_s}};
    if (!e.label.empty()) j["label"] = e.label;
    if (e.bandwidth_mbps) j["bandwidth_mbps"] = *e.bandwidth_mbps;
    if (e.t_user_ms) j["t_user_ms"] = *e.t_user_ms;
    if (!e.devices.empty()) {
        nlohmann::json devices = nlohmann::json::array();
        for (const auto& dc : e.devices) {
            nlohmann::json jd{{"id", dc.id}};
            if (dc.mem_budget_mb) jd["mem_budget_mb"] = *dc.mem_budget_mb;
            if (dc.compute_budget_mflops) jd["compute_budget_mflops"] = *dc.compute_budget_mflops;
            if (dc.active) jd["active"] = *dc.active;
            devices.push_back(std::move(jd));
        }
        j["devices"] = std::move(devices);
    }
    return j;
}

inline ContextEvent event_from_json(const nlohmann::json& j) {
    ContextEvent e;
    e.t_s = j.at("t_s").get<double>();
    e.label = j.value("label", "");
    if (j.contains("bandwidth_mbps")) e.bandwidth_mbps = j.at("bandwidth_mbps").get<double>();
    if (j.contains("t_user_ms")) e.t_user_ms = j.at("t_user_ms").get<double>();
    if (j.contains("devices"))
        for (const auto& jd : j.at("devices")) {
            ContextEvent::DeviceChange dc;
            dc.id = jd.at("id").get<std::string>();
            if (jd.contains("mem_budget_mb")) dc.mem_budget_mb = jd.at("mem_budget_mb").get<double>();
            if (jd.contains("compute_budget_mflops"))
                dc.compute_budget_mflops = jd.at("compute_budget_mflops").get<double>();
            if (jd.contains("active")) dc.active = jd.at("active").get<bool>();
            e.devices.push_back(std::move(dc));
        }
    return e;
}

inline nlohmann::json to_json(const Scenario& s) {
    nlohmann::json devices = nlohmann::json::array();
    for (const auto& d : s.devices)
        devices.push_back(nlohmann::json{{"profile", to_json(d.profile)},
                                         {"mem_budget_mb", d.mem_budget_mb},
                                         {"compute_budget_mflops", d.compute_budget_mflops},
                                         {"active", d.active}});
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : s.events) events.push_back(to_json(e));
    return nlohmann::json{{"schema", "adamec-scenario/1"},
                          {"name", s.name},
                          {"model", s.model},
                          {"scale", s.scale},
                          {"nominal", to_json(s.nominal)},
                          {"devices", devices},
                          {"events", events},
                          {"requests", s.request_t_s},
                          {"horizon_s", s.horizon_s},
                          {"strategy", to_string(s.strategy)},
                          {"hysteresis", s.hysteresis},
                          {"seed", s.seed}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != "adamec-scenario/1")
        raise(ErrorCode::IoError, "scenario: unknown schema tag");
    Scenario s;
    s.name = j.value("name", "scenario");
    s.model = j.at("model").get<std::string>();
    s.scale = j.value("scale", 1);
    s.nominal = context_from_json(j.at("nominal"));
    for (const auto& jd : j.at("devices")) {
        DeviceSpec d;
        d.profile = device_from_json(jd.at("profile"));
        d.mem_budget_mb = jd.at("mem_budget_mb").get<double>();
        d.compute_budget_mflops = jd.at("compute_budget_mflops").get<double>();
        d.active = jd.value("active", true);
        s.devices.push_back(std::move(d));
    }
    if (j.contains("events"))
        for (const auto& je : j.at("events")) s.events.push_back(event_from_json(je));
    s.horizon_s = j.at("horizon_s").get<double>();
    const auto& jr = j.at("requests");
    if (jr.is_array()) {
        s.request_t_s = jr.get<std::vector<double>>();
    } else {
        const double period = jr.at("period_s").get<double>();
        const double start = jr.value("start_s", 0.0);
        const int count = jr.at("count").get<int>();
        if (!(period > 0.0) || count < 0)
            raise(ErrorCode::InvalidArgument, "scenario: request generator needs period_s > 0, count >= 0");
        for (int i = 0; i < count; ++i) s.request_t_s.push_back(start + period * i);
    }
    s.strategy = strategy_from_string(j.value("strategy", "adamec"));
    s.hysteresis = j.value("hysteresis", 0.05);
    s.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("search")) {
        const auto& js = j.at("search");
        s.search.k = js.value("k", s.search.k);
        s.search.mu_d = js.value("mu_d", s.search.mu_d);
        s.search.max_expansions = js.value("max_expansions", s.search.max_expansions);
        s.search.weights.lambda1 = js.value("lambda1", s.search.weights.lambda1);
        s.search.weights.lambda2 = js.value("lambda2", s.search.weights.lambda2);
        s.search.priorities.alpha = js.value("alpha", s.search.priorities.alpha);
        s.search.priorities.beta = js.value("beta", s.search.priorities.beta);
        s.search.priorities.gamma = js.value("gamma", s.search.priorities.gamma);
    }
    s.validate();
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open scenario '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::IoError, "cannot parse scenario '" + path + "': " + e.what());
    }
    return scenario_from_json(j);
}

// --- Metrics -----------------------------------------------------------------

struct ResponseRecord {
    int request = 0;
    double t_s = 0.0;
    double latency_ms = 0.0;
    bool operator==(const ResponseRecord&) const = default;
};

struct MemorySample {
    double t_s = 0.0;
    std::string device;
    double resident_mb = 0.0;
    bool operator==(const MemorySample&) const = default;
};

// search_wall_ms is wall-clock and therefore excluded from the canonical
// serialization; everything else is virtual-time deterministic.
struct DecisionRecord {
    double t_s = 0.0;
    std::string trigger;  // initial | violation | improvement | scan
    bool adopted = false;
    double benefit = 0.0;
    int expansions = 0;
    int moves = 0;
    double plan_overhead_ms = 0.0;
    double search_wall_ms = 0.0;
};

struct TransferRecord {
    double start_s = 0.0;
    double complete_s = 0.0;
    std::string atom;
    int from = 0;
    int to = 0;
    std::uint64_t bytes = 0;
    bool operator==(const TransferRecord&) const = default;
};

struct EventMarker {
    double t_s = 0.0;
    std::string label;
    bool operator==(const EventMarker&) const = default;
};

struct MetricsLog {
    std::string scenario;
    std::string strategy;
    std::uint64_t seed = 0;
    std::vector<ResponseRecord> responses;
    std::vector<MemorySample> memory;
    std::vector<DecisionRecord> decisions;
    std::vector<TransferRecord> transfers;
    std::vector<EventMarker> markers;
    std::uint64_t offload_bytes_total = 0;
};

inline nlohmann::json to_json(const MetricsLog& log) {
    nlohmann::json responses = nlohmann::json::array();
    for (const auto& r : log.responses)
        responses.push_back({{"request", r.request}, {"t_s", r.t_s}, {"latency_ms", r.latency_ms}});
    nlohmann::json memory = nlohmann::json::array();
    for (const auto& m : log.memory)
        memory.push_back({{"t_s", m.t_s}, {"device", m.device}, {"resident_mb", m.resident_mb}});
    nlohmann::json decisions = nlohmann::json::array();
    for (const auto& d : log.decisions)
        decisions.push_back({{"t_s", d.t_s},
                             {"trigger", d.trigger},
                             {"adopted", d.adopted},
                             {"benefit", d.benefit},
                             {"expansions", d.expansions},
                             {"moves", d.moves},
                             {"plan_overhead_ms", d.plan_overhead_ms}});
    nlohmann::json transfers = nlohmann::json::array();
    for (const auto& t : log.transfers)
        transfers.push_back({{"start_s", t.start_s},
                             {"complete_s", t.complete_s},
                             {"atom", t.atom},
                             {"from", t.from},
                             {"to", t.to},
                             {"bytes", t.bytes}});
    nlohmann::json markers = nlohmann::json::array();
    for (const auto& m : log.markers) markers.push_back({{"t_s", m.t_s}, {"label", m.label}});
    return nlohmann::json{{"schema", "adamec-metrics/1"},
                          {"scenario", log.scenario},
                          {"strategy", log.strategy},
                          {"seed", log.seed},
                          {"responses", responses},
                          {"memory", memory},
                          {"decisions", decisions},
                          {"transfers", transfers},
                          {"markers", markers},
                          {"offload_bytes_total", log.offload_bytes_total}};
}

inline MetricsLog metrics_from_json(const nlohmann::json& j) {
    if (j.value("schema", "") != "adamec-metrics/1")
        raise(ErrorCode::IoError, "metrics: unknown schema tag");
    MetricsLog log;
    log.scenario = j.value("scenario", "");
    log.strategy = j.value("strategy", "");
    log.seed = j.value("seed", std::uint64_t{0});
    for (const auto& r : j.at("responses"))
        log.responses.push_back({r.at("request").get<int>(), r.at("t_s").get<double>(),
                                 r.at("latency_ms").get<double>()});
    for (const auto& m : j.at("memory"))
        log.memory.push_back({m.at("t_s").get<double>(), m.at("device").get<std::string>(),
                              m.at("resident_mb").get<double>()});
    for (const auto& d : j.at("decisions")) {
        DecisionRecord rec;
        rec.t_s = d.at("t_s").get<double>();
        rec.trigger = d.at("trigger").get<std::string>();
        rec.adopted = d.at("adopted").get<bool>();
        rec.benefit = d.at("benefit").is_null() ? -std::numeric_limits<double>::infinity()
                                                : d.at("benefit").get<double>();
        rec.expansions = d.at("expansions").get<int>();
        rec.moves = d.at("moves").get<int>();
        rec.plan_overhead_ms = d.at("plan_overhead_ms").get<double>();
        log.decisions.push_back(rec);
    }
    for (const auto& t : j.at("transfers"))
        log.transfers.push_back({t.at("start_s").get<double>(), t.at("complete_s").get<double>(),
                                 t.at("atom").get<std::string>(), t.at("from").get<int>(),
                                 t.at("to").get<int>(), t.at("bytes").get<std::uint64_t>()});
    for (const auto& m : j.at("markers"))
        log.markers.push_back({m.at("t_s").get<double>(), m.at("label").get<std::string>()});
    log.offload_bytes_total = j.at("offload_bytes_total").get<std::uint64_t>();
    return log;
}

inline MetricsLog load_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open metrics '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::IoError, "cannot parse metrics '" + path + "': " + e.what());
    }
    return metrics_from_json(j);
}

// Aggregate view of one run for summary tables: latency statistics over the
// responses (nearest-rank percentiles), decision and transfer counters, and
// the peak resident memory per device. Row order is deterministic.
inline std::vector<std::pair<std::string, double>> summary_stats(const MetricsLog& log) {
    std::vector<std::pair<std::string, double>> rows;
    rows.emplace_back("requests", static_cast<double>(log.responses.size()));
    if (!log.responses.empty()) {
        std::vector<double> lat;
        for (const auto& r : log.responses) lat.push_back(r.latency_ms);
        std::sort(lat.begin(), lat.end());
        double sum = 0.0;
        for (const double v : lat) sum += v;
        const auto rank = [&](double q) {
            const auto idx = static_cast<std::size_t>(
                std::ceil(q * static_cast<double>(lat.size())));
            return lat[std::max<std::size_t>(idx, 1) - 1];
        };
        rows.emplace_back("mean_latency_ms", sum / static_cast<double>(lat.size()));
        rows.emplace_back("p50_latency_ms", rank(0.50));
        rows.emplace_back("p95_latency_ms", rank(0.95));
        rows.emplace_back("max_latency_ms", lat.back());
    }
    rows.emplace_back("searches", static_cast<double>(log.decisions.size()));
    double adopted = 0.0, expansions = 0.0;
    for (const auto& d : log.decisions) {
        adopted += d.adopted ? 1.0 : 0.0;
        expansions += d.expansions;
    }
    rows.emplace_back("adoptions", adopted);
    if (!log.decisions.empty())
        rows.emplace_back("mean_expansions", expansions / static_cast<double>(log.decisions.size()));
    rows.emplace_back("transfers", static_cast<double>(log.transfers.size()));
    rows.emplace_back("offload_bytes", static_cast<double>(log.offload_bytes_total));
    std::vector<std::pair<std::string, double>> peaks;  // first-appearance device order
    for (const auto& m : log.memory) {
        auto it = std::find_if(peaks.begin(), peaks.end(),
                               [&](const auto& p) { return p.first == m.device; });
        if (it == peaks.end())
            peaks.emplace_back(m.device, m.resident_mb);
        else
            it->second = std::max(it->second, m.resident_mb);
    }
    for (const auto& [device, peak] : peaks) rows.emplace_back("peak_mem_mb:" + device, peak);
    return rows;
}

// CSV view: one row per sample (t_s, metric, device, value). Values format
// through the JSON dumper so CSV and JSON exports agree byte-for-byte on
// doubles. Wall-clock decision times are excluded here as well.
inline std::string metrics_csv(const MetricsLog& log) {
    std::string out = "t_s,metric,device,value\n";
    const auto num = [](double v) { return nlohmann::json(v).dump(); };
    for (const auto& r : log.responses)
        out += num(r.t_s) + ",response_latency_ms,," + num(r.latency_ms) + "\n";
    for (const auto& m : log.memory)
        out += num(m.t_s) + ",resident_mb," + m.device + "," + num(m.resident_mb) + "\n";
    for (const auto& d : log.decisions) {
        out += num(d.t_s) + ",decision_expansions," + d.trigger + "," +
               std::to_string(d.expansions) + "\n";
        out += num(d.t_s) + ",decision_plan_overhead_ms," + d.trigger + "," +
               num(d.plan_overhead_ms) + "\n";
    }
    for (const auto& t : log.transfers)
        out += num(t.complete_s) + ",offload_bytes," + t.atom + "," + std::to_string(t.bytes) + "\n";
    for (const auto& m : log.markers) out += num(m.t_s) + ",event," + m.label + ",1\n";
    return out;
}

// --- Atom cache ----------------------------------------------------------------

// Per-device retention of stale atoms in insertion order. Admitting beyond
// capacity releases the oldest residents first; re-admitting a resident atom
// neither evicts nor reorders.
class AtomCache {
  public:
    explicit AtomCache(std::uint64_t capacity_bytes = 0) : capacity_(capacity_bytes) {}

    std::uint64_t capacity() const { return capacity_; }
    std::uint64_t bytes() const { return total_; }
    std::size_t size() const { return fifo_.size(); }

    bool resident(const std::string& id) const {
        for (const auto& [rid, rb] : fifo_)
            if (rid == id) return true;
        return false;
    }

    std::vector<std::string> admit(const std::string& id, std::uint64_t bytes) {
        if (bytes > capacity_)
            raise(ErrorCode::CannotFit, "cache: atom '" + id + "' exceeds capacity");
        if (resident(id)) return {};
        fifo_.emplace_back(id, bytes);
        total_ += bytes;
        return evict_to_fit();
    }

    std::vector<std::string> set_capacity(std::uint64_t capacity_bytes) {
        capacity_ = capacity_bytes;
        return evict_to_fit();
    }

    void remove(const std::string& id) {
        for (auto it = fifo_.begin(); it != fifo_.end(); ++it)
            if (it->first == id) {
                total_ -= it->second;
                fifo_.erase(it);
                return;
            }
    }

    void clear() {
        fifo_.clear();
        total_ = 0;
    }

    std::vector<std::string> contents() const {
        std::vector<std::string> ids;
        for (const auto& [id, bytes] : fifo_) ids.push_back(id);
        return ids;
    }

  private:
    std::vector<std::string> evict_to_fit() {
        std::vector<std::string> evicted;
        while (total_ > capacity_ && !fifo_.empty()) {
            evicted.push_back(fifo_.front().first);
            total_ -= fifo_.front().second;
            fifo_.pop_front();
        }
        return evicted;
    }

    std::deque<std::pair<std::string, std::uint64_t>> fifo_;
    std::uint64_t total_ = 0;
    std::uint64_t capacity_ = 0;
};

inline std::vector<std::string> cache_admit(AtomCache& cache, const Atom& atom) {
    return cache.admit(atom.id, atom.param_bytes);
}

// --- Placement evaluation -------------------------------------------------------

// True response latency of one request under an operator-level placement:
// execution on each operator's device (available memory = that device's
// budget) plus one uplink transmission covering every tensor edge that
// crosses devices, the input upload when the entry operator is remote, and
// the result return when the exit operator is remote.
inline double placement_latency_ms(const DnnGraph& graph, const std::vector<int>& place,
                                   const ContextSnapshot& ctx,
                                   const std::vector<DeviceProfile>& profiles) {
    if (place.size() != graph.nodes.size())
        raise(ErrorCode::InvalidArgument, "placement: length must equal the operator count");
    if (profiles.size() != ctx.devices.size())
        raise(ErrorCode::InvalidArgument, "placement: one profile per context device");
    double exec = 0.0;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
        const int loc = place[i];
        if (loc < 0 || loc >= ctx.location_count())
            raise(ErrorCode::InvalidArgument, "placement: unknown location");
        exec += execution_latency_ms(profiles[static_cast<std::size_t>(loc)], graph.nodes[i],
                                     ctx.devices[static_cast<std::size_t>(loc)].mem_budget_mb);
    }
    std::uint64_t bytes = 0;
    for (const auto& e : graph.edges)
        if (place[static_cast<std::size_t>(e.src)] != place[static_cast<std::size_t>(e.dst)])
            bytes += static_cast<std::uint64_t>(e.bytes);
    if (place.front() != 0) bytes += static_cast<std::uint64_t>(graph.input_bytes());
    if (place.back() != 0) bytes += static_cast<std::uint64_t>(graph.output_bytes());
    return exec + (bytes ? transmission_latency_ms(bytes, ctx.bandwidth_mbps) : 0.0);
}

// --- Runtime engine ---------------------------------------------------------------

class Runtime {
  public:
    // The optional decision model (typically predictor-backed) guides search
    // and adoption; requests are always priced by the ground-truth oracle so
    // strategies stay comparable regardless of what steered the decisions.
    explicit Runtime(Scenario scenario, std::optional<Strategy> strategy_override = {},
                     std::optional<PlacementCostModel> decision_model = {})
        : scenario_(std::move(scenario)),
          strategy_(strategy_override.value_or(scenario_.strategy)),
          decision_override_(std::move(decision_model)) {
        scenario_.validate();
        graph_ = build_model(scenario_.model, scenario_.scale);
        ctx_ = scenario_.initial_context();
        for (const auto& d : scenario_.devices) profiles_.push_back(d.profile);

        // Once-for-all pre-partition against the declared nominal context;
        // the first edge profile stands in as the collaboration reference.
        const DeviceProfile& ref_edge = profiles_.size() > 1 ? profiles_[1] : profiles_[0];
        scheme_ = prepartition(graph_, oracle_costs(profiles_[0], ref_edge), scenario_.nominal);

        log_.scenario = scenario_.name;
        log_.strategy = to_string(strategy_);
        log_.seed = scenario_.seed;

        if (strategy_ == Strategy::Adamec) init_adamec();
    }

    MetricsLog run() {
        switch (strategy_) {
            case Strategy::Adamec:           run_adamec(); break;
            case Strategy::OnDevice:         run_on_device(); break;
            case Strategy::OnceOffload:      run_once_offload(); break;
            case Strategy::LayerIncremental: run_layer_incremental(); break;
        }
        return log_;
    }

    // Advances the clock, completing due transfers on the way.
    void advance_to(double t_s) {
        while (inflight_ && inflight_->complete_s <= t_s) complete_inflight();
        now_s_ = std::max(now_s_, t_s);
    }

    // Applies a context change and re-decides the combination: a violated
    // constraint forces adoption of a fresh search result; otherwise a new
    // optimum is adopted only when it beats the current benefit by more than
    // the hysteresis fraction. A change that alters nothing triggers nothing.
    void handle_context_event(const ContextEvent& e) {
        if (e.t_s < now_s_)
            raise(ErrorCode::InvalidArgument, "event time precedes the simulation clock");
        advance_to(e.t_s);
        log_.markers.push_back({e.t_s, e.label.empty() ? "context-change" : e.label});

        auto before = ctx_;
        apply_event(e);
        before.t_s = ctx_.t_s;
        if (ctx_ == before) return;  // no-op event: no search

        handle_departures(before);
        rebuild_tables();
        recompute_capacities();
        sample_memory();

        bool invalid = false;
        double current_benefit = 0.0;
        for (const int loc : target_)
            if (!ctx_.devices[static_cast<std::size_t>(loc)].active) invalid = true;
        if (!invalid) {
            const auto v = annotate(target_, scheme_.atoms, ctx_, *table_);
            invalid = !feasible(v, ctx_);
            current_benefit = scheme_benefit(v, ctx_, t_device_ms_, scenario_.search.weights);
        }

        const auto result =
            adaptive_search(realized_, scheme_.atoms, ctx_, search_model_, scenario_.search);
        if (invalid) {
            adopt(result, "violation");
        } else if (result.feasible &&
                   result.benefit >
                       current_benefit + scenario_.hysteresis * std::abs(current_benefit)) {
            adopt(result, "improvement");
        } else {
            log_.decisions.push_back({now_s_, "scan", false, result.benefit, result.expansions, 0,
                                      0.0, result.decision_ms});
        }
    }

    const ContextSnapshot& context() const { return ctx_; }
    const PartitionScheme& scheme() const { return scheme_; }
    const DnnGraph& graph() const { return graph_; }
    const std::vector<int>& realized() const { return realized_; }
    const std::vector<int>& target() const { return target_; }
    const MetricsLog& log() const { return log_; }
    bool transfers_idle() const { return !inflight_ && queue_.empty(); }

    double request_latency_ms() const {
        if (!truth_table_)
            raise(ErrorCode::InvalidArgument, "request latency is tracked by the adaptive strategy only");
        return annotate(realized_, scheme_.atoms, ctx_, *truth_table_).latency_ms;
    }

  private:
    struct InFlight {
        OffloadMove move;
        double start_s = 0.0;
        double complete_s = 0.0;
        std::uint64_t bytes = 0;
    };

    std::vector<int> all_local() const { return std::vector<int>(scheme_.atoms.size(), 0); }

    void rebuild_tables() {
        table_.emplace(scheme_.atoms, ctx_, search_model_);
        truth_table_.emplace(scheme_.atoms, ctx_, truth_model_);
        t_device_ms_ = annotate(all_local(), scheme_.atoms, ctx_, *table_).latency_ms;
    }

    int atom_index(const std::string& id) const {
        for (std::size_t a = 0; a < scheme_.atoms.size(); ++a)
            if (scheme_.atoms[a].id == id) return static_cast<int>(a);
        raise(ErrorCode::NotFound, "unknown atom '" + id + "'");
    }

    void init_adamec() {
        realized_ = all_local();
        target_ = realized_;
        caches_.assign(ctx_.devices.size(), AtomCache(0));
        truth_model_ = oracle_cost_model(profiles_);
        search_model_ = decision_override_.value_or(truth_model_);
        rebuild_tables();
        recompute_capacities();

        const auto result =
            adaptive_search(realized_, scheme_.atoms, ctx_, search_model_, scenario_.search);
        if (result.feasible) {
            adopt(result, "initial");
        } else {
            log_.decisions.push_back({0.0, "initial", false, result.benefit, result.expansions, 0,
                                      0.0, result.decision_ms});
        }
        sample_memory();
    }

    void apply_event(const ContextEvent& e) {
        ctx_.t_s = e.t_s;
        if (e.bandwidth_mbps) ctx_.bandwidth_mbps = *e.bandwidth_mbps;
        if (e.t_user_ms) ctx_.t_user_ms = *e.t_user_ms;
        for (const auto& dc : e.devices) {
            const int loc = scenario_.device_index(dc.id);
            if (loc < 0) raise(ErrorCode::InvalidArgument, "event references unknown device '" + dc.id + "'");
            auto& d = ctx_.devices[static_cast<std::size_t>(loc)];
            if (dc.mem_budget_mb) d.mem_budget_mb = *dc.mem_budget_mb;
            if (dc.compute_budget_mflops) d.compute_budget_mflops = *dc.compute_budget_mflops;
            if (dc.active) d.active = *dc.active;
        }
        ctx_.validate();
    }

    // Atoms on a departed device fall back to the local host (which always
    // retains the master copy), its cache drops, and any transfer toward it
    // is abandoned; the search triggered by the same event re-offloads them.
    void handle_departures(const ContextSnapshot& before) {
        for (std::size_t loc = 1; loc < ctx_.devices.size(); ++loc) {
            if (!before.devices[loc].active || ctx_.devices[loc].active) continue;
            for (std::size_t a = 0; a < realized_.size(); ++a)
                if (realized_[a] == static_cast<int>(loc)) realized_[a] = 0;
            caches_[loc].clear();
            if (inflight_ && inflight_->move.to == static_cast<int>(loc)) inflight_.reset();
            std::deque<OffloadMove> kept;
            for (auto& m : queue_)
                if (m.to != static_cast<int>(loc)) kept.push_back(std::move(m));
            queue_ = std::move(kept);
        }
        if (!inflight_) start_next_transfer();
    }

    void adopt(const SearchResult& result, const std::string& trigger) {
        target_ = result.vertex.assignment;
        // The local host always keeps the master copy, so falling back is free.
        const auto resident = [this](int loc, const std::string& id) {
            return loc == 0 || (loc < static_cast<int>(caches_.size()) &&
                                caches_[static_cast<std::size_t>(loc)].resident(id));
        };
        const auto plan = plan_offload(realized_, target_, scheme_.atoms, ctx_, resident);
        queue_.assign(plan.moves.begin(), plan.moves.end());
        log_.decisions.push_back({now_s_, trigger, true, result.benefit, result.expansions,
                                  static_cast<int>(plan.moves.size()), plan.total_overhead_ms,
                                  result.decision_ms});
        if (!inflight_) start_next_transfer();
    }

    void start_next_transfer() {
        while (!inflight_ && !queue_.empty()) {
            const OffloadMove m = queue_.front();
            queue_.pop_front();
            const int a = atom_index(m.atom);
            if (realized_[static_cast<std::size_t>(a)] == m.to ||
                !ctx_.devices[static_cast<std::size_t>(m.to)].active)
                continue;
            const std::uint64_t payload = atom_payload_bytes(scheme_.atoms[static_cast<std::size_t>(a)]);
            if (m.to == 0 || caches_[static_cast<std::size_t>(m.to)].resident(m.atom)) {
                land(m, now_s_, now_s_, 0);  // master copy or cache hit: no shipping
                continue;
            }
            // Planned overhead rules the timing; a plan-time cache hit whose
            // copy was evicted since re-ships at the current bandwidth.
            const double dur_ms = m.overhead_ms > 0.0
                                      ? m.overhead_ms
                                      : transmission_latency_ms(payload, ctx_.bandwidth_mbps);
            inflight_ = InFlight{m, now_s_, now_s_ + dur_ms / 1000.0, payload};
        }
    }

    void complete_inflight() {
        const InFlight f = *inflight_;
        inflight_.reset();
        now_s_ = f.complete_s;
        land(f.move, f.start_s, f.complete_s, f.bytes);
    }

    void land(const OffloadMove& m, double start_s, double complete_s, std::uint64_t shipped) {
        const auto a = static_cast<std::size_t>(atom_index(m.atom));
        const int prev = realized_[a];
        realized_[a] = m.to;
        if (m.to > 0) caches_[static_cast<std::size_t>(m.to)].remove(m.atom);
        recompute_capacities();
        if (prev > 0)  // the old copy lingers in the previous host's cache
            if (scheme_.atoms[a].param_bytes <= caches_[static_cast<std::size_t>(prev)].capacity())
                caches_[static_cast<std::size_t>(prev)].admit(m.atom, scheme_.atoms[a].param_bytes);
        log_.transfers.push_back({start_s, complete_s, m.atom, m.from, m.to, shipped});
        log_.offload_bytes_total += shipped;
        sample_memory();
        start_next_transfer();
    }

    // Cache capacity = memory budget minus what the placed atoms pin down
    // (their parameters plus the peak boundary tensor held while executing).
    void recompute_capacities() {
        for (std::size_t loc = 1; loc < ctx_.devices.size(); ++loc) {
            double placed = 0.0, peak = 0.0;
            for (std::size_t a = 0; a < realized_.size(); ++a) {
                if (realized_[a] != static_cast<int>(loc)) continue;
                placed += static_cast<double>(scheme_.atoms[a].param_bytes);
                peak = std::max({peak, static_cast<double>(scheme_.atoms[a].in_bytes),
                                 static_cast<double>(scheme_.atoms[a].out_bytes)});
            }
            const double budget = ctx_.devices[loc].mem_budget_mb * 1e6;
            const double spare = std::max(0.0, budget - placed - peak);
            caches_[loc].set_capacity(static_cast<std::uint64_t>(spare));
        }
    }

    double resident_mb(std::size_t loc) const {
        if (loc == 0) return static_cast<double>(graph_.total_param_bytes()) / 1e6;
        double placed = 0.0;
        for (std::size_t a = 0; a < realized_.size(); ++a)
            if (realized_[a] == static_cast<int>(loc))
                placed += static_cast<double>(scheme_.atoms[a].param_bytes);
        return (placed + static_cast<double>(caches_[loc].bytes())) / 1e6;
    }

    void sample_memory() {
        for (std::size_t loc = 0; loc < ctx_.devices.size(); ++loc)
            log_.memory.push_back({now_s_, ctx_.devices[loc].id, resident_mb(loc)});
    }

    void record_request(double t_s) {
        log_.responses.push_back({request_counter_++, t_s, request_latency_ms()});
    }

    void run_adamec() {
        std::size_t ei = 0, ri = 0;
        while (ei < scenario_.events.size() || ri < scenario_.request_t_s.size()) {
            const double t_e = ei < scenario_.events.size() ? scenario_.events[ei].t_s
                                                            : std::numeric_limits<double>::infinity();
            const double t_r = ri < scenario_.request_t_s.size()
                                   ? scenario_.request_t_s[ri]
                                   : std::numeric_limits<double>::infinity();
            if (t_e <= t_r) {
                handle_context_event(scenario_.events[ei++]);
            } else {
                advance_to(t_r);
                record_request(t_r);
                ++ri;
            }
        }
        while (inflight_) complete_inflight();
    }

    // --- Baselines. They share the metrics schema but replicate the whole
    // model onto every participating device (coupled deployment), never
    // search, and treat context events as plain environment updates.

    void baseline_apply_event(const ContextEvent& e) {
        now_s_ = std::max(now_s_, e.t_s);
        log_.markers.push_back({e.t_s, e.label.empty() ? "context-change" : e.label});
        apply_event(e);
    }

    void baseline_sample_memory(bool replicate_on_edges) {
        const double total = static_cast<double>(graph_.total_param_bytes()) / 1e6;
        for (std::size_t loc = 0; loc < ctx_.devices.size(); ++loc) {
            const bool holds =
                loc == 0 || (replicate_on_edges && ctx_.devices[loc].active);
            log_.memory.push_back({now_s_, ctx_.devices[loc].id, holds ? total : 0.0});
        }
    }

    void baseline_record_request(double t_s, const std::vector<int>& place) {
        now_s_ = std::max(now_s_, t_s);
        log_.responses.push_back(
            {request_counter_++, t_s, placement_latency_ms(graph_, place, ctx_, profiles_)});
    }

    void run_on_device() {
        baseline_sample_memory(false);
        const std::vector<int> local(graph_.nodes.size(), 0);
        std::size_t ei = 0, ri = 0;
        while (ei < scenario_.events.size() || ri < scenario_.request_t_s.size()) {
            const double t_e = ei < scenario_.events.size() ? scenario_.events[ei].t_s
                                                            : std::numeric_limits<double>::infinity();
            const double t_r = ri < scenario_.request_t_s.size()
                                   ? scenario_.request_t_s[ri]
                                   : std::numeric_limits<double>::infinity();
            if (t_e <= t_r) {
                baseline_apply_event(scenario_.events[ei++]);
                baseline_sample_memory(false);
            } else {
                baseline_record_request(t_r, local);
                ++ri;
            }
        }
    }

    // Best split of the operator chain between the local host and one edge
    // device: prefix local, suffix on the edge, cut chosen per request.
    std::vector<int> best_single_cut_place(int edge_loc) const {
        const auto n = graph_.nodes.size();
        std::vector<int> best(n, 0);
        double best_ms = placement_latency_ms(graph_, best, ctx_, profiles_);
        std::vector<int> candidate(n, edge_loc);  // cut before the first operator
        const double all_edge = placement_latency_ms(graph_, candidate, ctx_, profiles_);
        if (all_edge < best_ms) {
            best = candidate;
            best_ms = all_edge;
        }
        for (const auto& cut : valid_cut_points(graph_)) {
            std::vector<int> place(n, 0);
            for (std::size_t i = static_cast<std::size_t>(cut.index); i < n; ++i)
                place[i] = edge_loc;
            const double ms = placement_latency_ms(graph_, place, ctx_, profiles_);
            if (ms < best_ms) {
                best_ms = ms;
                best = place;
            }
        }
        return best;
    }

    void run_once_offload() {
        // Pick the edge whose best split wins under the initial context.
        int target_edge = -1;
        double best_ms = std::numeric_limits<double>::infinity();
        for (std::size_t loc = 1; loc < ctx_.devices.size(); ++loc) {
            if (!ctx_.devices[loc].active) continue;
            const auto place = best_single_cut_place(static_cast<int>(loc));
            const double ms = placement_latency_ms(graph_, place, ctx_, profiles_);
            if (ms < best_ms) {
                best_ms = ms;
                target_edge = static_cast<int>(loc);
            }
        }
        baseline_sample_memory(true);

        std::uint64_t payload = 0;
        for (const auto& atom : scheme_.atoms) payload += atom_payload_bytes(atom);
        double done_s = std::numeric_limits<double>::infinity();
        if (target_edge > 0) {
            done_s = transmission_latency_ms(payload, ctx_.bandwidth_mbps) / 1000.0;
            log_.transfers.push_back({0.0, done_s, "model", 0, target_edge, payload});
            log_.offload_bytes_total += payload;
        }

        const std::vector<int> local(graph_.nodes.size(), 0);
        std::size_t ei = 0, ri = 0;
        while (ei < scenario_.events.size() || ri < scenario_.request_t_s.size()) {
            const double t_e = ei < scenario_.events.size() ? scenario_.events[ei].t_s
                                                            : std::numeric_limits<double>::infinity();
            const double t_r = ri < scenario_.request_t_s.size()
                                   ? scenario_.request_t_s[ri]
                                   : std::numeric_limits<double>::infinity();
            if (t_e <= t_r) {
                baseline_apply_event(scenario_.events[ei++]);
                baseline_sample_memory(true);
            } else {
                const bool ready = target_edge > 0 && t_r >= done_s &&
                                   ctx_.devices[static_cast<std::size_t>(target_edge)].active;
                baseline_record_request(t_r, ready ? best_single_cut_place(target_edge) : local);
                ++ri;
            }
        }
    }

    void run_layer_incremental() {
        // Layer-level blocks upload in model order to the first edge device,
        // each regardless of whether offloading that block helps.
        struct BlockSpan {
            int block = 0;
            std::size_t first = 0, last = 0;
            std::uint64_t param_bytes = 0;
        };
        std::vector<BlockSpan> blocks;
        for (std::size_t i = 0; i < graph_.nodes.size(); ++i) {
            const auto& op = graph_.nodes[i];
            if (blocks.empty() || blocks.back().block != op.block)
                blocks.push_back({op.block, i, i, 0});
            blocks.back().last = i;
            blocks.back().param_bytes += static_cast<std::uint64_t>(op.param_bytes);
        }

        int edge = -1;
        for (std::size_t loc = 1; loc < ctx_.devices.size(); ++loc)
            if (ctx_.devices[loc].active) {
                edge = static_cast<int>(loc);
                break;
            }
        baseline_sample_memory(true);

        std::size_t next_block = 0;
        std::size_t landed = 0;
        double ack_s = std::numeric_limits<double>::infinity();
        double start_s = 0.0;
        const auto start_block = [&] {
            if (edge < 0 || next_block >= blocks.size() ||
                !ctx_.devices[static_cast<std::size_t>(edge)].active) {
                ack_s = std::numeric_limits<double>::infinity();
                return;
            }
            start_s = now_s_;
            ack_s = now_s_ + transmission_latency_ms(blocks[next_block].param_bytes,
                                                     ctx_.bandwidth_mbps) /
                                1000.0;
        };
        start_block();

        const auto place_prefix = [&](std::size_t blocks_landed) {
            std::vector<int> place(graph_.nodes.size(), 0);
            const bool up = edge > 0 && ctx_.devices[static_cast<std::size_t>(edge)].active;
            if (up)
                for (std::size_t b = 0; b < blocks_landed; ++b)
                    for (std::size_t i = blocks[b].first; i <= blocks[b].last; ++i) place[i] = edge;
            return place;
        };

        std::size_t ei = 0, ri = 0;
        while (ei < scenario_.events.size() || ri < scenario_.request_t_s.size() ||
               ack_s < std::numeric_limits<double>::infinity()) {
            const double t_e = ei < scenario_.events.size() ? scenario_.events[ei].t_s
                                                            : std::numeric_limits<double>::infinity();
            const double t_r = ri < scenario_.request_t_s.size()
                                   ? scenario_.request_t_s[ri]
                                   : std::numeric_limits<double>::infinity();
            if (ack_s <= t_e && ack_s <= t_r) {
                now_s_ = ack_s;
                log_.transfers.push_back({start_s, ack_s,
                                          "block" + std::to_string(blocks[next_block].block), 0,
                                          edge, blocks[next_block].param_bytes});
                log_.offload_bytes_total += blocks[next_block].param_bytes;
                ++next_block;
                landed = next_block;
                start_block();
            } else if (t_e <= t_r) {
                baseline_apply_event(scenario_.events[ei++]);
                if (edge > 0 && !ctx_.devices[static_cast<std::size_t>(edge)].active)
                    ack_s = std::numeric_limits<double>::infinity();  // uplink target gone
                baseline_sample_memory(true);
            } else {
                if (t_r > scenario_.horizon_s && ri >= scenario_.request_t_s.size()) break;
                baseline_record_request(t_r, place_prefix(landed));
                ++ri;
            }
        }
    }

    Scenario scenario_;
    Strategy strategy_;
    DnnGraph graph_;
    PartitionScheme scheme_;
    std::vector<DeviceProfile> profiles_;
    ContextSnapshot ctx_;
    std::optional<PlacementCostModel> decision_override_;
    PlacementCostModel search_model_, truth_model_;
    std::optional<AtomCostTable> table_, truth_table_;
    double t_device_ms_ = 0.0;
    std::vector<int> realized_, target_;
    std::deque<OffloadMove> queue_;
    std::optional<InFlight> inflight_;
    std::vector<AtomCache> caches_;
    MetricsLog log_;
    double now_s_ = 0.0;
    int request_counter_ = 0;
};

inline MetricsLog run_scenario(const Scenario& scenario) { return Runtime(scenario).run(); }

inline MetricsLog run_baseline(Strategy strategy, const Scenario& scenario) {
    return Runtime(scenario, strategy).run();
}

}  // namespace adamec
