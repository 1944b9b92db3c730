#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "adamec/errors.hpp"
#include "adamec/model_graph.hpp"
#include "adamec/rng.hpp"

namespace adamec {

// Channel lanes of the simulated accelerator; occupancy is paid in full
// lanes, which is what produces the staircase in measured latency.
constexpr int kMacChannelStep = 32;

struct DeviceProfile {
    std::string id;
    double speed_macs_per_ms = 1e6;
    double fixed_overhead_ms = 0.05;
    double mem_threshold_factor = 8.0; // threshold = factor * operator footprint
    double penalty_slope = 4.0;
    double noise = 0.05; // multiplicative, uniform in [1-noise, 1+noise]
    std::uint64_t seed = 1;

    bool operator==(const DeviceProfile&) const = default;
};

inline DeviceProfile mobile_profile(std::string id = "mobile", std::uint64_t seed = 1) {
    DeviceProfile p;
    p.id = std::move(id);
    p.speed_macs_per_ms = 2e5;
    p.fixed_overhead_ms = 0.1;
    p.seed = seed;
    return p;
}

inline DeviceProfile edge_profile(std::string id = "edge", std::uint64_t seed = 2) {
    DeviceProfile p;
    p.id = std::move(id);
    p.speed_macs_per_ms = 1e6;
    p.fixed_overhead_ms = 0.05;
    p.seed = seed;
    return p;
}

// Working-set footprint of one operator in MB (params + input + output).
inline double operator_footprint_mb(const OperatorNode& op) {
    return static_cast<double>(op.param_bytes + op.input_bytes + op.out_bytes) / 1e6;
}

// Below this much free memory the device starts paging and execution slows
// down; above it latency is flat in available memory.
inline double memory_threshold_mb(const DeviceProfile& dev, const OperatorNode& op) {
    return dev.mem_threshold_factor * operator_footprint_mb(op);
}

namespace detail {

inline std::uint64_t latency_noise_key(const DeviceProfile& dev, const OperatorNode& op,
                                       double avail_mem_mb) {
    std::uint64_t h = dev.seed;
    h = hash_combine(h, static_cast<std::uint64_t>(op.kind));
    h = hash_combine(h, static_cast<std::uint64_t>(op.hw));
    h = hash_combine(h, static_cast<std::uint64_t>(op.cin));
    h = hash_combine(h, static_cast<std::uint64_t>(op.cout));
    h = hash_combine(h, static_cast<std::uint64_t>(op.k_s));
    h = hash_combine(h, static_cast<std::uint64_t>(op.stride));
    h = hash_combine(h, std::bit_cast<std::uint64_t>(avail_mem_mb));
    return h;
}

} // namespace detail

// Ground-truth execution latency of one operator on one device, in ms.
// Deterministic: the measurement jitter is a pure function of the device
// seed, the operator configuration and the memory condition.
inline double execution_latency_ms(const DeviceProfile& dev, const OperatorNode& op,
                                   double avail_mem_mb) {
    if (dev.speed_macs_per_ms <= 0)
        raise(ErrorCode::InvalidArgument, "device '" + dev.id + "' has non-positive speed");
    double latency = dev.fixed_overhead_ms + operator_macs(op, kMacChannelStep) / dev.speed_macs_per_ms;
    const double threshold = memory_threshold_mb(dev, op);
    if (avail_mem_mb < threshold && threshold > 0) {
        const double shortage = (threshold - std::max(avail_mem_mb, 0.0)) / threshold;
        latency *= 1.0 + dev.penalty_slope * shortage;
    }
    if (dev.noise > 0) {
        Rng draw(detail::latency_noise_key(dev, op, avail_mem_mb));
        latency *= 1.0 + dev.noise * (2.0 * draw.next_double() - 1.0);
    }
    return latency;
}

constexpr double kAmpleMemoryMb = std::numeric_limits<double>::infinity();

// Whole-graph latency on a single device under one memory condition.
inline double graph_latency_ms(const DeviceProfile& dev, const DnnGraph& graph,
                               double avail_mem_mb = kAmpleMemoryMb) {
    double total = 0.0;
    for (const auto& op : graph.nodes) total += execution_latency_ms(dev, op, avail_mem_mb);
    return total;
}

// Transfer time for a payload over a fixed link. Mbps means 1e6 bits/s.
inline double transmission_latency_ms(std::int64_t bytes, double bandwidth_mbps) {
    if (bytes < 0) raise(ErrorCode::InvalidArgument, "negative payload");
    if (bandwidth_mbps <= 0) raise(ErrorCode::InvalidArgument, "non-positive bandwidth");
    return static_cast<double>(bytes) * 8e-3 / bandwidth_mbps;
}

// Piecewise-constant bandwidth over scenario time (seconds). mbps[i] holds
// on [t_s[i], t_s[i+1]); the first value also extends backwards, the last
// one holds until the horizon.
struct BandwidthTrace {
    std::vector<double> t_s;
    std::vector<double> mbps;
    double horizon_s = std::numeric_limits<double>::infinity();

    void validate() const {
        if (t_s.empty() || t_s.size() != mbps.size())
            raise(ErrorCode::InvalidArgument, "trace needs matching breakpoints and values");
        for (std::size_t i = 1; i < t_s.size(); ++i)
            if (t_s[i] <= t_s[i - 1]) raise(ErrorCode::InvalidArgument, "trace breakpoints not ascending");
        for (const double b : mbps)
            if (b < 0) raise(ErrorCode::InvalidArgument, "negative bandwidth in trace");
    }

    double at(double t) const {
        std::size_t i = 0;
        while (i + 1 < t_s.size() && t_s[i + 1] <= t) ++i;
        return mbps[i];
    }

    // Time to push `bytes` starting at t0_s, integrating across segments.
    // Raises TraceExhausted when the transfer would outlive the horizon.
    double transmit_ms(std::int64_t bytes, double t0_s) const {
        validate();
        if (bytes < 0) raise(ErrorCode::InvalidArgument, "negative payload");
        if (bytes == 0) return 0.0;
        if (t0_s >= horizon_s) raise(ErrorCode::TraceExhausted, "transfer starts past trace horizon");

        double bits_left = static_cast<double>(bytes) * 8.0;
        double t = t0_s;
        std::size_t i = 0;
        while (i + 1 < t_s.size() && t_s[i + 1] <= t) ++i;
        for (;;) {
            const double seg_end = std::min(i + 1 < t_s.size() ? t_s[i + 1] : horizon_s, horizon_s);
            const double rate_bps = mbps[i] * 1e6;
            if (rate_bps > 0) {
                const double need_s = bits_left / rate_bps;
                if (t + need_s <= seg_end) return (t + need_s - t0_s) * 1e3;
                bits_left -= rate_bps * (seg_end - t);
            }
            t = seg_end;
            if (t >= horizon_s)
                raise(ErrorCode::TraceExhausted, "bandwidth trace ended mid-transfer");
            ++i;
        }
    }
};

inline BandwidthTrace constant_trace(double mbps) { return {{0.0}, {mbps}}; }

// --- JSON ---------------------------------------------------------------

inline nlohmann::json to_json(const DeviceProfile& d) {
    return {{"id", d.id},
            {"speed_macs_per_ms", d.speed_macs_per_ms},
            {"fixed_overhead_ms", d.fixed_overhead_ms},
            {"mem_threshold_factor", d.mem_threshold_factor},
            {"penalty_slope", d.penalty_slope},
            {"noise", d.noise},
            {"seed", d.seed}};
}

inline DeviceProfile device_from_json(const nlohmann::json& j) {
    DeviceProfile d;
    d.id = j.at("id").get<std::string>();
    d.speed_macs_per_ms = j.at("speed_macs_per_ms").get<double>();
    d.fixed_overhead_ms = j.value("fixed_overhead_ms", d.fixed_overhead_ms);
    d.mem_threshold_factor = j.value("mem_threshold_factor", d.mem_threshold_factor);
    d.penalty_slope = j.value("penalty_slope", d.penalty_slope);
    d.noise = j.value("noise", d.noise);
    d.seed = j.value("seed", d.seed);
    return d;
}

} // namespace adamec
