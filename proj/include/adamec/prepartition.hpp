#pragma once

// Once-for-all pre-partition: scores every valid cut point of a model graph
// under a reference offloading context, keeps the beneficial ones, and emits
// the resulting contiguous operator groups (atoms) with serializable
// manifests. Atoms are the unit of placement for the combination search and
// the runtime cache.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "adamec/cost_oracle.hpp"
#include "adamec/errors.hpp"
#include "adamec/latency_predictor.hpp"
#include "adamec/model_graph.hpp"
#include "adamec/rng.hpp"

namespace adamec {

// Per-operator execution cost callbacks for the two placement extremes used
// by cut scoring. Costs are ample-memory latencies in milliseconds.
struct CostFns {
    std::function<double(const OperatorNode&)> mobile_ms;
    std::function<double(const OperatorNode&)> edge_ms;
};

inline CostFns oracle_costs(const DeviceProfile& mobile, const DeviceProfile& edge) {
    return CostFns{
        [mobile](const OperatorNode& op) { return execution_latency_ms(mobile, op, kAmpleMemoryMb); },
        [edge](const OperatorNode& op) { return execution_latency_ms(edge, op, kAmpleMemoryMb); },
    };
}

// Predictor-backed costs query each model at a comfortably ample budget
// (twice the pressure threshold), matching how the ample training rows were
// generated.
inline CostFns predictor_costs(const LatencyPredictor& mobile, const LatencyPredictor& edge) {
    return CostFns{
        [&mobile](const OperatorNode& op) {
            return mobile.predict_ms(op, 2.0 * memory_threshold_mb(mobile.device(), op));
        },
        [&edge](const OperatorNode& op) {
            return edge.predict_ms(op, 2.0 * memory_threshold_mb(edge.device(), op));
        },
    };
}

// Reference context the once-for-all partition is scored against. The
// defaults describe a constrained uplink where only the strongest cut points
// pay for their transfer; they are the shipped calibration, not a runtime
// constraint.
struct PrepartitionContext {
    double bandwidth_mbps = 4.79;
    double t_user_ms = 1000.0;
    double lambda1 = 1.0;  // weight of the log latency-saving term
    double lambda2 = 1.0;  // weight of the deadline-overrun penalty
    bool operator==(const PrepartitionContext&) const = default;
};

inline void validate(const PrepartitionContext& ctx) {
    if (!(ctx.bandwidth_mbps > 0.0) || !std::isfinite(ctx.bandwidth_mbps))
        raise(ErrorCode::InvalidArgument, "prepartition context: bandwidth must be positive");
    if (!(ctx.t_user_ms > 0.0) || !std::isfinite(ctx.t_user_ms))
        raise(ErrorCode::InvalidArgument, "prepartition context: t_user must be positive");
    if (!(ctx.lambda1 >= 0.0) || !std::isfinite(ctx.lambda1) || !(ctx.lambda2 >= 0.0) ||
        !std::isfinite(ctx.lambda2))
        raise(ErrorCode::InvalidArgument, "prepartition context: lambda weights must be non-negative");
}

inline nlohmann::json to_json(const PrepartitionContext& ctx) {
    return nlohmann::json{{"bandwidth_mbps", ctx.bandwidth_mbps},
                          {"t_user_ms", ctx.t_user_ms},
                          {"lambda1", ctx.lambda1},
                          {"lambda2", ctx.lambda2}};
}

inline PrepartitionContext context_from_json(const nlohmann::json& j) {
    PrepartitionContext ctx;
    ctx.bandwidth_mbps = j.at("bandwidth_mbps").get<double>();
    ctx.t_user_ms = j.at("t_user_ms").get<double>();
    ctx.lambda1 = j.at("lambda1").get<double>();
    ctx.lambda2 = j.at("lambda2").get<double>();
    return ctx;
}

// Score breakdown for one candidate cut. The benefit is
//   lambda1 * ln(saving / t_tran) - lambda2 * max(0, t_exe + t_tran - t_user)
// where saving = t_device_only - t_exe, t_exe is the split execution time
// (mobile prefix + edge suffix) and t_tran carries the cut tensor plus the
// result return. Cuts that save nothing score -inf.
struct CutEvaluation {
    int index = 0;
    std::uint64_t crossing_bytes = 0;
    double t_exe_ms = 0.0;
    double t_tran_ms = 0.0;
    double saving_ms = 0.0;
    double benefit = 0.0;
    bool retained = false;
};

inline std::vector<CutEvaluation> evaluate_cuts(const DnnGraph& graph, const CostFns& costs,
                                                const PrepartitionContext& ctx) {
    validate(ctx);
    if (!costs.mobile_ms || !costs.edge_ms)
        raise(ErrorCode::InvalidArgument, "evaluate_cuts: both cost callbacks must be set");

    const std::size_t n = graph.nodes.size();
    std::vector<double> mobile(n), edge(n);
    for (std::size_t i = 0; i < n; ++i) {
        mobile[i] = costs.mobile_ms(graph.nodes[i]);
        edge[i] = costs.edge_ms(graph.nodes[i]);
        if (!std::isfinite(mobile[i]) || mobile[i] < 0.0 || !std::isfinite(edge[i]) || edge[i] < 0.0)
            raise(ErrorCode::InvalidArgument,
                  "evaluate_cuts: cost callback returned a negative or non-finite latency");
    }

    std::vector<double> mobile_prefix(n + 1, 0.0), edge_suffix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) mobile_prefix[i + 1] = mobile_prefix[i] + mobile[i];
    for (std::size_t i = n; i-- > 0;) edge_suffix[i] = edge_suffix[i + 1] + edge[i];
    const double t_device = mobile_prefix[n];

    std::vector<CutEvaluation> evals;
    for (const CutPoint& cut : valid_cut_points(graph)) {
        CutEvaluation e;
        e.index = cut.index;
        e.crossing_bytes = cut.crossing_bytes;
        e.t_exe_ms = mobile_prefix[static_cast<std::size_t>(cut.index)] +
                     edge_suffix[static_cast<std::size_t>(cut.index)];
        e.t_tran_ms = transmission_latency_ms(
            static_cast<std::int64_t>(cut.crossing_bytes + graph.output_bytes()), ctx.bandwidth_mbps);
        e.saving_ms = t_device - e.t_exe_ms;
        if (e.saving_ms <= 0.0) {
            e.benefit = -std::numeric_limits<double>::infinity();
        } else {
            const double overrun = std::max(0.0, e.t_exe_ms + e.t_tran_ms - ctx.t_user_ms);
            e.benefit = ctx.lambda1 * std::log(e.saving_ms / e.t_tran_ms) - ctx.lambda2 * overrun;
        }
        e.retained = e.benefit > 0.0;
        evals.push_back(e);
    }
    return evals;
}

// One contiguous single-entry/single-exit operator group. in_bytes/out_bytes
// are the tensor sizes crossing the atom's entry and exit boundaries;
// manifest_bytes is the size of the canonical serialized manifest and stands
// in for the shippable atom metadata when planning migrations.
struct Atom {
    std::string id;
    int index = 0;
    int first_op = 0;
    int last_op = 0;  // inclusive
    std::vector<OperatorNode> ops;
    double mflops = 0.0;
    std::uint64_t param_bytes = 0;
    std::uint64_t in_bytes = 0;
    std::uint64_t out_bytes = 0;
    std::uint64_t manifest_bytes = 0;
    std::uint64_t digest = 0;
    bool operator==(const Atom&) const = default;
};

struct PartitionScheme {
    std::string model;
    PrepartitionContext context;
    std::vector<int> retained_cuts;
    std::vector<Atom> atoms;
    std::uint64_t digest = 0;
    bool operator==(const PartitionScheme&) const = default;
};

namespace detail {

inline nlohmann::json atom_manifest_body(const Atom& atom) {
    nlohmann::json j;
    j["schema"] = "adamec-atom/1";
    j["id"] = atom.id;
    j["index"] = atom.index;
    j["first_op"] = atom.first_op;
    j["last_op"] = atom.last_op;
    j["mflops"] = atom.mflops;
    j["param_bytes"] = atom.param_bytes;
    j["in_bytes"] = atom.in_bytes;
    j["out_bytes"] = atom.out_bytes;
    j["ops"] = nlohmann::json::array();
    for (const OperatorNode& op : atom.ops) j["ops"].push_back(to_json(op));
    return j;
}

inline nlohmann::json scheme_index_body(const PartitionScheme& scheme) {
    nlohmann::json j;
    j["schema"] = "adamec-scheme/1";
    j["model"] = scheme.model;
    j["context"] = to_json(scheme.context);
    j["retained_cuts"] = scheme.retained_cuts;
    j["atoms"] = nlohmann::json::array();
    for (const Atom& atom : scheme.atoms)
        j["atoms"].push_back(
            nlohmann::json{{"id", atom.id},
                           {"file", scheme.model + ".atom" + std::to_string(atom.index) + ".json"},
                           {"digest", atom.digest},
                           {"manifest_bytes", atom.manifest_bytes}});
    return j;
}

}  // namespace detail

// Canonical manifest: the digest covers every other field, and
// manifest_bytes equals the canonical dump size of the full manifest.
inline nlohmann::json atom_manifest(const Atom& atom) {
    nlohmann::json j = detail::atom_manifest_body(atom);
    j["digest"] = atom.digest;
    return j;
}

inline Atom atom_from_manifest(const nlohmann::json& j) {
    Atom atom;
    try {
        if (j.at("schema").get<std::string>() != "adamec-atom/1")
            raise(ErrorCode::IoError, "atom manifest: unsupported schema");
        atom.id = j.at("id").get<std::string>();
        atom.index = j.at("index").get<int>();
        atom.first_op = j.at("first_op").get<int>();
        atom.last_op = j.at("last_op").get<int>();
        atom.mflops = j.at("mflops").get<double>();
        atom.param_bytes = j.at("param_bytes").get<std::uint64_t>();
        atom.in_bytes = j.at("in_bytes").get<std::uint64_t>();
        atom.out_bytes = j.at("out_bytes").get<std::uint64_t>();
        for (const auto& jop : j.at("ops")) atom.ops.push_back(operator_from_json(jop));
        atom.digest = j.at("digest").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::IoError, std::string("atom manifest: ") + e.what());
    }
    if (hash_string(detail::atom_manifest_body(atom).dump()) != atom.digest)
        raise(ErrorCode::IoError, "atom manifest: digest mismatch for " + atom.id);
    atom.manifest_bytes = atom_manifest(atom).dump(2).size();
    return atom;
}

inline nlohmann::json scheme_index(const PartitionScheme& scheme) {
    nlohmann::json j = detail::scheme_index_body(scheme);
    j["digest"] = scheme.digest;
    return j;
}

inline PartitionScheme prepartition(const DnnGraph& graph, const CostFns& costs,
                                    const PrepartitionContext& ctx = {}) {
    graph.validate();
    const auto evals = evaluate_cuts(graph, costs, ctx);

    PartitionScheme scheme;
    scheme.model = graph.name;
    scheme.context = ctx;

    std::vector<int> boundaries{0};
    std::vector<std::uint64_t> boundary_bytes{static_cast<std::uint64_t>(graph.input_bytes())};
    for (const CutEvaluation& e : evals) {
        if (!e.retained) continue;
        scheme.retained_cuts.push_back(e.index);
        boundaries.push_back(e.index);
        boundary_bytes.push_back(e.crossing_bytes);
    }
    boundaries.push_back(static_cast<int>(graph.nodes.size()));
    boundary_bytes.push_back(static_cast<std::uint64_t>(graph.output_bytes()));

    for (std::size_t k = 0; k + 1 < boundaries.size(); ++k) {
        Atom atom;
        atom.index = static_cast<int>(k);
        atom.id = graph.name + "/atom" + std::to_string(k);
        atom.first_op = boundaries[k];
        atom.last_op = boundaries[k + 1] - 1;
        atom.in_bytes = boundary_bytes[k];
        atom.out_bytes = boundary_bytes[k + 1];
        for (int i = atom.first_op; i <= atom.last_op; ++i) {
            const OperatorNode& op = graph.nodes[static_cast<std::size_t>(i)];
            atom.ops.push_back(op);
            atom.mflops += op.mflops;
            atom.param_bytes += op.param_bytes;
        }
        atom.digest = hash_string(detail::atom_manifest_body(atom).dump());
        atom.manifest_bytes = atom_manifest(atom).dump(2).size();
        scheme.atoms.push_back(std::move(atom));
    }

    scheme.digest = hash_string(detail::scheme_index_body(scheme).dump());
    return scheme;
}

// Structural check of a scheme against the graph it claims to partition:
// atoms must tile the operator list in order, boundary byte counts must match
// the graph's cut tensors, and all digests must be current.
inline void validate_scheme(const PartitionScheme& scheme, const DnnGraph& graph) {
    if (scheme.model != graph.name)
        raise(ErrorCode::InvalidArgument, "scheme validation: model name mismatch");
    if (scheme.atoms.empty()) raise(ErrorCode::InvalidArgument, "scheme validation: no atoms");

    const auto cuts = valid_cut_points(graph);
    auto crossing_at = [&cuts](int index) -> std::uint64_t {
        for (const CutPoint& cut : cuts)
            if (cut.index == index) return cut.crossing_bytes;
        raise(ErrorCode::InvalidArgument, "scheme validation: atom boundary at op " +
                                              std::to_string(index) + " is not a valid cut point");
    };

    const int n = static_cast<int>(graph.nodes.size());
    int expect_first = 0;
    std::vector<int> interior;
    for (std::size_t k = 0; k < scheme.atoms.size(); ++k) {
        const Atom& atom = scheme.atoms[k];
        if (atom.index != static_cast<int>(k) || atom.id != scheme.model + "/atom" + std::to_string(k))
            raise(ErrorCode::InvalidArgument, "scheme validation: atom id/index out of order");
        if (atom.first_op != expect_first || atom.last_op < atom.first_op || atom.last_op >= n)
            raise(ErrorCode::InvalidArgument, "scheme validation: atoms do not tile the graph");
        const std::size_t span = static_cast<std::size_t>(atom.last_op - atom.first_op + 1);
        if (atom.ops.size() != span)
            raise(ErrorCode::InvalidArgument, "scheme validation: atom operator list length mismatch");
        double mflops = 0.0;
        std::uint64_t param_bytes = 0;
        for (std::size_t i = 0; i < span; ++i) {
            const OperatorNode& expected = graph.nodes[static_cast<std::size_t>(atom.first_op) + i];
            if (!(atom.ops[i] == expected))
                raise(ErrorCode::InvalidArgument, "scheme validation: atom " + atom.id +
                                                      " diverges from the graph at op " + expected.id);
            mflops += atom.ops[i].mflops;
            param_bytes += atom.ops[i].param_bytes;
        }
        if (mflops != atom.mflops || param_bytes != atom.param_bytes)
            raise(ErrorCode::InvalidArgument, "scheme validation: atom cost sums are stale");

        const std::uint64_t want_in = k == 0 ? graph.input_bytes() : crossing_at(atom.first_op);
        const std::uint64_t want_out =
            k + 1 == scheme.atoms.size() ? graph.output_bytes() : crossing_at(atom.last_op + 1);
        if (atom.in_bytes != want_in || atom.out_bytes != want_out)
            raise(ErrorCode::InvalidArgument, "scheme validation: atom boundary bytes are stale");

        if (atom.digest != hash_string(detail::atom_manifest_body(atom).dump()))
            raise(ErrorCode::InvalidArgument, "scheme validation: atom digest mismatch");
        if (k > 0) interior.push_back(atom.first_op);
        expect_first = atom.last_op + 1;
    }
    if (expect_first != n)
        raise(ErrorCode::InvalidArgument, "scheme validation: atoms do not cover the whole graph");
    if (interior != scheme.retained_cuts)
        raise(ErrorCode::InvalidArgument,
              "scheme validation: retained cuts disagree with atom boundaries");
    if (scheme.digest != hash_string(detail::scheme_index_body(scheme).dump()))
        raise(ErrorCode::InvalidArgument, "scheme validation: scheme digest mismatch");
}

inline void save_scheme(const PartitionScheme& scheme, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) raise(ErrorCode::IoError, "save_scheme: cannot create " + dir + ": " + ec.message());

    auto write_file = [](const fs::path& path, const std::string& text) {
        std::ofstream out(path);
        if (!out) raise(ErrorCode::IoError, "save_scheme: cannot open " + path.string());
        out << text << '\n';
        if (!out) raise(ErrorCode::IoError, "save_scheme: write failed for " + path.string());
    };
    for (const Atom& atom : scheme.atoms)
        write_file(fs::path(dir) / (scheme.model + ".atom" + std::to_string(atom.index) + ".json"),
                   atom_manifest(atom).dump(2));
    write_file(fs::path(dir) / (scheme.model + ".scheme.json"), scheme_index(scheme).dump(2));
}

inline PartitionScheme load_scheme(const std::string& dir, const std::string& model) {
    namespace fs = std::filesystem;
    const fs::path index_path = fs::path(dir) / (model + ".scheme.json");
    std::ifstream in(index_path);
    if (!in) raise(ErrorCode::IoError, "load_scheme: cannot open " + index_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::IoError, std::string("load_scheme: ") + e.what());
    }

    PartitionScheme scheme;
    try {
        if (j.at("schema").get<std::string>() != "adamec-scheme/1")
            raise(ErrorCode::IoError, "load_scheme: unsupported schema");
        scheme.model = j.at("model").get<std::string>();
        scheme.context = context_from_json(j.at("context"));
        scheme.retained_cuts = j.at("retained_cuts").get<std::vector<int>>();
        scheme.digest = j.at("digest").get<std::uint64_t>();
        for (const auto& entry : j.at("atoms")) {
            const fs::path atom_path = fs::path(dir) / entry.at("file").get<std::string>();
            std::ifstream atom_in(atom_path);
            if (!atom_in) raise(ErrorCode::IoError, "load_scheme: cannot open " + atom_path.string());
            nlohmann::json ja;
            atom_in >> ja;
            Atom atom = atom_from_manifest(ja);
            if (atom.digest != entry.at("digest").get<std::uint64_t>() ||
                atom.id != entry.at("id").get<std::string>())
                raise(ErrorCode::IoError, "load_scheme: index entry disagrees with " + atom_path.string());
            scheme.atoms.push_back(std::move(atom));
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::IoError, std::string("load_scheme: ") + e.what());
    }
    if (scheme.digest != hash_string(detail::scheme_index_body(scheme).dump()))
        raise(ErrorCode::IoError, "load_scheme: scheme digest mismatch");
    return scheme;
}

}  // namespace adamec
