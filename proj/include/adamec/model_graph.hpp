#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "adamec/errors.hpp"

namespace adamec {

enum class OperatorKind { Conv, FC, BN, MaxPool, AvgPool, Add, Concat, Identity };

inline const char* to_string(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::Conv:     return "Conv";
        case OperatorKind::FC:       return "FC";
        case OperatorKind::BN:       return "BN";
        case OperatorKind::MaxPool:  return "MaxPool";
        case OperatorKind::AvgPool:  return "AvgPool";
        case OperatorKind::Add:      return "Add";
        case OperatorKind::Concat:   return "Concat";
        case OperatorKind::Identity: return "Identity";
    }
    return "?";
}

inline OperatorKind kind_from_string(const std::string& s) {
    if (s == "Conv") return OperatorKind::Conv;
    if (s == "FC") return OperatorKind::FC;
    if (s == "BN") return OperatorKind::BN;
    if (s == "MaxPool") return OperatorKind::MaxPool;
    if (s == "AvgPool") return OperatorKind::AvgPool;
    if (s == "Add") return OperatorKind::Add;
    if (s == "Concat") return OperatorKind::Concat;
    if (s == "Identity") return OperatorKind::Identity;
    raise(ErrorCode::InvalidArgument, "unknown operator kind '" + s + "'");
}

// Kinds with a square spatial footprint (everything except FC).
inline bool is_spatial(OperatorKind kind) { return kind != OperatorKind::FC; }

// Kinds with a kernel window and stride.
inline bool is_windowed(OperatorKind kind) {
    return kind == OperatorKind::Conv || kind == OperatorKind::MaxPool || kind == OperatorKind::AvgPool;
}

constexpr int kBytesPerElement = 4;

// A primitive operator with its hyperparameters and analytic cost
// annotations. Fields not used by a kind stay zero; Conv uses
// {hw,cin,cout,k_s,stride}, FC uses {cin,cout}, BN/Add/Concat/Identity use
// {hw,cin}, pools use {hw,cin,k_s,stride}. cout/out_hw are derived for the
// kinds that do not choose them.
struct OperatorNode {
    std::string id;
    OperatorKind kind = OperatorKind::Identity;
    int block = 0; // layer-level block label assigned by builders

    int hw = 0;
    int cin = 0;
    int cout = 0;
    int k_s = 0;
    int stride = 0;

    // Derived at construction.
    int out_hw = 0;
    std::int64_t input_bytes = 0;
    std::int64_t out_bytes = 0;
    std::int64_t param_bytes = 0;
    double mflops = 0.0;

    bool operator==(const OperatorNode&) const = default;
};

inline std::int64_t round_up(std::int64_t v, std::int64_t step) {
    return step <= 1 ? v : ((v + step - 1) / step) * step;
}

// Multiply-accumulate count; channel_step > 1 rounds cin/cout up to that
// multiple before counting (the SIMD-lane staircase used by the oracle).
inline double operator_macs(const OperatorNode& op, int channel_step = 1) {
    const double ci = static_cast<double>(round_up(op.cin, channel_step));
    const double co = static_cast<double>(round_up(op.cout, channel_step));
    const double out2 = static_cast<double>(op.out_hw) * op.out_hw;
    switch (op.kind) {
        case OperatorKind::Conv:
            return out2 * op.k_s * op.k_s * ci * co;
        case OperatorKind::FC:
            return ci * co;
        case OperatorKind::BN:
            return 2.0 * op.hw * op.hw * ci;
        case OperatorKind::MaxPool:
        case OperatorKind::AvgPool:
            return out2 * op.k_s * op.k_s * ci;
        case OperatorKind::Add:
        case OperatorKind::Concat:
        case OperatorKind::Identity:
            return 0.0;
    }
    return 0.0;
}

// FLOPs in MFLOPs, with 1 MAC = 2 FLOPs for Conv/FC, 4 ops per element for
// BN (normalize + scale + shift), and one compare/add per window element
// for pools.
inline double operator_flops(const OperatorNode& op) {
    double flops = 0.0;
    const double out2 = static_cast<double>(op.out_hw) * op.out_hw;
    switch (op.kind) {
        case OperatorKind::Conv:
            flops = 2.0 * out2 * op.k_s * op.k_s * op.cin * op.cout;
            break;
        case OperatorKind::FC:
            flops = 2.0 * op.cin * op.cout;
            break;
        case OperatorKind::BN:
            flops = 4.0 * static_cast<double>(op.hw) * op.hw * op.cin;
            break;
        case OperatorKind::MaxPool:
        case OperatorKind::AvgPool:
            flops = out2 * op.k_s * op.k_s * op.cin;
            break;
        case OperatorKind::Add:
        case OperatorKind::Concat:
        case OperatorKind::Identity:
            flops = 0.0;
            break;
    }
    return flops / 1e6;
}

inline std::int64_t output_elements(const OperatorNode& op) {
    if (op.kind == OperatorKind::FC) return op.cout;
    return static_cast<std::int64_t>(op.out_hw) * op.out_hw * op.cout;
}

inline std::int64_t input_elements(const OperatorNode& op) {
    if (op.kind == OperatorKind::FC) return op.cin;
    return static_cast<std::int64_t>(op.hw) * op.hw * op.cin;
}

// Validates kind-specific fields and fills the derived annotations.
inline OperatorNode make_operator(std::string id, OperatorKind kind, int block, int hw, int cin,
                                  int cout = 0, int k_s = 0, int stride = 0) {
    OperatorNode op;
    op.id = std::move(id);
    op.kind = kind;
    op.block = block;

    const auto require = [&](bool cond, const char* what) {
        if (!cond) raise(ErrorCode::InvalidArgument, "operator '" + op.id + "': " + what);
    };

    require(cin >= 1 && cin <= 512, "cin out of range [1,512]");
    op.cin = cin;

    if (kind == OperatorKind::Conv || kind == OperatorKind::FC) {
        require(cout >= 1 && cout <= 512, "cout out of range [1,512]");
        op.cout = cout;
    } else {
        require(cout == 0 || cout == cin, "cout is derived for this kind");
        op.cout = cin;
    }

    if (is_spatial(kind)) {
        require(hw >= 1 && hw <= 512, "hw out of range [1,512]");
        op.hw = hw;
    } else {
        require(hw == 0, "hw unused for FC");
    }

    if (is_windowed(kind)) {
        require(k_s == 1 || k_s == 3 || k_s == 5 || k_s == 7, "kernel size not in {1,3,5,7}");
        require(stride >= 1 && stride <= 3, "stride not in {1,2,3}");
        require(hw >= k_s, "kernel larger than input");
        op.k_s = k_s;
        op.stride = stride;
        op.out_hw = (hw - k_s) / stride + 1;
    } else if (is_spatial(kind)) {
        require(k_s == 0 && stride == 0, "kernel/stride unused for this kind");
        op.out_hw = hw;
    } else {
        require(k_s == 0 && stride == 0, "kernel/stride unused for FC");
    }

    op.input_bytes = input_elements(op) * kBytesPerElement;
    op.out_bytes = output_elements(op) * kBytesPerElement;
    switch (kind) {
        case OperatorKind::Conv:
            op.param_bytes = (static_cast<std::int64_t>(op.k_s) * op.k_s * op.cin * op.cout + op.cout) *
                             kBytesPerElement;
            break;
        case OperatorKind::FC:
            op.param_bytes =
                (static_cast<std::int64_t>(op.cin) * op.cout + op.cout) * kBytesPerElement;
            break;
        case OperatorKind::BN:
            // scale, shift, running mean, running var
            op.param_bytes = 4LL * op.cin * kBytesPerElement;
            break;
        default:
            op.param_bytes = 0;
            break;
    }
    op.mflops = operator_flops(op);
    return op;
}

struct TensorEdge {
    int src = 0;
    int dst = 0;
    std::int64_t bytes = 0;

    bool operator==(const TensorEdge&) const = default;
};

// A position between consecutive nodes of the canonical topological order
// that is crossed by exactly one tensor edge.
struct CutPoint {
    int index = 0; // prefix = nodes [0, index)
    TensorEdge crossing_edge;
    std::int64_t crossing_bytes = 0;
};

// Operator DAG in canonical (execution) order: every edge goes from a lower
// to a higher node index. Immutable after construction/validation.
struct DnnGraph {
    std::string name;
    int input_hw = 0;
    int input_cin = 0;
    std::vector<OperatorNode> nodes;
    std::vector<TensorEdge> edges;

    int node_index(const std::string& id) const {
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (nodes[i].id == id) return static_cast<int>(i);
        raise(ErrorCode::NotFound, "no operator '" + id + "' in graph '" + name + "'");
    }

    std::vector<std::vector<int>> in_edges() const {
        std::vector<std::vector<int>> in(nodes.size());
        for (std::size_t e = 0; e < edges.size(); ++e) in[edges[e].dst].push_back(static_cast<int>(e));
        return in;
    }

    double total_mflops() const {
        double sum = 0.0;
        for (const auto& n : nodes) sum += n.mflops;
        return sum;
    }

    std::int64_t total_param_bytes() const {
        std::int64_t sum = 0;
        for (const auto& n : nodes) sum += n.param_bytes;
        return sum;
    }

    std::int64_t input_bytes() const {
        return static_cast<std::int64_t>(input_hw) * input_hw * input_cin * kBytesPerElement;
    }

    std::int64_t output_bytes() const { return nodes.empty() ? 0 : nodes.back().out_bytes; }

    int block_count() const {
        std::set<int> blocks;
        for (const auto& n : nodes) blocks.insert(n.block);
        return static_cast<int>(blocks.size());
    }

    void validate() const;
};

inline void DnnGraph::validate() const {
    const auto fail = [&](const std::string& what) {
        raise(ErrorCode::InvalidArgument, "graph '" + name + "': " + what);
    };
    if (nodes.empty()) fail("no operators");

    std::set<std::string> ids;
    for (const auto& n : nodes)
        if (!ids.insert(n.id).second) fail("duplicate operator id '" + n.id + "'");

    const int n = static_cast<int>(nodes.size());
    std::vector<int> in_degree(n, 0), out_degree(n, 0);
    for (const auto& e : edges) {
        if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) fail("edge references unknown node");
        if (e.src >= e.dst) fail("nodes are not in topological order");
        in_degree[e.dst]++;
        out_degree[e.src]++;
        if (e.bytes != nodes[e.src].out_bytes) fail("edge bytes do not match producer output");
    }

    int sources = 0, sinks = 0;
    for (int i = 0; i < n; ++i) {
        sources += in_degree[i] == 0;
        sinks += out_degree[i] == 0;
    }
    if (sources != 1) fail("graph must have exactly one source");
    if (sinks != 1) fail("graph must have exactly one sink");

    // Element-count conservation along every edge.
    std::vector<std::int64_t> incoming(n, 0);
    for (const auto& e : edges) {
        const auto elems = output_elements(nodes[e.src]);
        if (nodes[e.dst].kind == OperatorKind::Concat) {
            incoming[e.dst] += elems;
        } else {
            if (incoming[e.dst] != 0 && nodes[e.dst].kind != OperatorKind::Add)
                fail("operator '" + nodes[e.dst].id + "' has multiple inputs");
            if (elems != input_elements(nodes[e.dst]))
                fail("shape mismatch on edge into '" + nodes[e.dst].id + "'");
            incoming[e.dst] = elems;
        }
    }
    for (int i = 0; i < n; ++i) {
        if (nodes[i].kind == OperatorKind::Concat && incoming[i] != input_elements(nodes[i]))
            fail("concat '" + nodes[i].id + "' input channels do not add up");
    }
    if (input_elements(nodes.front()) !=
        static_cast<std::int64_t>(input_hw) * input_hw * input_cin)
        fail("source operator does not match declared input shape");
}

// Every topological boundary crossed by exactly one tensor edge, in
// execution order. Multi-tensor boundaries (inception internals, residual
// spans) are excluded so that a cut always has a single transmitted tensor.
inline std::vector<CutPoint> valid_cut_points(const DnnGraph& graph) {
    std::vector<CutPoint> points;
    const int n = static_cast<int>(graph.nodes.size());
    for (int i = 1; i < n; ++i) {
        int crossing = 0;
        const TensorEdge* only = nullptr;
        for (const auto& e : graph.edges) {
            if (e.src < i && e.dst >= i) {
                ++crossing;
                only = &e;
            }
        }
        if (crossing == 1) points.push_back({i, *only, only->bytes});
    }
    return points;
}

// --- builders ---------------------------------------------------------------

namespace detail {

class GraphBuilder {
public:
    GraphBuilder(std::string name, int input_hw, int input_cin) {
        graph_.name = std::move(name);
        graph_.input_hw = input_hw;
        graph_.input_cin = input_cin;
    }

    // Appends a node fed by `inputs` (node indices); empty inputs = chain
    // onto the previous node.
    int add(OperatorNode op, std::vector<int> inputs = {}) {
        const int idx = static_cast<int>(graph_.nodes.size());
        if (inputs.empty() && idx > 0) inputs.push_back(idx - 1);
        for (const int src : inputs)
            graph_.edges.push_back({src, idx, graph_.nodes[src].out_bytes});
        graph_.nodes.push_back(std::move(op));
        return idx;
    }

    int chain(OperatorKind kind, int block, int hw, int cin, int cout = 0, int k = 0, int s = 0,
              std::vector<int> inputs = {}) {
        return add(make_operator(next_id(kind), kind, block, hw, cin, cout, k, s), std::move(inputs));
    }

    const OperatorNode& node(int idx) const { return graph_.nodes[idx]; }

    DnnGraph finish() {
        graph_.validate();
        return std::move(graph_);
    }

private:
    std::string next_id(OperatorKind kind) {
        std::string base = to_string(kind);
        std::transform(base.begin(), base.end(), base.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return base + "_" + std::to_string(graph_.nodes.size());
    }

    DnnGraph graph_;
};

inline int scaled(int channels, int scale) {
    return static_cast<int>(std::clamp<std::int64_t>(static_cast<std::int64_t>(channels) * scale, 1, 512));
}

// Inception-style single-entry/single-exit region: three parallel branches
// (k x k conv; 1x1 reduce + k x k conv; k x k pool + 1x1 conv) joined by a
// Concat. All branches reduce the spatial size identically so the Concat
// lines up without padding.
inline int inception(GraphBuilder& b, int entry, int block, int k, int c1, int c3r, int c3, int cp) {
    const auto& in = b.node(entry);
    const int hw = in.out_hw;
    const int cin = in.cout;
    const int b1 = b.chain(OperatorKind::Conv, block, hw, cin, c1, k, 1, {entry});
    const int b2r = b.chain(OperatorKind::Conv, block, hw, cin, c3r, 1, 1, {entry});
    const int b2 = b.chain(OperatorKind::Conv, block, hw, c3r, c3, k, 1, {b2r});
    const int b3p = b.chain(OperatorKind::MaxPool, block, hw, cin, 0, k, 1, {entry});
    const int out_hw = b.node(b1).out_hw;
    const int b3 = b.chain(OperatorKind::Conv, block, out_hw, cin, cp, 1, 1, {b3p});
    return b.chain(OperatorKind::Concat, block, out_hw, c1 + c3 + cp, 0, 0, 0, {b1, b2, b3});
}

// Residual block out of 1x1 convolutions (spatial size is preserved without
// padding only for k = 1, so the skip connection lines up).
inline int residual(GraphBuilder& b, int entry, int block, int cout, int stride) {
    const auto& in = b.node(entry);
    const int hw = in.out_hw;
    const int cin = in.cout;
    const int main1 = b.chain(OperatorKind::Conv, block, hw, cin, cout, 1, stride, {entry});
    const int hw2 = b.node(main1).out_hw;
    const int bn1 = b.chain(OperatorKind::BN, block, hw2, cout, 0, 0, 0, {main1});
    const int main2 = b.chain(OperatorKind::Conv, block, hw2, cout, cout, 1, 1, {bn1});
    int skip = entry;
    if (stride != 1 || cin != cout)
        skip = b.chain(OperatorKind::Conv, block, hw, cin, cout, 1, stride, {entry});
    const int sum = b.chain(OperatorKind::Add, block, hw2, cout, 0, 0, 0, {main2, skip});
    return b.chain(OperatorKind::Identity, block, hw2, cout, 0, 0, 0, {sum});
}

inline DnnGraph build_alexnet(int scale) {
    GraphBuilder b("alexnet", 32, 3);
    const auto c = [&](int ch) { return scaled(ch, scale); };
    // 23 operators in 8 layer-level blocks
    b.chain(OperatorKind::Conv, 1, 32, 3, c(64), 5, 1);
    b.chain(OperatorKind::BN, 1, 28, c(64));
    b.chain(OperatorKind::Identity, 1, 28, c(64));
    b.chain(OperatorKind::MaxPool, 1, 28, c(64), 0, 3, 2);
    b.chain(OperatorKind::Conv, 2, 13, c(64), c(192), 3, 1);
    b.chain(OperatorKind::BN, 2, 11, c(192));
    b.chain(OperatorKind::Identity, 2, 11, c(192));
    b.chain(OperatorKind::MaxPool, 2, 11, c(192), 0, 3, 2);
    b.chain(OperatorKind::Conv, 3, 5, c(192), c(384), 3, 1);
    b.chain(OperatorKind::Identity, 3, 3, c(384));
    b.chain(OperatorKind::Conv, 4, 3, c(384), c(256), 3, 1);
    b.chain(OperatorKind::Identity, 4, 1, c(256));
    b.chain(OperatorKind::Conv, 5, 1, c(256), c(256), 1, 1);
    b.chain(OperatorKind::Identity, 5, 1, c(256));
    b.chain(OperatorKind::AvgPool, 5, 1, c(256), 0, 1, 1);
    b.chain(OperatorKind::Identity, 5, 1, c(256));
    b.chain(OperatorKind::FC, 6, 0, c(256), c(512));
    b.chain(OperatorKind::Identity, 6, 1, c(512));
    b.chain(OperatorKind::Identity, 6, 1, c(512));
    b.chain(OperatorKind::FC, 7, 0, c(512), c(512));
    b.chain(OperatorKind::Identity, 7, 1, c(512));
    b.chain(OperatorKind::Identity, 7, 1, c(512));
    b.chain(OperatorKind::FC, 8, 0, c(512), 100);
    return b.finish();
}

inline DnnGraph build_vgg16(int scale) {
    GraphBuilder b("vgg16", 32, 3);
    const auto c = [&](int ch) { return scaled(ch, scale); };
    b.chain(OperatorKind::Conv, 1, 32, 3, c(64), 3, 1);
    b.chain(OperatorKind::Conv, 1, 30, c(64), c(64), 3, 1);
    b.chain(OperatorKind::MaxPool, 1, 28, c(64), 0, 3, 2);
    b.chain(OperatorKind::Conv, 2, 13, c(64), c(128), 3, 1);
    b.chain(OperatorKind::Conv, 2, 11, c(128), c(128), 3, 1);
    b.chain(OperatorKind::MaxPool, 2, 9, c(128), 0, 3, 2);
    b.chain(OperatorKind::Conv, 3, 4, c(128), c(256), 3, 1);
    b.chain(OperatorKind::Conv, 3, 2, c(256), c(256), 1, 1);
    b.chain(OperatorKind::Conv, 3, 2, c(256), c(256), 1, 1);
    b.chain(OperatorKind::MaxPool, 3, 2, c(256), 0, 1, 2);
    b.chain(OperatorKind::Conv, 4, 1, c(256), c(512), 1, 1);
    b.chain(OperatorKind::Conv, 4, 1, c(512), c(512), 1, 1);
    b.chain(OperatorKind::Conv, 4, 1, c(512), c(512), 1, 1);
    b.chain(OperatorKind::MaxPool, 4, 1, c(512), 0, 1, 1);
    b.chain(OperatorKind::Conv, 5, 1, c(512), c(512), 1, 1);
    b.chain(OperatorKind::Conv, 5, 1, c(512), c(512), 1, 1);
    b.chain(OperatorKind::Conv, 5, 1, c(512), c(512), 1, 1);
    b.chain(OperatorKind::MaxPool, 5, 1, c(512), 0, 1, 1);
    b.chain(OperatorKind::Identity, 6, 1, c(512));
    b.chain(OperatorKind::FC, 6, 0, c(512), c(512));
    b.chain(OperatorKind::FC, 7, 0, c(512), c(512));
    b.chain(OperatorKind::FC, 8, 0, c(512), 100);
    return b.finish();
}

inline DnnGraph build_googlenet(int scale) {
    GraphBuilder b("googlenet", 160, 3);
    const auto c = [&](int ch) { return scaled(ch, scale); };
    b.chain(OperatorKind::Conv, 1, 160, 3, c(32), 7, 2);             // 77
    b.chain(OperatorKind::BN, 1, 77, c(32));
    b.chain(OperatorKind::Identity, 1, 77, c(32));
    b.chain(OperatorKind::MaxPool, 1, 77, c(32), 0, 3, 2);           // 38
    b.chain(OperatorKind::Conv, 2, 38, c(32), c(96), 3, 1);          // 36
    b.chain(OperatorKind::BN, 2, 36, c(96));
    b.chain(OperatorKind::Identity, 2, 36, c(96));
    int v = b.chain(OperatorKind::MaxPool, 2, 36, c(96), 0, 3, 2);   // 17
    v = inception(b, v, 3, 5, c(32), c(48), c(64), c(32));           // 13, 128
    v = inception(b, v, 4, 5, c(48), c(64), c(80), c(32));           // 9, 160
    v = inception(b, v, 5, 3, c(64), c(80), c(96), c(32));           // 7, 192
    v = inception(b, v, 6, 7, c(96), c(96), c(128), c(32));          // 1, 256
    v = b.chain(OperatorKind::AvgPool, 7, 1, c(256), 0, 1, 1, {v});
    b.chain(OperatorKind::Identity, 7, 1, c(256));
    b.chain(OperatorKind::FC, 7, 0, c(256), 100);
    return b.finish();
}

inline DnnGraph build_resnet18(int scale) {
    GraphBuilder b("resnet18", 64, 3);
    const auto c = [&](int ch) { return scaled(ch, scale); };
    int v = b.chain(OperatorKind::Conv, 1, 64, 3, c(32), 7, 2);      // 29
    b.chain(OperatorKind::BN, 1, 29, c(32));
    b.chain(OperatorKind::Identity, 1, 29, c(32));
    v = b.chain(OperatorKind::MaxPool, 1, 29, c(32), 0, 3, 2);       // 14
    v = residual(b, v, 2, c(32), 1);
    v = residual(b, v, 2, c(32), 1);
    v = residual(b, v, 3, c(64), 2);                                 // 7
    v = residual(b, v, 3, c(64), 1);
    v = residual(b, v, 4, c(128), 2);                                // 4
    v = residual(b, v, 4, c(128), 1);
    v = residual(b, v, 5, c(256), 2);                                // 2
    v = residual(b, v, 5, c(256), 1);
    v = b.chain(OperatorKind::AvgPool, 6, 2, c(256), 0, 1, 2, {v});  // 1
    b.chain(OperatorKind::Identity, 6, 1, c(256));
    b.chain(OperatorKind::FC, 6, 0, c(256), 100);
    return b.finish();
}

inline DnnGraph build_mobilenet(int scale) {
    GraphBuilder b("mobilenet", 64, 3);
    const auto c = [&](int ch) { return scaled(ch, scale); };
    int hw = 31;
    b.chain(OperatorKind::Conv, 1, 64, 3, c(16), 3, 2); // 31
    const int widths[13] = {16, 32, 32, 64, 64, 128, 128, 128, 128, 128, 128, 256, 256};
    int cin = c(16);
    for (int i = 0; i < 13; ++i) {
        const int block = 1 + (i + 1) / 2;
        const int cw = c(widths[i]);
        // depthwise stand-in (narrow spatial conv) followed by pointwise 1x1
        b.chain(OperatorKind::Conv, block, hw, cin, cin, 3, 1);
        hw -= 2;
        b.chain(OperatorKind::Conv, block, hw, cin, cw, 1, 1);
        cin = cw;
    }
    b.chain(OperatorKind::AvgPool, 8, hw, cin, 0, 5, 1); // 5 -> 1
    b.chain(OperatorKind::Identity, 8, 1, cin);
    b.chain(OperatorKind::FC, 8, 0, cin, 100);
    return b.finish();
}

inline DnnGraph build_tinyyolo(int scale) {
    GraphBuilder b("tinyyolo", 128, 3);
    const auto c = [&](int ch) { return scaled(ch, scale); };
    b.chain(OperatorKind::Conv, 1, 128, 3, c(16), 3, 1);             // 126
    b.chain(OperatorKind::BN, 1, 126, c(16));
    b.chain(OperatorKind::MaxPool, 1, 126, c(16), 0, 3, 2);          // 62
    b.chain(OperatorKind::Conv, 2, 62, c(16), c(32), 3, 1);          // 60
    b.chain(OperatorKind::BN, 2, 60, c(32));
    b.chain(OperatorKind::MaxPool, 2, 60, c(32), 0, 3, 2);           // 29
    b.chain(OperatorKind::Conv, 3, 29, c(32), c(64), 3, 1);          // 27
    b.chain(OperatorKind::BN, 3, 27, c(64));
    b.chain(OperatorKind::MaxPool, 3, 27, c(64), 0, 3, 2);           // 13
    b.chain(OperatorKind::Conv, 4, 13, c(64), c(128), 3, 1);         // 11
    b.chain(OperatorKind::BN, 4, 11, c(128));
    b.chain(OperatorKind::MaxPool, 4, 11, c(128), 0, 3, 2);          // 5
    b.chain(OperatorKind::Conv, 5, 5, c(128), c(256), 3, 1);         // 3
    b.chain(OperatorKind::BN, 5, 3, c(256));
    b.chain(OperatorKind::Conv, 6, 3, c(256), c(256), 3, 1);         // 1
    b.chain(OperatorKind::BN, 6, 1, c(256));
    b.chain(OperatorKind::Conv, 7, 1, c(256), c(256), 1, 1);
    b.chain(OperatorKind::Conv, 7, 1, c(256), 125, 1, 1);
    return b.finish();
}

} // namespace detail

inline DnnGraph build_model(const std::string& spec, int scale) {
    if (scale < 1) raise(ErrorCode::InvalidArgument, "scale must be >= 1");
    if (spec == "alexnet") return detail::build_alexnet(scale);
    if (spec == "vgg16") return detail::build_vgg16(scale);
    if (spec == "googlenet") return detail::build_googlenet(scale);
    if (spec == "resnet18") return detail::build_resnet18(scale);
    if (spec == "mobilenet") return detail::build_mobilenet(scale);
    if (spec == "tinyyolo" || spec == "tiny-yolo") return detail::build_tinyyolo(scale);
    raise(ErrorCode::NotFound, "unknown model spec '" + spec + "'");
}

inline std::vector<std::string> known_model_specs() {
    return {"alexnet", "vgg16", "googlenet", "resnet18", "mobilenet", "tinyyolo"};
}

// --- JSON import/export (schema: docs/graph-schema.md) ----------------------

inline nlohmann::json to_json(const OperatorNode& op) {
    nlohmann::json j{{"id", op.id}, {"kind", to_string(op.kind)}, {"block", op.block}};
    if (is_spatial(op.kind)) j["hw"] = op.hw;
    j["cin"] = op.cin;
    if (op.kind == OperatorKind::Conv || op.kind == OperatorKind::FC) j["cout"] = op.cout;
    if (is_windowed(op.kind)) {
        j["k"] = op.k_s;
        j["stride"] = op.stride;
    }
    j["out_hw"] = op.out_hw;
    j["out_bytes"] = op.out_bytes;
    j["param_bytes"] = op.param_bytes;
    j["mflops"] = op.mflops;
    return j;
}

inline OperatorNode operator_from_json(const nlohmann::json& j) {
    const auto kind = kind_from_string(j.at("kind").get<std::string>());
    const bool chooses_cout = kind == OperatorKind::Conv || kind == OperatorKind::FC;
    return make_operator(j.at("id").get<std::string>(), kind, j.value("block", 0),
                         is_spatial(kind) ? j.at("hw").get<int>() : 0, j.at("cin").get<int>(),
                         chooses_cout ? j.at("cout").get<int>() : 0,
                         is_windowed(kind) ? j.at("k").get<int>() : 0,
                         is_windowed(kind) ? j.at("stride").get<int>() : 0);
}

inline nlohmann::json to_json(const DnnGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes) nodes.push_back(to_json(n));
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : graph.edges)
        edges.push_back({{"from", graph.nodes[e.src].id}, {"to", graph.nodes[e.dst].id}, {"bytes", e.bytes}});
    return {{"schema", "adamec-graph/1"},
            {"name", graph.name},
            {"input", {{"hw", graph.input_hw}, {"cin", graph.input_cin}}},
            {"nodes", std::move(nodes)},
            {"edges", std::move(edges)}};
}

inline DnnGraph graph_from_json(const nlohmann::json& j) {
    DnnGraph g;
    g.name = j.at("name").get<std::string>();
    g.input_hw = j.at("input").at("hw").get<int>();
    g.input_cin = j.at("input").at("cin").get<int>();
    for (const auto& jn : j.at("nodes")) g.nodes.push_back(operator_from_json(jn));
    for (const auto& je : j.at("edges")) {
        const int src = g.node_index(je.at("from").get<std::string>());
        const int dst = g.node_index(je.at("to").get<std::string>());
        g.edges.push_back({src, dst, g.nodes[src].out_bytes});
    }
    g.validate();
    return g;
}

inline void save_graph(const DnnGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    out << to_json(graph).dump(2) << "\n";
    if (!out) raise(ErrorCode::IoError, "failed writing '" + path + "'");
}

inline DnnGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::IoError, "cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return graph_from_json(j);
}

} // namespace adamec
