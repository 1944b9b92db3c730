#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "adamec/cost_oracle.hpp"
#include "adamec/errors.hpp"
#include "adamec/model_graph.hpp"
#include "adamec/rng.hpp"

namespace adamec {

// --- small stats helpers ------------------------------------------------

inline double mean_abs_error(const std::vector<double>& truth, const std::vector<double>& pred) {
    if (truth.empty() || truth.size() != pred.size())
        raise(ErrorCode::InvalidArgument, "mismatched metric inputs");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) sum += std::abs(truth[i] - pred[i]);
    return sum / static_cast<double>(truth.size());
}

// Fraction of predictions within +-frac relative error of the truth.
inline double accuracy_within(const std::vector<double>& truth, const std::vector<double>& pred,
                              double frac) {
    if (truth.empty() || truth.size() != pred.size())
        raise(ErrorCode::InvalidArgument, "mismatched metric inputs");
    int hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (std::abs(pred[i] - truth[i]) <= frac * std::abs(truth[i])) ++hits;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

inline double r_squared(const std::vector<double>& truth, const std::vector<double>& pred) {
    if (truth.empty() || truth.size() != pred.size())
        raise(ErrorCode::InvalidArgument, "mismatched metric inputs");
    const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / truth.size();
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
    }
    if (ss_tot == 0.0) raise(ErrorCode::DegenerateTarget, "target has zero variance");
    return 1.0 - ss_res / ss_tot;
}

// --- feature extraction ---------------------------------------------------

constexpr int kFeatureCount = 8;
using FeatureVec = std::array<double, kFeatureCount>;

// Structural operator features. The last two are derived work estimates;
// the lane-rounded one carries the hardware staircase.
inline FeatureVec operator_features(const OperatorNode& op) {
    return {static_cast<double>(op.hw),     static_cast<double>(op.cin),
            static_cast<double>(op.cout),   static_cast<double>(op.k_s),
            static_cast<double>(op.stride), static_cast<double>(op.out_hw),
            op.mflops,                      operator_macs(op, kMacChannelStep)};
}

// --- random forest regressor ------------------------------------------------

struct ForestParams {
    int trees = 100;
    int max_depth = 16;
    int min_leaf = 2;
};

class RegressionForest {
public:
    // Leaves carry a one-variable linear model in log1p of the work feature
    // (model-tree style) so that predictions interpolate between neighbouring
    // samples instead of holding the leaf mean; lo/hi clamp the output to the
    // target range seen in the leaf.
    struct Node {
        int feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double value = 0.0; // leaf: target mean
        double slope = 0.0; // leaf: d target / d log1p(work)
        double x0 = 0.0;    // leaf: mean log1p(work)
        double lo = 0.0;
        double hi = 0.0;
    };

    static constexpr int kWorkFeature = kFeatureCount - 1;

    void train(const std::vector<FeatureVec>& X, const std::vector<double>& y,
               const ForestParams& params, std::uint64_t seed) {
        if (X.size() != y.size() || X.empty())
            raise(ErrorCode::InvalidArgument, "forest needs matching features and targets");
        if (X.size() < 2) raise(ErrorCode::InsufficientData, "forest needs at least two samples");
        bool varies = false;
        for (const double v : y) varies = varies || v != y.front();
        if (!varies) raise(ErrorCode::DegenerateTarget, "forest target has zero variance");

        params_ = params;
        trees_.assign(static_cast<std::size_t>(params.trees), {});
        const int n = static_cast<int>(X.size());
        for (int t = 0; t < params.trees; ++t) {
            Rng rng = derive_rng(seed, 0x1000 + static_cast<std::uint64_t>(t));
            std::vector<int> indices(static_cast<std::size_t>(n));
            for (auto& idx : indices) idx = static_cast<int>(rng.uniform_int(0, n - 1));
            grow(trees_[static_cast<std::size_t>(t)], X, y, std::move(indices), 0, rng);
        }
    }

    double predict(const FeatureVec& x) const {
        if (trees_.empty()) raise(ErrorCode::InvalidArgument, "forest is not trained");
        const double xw = std::log1p(std::max(x[kWorkFeature], 0.0));
        double sum = 0.0;
        for (const auto& tree : trees_) {
            int i = 0;
            while (tree[static_cast<std::size_t>(i)].feature >= 0) {
                const auto& node = tree[static_cast<std::size_t>(i)];
                i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                : node.right;
            }
            const auto& leaf = tree[static_cast<std::size_t>(i)];
            sum += std::clamp(leaf.value + leaf.slope * (xw - leaf.x0), leaf.lo, leaf.hi);
        }
        return sum / static_cast<double>(trees_.size());
    }

    bool trained() const { return !trees_.empty(); }
    const std::vector<std::vector<Node>>& trees() const { return trees_; }

    nlohmann::json to_json() const {
        nlohmann::json jt = nlohmann::json::array();
        for (const auto& tree : trees_) {
            nlohmann::json jn = nlohmann::json::array();
            for (const auto& n : tree)
                jn.push_back({n.feature, n.threshold, n.left, n.right, n.value, n.slope, n.x0,
                              n.lo, n.hi});
            jt.push_back(std::move(jn));
        }
        return {{"trees", std::move(jt)},
                {"params", {params_.trees, params_.max_depth, params_.min_leaf}}};
    }

    static RegressionForest from_json(const nlohmann::json& j) {
        RegressionForest f;
        f.params_ = {j.at("params")[0], j.at("params")[1], j.at("params")[2]};
        for (const auto& jt : j.at("trees")) {
            std::vector<Node> tree;
            for (const auto& jn : jt)
                tree.push_back(
                    {jn[0], jn[1], jn[2], jn[3], jn[4], jn[5], jn[6], jn[7], jn[8]});
            f.trees_.push_back(std::move(tree));
        }
        return f;
    }

private:
    static void fit_leaf(Node& leaf, const std::vector<FeatureVec>& X,
                         const std::vector<double>& y, const std::vector<int>& indices) {
        const double n = static_cast<double>(indices.size());
        double mean_x = 0.0, mean_y = 0.0;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const int i : indices) {
            const double yi = y[static_cast<std::size_t>(i)];
            mean_x += std::log1p(std::max(X[static_cast<std::size_t>(i)][kWorkFeature], 0.0)) / n;
            mean_y += yi / n;
            lo = std::min(lo, yi);
            hi = std::max(hi, yi);
        }
        double cov = 0.0, var = 0.0;
        for (const int i : indices) {
            const double dx =
                std::log1p(std::max(X[static_cast<std::size_t>(i)][kWorkFeature], 0.0)) - mean_x;
            cov += dx * (y[static_cast<std::size_t>(i)] - mean_y);
            var += dx * dx;
        }
        leaf.value = mean_y;
        leaf.slope = var > 1e-12 ? cov / var : 0.0;
        leaf.x0 = mean_x;
        leaf.lo = lo;
        leaf.hi = hi;
    }

    int grow(std::vector<Node>& tree, const std::vector<FeatureVec>& X,
             const std::vector<double>& y, std::vector<int> indices, int depth, Rng& rng) {
        const int self = static_cast<int>(tree.size());
        tree.push_back({});

        const int n = static_cast<int>(indices.size());
        fit_leaf(tree[static_cast<std::size_t>(self)], X, y, indices);

        if (depth >= params_.max_depth || n < 2 * params_.min_leaf) return self;

        // feature subset of size ceil(sqrt(d)) per split: the work estimate is
        // always a candidate (it orders the target), the rest are random
        constexpr int kSubset = 3;
        static_assert(kSubset * kSubset >= kFeatureCount);
        std::array<int, kFeatureCount> order{};
        std::iota(order.begin(), order.end(), 0);
        std::swap(order[0], order[kWorkFeature]);
        for (int i = 1; i < kSubset; ++i) {
            const auto j = static_cast<std::size_t>(rng.uniform_int(i, kFeatureCount - 1));
            std::swap(order[static_cast<std::size_t>(i)], order[j]);
        }

        int best_feature = -1, best_pos = -1;
        double best_score = std::numeric_limits<double>::infinity();
        std::vector<int> best_sorted;
        std::vector<int> sorted(indices);
        for (int fi = 0; fi < kSubset; ++fi) {
            const int f = order[static_cast<std::size_t>(fi)];
            std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
                const double va = X[static_cast<std::size_t>(a)][static_cast<std::size_t>(f)];
                const double vb = X[static_cast<std::size_t>(b)][static_cast<std::size_t>(f)];
                return va != vb ? va < vb : a < b;
            });
            // one pass with running sums; score = total squared error of both sides
            double left_sum = 0.0, left_sq = 0.0, right_sum = 0.0, right_sq = 0.0;
            for (const int i : sorted) {
                right_sum += y[static_cast<std::size_t>(i)];
                right_sq += y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)];
            }
            for (int pos = 0; pos + 1 < n; ++pos) {
                const double yi = y[static_cast<std::size_t>(sorted[static_cast<std::size_t>(pos)])];
                left_sum += yi;
                left_sq += yi * yi;
                right_sum -= yi;
                right_sq -= yi * yi;
                const int ln = pos + 1, rn = n - ln;
                if (ln < params_.min_leaf || rn < params_.min_leaf) continue;
                const double xl =
                    X[static_cast<std::size_t>(sorted[static_cast<std::size_t>(pos)])]
                     [static_cast<std::size_t>(f)];
                const double xr =
                    X[static_cast<std::size_t>(sorted[static_cast<std::size_t>(pos + 1)])]
                     [static_cast<std::size_t>(f)];
                if (xl == xr) continue;
                const double score =
                    (left_sq - left_sum * left_sum / ln) + (right_sq - right_sum * right_sum / rn);
                if (score < best_score) {
                    best_score = score;
                    best_feature = f;
                    best_pos = pos;
                    best_sorted = sorted;
                }
            }
        }
        if (best_feature < 0) return self;

        const auto split_val =
            (X[static_cast<std::size_t>(best_sorted[static_cast<std::size_t>(best_pos)])]
              [static_cast<std::size_t>(best_feature)] +
             X[static_cast<std::size_t>(best_sorted[static_cast<std::size_t>(best_pos + 1)])]
              [static_cast<std::size_t>(best_feature)]) /
            2.0;
        std::vector<int> left(best_sorted.begin(), best_sorted.begin() + best_pos + 1);
        std::vector<int> right(best_sorted.begin() + best_pos + 1, best_sorted.end());

        tree[static_cast<std::size_t>(self)].feature = best_feature;
        tree[static_cast<std::size_t>(self)].threshold = split_val;
        const int l = grow(tree, X, y, std::move(left), depth + 1, rng);
        const int r = grow(tree, X, y, std::move(right), depth + 1, rng);
        tree[static_cast<std::size_t>(self)].left = l;
        tree[static_cast<std::size_t>(self)].right = r;
        return self;
    }

    ForestParams params_;
    std::vector<std::vector<Node>> trees_;
};

// --- residual corrector (two-layer perceptron) -------------------------------

// Learns the systematic part of (truth - forest prediction) as a function of
// the prediction itself and the memory condition. Inputs are log1p-compressed
// and standardized; the target is standardized.
class BiasModel {
public:
    static constexpr int kInputs = 3;

    void init(int hidden, std::uint64_t seed) {
        hidden_ = hidden;
        Rng rng = derive_rng(seed, hash_string("bias-init"));
        params_.assign(static_cast<std::size_t>(hidden * kInputs + hidden + hidden + 1), 0.0);
        const double scale = std::sqrt(2.0 / kInputs);
        for (int i = 0; i < hidden * kInputs; ++i)
            params_[static_cast<std::size_t>(i)] = scale * (2.0 * rng.next_double() - 1.0);
        const int w2_off = hidden * kInputs + hidden;
        const double scale2 = std::sqrt(2.0 / hidden);
        for (int i = 0; i < hidden; ++i)
            params_[static_cast<std::size_t>(w2_off + i)] = scale2 * (2.0 * rng.next_double() - 1.0);
        x_mu_.fill(0.0);
        x_sd_.fill(1.0);
        y_mu_ = 0.0;
        y_sd_ = 1.0;
    }

    // x = {forest prediction ms, operator footprint MB, available memory MB}
    double predict(const std::array<double, kInputs>& x) const {
        if (params_.empty()) return 0.0;
        return forward(standardize(x)) * y_sd_ + y_mu_;
    }

    void train(const std::vector<std::array<double, kInputs>>& X, const std::vector<double>& y,
               int hidden, int epochs, double lr, std::uint64_t seed) {
        if (X.size() != y.size() || X.empty())
            raise(ErrorCode::InvalidArgument, "bias model needs matching inputs and targets");
        init(hidden, seed);
        fit_standardization(X, y);

        std::vector<std::array<double, kInputs>> Xs(X.size());
        std::vector<double> ys(y.size());
        for (std::size_t i = 0; i < X.size(); ++i) {
            Xs[i] = standardize(X[i]);
            ys[i] = (y[i] - y_mu_) / y_sd_;
        }

        const std::size_t n_params = params_.size();
        std::vector<double> grad(n_params), m(n_params, 0.0), v(n_params, 0.0);
        Rng shuffle_rng = derive_rng(seed, hash_string("bias-shuffle"));
        std::vector<int> order(X.size());
        std::iota(order.begin(), order.end(), 0);

        constexpr int kBatch = 64;
        const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        long step = 0;
        for (int epoch = 0; epoch < epochs; ++epoch) {
            shuffle_rng.shuffle(order);
            for (std::size_t start = 0; start < order.size(); start += kBatch) {
                const std::size_t end = std::min(order.size(), start + kBatch);
                std::fill(grad.begin(), grad.end(), 0.0);
                for (std::size_t i = start; i < end; ++i)
                    accumulate_gradient(Xs[static_cast<std::size_t>(order[i])],
                                        ys[static_cast<std::size_t>(order[i])], grad);
                const double inv = 1.0 / static_cast<double>(end - start);
                ++step;
                for (std::size_t p = 0; p < n_params; ++p) {
                    const double g = grad[p] * inv;
                    m[p] = beta1 * m[p] + (1 - beta1) * g;
                    v[p] = beta2 * v[p] + (1 - beta2) * g * g;
                    const double mh = m[p] / (1 - std::pow(beta1, step));
                    const double vh = v[p] / (1 - std::pow(beta2, step));
                    params_[p] -= lr * mh / (std::sqrt(vh) + eps);
                }
            }
        }
    }

    // Squared-error loss in standardized space, with the analytic gradient
    // with respect to the flat parameter vector. Used by the gradient check.
    double loss_and_grad(const std::array<double, kInputs>& x_raw, double y_raw,
                         std::vector<double>* grad) const {
        const auto xs = standardize(x_raw);
        const double ys = (y_raw - y_mu_) / y_sd_;
        if (grad) {
            grad->assign(params_.size(), 0.0);
            const double out = forward(xs);
            const double err = out - ys;
            backward(xs, err, *grad);
            return 0.5 * err * err;
        }
        const double err = forward(xs) - ys;
        return 0.5 * err * err;
    }

    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }
    int hidden() const { return hidden_; }

    nlohmann::json to_json() const {
        return {{"hidden", hidden_}, {"params", params_},   {"x_mu", x_mu_},
                {"x_sd", x_sd_},     {"y_mu", y_mu_},       {"y_sd", y_sd_}};
    }

    static BiasModel from_json(const nlohmann::json& j) {
        BiasModel b;
        b.hidden_ = j.at("hidden").get<int>();
        b.params_ = j.at("params").get<std::vector<double>>();
        const auto xm = j.at("x_mu").get<std::vector<double>>();
        const auto xs = j.at("x_sd").get<std::vector<double>>();
        std::copy(xm.begin(), xm.end(), b.x_mu_.begin());
        std::copy(xs.begin(), xs.end(), b.x_sd_.begin());
        b.y_mu_ = j.at("y_mu").get<double>();
        b.y_sd_ = j.at("y_sd").get<double>();
        return b;
    }

private:
    std::array<double, kInputs> standardize(const std::array<double, kInputs>& x) const {
        std::array<double, kInputs> out{};
        for (int i = 0; i < kInputs; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            out[idx] = (std::log1p(std::max(x[idx], 0.0)) - x_mu_[idx]) / x_sd_[idx];
        }
        return out;
    }

    void fit_standardization(const std::vector<std::array<double, kInputs>>& X,
                             const std::vector<double>& y) {
        const double n = static_cast<double>(X.size());
        x_mu_.fill(0.0);
        for (const auto& x : X)
            for (int i = 0; i < kInputs; ++i)
                x_mu_[static_cast<std::size_t>(i)] +=
                    std::log1p(std::max(x[static_cast<std::size_t>(i)], 0.0)) / n;
        x_sd_.fill(0.0);
        for (const auto& x : X)
            for (int i = 0; i < kInputs; ++i) {
                const auto idx = static_cast<std::size_t>(i);
                const double d = std::log1p(std::max(x[idx], 0.0)) - x_mu_[idx];
                x_sd_[idx] += d * d / n;
            }
        for (auto& sd : x_sd_) sd = std::max(std::sqrt(sd), 1e-9);
        y_mu_ = std::accumulate(y.begin(), y.end(), 0.0) / n;
        double var = 0.0;
        for (const double yi : y) var += (yi - y_mu_) * (yi - y_mu_) / n;
        y_sd_ = std::max(std::sqrt(var), 1e-9);
    }

    // xs and ys must already be standardized
    void accumulate_gradient(const std::array<double, kInputs>& xs, double ys,
                             std::vector<double>& grad) const {
        backward(xs, forward(xs) - ys, grad);
    }

    double forward(const std::array<double, kInputs>& xs) const {
        const int w2_off = hidden_ * kInputs + hidden_;
        double out = params_[static_cast<std::size_t>(w2_off + hidden_)]; // b2
        for (int h = 0; h < hidden_; ++h) {
            double z = params_[static_cast<std::size_t>(hidden_ * kInputs + h)]; // b1
            for (int i = 0; i < kInputs; ++i)
                z += params_[static_cast<std::size_t>(h * kInputs + i)] *
                     xs[static_cast<std::size_t>(i)];
            if (z > 0) out += params_[static_cast<std::size_t>(w2_off + h)] * z;
        }
        return out;
    }

    void backward(const std::array<double, kInputs>& xs, double err,
                  std::vector<double>& grad) const {
        const int w2_off = hidden_ * kInputs + hidden_;
        grad[static_cast<std::size_t>(w2_off + hidden_)] += err; // b2
        for (int h = 0; h < hidden_; ++h) {
            double z = params_[static_cast<std::size_t>(hidden_ * kInputs + h)];
            for (int i = 0; i < kInputs; ++i)
                z += params_[static_cast<std::size_t>(h * kInputs + i)] *
                     xs[static_cast<std::size_t>(i)];
            if (z <= 0) continue;
            grad[static_cast<std::size_t>(w2_off + h)] += err * z;
            const double dz = err * params_[static_cast<std::size_t>(w2_off + h)];
            grad[static_cast<std::size_t>(hidden_ * kInputs + h)] += dz;
            for (int i = 0; i < kInputs; ++i)
                grad[static_cast<std::size_t>(h * kInputs + i)] +=
                    dz * xs[static_cast<std::size_t>(i)];
        }
    }

    int hidden_ = 0;
    std::vector<double> params_; // w1 (hidden x inputs), b1, w2, b2
    std::array<double, kInputs> x_mu_{}, x_sd_{};
    double y_mu_ = 0.0, y_sd_ = 1.0;
};

// --- training data ---------------------------------------------------------

struct TrainingRow {
    OperatorNode op;
    double avail_mem_mb = 0.0;
    double latency_ms = 0.0;
    bool ample = false;
};

struct PredictorConfig {
    ForestParams forest;
    int bias_hidden = 16;
    int bias_epochs = 60;
    double bias_lr = 1e-3;
    double eval_fraction = 0.2;
    std::vector<double> mem_grid = {4.0, 8.0, 16.0, 32.0, 64.0, 256.0};
    double ample_factor = 2.0; // available memory = factor * threshold
    double degenerate_rel_residual = 0.15;
    std::uint64_t seed = 1234;
    std::map<OperatorKind, int> samples_per_kind = default_sample_budgets();

    static std::map<OperatorKind, int> default_sample_budgets() {
        return {{OperatorKind::Conv, 12799},
                {OperatorKind::FC, 121},
                {OperatorKind::BN, 464},
                {OperatorKind::MaxPool, 960},
                {OperatorKind::AvgPool, 960}};
    }
};

namespace detail {

inline int log_uniform_int(Rng& rng, int lo, int hi) {
    const double v = std::exp(rng.uniform(std::log(static_cast<double>(lo)),
                                          std::log(static_cast<double>(hi) + 1.0)));
    return std::clamp(static_cast<int>(v), lo, hi);
}

inline OperatorNode sample_operator_config(OperatorKind kind, Rng& rng) {
    static const std::vector<int> kernels = {1, 3, 5, 7};
    static const std::vector<int> strides = {1, 2, 3};
    switch (kind) {
        case OperatorKind::Conv: {
            const int k = rng.pick(kernels);
            const int s = rng.pick(strides);
            const int hw = log_uniform_int(rng, k, 512);
            return make_operator("s", kind, 0, hw, log_uniform_int(rng, 1, 512),
                                 log_uniform_int(rng, 1, 512), k, s);
        }
        case OperatorKind::FC:
            return make_operator("s", kind, 0, 0, log_uniform_int(rng, 1, 512),
                                 log_uniform_int(rng, 1, 512));
        case OperatorKind::BN:
            return make_operator("s", kind, 0, log_uniform_int(rng, 1, 512),
                                 log_uniform_int(rng, 1, 512));
        case OperatorKind::MaxPool:
        case OperatorKind::AvgPool: {
            const int k = rng.pick(kernels);
            const int s = rng.pick(strides);
            const int hw = log_uniform_int(rng, k, 512);
            return make_operator("s", kind, 0, hw, log_uniform_int(rng, 1, 512), 0, k, s);
        }
        default:
            raise(ErrorCode::UnsupportedOperator,
                  std::string("no measurement recipe for kind ") + to_string(kind));
    }
}

} // namespace detail

// Measures `n_configs` random operator configurations of one kind on one
// device: one ample-memory row per config plus one row per grid memory level.
inline std::vector<TrainingRow> sample_training_rows(const DeviceProfile& dev, OperatorKind kind,
                                                     int n_configs, const PredictorConfig& cfg) {
    if (n_configs < 5) raise(ErrorCode::InsufficientData, "too few configurations to sample");
    Rng rng = derive_rng(cfg.seed, hash_string(std::string("sample:") + to_string(kind)));
    std::vector<TrainingRow> rows;
    rows.reserve(static_cast<std::size_t>(n_configs) * (1 + cfg.mem_grid.size()));
    for (int i = 0; i < n_configs; ++i) {
        const auto op = detail::sample_operator_config(kind, rng);
        const double ample = cfg.ample_factor * memory_threshold_mb(dev, op);
        rows.push_back({op, ample, execution_latency_ms(dev, op, ample), true});
        for (const double g : cfg.mem_grid)
            rows.push_back({op, g, execution_latency_ms(dev, op, g), false});
    }
    return rows;
}

// --- trained predictor -------------------------------------------------------

struct KindReport {
    int train_configs = 0;
    int eval_configs = 0;
    double acc10 = 0.0;   // held-out, ample memory
    double r2 = 0.0;      // held-out, ample memory
    double mae_ms = 0.0;  // held-out, ample memory
    double low_mem_mae_raw = 0.0;       // held-out rows below the threshold
    double low_mem_mae_corrected = 0.0; // same rows, with the residual model
    int low_mem_rows = 0;
    bool bias_degenerate = false;
};

class LatencyPredictor {
public:
    LatencyPredictor() = default;
    explicit LatencyPredictor(DeviceProfile device) : device_(std::move(device)) {}

    const DeviceProfile& device() const { return device_; }

    bool supports(OperatorKind kind) const {
        return models_.count(kind) > 0 || operator_macs_is_zero(kind);
    }

    // Predicted execution latency of one operator under a memory condition.
    double predict_ms(const OperatorNode& op, double avail_mem_mb) const {
        if (operator_macs_is_zero(op.kind)) return device_.fixed_overhead_ms;
        const auto it = models_.find(op.kind);
        if (it == models_.end())
            raise(ErrorCode::UnsupportedOperator,
                  std::string("predictor has no model for kind ") + to_string(op.kind));
        return kind_predict(it->second, op, avail_mem_mb);
    }

    // Forest estimate alone: the ample-memory latency before the
    // memory-pressure correction is applied.
    double predict_base_ms(const OperatorNode& op) const {
        if (operator_macs_is_zero(op.kind)) return device_.fixed_overhead_ms;
        const auto it = models_.find(op.kind);
        if (it == models_.end())
            raise(ErrorCode::UnsupportedOperator,
                  std::string("predictor has no model for kind ") + to_string(op.kind));
        return std::exp(it->second.forest.predict(operator_features(op)));
    }

    const std::map<OperatorKind, KindReport>& reports() const { return reports_; }

    void train(const PredictorConfig& cfg) {
        config_ = cfg;
        for (const auto& [kind, budget] : cfg.samples_per_kind) train_kind(kind, budget, cfg);
    }

    nlohmann::json to_json() const {
        nlohmann::json kinds = nlohmann::json::object();
        for (const auto& [kind, km] : models_) {
            kinds[to_string(kind)] = {{"forest", km.forest.to_json()},
                                      {"bias", km.bias.to_json()},
                                      {"degenerate", km.degenerate},
                                      {"report", report_json(reports_.at(kind))}};
        }
        return {{"schema", "adamec-predictor/1"},
                {"device", adamec::to_json(device_)},
                {"seed", config_.seed},
                {"kinds", std::move(kinds)}};
    }

    static LatencyPredictor from_json(const nlohmann::json& j) {
        LatencyPredictor p(device_from_json(j.at("device")));
        p.config_.seed = j.value("seed", std::uint64_t{0});
        for (const auto& [name, jk] : j.at("kinds").items()) {
            const auto kind = kind_from_string(name);
            KindModel km;
            km.forest = RegressionForest::from_json(jk.at("forest"));
            km.bias = BiasModel::from_json(jk.at("bias"));
            km.degenerate = jk.at("degenerate").get<bool>();
            p.models_[kind] = std::move(km);
            const auto& jr = jk.at("report");
            KindReport r;
            r.train_configs = jr.at("train_configs");
            r.eval_configs = jr.at("eval_configs");
            r.acc10 = jr.at("acc10");
            r.r2 = jr.at("r2");
            r.mae_ms = jr.at("mae_ms");
            r.low_mem_mae_raw = jr.at("low_mem_mae_raw");
            r.low_mem_mae_corrected = jr.at("low_mem_mae_corrected");
            r.low_mem_rows = jr.at("low_mem_rows");
            r.bias_degenerate = jr.at("bias_degenerate");
            p.reports_[kind] = r;
        }
        return p;
    }

    std::uint64_t digest() const { return hash_string(to_json().dump()); }

    void save(const std::string& path) const {
        std::ofstream out(path);
        if (!out) raise(ErrorCode::IoError, "cannot open '" + path + "' for writing");
        out << to_json().dump(2) << "\n";
        if (!out) raise(ErrorCode::IoError, "failed writing '" + path + "'");
    }

    static LatencyPredictor load(const std::string& path) {
        std::ifstream in(path);
        if (!in) raise(ErrorCode::IoError, "cannot open '" + path + "'");
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }

private:
    struct KindModel {
        RegressionForest forest;
        BiasModel bias;
        bool degenerate = false;
    };

    static bool operator_macs_is_zero(OperatorKind kind) {
        return kind == OperatorKind::Add || kind == OperatorKind::Concat ||
               kind == OperatorKind::Identity;
    }

    // Forest carries the scale; the corrector learns the relative residual
    // (truth/prediction - 1), which stays bounded across operator sizes. The
    // correction is applied additively as prediction * ratio and clamped
    // nonnegative: memory pressure only ever inflates latency, so a downward
    // correction would just be fitting noise.
    double kind_predict(const KindModel& km, const OperatorNode& op, double avail_mem_mb) const {
        const double base = std::exp(km.forest.predict(operator_features(op)));
        double out = base;
        if (!km.degenerate) {
            const double ratio = std::clamp(
                km.bias.predict({base, operator_footprint_mb(op), avail_mem_mb}), 0.0, 8.0);
            out = base + base * ratio;
        }
        return std::max(out, 0.0);
    }

    static nlohmann::json report_json(const KindReport& r) {
        return {{"train_configs", r.train_configs},
                {"eval_configs", r.eval_configs},
                {"acc10", r.acc10},
                {"r2", r.r2},
                {"mae_ms", r.mae_ms},
                {"low_mem_mae_raw", r.low_mem_mae_raw},
                {"low_mem_mae_corrected", r.low_mem_mae_corrected},
                {"low_mem_rows", r.low_mem_rows},
                {"bias_degenerate", r.bias_degenerate}};
    }

    void train_kind(OperatorKind kind, int budget, const PredictorConfig& cfg) {
        const auto rows = sample_training_rows(device_, kind, budget, cfg);
        const std::size_t per_config = 1 + cfg.mem_grid.size();
        const int n_configs = budget;

        // config-level split so evaluation configurations are unseen
        std::vector<int> order(static_cast<std::size_t>(n_configs));
        std::iota(order.begin(), order.end(), 0);
        Rng split_rng = derive_rng(cfg.seed, hash_string(std::string("split:") + to_string(kind)));
        split_rng.shuffle(order);
        const int n_eval = std::max(1, static_cast<int>(std::lround(n_configs * cfg.eval_fraction)));
        const int n_train = n_configs - n_eval;
        if (n_train < 2) raise(ErrorCode::InsufficientData, "not enough configurations to split");

        const auto config_rows = [&](int c) {
            return std::pair<std::size_t, std::size_t>{static_cast<std::size_t>(c) * per_config,
                                                       (static_cast<std::size_t>(c) + 1) * per_config};
        };

        KindModel km;
        KindReport report;
        report.train_configs = n_train;
        report.eval_configs = n_eval;

        // forest trains on ample-memory rows of the training configs
        std::vector<FeatureVec> X;
        std::vector<double> y;
        for (int c = 0; c < n_train; ++c) {
            const auto [lo, hi] = config_rows(order[static_cast<std::size_t>(c)]);
            for (auto i = lo; i < hi; ++i)
                if (rows[i].ample) {
                    X.push_back(operator_features(rows[i].op));
                    y.push_back(std::log(std::max(rows[i].latency_ms, 1e-9)));
                }
        }
        km.forest.train(X, y, cfg.forest,
                        hash_combine(cfg.seed, hash_string(std::string("forest:") + to_string(kind))));

        // relative residual rows across all memory conditions of the
        // training configs
        std::vector<std::array<double, BiasModel::kInputs>> bx;
        std::vector<double> by;
        std::vector<double> rels;
        for (int c = 0; c < n_train; ++c) {
            const auto [lo, hi] = config_rows(order[static_cast<std::size_t>(c)]);
            for (auto i = lo; i < hi; ++i) {
                const double pred = std::exp(km.forest.predict(operator_features(rows[i].op)));
                bx.push_back({pred, operator_footprint_mb(rows[i].op), rows[i].avail_mem_mb});
                by.push_back(rows[i].latency_ms / std::max(pred, 1e-9) - 1.0);
                rels.push_back(std::abs(by.back()));
            }
        }
        std::sort(rels.begin(), rels.end());
        const double worst_rel = rels[static_cast<std::size_t>(0.99 * (rels.size() - 1))];
        if (worst_rel < cfg.degenerate_rel_residual) {
            km.degenerate = true; // residuals are noise; a corrector would only overfit
        } else {
            km.bias.train(bx, by, cfg.bias_hidden, cfg.bias_epochs, cfg.bias_lr,
                          hash_combine(cfg.seed,
                                       hash_string(std::string("bias:") + to_string(kind))));
        }
        report.bias_degenerate = km.degenerate;

        // held-out metrics
        std::vector<double> truth, pred, lm_truth, lm_raw, lm_cor;
        for (int c = n_train; c < n_configs; ++c) {
            const auto [lo, hi] = config_rows(order[static_cast<std::size_t>(c)]);
            for (auto i = lo; i < hi; ++i) {
                const auto& row = rows[i];
                const double raw = std::exp(km.forest.predict(operator_features(row.op)));
                if (row.ample) {
                    truth.push_back(row.latency_ms);
                    pred.push_back(raw);
                } else if (row.avail_mem_mb < memory_threshold_mb(device_, row.op)) {
                    lm_truth.push_back(row.latency_ms);
                    lm_raw.push_back(raw);
                    lm_cor.push_back(kind_predict(km, row.op, row.avail_mem_mb));
                }
            }
        }
        report.acc10 = accuracy_within(truth, pred, 0.10);
        report.r2 = r_squared(truth, pred);
        report.mae_ms = mean_abs_error(truth, pred);
        report.low_mem_rows = static_cast<int>(lm_truth.size());
        if (!lm_truth.empty()) {
            report.low_mem_mae_raw = mean_abs_error(lm_truth, lm_raw);
            report.low_mem_mae_corrected = mean_abs_error(lm_truth, lm_cor);
        }

        models_[kind] = std::move(km);
        reports_[kind] = report;
    }

    DeviceProfile device_;
    PredictorConfig config_;
    std::map<OperatorKind, KindModel> models_;
    std::map<OperatorKind, KindReport> reports_;
};

inline LatencyPredictor train_predictor(const DeviceProfile& device,
                                        const PredictorConfig& cfg = {}) {
    LatencyPredictor p(device);
    p.train(cfg);
    return p;
}

} // namespace adamec
