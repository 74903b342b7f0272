#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "hypermot/bbox.hpp"
#include "hypermot/hypergraph.hpp"
#include "hypermot/motion_features.hpp"
#include "hypermot/param.hpp"

namespace hypermot {

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct ModelConfig {
    int window_len = 5;
    int embed_dim = 32;
    int state_dim = 32;
    int layers = 8;
    double theta = 0.8;
    double alpha = 0.5;
    bool use_hconv = true;  // false = plain-SSM ablation (singleton graph, frozen zero Theta)
};

// Diagonal continuous SSM parameters. A is kept negative via
// A = -softplus(a_raw) and the step size positive via delta = softplus(d_raw),
// so |exp(delta * A)| < 1 and the recurrence is contractive.
struct SSMParams {
    Param a_raw;  // d_h x 1
    Param d_raw;  // d_h x 1
    Param b;      // d_h x d
    Param c;      // d x d_h

    SSMParams() = default;
    SSMParams(const std::string& prefix, int d, int d_h)
        : a_raw(prefix + ".a_raw", d_h, 1),
          d_raw(prefix + ".d_raw", d_h, 1),
          b(prefix + ".b", d_h, d),
          c(prefix + ".c", d, d_h) {}

    Eigen::VectorXd a() const {
        return -a_raw.value.col(0).unaryExpr([](double x) { return softplus(x); });
    }
    Eigen::VectorXd delta() const {
        return d_raw.value.col(0).unaryExpr([](double x) { return softplus(x); });
    }
};

struct Discretized {
    Eigen::VectorXd a_bar;  // d_h, per-channel exp(delta * A)
    Eigen::MatrixXd b_bar;  // d_h x d, rows scaled by delta
};

// A_bar = exp(delta ⊙ A) per channel; B_bar = delta ⊙ B per channel row.
inline Discretized discretize(const SSMParams& ssm) {
    Discretized d;
    const Eigen::VectorXd a = ssm.a();
    const Eigen::VectorXd dt = ssm.delta();
    d.a_bar = (dt.array() * a.array()).exp();
    d.b_bar = dt.asDiagonal() * ssm.b.value;
    return d;
}

struct HyperSSMLayer {
    SSMParams ssm;
    Param theta_in;       // d x d, state-transition HConv
    Param theta_out;      // d x d, output HConv
    Param guidance_proj;  // d x d, applied to trajectory embeddings

    HyperSSMLayer() = default;
    HyperSSMLayer(const std::string& prefix, int d, int d_h)
        : ssm(prefix + ".ssm", d, d_h),
          theta_in(prefix + ".theta_in", d, d),
          theta_out(prefix + ".theta_out", d, d),
          guidance_proj(prefix + ".guidance", d, d) {}
};

// Frame-major window features: frames[t] is N x dim.
using Frames = std::vector<Eigen::MatrixXd>;

struct BlockCache {
    Frames input;                 // layer input X_t after guidance
    std::vector<Eigen::MatrixXd> hidden;  // h_0..h_L, each N x d_h
    Frames gathered;              // hconv_in(X_t), kept for the B_bar gradient
    Discretized disc;
};

// One HyperSSM block over an L-frame window:
//   h_t = A_bar h_{t-1} + B_bar * HConv_in(X_t)
//   Y_t = X_t + C h_t + HConv_out(X_t)
inline Frames hyperssm_block(const Frames& x, const Eigen::MatrixXd& mixing,
                             const HyperSSMLayer& layer, const Eigen::MatrixXd& h0,
                             Eigen::MatrixXd* h_final, BlockCache* cache = nullptr) {
    const Discretized disc = discretize(layer.ssm);
    const Eigen::Index n = x.front().rows();
    if (h0.rows() != n || h0.cols() != layer.ssm.b.value.rows()) {
        throw std::invalid_argument("hyperssm_block: h0 shape mismatch");
    }
    Frames y(x.size());
    Eigen::MatrixXd h = h0;
    if (cache) {
        cache->input = x;
        cache->hidden.assign(1, h0);
        cache->gathered.resize(x.size());
        cache->disc = disc;
    }
    for (std::size_t t = 0; t < x.size(); ++t) {
        const Eigen::MatrixXd u = hconv(x[t], mixing, layer.theta_in.value);
        h = h * disc.a_bar.asDiagonal() + u * disc.b_bar.transpose();
        y[t] = x[t] + hconv(x[t], mixing, layer.theta_out.value) +
               h * layer.ssm.c.value.transpose();
        if (cache) {
            cache->hidden.push_back(h);
            cache->gathered[t] = u;
        }
    }
    if (h_final) *h_final = h;
    return y;
}

// Backward through one block. d_y is consumed per frame; d_h_final is the
// gradient flowing into this block's final hidden state from the next
// layer. Returns gradients wrt the block input frames; d_h0 receives the
// gradient wrt the initial hidden state.
inline Frames hyperssm_block_backward(const Frames& d_y, const Eigen::MatrixXd& d_h_final,
                                      const Eigen::MatrixXd& mixing, HyperSSMLayer& layer,
                                      const BlockCache& cache, Eigen::MatrixXd* d_h0) {
    const std::size_t steps = d_y.size();
    const Discretized& disc = cache.disc;
    Frames d_x(steps);
    Eigen::MatrixXd d_b_bar = Eigen::MatrixXd::Zero(disc.b_bar.rows(), disc.b_bar.cols());
    Eigen::VectorXd d_a_bar = Eigen::VectorXd::Zero(disc.a_bar.size());
    Eigen::MatrixXd carry = d_h_final;

    for (std::size_t t = steps; t-- > 0;) {
        d_x[t] = d_y[t];  // the explicit X_t residual
        // Y_t = X_t + hconv_out(X_t) + h_t C^T
        layer.ssm.c.grad += d_y[t].transpose() * cache.hidden[t + 1];
        Eigen::MatrixXd d_h = d_y[t] * layer.ssm.c.value + carry;
        hconv_backward(d_y[t], cache.input[t], mixing, layer.theta_out.value, d_x[t],
                       layer.theta_out.grad);
        // h_t = h_{t-1} A_bar + U_t B_bar^T
        d_a_bar += (d_h.cwiseProduct(cache.hidden[t])).colwise().sum().transpose();
        d_b_bar += d_h.transpose() * cache.gathered[t];
        carry = d_h * disc.a_bar.asDiagonal();
        const Eigen::MatrixXd d_u = d_h * disc.b_bar;
        hconv_backward(d_u, cache.input[t], mixing, layer.theta_in.value, d_x[t],
                       layer.theta_in.grad);
    }
    if (d_h0) *d_h0 = carry;

    // Chain back through the discretization and the softplus constraints.
    const Eigen::VectorXd a = layer.ssm.a();
    const Eigen::VectorXd dt = layer.ssm.delta();
    const Eigen::VectorXd d_a = d_a_bar.array() * disc.a_bar.array() * dt.array();
    Eigen::VectorXd d_dt = d_a_bar.array() * disc.a_bar.array() * a.array();
    d_dt += (d_b_bar.cwiseProduct(layer.ssm.b.value)).rowwise().sum();
    layer.ssm.b.grad += dt.asDiagonal() * d_b_bar;
    for (Eigen::Index i = 0; i < d_a.size(); ++i) {
        layer.ssm.a_raw.grad(i, 0) += d_a[i] * (-sigmoid(layer.ssm.a_raw.value(i, 0)));
        layer.ssm.d_raw.grad(i, 0) += d_dt[i] * sigmoid(layer.ssm.d_raw.value(i, 0));
    }
    return d_x;
}

// The full motion estimator: trajectory embedding, window-level hypergraph,
// K cascaded HyperSSM layers with additive embedding guidance and hidden-
// state handoff, and an FFN head emitting per-frame box deltas on the
// one-frame-shifted window.
struct EstimatorModel {
    ModelConfig cfg;
    EmbedderParams embedder;
    Param lift_w;  // d x 4
    Param lift_b;  // d x 1
    std::vector<HyperSSMLayer> layers;
    Param head_w1;   // d x d
    Param head_b1;   // d x 1
    Param head_pos;  // L x d, frame-position bias: the delta for the final
                     // (newly predicted) frame differs from the in-window
                     // ones, so the head gets to know where in the window
                     // it is
    Param head_w2;   // 4 x d
    Param head_b2;   // 4 x 1

    EstimatorModel() = default;
    explicit EstimatorModel(const ModelConfig& config)
        : cfg(config),
          embedder(config.window_len, config.embed_dim),
          lift_w("lift.w", config.embed_dim, 4),
          lift_b("lift.b", config.embed_dim, 1),
          head_w1("head.w1", config.embed_dim, config.embed_dim),
          head_b1("head.b1", config.embed_dim, 1),
          head_pos("head.pos", config.window_len, config.embed_dim),
          head_w2("head.w2", 4, config.embed_dim),
          head_b2("head.b2", 4, 1) {
        if (config.layers < 1) throw std::invalid_argument("EstimatorModel: layers must be >= 1");
        layers.reserve(config.layers);
        for (int k = 0; k < config.layers; ++k) {
            layers.emplace_back("layer" + std::to_string(k), config.embed_dim, config.state_dim);
        }
    }

    void init(Rng& rng) {
        embedder.init(rng);
        const double d = cfg.embed_dim, dh = cfg.state_dim;
        lift_w.init_uniform(rng, 0.5);
        for (auto& layer : layers) {
            // a_raw spaced log-uniformly in [0.5, 4]; delta starts near 0.1
            const Eigen::Index n = layer.ssm.a_raw.value.rows();
            for (Eigen::Index i = 0; i < n; ++i) {
                const double f = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
                layer.ssm.a_raw.value(i, 0) = std::exp(std::log(0.5) + f * std::log(8.0));
                layer.ssm.d_raw.value(i, 0) = std::log(std::expm1(0.1));
            }
            layer.ssm.b.init_uniform(rng, 1.0 / std::sqrt(d));
            layer.ssm.c.init_uniform(rng, 1.0 / std::sqrt(dh));
            layer.guidance_proj.init_uniform(rng, 1.0 / std::sqrt(d));
            // theta_in/theta_out stay zero so training starts from the
            // plain-SSM reduction and learns the collaborative term.
        }
        head_w1.init_uniform(rng, 1.0 / std::sqrt(d));
        head_w2.init_uniform(rng, 1.0 / std::sqrt(d));
    }

    // Trainable parameters; HConv weights are excluded (frozen at zero)
    // when the plain-SSM ablation is selected.
    std::vector<Param*> params() {
        std::vector<Param*> out = embedder.params();
        out.push_back(&lift_w);
        out.push_back(&lift_b);
        for (auto& layer : layers) {
            out.push_back(&layer.ssm.a_raw);
            out.push_back(&layer.ssm.d_raw);
            out.push_back(&layer.ssm.b);
            out.push_back(&layer.ssm.c);
            if (cfg.use_hconv) {
                out.push_back(&layer.theta_in);
                out.push_back(&layer.theta_out);
            }
            out.push_back(&layer.guidance_proj);
        }
        out.push_back(&head_w1);
        out.push_back(&head_b1);
        out.push_back(&head_pos);
        out.push_back(&head_w2);
        out.push_back(&head_b2);
        return out;
    }
};

struct EstimateCache {
    Eigen::Index n = 0;
    Frames positions;                   // input window, frames of N x 4
    std::vector<EmbedCache> embed;      // per object
    Eigen::MatrixXd embeddings;         // N x d
    Eigen::MatrixXd mixing;             // N x N
    std::vector<BlockCache> blocks;     // per layer
    Frames final_y;                     // last layer output
    Frames head_z1;                     // head hidden pre-activations, N x d
};

// Pads a short history to exactly L frames by repeating the oldest box.
inline TrajectoryWindow pad_window(const TrajectoryWindow& w, int target_len) {
    if (w.boxes.empty()) throw std::invalid_argument("pad_window: empty window");
    if (static_cast<int>(w.boxes.size()) >= target_len) {
        TrajectoryWindow out;
        const std::size_t start = w.boxes.size() - target_len;
        out.boxes.assign(w.boxes.begin() + start, w.boxes.end());
        out.frame_ids.assign(w.frame_ids.begin() + start, w.frame_ids.end());
        return out;
    }
    TrajectoryWindow out;
    const int missing = target_len - static_cast<int>(w.boxes.size());
    for (int i = 0; i < missing; ++i) {
        out.boxes.push_back(w.boxes.front());
        out.frame_ids.push_back(w.frame_ids.front() - (missing - i));
    }
    out.boxes.insert(out.boxes.end(), w.boxes.begin(), w.boxes.end());
    out.frame_ids.insert(out.frame_ids.end(), w.frame_ids.begin(), w.frame_ids.end());
    return out;
}

// Maps an N x L x 4 window to the window shifted by one frame. Output
// frame t equals input frame t+1 plus a learned delta; the final output
// frame is the newly predicted one.
inline Frames estimate(const std::vector<TrajectoryWindow>& windows, const EstimatorModel& model,
                       EstimateCache* cache = nullptr) {
    const int L = model.cfg.window_len;
    const int d = model.cfg.embed_dim;
    const int dh = model.cfg.state_dim;
    const Eigen::Index n = static_cast<Eigen::Index>(windows.size());
    if (n == 0) return {};
    for (const auto& w : windows) {
        if (static_cast<int>(w.length()) != L) {
            throw std::invalid_argument("estimate: every window must have exactly L frames");
        }
    }

    Frames pos(L, Eigen::MatrixXd(n, 4));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int t = 0; t < L; ++t) pos[t].row(i) = windows[i].boxes[t].vec().transpose();
    }

    // Motion features: embed each window; the hypergraph is built once per
    // window from these features and reused for every frame in it.
    Eigen::MatrixXd emb(n, d);
    std::vector<EmbedCache> embed_caches(cache ? n : 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        EmbedCache* ec = cache ? &embed_caches[i] : nullptr;
        emb.row(i) =
            embed_trajectory(windows[i], model.embedder, model.cfg.alpha, ec).transpose();
    }
    const Hypergraph graph = model.cfg.use_hconv
                                 ? build_hypergraph(emb, model.cfg.theta)
                                 : singleton_hypergraph(n);
    const Eigen::MatrixXd mixing = graph.mixing();

    // Lift positions to d dims.
    Frames x(L);
    for (int t = 0; t < L; ++t) {
        x[t] = pos[t] * model.lift_w.value.transpose();
        x[t].rowwise() += model.lift_b.value.col(0).transpose();
    }

    if (cache) {
        cache->n = n;
        cache->positions = pos;
        cache->embed = std::move(embed_caches);
        cache->embeddings = emb;
        cache->mixing = mixing;
        cache->blocks.assign(model.layers.size(), BlockCache{});
    }

    // Cascaded layers: projected trajectory embeddings are added to every
    // layer's input; the final hidden state of layer k seeds layer k+1.
    Eigen::MatrixXd h0 = Eigen::MatrixXd::Zero(n, dh);
    Frames y = std::move(x);
    for (std::size_t k = 0; k < model.layers.size(); ++k) {
        const Eigen::MatrixXd guide = emb * model.layers[k].guidance_proj.value.transpose();
        for (int t = 0; t < L; ++t) y[t] += guide;
        Eigen::MatrixXd h_final;
        y = hyperssm_block(y, mixing, model.layers[k], h0, &h_final,
                           cache ? &cache->blocks[k] : nullptr);
        h0 = std::move(h_final);
    }
    if (cache) cache->final_y = y;

    // FFN head: per-frame deltas on the shifted window.
    Frames out(L, Eigen::MatrixXd(n, 4));
    if (cache) cache->head_z1.assign(L, Eigen::MatrixXd(n, d));
    for (int t = 0; t < L; ++t) {
        Eigen::MatrixXd z1 = y[t] * model.head_w1.value.transpose();
        z1.rowwise() += model.head_b1.value.col(0).transpose();
        z1.rowwise() += model.head_pos.value.row(t);
        Eigen::MatrixXd a1 = z1.unaryExpr([](double v) { return silu(v); });
        Eigen::MatrixXd delta = a1 * model.head_w2.value.transpose();
        delta.rowwise() += model.head_b2.value.col(0).transpose();
        const Eigen::MatrixXd& base = t + 1 < L ? pos[t + 1] : pos[L - 1];
        out[t] = base + delta;
        if (cache) cache->head_z1[t] = std::move(z1);
    }
    return out;
}

// Accumulates parameter gradients for one estimate() call given the
// gradient of the loss wrt each output frame.
inline void estimate_backward(const Frames& d_out, const EstimateCache& cache,
                              EstimatorModel& model) {
    const int L = model.cfg.window_len;
    const Eigen::Index n = cache.n;
    const int d = model.cfg.embed_dim;

    // Head backward.
    Frames d_y(L, Eigen::MatrixXd::Zero(n, d));
    for (int t = 0; t < L; ++t) {
        const Eigen::MatrixXd& z1 = cache.head_z1[t];
        const Eigen::MatrixXd a1 = z1.unaryExpr([](double v) { return silu(v); });
        model.head_w2.grad += d_out[t].transpose() * a1;
        model.head_b2.grad.col(0) += d_out[t].colwise().sum().transpose();
        Eigen::MatrixXd d_a1 = d_out[t] * model.head_w2.value;
        const Eigen::MatrixXd d_z1 =
            d_a1.cwiseProduct(z1.unaryExpr([](double v) { return silu_grad(v); }));
        model.head_w1.grad += d_z1.transpose() * cache.final_y[t];
        model.head_b1.grad.col(0) += d_z1.colwise().sum().transpose();
        model.head_pos.grad.row(t) += d_z1.colwise().sum();
        d_y[t] = d_z1 * model.head_w1.value;
    }

    // Layers, last to first; d_h threads the hidden-state handoff.
    Eigen::MatrixXd d_emb = Eigen::MatrixXd::Zero(n, d);
    Eigen::MatrixXd d_h = Eigen::MatrixXd::Zero(n, model.cfg.state_dim);
    for (std::size_t k = model.layers.size(); k-- > 0;) {
        Eigen::MatrixXd d_h0;
        Frames d_in = hyperssm_block_backward(d_y, d_h, cache.mixing, model.layers[k],
                                              cache.blocks[k], &d_h0);
        d_h = std::move(d_h0);
        Eigen::MatrixXd d_guide = Eigen::MatrixXd::Zero(n, d);
        for (int t = 0; t < L; ++t) d_guide += d_in[t];
        model.layers[k].guidance_proj.grad += d_guide.transpose() * cache.embeddings;
        d_emb += d_guide * model.layers[k].guidance_proj.value;
        d_y = std::move(d_in);
    }

    // Lift backward (d_y now holds gradients wrt the lifted positions).
    for (int t = 0; t < L; ++t) {
        model.lift_w.grad += d_y[t].transpose() * cache.positions[t];
        model.lift_b.grad.col(0) += d_y[t].colwise().sum().transpose();
    }

    // Embedder backward per object. The hypergraph itself is a discrete
    // structure and is treated as constant.
    for (Eigen::Index i = 0; i < n; ++i) {
        embed_trajectory_backward(d_emb.row(i).transpose(), cache.embed[i], model.embedder);
    }
}

// The last frame of the shifted window: the predicted next-frame box.
// Width/height are clamped to stay positive.
inline BBox predict_next_from(const Eigen::MatrixXd& last_frame, Eigen::Index row) {
    Eigen::Vector4d v = last_frame.row(row).transpose();
    v[2] = std::max(v[2], 1e-6);
    v[3] = std::max(v[3], 1e-6);
    return BBox::from_vec(v);
}

inline BBox predict_next(const TrajectoryWindow& window, const EstimatorModel& model) {
    const TrajectoryWindow padded = pad_window(window, model.cfg.window_len);
    const Frames out = estimate({padded}, model);
    return predict_next_from(out.back(), 0);
}

}  // namespace hypermot
