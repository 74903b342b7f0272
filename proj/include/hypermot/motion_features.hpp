#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "hypermot/bbox.hpp"
#include "hypermot/param.hpp"

namespace hypermot {

// L ordered boxes (oldest first) with strictly increasing frame ids.
struct TrajectoryWindow {
    std::vector<BBox> boxes;
    std::vector<long> frame_ids;

    std::size_t length() const { return boxes.size(); }
};

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }

inline double silu_grad(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

// v_t = p_t - p_{t-1} componentwise on (cx, cy, w, h), t = 2..L.
inline std::vector<Eigen::Vector4d> velocity_sequence(const TrajectoryWindow& w) {
    if (w.boxes.size() < 2) {
        throw std::invalid_argument("velocity_sequence: window needs at least 2 frames");
    }
    std::vector<Eigen::Vector4d> v;
    v.reserve(w.boxes.size() - 1);
    for (std::size_t t = 1; t < w.boxes.size(); ++t) {
        v.push_back(w.boxes[t].vec() - w.boxes[t - 1].vec());
    }
    return v;
}

// EMA-smoothed velocity. Raw weight on v_t is alpha*(1-alpha)^(L-t); the
// weights are normalized to total 1 so constant velocity is a fixed point.
inline Eigen::Vector4d ema_velocity(const std::vector<Eigen::Vector4d>& v, double alpha) {
    if (v.empty()) throw std::invalid_argument("ema_velocity: empty velocity list");
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw std::invalid_argument("ema_velocity: alpha must be in (0, 1]");
    }
    Eigen::Vector4d acc = Eigen::Vector4d::Zero();
    double wsum = 0.0;
    // newest velocity gets weight alpha, each step back multiplies by (1-alpha)
    double weight = alpha;
    for (std::size_t k = v.size(); k-- > 0;) {
        acc += weight * v[k];
        wsum += weight;
        weight *= (1.0 - alpha);
    }
    return acc / wsum;
}

// Two-layer perceptron mapping [ema velocity ; per-frame positions ;
// per-frame velocities] to a d-dimensional motion feature.
struct EmbedderParams {
    Param w1, b1, w2, b2;
    int window_len = 5;
    int dim = 32;

    EmbedderParams() = default;
    EmbedderParams(int L, int d)
        : w1("embed.w1", d, input_size(L)),
          b1("embed.b1", d, 1),
          w2("embed.w2", d, d),
          b2("embed.b2", d, 1),
          window_len(L),
          dim(d) {}

    static int input_size(int L) { return 4 + 4 * L + 4 * (L - 1); }

    void init(Rng& rng) {
        w1.init_uniform(rng, 1.0 / std::sqrt(static_cast<double>(input_size(window_len))));
        w2.init_uniform(rng, 1.0 / std::sqrt(static_cast<double>(dim)));
    }

    std::vector<Param*> params() { return {&w1, &b1, &w2, &b2}; }
};

struct EmbedCache {
    Eigen::VectorXd input;  // assembled feature vector
    Eigen::VectorXd z1;     // pre-activation of the hidden layer
};

inline Eigen::VectorXd assemble_embed_input(const TrajectoryWindow& w, double alpha) {
    const int L = static_cast<int>(w.length());
    Eigen::VectorXd u(EmbedderParams::input_size(L));
    const auto v = velocity_sequence(w);
    u.segment<4>(0) = ema_velocity(v, alpha);
    for (int t = 0; t < L; ++t) u.segment<4>(4 + 4 * t) = w.boxes[t].vec();
    for (int t = 0; t < L - 1; ++t) u.segment<4>(4 + 4 * L + 4 * t) = v[t];
    if (!u.allFinite()) throw std::invalid_argument("embed_trajectory: non-finite input");
    return u;
}

inline Eigen::VectorXd embed_trajectory(const TrajectoryWindow& w, const EmbedderParams& p,
                                        double alpha, EmbedCache* cache = nullptr) {
    if (static_cast<int>(w.length()) != p.window_len) {
        throw std::invalid_argument("embed_trajectory: window length mismatch");
    }
    const Eigen::VectorXd u = assemble_embed_input(w, alpha);
    const Eigen::VectorXd z1 = p.w1.value * u + p.b1.value.col(0);
    Eigen::VectorXd a1(z1.size());
    for (Eigen::Index i = 0; i < z1.size(); ++i) a1[i] = silu(z1[i]);
    if (cache) {
        cache->input = u;
        cache->z1 = z1;
    }
    return p.w2.value * a1 + p.b2.value.col(0);
}

// Accumulates parameter gradients for one embedded trajectory.
inline void embed_trajectory_backward(const Eigen::VectorXd& d_out, const EmbedCache& cache,
                                      EmbedderParams& p) {
    Eigen::VectorXd a1(cache.z1.size()), da1dz(cache.z1.size());
    for (Eigen::Index i = 0; i < cache.z1.size(); ++i) {
        a1[i] = silu(cache.z1[i]);
        da1dz[i] = silu_grad(cache.z1[i]);
    }
    p.w2.grad += d_out * a1.transpose();
    p.b2.grad.col(0) += d_out;
    const Eigen::VectorXd dz1 = (p.w2.value.transpose() * d_out).cwiseProduct(da1dz);
    p.w1.grad += dz1 * cache.input.transpose();
    p.b1.grad.col(0) += dz1;
}

}  // namespace hypermot
