#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace hypermot {

// Motion-aware hypergraph: one hyperedge per center vertex, membership by
// cosine similarity of motion features. Immutable after construction.
struct Hypergraph {
    Eigen::MatrixXd incidence;      // |V| x |E| binary H, |E| == |V|
    Eigen::VectorXd edge_weights;   // diagonal of W, all 1 by default
    Eigen::VectorXi vertex_degrees; // diagonal of D_v
    Eigen::VectorXi edge_degrees;   // diagonal of D_e

    Eigen::Index size() const { return incidence.rows(); }

    // D_v^{-1} H W D_e^{-1} H^T, the fixed vertex-to-vertex mixing operator
    // of the gather/scatter convolution.
    Eigen::MatrixXd mixing() const {
        const Eigen::Index n = size();
        Eigen::MatrixXd he = incidence;
        for (Eigen::Index e = 0; e < n; ++e) {
            he.col(e) *= edge_weights[e] / static_cast<double>(edge_degrees[e]);
        }
        Eigen::MatrixXd m = he * incidence.transpose();
        for (Eigen::Index v = 0; v < n; ++v) {
            m.row(v) /= static_cast<double>(vertex_degrees[v]);
        }
        return m;
    }
};

inline Hypergraph singleton_hypergraph(Eigen::Index n) {
    Hypergraph g;
    g.incidence = Eigen::MatrixXd::Identity(n, n);
    g.edge_weights = Eigen::VectorXd::Ones(n);
    g.vertex_degrees = Eigen::VectorXi::Ones(n);
    g.edge_degrees = Eigen::VectorXi::Ones(n);
    return g;
}

// Build the hypergraph over N motion features (rows of `features`).
// Vertex u joins hyperedge e_v iff cos(x_u, x_v) >= theta; the center is
// always a member. Zero-norm features match only themselves.
inline Hypergraph build_hypergraph(const Eigen::MatrixXd& features, double theta) {
    const Eigen::Index n = features.rows();
    if (n < 1) throw std::invalid_argument("build_hypergraph: need at least one vertex");
    Hypergraph g;
    g.incidence = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd norms(n);
    for (Eigen::Index i = 0; i < n; ++i) norms[i] = features.row(i).norm();
    for (Eigen::Index v = 0; v < n; ++v) {
        for (Eigen::Index u = v + 1; u < n; ++u) {
            if (norms[u] == 0.0 || norms[v] == 0.0) continue;
            const double cos = features.row(u).dot(features.row(v)) / (norms[u] * norms[v]);
            if (cos >= theta) {
                g.incidence(u, v) = 1.0;
                g.incidence(v, u) = 1.0;
            }
        }
    }
    g.edge_weights = Eigen::VectorXd::Ones(n);
    g.vertex_degrees.resize(n);
    g.edge_degrees.resize(n);
    for (Eigen::Index v = 0; v < n; ++v) {
        g.vertex_degrees[v] = static_cast<int>(g.incidence.row(v).sum() + 0.5);
        g.edge_degrees[v] = static_cast<int>(g.incidence.col(v).sum() + 0.5);
    }
    return g;
}

// Hypergraph convolution with residual: X + M X Theta, where M is the
// gather/scatter mixing operator of `g`.
inline Eigen::MatrixXd hconv(const Eigen::MatrixXd& x, const Eigen::MatrixXd& mixing,
                             const Eigen::MatrixXd& theta) {
    if (x.rows() != mixing.rows() || x.cols() != theta.rows()) {
        throw std::invalid_argument("hconv: dimension mismatch");
    }
    return x + mixing * x * theta;
}

inline Eigen::MatrixXd hconv(const Eigen::MatrixXd& x, const Hypergraph& g,
                             const Eigen::MatrixXd& theta) {
    return hconv(x, g.mixing(), theta);
}

// Gradients of hconv: accumulates into d_x and d_theta.
inline void hconv_backward(const Eigen::MatrixXd& d_out, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& mixing, const Eigen::MatrixXd& theta,
                           Eigen::MatrixXd& d_x, Eigen::MatrixXd& d_theta) {
    d_x += d_out + mixing.transpose() * d_out * theta.transpose();
    d_theta += x.transpose() * mixing.transpose() * d_out;
}

}  // namespace hypermot
