#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hypermot/rng.hpp"

namespace hypermot {

// A trainable matrix with its gradient buffer and Adam moment state.
// Vectors are stored as n x 1 matrices.
struct Param {
    std::string name;
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    Eigen::MatrixXd m1;  // first moment
    Eigen::MatrixXd m2;  // second moment

    Param() = default;
    Param(std::string name_, Eigen::Index rows, Eigen::Index cols)
        : name(std::move(name_)),
          value(Eigen::MatrixXd::Zero(rows, cols)),
          grad(Eigen::MatrixXd::Zero(rows, cols)),
          m1(Eigen::MatrixXd::Zero(rows, cols)),
          m2(Eigen::MatrixXd::Zero(rows, cols)) {}

    void zero_grad() { grad.setZero(); }

    void init_uniform(Rng& rng, double scale) {
        for (Eigen::Index j = 0; j < value.cols(); ++j)
            for (Eigen::Index i = 0; i < value.rows(); ++i)
                value(i, j) = rng.uniform(-scale, scale);
    }
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam step over all parameters; grads are zeroed after use.
// `t` is the step counter, incremented by the call.
inline void adam_step(const std::vector<Param*>& params, const AdamConfig& cfg, long& t) {
    ++t;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    for (Param* p : params) {
        if (!p->grad.allFinite()) {
            throw std::runtime_error("adam_step: non-finite gradient in parameter '" + p->name + "'");
        }
        p->m1 = cfg.beta1 * p->m1 + (1.0 - cfg.beta1) * p->grad;
        p->m2 = cfg.beta2 * p->m2.array().matrix() +
                (1.0 - cfg.beta2) * p->grad.cwiseProduct(p->grad);
        const Eigen::ArrayXXd mhat = p->m1.array() / bc1;
        const Eigen::ArrayXXd vhat = p->m2.array() / bc2;
        p->value.array() -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
        p->grad.setZero();
    }
}

// Compares analytic gradients against central finite differences.
// `loss_with_grad` must zero nothing itself: grads are cleared here, the
// callback evaluates the loss and accumulates analytic gradients.
// `loss_only` evaluates the loss without touching gradients (may be the
// same underlying computation). Returns the worst relative error with
// denominator max(|analytic|, |numeric|, 1e-8).
inline double grad_check(const std::function<double()>& loss_with_grad,
                         const std::function<double()>& loss_only,
                         const std::vector<Param*>& params, double h) {
    for (Param* p : params) p->zero_grad();
    loss_with_grad();
    std::vector<Eigen::MatrixXd> analytic;
    analytic.reserve(params.size());
    for (Param* p : params) analytic.push_back(p->grad);

    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Param* p = params[k];
        for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
            for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
                const double orig = p->value(i, j);
                p->value(i, j) = orig + h;
                const double fp = loss_only();
                p->value(i, j) = orig - h;
                const double fm = loss_only();
                p->value(i, j) = orig;
                const double numeric = (fp - fm) / (2.0 * h);
                const double a = analytic[k](i, j);
                const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
                worst = std::max(worst, std::abs(a - numeric) / denom);
            }
        }
    }
    for (std::size_t k = 0; k < params.size(); ++k) params[k]->grad = analytic[k];
    return worst;
}

// ---- checkpoint archive -------------------------------------------------
//
// Textual key -> shape -> values archive. One header line, then per
// parameter: `name rows cols` followed by row-major hexfloat values.

inline constexpr const char* kCheckpointHeader = "HYPERMOT-CKPT v1";

inline void save_checkpoint(const std::vector<Param*>& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
    out << kCheckpointHeader << "\n" << params.size() << "\n";
    for (const Param* p : params) {
        out << p->name << " " << p->value.rows() << " " << p->value.cols() << "\n";
        char buf[40];
        for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
            for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
                std::snprintf(buf, sizeof(buf), "%a", p->value(i, j));
                out << buf << (j + 1 == p->value.cols() ? "" : " ");
            }
            out << "\n";
        }
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline void load_checkpoint(const std::vector<Param*>& params, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
    std::string header;
    std::getline(in, header);
    if (header != kCheckpointHeader) {
        throw std::runtime_error("load_checkpoint: bad header in " + path);
    }
    std::size_t count = 0;
    in >> count;
    if (count != params.size()) {
        throw std::runtime_error("load_checkpoint: parameter count mismatch in " + path);
    }
    for (Param* p : params) {
        std::string name;
        Eigen::Index rows = 0, cols = 0;
        in >> name >> rows >> cols;
        if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
            throw std::runtime_error("load_checkpoint: mismatch at parameter '" + p->name + "'");
        }
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                std::string tok;
                in >> tok;
                p->value(i, j) = std::strtod(tok.c_str(), nullptr);
            }
        }
    }
    if (!in) throw std::runtime_error("load_checkpoint: truncated archive " + path);
}

}  // namespace hypermot
