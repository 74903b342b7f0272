#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "hypermot/bbox.hpp"

namespace hypermot {

// Constant-velocity Kalman filter on (cx, cy, w, h) with unit frame step.
// Noise standard deviations scale with box height, the usual convention
// for box-space filters; constants live in KFConfig.
struct KFConfig {
    // The initial velocity variance is huge (velocity is unobserved at
    // init) so a fresh track locks onto a constant-velocity target within
    // a handful of updates.
    double std_pos = 1.0 / 20.0;   // position / size noise, times h
    double std_vel = 1.0 / 160.0;  // velocity noise, times h
    double init_pos_factor = 2.0;
    double init_vel_factor = 1000.0;
};

struct KFState {
    Eigen::Matrix<double, 8, 1> mean;  // cx, cy, w, h, v_cx, v_cy, v_w, v_h
    Eigen::Matrix<double, 8, 8> cov;

    BBox box() const {
        return BBox(mean[0], mean[1], std::max(mean[2], 1e-6), std::max(mean[3], 1e-6));
    }
};

inline KFState kf_init(const BBox& b, const KFConfig& cfg = {}) {
    KFState s;
    s.mean << b.cx, b.cy, b.w, b.h, 0, 0, 0, 0;
    Eigen::Matrix<double, 8, 1> std;
    const double p = cfg.init_pos_factor * cfg.std_pos * b.h;
    const double v = cfg.init_vel_factor * cfg.std_vel * b.h;
    std << p, p, p, p, v, v, v, v;
    s.cov = std.cwiseProduct(std).asDiagonal();
    return s;
}

inline KFState kf_predict(const KFState& s, const KFConfig& cfg = {}) {
    Eigen::Matrix<double, 8, 8> f = Eigen::Matrix<double, 8, 8>::Identity();
    for (int i = 0; i < 4; ++i) f(i, i + 4) = 1.0;
    const double h = s.mean[3];
    Eigen::Matrix<double, 8, 1> std;
    const double p = cfg.std_pos * h;
    const double v = cfg.std_vel * h;
    std << p, p, p, p, v, v, v, v;
    KFState out;
    out.mean = f * s.mean;
    out.cov = f * s.cov * f.transpose();
    out.cov += Eigen::Matrix<double, 8, 8>(std.cwiseProduct(std).asDiagonal());
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();  // keep symmetric
    return out;
}

inline KFState kf_update(const KFState& s, const BBox& z, const KFConfig& cfg = {}) {
    Eigen::Matrix<double, 4, 8> h = Eigen::Matrix<double, 4, 8>::Zero();
    h.block<4, 4>(0, 0).setIdentity();
    const double r_std = cfg.std_pos * s.mean[3];
    const Eigen::Matrix4d r = Eigen::Matrix4d::Identity() * (r_std * r_std);
    const Eigen::Matrix4d innovation_cov = h * s.cov * h.transpose() + r;
    Eigen::FullPivLU<Eigen::Matrix4d> lu(innovation_cov);
    if (!lu.isInvertible()) {
        throw std::runtime_error("kf_update: singular innovation covariance");
    }
    const Eigen::Matrix<double, 8, 4> gain = s.cov * h.transpose() * lu.inverse();
    const Eigen::Vector4d innovation = z.vec() - h * s.mean;
    KFState out;
    out.mean = s.mean + gain * innovation;
    out.mean[2] = std::max(out.mean[2], 1e-6);
    out.mean[3] = std::max(out.mean[3], 1e-6);
    const Eigen::Matrix<double, 8, 8> ikh =
        Eigen::Matrix<double, 8, 8>::Identity() - gain * h;
    out.cov = ikh * s.cov;
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    return out;
}

}  // namespace hypermot
