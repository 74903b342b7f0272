#pragma once

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hypermot/bbox.hpp"
#include "hypermot/data_io.hpp"
#include "hypermot/estimator.hpp"
#include "hypermot/param.hpp"

namespace hypermot {

// One training sample: an N x L x 4 input window and the window shifted by
// one frame, over objects co-visible in all L+1 underlying frames.
struct WindowSample {
    std::vector<long> ids;
    std::vector<TrajectoryWindow> input;  // N windows of L boxes
    Frames target;                        // L frames of N x 4
};

inline std::vector<WindowSample> build_windows(
    const std::vector<std::vector<std::pair<long, BBox>>>& gt, int window_len) {
    const int L = window_len;
    const int frames = static_cast<int>(gt.size());
    std::vector<WindowSample> samples;
    for (int start = 0; start + L < frames; ++start) {
        // ids present in all L+1 frames of the span
        std::vector<long> ids;
        for (const auto& [id, box] : gt[start]) {
            bool everywhere = true;
            for (int f = start + 1; f <= start + L && everywhere; ++f) {
                everywhere = std::any_of(gt[f].begin(), gt[f].end(),
                                         [&](const auto& e) { return e.first == id; });
            }
            if (everywhere) ids.push_back(id);
        }
        if (ids.empty()) continue;
        WindowSample s;
        s.ids = ids;
        s.input.resize(ids.size());
        s.target.assign(L, Eigen::MatrixXd(static_cast<Eigen::Index>(ids.size()), 4));
        auto box_of = [&](int f, long id) -> const BBox& {
            for (const auto& e : gt[f]) {
                if (e.first == id) return e.second;
            }
            throw std::logic_error("build_windows: id vanished");
        };
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (int t = 0; t < L; ++t) {
                s.input[i].boxes.push_back(box_of(start + t, ids[i]));
                s.input[i].frame_ids.push_back(start + t);
                s.target[t].row(static_cast<Eigen::Index>(i)) =
                    box_of(start + t + 1, ids[i]).vec().transpose();
            }
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

// Eq-style window loss: lambda1 * mean smooth-L1 over all N*L*4 entries
// plus lambda2 * mean (1 - GIoU) over the N*L box pairs. When d_pred is
// non-null the gradient wrt the prediction is written into it.
inline double window_loss(const Frames& pred, const Frames& target, double lambda1,
                          double lambda2, Frames* d_pred = nullptr) {
    if (pred.size() != target.size()) throw std::invalid_argument("window_loss: frame mismatch");
    const int L = static_cast<int>(pred.size());
    const Eigen::Index n = pred.front().rows();
    if (d_pred) d_pred->assign(L, Eigen::MatrixXd::Zero(n, 4));
    const double inv_l1 = 1.0 / (static_cast<double>(n) * L * 4);
    const double inv_giou = 1.0 / (static_cast<double>(n) * L);
    double total = 0.0;
    for (int t = 0; t < L; ++t) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (int c = 0; c < 4; ++c) {
                total += lambda1 * inv_l1 * smooth_l1(pred[t](i, c), target[t](i, c));
                if (d_pred) {
                    (*d_pred)[t](i, c) +=
                        lambda1 * inv_l1 * smooth_l1_grad(pred[t](i, c), target[t](i, c));
                }
            }
            if (lambda2 > 0.0) {
                Eigen::Vector4d pv = pred[t].row(i).transpose();
                // degenerate widths clamp to a floor with zero gradient below it
                const bool wc = pv[2] < 1e-6, hc = pv[3] < 1e-6;
                pv[2] = std::max(pv[2], 1e-6);
                pv[3] = std::max(pv[3], 1e-6);
                const BBox pb = BBox::from_vec(pv);
                const BBox tb = BBox::from_vec(target[t].row(i).transpose());
                const auto [g, grad] = giou_with_grad(pb, tb);
                total += lambda2 * inv_giou * (1.0 - g);
                if (d_pred) {
                    Eigen::Vector4d gg = -lambda2 * inv_giou * grad;
                    if (wc) gg[2] = 0;
                    if (hc) gg[3] = 0;
                    (*d_pred)[t].row(i) += gg.transpose();
                }
            }
        }
    }
    return total;
}

struct TrainReport {
    std::vector<double> epoch_loss;  // mean loss per epoch
};

// Seeded mini-batch training of the estimator: forward, window loss,
// hand-wired backward, Adam. Aborts on non-finite loss.
inline TrainReport train(const std::vector<WindowSample>& samples, EstimatorModel& model,
                         const Config& cfg, Rng rng) {
    if (samples.empty()) throw std::invalid_argument("train: no window samples");
    TrainReport report;
    const std::vector<Param*> params = model.params();
    AdamConfig adam;
    adam.lr = cfg.lr;
    long step = 0;
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = rng.split("shuffle");
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng.engine());
        double epoch_total = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t batch_end = std::min(pos + static_cast<std::size_t>(cfg.batch),
                                                   order.size());
            const double inv_batch = 1.0 / static_cast<double>(batch_end - pos);
            for (; pos < batch_end; ++pos) {
                const WindowSample& s = samples[order[pos]];
                EstimateCache cache;
                const Frames pred = estimate(s.input, model, &cache);
                Frames d_pred;
                const double loss =
                    window_loss(pred, s.target, cfg.lambda1, cfg.lambda2, &d_pred);
                if (!std::isfinite(loss)) {
                    throw std::runtime_error("train: non-finite loss at epoch " +
                                             std::to_string(epoch));
                }
                epoch_total += loss;
                for (auto& f : d_pred) f *= inv_batch;
                estimate_backward(d_pred, cache, model);
            }
            adam_step(params, adam, step);
        }
        report.epoch_loss.push_back(epoch_total / static_cast<double>(samples.size()));
    }
    return report;
}

}  // namespace hypermot
