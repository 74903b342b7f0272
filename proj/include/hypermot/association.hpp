#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "hypermot/bbox.hpp"

namespace hypermot {

struct AssociationConfig {
    double tau_high = 0.6;
    double tau_low = 0.1;
    double nms_thresh = 0.7;
    double spatial_weight = 0.2;                  // blend weight on center distance
    std::array<double, 3> stage_gates{0.7, 0.5, 0.7};
};

// The three detection tiers of the multi-stage association.
struct DetectionTiers {
    std::vector<Detection> high_kept;        // score >= tau_high, survived NMS
    std::vector<Detection> low;              // tau_low <= score < tau_high
    std::vector<Detection> high_suppressed;  // score >= tau_high, removed by NMS
};

inline DetectionTiers partition_detections(const std::vector<Detection>& dets, double tau_high,
                                           double tau_low, double nms_thresh) {
    if (!(tau_low >= 0.0 && tau_low < tau_high && tau_high <= 1.0)) {
        throw std::invalid_argument("partition_detections: need 0 <= tau_low < tau_high <= 1");
    }
    DetectionTiers tiers;
    std::vector<BBox> high_boxes;
    std::vector<double> high_scores;
    std::vector<Detection> high;
    for (const auto& d : dets) {
        if (d.score >= tau_high) {
            high.push_back(d);
            high_boxes.push_back(d.box);
            high_scores.push_back(d.score);
        } else if (d.score >= tau_low) {
            tiers.low.push_back(d);
        }
    }
    const NmsResult r = nms(high_boxes, high_scores, nms_thresh);
    for (int i : r.kept) tiers.high_kept.push_back(high[i]);
    for (int i : r.suppressed) tiers.high_suppressed.push_back(high[i]);
    return tiers;
}

// Association cost between a predicted track box and a detection:
// (1 - w_s) * (1 - IoU) plus w_s times the normalized center distance.
inline double association_cost(const BBox& predicted, const BBox& detection,
                               double spatial_weight) {
    const double dx = predicted.cx - detection.cx;
    const double dy = predicted.cy - detection.cy;
    const double dist = std::min(1.0, std::sqrt(dx * dx + dy * dy) / std::sqrt(2.0));
    return (1.0 - spatial_weight) * (1.0 - iou(predicted, detection)) + spatial_weight * dist;
}

struct MatchResult {
    std::vector<std::pair<int, int>> matches;  // (row, col)
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;
};

// Iteratively commits pairs whose cost is simultaneously the minimum of its
// remaining row and column and under the gate; ties broken by smallest cost
// then smallest (row, col). When no mutual minimum exists among the
// remaining admissible entries, the global minimum is committed so the
// iteration always terminates.
inline MatchResult mutual_min_match(const Eigen::MatrixXd& cost, double max_cost) {
    const Eigen::Index rows = cost.rows(), cols = cost.cols();
    std::vector<bool> row_done(rows, false), col_done(cols, false);
    MatchResult result;
    while (true) {
        double best = std::numeric_limits<double>::infinity();
        int best_i = -1, best_j = -1;
        bool best_mutual = false;
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (row_done[i]) continue;
            for (Eigen::Index j = 0; j < cols; ++j) {
                if (col_done[j]) continue;
                const double c = cost(i, j);
                if (c > max_cost) continue;
                bool mutual = true;
                for (Eigen::Index jj = 0; jj < cols && mutual; ++jj) {
                    if (!col_done[jj] && cost(i, jj) < c) mutual = false;
                }
                for (Eigen::Index ii = 0; ii < rows && mutual; ++ii) {
                    if (!row_done[ii] && cost(ii, j) < c) mutual = false;
                }
                const bool better =
                    (mutual && !best_mutual) ||
                    (mutual == best_mutual &&
                     (c < best || (c == best && (static_cast<int>(i) < best_i ||
                                                 (static_cast<int>(i) == best_i &&
                                                  static_cast<int>(j) < best_j)))));
                if (better) {
                    best = c;
                    best_i = static_cast<int>(i);
                    best_j = static_cast<int>(j);
                    best_mutual = mutual;
                }
            }
        }
        if (best_i < 0) break;
        result.matches.emplace_back(best_i, best_j);
        row_done[best_i] = true;
        col_done[best_j] = true;
    }
    for (Eigen::Index i = 0; i < rows; ++i)
        if (!row_done[i]) result.unmatched_rows.push_back(static_cast<int>(i));
    for (Eigen::Index j = 0; j < cols; ++j)
        if (!col_done[j]) result.unmatched_cols.push_back(static_cast<int>(j));
    return result;
}

// Minimum-total-cost assignment (Hungarian algorithm with potentials).
// Assigns min(rows, cols) pairs; returns (row, col) pairs.
inline std::vector<std::pair<int, int>> hungarian(const Eigen::MatrixXd& cost) {
    const bool transposed = cost.rows() > cost.cols();
    const Eigen::MatrixXd a =
        transposed ? Eigen::MatrixXd(cost.transpose()) : cost;
    const int n = static_cast<int>(a.rows()), m = static_cast<int>(a.cols());
    if (n == 0 || m == 0) return {};

    // 1-based potentials formulation; p[j0] tracks the augmenting column.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> assigned_row(m + 1, 0);  // column -> row
    std::vector<int> way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        assigned_row[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const int i0 = assigned_row[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[assigned_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (assigned_row[j0] != 0);
        do {
            const int j1 = way[j0];
            assigned_row[j0] = assigned_row[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<std::pair<int, int>> pairs;
    for (int j = 1; j <= m; ++j) {
        if (assigned_row[j] > 0) {
            const int r = assigned_row[j] - 1, c = j - 1;
            pairs.emplace_back(transposed ? c : r, transposed ? r : c);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

// Per-frame association result across the three stages.
struct AssociationResult {
    // (track index, detection) per stage
    std::vector<std::pair<int, Detection>> stage_matches[3];
    std::vector<int> unmatched_tracks;
    std::vector<Detection> unmatched_high;  // high_kept detections left over
};

// Stage 1: tracks vs high_kept; stage 2: leftovers vs low; stage 3:
// leftovers vs high_suppressed. One detection never matches two tracks.
inline AssociationResult associate(const std::vector<BBox>& predicted,
                                   const DetectionTiers& tiers, const AssociationConfig& cfg) {
    AssociationResult out;
    std::vector<int> remaining(predicted.size());
    for (std::size_t i = 0; i < predicted.size(); ++i) remaining[i] = static_cast<int>(i);

    const std::vector<Detection>* stage_dets[3] = {&tiers.high_kept, &tiers.low,
                                                   &tiers.high_suppressed};
    for (int stage = 0; stage < 3; ++stage) {
        const auto& dets = *stage_dets[stage];
        if (remaining.empty() || dets.empty()) {
            if (stage == 0) out.unmatched_high = dets;
            continue;
        }
        Eigen::MatrixXd cost(remaining.size(), dets.size());
        for (std::size_t r = 0; r < remaining.size(); ++r) {
            for (std::size_t c = 0; c < dets.size(); ++c) {
                cost(r, c) =
                    association_cost(predicted[remaining[r]], dets[c].box, cfg.spatial_weight);
            }
        }
        const MatchResult m = mutual_min_match(cost, cfg.stage_gates[stage]);
        std::vector<int> next_remaining;
        std::vector<bool> row_matched(remaining.size(), false);
        for (const auto& [r, c] : m.matches) {
            out.stage_matches[stage].emplace_back(remaining[r], dets[c]);
            row_matched[r] = true;
        }
        for (std::size_t r = 0; r < remaining.size(); ++r) {
            if (!row_matched[r]) next_remaining.push_back(remaining[r]);
        }
        if (stage == 0) {
            for (int c : m.unmatched_cols) out.unmatched_high.push_back(dets[c]);
        }
        remaining = std::move(next_remaining);
    }
    out.unmatched_tracks = std::move(remaining);
    return out;
}

}  // namespace hypermot
