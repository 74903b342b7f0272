#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hypermot {

// Axis-aligned box, center-based (cx, cy, w, h) in normalized image units.
// MOT files store top-left pixel coordinates; conversion happens only at
// the I/O boundary.
struct BBox {
    double cx = 0, cy = 0, w = 1, h = 1;

    BBox() = default;
    BBox(double cx_, double cy_, double w_, double h_) : cx(cx_), cy(cy_), w(w_), h(h_) {
        if (!(w > 0) || !(h > 0) || !std::isfinite(cx) || !std::isfinite(cy) ||
            !std::isfinite(w) || !std::isfinite(h)) {
            throw std::invalid_argument("BBox: w,h must be positive and all fields finite");
        }
    }

    double x1() const { return cx - 0.5 * w; }
    double y1() const { return cy - 0.5 * h; }
    double x2() const { return cx + 0.5 * w; }
    double y2() const { return cy + 0.5 * h; }
    double area() const { return w * h; }

    Eigen::Vector4d vec() const { return {cx, cy, w, h}; }
    static BBox from_vec(const Eigen::Vector4d& v) { return BBox(v[0], v[1], v[2], v[3]); }
};

inline double iou(const BBox& a, const BBox& b) {
    const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
    const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
    if (iw <= 0 || ih <= 0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

// Generalized IoU: IoU - (enclosing - union) / enclosing, in [-1, 1].
inline double giou(const BBox& a, const BBox& b) {
    const double iw = std::max(0.0, std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1()));
    const double ih = std::max(0.0, std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1()));
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    const double ew = std::max(a.x2(), b.x2()) - std::min(a.x1(), b.x1());
    const double eh = std::max(a.y2(), b.y2()) - std::min(a.y1(), b.y1());
    const double enc = ew * eh;
    return inter / uni - (enc - uni) / enc;
}

// giou(pred, target) together with d giou / d pred over (cx, cy, w, h).
// Piecewise differentiable; at kinks the left branch is taken.
inline std::pair<double, Eigen::Vector4d> giou_with_grad(const BBox& a, const BBox& b) {
    const double ax1 = a.x1(), ax2 = a.x2(), ay1 = a.y1(), ay2 = a.y2();
    const double bx1 = b.x1(), bx2 = b.x2(), by1 = b.y1(), by2 = b.y2();

    const double iw = std::min(ax2, bx2) - std::max(ax1, bx1);
    const double ih = std::min(ay2, by2) - std::max(ay1, by1);
    const bool overlap = iw > 0 && ih > 0;
    const double inter = overlap ? iw * ih : 0.0;
    const double area_a = a.area();
    const double uni = area_a + b.area() - inter;
    const double ew = std::max(ax2, bx2) - std::min(ax1, bx1);
    const double eh = std::max(ay2, by2) - std::min(ay1, by1);
    const double enc = ew * eh;
    const double value = inter / uni - (enc - uni) / enc;

    // Partials with respect to the corner coordinates of a.
    double dI_x1 = 0, dI_x2 = 0, dI_y1 = 0, dI_y2 = 0;
    if (overlap) {
        if (ax1 > bx1) dI_x1 = -ih;
        if (ax2 < bx2) dI_x2 = ih;
        if (ay1 > by1) dI_y1 = -iw;
        if (ay2 < by2) dI_y2 = iw;
    }
    const double dAa_x1 = -(ay2 - ay1), dAa_x2 = (ay2 - ay1);
    const double dAa_y1 = -(ax2 - ax1), dAa_y2 = (ax2 - ax1);
    const double dU_x1 = dAa_x1 - dI_x1, dU_x2 = dAa_x2 - dI_x2;
    const double dU_y1 = dAa_y1 - dI_y1, dU_y2 = dAa_y2 - dI_y2;
    double dE_x1 = 0, dE_x2 = 0, dE_y1 = 0, dE_y2 = 0;
    if (ax1 < bx1) dE_x1 = -eh;
    if (ax2 > bx2) dE_x2 = eh;
    if (ay1 < by1) dE_y1 = -ew;
    if (ay2 > by2) dE_y2 = ew;

    // giou = I/U - 1 + U/enc
    auto corner = [&](double dI, double dU, double dE) {
        return (dI * uni - inter * dU) / (uni * uni) +
               (dU * enc - uni * dE) / (enc * enc);
    };
    const double gx1 = corner(dI_x1, dU_x1, dE_x1);
    const double gx2 = corner(dI_x2, dU_x2, dE_x2);
    const double gy1 = corner(dI_y1, dU_y1, dE_y1);
    const double gy2 = corner(dI_y2, dU_y2, dE_y2);

    // (cx, cy, w, h) -> corners: x1 = cx - w/2, x2 = cx + w/2, etc.
    Eigen::Vector4d g;
    g[0] = gx1 + gx2;
    g[1] = gy1 + gy2;
    g[2] = 0.5 * (gx2 - gx1);
    g[3] = 0.5 * (gy2 - gy1);
    return {value, g};
}

// Huber-style loss on d = pred - target: 0.5 d^2 inside |d| < 1, |d| - 0.5 outside.
inline double smooth_l1(double pred, double target) {
    const double d = std::abs(pred - target);
    return d < 1.0 ? 0.5 * d * d : d - 0.5;
}

inline double smooth_l1_grad(double pred, double target) {
    const double d = pred - target;
    if (d > 1.0) return 1.0;
    if (d < -1.0) return -1.0;
    return d;
}

// A detector output: box plus confidence score.
struct Detection {
    BBox box;
    double score = 0.0;
};

struct NmsResult {
    std::vector<int> kept;
    std::vector<int> suppressed;
};

// Greedy score-descending suppression; score ties broken by lower index.
inline NmsResult nms(const std::vector<BBox>& boxes, const std::vector<double>& scores,
                     double iou_thresh) {
    if (boxes.size() != scores.size()) {
        throw std::invalid_argument("nms: boxes and scores length mismatch");
    }
    std::vector<int> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return scores[i] > scores[j]; });
    NmsResult r;
    std::vector<bool> removed(boxes.size(), false);
    for (std::size_t k = 0; k < order.size(); ++k) {
        const int i = order[k];
        if (removed[i]) continue;
        r.kept.push_back(i);
        for (std::size_t m = k + 1; m < order.size(); ++m) {
            const int j = order[m];
            if (!removed[j] && iou(boxes[i], boxes[j]) >= iou_thresh) {
                removed[j] = true;
                r.suppressed.push_back(j);
            }
        }
    }
    return r;
}

}  // namespace hypermot
