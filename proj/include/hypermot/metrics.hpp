#pragma once

#include <functional>
#include <map>
#include <vector>

#include "hypermot/association.hpp"
#include "hypermot/bbox.hpp"
#include "hypermot/estimator.hpp"
#include "hypermot/kalman.hpp"

namespace hypermot {

// Frame-indexed (id, box) rows, the common shape for results and gt.
using IdBoxFrames = std::vector<std::vector<std::pair<long, BBox>>>;

struct EvalReport {
    double mota = 0.0;
    double idf1 = 0.0;
    long id_switches = 0;
    long fp = 0;
    long fn = 0;
    long total_gt = 0;
    double ade = 0.0;
    double fde = 0.0;
};

// CLEAR-MOT accounting plus IDF1 via a global id-to-id assignment.
// Per frame, predictions and ground truth are matched by Hungarian on
// 1 - IoU with pairs below `iou_match_thresh` inadmissible.
inline EvalReport evaluate(const IdBoxFrames& results, const IdBoxFrames& gt,
                           double iou_match_thresh = 0.5) {
    const std::size_t frames = std::max(results.size(), gt.size());
    constexpr double kInadmissible = 1e6;
    EvalReport r;
    long total_pred = 0;
    std::map<long, long> last_match;                 // gt id -> last matched pred id
    std::map<std::pair<long, long>, long> overlap;   // (gt id, pred id) -> matched frames
    std::map<long, long> gt_count, pred_count;

    for (std::size_t f = 0; f < frames; ++f) {
        const auto& preds = f < results.size() ? results[f] : IdBoxFrames::value_type{};
        const auto& gts = f < gt.size() ? gt[f] : IdBoxFrames::value_type{};
        r.total_gt += static_cast<long>(gts.size());
        total_pred += static_cast<long>(preds.size());
        for (const auto& [gid, gb] : gts) ++gt_count[gid];
        for (const auto& [pid, pb] : preds) ++pred_count[pid];
        for (const auto& [gid, gb] : gts) {
            for (const auto& [pid, pb] : preds) {
                if (iou(gb, pb) >= iou_match_thresh) ++overlap[{gid, pid}];
            }
        }
        if (gts.empty() || preds.empty()) {
            r.fn += static_cast<long>(gts.size());
            r.fp += static_cast<long>(preds.size());
            continue;
        }
        Eigen::MatrixXd cost(gts.size(), preds.size());
        for (std::size_t i = 0; i < gts.size(); ++i) {
            for (std::size_t j = 0; j < preds.size(); ++j) {
                const double v = iou(gts[i].second, preds[j].second);
                cost(i, j) = v >= iou_match_thresh ? 1.0 - v : kInadmissible;
            }
        }
        std::vector<bool> gt_matched(gts.size(), false), pred_matched(preds.size(), false);
        for (const auto& [i, j] : hungarian(cost)) {
            if (cost(i, j) >= kInadmissible) continue;
            gt_matched[i] = true;
            pred_matched[j] = true;
            const long gid = gts[i].first, pid = preds[j].first;
            const auto it = last_match.find(gid);
            if (it != last_match.end() && it->second != pid) ++r.id_switches;
            last_match[gid] = pid;
        }
        for (std::size_t i = 0; i < gts.size(); ++i)
            if (!gt_matched[i]) ++r.fn;
        for (std::size_t j = 0; j < preds.size(); ++j)
            if (!pred_matched[j]) ++r.fp;
    }

    r.mota = r.total_gt > 0
                 ? 1.0 - static_cast<double>(r.fn + r.fp + r.id_switches) / r.total_gt
                 : 1.0;

    // IDF1: optimal global assignment of gt ids to prediction ids
    // maximizing identity-consistent matches.
    long idtp = 0;
    if (!gt_count.empty() && !pred_count.empty()) {
        std::vector<long> gt_ids, pred_ids;
        for (const auto& [id, n] : gt_count) gt_ids.push_back(id);
        for (const auto& [id, n] : pred_count) pred_ids.push_back(id);
        Eigen::MatrixXd neg(gt_ids.size(), pred_ids.size());
        for (std::size_t i = 0; i < gt_ids.size(); ++i) {
            for (std::size_t j = 0; j < pred_ids.size(); ++j) {
                const auto it = overlap.find({gt_ids[i], pred_ids[j]});
                neg(i, j) = it == overlap.end() ? 0.0 : -static_cast<double>(it->second);
            }
        }
        for (const auto& [i, j] : hungarian(neg)) idtp += static_cast<long>(-neg(i, j));
    }
    r.idf1 = (r.total_gt + total_pred) > 0
                 ? 2.0 * static_cast<double>(idtp) / static_cast<double>(r.total_gt + total_pred)
                 : 1.0;
    return r;
}

// ---- motion-estimation evaluation ------------------------------------------

// Given the full gt history of each co-visible object, return the predicted
// next-frame box per object (same order).
using NextFramePredictor =
    std::function<std::vector<BBox>(const std::vector<std::pair<long, TrajectoryWindow>>&)>;

struct MotionEvalResult {
    double ade = 0.0;
    double fde = 0.0;
    long count = 0;
};

// Walks the gt stream, asking the predictor for frame t+1 after each frame
// t once a track has at least `min_history` observations. ADE averages the
// center distance over every prediction; FDE over each track's final one.
inline MotionEvalResult motion_eval(const IdBoxFrames& gt, const NextFramePredictor& predict,
                                    int min_history) {
    std::map<long, TrajectoryWindow> histories;
    std::map<long, double> final_err;
    double total = 0.0;
    long count = 0;
    for (std::size_t f = 0; f + 1 < gt.size(); ++f) {
        for (const auto& [id, box] : gt[f]) {
            auto& h = histories[id];
            h.boxes.push_back(box);
            h.frame_ids.push_back(static_cast<long>(f));
        }
        std::vector<std::pair<long, TrajectoryWindow>> eligible;
        std::vector<const BBox*> truth;
        for (const auto& [id, box] : gt[f + 1]) {
            const auto it = histories.find(id);
            if (it == histories.end() ||
                static_cast<int>(it->second.length()) < min_history) continue;
            if (it->second.frame_ids.back() != static_cast<long>(f)) continue;
            eligible.emplace_back(id, it->second);
            truth.push_back(&box);
        }
        if (eligible.empty()) continue;
        const std::vector<BBox> pred = predict(eligible);
        for (std::size_t k = 0; k < eligible.size(); ++k) {
            const double dx = pred[k].cx - truth[k]->cx;
            const double dy = pred[k].cy - truth[k]->cy;
            const double err = std::sqrt(dx * dx + dy * dy);
            total += err;
            ++count;
            final_err[eligible[k].first] = err;
        }
    }
    MotionEvalResult out;
    out.count = count;
    out.ade = count > 0 ? total / count : 0.0;
    if (!final_err.empty()) {
        double s = 0.0;
        for (const auto& [id, e] : final_err) s += e;
        out.fde = s / static_cast<double>(final_err.size());
    }
    return out;
}

// Predicts the last observed box for every object.
inline NextFramePredictor constant_position_predictor() {
    return [](const std::vector<std::pair<long, TrajectoryWindow>>& objs) {
        std::vector<BBox> out;
        out.reserve(objs.size());
        for (const auto& [id, w] : objs) out.push_back(w.boxes.back());
        return out;
    };
}

// Stateful per-track constant-velocity Kalman predictor.
class KalmanPredictor {
public:
    explicit KalmanPredictor(const KFConfig& cfg = {}) : cfg_(cfg) {}

    std::vector<BBox> operator()(const std::vector<std::pair<long, TrajectoryWindow>>& objs) {
        std::vector<BBox> out;
        out.reserve(objs.size());
        for (const auto& [id, w] : objs) {
            auto it = states_.find(id);
            if (it == states_.end()) {
                Entry e;
                e.state = kf_init(w.boxes.front(), cfg_);
                e.consumed = 1;
                it = states_.emplace(id, e).first;
            }
            Entry& e = it->second;
            for (std::size_t k = e.consumed; k < w.boxes.size(); ++k) {
                e.state = kf_update(kf_predict(e.state, cfg_), w.boxes[k], cfg_);
            }
            e.consumed = w.boxes.size();
            out.push_back(kf_predict(e.state, cfg_).box());
        }
        return out;
    }

private:
    struct Entry {
        KFState state;
        std::size_t consumed = 0;
    };
    KFConfig cfg_;
    std::map<long, Entry> states_;
};

// Collaborative estimator predictor: one estimate() call per frame over
// all eligible objects.
inline NextFramePredictor estimator_predictor(const EstimatorModel& model) {
    return [&model](const std::vector<std::pair<long, TrajectoryWindow>>& objs) {
        std::vector<TrajectoryWindow> windows;
        windows.reserve(objs.size());
        for (const auto& [id, w] : objs) windows.push_back(pad_window(w, model.cfg.window_len));
        const Frames out = estimate(windows, model);
        std::vector<BBox> boxes;
        boxes.reserve(objs.size());
        for (std::size_t k = 0; k < objs.size(); ++k) {
            boxes.push_back(predict_next_from(out.back(), static_cast<Eigen::Index>(k)));
        }
        return boxes;
    };
}

}  // namespace hypermot
