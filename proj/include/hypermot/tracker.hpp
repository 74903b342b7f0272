#pragma once

#include <deque>
#include <limits>
#include <memory>
#include <stdexcept>
#include <vector>

#include "hypermot/association.hpp"
#include "hypermot/bbox.hpp"
#include "hypermot/estimator.hpp"
#include "hypermot/kalman.hpp"

namespace hypermot {

enum class TrackState { Active, Lost, Removed };

struct Track {
    long id = 0;
    TrackState state = TrackState::Active;
    std::deque<BBox> history;       // rolling window, capacity L
    std::deque<long> history_frames;
    int time_since_update = 0;
    int hits = 0;
    long created_frame = 0;
    BBox predicted;                 // next-frame prediction, refreshed each step
    KFState kf;                     // used only in Kalman mode

    TrajectoryWindow window() const {
        TrajectoryWindow w;
        w.boxes.assign(history.begin(), history.end());
        w.frame_ids.assign(history_frames.begin(), history_frames.end());
        return w;
    }

    void append(const BBox& b, long frame, std::size_t capacity) {
        history.push_back(b);
        history_frames.push_back(frame);
        while (history.size() > capacity) {
            history.pop_front();
            history_frames.pop_front();
        }
    }
};

struct TrackerConfig {
    int lost_after = 1;    // frames unmatched before Active -> Lost
    int remove_after = 30; // frames unmatched before Lost -> Removed
    int min_hits = 2;      // matches required before a track is emitted
    AssociationConfig assoc;
};

enum class MotionMode { HyperSSM, Kalman };

struct TrackOutput {
    long frame = 0;
    long id = 0;
    BBox box;
};

// Frame-by-frame tracking-by-detection loop: collaborative motion
// prediction, tiered association, spatially-aware initialization, and
// lifecycle bookkeeping.
class Tracker {
public:
    Tracker(const TrackerConfig& cfg, const EstimatorModel* model,
            MotionMode mode = MotionMode::HyperSSM)
        : cfg_(cfg), model_(model), mode_(mode) {
        if (mode_ == MotionMode::HyperSSM && model_ == nullptr) {
            throw std::invalid_argument("Tracker: HyperSSM mode requires a model");
        }
    }

    // Processes one frame; returns rows for every emitted track.
    std::vector<TrackOutput> step(long frame, const std::vector<Detection>& dets) {
        if (frame <= last_frame_) {
            throw std::invalid_argument("Tracker::step: frames must be strictly increasing");
        }
        last_frame_ = frame;
        ++frame_count_;

        predict_all();

        std::vector<int> live;  // indices into tracks_ taking part in association
        std::vector<BBox> predicted;
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            if (tracks_[i].state == TrackState::Removed) continue;
            live.push_back(static_cast<int>(i));
            predicted.push_back(tracks_[i].predicted);
        }

        const DetectionTiers tiers = partition_detections(
            dets, cfg_.assoc.tau_high, cfg_.assoc.tau_low, cfg_.assoc.nms_thresh);
        const AssociationResult assoc = associate(predicted, tiers, cfg_.assoc);

        std::vector<bool> matched(tracks_.size(), false);
        for (int stage = 0; stage < 3; ++stage) {
            for (const auto& [row, det] : assoc.stage_matches[stage]) {
                Track& t = tracks_[live[row]];
                matched[live[row]] = true;
                t.append(det.box, frame, window_len());
                t.time_since_update = 0;
                ++t.hits;
                t.state = TrackState::Active;
                if (mode_ == MotionMode::Kalman) t.kf = kf_update(t.kf, det.box);
            }
        }

        for (int idx : live) {
            Track& t = tracks_[idx];
            if (matched[idx]) continue;
            ++t.time_since_update;
            if (t.state == TrackState::Active && t.time_since_update >= cfg_.lost_after) {
                t.state = TrackState::Lost;
            }
            if (t.time_since_update >= cfg_.remove_after) {
                t.state = TrackState::Removed;
                continue;
            }
            // Lost tracks coast on their own predictions so the
            // collaborative estimator can carry them through occlusion.
            t.append(t.predicted, frame, window_len());
        }

        init_tracks(assoc.unmatched_high, frame);

        std::vector<TrackOutput> out;
        for (const Track& t : tracks_) {
            if (t.state != TrackState::Active) continue;
            if (t.hits < cfg_.min_hits && frame_count_ > cfg_.min_hits) continue;
            out.push_back({frame, t.id, t.history.back()});
        }
        return out;
    }

    const std::vector<Track>& tracks() const { return tracks_; }

private:
    std::size_t window_len() const {
        return model_ ? static_cast<std::size_t>(model_->cfg.window_len) : 5;
    }

    void predict_all() {
        if (mode_ == MotionMode::Kalman) {
            for (Track& t : tracks_) {
                if (t.state == TrackState::Removed) continue;
                t.kf = kf_predict(t.kf);
                t.predicted = t.kf.box();
            }
            return;
        }
        // One estimate call over all live tracks so hyperedges can span
        // visible and occluded objects.
        std::vector<int> live;
        std::vector<TrajectoryWindow> windows;
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            if (tracks_[i].state == TrackState::Removed) continue;
            live.push_back(static_cast<int>(i));
            windows.push_back(pad_window(tracks_[i].window(), model_->cfg.window_len));
        }
        if (live.empty()) return;
        const Frames out = estimate(windows, *model_);
        for (std::size_t k = 0; k < live.size(); ++k) {
            tracks_[live[k]].predicted = predict_next_from(out.back(), k);
        }
    }

    // Spatially-aware initialization: anchors (latest boxes of matched
    // tracks) enter NMS with score 1 so they are always kept; only
    // unmatched high-confidence detections surviving NMS spawn tracks.
    void init_tracks(const std::vector<Detection>& unmatched_high, long frame) {
        std::vector<BBox> boxes;
        std::vector<double> scores;
        for (const Track& t : tracks_) {
            if (t.state == TrackState::Active && t.time_since_update == 0) {
                boxes.push_back(t.history.back());
                scores.push_back(1.0);
            }
        }
        const int anchor_count = static_cast<int>(boxes.size());
        for (const auto& d : unmatched_high) {
            boxes.push_back(d.box);
            scores.push_back(d.score);
        }
        const NmsResult r = nms(boxes, scores, cfg_.assoc.nms_thresh);
        for (int idx : r.kept) {
            if (idx < anchor_count) continue;
            const Detection& d = unmatched_high[idx - anchor_count];
            Track t;
            t.id = next_id_++;
            t.state = TrackState::Active;
            t.created_frame = frame;
            t.hits = 1;
            t.append(d.box, frame, window_len());
            t.predicted = d.box;
            if (mode_ == MotionMode::Kalman) t.kf = kf_init(d.box);
            tracks_.push_back(std::move(t));
        }
    }

    TrackerConfig cfg_;
    const EstimatorModel* model_;
    MotionMode mode_;
    std::vector<Track> tracks_;
    long next_id_ = 1;
    long last_frame_ = std::numeric_limits<long>::min();
    long frame_count_ = 0;
};

// Runs a full detection stream; returns MOT-style rows sorted by frame.
inline std::vector<TrackOutput> run_sequence(
    const std::vector<std::vector<Detection>>& dets_per_frame, const EstimatorModel* model,
    const TrackerConfig& cfg, MotionMode mode = MotionMode::HyperSSM) {
    Tracker tracker(cfg, model, mode);
    std::vector<TrackOutput> all;
    for (std::size_t f = 0; f < dets_per_frame.size(); ++f) {
        auto rows = tracker.step(static_cast<long>(f + 1), dets_per_frame[f]);
        all.insert(all.end(), rows.begin(), rows.end());
    }
    return all;
}

}  // namespace hypermot
