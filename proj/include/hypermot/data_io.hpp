#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hypermot/association.hpp"
#include "hypermot/bbox.hpp"
#include "hypermot/rng.hpp"

namespace hypermot {

// ---- configuration -------------------------------------------------------

// Every tunable in one place. Loaded from `key=value` text; unknown keys
// and out-of-range values are rejected.
struct Config {
    int window_len = 5;
    int layers = 8;
    int embed_dim = 32;
    int state_dim = 32;
    double theta = 0.8;
    double alpha = 0.5;
    double lr = 1e-4;
    int batch = 128;
    int epochs = 50;
    double lambda1 = 1.0;
    double lambda2 = 0.0;
    double tau_high = 0.6;
    double tau_low = 0.1;
    double nms_thresh = 0.7;
    double spatial_weight = 0.2;
    std::array<double, 3> stage_gates{0.7, 0.5, 0.7};
    int lost_after = 1;
    int remove_after = 30;
    int min_hits = 2;
    std::uint64_t seed = 0;

    void validate() const {
        auto require = [](bool ok, const std::string& what) {
            if (!ok) throw std::invalid_argument("config: " + what);
        };
        require(window_len >= 2, "window_len must be >= 2");
        require(layers >= 1, "layers must be >= 1");
        require(embed_dim >= 1 && state_dim >= 1, "dims must be >= 1");
        require(theta > -1.0 && theta <= 1.0, "theta must be in (-1, 1]");
        require(alpha > 0.0 && alpha <= 1.0, "alpha must be in (0, 1]");
        require(lr > 0.0 && lr <= 0.1, "lr must be in (0, 0.1]");
        require(batch >= 1, "batch must be >= 1");
        require(epochs >= 0, "epochs must be >= 0");
        require(lambda1 >= 0.0 && lambda2 >= 0.0, "loss weights must be >= 0");
        require(tau_low >= 0.0 && tau_low < tau_high && tau_high <= 1.0,
                "need 0 <= tau_low < tau_high <= 1");
        require(nms_thresh > 0.0 && nms_thresh <= 1.0, "nms_thresh must be in (0, 1]");
        require(spatial_weight >= 0.0 && spatial_weight <= 1.0,
                "spatial_weight must be in [0, 1]");
        require(lost_after >= 1 && remove_after >= lost_after, "lifecycle thresholds invalid");
        require(min_hits >= 1, "min_hits must be >= 1");
    }
};

inline Config parse_config_text(std::istream& in) {
    Config cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        auto as_int = [&] { return std::stoi(val); };
        auto as_double = [&] { return std::stod(val); };
        if (key == "window_len") cfg.window_len = as_int();
        else if (key == "layers") cfg.layers = as_int();
        else if (key == "embed_dim") cfg.embed_dim = as_int();
        else if (key == "state_dim") cfg.state_dim = as_int();
        else if (key == "theta") cfg.theta = as_double();
        else if (key == "alpha") cfg.alpha = as_double();
        else if (key == "lr") cfg.lr = as_double();
        else if (key == "batch") cfg.batch = as_int();
        else if (key == "epochs") cfg.epochs = as_int();
        else if (key == "lambda1") cfg.lambda1 = as_double();
        else if (key == "lambda2") cfg.lambda2 = as_double();
        else if (key == "tau_high") cfg.tau_high = as_double();
        else if (key == "tau_low") cfg.tau_low = as_double();
        else if (key == "nms_thresh") cfg.nms_thresh = as_double();
        else if (key == "spatial_weight") cfg.spatial_weight = as_double();
        else if (key == "stage_gates") {
            std::stringstream ss(val);
            std::string tok;
            for (int i = 0; i < 3; ++i) {
                if (!std::getline(ss, tok, ',')) {
                    throw std::invalid_argument("config: stage_gates needs 3 comma-separated values");
                }
                cfg.stage_gates[i] = std::stod(tok);
            }
        }
        else if (key == "lost_after") cfg.lost_after = as_int();
        else if (key == "remove_after") cfg.remove_after = as_int();
        else if (key == "min_hits") cfg.min_hits = as_int();
        else if (key == "seed") cfg.seed = std::stoull(val);
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_config: cannot open " + path);
    return parse_config_text(in);
}

// ---- MOT-Challenge text format --------------------------------------------

// One parsed line: `frame,id,bb_left,bb_top,bb_width,bb_height,conf,x,y,z`.
// Boxes are converted to center form; units are whatever the file uses
// (pixels by convention).
struct MotRow {
    long frame = 0;
    long id = -1;
    BBox box;
    double conf = 1.0;
};

inline std::vector<MotRow> read_mot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_mot: cannot open " + path);
    std::vector<MotRow> rows;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        double frame, id, left, top, w, h, conf;
        const int got = std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf", &frame, &id,
                                    &left, &top, &w, &h, &conf);
        if (got < 7 || w <= 0 || h <= 0) {
            throw std::runtime_error("read_mot: malformed line " + std::to_string(lineno) +
                                     " in " + path);
        }
        MotRow r;
        r.frame = static_cast<long>(frame);
        r.id = static_cast<long>(id);
        r.box = BBox(left + 0.5 * w, top + 0.5 * h, w, h);
        r.conf = conf;
        rows.push_back(r);
    }
    return rows;
}

inline void write_mot(const std::vector<MotRow>& rows, const std::string& path) {
    std::vector<MotRow> sorted = rows;
    std::stable_sort(sorted.begin(), sorted.end(), [](const MotRow& a, const MotRow& b) {
        return a.frame != b.frame ? a.frame < b.frame : a.id < b.id;
    });
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_mot: cannot open " + path);
    char buf[256];
    for (const MotRow& r : sorted) {
        std::snprintf(buf, sizeof(buf), "%ld,%ld,%.4f,%.4f,%.4f,%.4f,%.4f,-1,-1,-1\n", r.frame,
                      r.id, r.box.x1(), r.box.y1(), r.box.w, r.box.h, r.conf);
        out << buf;
    }
    if (!out) throw std::runtime_error("write_mot: write failed for " + path);
}

// ---- synthetic scenarios ---------------------------------------------------

enum class ScenarioKind { Linear, GroupNonlinear, Occlusion };

inline const char* to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Linear: return "linear";
        case ScenarioKind::GroupNonlinear: return "group_nonlinear";
        default: return "occlusion";
    }
}

inline ScenarioKind scenario_kind_from(const std::string& s) {
    if (s == "linear") return ScenarioKind::Linear;
    if (s == "group_nonlinear") return ScenarioKind::GroupNonlinear;
    if (s == "occlusion") return ScenarioKind::Occlusion;
    throw std::invalid_argument("unknown scenario kind '" + s + "'");
}

struct GeneratorParams {
    int frames = 200;
    int num_objects = 6;     // linear kind
    int num_groups = 2;      // group kinds
    int group_size = 3;
    double phase_spread = 0.08;   // group kinds: per-member phase offset half-range (rad)
    double member_spread = 0.05;  // group kinds: per-member positional offset half-range
    double sigma_jitter = 0.004;  // detection coordinate noise, unit-image scale
    double p_miss = 0.05;
    double fp_rate = 0.3;    // expected false positives per frame
    int occl_start = 80;     // occlusion kind
    int occl_len = 10;
    int occl_targets = 2;    // number of occluded objects, staggered spans
    int image_w = 1920;
    int image_h = 1080;
};

struct Scenario {
    std::string name;
    ScenarioKind kind = ScenarioKind::Linear;
    int frames = 0;
    std::uint64_t seed = 0;
    GeneratorParams params;
    std::vector<std::vector<std::pair<long, BBox>>> gt;      // per frame: (object id, box)
    std::vector<std::vector<Detection>> dets;                // per frame
};

namespace detail {

// Ground truth in normalized units; detection noise layered on top.
inline void apply_detection_noise(Scenario& s, Rng root) {
    Rng jitter = root.split("jitter");
    Rng miss = root.split("miss");
    Rng fp = root.split("fp");
    Rng conf = root.split("conf");
    s.dets.assign(s.gt.size(), {});
    for (std::size_t f = 0; f < s.gt.size(); ++f) {
        for (const auto& [id, box] : s.gt[f]) {
            if (s.params.p_miss > 0 && miss.uniform(0.0, 1.0) < s.params.p_miss) continue;
            Detection d;
            const double sj = s.params.sigma_jitter;
            d.box = BBox(box.cx + jitter.normal(0, sj), box.cy + jitter.normal(0, sj),
                         std::max(0.005, box.w + jitter.normal(0, sj)),
                         std::max(0.005, box.h + jitter.normal(0, sj)));
            d.score = conf.uniform(0.55, 1.0);
            s.dets[f].push_back(d);
        }
        // false positives: Bernoulli-thinned integer rate
        double rate = s.params.fp_rate;
        int count = static_cast<int>(rate);
        if (fp.uniform(0.0, 1.0) < rate - count) ++count;
        for (int k = 0; k < count; ++k) {
            Detection d;
            d.box = BBox(fp.uniform(0.1, 0.9), fp.uniform(0.1, 0.9), fp.uniform(0.03, 0.08),
                         fp.uniform(0.06, 0.14));
            d.score = conf.uniform(0.05, 0.6);
            s.dets[f].push_back(d);
        }
    }
}

inline void generate_linear_gt(Scenario& s, Rng rng) {
    const int n = s.params.num_objects;
    std::vector<double> cx(n), cy(n), vx(n), vy(n), w(n), h(n);
    for (int i = 0; i < n; ++i) {
        cx[i] = rng.uniform(0.15, 0.85);
        cy[i] = rng.uniform(0.15, 0.85);
        const double speed = rng.uniform(0.002, 0.008);
        const double angle = rng.uniform(0.0, 2.0 * M_PI);
        vx[i] = speed * std::cos(angle);
        vy[i] = speed * std::sin(angle);
        w[i] = rng.uniform(0.04, 0.08);
        h[i] = rng.uniform(0.08, 0.14);
    }
    s.gt.assign(s.frames, {});
    for (int f = 0; f < s.frames; ++f) {
        for (int i = 0; i < n; ++i) {
            s.gt[f].emplace_back(i + 1, BBox(cx[i], cy[i], w[i], h[i]));
            cx[i] += vx[i];
            cy[i] += vy[i];
            if (cx[i] < 0.08 || cx[i] > 0.92) vx[i] = -vx[i];  // reflective bounds
            if (cy[i] < 0.08 || cy[i] > 0.92) vy[i] = -vy[i];
        }
    }
}

inline void generate_group_gt(Scenario& s, Rng rng) {
    struct Member {
        long id;
        double gcx, gcy, radius, omega, phase, offx, offy, w, h;
        double wob_amp, wob_freq, wob_phase;
    };
    std::vector<Member> members;
    long id = 1;
    for (int g = 0; g < s.params.num_groups; ++g) {
        const double gcx = rng.uniform(0.3, 0.7);
        const double gcy = rng.uniform(0.3, 0.7);
        const double radius = rng.uniform(0.08, 0.18);
        const double omega = rng.uniform(0.04, 0.08) * (rng.uniform(0, 1) < 0.5 ? 1 : -1);
        const double phase = rng.uniform(0.0, 2.0 * M_PI);
        for (int m = 0; m < s.params.group_size; ++m) {
            Member mem;
            mem.id = id++;
            mem.gcx = gcx;
            mem.gcy = gcy;
            mem.radius = radius;
            mem.omega = omega;
            mem.phase = phase + rng.uniform(-s.params.phase_spread, s.params.phase_spread);
            mem.offx = rng.uniform(-s.params.member_spread, s.params.member_spread);
            mem.offy = rng.uniform(-s.params.member_spread, s.params.member_spread);
            mem.w = rng.uniform(0.04, 0.08);
            mem.h = rng.uniform(0.08, 0.14);
            // small smooth per-member wobble, uncorrelated between members
            mem.wob_amp = rng.uniform(0.0, 0.001);
            mem.wob_freq = rng.uniform(0.1, 0.3);
            mem.wob_phase = rng.uniform(0.0, 2.0 * M_PI);
            members.push_back(mem);
        }
    }
    s.gt.assign(s.frames, {});
    for (int f = 0; f < s.frames; ++f) {
        for (const Member& m : members) {
            const double a = m.omega * f + m.phase;
            const double wob = m.wob_amp * std::sin(m.wob_freq * f + m.wob_phase);
            const double cx = m.gcx + m.offx + m.radius * std::cos(a) + wob;
            const double cy = m.gcy + m.offy + m.radius * std::sin(a) + wob;
            s.gt[f].emplace_back(m.id, BBox(std::clamp(cx, 0.03, 0.97),
                                            std::clamp(cy, 0.03, 0.97), m.w, m.h));
        }
    }
}

inline void remove_occluded_detections(Scenario& s, Rng rng) {
    // staggered spans over the first occl_targets object ids, one per group
    // when the base is grouped
    for (int k = 0; k < s.params.occl_targets; ++k) {
        const long target = 1 + k * (s.kind == ScenarioKind::Occlusion &&
                                             s.params.num_groups > 1
                                         ? s.params.group_size
                                         : 1);
        const int start = s.params.occl_start + k * (s.params.occl_len + 5);
        const int stop = std::min(start + s.params.occl_len, s.frames);
        for (int f = start; f < stop; ++f) {
            if (f < 0 || f >= static_cast<int>(s.gt.size())) continue;
            // remove the detection closest to the target's gt box
            const BBox* gt_box = nullptr;
            for (const auto& [gid, b] : s.gt[f]) {
                if (gid == target) gt_box = &b;
            }
            if (!gt_box) continue;
            auto& dets = s.dets[f];
            double best = 0.3;
            int best_idx = -1;
            for (std::size_t i = 0; i < dets.size(); ++i) {
                if (iou(dets[i].box, *gt_box) > best) {
                    best = iou(dets[i].box, *gt_box);
                    best_idx = static_cast<int>(i);
                }
            }
            if (best_idx >= 0) dets.erase(dets.begin() + best_idx);
        }
    }
    (void)rng;
}

}  // namespace detail

// Pure function of (kind, params, seed).
inline Scenario generate(ScenarioKind kind, const GeneratorParams& params, std::uint64_t seed) {
    Scenario s;
    s.kind = kind;
    s.params = params;
    s.seed = seed;
    s.frames = params.frames;
    s.name = std::string(to_string(kind)) + "_" + std::to_string(seed);
    Rng root(seed);
    if (kind == ScenarioKind::Linear) {
        detail::generate_linear_gt(s, root.split("gt"));
    } else {
        detail::generate_group_gt(s, root.split("gt"));
    }
    detail::apply_detection_noise(s, root.split("noise"));
    if (kind == ScenarioKind::Occlusion) {
        detail::remove_occluded_detections(s, root.split("occl"));
    }
    return s;
}

// ---- scenario archive ------------------------------------------------------
//
// Directory layout: gt.txt and det.txt in MOT pixel units plus a `meta`
// key=value file carrying image size, frame count, seed, and generator
// parameters.

inline void save_scenario(const Scenario& s, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const double iw = s.params.image_w, ih = s.params.image_h;
    std::vector<MotRow> gt_rows, det_rows;
    for (int f = 0; f < s.frames; ++f) {
        for (const auto& [id, b] : s.gt[f]) {
            gt_rows.push_back({f + 1, id, BBox(b.cx * iw, b.cy * ih, b.w * iw, b.h * ih), 1.0});
        }
        for (const auto& d : s.dets[f]) {
            det_rows.push_back({f + 1, -1,
                                BBox(d.box.cx * iw, d.box.cy * ih, d.box.w * iw, d.box.h * ih),
                                d.score});
        }
    }
    write_mot(gt_rows, dir + "/gt.txt");
    write_mot(det_rows, dir + "/det.txt");
    std::ofstream meta(dir + "/meta");
    meta << "kind=" << to_string(s.kind) << "\n"
         << "frames=" << s.frames << "\n"
         << "seed=" << s.seed << "\n"
         << "image_w=" << s.params.image_w << "\n"
         << "image_h=" << s.params.image_h << "\n"
         << "num_objects=" << s.params.num_objects << "\n"
         << "num_groups=" << s.params.num_groups << "\n"
         << "group_size=" << s.params.group_size << "\n"
         << "phase_spread=" << s.params.phase_spread << "\n"
         << "member_spread=" << s.params.member_spread << "\n"
         << "sigma_jitter=" << s.params.sigma_jitter << "\n"
         << "p_miss=" << s.params.p_miss << "\n"
         << "fp_rate=" << s.params.fp_rate << "\n"
         << "occl_start=" << s.params.occl_start << "\n"
         << "occl_len=" << s.params.occl_len << "\n"
         << "occl_targets=" << s.params.occl_targets << "\n";
    if (!meta) throw std::runtime_error("save_scenario: cannot write meta in " + dir);
}

inline Scenario load_scenario(const std::string& dir) {
    std::ifstream meta(dir + "/meta");
    if (!meta) throw std::runtime_error("load_scenario: cannot open " + dir + "/meta");
    Scenario s;
    std::string line;
    while (std::getline(meta, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
        if (key == "kind") s.kind = scenario_kind_from(val);
        else if (key == "frames") s.frames = std::stoi(val);
        else if (key == "seed") s.seed = std::stoull(val);
        else if (key == "image_w") s.params.image_w = std::stoi(val);
        else if (key == "image_h") s.params.image_h = std::stoi(val);
        else if (key == "num_objects") s.params.num_objects = std::stoi(val);
        else if (key == "num_groups") s.params.num_groups = std::stoi(val);
        else if (key == "group_size") s.params.group_size = std::stoi(val);
        else if (key == "phase_spread") s.params.phase_spread = std::stod(val);
        else if (key == "member_spread") s.params.member_spread = std::stod(val);
        else if (key == "sigma_jitter") s.params.sigma_jitter = std::stod(val);
        else if (key == "p_miss") s.params.p_miss = std::stod(val);
        else if (key == "fp_rate") s.params.fp_rate = std::stod(val);
        else if (key == "occl_start") s.params.occl_start = std::stoi(val);
        else if (key == "occl_len") s.params.occl_len = std::stoi(val);
        else if (key == "occl_targets") s.params.occl_targets = std::stoi(val);
    }
    s.params.frames = s.frames;
    s.name = std::string(to_string(s.kind)) + "_" + std::to_string(s.seed);
    const double iw = s.params.image_w, ih = s.params.image_h;
    s.gt.assign(s.frames, {});
    s.dets.assign(s.frames, {});
    for (const MotRow& r : read_mot(dir + "/gt.txt")) {
        if (r.frame < 1 || r.frame > s.frames) {
            throw std::runtime_error("load_scenario: gt frame out of range in " + dir);
        }
        s.gt[r.frame - 1].emplace_back(
            r.id, BBox(r.box.cx / iw, r.box.cy / ih, r.box.w / iw, r.box.h / ih));
    }
    for (const MotRow& r : read_mot(dir + "/det.txt")) {
        if (r.frame < 1 || r.frame > s.frames) {
            throw std::runtime_error("load_scenario: det frame out of range in " + dir);
        }
        s.dets[r.frame - 1].push_back(
            {BBox(r.box.cx / iw, r.box.cy / ih, r.box.w / iw, r.box.h / ih), r.conf});
    }
    return s;
}

}  // namespace hypermot
