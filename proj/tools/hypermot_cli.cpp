// hypermot: operator entry point for scenario generation, training,
// tracking, evaluation, ablation comparison, and verification.
//
// Exit codes: 0 success, 1 usage error, 2 verification/assertion failure,
// 3 I/O error.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <numeric>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hypermot/hypermot.hpp"

using namespace hypermot;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;
constexpr int kExitIo = 3;

ModelConfig model_config_from(const Config& cfg, bool use_hconv) {
    ModelConfig mc;
    mc.window_len = cfg.window_len;
    mc.embed_dim = cfg.embed_dim;
    mc.state_dim = cfg.state_dim;
    mc.layers = cfg.layers;
    mc.theta = cfg.theta;
    mc.alpha = cfg.alpha;
    mc.use_hconv = use_hconv;
    return mc;
}

TrackerConfig tracker_config_from(const Config& cfg) {
    TrackerConfig tc;
    tc.lost_after = cfg.lost_after;
    tc.remove_after = cfg.remove_after;
    tc.min_hits = cfg.min_hits;
    tc.assoc.tau_high = cfg.tau_high;
    tc.assoc.tau_low = cfg.tau_low;
    tc.assoc.nms_thresh = cfg.nms_thresh;
    tc.assoc.spatial_weight = cfg.spatial_weight;
    tc.assoc.stage_gates = cfg.stage_gates;
    return tc;
}

void echo_header(const std::string& cmd, std::uint64_t seed) {
    std::printf("# hypermot %s seed=%llu\n", cmd.c_str(),
                static_cast<unsigned long long>(seed));
}

std::vector<WindowSample> windows_from_dirs(const std::vector<std::string>& dirs,
                                            int window_len) {
    std::vector<WindowSample> all;
    for (const std::string& dir : dirs) {
        const Scenario s = load_scenario(dir);
        auto w = build_windows(s.gt, window_len);
        all.insert(all.end(), w.begin(), w.end());
    }
    if (all.empty()) throw std::runtime_error("no training windows in the given scenarios");
    return all;
}

EstimatorModel train_on_dirs(const std::vector<std::string>& dirs, const Config& cfg,
                             bool use_hconv, std::uint64_t seed, TrainReport* report) {
    EstimatorModel model(model_config_from(cfg, use_hconv));
    Rng root(seed);
    Rng init_rng = root.split("init");
    model.init(init_rng);
    const TrainReport r = train(windows_from_dirs(dirs, cfg.window_len), model, cfg,
                                root.split("train"));
    if (report) *report = r;
    return model;
}

void write_loss_curve(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open loss curve file " + path);
    out << "# epoch mean_loss\n";
    char buf[64];
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
        std::snprintf(buf, sizeof(buf), "%zu %.17g\n", e, report.epoch_loss[e]);
        out << buf;
    }
    if (!out) throw std::runtime_error("write failed for " + path);
}

IdBoxFrames frames_from_rows(const std::vector<MotRow>& rows, long frame_count) {
    IdBoxFrames out(static_cast<std::size_t>(frame_count));
    for (const MotRow& r : rows) {
        if (r.frame < 1 || r.frame > frame_count) continue;
        out[static_cast<std::size_t>(r.frame - 1)].emplace_back(r.id, r.box);
    }
    return out;
}

void print_eval_report(const EvalReport& r) {
    std::printf("%-12s %12s\n", "metric", "value");
    std::printf("%-12s %12.4f\n", "MOTA", r.mota);
    std::printf("%-12s %12.4f\n", "IDF1", r.idf1);
    std::printf("%-12s %12ld\n", "IDSW", r.id_switches);
    std::printf("%-12s %12ld\n", "FP", r.fp);
    std::printf("%-12s %12ld\n", "FN", r.fn);
    std::printf("%-12s %12ld\n", "GT", r.total_gt);
    std::printf("\n");
    std::printf("mota=%.6f\nidf1=%.6f\nidsw=%ld\nfp=%ld\nfn=%ld\ntotal_gt=%ld\n", r.mota,
                r.idf1, r.id_switches, r.fp, r.fn, r.total_gt);
}

// ---- subcommands -----------------------------------------------------------

int cmd_generate(ScenarioKind kind, const GeneratorParams& params, std::uint64_t seed,
                 const std::string& out_dir) {
    echo_header("generate", seed);
    const Scenario s = generate(kind, params, seed);
    save_scenario(s, out_dir);
    std::printf("wrote %s (%s, %d frames) to %s\n", s.name.c_str(), to_string(s.kind),
                s.frames, out_dir.c_str());
    return kExitOk;
}

int cmd_train(const std::vector<std::string>& dirs, const Config& cfg, bool no_hconv,
              const std::string& out_ckpt, std::string loss_path) {
    echo_header("train", cfg.seed);
    TrainReport report;
    EstimatorModel model = train_on_dirs(dirs, cfg, !no_hconv, cfg.seed, &report);
    save_checkpoint(model.params(), out_ckpt);
    if (loss_path.empty()) loss_path = out_ckpt + ".loss";
    write_loss_curve(report, loss_path);
    std::printf("trained %s for %d epochs; final loss %.6g\n",
                no_hconv ? "plain-SSM" : "HyperSSM", cfg.epochs,
                report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back());
    std::printf("checkpoint: %s\nloss curve: %s\n", out_ckpt.c_str(), loss_path.c_str());
    return kExitOk;
}

int cmd_track(const std::string& dir, const std::string& ckpt, const std::string& motion,
              const Config& cfg, bool no_hconv, const std::string& out_file) {
    echo_header("track", cfg.seed);
    const Scenario s = load_scenario(dir);
    const MotionMode mode = motion == "kalman" ? MotionMode::Kalman : MotionMode::HyperSSM;
    EstimatorModel model(model_config_from(cfg, !no_hconv));
    if (mode == MotionMode::HyperSSM) {
        if (ckpt.empty()) {
            throw std::invalid_argument("track: --checkpoint is required unless --motion kalman");
        }
        load_checkpoint(model.params(), ckpt);
    }
    const auto rows = run_sequence(s.dets, mode == MotionMode::Kalman ? nullptr : &model,
                                   tracker_config_from(cfg), mode);
    std::vector<MotRow> mot;
    const double iw = s.params.image_w, ih = s.params.image_h;
    for (const auto& r : rows) {
        mot.push_back({r.frame, r.id,
                       BBox(r.box.cx * iw, r.box.cy * ih, r.box.w * iw, r.box.h * ih), 1.0});
    }
    write_mot(mot, out_file);
    std::printf("tracked %d frames, %zu rows -> %s\n", s.frames, mot.size(), out_file.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& results_file, const std::string& gt_file) {
    const auto res_rows = read_mot(results_file);
    const auto gt_rows = read_mot(gt_file);
    long frames = 0;
    for (const auto& r : res_rows) frames = std::max(frames, r.frame);
    for (const auto& r : gt_rows) frames = std::max(frames, r.frame);
    const EvalReport r = evaluate(frames_from_rows(res_rows, frames),
                                  frames_from_rows(gt_rows, frames));
    print_eval_report(r);
    return kExitOk;
}

struct CompareCell {
    double mota = 0.0, idf1 = 0.0, ade = 0.0;
    long idsw = 0;
};

CompareCell evaluate_tracking(const std::vector<Scenario>& scenarios,
                              const EstimatorModel* model, MotionMode mode,
                              const Config& cfg) {
    CompareCell cell;
    std::vector<double> motas, idf1s, ades;
    for (const Scenario& s : scenarios) {
        const auto rows = run_sequence(s.dets, model, tracker_config_from(cfg), mode);
        IdBoxFrames pred(static_cast<std::size_t>(s.frames));
        for (const auto& r : rows) {
            pred[static_cast<std::size_t>(r.frame - 1)].emplace_back(r.id, r.box);
        }
        const EvalReport r = evaluate(pred, s.gt);
        motas.push_back(r.mota);
        idf1s.push_back(r.idf1);
        cell.idsw += r.id_switches;
        if (mode == MotionMode::Kalman) {
            KalmanPredictor kp;
            ades.push_back(
                motion_eval(s.gt, [&kp](const auto& o) { return kp(o); }, cfg.window_len).ade);
        } else {
            ades.push_back(motion_eval(s.gt, estimator_predictor(*model), cfg.window_len).ade);
        }
    }
    auto mean = [](const std::vector<double>& v) {
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    };
    cell.mota = mean(motas);
    cell.idf1 = mean(idf1s);
    cell.ade = mean(ades);
    return cell;
}

int cmd_compare(const std::vector<std::string>& dirs, const Config& cfg,
                const std::string& out_dir) {
    echo_header("compare", cfg.seed);
    std::vector<Scenario> scenarios;
    for (const std::string& d : dirs) scenarios.push_back(load_scenario(d));

    // Motion-model table: Kalman / plain SSM / HyperSSM, trained on the gt
    // windows of the same scenario set the tracker is then run on.
    auto train_variant = [&](bool use_hconv, int layers) {
        Config c = cfg;
        c.layers = layers;
        return train_on_dirs(dirs, c, use_hconv, cfg.seed, nullptr);
    };
    auto f_hyper = std::async(std::launch::async, train_variant, true, cfg.layers);
    auto f_plain = std::async(std::launch::async, train_variant, false, cfg.layers);
    const EstimatorModel hyper = f_hyper.get();
    const EstimatorModel plain = f_plain.get();

    const CompareCell kalman = evaluate_tracking(scenarios, nullptr, MotionMode::Kalman, cfg);
    const CompareCell ssm = evaluate_tracking(scenarios, &plain, MotionMode::HyperSSM, cfg);
    const CompareCell hyp = evaluate_tracking(scenarios, &hyper, MotionMode::HyperSSM, cfg);

    std::printf("\n%-10s %8s %8s %6s %10s\n", "model", "MOTA", "IDF1", "IDSW", "ADE");
    auto row = [](const char* name, const CompareCell& c) {
        std::printf("%-10s %8.4f %8.4f %6ld %10.6f\n", name, c.mota, c.idf1, c.idsw, c.ade);
    };
    row("kalman", kalman);
    row("ssm", ssm);
    row("hyperssm", hyp);

    // Theta sweep on the trained HyperSSM model.
    const std::vector<double> thetas{0.5, 0.6, 0.7, 0.8, 0.9, 0.98};
    std::ofstream ts(out_dir + "/theta_sweep.txt");
    if (!ts) throw std::runtime_error("cannot open " + out_dir + "/theta_sweep.txt");
    ts << "# theta idf1 ade\n";
    std::printf("\n%-10s %8s %10s\n", "theta", "IDF1", "ADE");
    for (double theta : thetas) {
        EstimatorModel m = hyper;
        m.cfg.theta = theta;
        const CompareCell c = evaluate_tracking(scenarios, &m, MotionMode::HyperSSM, cfg);
        std::printf("%-10.2f %8.4f %10.6f\n", theta, c.idf1, c.ade);
        ts << theta << " " << c.idf1 << " " << c.ade << "\n";
    }

    // Layer-count sweep: retrain HyperSSM at each depth.
    const std::vector<int> layer_counts{1, 2, 4, 8};
    std::vector<std::future<EstimatorModel>> futs;
    for (int k : layer_counts) {
        futs.push_back(std::async(std::launch::async, train_variant, true, k));
    }
    std::ofstream ls(out_dir + "/layer_sweep.txt");
    if (!ls) throw std::runtime_error("cannot open " + out_dir + "/layer_sweep.txt");
    ls << "# layers idf1 ade\n";
    std::printf("\n%-10s %8s %10s\n", "layers", "IDF1", "ADE");
    for (std::size_t i = 0; i < layer_counts.size(); ++i) {
        const EstimatorModel m = futs[i].get();
        const CompareCell c = evaluate_tracking(scenarios, &m, MotionMode::HyperSSM, cfg);
        std::printf("%-10d %8.4f %10.6f\n", layer_counts[i], c.idf1, c.ade);
        ls << layer_counts[i] << " " << c.idf1 << " " << c.ade << "\n";
    }
    std::printf("\ntrace files: %s/theta_sweep.txt, %s/layer_sweep.txt\n", out_dir.c_str(),
                out_dir.c_str());
    return kExitOk;
}

int cmd_verify(const Config& cfg) {
    echo_header("verify", cfg.seed);
    int failures = 0;
    auto check = [&](const char* name, bool ok, double value, double tol) {
        std::printf("%s  %-26s %.3e (tol %.0e)\n", ok ? "PASS" : "FAIL", name, value, tol);
        if (!ok) ++failures;
    };

    // Gradient check on a small configuration.
    {
        ModelConfig mc;
        mc.window_len = 5;
        mc.embed_dim = 8;
        mc.state_dim = 8;
        mc.layers = 2;
        EstimatorModel model(mc);
        Rng rng(cfg.seed);
        model.init(rng);
        for (auto& layer : model.layers) {
            layer.theta_in.init_uniform(rng, 0.1);
            layer.theta_out.init_uniform(rng, 0.1);
        }
        std::vector<TrajectoryWindow> windows(3);
        Rng data = rng.split("grad-data");
        for (auto& w : windows) {
            double cx = data.uniform(0.2, 0.8), cy = data.uniform(0.2, 0.8);
            const double vx = data.uniform(-0.01, 0.01), vy = data.uniform(-0.01, 0.01);
            for (int t = 0; t < 5; ++t) {
                w.boxes.emplace_back(cx, cy, 0.08, 0.12);
                w.frame_ids.push_back(t);
                cx += vx;
                cy += vy;
            }
        }
        Frames target(5, Eigen::MatrixXd(3, 4));
        for (int t = 0; t < 5; ++t) {
            for (int i = 0; i < 3; ++i) {
                const BBox& b = windows[i].boxes[t];
                target[t].row(i) << b.cx + data.uniform(-0.01, 0.01),
                    b.cy + data.uniform(-0.01, 0.01), b.w, b.h;
            }
        }
        auto loss_grad = [&] {
            EstimateCache cache;
            const Frames pred = estimate(windows, model, &cache);
            Frames d_pred;
            const double l = window_loss(pred, target, 1.0, 1.0, &d_pred);
            estimate_backward(d_pred, cache, model);
            return l;
        };
        auto loss_only = [&] { return window_loss(estimate(windows, model), target, 1.0, 1.0); };
        const double err = grad_check(loss_grad, loss_only, model.params(), 1e-5);
        check("gradient check", err < 1e-3, err, 1e-3);
    }

    // Reduction identity: zero Theta + singleton hypergraph == plain SSM.
    {
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            ModelConfig base;
            base.window_len = 5;
            base.embed_dim = 8;
            base.state_dim = 8;
            base.layers = 2;
            ModelConfig off = base;
            off.use_hconv = false;
            EstimatorModel hyper(base), ssm(off);
            Rng r1(cfg.seed + trial), r2(cfg.seed + trial);
            hyper.init(r1);
            ssm.init(r2);
            Rng data(cfg.seed + 100 + trial);
            std::vector<TrajectoryWindow> windows(1 + data.index(5));
            for (auto& w : windows) {
                double cx = data.uniform(0.2, 0.8), cy = data.uniform(0.2, 0.8);
                for (int t = 0; t < 5; ++t) {
                    w.boxes.emplace_back(cx, cy, 0.08, 0.12);
                    w.frame_ids.push_back(t);
                    cx += 0.005;
                }
            }
            const Frames a = estimate(windows, hyper);
            const Frames b = estimate(windows, ssm);
            for (std::size_t t = 0; t < a.size(); ++t) {
                worst = std::max(worst, (a[t] - b[t]).cwiseAbs().maxCoeff());
            }
        }
        check("plain-SSM reduction", worst <= 1e-10, worst, 1e-10);
    }

    // Permutation equivariance of hconv on random features.
    {
        double worst = 0.0;
        Rng rng(cfg.seed + 7);
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 2 + static_cast<int>(rng.index(8));
            Eigen::MatrixXd feats(n, 6), theta_m(6, 6);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < 6; ++j) feats(i, j) = rng.uniform(-1.0, 1.0);
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j) theta_m(i, j) = rng.uniform(-0.5, 0.5);
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng.engine());
            Eigen::MatrixXd pfeats(n, 6);
            for (int i = 0; i < n; ++i) pfeats.row(i) = feats.row(perm[i]);
            const Eigen::MatrixXd y = hconv(feats, build_hypergraph(feats, 0.7).mixing(), theta_m);
            const Eigen::MatrixXd py =
                hconv(pfeats, build_hypergraph(pfeats, 0.7).mixing(), theta_m);
            for (int i = 0; i < n; ++i) {
                worst = std::max(worst, (py.row(i) - y.row(perm[i])).cwiseAbs().maxCoeff());
            }
        }
        check("hconv equivariance", worst <= 1e-10, worst, 1e-10);
    }

    if (failures > 0) {
        std::printf("%d verification check(s) FAILED\n", failures);
        return kExitVerify;
    }
    std::printf("all verification checks passed\n");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypermot: collaborative multi-object motion estimation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // --config / --seed may appear after the subcommand

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    app.add_option("--config", config_path, "key=value config file")->expected(1);
    app.add_option_function<std::uint64_t>(
        "--seed",
        [&](std::uint64_t s) {
            seed = s;
            seed_given = true;
        },
        "root random seed (overrides the config's seed)");

    // generate
    auto* gen = app.add_subcommand("generate", "write a synthetic scenario archive");
    std::string gen_kind = "linear", gen_out;
    GeneratorParams gp;
    gen->add_option("--kind", gen_kind, "linear | group_nonlinear | occlusion")
        ->check(CLI::IsMember({"linear", "group_nonlinear", "occlusion"}));
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--frames", gp.frames, "frame count");
    gen->add_option("--objects", gp.num_objects, "object count (linear)");
    gen->add_option("--groups", gp.num_groups, "group count (group kinds)");
    gen->add_option("--group-size", gp.group_size, "members per group");
    gen->add_option("--phase-spread", gp.phase_spread, "per-member phase offset half-range");
    gen->add_option("--member-spread", gp.member_spread, "per-member position half-range");
    gen->add_option("--jitter", gp.sigma_jitter, "detection coordinate noise");
    gen->add_option("--p-miss", gp.p_miss, "per-detection miss probability");
    gen->add_option("--fp-rate", gp.fp_rate, "expected false positives per frame");
    gen->add_option("--occl-start", gp.occl_start, "occlusion start frame");
    gen->add_option("--occl-len", gp.occl_len, "occlusion length");
    gen->add_option("--occl-targets", gp.occl_targets, "number of occluded objects");

    // train
    auto* tr = app.add_subcommand("train", "train the motion estimator");
    std::vector<std::string> tr_dirs;
    std::string tr_out, tr_loss;
    bool tr_no_hconv = false;
    tr->add_option("--scenario", tr_dirs, "scenario directories (repeatable)")->required();
    tr->add_option("--out", tr_out, "output checkpoint path")->required();
    tr->add_option("--loss-curve", tr_loss, "loss curve path (default: <out>.loss)");
    tr->add_flag("--no-hconv", tr_no_hconv, "train the plain-SSM ablation");

    // track
    auto* tk = app.add_subcommand("track", "run the tracker on a scenario");
    std::string tk_dir, tk_ckpt, tk_motion = "hyperssm", tk_out;
    bool tk_no_hconv = false;
    tk->add_option("--scenario", tk_dir, "scenario directory")->required();
    tk->add_option("--checkpoint", tk_ckpt, "trained model checkpoint");
    tk->add_option("--motion", tk_motion, "hyperssm | kalman")
        ->check(CLI::IsMember({"hyperssm", "kalman"}));
    tk->add_flag("--no-hconv", tk_no_hconv, "checkpoint is a plain-SSM ablation");
    tk->add_option("--out", tk_out, "output MOT results file")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "score MOT results against ground truth");
    std::string ev_results, ev_gt;
    ev->add_option("--results", ev_results, "MOT results file")->required();
    ev->add_option("--gt", ev_gt, "MOT ground-truth file")->required();

    // compare
    auto* cp = app.add_subcommand("compare", "motion-model ablation tables");
    std::vector<std::string> cp_dirs;
    std::string cp_out_dir = ".";
    cp->add_option("--scenario", cp_dirs, "scenario directories (repeatable)")->required();
    cp->add_option("--out-dir", cp_out_dir, "directory for trace files");

    // verify
    auto* vf = app.add_subcommand("verify", "gradient / identity / equivariance checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        Config cfg;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (seed_given) cfg.seed = seed;

        if (gen->parsed()) {
            return cmd_generate(scenario_kind_from(gen_kind), gp, cfg.seed, gen_out);
        }
        if (tr->parsed()) return cmd_train(tr_dirs, cfg, tr_no_hconv, tr_out, tr_loss);
        if (tk->parsed()) {
            return cmd_track(tk_dir, tk_ckpt, tk_motion, cfg, tk_no_hconv, tk_out);
        }
        if (ev->parsed()) return cmd_eval(ev_results, ev_gt);
        if (cp->parsed()) return cmd_compare(cp_dirs, cfg, cp_out_dir);
        if (vf->parsed()) return cmd_verify(cfg);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    }
    return kExitUsage;
}
