#include "doctest.h"

#include "hypermot/training.hpp"

using namespace hypermot;

namespace {

ModelConfig tiny_model_config(const Config& cfg) {
    ModelConfig m;
    m.window_len = cfg.window_len;
    m.embed_dim = 8;
    m.state_dim = 8;
    m.layers = 2;
    m.theta = cfg.theta;
    m.alpha = cfg.alpha;
    return m;
}

}  // namespace

TEST_CASE("build_windows sample counts") {
    GeneratorParams p;
    p.sigma_jitter = 0;
    p.p_miss = 0;
    p.fp_rate = 0;
    SUBCASE("exactly L+1 frames give one sample") {
        p.frames = 6;
        const Scenario s = generate(ScenarioKind::Linear, p, 1);
        CHECK(build_windows(s.gt, 5).size() == 1);
    }
    SUBCASE("L frames give none") {
        p.frames = 5;
        const Scenario s = generate(ScenarioKind::Linear, p, 1);
        CHECK(build_windows(s.gt, 5).empty());
    }
    SUBCASE("10 frames with L=5 give 5 samples") {
        p.frames = 10;
        const Scenario s = generate(ScenarioKind::Linear, p, 1);
        CHECK(build_windows(s.gt, 5).size() == 5);
    }
}

TEST_CASE("build_windows excludes objects with gaps") {
    // two objects, one missing in the middle frame
    std::vector<std::vector<std::pair<long, BBox>>> gt(6);
    for (int f = 0; f < 6; ++f) {
        gt[f].emplace_back(1, BBox(0.2 + 0.01 * f, 0.5, 0.1, 0.1));
        if (f != 3) gt[f].emplace_back(2, BBox(0.7, 0.5, 0.1, 0.1));
    }
    const auto samples = build_windows(gt, 5);
    REQUIRE(samples.size() == 1);
    CHECK(samples[0].ids == std::vector<long>{1});
}

TEST_CASE("build_windows target is the input shifted by one frame") {
    std::vector<std::vector<std::pair<long, BBox>>> gt(7);
    for (int f = 0; f < 7; ++f) gt[f].emplace_back(4, BBox(0.1 + 0.05 * f, 0.5, 0.1, 0.1));
    const auto samples = build_windows(gt, 5);
    REQUIRE(samples.size() == 2);
    const auto& s = samples[0];
    for (int t = 0; t < 5; ++t) {
        CHECK(s.target[t](0, 0) == doctest::Approx(gt[t + 1][0].second.cx));
        CHECK(s.input[0].boxes[t].cx == doctest::Approx(gt[t][0].second.cx));
    }
}

TEST_CASE("window_loss values") {
    Frames pred(1, Eigen::MatrixXd(1, 4)), target(1, Eigen::MatrixXd(1, 4));
    target[0] << 0.5, 0.5, 0.2, 0.2;
    SUBCASE("zero at the target") {
        pred[0] = target[0];
        CHECK(window_loss(pred, target, 1.0, 1.0) == 0.0);
    }
    SUBCASE("hand-computed smooth-L1 mean") {
        pred[0] << 1.0, 0.5, 0.2, 0.2;  // cx offset 0.5 only
        CHECK(window_loss(pred, target, 1.0, 0.0) == doctest::Approx(0.03125));
    }
    SUBCASE("lambda2 isolates the giou term") {
        pred[0] << 0.55, 0.5, 0.2, 0.2;
        const double g = giou(BBox(0.55, 0.5, 0.2, 0.2), BBox(0.5, 0.5, 0.2, 0.2));
        CHECK(window_loss(pred, target, 0.0, 1.0) == doctest::Approx(1.0 - g));
    }
}

TEST_CASE("loss is nonnegative and zero only at the target") {
    Rng rng(71);
    for (int trial = 0; trial < 50; ++trial) {
        Frames pred(2, Eigen::MatrixXd(2, 4)), target(2, Eigen::MatrixXd(2, 4));
        for (int t = 0; t < 2; ++t) {
            for (int i = 0; i < 2; ++i) {
                target[t].row(i) << rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                    rng.uniform(0.05, 0.2), rng.uniform(0.05, 0.2);
                pred[t].row(i) = target[t].row(i);
                pred[t](i, 0) += rng.uniform(-0.1, 0.1);
            }
        }
        const double l = window_loss(pred, target, 1.0, 1.0);
        CHECK(l >= 0.0);
        bool differs = false;
        for (int t = 0; t < 2; ++t) differs |= (pred[t] != target[t]);
        if (differs) CHECK(l > 0.0);
    }
}

TEST_CASE("window_loss gradient matches finite differences") {
    Rng rng(72);
    Frames target(2, Eigen::MatrixXd(2, 4));
    Param flat("pred", 2 * 2 * 4, 1);
    for (int t = 0; t < 2; ++t) {
        for (int i = 0; i < 2; ++i) {
            target[t].row(i) << rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7),
                rng.uniform(0.1, 0.2), rng.uniform(0.1, 0.2);
            for (int c = 0; c < 4; ++c) {
                flat.value((t * 2 + i) * 4 + c, 0) =
                    target[t](i, c) + rng.uniform(-0.05, 0.05);
            }
        }
    }
    auto unflatten = [&] {
        Frames pred(2, Eigen::MatrixXd(2, 4));
        for (int t = 0; t < 2; ++t)
            for (int i = 0; i < 2; ++i)
                for (int c = 0; c < 4; ++c) pred[t](i, c) = flat.value((t * 2 + i) * 4 + c, 0);
        return pred;
    };
    auto loss_with_grad = [&] {
        Frames d_pred;
        const double l = window_loss(unflatten(), target, 1.0, 1.0, &d_pred);
        for (int t = 0; t < 2; ++t)
            for (int i = 0; i < 2; ++i)
                for (int c = 0; c < 4; ++c) flat.grad((t * 2 + i) * 4 + c, 0) += d_pred[t](i, c);
        return l;
    };
    auto loss_only = [&] { return window_loss(unflatten(), target, 1.0, 1.0); };
    CHECK(grad_check(loss_with_grad, loss_only, {&flat}, 1e-6) < 1e-5);
}

TEST_CASE("training decreases the loss on a linear scenario") {
    GeneratorParams p;
    p.frames = 40;
    p.sigma_jitter = 0;
    p.p_miss = 0;
    p.fp_rate = 0;
    const Scenario s = generate(ScenarioKind::Linear, p, 3);
    const auto samples = build_windows(s.gt, 5);
    Config cfg;
    cfg.epochs = 15;
    cfg.lr = 3e-3;
    cfg.batch = 16;
    EstimatorModel model(tiny_model_config(cfg));
    Rng rng(73);
    model.init(rng);
    const TrainReport report = train(samples, model, cfg, Rng(cfg.seed));
    REQUIRE(static_cast<int>(report.epoch_loss.size()) == cfg.epochs);
    for (double l : report.epoch_loss) CHECK(std::isfinite(l));
    CHECK(report.epoch_loss.back() < report.epoch_loss.front());
}

TEST_CASE("zero epochs leaves the model unchanged; same seed gives same result") {
    GeneratorParams p;
    p.frames = 20;
    const Scenario s = generate(ScenarioKind::Linear, p, 4);
    const auto samples = build_windows(s.gt, 5);
    Config cfg;
    cfg.epochs = 0;
    EstimatorModel model(tiny_model_config(cfg));
    Rng rng(74);
    model.init(rng);
    const Eigen::MatrixXd before = model.lift_w.value;
    train(samples, model, cfg, Rng(0));
    CHECK((model.lift_w.value - before).norm() == 0.0);

    cfg.epochs = 3;
    cfg.batch = 8;
    cfg.lr = 1e-3;
    EstimatorModel m1(tiny_model_config(cfg)), m2(tiny_model_config(cfg));
    Rng r1(75), r2(75);
    m1.init(r1);
    m2.init(r2);
    train(samples, m1, cfg, Rng(9));
    train(samples, m2, cfg, Rng(9));
    CHECK((m1.head_w2.value - m2.head_w2.value).norm() == 0.0);
    CHECK((m1.layers[0].ssm.b.value - m2.layers[0].ssm.b.value).norm() == 0.0);
}

TEST_CASE("full estimator loss passes grad_check on the small config") {
    Config cfg;
    EstimatorModel model(tiny_model_config(cfg));
    Rng rng(0);
    model.init(rng);
    for (auto& layer : model.layers) {
        layer.theta_in.init_uniform(rng, 0.1);
        layer.theta_out.init_uniform(rng, 0.1);
    }
    GeneratorParams p;
    p.frames = 8;
    p.sigma_jitter = 0;
    p.p_miss = 0;
    p.fp_rate = 0;
    p.num_groups = 1;
    p.group_size = 3;
    const Scenario s = generate(ScenarioKind::GroupNonlinear, p, 0);
    const auto samples = build_windows(s.gt, 5);
    REQUIRE(!samples.empty());
    const WindowSample& sample = samples.front();
    auto loss_with_grad = [&] {
        EstimateCache cache;
        const Frames pred = estimate(sample.input, model, &cache);
        Frames d_pred;
        const double l = window_loss(pred, sample.target, 1.0, 1.0, &d_pred);
        estimate_backward(d_pred, cache, model);
        return l;
    };
    auto loss_only = [&] {
        return window_loss(estimate(sample.input, model), sample.target, 1.0, 1.0);
    };
    CHECK(grad_check(loss_with_grad, loss_only, model.params(), 1e-5) < 1e-3);
}
