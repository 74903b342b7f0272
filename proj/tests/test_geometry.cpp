#include "doctest.h"

#include "hypermot/bbox.hpp"
#include "hypermot/rng.hpp"

using namespace hypermot;

namespace {

BBox random_box(Rng& rng) {
    return BBox(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.4),
                rng.uniform(0.05, 0.4));
}

// Re-scans the greedy NMS definition directly: a box is suppressed iff a
// kept box with higher priority overlaps it at or above the threshold.
NmsResult nms_reference(const std::vector<BBox>& boxes, const std::vector<double>& scores,
                        double thresh) {
    std::vector<int> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return scores[i] > scores[j]; });
    NmsResult r;
    for (int i : order) {
        bool dead = false;
        for (int k : r.kept) {
            if (iou(boxes[k], boxes[i]) >= thresh) dead = true;
        }
        (dead ? r.suppressed : r.kept).push_back(i);
    }
    return r;
}

}  // namespace

TEST_CASE("bbox construction rejects degenerate boxes") {
    CHECK_THROWS_AS(BBox(0, 0, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(BBox(0, 0, 1, -1), std::invalid_argument);
    CHECK_THROWS_AS(BBox(std::nan(""), 0, 1, 1), std::invalid_argument);
}

TEST_CASE("iou basics") {
    const BBox a(1, 1, 2, 2);
    CHECK(iou(a, a) == doctest::Approx(1.0));
    CHECK(iou(a, BBox(10, 10, 2, 2)) == 0.0);
    // centers (1,1) and (2,2), both 2x2: intersection 1, union 7
    CHECK(iou(a, BBox(2, 2, 2, 2)) == doctest::Approx(1.0 / 7.0));
}

TEST_CASE("iou symmetric and bounded") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const BBox a = random_box(rng), b = random_box(rng);
        const double v = iou(a, b);
        CHECK(v == iou(b, a));
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("giou basics") {
    const BBox a(1, 1, 2, 2);
    CHECK(giou(a, a) == doctest::Approx(1.0));
    // unit boxes at (0.5,0.5) and (2.5,0.5): enclosing 3x1, union 2
    CHECK(giou(BBox(0.5, 0.5, 1, 1), BBox(2.5, 0.5, 1, 1)) == doctest::Approx(-1.0 / 3.0));
}

TEST_CASE("giou decreases monotonically with separation toward -1") {
    double prev = 1.0;
    for (int k = 1; k <= 40; ++k) {
        const double g = giou(BBox(0.5, 0.5, 1, 1), BBox(0.5 + 2.0 * k, 0.5, 1, 1));
        CHECK(g < prev);
        CHECK(g >= -1.0);
        prev = g;
    }
    CHECK(prev == doctest::Approx(-1.0).epsilon(0.05));
}

TEST_CASE("giou never exceeds iou and is symmetric") {
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        const BBox a = random_box(rng), b = random_box(rng);
        CHECK(giou(a, b) <= iou(a, b) + 1e-12);
        CHECK(giou(a, b) == doctest::Approx(giou(b, a)));
    }
}

TEST_CASE("giou gradient matches central finite differences") {
    Rng rng(13);
    const double h = 1e-6;
    for (int i = 0; i < 100; ++i) {
        const BBox a = random_box(rng), b = random_box(rng);
        const auto [value, grad] = giou_with_grad(a, b);
        CHECK(value == doctest::Approx(giou(a, b)));
        Eigen::Vector4d v = a.vec();
        for (int c = 0; c < 4; ++c) {
            Eigen::Vector4d vp = v, vm = v;
            vp[c] += h;
            vm[c] -= h;
            const double num =
                (giou(BBox::from_vec(vp), b) - giou(BBox::from_vec(vm), b)) / (2 * h);
            CHECK(grad[c] == doctest::Approx(num).epsilon(1e-4));
        }
    }
}

TEST_CASE("smooth_l1 values and smoothness at the knee") {
    CHECK(smooth_l1(3.0, 3.0) == 0.0);
    CHECK(smooth_l1(0.5, 0.0) == doctest::Approx(0.125));
    CHECK(smooth_l1(2.0, 0.0) == doctest::Approx(1.5));
    // both branches meet at |d| = 1 with value 0.5 and slope 1
    CHECK(smooth_l1(1.0 - 1e-9, 0.0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(smooth_l1(1.0 + 1e-9, 0.0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(smooth_l1_grad(1.0, 0.0) == doctest::Approx(1.0));
    CHECK(smooth_l1_grad(-1.0, 0.0) == doctest::Approx(-1.0));
    CHECK(smooth_l1_grad(0.3, 0.0) == doctest::Approx(0.3));
}

TEST_CASE("nms trivial cases") {
    SUBCASE("single box kept") {
        const auto r = nms({BBox(0.5, 0.5, 0.2, 0.2)}, {0.9}, 0.5);
        CHECK(r.kept == std::vector<int>{0});
        CHECK(r.suppressed.empty());
    }
    SUBCASE("duplicate suppressed") {
        const BBox b(0.5, 0.5, 0.2, 0.2);
        const auto r = nms({b, b}, {0.9, 0.8}, 0.5);
        CHECK(r.kept == std::vector<int>{0});
        CHECK(r.suppressed == std::vector<int>{1});
    }
    SUBCASE("empty input") {
        const auto r = nms({}, {}, 0.5);
        CHECK(r.kept.empty());
        CHECK(r.suppressed.empty());
    }
    SUBCASE("score tie broken by lower index") {
        const BBox b(0.5, 0.5, 0.2, 0.2);
        const auto r = nms({b, b}, {0.7, 0.7}, 0.5);
        CHECK(r.kept == std::vector<int>{0});
    }
}

TEST_CASE("nms matches exhaustive reference on random instances") {
    Rng rng(14);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<BBox> boxes;
        std::vector<double> scores;
        for (int i = 0; i < 8; ++i) {
            boxes.push_back(random_box(rng));
            scores.push_back(rng.uniform(0.0, 1.0));
        }
        const auto got = nms(boxes, scores, 0.4);
        const auto want = nms_reference(boxes, scores, 0.4);
        CHECK(got.kept == want.kept);
        // partition property
        CHECK(got.kept.size() + got.suppressed.size() == boxes.size());
        for (std::size_t i = 0; i < got.kept.size(); ++i) {
            for (std::size_t j = i + 1; j < got.kept.size(); ++j) {
                CHECK(iou(boxes[got.kept[i]], boxes[got.kept[j]]) < 0.4);
            }
        }
    }
}
