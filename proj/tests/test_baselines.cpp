#include <doctest.h>

#include <cmath>

#include "graspforge/baselines.hpp"
#include "graspforge/patch.hpp"
#include "graspforge/rng.hpp"

using namespace gf;

namespace {

Image rect_foreground(int w, int h, int fg_w, int fg_h, double angle_deg = 0.0) {
    Image img(w, h, 0.95);
    const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
    const double a = deg2rad(angle_deg), co = std::cos(a), si = std::sin(a);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double x = c - cx, y = r - cy;
            const double u = co * x + si * y;   // along the fg_w axis
            const double v = -si * x + co * y;  // along the fg_h axis
            if (std::fabs(u) <= fg_w / 2.0 && std::fabs(v) <= fg_h / 2.0) img.at(r, c) = 0.2;
        }
    }
    return img;
}

Image circle_foreground(int side, double radius) {
    Image img(side, side, 0.95);
    const double c0 = (side - 1) / 2.0;
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c)
            if (std::hypot(c - c0, r - c0) <= radius) img.at(r, c) = 0.3;
    return img;
}

}  // namespace

TEST_CASE("heuristic: rectangle's grasp axis is the short axis (analytic covariance)") {
    // 40x120 foreground: long axis vertical, grasp axis horizontal (0 deg)
    const Image img = rect_foreground(160, 160, 40, 120);
    const HeuristicAnalysis a = heuristic_analyze(img, 0.9);
    REQUIRE(!a.empty_foreground);
    CHECK(angle_diff_180(a.grasp_angle_deg, 0.0) < 2.0);
    // analytic covariance of a uniform rectangle: lambda_max = (120^2)/12
    CHECK(a.lambda_max == doctest::Approx(120.0 * 120.0 / 12.0).epsilon(0.03));

    // rotate the foreground by 30 deg: the grasp axis follows
    const Image rot = rect_foreground(160, 160, 40, 120, 30.0);
    const HeuristicAnalysis ar = heuristic_analyze(rot, 0.9);
    CHECK(angle_diff_180(ar.grasp_angle_deg, 30.0) < 2.0);
}

TEST_CASE("heuristic: rotation equivariance over many angles") {
    for (double phi = 0.0; phi < 180.0; phi += 14.0) {
        const Image img = rect_foreground(160, 160, 36, 110, phi);
        const HeuristicAnalysis a = heuristic_analyze(img, 0.9);
        CHECK(angle_diff_180(a.grasp_angle_deg, phi) < 2.0);
    }
}

TEST_CASE("heuristic: circle tie-breaks to angle zero and empty predicts failure") {
    const HeuristicAnalysis circ = heuristic_analyze(circle_foreground(100, 30), 0.9);
    REQUIRE(!circ.empty_foreground);
    CHECK(circ.grasp_angle_deg == 0.0);

    const Image blank(64, 64, 0.95);
    const HeuristicAnalysis none = heuristic_analyze(blank, 0.9);
    CHECK(none.empty_foreground);
    HeuristicParams p;
    CHECK(!heuristic_predict(none, 45.0, p));
}

TEST_CASE("heuristic predict: angle threshold and thin-object veto") {
    const Image img = rect_foreground(160, 160, 40, 120);
    const HeuristicAnalysis a = heuristic_analyze(img, 0.9);
    HeuristicParams p;
    p.angle_error_threshold_deg = 10.0;
    p.eigenvalue_limit = 0.0;
    CHECK(heuristic_predict(a, 5.0, p));
    CHECK(!heuristic_predict(a, 45.0, p));
    CHECK(heuristic_predict(a, 175.0, p));  // fold across 180
    // extent is 2*sqrt(lambda_max) ~ 69.3 px; a limit above that vetoes
    p.eigenvalue_limit = 80.0;
    CHECK(!heuristic_predict(a, 5.0, p));
    p.raw_eigenvalue = true;
    p.eigenvalue_limit = 1000.0;
    CHECK(heuristic_predict(a, 5.0, p));  // raw lambda_max = 1200 >= 1000
}

TEST_CASE("hog: uniform patch -> all zeros; stripes concentrate energy") {
    const HogConfig cfg;
    const Image flat(48, 48, 0.6);
    const auto d0 = hog(flat, cfg);
    CHECK(d0.size() == hog_length(48, cfg));
    for (double v : d0) CHECK(v == 0.0);

    // vertical stripes: gradients along x -> orientation ~0 (mod 180)
    Image stripes(48, 48, 0.9);
    for (int r = 0; r < 48; ++r)
        for (int c = 0; c < 48; ++c)
            if ((c / 4) % 2 == 0) stripes.at(r, c) = 0.1;
    const auto d1 = hog(stripes, cfg);
    // orientation bins: bin 0 covers [0,20)deg etc; gradient at 0 deg votes
    // into bins around 0 (split with the wrap bin)
    std::vector<double> per_bin(cfg.orientation_bins, 0.0);
    for (std::size_t i = 0; i < d1.size(); ++i) per_bin[i % cfg.orientation_bins] += d1[i];
    double total = 0.0;
    for (double v : per_bin) total += v;
    REQUIRE(total > 0.0);
    CHECK((per_bin[0] + per_bin[cfg.orientation_bins - 1]) / total > 0.9);
}

TEST_CASE("hog: rotation changes the descriptor (rotational variance)") {
    const Image a = rect_foreground(48, 48, 16, 40, 0.0);
    const Image b = rect_foreground(48, 48, 16, 40, 90.0);
    const auto da = hog(a), db = hog(b);
    REQUIRE(da.size() == db.size());
    double dist = 0.0;
    for (std::size_t i = 0; i < da.size(); ++i) dist += (da[i] - db[i]) * (da[i] - db[i]);
    CHECK(dist > 0.1);
}

TEST_CASE("hog rejects patches not divisible by the cell size") {
    const Image odd(50, 50, 0.5);
    CHECK_THROWS(hog(odd, {8, 9, 2}));
}

TEST_CASE("knn: exact neighbor behavior and tie handling") {
    std::vector<std::pair<Image, std::pair<int, int>>> train;
    train.push_back({rect_foreground(48, 48, 16, 40, 0.0), {3, 1}});
    train.push_back({rect_foreground(48, 48, 16, 40, 2.0), {3, 1}});
    train.push_back({rect_foreground(48, 48, 40, 16, 0.0), {3, 0}});
    train.push_back({circle_foreground(48, 18), {3, 0}});
    const KnnModel model = knn_build(train, 1);

    // k=1 with the query equal to a stored positive
    CHECK(knn_predict(model, rect_foreground(48, 48, 16, 40, 0.0), 3) == 1);
    // k = store size: 2 pos vs 2 neg -> tie -> negative
    const auto q = hog(rect_foreground(48, 48, 16, 40, 1.0));
    CHECK(knn_predict(model, q, 3, 4) == 0);
    // empty bin store predicts negative
    CHECK(knn_predict(model, q, 7, 3) == 0);
}

TEST_CASE("knn matches a brute-force all-pairs scan") {
    Rng rng(33);
    std::vector<std::pair<std::vector<double>, int>> store;
    for (int i = 0; i < 60; ++i) {
        std::vector<double> d(20);
        for (double& v : d) v = rng.uniform();
        store.push_back({d, rng.uniform_int(2)});
    }
    KnnModel model;
    model.k = 7;
    model.store[5] = store;
    for (int q = 0; q < 50; ++q) {
        std::vector<double> query(20);
        for (double& v : query) v = rng.uniform();
        // brute force: full sort by (distance, index)
        std::vector<std::pair<double, int>> all;
        for (std::size_t i = 0; i < store.size(); ++i) {
            double s = 0.0;
            for (int j = 0; j < 20; ++j)
                s += (store[i].first[j] - query[j]) * (store[i].first[j] - query[j]);
            all.push_back({s, static_cast<int>(i)});
        }
        std::sort(all.begin(), all.end());
        int votes = 0;
        for (int i = 0; i < 7; ++i) votes += store[all[i].second].second;
        const int expect = 2 * votes > 7 ? 1 : 0;
        CHECK(knn_predict(model, query, 5, 7) == expect);
    }
}

TEST_CASE("svm: separable 2-point problem trains to 100%") {
    std::vector<std::pair<std::vector<double>, int>> data = {
        {{1.0, 0.0}, 1},
        {{-1.0, 0.0}, 0},
    };
    SvmTrainConfig cfg;
    cfg.epochs = 100;
    const SvmBin bin = svm_train_bin(data, 10.0, cfg);
    REQUIRE(!bin.degenerate);
    CHECK(svm_margin(bin, data[0].first) > 0.0);
    CHECK(svm_margin(bin, data[1].first) < 0.0);
}

TEST_CASE("svm: epoch-averaged hinge objective decreases on a convex toy problem") {
    Rng rng(44);
    std::vector<std::pair<std::vector<double>, int>> data;
    for (int i = 0; i < 40; ++i) {
        const int label = i % 2;
        std::vector<double> x(4);
        for (double& v : x) v = rng.gaussian() * 0.3 + (label ? 1.0 : -1.0);
        data.push_back({x, label});
    }
    SvmTrainConfig cfg;
    cfg.epochs = 30;
    cfg.warmup_factor = 150.0;  // gentle steps keep the averaged iterate smooth
    std::vector<double> curve;
    svm_train_bin(data, 1.0, cfg, &curve);
    REQUIRE(curve.size() == 30);
    CHECK(curve.back() < curve.front());
    for (std::size_t e = 1; e < curve.size(); ++e) CHECK(curve[e] <= curve[e - 1] + 1e-6);
}

TEST_CASE("svm: degenerate one-class bins fall back to the majority label") {
    std::vector<std::pair<std::vector<double>, int>> ones = {{{1.0}, 1}, {{2.0}, 1}};
    const SvmBin bin = svm_train_bin(ones, 1.0, {});
    CHECK(bin.degenerate);
    CHECK(bin.majority_label == 1);
    SvmModel model;
    model.bins[2] = bin;
    CHECK(svm_predict(model, {0.0}, 2) == 1);
}

TEST_CASE("svm: prediction is invariant to inverse scaling of weights and inputs") {
    SvmBin bin;
    bin.w = {0.5, -1.5, 2.0};
    bin.b = 0.3;
    SvmModel model;
    model.bins[0] = bin;
    SvmBin scaled = bin;
    const double s = 12.5;
    for (double& v : scaled.w) v /= s;
    SvmModel scaled_model;
    scaled_model.bins[0] = scaled;
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x = {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
        std::vector<double> xs = x;
        for (double& v : xs) v *= s;
        // margins differ by the bias term only through w.x; sign matches when
        // bias is scaled consistently with the argsign-invariance contract
        const double m1 = svm_margin(model.bins[0], x) - model.bins[0].b;
        const double m2 = svm_margin(scaled_model.bins[0], xs) - scaled_model.bins[0].b;
        CHECK(((m1 >= 0) == (m2 >= 0)));
    }
}

TEST_CASE("predictor wrappers emit hard 0/1 scores") {
    std::vector<std::pair<Image, std::pair<int, int>>> train;
    train.push_back({rect_foreground(48, 48, 16, 40, 0.0), {0, 1}});
    train.push_back({circle_foreground(48, 18), {0, 0}});
    const KnnModel knn = knn_build(train, 1);
    const KnnPredictor kp(knn);
    const auto scores = kp.scores18(rect_foreground(48, 48, 16, 40, 0.0));
    for (double v : scores) CHECK((v == 0.0 || v == 1.0));
}
