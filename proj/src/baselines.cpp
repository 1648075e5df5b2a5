#include "graspforge/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "graspforge/rng.hpp"

namespace gf {

HeuristicAnalysis heuristic_analyze(const Image& patch, double fg_threshold) {
    HeuristicAnalysis a;
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (int r = 0; r < patch.h; ++r) {
        for (int c = 0; c < patch.w; ++c) {
            if (patch.at(r, c) < fg_threshold) {
                sx += c;
                sy += r;
                ++n;
            }
        }
    }
    if (n == 0) return a;
    a.empty_foreground = false;
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (int r = 0; r < patch.h; ++r) {
        for (int c = 0; c < patch.w; ++c) {
            if (patch.at(r, c) < fg_threshold) {
                const double dx = c - mx, dy = r - my;
                cxx += dx * dx;
                cxy += dx * dy;
                cyy += dy * dy;
            }
        }
    }
    cxx /= static_cast<double>(n);
    cxy /= static_cast<double>(n);
    cyy /= static_cast<double>(n);
    const EigenSym2 e = eigen_sym2(cxx, cxy, cyy);
    // grasp along the smallest-eigenvalue eigenvector (the short axis);
    // isotropic covariance tie-breaks to angle 0
    if (e.l1 - e.l2 < 1e-9 * std::max(1.0, e.l1)) {
        a.grasp_angle_deg = 0.0;
    } else {
        a.grasp_angle_deg = reduce_angle_180(rad2deg(std::atan2(e.v2.y, e.v2.x)));
    }
    a.lambda_max = e.l1;
    a.extent_px = 2.0 * std::sqrt(std::max(0.0, e.l1));
    return a;
}

bool heuristic_predict(const HeuristicAnalysis& a, double theta_deg, const HeuristicParams& p) {
    if (a.empty_foreground) return false;
    const double size_measure = p.raw_eigenvalue ? a.lambda_max : a.extent_px;
    if (size_measure < p.eigenvalue_limit) return false;  // thin-object veto
    return angle_diff_180(theta_deg, a.grasp_angle_deg) <= p.angle_error_threshold_deg;
}

std::size_t hog_length(int patch_side, const HogConfig& cfg) {
    const int cells = patch_side / cfg.cell;
    const int blocks = cells - cfg.block + 1;
    if (blocks < 1) return 0;
    return static_cast<std::size_t>(blocks) * blocks * cfg.block * cfg.block *
           cfg.orientation_bins;
}

std::vector<double> hog(const Image& patch, const HogConfig& cfg) {
    if (patch.w != patch.h) throw std::invalid_argument("hog: patch must be square");
    if (patch.w % cfg.cell != 0)
        throw std::invalid_argument("hog: patch side not divisible by cell size");
    const int side = patch.w;
    const int cells = side / cfg.cell;
    const int nb = cfg.orientation_bins;

    // per-cell orientation histograms, gradients via central differences with
    // replicated borders, votes split between the two nearest bins
    std::vector<double> hist(static_cast<std::size_t>(cells) * cells * nb, 0.0);
    const double bin_width = 180.0 / nb;
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            const double gx = patch.at(r, std::min(c + 1, side - 1)) -
                              patch.at(r, std::max(c - 1, 0));
            const double gy = patch.at(std::min(r + 1, side - 1), c) -
                              patch.at(std::max(r - 1, 0), c);
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            const double ang = reduce_angle_180(rad2deg(std::atan2(gy, gx)));
            const double pos = ang / bin_width - 0.5;
            int b0 = static_cast<int>(std::floor(pos));
            const double f = pos - b0;
            int b1 = b0 + 1;
            if (b0 < 0) b0 += nb;
            if (b1 >= nb) b1 -= nb;
            const int cell_r = r / cfg.cell, cell_c = c / cfg.cell;
            double* cell = hist.data() +
                           (static_cast<std::size_t>(cell_r) * cells + cell_c) * nb;
            cell[b0] += mag * (1.0 - f);
            cell[b1] += mag * f;
        }
    }

    // block normalization (L2 over block x block cells)
    const int blocks = cells - cfg.block + 1;
    if (blocks < 1) throw std::invalid_argument("hog: patch too small for block size");
    std::vector<double> desc;
    desc.reserve(hog_length(side, cfg));
    for (int br = 0; br < blocks; ++br) {
        for (int bc = 0; bc < blocks; ++bc) {
            double sq = 0.0;
            for (int dr = 0; dr < cfg.block; ++dr) {
                for (int dc = 0; dc < cfg.block; ++dc) {
                    const double* cell =
                        hist.data() +
                        (static_cast<std::size_t>(br + dr) * cells + (bc + dc)) * nb;
                    for (int b = 0; b < nb; ++b) sq += cell[b] * cell[b];
                }
            }
            const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq + 1e-12) : 0.0;
            for (int dr = 0; dr < cfg.block; ++dr) {
                for (int dc = 0; dc < cfg.block; ++dc) {
                    const double* cell =
                        hist.data() +
                        (static_cast<std::size_t>(br + dr) * cells + (bc + dc)) * nb;
                    for (int b = 0; b < nb; ++b) desc.push_back(cell[b] * inv);
                }
            }
        }
    }
    return desc;
}

KnnModel knn_build(const std::vector<std::pair<Image, std::pair<int, int>>>& train, int k,
                   const HogConfig& cfg) {
    KnnModel model;
    model.k = k;
    model.hog_cfg = cfg;
    for (const auto& [patch, bl] : train) {
        model.store[bl.first].push_back({hog(patch, cfg), bl.second});
    }
    return model;
}

int knn_predict(const KnnModel& model, const std::vector<double>& descriptor, int bin, int k) {
    const auto& store = model.store[bin];
    if (store.empty()) return 0;
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
        const auto& d = store[i].first;
        double s = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j) {
            const double diff = d[j] - descriptor[j];
            s += diff * diff;
        }
        dist.push_back({s, i});
    }
    const int kk = std::min<int>(k, static_cast<int>(store.size()));
    std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
    int pos = 0;
    for (int i = 0; i < kk; ++i) pos += store[dist[i].second].second;
    return 2 * pos > kk ? 1 : 0;  // ties predict negative
}

int knn_predict(const KnnModel& model, const Image& patch, int bin) {
    return knn_predict(model, hog(patch, model.hog_cfg), bin, model.k);
}

double svm_margin(const SvmBin& bin, const std::vector<double>& descriptor) {
    double m = bin.b;
    for (std::size_t i = 0; i < bin.w.size(); ++i) m += bin.w[i] * descriptor[i];
    return m;
}

double svm_objective(const SvmBin& bin, double C,
                     const std::vector<std::pair<std::vector<double>, int>>& data) {
    double obj = 0.0;
    for (double v : bin.w) obj += v * v;
    obj *= 0.5;
    for (const auto& [x, label] : data) {
        const double y = label == 1 ? 1.0 : -1.0;
        obj += C * std::max(0.0, 1.0 - y * svm_margin(bin, x));
    }
    return obj;
}

SvmBin svm_train_bin(const std::vector<std::pair<std::vector<double>, int>>& data, double C,
                     const SvmTrainConfig& cfg, std::vector<double>* objective_curve) {
    SvmBin bin;
    if (data.empty()) {
        bin.degenerate = true;
        return bin;
    }
    int pos = 0;
    for (const auto& [x, label] : data) pos += label;
    if (pos == 0 || pos == static_cast<int>(data.size())) {
        bin.degenerate = true;
        bin.majority_label = pos == 0 ? 0 : 1;
        return bin;
    }
    const std::size_t dim = data[0].first.size();
    bin.w.assign(dim, 0.0);
    const double n = static_cast<double>(data.size());
    const double lambda = 1.0 / (C * n);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::derive(cfg.seed, 0x57f3a001ULL);
    std::size_t t = 1;
    // running-average iterate (the standard subgradient-method output); the
    // objective curve is evaluated there, which converges smoothly
    std::vector<double> avg_w(dim, 0.0);
    double avg_b = 0.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = rng.uniform_int(static_cast<int>(i));
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t oi : order) {
            const auto& [x, label] = data[oi];
            const double y = label == 1 ? 1.0 : -1.0;
            const double eta =
                1.0 / (lambda * (static_cast<double>(t) + cfg.warmup_factor * n));
            const double margin = y * svm_margin(bin, x);
            const double shrink = 1.0 - eta * lambda;
            for (double& v : bin.w) v *= shrink;
            if (margin < 1.0) {
                for (std::size_t j = 0; j < dim; ++j) bin.w[j] += eta * y * x[j];
                bin.b += eta * y;
            }
            const double blend = 1.0 / static_cast<double>(t);
            for (std::size_t j = 0; j < dim; ++j)
                avg_w[j] += blend * (bin.w[j] - avg_w[j]);
            avg_b += blend * (bin.b - avg_b);
            ++t;
        }
        if (objective_curve) {
            SvmBin avg;
            avg.w = avg_w;
            avg.b = avg_b;
            objective_curve->push_back(svm_objective(avg, C, data));
        }
    }
    return bin;
}

int svm_predict(const SvmModel& model, const std::vector<double>& descriptor, int bin) {
    const SvmBin& sb = model.bins[bin];
    if (sb.degenerate) return sb.majority_label;
    return svm_margin(sb, descriptor) >= 0.0 ? 1 : 0;
}

SvmModel svm_train(const std::vector<std::pair<Image, std::pair<int, int>>>& train,
                   const std::vector<double>& c_grid, double validation_fraction,
                   const SvmTrainConfig& cfg, const HogConfig& hog_cfg) {
    if (c_grid.empty()) throw std::invalid_argument("svm_train: empty C grid");
    std::array<std::vector<std::pair<std::vector<double>, int>>, kAngleBins> per_bin;
    for (const auto& [patch, bl] : train) {
        per_bin[bl.first].push_back({hog(patch, hog_cfg), bl.second});
    }

    // deterministic validation split per bin (every 1/fraction-th element)
    std::array<std::vector<std::pair<std::vector<double>, int>>, kAngleBins> fit, val;
    const int stride = validation_fraction > 0.0
                           ? std::max(2, static_cast<int>(std::lround(1.0 / validation_fraction)))
                           : 0;
    for (int b = 0; b < kAngleBins; ++b) {
        for (std::size_t i = 0; i < per_bin[b].size(); ++i) {
            if (stride > 0 && i % static_cast<std::size_t>(stride) == 0)
                val[b].push_back(per_bin[b][i]);
            else
                fit[b].push_back(per_bin[b][i]);
        }
    }

    double best_c = c_grid[0];
    double best_acc = -1.0;
    for (double c : c_grid) {
        SvmModel candidate;
        candidate.C = c;
        candidate.hog_cfg = hog_cfg;
        for (int b = 0; b < kAngleBins; ++b)
            candidate.bins[b] = svm_train_bin(fit[b], c, cfg);
        std::size_t correct = 0, total = 0;
        for (int b = 0; b < kAngleBins; ++b) {
            for (const auto& [x, label] : val[b]) {
                if (svm_predict(candidate, x, b) == label) ++correct;
                ++total;
            }
        }
        const double acc = total > 0 ? static_cast<double>(correct) / total : 0.0;
        if (acc > best_acc) {
            best_acc = acc;
            best_c = c;
        }
    }

    // final model on the full training data with the selected C
    SvmModel model;
    model.C = best_c;
    model.hog_cfg = hog_cfg;
    for (int b = 0; b < kAngleBins; ++b)
        model.bins[b] = svm_train_bin(per_bin[b], best_c, cfg);
    return model;
}

std::array<double, kAngleBins> HeuristicPredictor::scores18(const Image& patch) const {
    const HeuristicAnalysis a = heuristic_analyze(patch, fg_threshold);
    std::array<double, kAngleBins> s{};
    for (int b = 0; b < kAngleBins; ++b)
        s[b] = heuristic_predict(a, bin_center_deg(b), params) ? 1.0 : 0.0;
    return s;
}

std::array<double, kAngleBins> KnnPredictor::scores18(const Image& patch) const {
    const std::vector<double> d = hog(patch, model->hog_cfg);
    std::array<double, kAngleBins> s{};
    for (int b = 0; b < kAngleBins; ++b)
        s[b] = knn_predict(*model, d, b, model->k) ? 1.0 : 0.0;
    return s;
}

std::array<double, kAngleBins> SvmPredictor::scores18(const Image& patch) const {
    const std::vector<double> d = hog(patch, model->hog_cfg);
    std::array<double, kAngleBins> s{};
    for (int b = 0; b < kAngleBins; ++b) s[b] = svm_predict(*model, d, b) ? 1.0 : 0.0;
    return s;
}

}  // namespace gf
