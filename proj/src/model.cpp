#include "graspforge/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "graspforge/rng.hpp"

namespace gf {

std::size_t LayerSpec::weight_count() const {
    switch (kind) {
        case LayerKind::Conv:
            return static_cast<std::size_t>(out_c) * in_c * k * k;
        case LayerKind::Linear:
            return static_cast<std::size_t>(out_dim) * in_dim;
        default:
            return 0;
    }
}

std::size_t LayerSpec::bias_count() const {
    switch (kind) {
        case LayerKind::Conv:
            return static_cast<std::size_t>(out_c);
        case LayerKind::Linear:
            return static_cast<std::size_t>(out_dim);
        default:
            return 0;
    }
}

void Architecture::finalize() {
    int c = 1, h = input_side, w = input_side;
    bool flat = false;
    int dim = 0;
    for (LayerSpec& l : trunk) {
        switch (l.kind) {
            case LayerKind::Conv: {
                if (flat) throw std::runtime_error("conv after flatten");
                if (l.in_c != c) throw std::runtime_error("conv in_c mismatch");
                l.in_h = h;
                l.in_w = w;
                l.out_h = (h + 2 * l.pad - l.k) / l.stride + 1;
                l.out_w = (w + 2 * l.pad - l.k) / l.stride + 1;
                if (l.out_h < 1 || l.out_w < 1) throw std::runtime_error("conv output empty");
                l.input_size = c * h * w;
                l.output_size = l.out_c * l.out_h * l.out_w;
                c = l.out_c;
                h = l.out_h;
                w = l.out_w;
                break;
            }
            case LayerKind::Pool: {
                if (flat) throw std::runtime_error("pool after flatten");
                l.in_c = c;
                l.out_c = c;
                l.in_h = h;
                l.in_w = w;
                l.out_h = (h - l.k) / l.stride + 1;
                l.out_w = (w - l.k) / l.stride + 1;
                if (l.out_h < 1 || l.out_w < 1) throw std::runtime_error("pool output empty");
                l.input_size = c * h * w;
                l.output_size = c * l.out_h * l.out_w;
                h = l.out_h;
                w = l.out_w;
                break;
            }
            case LayerKind::Linear: {
                const int in_dim_actual = flat ? dim : c * h * w;
                if (l.in_dim != in_dim_actual)
                    throw std::runtime_error("linear in_dim mismatch: spec " +
                                             std::to_string(l.in_dim) + " vs " +
                                             std::to_string(in_dim_actual));
                l.input_size = in_dim_actual;
                l.output_size = l.out_dim;
                flat = true;
                dim = l.out_dim;
                break;
            }
            case LayerKind::ReLU: {
                l.input_size = flat ? dim : c * h * w;
                l.output_size = l.input_size;
                break;
            }
        }
    }
    trunk_dim = flat ? dim : c * h * w;
}

std::string Architecture::descriptor() const {
    std::ostringstream out;
    out << "arch " << name << "\n";
    out << "input " << input_side << "\n";
    for (const LayerSpec& l : trunk) {
        switch (l.kind) {
            case LayerKind::Conv:
                out << "conv " << l.in_c << " " << l.out_c << " " << l.k << " " << l.stride
                    << " " << l.pad << "\n";
                break;
            case LayerKind::ReLU:
                out << "relu\n";
                break;
            case LayerKind::Pool:
                out << "pool " << l.k << " " << l.stride << "\n";
                break;
            case LayerKind::Linear:
                out << "linear " << l.in_dim << " " << l.out_dim << "\n";
                break;
        }
    }
    out << "heads " << trunk_dim << " " << n_heads << " " << head_logits << "\n";
    return out.str();
}

Architecture Architecture::from_descriptor(const std::string& text) {
    Architecture a;
    a.trunk.clear();
    std::istringstream in(text);
    std::string line;
    int heads_in = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind;
        ls >> kind;
        if (kind == "arch") {
            ls >> a.name;
        } else if (kind == "input") {
            ls >> a.input_side;
        } else if (kind == "conv") {
            LayerSpec l;
            l.kind = LayerKind::Conv;
            ls >> l.in_c >> l.out_c >> l.k >> l.stride >> l.pad;
            a.trunk.push_back(l);
        } else if (kind == "relu") {
            LayerSpec l;
            l.kind = LayerKind::ReLU;
            a.trunk.push_back(l);
        } else if (kind == "pool") {
            LayerSpec l;
            l.kind = LayerKind::Pool;
            ls >> l.k >> l.stride;
            a.trunk.push_back(l);
        } else if (kind == "linear") {
            LayerSpec l;
            l.kind = LayerKind::Linear;
            ls >> l.in_dim >> l.out_dim;
            a.trunk.push_back(l);
        } else if (kind == "heads") {
            ls >> heads_in >> a.n_heads >> a.head_logits;
        } else {
            throw std::runtime_error("unknown descriptor line: " + line);
        }
        if (!ls && kind != "relu") throw std::runtime_error("bad descriptor line: " + line);
    }
    a.finalize();
    if (heads_in >= 0 && heads_in != a.trunk_dim)
        throw std::runtime_error("descriptor heads dim mismatch");
    return a;
}

namespace {

LayerSpec conv_spec(int in_c, int out_c, int k, int stride, int pad) {
    LayerSpec l;
    l.kind = LayerKind::Conv;
    l.in_c = in_c;
    l.out_c = out_c;
    l.k = k;
    l.stride = stride;
    l.pad = pad;
    return l;
}
LayerSpec relu_spec() {
    LayerSpec l;
    l.kind = LayerKind::ReLU;
    return l;
}
LayerSpec pool_spec(int k, int stride) {
    LayerSpec l;
    l.kind = LayerKind::Pool;
    l.k = k;
    l.stride = stride;
    return l;
}
LayerSpec linear_spec(int in_dim, int out_dim) {
    LayerSpec l;
    l.kind = LayerKind::Linear;
    l.in_dim = in_dim;
    l.out_dim = out_dim;
    return l;
}

}  // namespace

Architecture Architecture::desk(int input_side) {
    Architecture a;
    a.name = "desk";
    a.input_side = input_side;
    const int s1 = input_side / 2, s2 = s1 / 2, s3 = s2 / 2;
    a.trunk = {
        conv_spec(1, 8, 3, 1, 1),   relu_spec(), pool_spec(2, 2),
        conv_spec(8, 16, 3, 1, 1),  relu_spec(), pool_spec(2, 2),
        conv_spec(16, 32, 3, 1, 1), relu_spec(), pool_spec(2, 2),
        linear_spec(32 * s3 * s3, 256), relu_spec(),
        linear_spec(256, 64), relu_spec(),
    };
    a.finalize();
    return a;
}

Architecture Architecture::paper_scale() {
    Architecture a;
    a.name = "paper_scale";
    a.input_side = 227;
    a.trunk = {
        conv_spec(1, 96, 11, 4, 0),   relu_spec(), pool_spec(3, 2),
        conv_spec(96, 256, 5, 1, 2),  relu_spec(), pool_spec(3, 2),
        conv_spec(256, 384, 3, 1, 1), relu_spec(),
        conv_spec(384, 384, 3, 1, 1), relu_spec(),
        conv_spec(384, 256, 3, 1, 1), relu_spec(), pool_spec(3, 2),
        linear_spec(256 * 6 * 6, 4096), relu_spec(),
        linear_spec(4096, 1024), relu_spec(),
    };
    a.finalize();
    return a;
}

Architecture Architecture::tiny(int input_side) {
    Architecture a;
    a.name = "tiny";
    a.input_side = input_side;
    const int s1 = input_side / 2;
    a.trunk = {
        conv_spec(1, 4, 3, 1, 1), relu_spec(), pool_spec(2, 2),
        linear_spec(4 * s1 * s1, 16), relu_spec(),
    };
    a.finalize();
    return a;
}

std::size_t ModelParams::param_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < arch.trunk.size(); ++i)
        n += arch.trunk[i].weight_count() + arch.trunk[i].bias_count();
    n += head_w.size() + head_b.size();
    return n;
}

ModelParams init_model(const Architecture& arch, std::uint64_t seed) {
    ModelParams m;
    m.arch = arch;
    if (m.arch.trunk_dim == 0) m.arch.finalize();
    Rng trunk_rng = Rng::derive(seed, rng_tag::kTrunkInit);
    Rng head_rng = Rng::derive(seed, rng_tag::kHeadInit);
    m.w.resize(arch.trunk.size());
    m.b.resize(arch.trunk.size());
    for (std::size_t i = 0; i < m.arch.trunk.size(); ++i) {
        const LayerSpec& l = m.arch.trunk[i];
        m.w[i].resize(l.weight_count());
        m.b[i].assign(l.bias_count(), 0.0);
        double fan_in = 1.0;
        if (l.kind == LayerKind::Conv) fan_in = static_cast<double>(l.in_c) * l.k * l.k;
        if (l.kind == LayerKind::Linear) fan_in = static_cast<double>(l.in_dim);
        const double std = std::sqrt(1.0 / fan_in);
        for (double& v : m.w[i]) v = std * trunk_rng.gaussian();
    }
    const int n_logits = m.arch.n_heads * m.arch.head_logits;
    m.head_w.resize(static_cast<std::size_t>(n_logits) * m.arch.trunk_dim);
    m.head_b.assign(n_logits, 0.0);
    for (double& v : m.head_w) v = 0.01 * head_rng.gaussian();
    return m;
}

void FwdCache::prepare(const Architecture& arch) {
    acts.assign(arch.trunk.size() + 1, {});
    gacts.assign(arch.trunk.size() + 1, {});
    acts[0].resize(static_cast<std::size_t>(arch.input_side) * arch.input_side);
    gacts[0].resize(acts[0].size());
    for (std::size_t i = 0; i < arch.trunk.size(); ++i) {
        acts[i + 1].resize(arch.trunk[i].output_size);
        gacts[i + 1].resize(arch.trunk[i].output_size);
    }
}

void GradBuffer::prepare(const ModelParams& m) {
    w.resize(m.w.size());
    b.resize(m.b.size());
    for (std::size_t i = 0; i < m.w.size(); ++i) {
        w[i].assign(m.w[i].size(), 0.0);
        b[i].assign(m.b[i].size(), 0.0);
    }
    head_w.assign(m.head_w.size(), 0.0);
    head_b.assign(m.head_b.size(), 0.0);
}

void GradBuffer::zero() {
    for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
    std::fill(head_w.begin(), head_w.end(), 0.0);
    std::fill(head_b.begin(), head_b.end(), 0.0);
}

void GradBuffer::add(const GradBuffer& o) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = 0; j < w[i].size(); ++j) w[i][j] += o.w[i][j];
        for (std::size_t j = 0; j < b[i].size(); ++j) b[i][j] += o.b[i][j];
    }
    for (std::size_t j = 0; j < head_w.size(); ++j) head_w[j] += o.head_w[j];
    for (std::size_t j = 0; j < head_b.size(); ++j) head_b[j] += o.head_b[j];
}

double stable_logistic(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double binary_ce(double z0, double z1, int label) {
    const double m = std::max(z0, z1);
    const double lse = m + std::log(std::exp(z0 - m) + std::exp(z1 - m));
    return lse - (label == 1 ? z1 : z0);
}

namespace {

// out[oy][ox] += sum_{ky,kx} k9[ky*3+kx] * in[oy+ky-1][ox+kx-1] over a
// same-size plane (3x3 kernel, stride 1, pad 1); the workhorse of the desk net
void fused_3x3_same(const double* in, double* out, int h, int w, const double* k9) {
    for (int oy = 0; oy < h; ++oy) {
        double* orow = out + static_cast<std::size_t>(oy) * w;
        const double* r0 = oy > 0 ? in + static_cast<std::size_t>(oy - 1) * w : nullptr;
        const double* r1 = in + static_cast<std::size_t>(oy) * w;
        const double* r2 = oy + 1 < h ? in + static_cast<std::size_t>(oy + 1) * w : nullptr;
        if (r0 && r2) {
            const double k0 = k9[0], k1 = k9[1], k2 = k9[2];
            const double k3 = k9[3], k4 = k9[4], k5 = k9[5];
            const double k6 = k9[6], k7 = k9[7], k8 = k9[8];
            for (int ox = 1; ox + 1 < w; ++ox) {
                orow[ox] += k0 * r0[ox - 1] + k1 * r0[ox] + k2 * r0[ox + 1] +
                            k3 * r1[ox - 1] + k4 * r1[ox] + k5 * r1[ox + 1] +
                            k6 * r2[ox - 1] + k7 * r2[ox] + k8 * r2[ox + 1];
            }
        } else {
            for (int ox = 1; ox + 1 < w; ++ox) {
                double acc = k9[3] * r1[ox - 1] + k9[4] * r1[ox] + k9[5] * r1[ox + 1];
                if (r0) acc += k9[0] * r0[ox - 1] + k9[1] * r0[ox] + k9[2] * r0[ox + 1];
                if (r2) acc += k9[6] * r2[ox - 1] + k9[7] * r2[ox] + k9[8] * r2[ox + 1];
                orow[ox] += acc;
            }
        }
        auto edge = [&](int ox) {
            double acc = 0.0;
            for (int ky = 0; ky < 3; ++ky) {
                const double* r = ky == 0 ? r0 : (ky == 1 ? r1 : r2);
                if (!r) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int ix = ox + kx - 1;
                    if (ix < 0 || ix >= w) continue;
                    acc += k9[ky * 3 + kx] * r[ix];
                }
            }
            orow[ox] += acc;
        };
        edge(0);
        if (w > 1) edge(w - 1);
    }
}

// acc9[ky*3+kx] += sum_{oy,ox} gout[oy][ox] * in[oy+ky-1][ox+kx-1]
void fused_3x3_weight_grad(const double* in, const double* gout, int h, int w, double* acc9) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0, a7 = 0, a8 = 0;
    for (int oy = 0; oy < h; ++oy) {
        const double* g = gout + static_cast<std::size_t>(oy) * w;
        const double* r0 = oy > 0 ? in + static_cast<std::size_t>(oy - 1) * w : nullptr;
        const double* r1 = in + static_cast<std::size_t>(oy) * w;
        const double* r2 = oy + 1 < h ? in + static_cast<std::size_t>(oy + 1) * w : nullptr;
        if (r0 && r2) {
            for (int ox = 1; ox + 1 < w; ++ox) {
                const double gv = g[ox];
                a0 += gv * r0[ox - 1];
                a1 += gv * r0[ox];
                a2 += gv * r0[ox + 1];
                a3 += gv * r1[ox - 1];
                a4 += gv * r1[ox];
                a5 += gv * r1[ox + 1];
                a6 += gv * r2[ox - 1];
                a7 += gv * r2[ox];
                a8 += gv * r2[ox + 1];
            }
        } else {
            for (int ox = 1; ox + 1 < w; ++ox) {
                const double gv = g[ox];
                a3 += gv * r1[ox - 1];
                a4 += gv * r1[ox];
                a5 += gv * r1[ox + 1];
                if (r0) {
                    a0 += gv * r0[ox - 1];
                    a1 += gv * r0[ox];
                    a2 += gv * r0[ox + 1];
                }
                if (r2) {
                    a6 += gv * r2[ox - 1];
                    a7 += gv * r2[ox];
                    a8 += gv * r2[ox + 1];
                }
            }
        }
        auto edge_col = [&](int ox) {
            const double gv = g[ox];
            double* accs[9] = {&a0, &a1, &a2, &a3, &a4, &a5, &a6, &a7, &a8};
            for (int ky = 0; ky < 3; ++ky) {
                const double* r = ky == 0 ? r0 : (ky == 1 ? r1 : r2);
                if (!r) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    const int ix = ox + kx - 1;
                    if (ix < 0 || ix >= w) continue;
                    *accs[ky * 3 + kx] += gv * r[ix];
                }
            }
        };
        edge_col(0);
        if (w > 1) edge_col(w - 1);
    }
    acc9[0] += a0;
    acc9[1] += a1;
    acc9[2] += a2;
    acc9[3] += a3;
    acc9[4] += a4;
    acc9[5] += a5;
    acc9[6] += a6;
    acc9[7] += a7;
    acc9[8] += a8;
}

bool conv_is_fused_3x3(const LayerSpec& l) {
    return l.k == 3 && l.stride == 1 && l.pad == 1 && l.out_h == l.in_h && l.out_w == l.in_w;
}

void conv_forward(const LayerSpec& l, const double* w, const double* b, const double* in,
                  double* out) {
    const int oh = l.out_h, ow = l.out_w, ih = l.in_h, iw = l.in_w;
    if (conv_is_fused_3x3(l)) {
        for (int oc = 0; oc < l.out_c; ++oc) {
            double* oplane = out + static_cast<std::size_t>(oc) * oh * ow;
            std::fill(oplane, oplane + static_cast<std::size_t>(oh) * ow, b[oc]);
            for (int ic = 0; ic < l.in_c; ++ic) {
                fused_3x3_same(in + static_cast<std::size_t>(ic) * ih * iw, oplane, ih, iw,
                               w + ((static_cast<std::size_t>(oc) * l.in_c + ic) * 9));
            }
        }
        return;
    }
    for (int oc = 0; oc < l.out_c; ++oc) {
        double* oplane = out + static_cast<std::size_t>(oc) * oh * ow;
        std::fill(oplane, oplane + static_cast<std::size_t>(oh) * ow, b[oc]);
        for (int ic = 0; ic < l.in_c; ++ic) {
            const double* iplane = in + static_cast<std::size_t>(ic) * ih * iw;
            const double* wbase =
                w + ((static_cast<std::size_t>(oc) * l.in_c + ic) * l.k) * l.k;
            for (int ky = 0; ky < l.k; ++ky) {
                const double* wrow = wbase + static_cast<std::size_t>(ky) * l.k;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * l.stride + ky - l.pad;
                    if (iy < 0 || iy >= ih) continue;
                    const double* irow = iplane + static_cast<std::size_t>(iy) * iw;
                    double* orow = oplane + static_cast<std::size_t>(oy) * ow;
                    for (int kx = 0; kx < l.k; ++kx) {
                        const double wv = wrow[kx];
                        if (l.stride == 1) {
                            const int xlo = std::max(0, l.pad - kx);
                            const int xhi = std::min(ow - 1, iw - 1 + l.pad - kx);
                            const double* ir = irow + xlo + kx - l.pad;
                            double* orp = orow + xlo;
                            const int n = xhi - xlo + 1;
                            for (int x = 0; x < n; ++x) orp[x] += wv * ir[x];
                        } else {
                            for (int ox = 0; ox < ow; ++ox) {
                                const int ix = ox * l.stride + kx - l.pad;
                                if (ix >= 0 && ix < iw) orow[ox] += wv * irow[ix];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv_backward(const LayerSpec& l, const double* w, const double* in, const double* gout,
                   double* gw, double* gb, double* gin) {
    const int oh = l.out_h, ow = l.out_w, ih = l.in_h, iw = l.in_w;
    std::fill(gin, gin + static_cast<std::size_t>(l.in_c) * ih * iw, 0.0);
    if (conv_is_fused_3x3(l)) {
        for (int oc = 0; oc < l.out_c; ++oc) {
            const double* gplane = gout + static_cast<std::size_t>(oc) * oh * ow;
            double acc = 0.0;
            for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i)
                acc += gplane[i];
            gb[oc] += acc;
            for (int ic = 0; ic < l.in_c; ++ic) {
                const std::size_t wb = (static_cast<std::size_t>(oc) * l.in_c + ic) * 9;
                fused_3x3_weight_grad(in + static_cast<std::size_t>(ic) * ih * iw, gplane, ih,
                                      iw, gw + wb);
                // d(in) uses the flipped kernel gathered over gout
                double flipped[9];
                for (int t = 0; t < 9; ++t) flipped[t] = w[wb + 8 - t];
                fused_3x3_same(gplane, gin + static_cast<std::size_t>(ic) * ih * iw, ih, iw,
                               flipped);
            }
        }
        return;
    }
    for (int oc = 0; oc < l.out_c; ++oc) {
        const double* gplane = gout + static_cast<std::size_t>(oc) * oh * ow;
        double acc = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) acc += gplane[i];
        gb[oc] += acc;
        for (int ic = 0; ic < l.in_c; ++ic) {
            const double* iplane = in + static_cast<std::size_t>(ic) * ih * iw;
            double* giplane = gin + static_cast<std::size_t>(ic) * ih * iw;
            const std::size_t wb = ((static_cast<std::size_t>(oc) * l.in_c + ic) * l.k) * l.k;
            for (int ky = 0; ky < l.k; ++ky) {
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * l.stride + ky - l.pad;
                    if (iy < 0 || iy >= ih) continue;
                    const double* irow = iplane + static_cast<std::size_t>(iy) * iw;
                    double* girow = giplane + static_cast<std::size_t>(iy) * iw;
                    const double* grow = gplane + static_cast<std::size_t>(oy) * ow;
                    for (int kx = 0; kx < l.k; ++kx) {
                        const double wv = w[wb + static_cast<std::size_t>(ky) * l.k + kx];
                        double gwacc = 0.0;
                        if (l.stride == 1) {
                            const int xlo = std::max(0, l.pad - kx);
                            const int xhi = std::min(ow - 1, iw - 1 + l.pad - kx);
                            const double* ir = irow + xlo + kx - l.pad;
                            double* gir = girow + xlo + kx - l.pad;
                            const double* gr = grow + xlo;
                            const int n = xhi - xlo + 1;
                            for (int x = 0; x < n; ++x) {
                                gwacc += gr[x] * ir[x];
                                gir[x] += wv * gr[x];
                            }
                        } else {
                            for (int ox = 0; ox < ow; ++ox) {
                                const int ix = ox * l.stride + kx - l.pad;
                                if (ix >= 0 && ix < iw) {
                                    gwacc += grow[ox] * irow[ix];
                                    girow[ix] += wv * grow[ox];
                                }
                            }
                        }
                        gw[wb + static_cast<std::size_t>(ky) * l.k + kx] += gwacc;
                    }
                }
            }
        }
    }
}

void pool_forward(const LayerSpec& l, const double* in, double* out) {
    const int oh = l.out_h, ow = l.out_w, ih = l.in_h, iw = l.in_w;
    for (int c = 0; c < l.in_c; ++c) {
        const double* iplane = in + static_cast<std::size_t>(c) * ih * iw;
        double* oplane = out + static_cast<std::size_t>(c) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const int y0 = oy * l.stride, x0 = ox * l.stride;
                double best = iplane[static_cast<std::size_t>(y0) * iw + x0];
                for (int ky = 0; ky < l.k; ++ky) {
                    for (int kx = 0; kx < l.k; ++kx) {
                        const double v = iplane[static_cast<std::size_t>(y0 + ky) * iw + x0 + kx];
                        if (v > best) best = v;
                    }
                }
                oplane[static_cast<std::size_t>(oy) * ow + ox] = best;
            }
        }
    }
}

void pool_backward(const LayerSpec& l, const double* in, const double* gout, double* gin) {
    const int oh = l.out_h, ow = l.out_w, ih = l.in_h, iw = l.in_w;
    std::fill(gin, gin + static_cast<std::size_t>(l.in_c) * ih * iw, 0.0);
    for (int c = 0; c < l.in_c; ++c) {
        const double* iplane = in + static_cast<std::size_t>(c) * ih * iw;
        double* giplane = gin + static_cast<std::size_t>(c) * ih * iw;
        const double* gplane = gout + static_cast<std::size_t>(c) * oh * ow;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const int y0 = oy * l.stride, x0 = ox * l.stride;
                // route to the first maximum (deterministic tie-break)
                int by = y0, bx = x0;
                double best = iplane[static_cast<std::size_t>(y0) * iw + x0];
                for (int ky = 0; ky < l.k; ++ky) {
                    for (int kx = 0; kx < l.k; ++kx) {
                        const double v = iplane[static_cast<std::size_t>(y0 + ky) * iw + x0 + kx];
                        if (v > best) {
                            best = v;
                            by = y0 + ky;
                            bx = x0 + kx;
                        }
                    }
                }
                giplane[static_cast<std::size_t>(by) * iw + bx] +=
                    gplane[static_cast<std::size_t>(oy) * ow + ox];
            }
        }
    }
}

// dot product with four independent accumulator chains (fixed order, faster)
double dot4(const double* a, const double* b, int n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    int i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((s0 + s1) + (s2 + s3)) + tail;
}

void linear_forward(const LayerSpec& l, const double* w, const double* b, const double* in,
                    double* out) {
    for (int o = 0; o < l.out_dim; ++o) {
        out[o] = b[o] + dot4(w + static_cast<std::size_t>(o) * l.in_dim, in, l.in_dim);
    }
}

void linear_backward(const LayerSpec& l, const double* w, const double* in, const double* gout,
                     double* gw, double* gb, double* gin) {
    std::fill(gin, gin + l.in_dim, 0.0);
    for (int o = 0; o < l.out_dim; ++o) {
        const double g = gout[o];
        gb[o] += g;
        const double* wrow = w + static_cast<std::size_t>(o) * l.in_dim;
        double* gwrow = gw + static_cast<std::size_t>(o) * l.in_dim;
        for (int i = 0; i < l.in_dim; ++i) {
            gwrow[i] += g * in[i];
            gin[i] += g * wrow[i];
        }
    }
}

void trunk_forward(const ModelParams& m, FwdCache& cache) {
    for (std::size_t i = 0; i < m.arch.trunk.size(); ++i) {
        const LayerSpec& l = m.arch.trunk[i];
        const double* in = cache.acts[i].data();
        double* out = cache.acts[i + 1].data();
        switch (l.kind) {
            case LayerKind::Conv:
                conv_forward(l, m.w[i].data(), m.b[i].data(), in, out);
                break;
            case LayerKind::ReLU:
                for (int j = 0; j < l.output_size; ++j) out[j] = in[j] > 0.0 ? in[j] : 0.0;
                break;
            case LayerKind::Pool:
                pool_forward(l, in, out);
                break;
            case LayerKind::Linear:
                linear_forward(l, m.w[i].data(), m.b[i].data(), in, out);
                break;
        }
    }
}

// backward through the trunk; cache.gacts.back() must hold d(loss)/d(trunk out)
void trunk_backward(const ModelParams& m, FwdCache& cache, GradBuffer& grad) {
    for (std::size_t ii = m.arch.trunk.size(); ii-- > 0;) {
        const LayerSpec& l = m.arch.trunk[ii];
        const double* in = cache.acts[ii].data();
        const double* gout = cache.gacts[ii + 1].data();
        double* gin = cache.gacts[ii].data();
        switch (l.kind) {
            case LayerKind::Conv:
                conv_backward(l, m.w[ii].data(), in, gout, grad.w[ii].data(),
                              grad.b[ii].data(), gin);
                break;
            case LayerKind::ReLU:
                for (int j = 0; j < l.output_size; ++j) gin[j] = in[j] > 0.0 ? gout[j] : 0.0;
                break;
            case LayerKind::Pool:
                pool_backward(l, in, gout, gin);
                break;
            case LayerKind::Linear:
                linear_backward(l, m.w[ii].data(), in, gout, grad.w[ii].data(),
                                grad.b[ii].data(), gin);
                break;
        }
    }
}

ActivationMatrix heads_from_trunk(const ModelParams& m, const double* trunk) {
    ActivationMatrix a;
    const int T = m.arch.trunk_dim;
    for (int j = 0; j < m.arch.n_heads; ++j) {
        for (int q = 0; q < 2; ++q) {
            const int row = 2 * j + q;
            const double* wrow = m.head_w.data() + static_cast<std::size_t>(row) * T;
            double acc = m.head_b[row];
            for (int i = 0; i < T; ++i) acc += wrow[i] * trunk[i];
            a.logits[j][q] = acc;
        }
        a.scores[j] = stable_logistic(a.logits[j][1] - a.logits[j][0]);
    }
    return a;
}

}  // namespace

void run_trunk_forward(const ModelParams& m, FwdCache& cache) { trunk_forward(m, cache); }

void run_trunk_backward(const ModelParams& m, FwdCache& cache, GradBuffer& grad) {
    trunk_backward(m, cache, grad);
}

ActivationMatrix forward(const ModelParams& m, const double* patch, FwdCache& cache) {
    if (cache.acts.empty()) cache.prepare(m.arch);
    std::memcpy(cache.acts[0].data(), patch, cache.acts[0].size() * sizeof(double));
    trunk_forward(m, cache);
    return heads_from_trunk(m, cache.acts.back().data());
}

ActivationMatrix forward(const ModelParams& m, const Image& patch) {
    if (patch.w != m.arch.input_side || patch.h != m.arch.input_side)
        throw std::invalid_argument("forward: patch side mismatch");
    FwdCache cache;
    cache.prepare(m.arch);
    return forward(m, patch.px.data(), cache);
}

ActivationMatrix forward(const ModelParams& m, const std::vector<std::uint8_t>& patch_u8,
                         int side) {
    if (side != m.arch.input_side ||
        patch_u8.size() != static_cast<std::size_t>(side) * side)
        throw std::invalid_argument("forward: patch side mismatch");
    std::vector<double> buf(patch_u8.size());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = patch_u8[i] / 255.0;
    FwdCache cache;
    cache.prepare(m.arch);
    return forward(m, buf.data(), cache);
}

LossReport batch_loss(const std::vector<ActivationMatrix>& activations,
                      const std::vector<std::pair<int, int>>& bin_and_label) {
    if (activations.size() != bin_and_label.size())
        throw std::invalid_argument("batch_loss: length mismatch");
    LossReport rep;
    rep.contributions.reserve(activations.size());
    for (std::size_t i = 0; i < activations.size(); ++i) {
        const auto [bin, label] = bin_and_label[i];
        if (bin < 0 || bin >= kAngleBins)
            throw std::invalid_argument("batch_loss: bin out of range");
        const double c = binary_ce(activations[i].logits[bin][0],
                                   activations[i].logits[bin][1], label);
        rep.contributions.push_back(c);
        rep.L_B += c;
    }
    return rep;
}

double accumulate_gradients(const ModelParams& m, const double* patch, int bin, int label,
                            FwdCache& cache, GradBuffer& grad) {
    if (cache.acts.empty()) cache.prepare(m.arch);
    if (grad.head_w.empty()) grad.prepare(m);
    std::memcpy(cache.acts[0].data(), patch, cache.acts[0].size() * sizeof(double));
    trunk_forward(m, cache);
    const double* trunk = cache.acts.back().data();
    const int T = m.arch.trunk_dim;

    const ActivationMatrix act = heads_from_trunk(m, trunk);
    const double z0 = act.logits[bin][0], z1 = act.logits[bin][1];
    const double loss = binary_ce(z0, z1, label);

    // d(loss)/d(logits) of the trial head; all other heads get exactly zero
    const double p1 = stable_logistic(z1 - z0);
    const double d0 = (1.0 - p1) - (label == 0 ? 1.0 : 0.0);
    const double d1 = p1 - (label == 1 ? 1.0 : 0.0);

    double* gtr = cache.gacts.back().data();
    std::fill(gtr, gtr + T, 0.0);
    for (int q = 0; q < 2; ++q) {
        const int row = 2 * bin + q;
        const double g = q == 0 ? d0 : d1;
        const double* wrow = m.head_w.data() + static_cast<std::size_t>(row) * T;
        double* gwrow = grad.head_w.data() + static_cast<std::size_t>(row) * T;
        for (int i = 0; i < T; ++i) {
            gwrow[i] += g * trunk[i];
            gtr[i] += g * wrow[i];
        }
        grad.head_b[row] += g;
    }
    trunk_backward(m, cache, grad);
    return loss;
}

TrainConfig stage0_schedule(std::uint64_t seed) {
    TrainConfig c;
    c.learning_rate = 0.01;
    c.epochs = 20;
    c.seed = seed;
    return c;
}

TrainConfig stagek_schedule(std::uint64_t seed) {
    TrainConfig c;
    c.learning_rate = 0.001;
    c.epochs = 5;
    c.seed = seed;
    return c;
}

void SgdMomentum::prepare(const ModelParams& m) {
    if (velocity.head_w.empty()) velocity.prepare(m);
}

void SgdMomentum::step(ModelParams& m, const GradBuffer& grad_sum, int batch_n) {
    prepare(m);
    const double scale = 1.0 / static_cast<double>(batch_n);
    auto apply = [&](std::vector<double>& wv, std::vector<double>& vv,
                     const std::vector<double>& gv) {
        for (std::size_t i = 0; i < wv.size(); ++i) {
            const double g = gv[i] * scale;
            if (!std::isfinite(g)) throw std::runtime_error("non-finite gradient");
            vv[i] = momentum * vv[i] - learning_rate * g;
            wv[i] += vv[i];
        }
    };
    for (std::size_t i = 0; i < m.w.size(); ++i) {
        apply(m.w[i], velocity.w[i], grad_sum.w[i]);
        apply(m.b[i], velocity.b[i], grad_sum.b[i]);
    }
    apply(m.head_w, velocity.head_w, grad_sum.head_w);
    apply(m.head_b, velocity.head_b, grad_sum.head_b);
}

namespace {

constexpr int kGradBuckets = 8;

struct BucketScratch {
    FwdCache cache;
    GradBuffer grad;
    std::vector<double> input;
    double loss = 0.0;
};

// Accumulate one batch's gradients into scratch buckets (sample i goes to
// bucket i % kGradBuckets, accumulated in sample order within the bucket),
// then reduce buckets in fixed order. Identical arithmetic for any worker
// count.
double batch_gradients(const ModelParams& m, const std::vector<const TrainingSample*>& batch,
                       std::vector<BucketScratch>& buckets, GradBuffer& grad_sum,
                       int workers) {
    const int nb = static_cast<int>(buckets.size());
    auto run_bucket = [&](int bkt) {
        BucketScratch& s = buckets[bkt];
        s.grad.zero();
        s.loss = 0.0;
        for (std::size_t i = bkt; i < batch.size(); i += nb) {
            const TrainingSample* ts = batch[i];
            for (std::size_t j = 0; j < ts->pixels.size(); ++j)
                s.input[j] = ts->pixels[j] / 255.0;
            s.loss += accumulate_gradients(m, s.input.data(), ts->bin, ts->label, s.cache,
                                           s.grad);
        }
    };
    if (workers <= 1) {
        for (int bkt = 0; bkt < nb; ++bkt) run_bucket(bkt);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        const int nthreads = std::min(workers, nb);
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&]() {
                for (;;) {
                    const int bkt = next.fetch_add(1);
                    if (bkt >= nb) return;
                    run_bucket(bkt);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    grad_sum.zero();
    double loss = 0.0;
    for (int bkt = 0; bkt < nb; ++bkt) {
        grad_sum.add(buckets[bkt].grad);
        loss += buckets[bkt].loss;
    }
    return loss;
}

}  // namespace

void backward_and_step(ModelParams& m, SgdMomentum& opt,
                       const std::vector<const TrainingSample*>& batch, int workers) {
    if (batch.empty()) return;
    std::vector<BucketScratch> buckets(kGradBuckets);
    for (auto& s : buckets) {
        s.cache.prepare(m.arch);
        s.grad.prepare(m);
        s.input.resize(static_cast<std::size_t>(m.arch.input_side) * m.arch.input_side);
    }
    GradBuffer grad_sum;
    grad_sum.prepare(m);
    batch_gradients(m, batch, buckets, grad_sum, workers);
    opt.step(m, grad_sum, static_cast<int>(batch.size()));
}

TrainResult train(ModelParams& m, const std::vector<TrainingSample>& samples,
                  const std::vector<TrainConfig>& schedule, int workers) {
    if (samples.empty()) throw std::invalid_argument("train: empty dataset");
    for (const TrainingSample& s : samples) {
        if (s.side != m.arch.input_side)
            throw std::invalid_argument("train: sample side mismatch");
    }
    TrainResult result;
    std::vector<BucketScratch> buckets(kGradBuckets);
    for (auto& s : buckets) {
        s.cache.prepare(m.arch);
        s.grad.prepare(m);
        s.input.resize(static_cast<std::size_t>(m.arch.input_side) * m.arch.input_side);
    }
    GradBuffer grad_sum;
    grad_sum.prepare(m);

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (const TrainConfig& cfg : schedule) {
        SgdMomentum opt;
        opt.learning_rate = cfg.learning_rate;
        opt.momentum = cfg.momentum;
        opt.prepare(m);
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            Rng shuffle_rng = Rng::derive(cfg.seed, rng_tag::kShuffle,
                                          static_cast<std::uint64_t>(epoch));
            for (std::size_t i = order.size(); i > 1; --i) {
                const std::size_t j = shuffle_rng.uniform_int(static_cast<int>(i));
                std::swap(order[i - 1], order[j]);
            }
            double epoch_loss = 0.0;
            std::vector<const TrainingSample*> batch;
            batch.reserve(cfg.batch_size);
            for (std::size_t start = 0; start < order.size();
                 start += static_cast<std::size_t>(cfg.batch_size)) {
                batch.clear();
                const std::size_t end =
                    std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
                for (std::size_t i = start; i < end; ++i) batch.push_back(&samples[order[i]]);
                epoch_loss += batch_gradients(m, batch, buckets, grad_sum, workers);
                opt.step(m, grad_sum, static_cast<int>(batch.size()));
            }
            const double mean_loss = epoch_loss / static_cast<double>(samples.size());
            if (!std::isfinite(mean_loss))
                throw std::runtime_error("train: loss diverged (non-finite)");
            result.epoch_mean_loss.push_back(mean_loss);
        }
    }
    return result;
}

std::vector<std::pair<double*, std::size_t>> param_blocks(ModelParams& m) {
    std::vector<std::pair<double*, std::size_t>> out;
    for (std::size_t i = 0; i < m.w.size(); ++i) {
        if (!m.w[i].empty()) out.push_back({m.w[i].data(), m.w[i].size()});
        if (!m.b[i].empty()) out.push_back({m.b[i].data(), m.b[i].size()});
    }
    out.push_back({m.head_w.data(), m.head_w.size()});
    out.push_back({m.head_b.data(), m.head_b.size()});
    return out;
}

std::vector<std::pair<const double*, std::size_t>> param_blocks(const ModelParams& m) {
    std::vector<std::pair<const double*, std::size_t>> out;
    for (std::size_t i = 0; i < m.w.size(); ++i) {
        if (!m.w[i].empty()) out.push_back({m.w[i].data(), m.w[i].size()});
        if (!m.b[i].empty()) out.push_back({m.b[i].data(), m.b[i].size()});
    }
    out.push_back({m.head_w.data(), m.head_w.size()});
    out.push_back({m.head_b.data(), m.head_b.size()});
    return out;
}

std::vector<std::pair<double*, std::size_t>> grad_blocks(GradBuffer& g) {
    std::vector<std::pair<double*, std::size_t>> out;
    for (std::size_t i = 0; i < g.w.size(); ++i) {
        if (!g.w[i].empty()) out.push_back({g.w[i].data(), g.w[i].size()});
        if (!g.b[i].empty()) out.push_back({g.b[i].data(), g.b[i].size()});
    }
    out.push_back({g.head_w.data(), g.head_w.size()});
    out.push_back({g.head_b.data(), g.head_b.size()});
    return out;
}

namespace {

constexpr char kMagic[8] = {'G', 'R', 'S', 'P', 'F', 'R', 'G', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out.write(kMagic, 8);
    const std::string desc = m.arch.descriptor();
    write_u32(out, static_cast<std::uint32_t>(desc.size()));
    out.write(desc.data(), static_cast<std::streamsize>(desc.size()));
    write_u64(out, m.param_count());
    // doubles are stored little-endian; this targets LE hosts
    for (const auto& [ptr, n] : param_blocks(m)) {
        out.write(reinterpret_cast<const char*>(ptr),
                  static_cast<std::streamsize>(n * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for read: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a graspforge checkpoint: " + path);
    const std::uint32_t dlen = read_u32(in);
    std::string desc(dlen, '\0');
    in.read(desc.data(), dlen);
    Architecture arch = Architecture::from_descriptor(desc);
    ModelParams m;
    m.arch = arch;
    m.w.resize(arch.trunk.size());
    m.b.resize(arch.trunk.size());
    for (std::size_t i = 0; i < arch.trunk.size(); ++i) {
        m.w[i].resize(arch.trunk[i].weight_count());
        m.b[i].resize(arch.trunk[i].bias_count());
    }
    m.head_w.resize(static_cast<std::size_t>(arch.n_heads) * arch.head_logits * arch.trunk_dim);
    m.head_b.resize(static_cast<std::size_t>(arch.n_heads) * arch.head_logits);
    const std::uint64_t n = read_u64(in);
    if (n != m.param_count()) throw std::runtime_error("checkpoint param count mismatch");
    for (const auto& [ptr, cnt] : param_blocks(m)) {
        in.read(reinterpret_cast<char*>(ptr),
                static_cast<std::streamsize>(cnt * sizeof(double)));
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return m;
}

}  // namespace gf
