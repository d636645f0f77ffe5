#include "net/net_ops.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

#include "core/parallel.hpp"

namespace pairloc {
namespace {

std::vector<double> widen(const std::vector<float>& w) {
    return std::vector<double>(w.begin(), w.end());
}

void check_conv(const ConvLayer& layer, const Tensor& in) {
    if (layer.ksize != 1 && layer.ksize != 3)
        throw std::invalid_argument("conv: kernel size must be 1 or 3");
    if (in.channels != layer.in_ch) throw std::invalid_argument("conv: channel count mismatch");
    if (layer.w.size() != layer.weight_count() ||
        layer.b.size() != static_cast<std::size_t>(layer.out_ch))
        throw std::invalid_argument("conv: parameter size mismatch");
}

// The 3x3x3 kernels below work one row at a time. Each source row is copied
// into a buffer padded with one zero on each end, so the x loop runs the full
// row with no branches and the three taps become one fused
//   acc[x] += w0*rb[x] + w1*rb[x+1] + w2*rb[x+2]
// pass the compiler vectorises. z/y padding is handled by clipping source
// rows. Output channels are processed in blocks of kBlk so each buffered row
// is reused across the block. The weight-gradient reductions keep kLanes
// independent partial sums so the accumulation loop stays elementwise (plain
// FP reductions do not vectorise without relaxing FP semantics, and we keep
// strict semantics for reproducibility).
constexpr int kBlk = 4;
constexpr int kLanes = 8;

void pad_row(const double* r, double* rb, int nx) {
    rb[0] = 0.0;
    std::memcpy(rb + 1, r, sizeof(double) * static_cast<std::size_t>(nx));
    rb[nx + 1] = 0.0;
}

Tensor conv3_forward(const ConvLayer& layer, const Tensor& in, const std::vector<double>& wd) {
    const int nx = static_cast<int>(in.dims.nx);
    const int ny = static_cast<int>(in.dims.ny);
    const int nz = static_cast<int>(in.dims.nz);
    const int C = layer.in_ch;
    const int O = layer.out_ch;
    const int nblk = (O + kBlk - 1) / kBlk;
    Tensor out(layer.out_ch, in.dims);
    parallel_for(nblk, [&](std::int64_t blk) {
        const int o0 = static_cast<int>(blk) * kBlk;
        const int nb = std::min(kBlk, O - o0);
        std::vector<double> accv(static_cast<std::size_t>(kBlk) * nx);
        std::vector<double> rbv(static_cast<std::size_t>(nx) + 2);
        double* rb = rbv.data();
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y) {
                std::fill(accv.begin(), accv.end(), 0.0);
                for (int c = 0; c < C; ++c)
                    for (int dz = 0; dz < 3; ++dz) {
                        const int zi = z + dz - 1;
                        if (zi < 0 || zi >= nz) continue;
                        for (int dy = 0; dy < 3; ++dy) {
                            const int yi = y + dy - 1;
                            if (yi < 0 || yi >= ny) continue;
                            pad_row(in.row(c, zi, yi), rb, nx);
                            for (int ob = 0; ob < nb; ++ob) {
                                const double* wk =
                                    wd.data() +
                                    (((static_cast<std::size_t>(o0 + ob) * C + c) * 3 + dz) * 3 +
                                     dy) *
                                        3;
                                const double w0 = wk[0], w1 = wk[1], w2 = wk[2];
                                double* acc = accv.data() + static_cast<std::size_t>(ob) * nx;
                                for (int x = 0; x < nx; ++x)
                                    acc[x] += w0 * rb[x] + w1 * rb[x + 1] + w2 * rb[x + 2];
                            }
                        }
                    }
                for (int ob = 0; ob < nb; ++ob) {
                    const double bias = layer.b[static_cast<std::size_t>(o0 + ob)];
                    const double* acc = accv.data() + static_cast<std::size_t>(ob) * nx;
                    double* po = out.row(o0 + ob, z, y);
                    for (int x = 0; x < nx; ++x) po[x] = acc[x] + bias;
                }
            }
    });
    return out;
}

Tensor conv1_forward(const ConvLayer& layer, const Tensor& in, const std::vector<double>& wd) {
    const std::size_t n = in.channel_size();
    Tensor out(layer.out_ch, in.dims);
    parallel_for(layer.out_ch, [&](std::int64_t oi) {
        const int o = static_cast<int>(oi);
        double* po = out.channel(o);
        const double bias = layer.b[static_cast<std::size_t>(o)];
        for (std::size_t i = 0; i < n; ++i) po[i] = bias;
        for (int c = 0; c < layer.in_ch; ++c) {
            const double wv = wd[static_cast<std::size_t>(o) * layer.in_ch + c];
            const double* pi = in.channel(c);
            for (std::size_t i = 0; i < n; ++i) po[i] += wv * pi[i];
        }
    });
    return out;
}

Tensor conv3_backward_data(const ConvLayer& layer, const Tensor& dout,
                           const std::vector<double>& wd) {
    const int nx = static_cast<int>(dout.dims.nx);
    const int ny = static_cast<int>(dout.dims.ny);
    const int nz = static_cast<int>(dout.dims.nz);
    const int C = layer.in_ch;
    const int O = layer.out_ch;
    const int nblk = (C + kBlk - 1) / kBlk;
    Tensor din(C, dout.dims);
    parallel_for(nblk, [&](std::int64_t blk) {
        const int c0 = static_cast<int>(blk) * kBlk;
        const int nb = std::min(kBlk, C - c0);
        std::vector<double> accv(static_cast<std::size_t>(kBlk) * nx);
        std::vector<double> rbv(static_cast<std::size_t>(nx) + 2);
        double* rb = rbv.data();
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y) {
                std::fill(accv.begin(), accv.end(), 0.0);
                for (int o = 0; o < O; ++o)
                    for (int dz = 0; dz < 3; ++dz) {
                        const int zo = z + 1 - dz;
                        if (zo < 0 || zo >= nz) continue;
                        for (int dy = 0; dy < 3; ++dy) {
                            const int yo = y + 1 - dy;
                            if (yo < 0 || yo >= ny) continue;
                            pad_row(dout.row(o, zo, yo), rb, nx);
                            // din[x] takes w[dx] * dout[x + 1 - dx]: with the
                            // padded buffer that is w2*rb[x] + w1*rb[x+1] +
                            // w0*rb[x+2], the forward taps reversed.
                            for (int cb = 0; cb < nb; ++cb) {
                                const double* wk =
                                    wd.data() +
                                    (((static_cast<std::size_t>(o) * C + (c0 + cb)) * 3 + dz) * 3 +
                                     dy) *
                                        3;
                                const double w0 = wk[0], w1 = wk[1], w2 = wk[2];
                                double* acc = accv.data() + static_cast<std::size_t>(cb) * nx;
                                for (int x = 0; x < nx; ++x)
                                    acc[x] += w2 * rb[x] + w1 * rb[x + 1] + w0 * rb[x + 2];
                            }
                        }
                    }
                for (int cb = 0; cb < nb; ++cb)
                    std::memcpy(din.row(c0 + cb, z, y),
                                accv.data() + static_cast<std::size_t>(cb) * nx,
                                sizeof(double) * static_cast<std::size_t>(nx));
            }
    });
    return din;
}

Tensor conv1_backward_data(const ConvLayer& layer, const Tensor& dout,
                           const std::vector<double>& wd) {
    const std::size_t n = dout.channel_size();
    Tensor din(layer.in_ch, dout.dims);
    parallel_for(layer.in_ch, [&](std::int64_t ci) {
        const int c = static_cast<int>(ci);
        double* pd = din.channel(c);
        for (int o = 0; o < layer.out_ch; ++o) {
            const double wv = wd[static_cast<std::size_t>(o) * layer.in_ch + c];
            const double* g = dout.channel(o);
            for (std::size_t i = 0; i < n; ++i) pd[i] += wv * g[i];
        }
    });
    return din;
}

void conv3_backward_params(const ConvLayer& layer, const Tensor& in, const Tensor& dout,
                           ConvGrads& g) {
    const int nx = static_cast<int>(in.dims.nx);
    const int ny = static_cast<int>(in.dims.ny);
    const int nz = static_cast<int>(in.dims.nz);
    const int C = layer.in_ch;
    const int O = layer.out_ch;
    parallel_for(static_cast<std::int64_t>(O) * C, [&](std::int64_t item) {
        const int o = static_cast<int>(item / C);
        const int c = static_cast<int>(item % C);
        std::vector<double> rbv(static_cast<std::size_t>(nx) + 2);
        double* rb = rbv.data();
        // dw[dx] sums dout[x] * in[x + dx - 1], i.e. gr[x] * rb[x + dx].
        // One lane-striped partial-sum block per tap, zeroed and reduced once
        // per (o, c) item, keeps the hot loop elementwise with no per-row
        // reduction overhead.
        double lane[27][kLanes] = {};
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y) {
                const double* gr = dout.row(o, z, y);
                for (int dz = 0; dz < 3; ++dz) {
                    const int zi = z + dz - 1;
                    if (zi < 0 || zi >= nz) continue;
                    for (int dy = 0; dy < 3; ++dy) {
                        const int yi = y + dy - 1;
                        if (yi < 0 || yi >= ny) continue;
                        pad_row(in.row(c, zi, yi), rb, nx);
                        double* l0 = lane[(dz * 3 + dy) * 3];
                        double* l1 = lane[(dz * 3 + dy) * 3 + 1];
                        double* l2 = lane[(dz * 3 + dy) * 3 + 2];
                        int x = 0;
                        for (; x + kLanes <= nx; x += kLanes)
                            for (int l = 0; l < kLanes; ++l) {
                                const double gv = gr[x + l];
                                l0[l] += gv * rb[x + l];
                                l1[l] += gv * rb[x + l + 1];
                                l2[l] += gv * rb[x + l + 2];
                            }
                        for (; x < nx; ++x) {
                            const double gv = gr[x];
                            l0[0] += gv * rb[x];
                            l1[0] += gv * rb[x + 1];
                            l2[0] += gv * rb[x + 2];
                        }
                    }
                }
            }
        double* gw = g.w.data() + (static_cast<std::size_t>(o) * C + c) * 27;
        for (int t = 0; t < 27; ++t) {
            double s = 0.0;
            for (int l = 0; l < kLanes; ++l) s += lane[t][l];
            gw[t] += s;
        }
    });
    parallel_for(O, [&](std::int64_t oi) {
        const int o = static_cast<int>(oi);
        const double* gr = dout.channel(o);
        double lanes[kLanes] = {};
        std::size_t i = 0;
        const std::size_t n = dout.channel_size();
        for (; i + kLanes <= n; i += kLanes)
            for (int l = 0; l < kLanes; ++l) lanes[l] += gr[i + l];
        for (; i < n; ++i) lanes[0] += gr[i];
        double s = 0.0;
        for (int l = 0; l < kLanes; ++l) s += lanes[l];
        g.b[static_cast<std::size_t>(o)] += s;
    });
}

void conv1_backward_params(const ConvLayer& layer, const Tensor& in, const Tensor& dout,
                           ConvGrads& g) {
    const std::size_t n = in.channel_size();
    const int C = layer.in_ch;
    parallel_for(static_cast<std::int64_t>(layer.out_ch) * C, [&](std::int64_t item) {
        const int o = static_cast<int>(item / C);
        const int c = static_cast<int>(item % C);
        const double* gr = dout.channel(o);
        const double* r = in.channel(c);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += gr[i] * r[i];
        g.w[static_cast<std::size_t>(o) * C + c] += s;
    });
    parallel_for(layer.out_ch, [&](std::int64_t oi) {
        const int o = static_cast<int>(oi);
        const double* gr = dout.channel(o);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += gr[i];
        g.b[static_cast<std::size_t>(o)] += s;
    });
}

}  // namespace

Tensor conv_forward(const ConvLayer& layer, const Tensor& in) {
    check_conv(layer, in);
    const std::vector<double> wd = widen(layer.w);
    return layer.ksize == 3 ? conv3_forward(layer, in, wd) : conv1_forward(layer, in, wd);
}

Tensor conv_backward_data(const ConvLayer& layer, const Tensor& dout) {
    if (dout.channels != layer.out_ch)
        throw std::invalid_argument("conv backward: channel count mismatch");
    const std::vector<double> wd = widen(layer.w);
    return layer.ksize == 3 ? conv3_backward_data(layer, dout, wd)
                            : conv1_backward_data(layer, dout, wd);
}

void conv_backward_params(const ConvLayer& layer, const Tensor& in, const Tensor& dout,
                          ConvGrads& g) {
    check_conv(layer, in);
    if (dout.channels != layer.out_ch || !(dout.dims == in.dims))
        throw std::invalid_argument("conv backward: output shape mismatch");
    if (g.w.size() != layer.weight_count() || g.b.size() != static_cast<std::size_t>(layer.out_ch))
        throw std::invalid_argument("conv backward: gradient size mismatch");
    if (layer.ksize == 3)
        conv3_backward_params(layer, in, dout, g);
    else
        conv1_backward_params(layer, in, dout, g);
}

Tensor relu(const Tensor& pre) {
    Tensor out = pre;
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& pre, const Tensor& dpost) {
    if (!pre.same_shape(dpost)) throw std::invalid_argument("relu backward: shape mismatch");
    Tensor din = dpost;
    for (std::size_t i = 0; i < din.v.size(); ++i)
        if (!(pre.v[i] > 0.0)) din.v[i] = 0.0;
    return din;
}

Tensor maxpool2(const Tensor& in, std::vector<std::int64_t>& argmax) {
    if (in.dims.nx % 2 != 0 || in.dims.ny % 2 != 0 || in.dims.nz % 2 != 0)
        throw std::invalid_argument("maxpool: dims must be even");
    const Dims3 od{in.dims.nx / 2, in.dims.ny / 2, in.dims.nz / 2};
    Tensor out(in.channels, od);
    argmax.assign(out.size(), -1);
    const std::size_t in_cs = in.channel_size();
    const std::size_t out_cs = out.channel_size();
    parallel_for(in.channels, [&](std::int64_t ci) {
        const int c = static_cast<int>(ci);
        std::size_t oi = static_cast<std::size_t>(c) * out_cs;
        for (std::uint32_t z = 0; z < od.nz; ++z)
            for (std::uint32_t y = 0; y < od.ny; ++y)
                for (std::uint32_t x = 0; x < od.nx; ++x, ++oi) {
                    double best = 0.0;
                    std::int64_t bi = -1;
                    for (std::uint32_t dz = 0; dz < 2; ++dz)
                        for (std::uint32_t dy = 0; dy < 2; ++dy)
                            for (std::uint32_t dx = 0; dx < 2; ++dx) {
                                const std::size_t idx =
                                    static_cast<std::size_t>(c) * in_cs +
                                    ((static_cast<std::size_t>(2 * z + dz) * in.dims.ny +
                                      (2 * y + dy)) *
                                         in.dims.nx +
                                     (2 * x + dx));
                                const double val = in.v[idx];
                                if (bi < 0 || val > best) {
                                    best = val;
                                    bi = static_cast<std::int64_t>(idx);
                                }
                            }
                    out.v[oi] = best;
                    argmax[oi] = bi;
                }
    });
    return out;
}

Tensor maxpool2_backward(const Tensor& dout, const std::vector<std::int64_t>& argmax,
                         int channels, Dims3 in_dims) {
    if (argmax.size() != dout.size()) throw std::invalid_argument("maxpool backward: argmax size");
    Tensor din(channels, in_dims);
    const std::size_t out_cs = dout.channel_size();
    parallel_for(channels, [&](std::int64_t ci) {
        const std::size_t begin = static_cast<std::size_t>(ci) * out_cs;
        for (std::size_t i = begin; i < begin + out_cs; ++i)
            din.v[static_cast<std::size_t>(argmax[i])] += dout.v[i];
    });
    return din;
}

Tensor upsample2(const Tensor& in) {
    const Dims3 od{in.dims.nx * 2, in.dims.ny * 2, in.dims.nz * 2};
    Tensor out(in.channels, od);
    parallel_for(in.channels, [&](std::int64_t ci) {
        const int c = static_cast<int>(ci);
        for (std::uint32_t z = 0; z < od.nz; ++z)
            for (std::uint32_t y = 0; y < od.ny; ++y) {
                const double* r = in.row(c, static_cast<int>(z / 2), static_cast<int>(y / 2));
                double* po = out.row(c, static_cast<int>(z), static_cast<int>(y));
                for (std::uint32_t x = 0; x < od.nx; ++x) po[x] = r[x / 2];
            }
    });
    return out;
}

Tensor upsample2_backward(const Tensor& dout) {
    if (dout.dims.nx % 2 != 0 || dout.dims.ny % 2 != 0 || dout.dims.nz % 2 != 0)
        throw std::invalid_argument("upsample backward: dims must be even");
    const Dims3 id{dout.dims.nx / 2, dout.dims.ny / 2, dout.dims.nz / 2};
    Tensor din(dout.channels, id);
    parallel_for(dout.channels, [&](std::int64_t ci) {
        const int c = static_cast<int>(ci);
        for (std::uint32_t z = 0; z < id.nz; ++z)
            for (std::uint32_t y = 0; y < id.ny; ++y) {
                double* pd = din.row(c, static_cast<int>(z), static_cast<int>(y));
                for (std::uint32_t dz = 0; dz < 2; ++dz)
                    for (std::uint32_t dy = 0; dy < 2; ++dy) {
                        const double* g = dout.row(c, static_cast<int>(2 * z + dz),
                                                   static_cast<int>(2 * y + dy));
                        for (std::uint32_t x = 0; x < id.nx; ++x)
                            pd[x] += g[2 * x] + g[2 * x + 1];
                    }
            }
    });
    return din;
}

Tensor concat(const Tensor& a, const Tensor& b) {
    if (!(a.dims == b.dims)) throw std::invalid_argument("concat: dims mismatch");
    Tensor out(a.channels + b.channels, a.dims);
    std::memcpy(out.v.data(), a.v.data(), a.v.size() * sizeof(double));
    std::memcpy(out.v.data() + a.v.size(), b.v.data(), b.v.size() * sizeof(double));
    return out;
}

void split(const Tensor& d, int ch_a, Tensor& da, Tensor& db) {
    if (ch_a <= 0 || ch_a >= d.channels) throw std::invalid_argument("split: bad channel split");
    da = Tensor(ch_a, d.dims);
    db = Tensor(d.channels - ch_a, d.dims);
    std::memcpy(da.v.data(), d.v.data(), da.v.size() * sizeof(double));
    std::memcpy(db.v.data(), d.v.data() + da.v.size(), db.v.size() * sizeof(double));
}

}  // namespace pairloc
