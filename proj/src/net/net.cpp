#include "net/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "core/binio.hpp"
#include "core/rng.hpp"

namespace pairloc {
namespace {

constexpr char kMagic[4] = {'U', 'N', 'C', '1'};
constexpr std::uint32_t kVersion = 1;
// Caps keep checkpoint headers from driving absurd allocations.
constexpr int kMaxDepth = 5;
constexpr int kMaxBase = 64;

void validate_arch(const NetArch& a) {
    if (a.depth < 1 || a.depth > kMaxDepth)
        throw std::invalid_argument("net: depth must be in [1, " + std::to_string(kMaxDepth) + "]");
    if (a.base_channels < 1 || a.base_channels > kMaxBase)
        throw std::invalid_argument("net: base_channels must be in [1, " +
                                    std::to_string(kMaxBase) + "]");
    if (a.in_channels < 1 || a.out_channels < 1)
        throw std::invalid_argument("net: channel counts must be positive");
}

int level_ch(const NetArch& a, int level) { return a.base_channels << level; }

// Layer shapes in canonical order.
std::vector<ConvLayer> layer_shapes(const NetArch& a) {
    std::vector<ConvLayer> layers(static_cast<std::size_t>(layer_count(a)));
    auto set = [&](int idx, int in_ch, int out_ch, int ksize) {
        layers[static_cast<std::size_t>(idx)] = ConvLayer{in_ch, out_ch, ksize, {}, {}};
    };
    const int d = a.depth;
    for (int l = 0; l < d; ++l) {
        set(enc_a_index(a, l), l == 0 ? a.in_channels : level_ch(a, l - 1), level_ch(a, l), 3);
        set(enc_b_index(a, l), level_ch(a, l), level_ch(a, l), 3);
    }
    set(bottleneck_a_index(a), level_ch(a, d - 1), level_ch(a, d), 3);
    set(bottleneck_b_index(a), level_ch(a, d), level_ch(a, d), 3);
    for (int l = d - 1; l >= 0; --l) {
        const int from_below = l == d - 1 ? level_ch(a, d) : level_ch(a, l + 1);
        set(dec_up_index(a, l), from_below, level_ch(a, l), 3);
        set(dec_a_index(a, l), 2 * level_ch(a, l), level_ch(a, l), 3);
        set(dec_b_index(a, l), level_ch(a, l), level_ch(a, l), 3);
    }
    set(head_index(a), level_ch(a, 0), a.out_channels, 1);
    return layers;
}

}  // namespace

int layer_count(const NetArch& arch) { return 5 * arch.depth + 3; }
int enc_a_index(const NetArch&, int level) { return 2 * level; }
int enc_b_index(const NetArch&, int level) { return 2 * level + 1; }
int bottleneck_a_index(const NetArch& arch) { return 2 * arch.depth; }
int bottleneck_b_index(const NetArch& arch) { return 2 * arch.depth + 1; }
int dec_up_index(const NetArch& arch, int level) {
    return 2 * arch.depth + 2 + 3 * (arch.depth - 1 - level);
}
int dec_a_index(const NetArch& arch, int level) { return dec_up_index(arch, level) + 1; }
int dec_b_index(const NetArch& arch, int level) { return dec_up_index(arch, level) + 2; }
int head_index(const NetArch& arch) { return 5 * arch.depth + 2; }

std::size_t param_count(const NetArch& arch) {
    validate_arch(arch);
    std::size_t n = 0;
    for (const ConvLayer& l : layer_shapes(arch)) n += l.param_count();
    return n;
}

void NetGrads::zero() {
    for (ConvGrads& g : layers) {
        std::fill(g.w.begin(), g.w.end(), 0.0);
        std::fill(g.b.begin(), g.b.end(), 0.0);
    }
}

void NetGrads::add_scaled(const NetGrads& other, double scale) {
    if (other.layers.size() != layers.size())
        throw std::invalid_argument("net grads: layer count mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (other.layers[i].w.size() != layers[i].w.size() ||
            other.layers[i].b.size() != layers[i].b.size())
            throw std::invalid_argument("net grads: layer size mismatch");
        for (std::size_t j = 0; j < layers[i].w.size(); ++j)
            layers[i].w[j] += scale * other.layers[i].w[j];
        for (std::size_t j = 0; j < layers[i].b.size(); ++j)
            layers[i].b[j] += scale * other.layers[i].b[j];
    }
}

void NetGrads::scale(double factor) {
    for (ConvGrads& g : layers) {
        for (double& v : g.w) v *= factor;
        for (double& v : g.b) v *= factor;
    }
}

NetParams make_net(const NetArch& arch, std::uint64_t seed) {
    validate_arch(arch);
    NetParams p;
    p.arch = arch;
    p.layers = layer_shapes(arch);
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        ConvLayer& l = p.layers[i];
        const double fan_in = static_cast<double>(l.in_ch) * l.ksize * l.ksize * l.ksize;
        const double stddev = std::sqrt(2.0 / fan_in);
        Rng rng = Rng::stream(seed, i);
        l.w.resize(l.weight_count());
        for (float& w : l.w) w = static_cast<float>(stddev * rng.next_gaussian());
        l.b.assign(static_cast<std::size_t>(l.out_ch), 0.0f);
    }
    return p;
}

NetGrads make_grads(const NetParams& params) {
    NetGrads g;
    g.layers.resize(params.layers.size());
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        g.layers[i].w.assign(params.layers[i].weight_count(), 0.0);
        g.layers[i].b.assign(static_cast<std::size_t>(params.layers[i].out_ch), 0.0);
    }
    return g;
}

Tensor tensor_from_volume(const VolumeGrid& vol) {
    Tensor t(1, vol.dims());
    t.v.assign(vol.data().begin(), vol.data().end());
    return t;
}

Tensor net_forward(const NetParams& params, const Tensor& input, ForwardCache* cache) {
    const NetArch& a = params.arch;
    validate_arch(a);
    if (params.layers.size() != static_cast<std::size_t>(layer_count(a)))
        throw std::invalid_argument("net: layer list does not match architecture");
    if (input.channels != a.in_channels)
        throw std::invalid_argument("net: input channel count mismatch");
    const std::uint32_t div = 1u << a.depth;
    if (input.dims.nx % div != 0 || input.dims.ny % div != 0 || input.dims.nz % div != 0)
        throw std::invalid_argument("net: input dims must be divisible by 2^depth");

    if (cache) {
        cache->conv_in.assign(params.layers.size(), Tensor{});
        cache->conv_pre.assign(params.layers.size(), Tensor{});
        cache->pool_argmax.assign(static_cast<std::size_t>(a.depth), {});
        cache->pool_in_dims.assign(static_cast<std::size_t>(a.depth), Dims3{});
    }

    auto conv_relu = [&](int idx, Tensor in) {
        Tensor pre = conv_forward(params.layers[static_cast<std::size_t>(idx)], in);
        Tensor post = relu(pre);
        if (cache) {
            cache->conv_in[static_cast<std::size_t>(idx)] = std::move(in);
            cache->conv_pre[static_cast<std::size_t>(idx)] = std::move(pre);
        }
        return post;
    };

    const int d = a.depth;
    std::vector<Tensor> skips(static_cast<std::size_t>(d));
    Tensor x = input;
    for (int l = 0; l < d; ++l) {
        x = conv_relu(enc_a_index(a, l), std::move(x));
        x = conv_relu(enc_b_index(a, l), std::move(x));
        skips[static_cast<std::size_t>(l)] = x;
        std::vector<std::int64_t> argmax;
        const Dims3 pre_pool = x.dims;
        x = maxpool2(x, argmax);
        if (cache) {
            cache->pool_argmax[static_cast<std::size_t>(l)] = std::move(argmax);
            cache->pool_in_dims[static_cast<std::size_t>(l)] = pre_pool;
        }
    }
    x = conv_relu(bottleneck_a_index(a), std::move(x));
    x = conv_relu(bottleneck_b_index(a), std::move(x));
    for (int l = d - 1; l >= 0; --l) {
        x = upsample2(x);
        x = conv_relu(dec_up_index(a, l), std::move(x));
        x = concat(x, skips[static_cast<std::size_t>(l)]);
        skips[static_cast<std::size_t>(l)] = Tensor{};
        x = conv_relu(dec_a_index(a, l), std::move(x));
        x = conv_relu(dec_b_index(a, l), std::move(x));
    }
    const int hi = head_index(a);
    Tensor out = conv_forward(params.layers[static_cast<std::size_t>(hi)], x);
    if (cache) cache->conv_in[static_cast<std::size_t>(hi)] = std::move(x);
    return out;
}

Tensor net_forward(const NetParams& params, const VolumeGrid& input, ForwardCache* cache) {
    return net_forward(params, tensor_from_volume(input), cache);
}

NetGrads net_backward(const NetParams& params, const ForwardCache& cache,
                      const Tensor& dloss_dout) {
    const NetArch& a = params.arch;
    if (cache.conv_in.size() != params.layers.size())
        throw std::invalid_argument("net backward: cache does not match architecture");
    NetGrads g = make_grads(params);

    auto conv_relu_bw = [&](int i, Tensor dpost) {
        const std::size_t idx = static_cast<std::size_t>(i);
        Tensor dpre = relu_backward(cache.conv_pre[idx], dpost);
        conv_backward_params(params.layers[idx], cache.conv_in[idx], dpre, g.layers[idx]);
        return conv_backward_data(params.layers[idx], dpre);
    };

    const int d = a.depth;
    const int hi = head_index(a);
    conv_backward_params(params.layers[static_cast<std::size_t>(hi)],
                         cache.conv_in[static_cast<std::size_t>(hi)], dloss_dout,
                         g.layers[static_cast<std::size_t>(hi)]);
    Tensor dx = conv_backward_data(params.layers[static_cast<std::size_t>(hi)], dloss_dout);

    std::vector<Tensor> d_skip(static_cast<std::size_t>(d));
    for (int l = 0; l < d; ++l) {
        dx = conv_relu_bw(dec_b_index(a, l), std::move(dx));
        dx = conv_relu_bw(dec_a_index(a, l), std::move(dx));
        Tensor d_up, d_sk;
        split(dx, a.base_channels << l, d_up, d_sk);
        d_skip[static_cast<std::size_t>(l)] = std::move(d_sk);
        d_up = conv_relu_bw(dec_up_index(a, l), std::move(d_up));
        dx = upsample2_backward(d_up);
    }
    dx = conv_relu_bw(bottleneck_b_index(a), std::move(dx));
    dx = conv_relu_bw(bottleneck_a_index(a), std::move(dx));
    for (int l = d - 1; l >= 0; --l) {
        const std::size_t li = static_cast<std::size_t>(l);
        dx = maxpool2_backward(dx, cache.pool_argmax[li], a.base_channels << l,
                               cache.pool_in_dims[li]);
        const Tensor& ds = d_skip[li];
        if (!dx.same_shape(ds)) throw std::invalid_argument("net backward: skip shape mismatch");
        for (std::size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += ds.v[i];
        d_skip[li] = Tensor{};
        dx = conv_relu_bw(enc_b_index(a, l), std::move(dx));
        dx = conv_relu_bw(enc_a_index(a, l), std::move(dx));
    }
    return g;
}

void save_checkpoint(const NetParams& params, const std::string& path) {
    validate_arch(params.arch);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw format_error("checkpoint write '" + path + "': cannot open file");
    os.write(kMagic, 4);
    binio::put_u32(os, kVersion);
    binio::put_u32(os, static_cast<std::uint32_t>(params.arch.depth));
    binio::put_u32(os, static_cast<std::uint32_t>(params.arch.base_channels));
    binio::put_u64(os, param_count(params.arch));
    for (const ConvLayer& l : params.layers) {
        for (float w : l.w) binio::put_f32(os, w);
        for (float b : l.b) binio::put_f32(os, b);
    }
    os.flush();
    if (!os) throw format_error("checkpoint write '" + path + "': write failed");
}

NetParams load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("checkpoint read '" + path + "': cannot open file");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw format_error("checkpoint read '" + path + "': bad magic");
    const std::uint32_t version = binio::get_u32(is, "checkpoint header");
    if (version != kVersion)
        throw format_error("checkpoint read '" + path + "': unsupported version " +
                           std::to_string(version));
    NetArch arch;
    arch.depth = static_cast<int>(binio::get_u32(is, "checkpoint header"));
    arch.base_channels = static_cast<int>(binio::get_u32(is, "checkpoint header"));
    if (arch.depth < 1 || arch.depth > kMaxDepth || arch.base_channels < 1 ||
        arch.base_channels > kMaxBase)
        throw format_error("checkpoint read '" + path + "': implausible architecture");
    const std::uint64_t declared = binio::get_u64(is, "checkpoint header");
    if (declared != param_count(arch))
        throw format_error("checkpoint read '" + path + "': parameter count mismatch");

    NetParams p;
    p.arch = arch;
    p.layers = layer_shapes(arch);
    for (ConvLayer& l : p.layers) {
        l.w.resize(l.weight_count());
        for (float& w : l.w) w = binio::get_f32(is, "checkpoint payload");
        l.b.resize(static_cast<std::size_t>(l.out_ch));
        for (float& b : l.b) b = binio::get_f32(is, "checkpoint payload");
    }
    is.peek();
    if (!is.eof()) throw format_error("checkpoint read '" + path + "': trailing bytes");
    return p;
}

}  // namespace pairloc
