#include "train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <regex>
#include <stdexcept>

#include "core/rng.hpp"
#include "train/loss.hpp"

namespace pairloc {
namespace {

void validate_config(const TrainConfig& cfg) {
    // lr 0 is allowed: it must leave parameters bit-identical, which makes a
    // useful no-op baseline.
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
        throw std::invalid_argument("train: learning_rate must be non-negative");
    if (!(cfg.momentum >= 0.0) || !(cfg.momentum < 1.0))
        throw std::invalid_argument("train: momentum must be in [0, 1)");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be positive");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be positive");
}

std::string checkpoint_path(const std::string& dir, int epoch) {
    char name[32];
    std::snprintf(name, sizeof(name), "ckpt_ep%06d.unc1", epoch);
    return dir + "/" + name;
}

}  // namespace

int checkpoint_epoch_from_path(const std::string& path) {
    static const std::regex pat(R"(ckpt_ep(\d{1,8})\.unc1$)");
    std::smatch m;
    if (!std::regex_search(path, m, pat)) return -1;
    return std::stoi(m[1].str());
}

void sgd_step(TrainState& state, const NetGrads& grads, const TrainConfig& cfg) {
    validate_config(cfg);
    if (grads.layers.size() != state.params.layers.size())
        throw std::invalid_argument("sgd_step: gradient shape mismatch");
    for (const ConvGrads& g : grads.layers) {
        for (double v : g.w)
            if (!std::isfinite(v))
                throw divergence_error("sgd step " + std::to_string(state.step) +
                                       ": non-finite weight gradient");
        for (double v : g.b)
            if (!std::isfinite(v))
                throw divergence_error("sgd step " + std::to_string(state.step) +
                                       ": non-finite bias gradient");
    }
    for (std::size_t li = 0; li < state.params.layers.size(); ++li) {
        ConvLayer& l = state.params.layers[li];
        ConvGrads& v = state.velocity.layers[li];
        const ConvGrads& g = grads.layers[li];
        if (g.w.size() != l.w.size() || g.b.size() != l.b.size())
            throw std::invalid_argument("sgd_step: gradient shape mismatch");
        for (std::size_t j = 0; j < l.w.size(); ++j) {
            v.w[j] = cfg.momentum * v.w[j] - cfg.learning_rate * g.w[j];
            l.w[j] = static_cast<float>(static_cast<double>(l.w[j]) + v.w[j]);
        }
        for (std::size_t j = 0; j < l.b.size(); ++j) {
            v.b[j] = cfg.momentum * v.b[j] - cfg.learning_rate * g.b[j];
            l.b[j] = static_cast<float>(static_cast<double>(l.b[j]) + v.b[j]);
        }
    }
    ++state.step;
}

TrainState train(const std::vector<TrainSample>& dataset, const NetArch& arch,
                 const TrainConfig& cfg, const LabelConfig& labels, const TrainIoOptions& io) {
    validate_config(cfg);
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");

    TrainState st;
    if (io.resume.empty()) {
        st.params = make_net(arch, cfg.seed);
    } else {
        st.params = load_checkpoint(io.resume);
        if (st.params.arch.depth != arch.depth ||
            st.params.arch.base_channels != arch.base_channels)
            throw std::invalid_argument("train: resume checkpoint architecture mismatch");
        st.epoch = std::max(0, checkpoint_epoch_from_path(io.resume));
    }
    st.velocity = make_grads(st.params);

    if (!io.checkpoint_dir.empty()) std::filesystem::create_directories(io.checkpoint_dir);

    std::ofstream csv;
    if (!io.loss_csv.empty()) {
        const auto parent = std::filesystem::path(io.loss_csv).parent_path();
        if (!parent.empty()) std::filesystem::create_directories(parent);
        const bool fresh = io.resume.empty();
        csv.open(io.loss_csv, fresh ? std::ios::trunc : std::ios::app);
        if (!csv) throw format_error("train: cannot open loss csv '" + io.loss_csv + "'");
        if (fresh) csv << "epoch,mean_loss,wall_seconds\n";
    }

    const auto t0 = std::chrono::steady_clock::now();
    NetGrads batch = make_grads(st.params);
    int in_batch = 0;

    auto flush_batch = [&] {
        if (in_batch == 0) return;
        if (in_batch > 1) batch.scale(1.0 / in_batch);
        sgd_step(st, batch, cfg);
        batch.zero();
        in_batch = 0;
    };

    while (st.epoch < cfg.epochs) {
        std::vector<std::size_t> order(dataset.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (cfg.shuffle) {
            Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(st.epoch));
            for (std::size_t i = order.size() - 1; i > 0; --i)
                std::swap(order[i], order[rng.next_below(static_cast<std::uint32_t>(i + 1))]);
        }

        double loss_sum = 0.0;
        for (std::size_t idx : order) {
            const TrainSample& s = dataset[idx];
            const TargetPair targets = make_targets(s.annotation, s.volume.dims(), labels,
                                                    s.volume.spacing(), s.volume.origin());
            ForwardCache cache;
            const Tensor out = net_forward(st.params, s.volume, &cache);
            const std::size_t cs = out.channel_size();
            // Output channel 0 regresses the left-side map, channel 1 the
            // right-side map.
            const LossResult left = weighted_mse(std::span(out.channel(0), cs),
                                                 targets.left_map.data(), targets.weights_left);
            const LossResult right = weighted_mse(std::span(out.channel(1), cs),
                                                  targets.right_map.data(), targets.weights_right);
            const double sample_loss = 0.5 * (left.loss + right.loss);
            if (!std::isfinite(sample_loss))
                throw divergence_error("train step " + std::to_string(st.step) +
                                       ": non-finite loss");
            Tensor dloss(2, out.dims);
            for (std::size_t i = 0; i < cs; ++i) {
                dloss.channel(0)[i] = 0.5 * left.grad[i];
                dloss.channel(1)[i] = 0.5 * right.grad[i];
            }
            const NetGrads g = net_backward(st.params, cache, dloss);
            batch.add_scaled(g, 1.0);
            ++in_batch;
            loss_sum += sample_loss;
            if (in_batch == cfg.batch_size) flush_batch();
        }
        flush_batch();

        ++st.epoch;
        st.loss_history.push_back(loss_sum / static_cast<double>(dataset.size()));
        if (csv.is_open()) {
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                                    .count();
            char row[96];
            std::snprintf(row, sizeof(row), "%d,%.17g,%.3f\n", st.epoch, st.loss_history.back(),
                          wall);
            csv << row << std::flush;
        }
        const bool last = st.epoch == cfg.epochs;
        const bool periodic = io.checkpoint_every > 0 && st.epoch % io.checkpoint_every == 0;
        if (!io.checkpoint_dir.empty() && (last || periodic))
            save_checkpoint(st.params, checkpoint_path(io.checkpoint_dir, st.epoch));
    }
    return st;
}

}  // namespace pairloc
