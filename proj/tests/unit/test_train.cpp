#include <cmath>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "core/rng.hpp"
#include "doctest.h"
#include "net/net.hpp"
#include "train/loss.hpp"
#include "train/trainer.hpp"

using namespace pairloc;

namespace {

// One-parameter state for exercising the update rule in isolation.
TrainState scalar_state(float w0) {
    TrainState st;
    st.params.arch = NetArch{1, 1, 1, 1};
    st.params.layers = {ConvLayer{1, 1, 1, {w0}, {0.0f}}};
    st.velocity = make_grads(st.params);
    return st;
}

NetGrads scalar_grads(const TrainState& st, double gw) {
    NetGrads g = make_grads(st.params);
    g.layers[0].w[0] = gw;
    return g;
}

TrainSample phantom_sample(Dims3 dims, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> data(dims.voxel_count());
    for (double& v : data) v = rng.next_range(0.0, 0.2);
    LandmarkAnnotation ann;
    ann.volume_id = "sample";
    ann.left_present = true;
    ann.left_voxel = {2, 3, 4};
    ann.right_present = true;
    ann.right_voxel = {5, 4, 3};
    ann.category = Category::B;
    // Bright blobs at the two landmarks so there is signal to regress.
    auto bump = [&](VoxelIndex c) {
        for (std::uint32_t k = 0; k < dims.nz; ++k)
            for (std::uint32_t j = 0; j < dims.ny; ++j)
                for (std::uint32_t i = 0; i < dims.nx; ++i) {
                    const double di = double(i) - c.i, dj = double(j) - c.j, dk = double(k) - c.k;
                    data[(std::size_t(k) * dims.ny + j) * dims.nx + i] +=
                        std::exp(-(di * di + dj * dj + dk * dk) / 4.0);
                }
    };
    bump(ann.left_voxel);
    bump(ann.right_voxel);
    return TrainSample{VolumeGrid(dims, {1, 1, 1}, {0, 0, 0}, std::move(data)), ann};
}

}  // namespace

TEST_SUITE("train") {
    TEST_CASE("weighted mse at the minimum") {
        const std::vector<double> t{0.3, 0.0, -0.5, 1.0};
        const LossResult r = weighted_mse(t, t, WeightPair{0.7, 0.3, 0, 0});
        CHECK(r.loss == 0.0);
        for (double g : r.grad) CHECK(g == 0.0);
    }

    TEST_CASE("weighted mse two-voxel hand example") {
        const std::vector<double> pred{0.5, 0.2};
        const std::vector<double> target{1.0, 0.0};
        const LossResult r = weighted_mse(pred, target, WeightPair{0.5, 0.5, 0, 0});
        CHECK(r.loss == doctest::Approx(0.145).epsilon(1e-12));
        CHECK(r.grad[0] == doctest::Approx(-0.5).epsilon(1e-12));
        CHECK(r.grad[1] == doctest::Approx(0.2).epsilon(1e-12));
    }

    TEST_CASE("weighted mse gradient matches finite differences") {
        Rng rng(17);
        const std::size_t n = 64;  // 4^3
        std::vector<double> pred(n), target(n);
        for (double& v : pred) v = rng.next_range(-1.0, 1.0);
        for (double& v : target) v = rng.next_below(3) == 0 ? 0.0 : rng.next_range(-1.0, 1.0);
        const WeightPair w{0.8, 0.2, 0, 0};
        const LossResult r = weighted_mse(pred, target, w);
        const double h = 1e-6;
        for (std::size_t i = 0; i < n; ++i) {
            const double saved = pred[i];
            pred[i] = saved + h;
            const double lh = weighted_mse(pred, target, w).loss;
            pred[i] = saved - h;
            const double ll = weighted_mse(pred, target, w).loss;
            pred[i] = saved;
            const double fd = (lh - ll) / (2.0 * h);
            const double rel =
                std::fabs(fd - r.grad[i]) / std::max({std::fabs(fd), std::fabs(r.grad[i]), 1e-9});
            CHECK(rel < 1e-6);
        }
    }

    TEST_CASE("weighted mse rejects zero total weight") {
        const std::vector<double> zeros{0.0, 0.0};
        CHECK_THROWS_AS(weighted_mse(zeros, zeros, WeightPair{1.0, 0.0, 0, 0}),
                        std::invalid_argument);
    }

    TEST_CASE("plain sgd step") {
        TrainState st = scalar_state(1.0f);
        sgd_step(st, scalar_grads(st, 2.0), TrainConfig{0.1, 0.0, 1, 1, 0, true});
        CHECK(st.params.layers[0].w[0] == doctest::Approx(0.8).epsilon(1e-7));
        CHECK(st.step == 1);
    }

    TEST_CASE("momentum recursion over two steps") {
        TrainState st = scalar_state(0.0f);
        const TrainConfig cfg{0.1, 0.9, 1, 1, 0, true};
        sgd_step(st, scalar_grads(st, 1.0), cfg);
        CHECK(st.params.layers[0].w[0] == doctest::Approx(-0.1).epsilon(1e-7));
        sgd_step(st, scalar_grads(st, 1.0), cfg);
        CHECK(st.params.layers[0].w[0] == doctest::Approx(-0.29).epsilon(1e-7));
    }

    TEST_CASE("zero gradient and velocity leave parameters untouched") {
        TrainState st = scalar_state(0.75f);
        sgd_step(st, scalar_grads(st, 0.0), TrainConfig{0.1, 0.9, 1, 1, 0, true});
        CHECK(st.params.layers[0].w[0] == 0.75f);
    }

    TEST_CASE("non-finite gradient raises a divergence error naming the step") {
        TrainState st = scalar_state(0.0f);
        st.step = 41;
        try {
            sgd_step(st, scalar_grads(st, std::nan("")), TrainConfig{0.1, 0.9, 1, 1, 0, true});
            FAIL("expected divergence_error");
        } catch (const divergence_error& e) {
            CHECK(std::string(e.what()).find("41") != std::string::npos);
        }
    }

    TEST_CASE("composite gradient through net and loss matches finite differences") {
        const TrainSample s = phantom_sample(Dims3{8, 8, 8}, 21);
        const LabelConfig labels;
        const TargetPair targets =
            make_targets(s.annotation, s.volume.dims(), labels, s.volume.spacing(),
                         s.volume.origin());
        NetParams p = make_net(NetArch{1, 2, 1, 2}, 77);
        Rng br(778899);
        for (ConvLayer& l : p.layers)
            for (float& b : l.b) b = static_cast<float>(br.next_range(0.01, 0.05));

        auto loss_of = [&](const NetParams& q) {
            const Tensor out = net_forward(q, s.volume, nullptr);
            const std::size_t cs = out.channel_size();
            const double ll = weighted_mse(std::span(out.channel(0), cs), targets.left_map.data(),
                                           targets.weights_left)
                                  .loss;
            const double lr = weighted_mse(std::span(out.channel(1), cs), targets.right_map.data(),
                                           targets.weights_right)
                                  .loss;
            return 0.5 * (ll + lr);
        };

        ForwardCache cache;
        const Tensor out = net_forward(p, s.volume, &cache);
        const std::size_t cs = out.channel_size();
        const LossResult left = weighted_mse(std::span(out.channel(0), cs),
                                             targets.left_map.data(), targets.weights_left);
        const LossResult right = weighted_mse(std::span(out.channel(1), cs),
                                              targets.right_map.data(), targets.weights_right);
        Tensor dloss(2, out.dims);
        for (std::size_t i = 0; i < cs; ++i) {
            dloss.channel(0)[i] = 0.5 * left.grad[i];
            dloss.channel(1)[i] = 0.5 * right.grad[i];
        }
        const NetGrads g = net_backward(p, cache, dloss);

        const double h = 1e-5;
        for (std::size_t li = 0; li < p.layers.size(); ++li) {
            ConvLayer& l = p.layers[li];
            auto check_one = [&](float& slot, double grad) {
                const float saved = slot;
                const float hi = static_cast<float>(static_cast<double>(saved) + h);
                const float lo = static_cast<float>(static_cast<double>(saved) - h);
                slot = hi;
                const double lh = loss_of(p);
                slot = lo;
                const double ll = loss_of(p);
                slot = saved;
                const double fd = (lh - ll) / (static_cast<double>(hi) - static_cast<double>(lo));
                const double rel =
                    std::fabs(fd - grad) / std::max({std::fabs(fd), std::fabs(grad), 1e-6});
                CHECK(rel < 1e-4);
            };
            for (std::size_t j = 0; j < l.w.size(); ++j) check_one(l.w[j], g.layers[li].w[j]);
            for (std::size_t j = 0; j < l.b.size(); ++j) check_one(l.b[j], g.layers[li].b[j]);
        }
    }

    TEST_CASE("descent is monotone with zero momentum and small lr") {
        const TrainSample s = phantom_sample(Dims3{8, 8, 8}, 4);
        const TrainConfig cfg{1e-3, 0.0, 1, 10, 9, false};
        const TrainState st = train({s}, NetArch{1, 2, 1, 2}, cfg, LabelConfig{});
        REQUIRE(st.loss_history.size() == 10);
        for (std::size_t e = 1; e < st.loss_history.size(); ++e)
            CHECK(st.loss_history[e] <= st.loss_history[e - 1]);
    }

    TEST_CASE("overfits a single sample") {
        const TrainSample s = phantom_sample(Dims3{8, 8, 8}, 12);
        const TrainConfig cfg{0.01, 0.9, 1, 200, 3, true};
        const TrainState st = train({s}, NetArch{1, 2, 1, 2}, cfg, LabelConfig{});
        REQUIRE(st.loss_history.size() == 200);
        CHECK(st.loss_history.back() < 0.1 * st.loss_history.front());
    }

    TEST_CASE("same configuration reproduces the loss history and parameters") {
        std::vector<TrainSample> ds;
        for (std::uint64_t i = 0; i < 3; ++i) ds.push_back(phantom_sample(Dims3{8, 8, 8}, 30 + i));
        const TrainConfig cfg{5e-3, 0.9, 2, 4, 123, true};
        const TrainState a = train(ds, NetArch{1, 2, 1, 2}, cfg, LabelConfig{});
        const TrainState b = train(ds, NetArch{1, 2, 1, 2}, cfg, LabelConfig{});
        REQUIRE(a.loss_history.size() == b.loss_history.size());
        for (std::size_t i = 0; i < a.loss_history.size(); ++i)
            CHECK(a.loss_history[i] == b.loss_history[i]);
        for (std::size_t li = 0; li < a.params.layers.size(); ++li)
            for (std::size_t j = 0; j < a.params.layers[li].w.size(); ++j)
                CHECK(a.params.layers[li].w[j] == b.params.layers[li].w[j]);
    }

    TEST_CASE("zero learning rate keeps parameters bit-identical") {
        const TrainSample s = phantom_sample(Dims3{8, 8, 8}, 2);
        const NetArch arch{1, 1, 1, 2};
        const TrainConfig cfg{0.0, 0.9, 1, 3, 5, true};
        const TrainState st = train({s}, arch, cfg, LabelConfig{});
        const NetParams fresh = make_net(arch, cfg.seed);
        for (std::size_t li = 0; li < fresh.layers.size(); ++li)
            for (std::size_t j = 0; j < fresh.layers[li].w.size(); ++j)
                CHECK(st.params.layers[li].w[j] == fresh.layers[li].w[j]);
    }

    TEST_CASE("checkpoints, loss csv, and resume bookkeeping") {
        namespace fs = std::filesystem;
        const std::string dir = "train_io_test";
        fs::remove_all(dir);
        std::vector<TrainSample> ds{phantom_sample(Dims3{8, 8, 8}, 50)};
        const NetArch arch{1, 1, 1, 2};
        TrainIoOptions io;
        io.checkpoint_dir = dir;
        io.checkpoint_every = 1;
        io.loss_csv = dir + "/loss.csv";
        const TrainState st =
            train(ds, arch, TrainConfig{1e-3, 0.9, 1, 2, 8, true}, LabelConfig{}, io);
        CHECK(st.epoch == 2);
        CHECK(fs::exists(dir + "/ckpt_ep000001.unc1"));
        CHECK(fs::exists(dir + "/ckpt_ep000002.unc1"));
        CHECK(checkpoint_epoch_from_path(dir + "/ckpt_ep000002.unc1") == 2);
        CHECK(checkpoint_epoch_from_path("weights.unc1") == -1);

        TrainIoOptions resume_io;
        resume_io.checkpoint_dir = dir;
        resume_io.resume = dir + "/ckpt_ep000002.unc1";
        resume_io.loss_csv = dir + "/loss.csv";
        const TrainState rs =
            train(ds, arch, TrainConfig{1e-3, 0.9, 1, 4, 8, true}, LabelConfig{}, resume_io);
        CHECK(rs.epoch == 4);
        CHECK(rs.loss_history.size() == 2);
        CHECK(fs::exists(dir + "/ckpt_ep000004.unc1"));

        std::ifstream csv(dir + "/loss.csv");
        std::string line;
        int rows = 0;
        while (std::getline(csv, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 5);  // header + 4 epochs
        fs::remove_all(dir);
    }

    TEST_CASE("empty dataset is rejected") {
        CHECK_THROWS_AS(
            train({}, NetArch{1, 1, 1, 2}, TrainConfig{1e-3, 0.9, 1, 1, 0, true}, LabelConfig{}),
            std::invalid_argument);
    }
}
