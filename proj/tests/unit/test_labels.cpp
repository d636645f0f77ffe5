#include <cmath>
#include <vector>

#include "core/labels.hpp"
#include "doctest.h"

using namespace pairloc;

namespace {

LandmarkAnnotation both_sides(VoxelIndex left, VoxelIndex right) {
    LandmarkAnnotation ann;
    ann.volume_id = "t";
    ann.left_present = true;
    ann.right_present = true;
    ann.left_voxel = left;
    ann.right_voxel = right;
    ann.category = Category::B;
    return ann;
}

}  // namespace

TEST_SUITE("labels") {
    TEST_CASE("gaussian magnitude at frozen distances") {
        const LabelConfig cfg;  // sigma 3, floor 0.05
        const Dims3 dims{21, 21, 21};
        const VoxelIndex c{10, 10, 10};
        const VolumeGrid m = make_gaussian_map(dims, c, cfg, +1);
        CHECK(m.at(10, 10, 10) == 1.0);
        CHECK(m.at(13, 10, 10) == doctest::Approx(0.6065306597126334).epsilon(1e-15));
        CHECK(m.at(10, 12, 10) == doctest::Approx(std::exp(-4.0 / 18.0)).epsilon(1e-15));
        // Distance 8: magnitude 0.0286 sits under the floor, stored as exact 0.
        CHECK(m.at(18, 10, 10) == 0.0);
    }

    TEST_CASE("support is exactly the voxels inside the cutoff radius") {
        const LabelConfig cfg;
        CHECK(gaussian_cutoff_radius_sq(cfg) == doctest::Approx(53.923180923971834).epsilon(1e-12));
        const Dims3 dims{19, 19, 19};
        const VoxelIndex c{9, 9, 9};
        const VolumeGrid m = make_gaussian_map(dims, c, cfg, +1);
        for (uint32_t k = 0; k < dims.nz; ++k)
            for (uint32_t j = 0; j < dims.ny; ++j)
                for (uint32_t i = 0; i < dims.nx; ++i) {
                    const double di = double(i) - c.i, dj = double(j) - c.j, dk = double(k) - c.k;
                    const double d_sq = di * di + dj * dj + dk * dk;
                    if (d_sq <= 53.0)
                        CHECK(m.at(i, j, k) != 0.0);
                    else
                        CHECK(m.at(i, j, k) == 0.0);
                }
    }

    TEST_CASE("negative sign flips the map") {
        const LabelConfig cfg;
        const Dims3 dims{9, 9, 9};
        const VolumeGrid pos = make_gaussian_map(dims, {4, 4, 4}, cfg, +1);
        const VolumeGrid neg = make_gaussian_map(dims, {4, 4, 4}, cfg, -1);
        for (std::size_t n = 0; n < pos.data().size(); ++n)
            CHECK(neg.data()[n] == -pos.data()[n]);
        CHECK_THROWS_AS(make_gaussian_map(dims, {4, 4, 4}, cfg, 2), std::invalid_argument);
        CHECK_THROWS_AS(make_gaussian_map(dims, {4, 4, 9}, cfg, 1), std::invalid_argument);
    }

    TEST_CASE("truncated support near the volume boundary") {
        const LabelConfig cfg;
        const VolumeGrid m = make_gaussian_map(Dims3{8, 8, 8}, {0, 0, 0}, cfg, +1);
        CHECK(m.at(0, 0, 0) == 1.0);
        CHECK(m.at(7, 0, 0) == doctest::Approx(std::exp(-49.0 / 18.0)).epsilon(1e-15));
        CHECK(m.at(7, 3, 0) == 0.0);  // squared distance 58 is past the cutoff
        double sum = 0.0;
        for (double v : m.data()) sum += v;
        CHECK(sum > 1.0);  // octant of the full support survives
    }

    TEST_CASE("class-balanced weights on a frozen count") {
        // 4^3 grid with 14 nonzero voxels: the rarer class gets the larger weight.
        std::vector<double> buf(64, 0.0);
        for (std::size_t n = 0; n < 14; ++n) buf[3 * n] = (n % 2 == 0) ? 0.5 : -0.25;
        const VolumeGrid m(Dims3{4, 4, 4}, {1, 1, 1}, {0, 0, 0}, std::move(buf));
        const WeightPair w = compute_weights(m);
        CHECK(w.n_none == 14);
        CHECK(w.n_zero == 50);
        CHECK(w.w_none == doctest::Approx(50.0 / 64.0).epsilon(1e-15));
        CHECK(w.w_zero == doctest::Approx(14.0 / 64.0).epsilon(1e-15));
        CHECK(w.w_none + w.w_zero == doctest::Approx(1.0).epsilon(1e-15));
    }

    TEST_CASE("weight overrides when one class is empty") {
        const VolumeGrid zeros = VolumeGrid::filled(Dims3{3, 3, 3}, {1, 1, 1}, {0, 0, 0}, 0.0);
        const WeightPair wz = compute_weights(zeros);
        CHECK(wz.w_zero == 1.0);
        CHECK(wz.w_none == 0.0);
        CHECK(wz.n_none == 0);
        const VolumeGrid ones = VolumeGrid::filled(Dims3{3, 3, 3}, {1, 1, 1}, {0, 0, 0}, 0.5);
        const WeightPair wo = compute_weights(ones);
        CHECK(wo.w_none == 1.0);
        CHECK(wo.w_zero == 0.0);
        CHECK(wo.n_zero == 0);
    }

    TEST_CASE("suppression digs a -1 trough at the contralateral landmark") {
        const LabelConfig cfg;
        const Dims3 dims{32, 16, 16};
        const LandmarkAnnotation ann = both_sides({6, 8, 8}, {25, 8, 8});
        const TargetPair t = make_targets(ann, dims, cfg);
        CHECK(t.left_map.at(6, 8, 8) == 1.0);
        CHECK(t.left_map.at(25, 8, 8) == -1.0);
        CHECK(t.right_map.at(25, 8, 8) == 1.0);
        CHECK(t.right_map.at(6, 8, 8) == -1.0);
        for (double v : t.left_map.data()) {
            CHECK(v >= -1.0);
            CHECK(v <= 1.0);
        }
    }

    TEST_CASE("overlapping supports sum before the clamp") {
        const LabelConfig cfg;
        const LandmarkAnnotation ann = both_sides({6, 8, 8}, {10, 8, 8});
        const TargetPair t = make_targets(ann, Dims3{16, 16, 16}, cfg);
        // Left center: own peak 1 minus the suppression tail at distance 4.
        CHECK(t.left_map.at(6, 8, 8) ==
              doctest::Approx(1.0 - std::exp(-16.0 / 18.0)).epsilon(1e-14));
        // Midpoint at distance 2 from both: tails cancel exactly.
        CHECK(t.left_map.at(8, 8, 8) == 0.0);
        CHECK(t.right_map.at(8, 8, 8) == 0.0);
    }

    TEST_CASE("single-side annotations") {
        const LabelConfig cfg;
        LandmarkAnnotation ann;
        ann.volume_id = "l";
        ann.left_present = true;
        ann.left_voxel = {8, 8, 8};
        ann.category = Category::L;
        const TargetPair t = make_targets(ann, Dims3{16, 16, 16}, cfg);
        CHECK(t.left_map.at(8, 8, 8) == 1.0);
        // The absent side still learns to reject the present landmark.
        CHECK(t.right_map.at(8, 8, 8) == -1.0);
        CHECK(t.weights_right.n_none > 0);

        LabelConfig off = cfg;
        off.suppression_enabled = false;
        const TargetPair u = make_targets(ann, Dims3{16, 16, 16}, off);
        for (double v : u.right_map.data()) CHECK(v == 0.0);
        CHECK(u.weights_right.w_zero == 1.0);
    }

    TEST_CASE("empty annotation yields all-zero maps with unit zero-weight") {
        LandmarkAnnotation ann;
        ann.volume_id = "n";
        ann.category = Category::N;
        const TargetPair t = make_targets(ann, Dims3{8, 8, 8}, LabelConfig{});
        for (double v : t.left_map.data()) CHECK(v == 0.0);
        for (double v : t.right_map.data()) CHECK(v == 0.0);
        CHECK(t.weights_left.w_zero == 1.0);
        CHECK(t.weights_right.w_zero == 1.0);
    }

    TEST_CASE("coincident landmarks are rejected") {
        CHECK_THROWS_AS(
            make_targets(both_sides({4, 4, 4}, {4, 4, 4}), Dims3{8, 8, 8}, LabelConfig{}),
            std::invalid_argument);
    }

    TEST_CASE("bad configs are rejected") {
        LabelConfig cfg;
        cfg.sigma = 0.0;
        CHECK_THROWS_AS(gaussian_cutoff_radius_sq(cfg), std::invalid_argument);
        cfg.sigma = 3.0;
        cfg.floor_threshold = 0.0;
        CHECK_THROWS_AS(gaussian_cutoff_radius_sq(cfg), std::invalid_argument);
        cfg.floor_threshold = 1.0;
        CHECK_THROWS_AS(gaussian_cutoff_radius_sq(cfg), std::invalid_argument);
    }

    TEST_CASE("map construction is deterministic") {
        const LabelConfig cfg;
        const LandmarkAnnotation ann = both_sides({5, 6, 7}, {12, 6, 7});
        const TargetPair a = make_targets(ann, Dims3{16, 16, 16}, cfg);
        const TargetPair b = make_targets(ann, Dims3{16, 16, 16}, cfg);
        for (std::size_t n = 0; n < a.left_map.data().size(); ++n) {
            CHECK(a.left_map.data()[n] == b.left_map.data()[n]);
            CHECK(a.right_map.data()[n] == b.right_map.data()[n]);
        }
    }

    TEST_CASE("spacing and origin pass through to the maps") {
        const TargetPair t = make_targets(both_sides({2, 2, 2}, {9, 2, 2}), Dims3{12, 6, 6},
                                          LabelConfig{}, {0.5, 0.5, 0.5}, {1, 2, 3});
        CHECK(t.left_map.spacing() == Vec3d{0.5, 0.5, 0.5});
        CHECK(t.left_map.origin() == Vec3d{1.0, 2.0, 3.0});
    }
}
