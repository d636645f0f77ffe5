#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "core/rng.hpp"
#include "core/volume.hpp"
#include "doctest.h"

using namespace pairloc;

namespace {

// Values snapped to f32 so VVR1 round-trips reproduce them bit-exactly.
VolumeGrid random_f32_volume(Dims3 dims, Vec3d spacing, Vec3d origin, uint64_t seed) {
    Rng rng(seed);
    std::vector<double> data(dims.voxel_count());
    for (double& v : data) v = double(float(rng.next_range(-100.0, 100.0)));
    return VolumeGrid(dims, spacing, origin, std::move(data));
}

VolumeGrid ramp_volume(Dims3 dims, Vec3d coeff) {
    std::vector<double> data(dims.voxel_count());
    std::size_t n = 0;
    for (uint32_t k = 0; k < dims.nz; ++k)
        for (uint32_t j = 0; j < dims.ny; ++j)
            for (uint32_t i = 0; i < dims.nx; ++i)
                data[n++] = coeff.x * i + coeff.y * j + coeff.z * k;
    return VolumeGrid(dims, {1, 1, 1}, {0, 0, 0}, std::move(data));
}

}  // namespace

TEST_SUITE("volume") {
    TEST_CASE("construction validates shape, spacing, and finiteness") {
        std::vector<double> four(4, 0.0);
        CHECK_THROWS_AS(VolumeGrid(Dims3{0, 2, 2}, {1, 1, 1}, {0, 0, 0}, four),
                        std::invalid_argument);
        CHECK_THROWS_AS(VolumeGrid(Dims3{2, 2, 1}, {1, -1, 1}, {0, 0, 0}, four),
                        std::invalid_argument);
        CHECK_THROWS_AS(VolumeGrid(Dims3{2, 2, 1}, {1, 0, 1}, {0, 0, 0}, four),
                        std::invalid_argument);
        CHECK_THROWS_AS(VolumeGrid(Dims3{2, 2, 2}, {1, 1, 1}, {0, 0, 0}, four),
                        std::invalid_argument);
        std::vector<double> bad{0.0, 1.0, std::nan(""), 2.0};
        CHECK_THROWS_AS(VolumeGrid(Dims3{2, 2, 1}, {1, 1, 1}, {0, 0, 0}, bad),
                        std::invalid_argument);
    }

    TEST_CASE("storage is x-fastest") {
        const VolumeGrid v = ramp_volume(Dims3{3, 4, 5}, {1.0, 10.0, 100.0});
        CHECK(v.index(1, 0, 0) == 1);
        CHECK(v.index(0, 1, 0) == 3);
        CHECK(v.index(0, 0, 1) == 12);
        CHECK(v.at(2, 3, 4) == 2.0 + 30.0 + 400.0);
        CHECK(v.at(VoxelIndex{1, 2, 3}) == 1.0 + 20.0 + 300.0);
    }

    TEST_CASE("filled and min_value") {
        const VolumeGrid v = VolumeGrid::filled(Dims3{2, 3, 4}, {1, 1, 1}, {0, 0, 0}, -7.5);
        CHECK(v.data().size() == 24);
        for (double d : v.data()) CHECK(d == -7.5);
        CHECK(v.min_value() == -7.5);
        const VolumeGrid r = random_f32_volume(Dims3{4, 4, 4}, {1, 1, 1}, {0, 0, 0}, 3);
        double lo = r.data()[0];
        for (double d : r.data()) lo = std::min(lo, d);
        CHECK(r.min_value() == lo);
    }

    TEST_CASE("trilinear reproduces stored values at integer coordinates") {
        const VolumeGrid v = random_f32_volume(Dims3{5, 4, 3}, {1, 1, 1}, {0, 0, 0}, 11);
        for (uint32_t k = 0; k < 3; ++k)
            for (uint32_t j = 0; j < 4; ++j)
                for (uint32_t i = 0; i < 5; ++i)
                    CHECK(trilinear_sample(v, i, j, k, -999.0) == v.at(i, j, k));
    }

    TEST_CASE("trilinear is exact on constant and linear fields") {
        const VolumeGrid c = VolumeGrid::filled(Dims3{4, 4, 4}, {1, 1, 1}, {0, 0, 0}, 3.25);
        CHECK(trilinear_sample(c, 1.37, 2.81, 0.66, 0.0) == 3.25);
        const VolumeGrid ramp = ramp_volume(Dims3{4, 4, 4}, {2.0, -1.0, 0.5});
        CHECK(trilinear_sample(ramp, 1.5, 2.0, 1.0, 0.0) ==
              doctest::Approx(2.0 * 1.5 - 1.0 * 2.0 + 0.5 * 1.0).epsilon(1e-14));
        CHECK(trilinear_sample(ramp, 0.25, 2.75, 2.5, 0.0) ==
              doctest::Approx(2.0 * 0.25 - 1.0 * 2.75 + 0.5 * 2.5).epsilon(1e-14));
    }

    TEST_CASE("trilinear outside the grid returns the fill value") {
        const VolumeGrid v = VolumeGrid::filled(Dims3{3, 3, 3}, {1, 1, 1}, {0, 0, 0}, 5.0);
        CHECK(trilinear_sample(v, -0.01, 1.0, 1.0, -4.0) == -4.0);
        CHECK(trilinear_sample(v, 2.01, 1.0, 1.0, -4.0) == -4.0);
        CHECK(trilinear_sample(v, 1.0, -1.0, 1.0, -4.0) == -4.0);
        CHECK(trilinear_sample(v, 1.0, 1.0, 7.0, -4.0) == -4.0);
        CHECK(trilinear_sample(v, 2.0, 2.0, 2.0, -4.0) == 5.0);  // boundary is inside
    }

    TEST_CASE("isotropic resample dims follow the rounding rule") {
        const VolumeGrid v =
            random_f32_volume(Dims3{10, 20, 15}, {0.5, 1.0, 2.0}, {3, 4, 5}, 17);
        const VolumeGrid r = resample_isotropic(v, 1.0);
        CHECK(r.dims() == Dims3{5, 20, 30});
        CHECK(r.spacing() == Vec3d{1.0, 1.0, 1.0});
        CHECK(r.origin() == v.origin());
        const VolumeGrid tiny = resample_isotropic(
            VolumeGrid::filled(Dims3{2, 2, 2}, {0.1, 0.1, 0.1}, {0, 0, 0}, 1.0), 1.0);
        CHECK(tiny.dims() == Dims3{1, 1, 1});
    }

    TEST_CASE("resample at the native spacing preserves values") {
        const VolumeGrid v = random_f32_volume(Dims3{6, 5, 4}, {1, 1, 1}, {0, 0, 0}, 23);
        const VolumeGrid r = resample_isotropic(v, 1.0);
        REQUIRE(r.dims() == v.dims());
        for (std::size_t n = 0; n < v.data().size(); ++n) CHECK(r.data()[n] == v.data()[n]);
    }

    TEST_CASE("resample of a constant volume is constant with source-min fill") {
        const VolumeGrid v = VolumeGrid::filled(Dims3{4, 4, 4}, {2, 2, 2}, {0, 0, 0}, 9.0);
        const VolumeGrid r = resample_isotropic(v, 1.0);
        CHECK(r.dims() == Dims3{8, 8, 8});
        for (double d : r.data()) CHECK(d == 9.0);  // min fill equals the constant
    }

    TEST_CASE("crop removes leading floor-half excess and shifts the origin") {
        const VolumeGrid v = ramp_volume(Dims3{6, 5, 4}, {1.0, 10.0, 100.0});
        const VolumeGrid c = crop_or_pad_symmetric(v, Dims3{3, 5, 4}, 0.0);
        REQUIRE(c.dims() == Dims3{3, 5, 4});
        // Excess 3: one leading voxel removed (floor(3/2)), two trailing.
        CHECK(c.at(0, 0, 0) == 1.0);
        CHECK(c.at(2, 4, 3) == 3.0 + 40.0 + 300.0);
        CHECK(c.origin() == Vec3d{1.0, 0.0, 0.0});
    }

    TEST_CASE("pad inserts leading floor-half deficit and shifts the origin back") {
        const VolumeGrid v = ramp_volume(Dims3{2, 2, 2}, {1.0, 1.0, 1.0});
        const VolumeGrid p = crop_or_pad_symmetric(v, Dims3{5, 2, 2}, -1.0);
        REQUIRE(p.dims() == Dims3{5, 2, 2});
        // Deficit 3: one leading fill voxel, two trailing.
        CHECK(p.at(0, 0, 0) == -1.0);
        CHECK(p.at(1, 0, 0) == 0.0);
        CHECK(p.at(2, 0, 0) == 1.0);
        CHECK(p.at(3, 0, 0) == -1.0);
        CHECK(p.at(4, 0, 0) == -1.0);
        CHECK(p.origin() == Vec3d{-1.0, 0.0, 0.0});
    }

    TEST_CASE("crop then pad restores the surviving center bit-exactly") {
        const VolumeGrid v = random_f32_volume(Dims3{8, 8, 8}, {1, 1, 1}, {5, 5, 5}, 31);
        const VolumeGrid c = crop_or_pad_symmetric(v, Dims3{4, 4, 4}, 0.0);
        const VolumeGrid back = crop_or_pad_symmetric(c, Dims3{8, 8, 8}, 0.0);
        CHECK(back.origin() == v.origin());
        for (uint32_t k = 2; k < 6; ++k)
            for (uint32_t j = 2; j < 6; ++j)
                for (uint32_t i = 2; i < 6; ++i) CHECK(back.at(i, j, k) == v.at(i, j, k));
    }

    TEST_CASE("vvr1 files round-trip f32 data bit-exactly") {
        namespace fs = std::filesystem;
        const std::string path = "vol_roundtrip.vvr1";
        const VolumeGrid v =
            random_f32_volume(Dims3{7, 3, 5}, {0.5, 0.5, 0.5}, {-10, 4, 2.5}, 47);
        write_volume(v, path);
        const VolumeGrid r = read_volume(path);
        CHECK(r.dims() == v.dims());
        CHECK(double(float(v.spacing().x)) == r.spacing().x);
        CHECK(double(float(v.origin().x)) == r.origin().x);
        REQUIRE(r.data().size() == v.data().size());
        for (std::size_t n = 0; n < v.data().size(); ++n) CHECK(r.data()[n] == v.data()[n]);
        fs::remove(path);
    }

    TEST_CASE("vvr1 reader rejects malformed files") {
        namespace fs = std::filesystem;
        const std::string path = "vol_bad.vvr1";
        const VolumeGrid v = VolumeGrid::filled(Dims3{2, 2, 2}, {1, 1, 1}, {0, 0, 0}, 1.0);
        write_volume(v, path);

        // Bad magic.
        {
            std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
            f.write("XXXX", 4);
        }
        CHECK_THROWS_AS(read_volume(path), format_error);

        // Truncated payload.
        write_volume(v, path);
        fs::resize_file(path, fs::file_size(path) - 5);
        CHECK_THROWS_AS(read_volume(path), format_error);

        // Trailing garbage.
        write_volume(v, path);
        {
            std::ofstream f(path, std::ios::app | std::ios::binary);
            f.write("zz", 2);
        }
        CHECK_THROWS_AS(read_volume(path), format_error);

        CHECK_THROWS_AS(read_volume("does_not_exist.vvr1"), format_error);
        fs::remove(path);
    }
}
