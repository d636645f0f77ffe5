#include <array>
#include <cmath>
#include <filesystem>
#include <vector>

#include "core/rng.hpp"
#include "doctest.h"
#include "shape/shapemodel.hpp"

using namespace pairloc;

namespace {

// The two-shape set whose PCA is known in closed form.
std::vector<EarPairShape> two_shape_set() {
    return {pair_to_shape({-10, 0, 0}, {10, 0, 0}), pair_to_shape({-12, 0, 0}, {12, 0, 0})};
}

ShapeModel two_shape_model() {
    const std::vector<EarPairShape> shapes = two_shape_set();
    return fit_shape_model(shapes);
}

std::vector<EarPairShape> random_pairs(int n, uint64_t seed) {
    Rng rng(seed);
    std::vector<EarPairShape> shapes;
    for (int i = 0; i < n; ++i) {
        const Vec3d left{rng.next_range(-40.0, -20.0), rng.next_range(-5.0, 5.0),
                         rng.next_range(-5.0, 5.0)};
        const Vec3d right{rng.next_range(20.0, 40.0), rng.next_range(-5.0, 5.0),
                          rng.next_range(-5.0, 5.0)};
        shapes.push_back(pair_to_shape(left, right));
    }
    return shapes;
}

std::array<std::array<double, 6>, 6> brute_covariance(const std::vector<EarPairShape>& shapes) {
    std::array<double, 6> mean{};
    for (const auto& sh : shapes)
        for (int i = 0; i < 6; ++i) mean[i] += sh.s[i] / double(shapes.size());
    std::array<std::array<double, 6>, 6> cov{};
    for (const auto& sh : shapes)
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                cov[i][j] += (sh.s[i] - mean[i]) * (sh.s[j] - mean[j]) / double(shapes.size());
    return cov;
}

}  // namespace

TEST_SUITE("shape") {
    TEST_CASE("pair to shape removes the centroid") {
        const EarPairShape a = pair_to_shape({-10, 0, 0}, {10, 0, 0});
        CHECK(a.s == std::array<double, 6>{-10, 0, 0, 10, 0, 0});
        // Translation falls out with the centroid.
        const EarPairShape b = pair_to_shape({0, 0, 0}, {20, 0, 0});
        CHECK(b.s == a.s);
        const EarPairShape c = pair_to_shape({3, -8, 17}, {11, 4, 21});
        for (int i = 0; i < 3; ++i) CHECK(c.s[i] + c.s[i + 3] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK_THROWS_AS(pair_to_shape({1, 2, 3}, {1, 2, 3}), std::invalid_argument);
    }

    TEST_CASE("integer translation leaves the shape bit-identical") {
        const EarPairShape a = pair_to_shape({3, -8, 17}, {11, 4, 21});
        const EarPairShape b = pair_to_shape({3 + 64, -8 + 64, 17 + 64}, {11 + 64, 4 + 64, 21 + 64});
        CHECK(a.s == b.s);
    }

    TEST_CASE("two-shape model matches the closed form") {
        const ShapeModel m = two_shape_model();
        CHECK(m.n_train == 2);
        CHECK(m.mean == std::array<double, 6>{-11, 0, 0, 11, 0, 0});
        REQUIRE(m.eigvals.size() == 1);
        CHECK(m.eigvals[0] == doctest::Approx(2.0).epsilon(1e-9));
        // Eigenvector up to sign.
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        const double dot = m.eigvecs[0][0] * inv_sqrt2 - m.eigvecs[0][3] * inv_sqrt2;
        CHECK(std::fabs(dot) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(m.m_max == doctest::Approx(1.0).epsilon(1e-9));
    }

    TEST_CASE("mahalanobis matches hand projections on the two-shape model") {
        const ShapeModel m = two_shape_model();
        EarPairShape at_mean;
        at_mean.s = m.mean;
        CHECK(mahalanobis(at_mean, m) == doctest::Approx(0.0).epsilon(1e-12));
        const EarPairShape test = pair_to_shape({-13, 0, 0}, {13, 0, 0});
        CHECK(mahalanobis(test, m) == doctest::Approx(2.0).epsilon(1e-9));
        // Deviation orthogonal to the retained mode contributes nothing.
        EarPairShape ortho;
        ortho.s = {-11, 5, 0, 11, 5, 0};  // y-offset is not spanned by u1
        CHECK(mahalanobis(ortho, m) == doctest::Approx(0.0).epsilon(1e-12));
    }

    TEST_CASE("degenerate inputs are rejected") {
        CHECK_THROWS_AS(fit_shape_model(std::span<const EarPairShape>{}), std::invalid_argument);
        const std::vector<EarPairShape> one{pair_to_shape({-1, 0, 0}, {1, 0, 0})};
        CHECK_THROWS_AS(fit_shape_model(one), std::invalid_argument);
        const std::vector<EarPairShape> same(5, pair_to_shape({-9, 1, 2}, {9, -1, -2}));
        CHECK_THROWS_AS(fit_shape_model(same), degenerate_error);
    }

    TEST_CASE("near-identical shapes collapse to tiny variance") {
        Rng rng(7);
        std::vector<EarPairShape> shapes;
        for (int i = 0; i < 20; ++i) {
            const double e = 1e-7;
            shapes.push_back(pair_to_shape(
                {-30 + rng.next_range(-e, e), rng.next_range(-e, e), rng.next_range(-e, e)},
                {30 + rng.next_range(-e, e), rng.next_range(-e, e), rng.next_range(-e, e)}));
        }
        const ShapeModel m = fit_shape_model(shapes);
        for (double l : m.eigvals) CHECK(l < 1e-12);  // O(e^2) variance scale
    }

    TEST_CASE("mirrored pairs give rank at most 3 with orthonormal eigen modes") {
        const std::vector<EarPairShape> shapes = random_pairs(60, 99);
        const ShapeModel m = fit_shape_model(shapes);
        CHECK(m.eigvals.size() <= 3);
        REQUIRE(m.eigvals.size() == 3);  // generic data fills the mirrored subspace
        for (std::size_t a = 0; a < m.eigvecs.size(); ++a) {
            // Modes live in the mirrored subspace u_left = -u_right.
            for (int i = 0; i < 3; ++i)
                CHECK(m.eigvecs[a][i] == doctest::Approx(-m.eigvecs[a][i + 3]).epsilon(1e-9));
            for (std::size_t b = 0; b < m.eigvecs.size(); ++b) {
                double dot = 0.0;
                for (int i = 0; i < 6; ++i) dot += m.eigvecs[a][i] * m.eigvecs[b][i];
                CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-9));
            }
        }
        for (std::size_t a = 1; a < m.eigvals.size(); ++a) CHECK(m.eigvals[a] <= m.eigvals[a - 1]);
    }

    TEST_CASE("retained modes satisfy the eigen equation of the brute covariance") {
        const std::vector<EarPairShape> shapes = random_pairs(40, 123);
        const ShapeModel m = fit_shape_model(shapes);
        const auto cov = brute_covariance(shapes);
        for (std::size_t j = 0; j < m.eigvals.size(); ++j) {
            for (int r = 0; r < 6; ++r) {
                double cu = 0.0;
                for (int c = 0; c < 6; ++c) cu += cov[r][c] * m.eigvecs[j][c];
                CHECK(cu == doctest::Approx(m.eigvals[j] * m.eigvecs[j][r]).epsilon(1e-8));
            }
        }
    }

    TEST_CASE("every training shape scores at most m_max with equality attained") {
        const std::vector<EarPairShape> shapes = random_pairs(30, 5);
        const ShapeModel m = fit_shape_model(shapes);
        double best = 0.0;
        for (const auto& sh : shapes) {
            const double d = mahalanobis(sh, m);
            CHECK(d <= m.m_max + 1e-12);
            best = std::max(best, d);
        }
        CHECK(best == doctest::Approx(m.m_max).epsilon(1e-12));
    }

    TEST_CASE("constraint rejects the weaker side of an implausible pair") {
        const ShapeModel m = two_shape_model();
        DetectionResult r;
        r.left = {true, {3, 8, 8}, 0.9, false};    // mm x: -16 + 3 = -13
        r.right = {true, {29, 8, 8}, 0.6, false};  // mm x: -16 + 29 = 13
        const Vec3d spacing{1, 1, 1}, origin{-16, -8, -8};
        const DetectionResult out = apply_shape_constraint(r, m, spacing, origin);
        CHECK(out.left.present);
        CHECK_FALSE(out.right.present);
        CHECK(out.right.rejected_by_shape);
        CHECK(out.right.peak_voxel == VoxelIndex{29, 8, 8});  // pre-rejection peak kept
        CHECK(out.right.peak_value == 0.6);
        CHECK(categorize(out) == Category::L);
    }

    TEST_CASE("constraint passes a pair inside the training envelope") {
        const ShapeModel m = two_shape_model();
        DetectionResult r;
        r.left = {true, {5, 8, 8}, 0.9, false};    // mm x: -11
        r.right = {true, {27, 8, 8}, 0.6, false};  // mm x: 11, the mean shape
        const DetectionResult out = apply_shape_constraint(r, m, {1, 1, 1}, {-16, -8, -8});
        CHECK(out.left.present);
        CHECK(out.right.present);
        CHECK_FALSE(out.right.rejected_by_shape);
    }

    TEST_CASE("constraint needs a pair and ties reject the right side") {
        const ShapeModel m = two_shape_model();
        DetectionResult lonely;
        lonely.left = {true, {0, 0, 0}, 0.2, false};
        const DetectionResult same = apply_shape_constraint(lonely, m, {1, 1, 1}, {0, 0, 0});
        CHECK(same.left.present);
        CHECK_FALSE(same.right.rejected_by_shape);

        DetectionResult tied;
        tied.left = {true, {0, 8, 8}, 0.7, false};
        tied.right = {true, {31, 8, 8}, 0.7, false};  // far outside the envelope
        const DetectionResult out = apply_shape_constraint(tied, m, {1, 1, 1}, {-16, -8, -8});
        CHECK(out.left.present);
        CHECK_FALSE(out.right.present);

        DetectionResult coincident;
        coincident.left = {true, {4, 4, 4}, 0.8, false};
        coincident.right = {true, {4, 4, 4}, 0.9, false};
        const DetectionResult co = apply_shape_constraint(coincident, m, {1, 1, 1}, {0, 0, 0});
        CHECK_FALSE(co.left.present);  // weaker side loses
        CHECK(co.left.rejected_by_shape);
        CHECK(co.right.present);
    }

    TEST_CASE("translated detections reach the same decision") {
        const std::vector<EarPairShape> shapes = random_pairs(25, 77);
        const ShapeModel m = fit_shape_model(shapes);
        DetectionResult r;
        r.left = {true, {4, 9, 9}, 0.8, false};
        r.right = {true, {27, 9, 9}, 0.7, false};
        const DetectionResult a = apply_shape_constraint(r, m, {2, 2, 2}, {-32, -16, -16});
        const DetectionResult b = apply_shape_constraint(r, m, {2, 2, 2}, {96, 48, 16});
        CHECK(a.left.present == b.left.present);
        CHECK(a.right.present == b.right.present);
        CHECK(a.right.rejected_by_shape == b.right.rejected_by_shape);
    }

    TEST_CASE("json persistence round-trips exactly and rejects corruption") {
        namespace fs = std::filesystem;
        const std::vector<EarPairShape> shapes = random_pairs(12, 3);
        const ShapeModel m = fit_shape_model(shapes);
        const std::string path = "shape_model_test.json";
        save_shape_model(m, path);
        const ShapeModel r = load_shape_model(path);
        CHECK(r.mean == m.mean);
        REQUIRE(r.eigvals.size() == m.eigvals.size());
        for (std::size_t j = 0; j < m.eigvals.size(); ++j) {
            CHECK(r.eigvals[j] == m.eigvals[j]);
            CHECK(r.eigvecs[j] == m.eigvecs[j]);
        }
        CHECK(r.m_max == m.m_max);
        CHECK(r.n_train == m.n_train);
        fs::remove(path);

        nlohmann::json bad = shape_model_to_json(m);
        bad["eigvals"][0] = -1.0;
        CHECK_THROWS_AS(shape_model_from_json(bad), format_error);
        nlohmann::json scaled = shape_model_to_json(m);
        scaled["eigvecs"][0][0] = scaled["eigvecs"][0][0].get<double>() + 0.5;
        CHECK_THROWS_AS(shape_model_from_json(scaled), format_error);
        nlohmann::json truncated = shape_model_to_json(m);
        truncated.erase("mean");
        CHECK_THROWS_AS(shape_model_from_json(truncated), format_error);
        CHECK_THROWS_AS(load_shape_model("missing_model.json"), format_error);
    }
}
