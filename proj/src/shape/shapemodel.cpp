#include "shape/shapemodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pairloc {
namespace {

constexpr int kDim = 6;
using Mat6 = std::array<std::array<double, kDim>, kDim>;

// Cyclic Jacobi diagonalization. Each rotation zeroes one off-diagonal pair;
// sweeps repeat until the off-diagonal mass is negligible against the
// diagonal. Quadratic convergence makes the sweep cap generous.
void jacobi_eigen(Mat6 a, std::array<double, kDim>& eigvals, Mat6& eigvecs) {
    for (int i = 0; i < kDim; ++i)
        for (int j = 0; j < kDim; ++j) eigvecs[i][j] = (i == j) ? 1.0 : 0.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (int p = 0; p < kDim; ++p) {
            diag += std::fabs(a[p][p]);
            for (int q = p + 1; q < kDim; ++q) off += std::fabs(a[p][q]);
        }
        if (off <= std::numeric_limits<double>::epsilon() * std::max(diag, 1.0e-300)) break;

        for (int p = 0; p < kDim; ++p)
            for (int q = p + 1; q < kDim; ++q) {
                const double apq = a[p][q];
                if (apq == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < kDim; ++i) {
                    const double aip = a[i][p], aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for (int i = 0; i < kDim; ++i) {
                    const double api = a[p][i], aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                for (int i = 0; i < kDim; ++i) {
                    const double vip = eigvecs[i][p], viq = eigvecs[i][q];
                    eigvecs[i][p] = c * vip - s * viq;
                    eigvecs[i][q] = s * vip + c * viq;
                }
            }
    }
    for (int i = 0; i < kDim; ++i) eigvals[i] = a[i][i];
}

Vec3d voxel_to_mm(const VoxelIndex& v, Vec3d spacing, Vec3d origin) {
    return {origin.x + v.i * spacing.x, origin.y + v.j * spacing.y, origin.z + v.k * spacing.z};
}

// Shared by the over-threshold and coincident-peak paths: drop the side with
// the weaker response, right side on a tie.
DetectionResult reject_weaker(DetectionResult r) {
    SideDetection& loser = r.left.peak_value < r.right.peak_value ? r.left : r.right;
    loser.present = false;
    loser.rejected_by_shape = true;
    return r;
}

std::array<double, 6> six_from_json(const nlohmann::json& j, const char* field) {
    if (!j.is_array() || j.size() != 6)
        throw format_error(std::string("shape model: ") + field + " must have 6 entries");
    std::array<double, 6> out;
    for (int i = 0; i < 6; ++i) out[i] = j[i].get<double>();
    return out;
}

}  // namespace

EarPairShape pair_to_shape(Vec3d left, Vec3d right) {
    if (left == right)
        throw std::invalid_argument("pair_to_shape: coincident landmark points");
    const Vec3d c = (left + right) * 0.5;
    EarPairShape sh;
    sh.s = {left.x - c.x,  left.y - c.y,  left.z - c.z,
            right.x - c.x, right.y - c.y, right.z - c.z};
    return sh;
}

ShapeModel fit_shape_model(std::span<const EarPairShape> shapes, int k_max) {
    if (shapes.size() < 2)
        throw std::invalid_argument("fit_shape_model: need at least 2 training shapes");
    if (k_max < 1) throw std::invalid_argument("fit_shape_model: k_max must be positive");

    ShapeModel model;
    model.n_train = shapes.size();
    const double inv_n = 1.0 / double(shapes.size());

    model.mean.fill(0.0);
    for (const EarPairShape& sh : shapes)
        for (int i = 0; i < kDim; ++i) model.mean[i] += sh.s[i];
    for (int i = 0; i < kDim; ++i) model.mean[i] *= inv_n;

    Mat6 cov{};
    for (const EarPairShape& sh : shapes) {
        std::array<double, kDim> d;
        for (int i = 0; i < kDim; ++i) d[i] = sh.s[i] - model.mean[i];
        for (int i = 0; i < kDim; ++i)
            for (int j = 0; j < kDim; ++j) cov[i][j] += d[i] * d[j];
    }
    double trace = 0.0;
    for (int i = 0; i < kDim; ++i) {
        for (int j = 0; j < kDim; ++j) cov[i][j] *= inv_n;
        trace += cov[i][i];
    }
    if (!(trace > 0.0))
        throw degenerate_error("fit_shape_model: training shapes are all identical");

    std::array<double, kDim> eigvals;
    Mat6 eigvecs;
    jacobi_eigen(cov, eigvals, eigvecs);

    std::array<int, kDim> order;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return eigvals[a] > eigvals[b]; });

    const double floor = 1e-10 * trace;
    for (int r = 0; r < kDim && int(model.eigvals.size()) < k_max; ++r) {
        const int j = order[r];
        if (!(eigvals[j] > floor)) break;
        std::array<double, kDim> u;
        for (int i = 0; i < kDim; ++i) u[i] = eigvecs[i][j];
        model.eigvecs.push_back(u);
        model.eigvals.push_back(eigvals[j]);
    }
    if (model.eigvals.empty())
        throw degenerate_error("fit_shape_model: no variance above the noise floor");

    model.m_max = 0.0;
    for (const EarPairShape& sh : shapes)
        model.m_max = std::max(model.m_max, mahalanobis(sh, model));
    return model;
}

double mahalanobis(const EarPairShape& shape, const ShapeModel& model) {
    if (model.eigvals.empty() || model.eigvals.size() != model.eigvecs.size())
        throw std::invalid_argument("mahalanobis: model has no retained modes");
    std::array<double, kDim> d;
    for (int i = 0; i < kDim; ++i) d[i] = shape.s[i] - model.mean[i];
    double sum = 0.0;
    for (std::size_t j = 0; j < model.eigvals.size(); ++j) {
        double b = 0.0;
        for (int i = 0; i < kDim; ++i) b += d[i] * model.eigvecs[j][i];
        sum += b * b / model.eigvals[j];
    }
    return std::sqrt(sum);
}

DetectionResult apply_shape_constraint(const DetectionResult& result, const ShapeModel& model,
                                       Vec3d spacing, Vec3d origin) {
    if (!result.left.present || !result.right.present) return result;
    const Vec3d lmm = voxel_to_mm(result.left.peak_voxel, spacing, origin);
    const Vec3d rmm = voxel_to_mm(result.right.peak_voxel, spacing, origin);
    if (lmm == rmm) return reject_weaker(result);
    if (mahalanobis(pair_to_shape(lmm, rmm), model) > model.m_max)
        return reject_weaker(result);
    return result;
}

nlohmann::json shape_model_to_json(const ShapeModel& model) {
    nlohmann::json j;
    j["mean"] = model.mean;
    nlohmann::json vecs = nlohmann::json::array();
    for (const auto& u : model.eigvecs) vecs.push_back(u);
    j["eigvecs"] = vecs;
    j["eigvals"] = model.eigvals;
    j["m_max"] = model.m_max;
    j["n_train"] = model.n_train;
    j["covariance_convention"] = "population";
    return j;
}

ShapeModel shape_model_from_json(const nlohmann::json& j) {
    ShapeModel model;
    try {
        model.mean = six_from_json(j.at("mean"), "mean");
        for (const auto& v : j.at("eigvecs"))
            model.eigvecs.push_back(six_from_json(v, "eigvecs entry"));
        model.eigvals = j.at("eigvals").get<std::vector<double>>();
        model.m_max = j.at("m_max").get<double>();
        model.n_train = j.at("n_train").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("shape model: ") + e.what());
    }
    if (model.eigvals.empty() || model.eigvals.size() != model.eigvecs.size())
        throw format_error("shape model: eigvals/eigvecs size mismatch or empty");
    for (std::size_t i = 0; i < model.eigvals.size(); ++i) {
        if (!(model.eigvals[i] > 0.0) || !std::isfinite(model.eigvals[i]))
            throw format_error("shape model: eigenvalues must be positive and finite");
        if (i > 0 && model.eigvals[i] > model.eigvals[i - 1])
            throw format_error("shape model: eigenvalues must be sorted descending");
        double norm_sq = 0.0;
        for (double c : model.eigvecs[i]) norm_sq += c * c;
        if (std::fabs(norm_sq - 1.0) > 1e-6)
            throw format_error("shape model: eigenvectors must be unit length");
    }
    if (!(model.m_max >= 0.0) || !std::isfinite(model.m_max))
        throw format_error("shape model: m_max must be a non-negative real");
    return model;
}

void save_shape_model(const ShapeModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw format_error("shape model write '" + path + "': cannot open file");
    out << shape_model_to_json(model).dump(2) << "\n";
    if (!out) throw format_error("shape model write '" + path + "': write failed");
}

ShapeModel load_shape_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw format_error("shape model read '" + path + "': cannot open file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error("shape model read '" + path + "': " + e.what());
    }
    return shape_model_from_json(j);
}

}  // namespace pairloc
