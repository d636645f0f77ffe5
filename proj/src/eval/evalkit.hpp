// evalkit.hpp: scoring of detection runs against ground truth: confusion
// matrix over the four categories, stratified error rates, localization
// error statistics, and a paired t-test for comparing two methods.
#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "core/annotation.hpp"
#include "detect/detector.hpp"
#include "phantom/phantom.hpp"

namespace pairloc {

/// One volume's prediction joined with its ground truth and grid geometry.
/// result_id comes from the detection report and must equal truth.volume_id.
struct EvalCase {
    std::string result_id;
    DetectionResult result;
    LandmarkAnnotation truth;
    Vec3d spacing{1, 1, 1};
    Vec3d origin{0, 0, 0};
    bool has_distractor = false;
    NoiseProfile noise_profile = NoiseProfile::Clean;
};

struct StratumStats {
    int total = 0;
    int errors = 0;
    double error_rate = 0.0;
};

struct EvalReport {
    // confusion[predicted][truth] over category order B, L, R, N.
    std::array<std::array<int, 4>, 4> confusion{};
    int total = 0;
    double error_rate = 0.0;
    // Keys "<distractor|no_distractor>/<clean|lowdose>".
    std::map<std::string, StratumStats> strata;
    // One entry per present-and-correct side of a correctly-classified volume.
    std::vector<double> localization_errors_mm;
    double loc_mean_mm = 0.0;
    double loc_std_mm = 0.0;  // n-1 denominator; 0 for fewer than 2 entries
};

/// Tally categories (prediction vs truth), error rates overall and per
/// stratum, and localization distances in mm for the sides of
/// correctly-classified volumes that are present in both truth and
/// prediction.
EvalReport score(std::span<const EvalCase> cases);

struct TTestResult {
    double t = 0.0;
    int df = 0;
    double p_two_sided = 1.0;
};

/// Paired two-sided Student t-test on element-wise differences a - b.
/// Requires equal lengths of at least 2 and a nonzero difference variance.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// CDF of Student's t distribution, evaluated through the regularized
/// incomplete beta function (continued fraction, tolerance 1e-12).
double student_t_cdf(double t, int df);

nlohmann::json eval_report_to_json(const EvalReport& report);

}  // namespace pairloc
