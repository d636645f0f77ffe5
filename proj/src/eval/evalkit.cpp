#include "eval/evalkit.hpp"

#include <cmath>
#include <stdexcept>

namespace pairloc {
namespace {

constexpr double kBetaTol = 1e-12;

// Continued-fraction core of the regularized incomplete beta function
// (modified Lentz iteration).
double beta_cf(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kBetaTol) return h;
    }
    throw std::runtime_error("incomplete beta: continued fraction failed to converge");
}

// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    // The continued fraction converges fast only below the pivot; use the
    // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) past it.
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

std::string stratum_key(bool has_distractor, NoiseProfile profile) {
    return std::string(has_distractor ? "distractor" : "no_distractor") + "/" +
           noise_profile_name(profile);
}

}  // namespace

EvalReport score(std::span<const EvalCase> cases) {
    if (cases.empty()) throw std::invalid_argument("score: empty case list");

    EvalReport report;
    for (const EvalCase& ec : cases) {
        if (ec.result_id != ec.truth.volume_id)
            throw std::invalid_argument("score: result '" + ec.result_id +
                                        "' does not match annotation '" + ec.truth.volume_id +
                                        "'");
        const Category predicted = categorize(ec.result);
        const Category truth = ec.truth.category;
        ++report.confusion[int(predicted)][int(truth)];
        ++report.total;
        const bool wrong = predicted != truth;

        StratumStats& st = report.strata[stratum_key(ec.has_distractor, ec.noise_profile)];
        ++st.total;
        if (wrong) ++st.errors;

        if (wrong) continue;
        const auto side_error = [&](const SideDetection& side, const VoxelIndex& truth_vox) {
            const double dx = (double(side.peak_voxel.i) - truth_vox.i) * ec.spacing.x;
            const double dy = (double(side.peak_voxel.j) - truth_vox.j) * ec.spacing.y;
            const double dz = (double(side.peak_voxel.k) - truth_vox.k) * ec.spacing.z;
            report.localization_errors_mm.push_back(std::sqrt(dx * dx + dy * dy + dz * dz));
        };
        if (ec.truth.left_present && ec.result.left.present)
            side_error(ec.result.left, ec.truth.left_voxel);
        if (ec.truth.right_present && ec.result.right.present)
            side_error(ec.result.right, ec.truth.right_voxel);
    }

    int diag = 0;
    for (int c = 0; c < 4; ++c) diag += report.confusion[c][c];
    report.error_rate = 1.0 - double(diag) / double(report.total);
    for (auto& [key, st] : report.strata)
        st.error_rate = st.total > 0 ? double(st.errors) / double(st.total) : 0.0;

    const std::size_t n = report.localization_errors_mm.size();
    if (n > 0) {
        double sum = 0.0;
        for (double e : report.localization_errors_mm) sum += e;
        report.loc_mean_mm = sum / double(n);
        if (n > 1) {
            double sq = 0.0;
            for (double e : report.localization_errors_mm) {
                const double d = e - report.loc_mean_mm;
                sq += d * d;
            }
            report.loc_std_mm = std::sqrt(sq / double(n - 1));
        }
    }
    return report;
}

double student_t_cdf(double t, int df) {
    if (df < 1) throw std::invalid_argument("student_t_cdf: df must be >= 1");
    if (t == 0.0) return 0.5;
    const double x = double(df) / (double(df) + t * t);
    const double half_tail = 0.5 * reg_inc_beta(double(df) / 2.0, 0.5, x);
    return t > 0.0 ? 1.0 - half_tail : half_tail;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("paired_t_test: length mismatch");
    if (a.size() < 2) throw std::invalid_argument("paired_t_test: need at least 2 pairs");

    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += (a[i] - b[i]) / double(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = (a[i] - b[i]) - mean;
        sq += d * d;
    }
    const double sd = std::sqrt(sq / double(n - 1));
    if (!(sd > 0.0))
        throw degenerate_error("paired_t_test: differences have zero variance");

    TTestResult r;
    r.t = mean / (sd / std::sqrt(double(n)));
    r.df = int(n) - 1;
    r.p_two_sided = 2.0 * (1.0 - student_t_cdf(std::fabs(r.t), r.df));
    return r;
}

nlohmann::json eval_report_to_json(const EvalReport& report) {
    nlohmann::json j;
    nlohmann::json confusion = nlohmann::json::array();
    for (int p = 0; p < 4; ++p) {
        nlohmann::json row = nlohmann::json::array();
        for (int t = 0; t < 4; ++t) row.push_back(report.confusion[p][t]);
        confusion.push_back(row);
    }
    j["confusion_predicted_by_truth"] = confusion;
    j["category_order"] = {"B", "L", "R", "N"};
    j["total"] = report.total;
    j["error_rate"] = report.error_rate;
    nlohmann::json strata;
    for (const auto& [key, st] : report.strata) {
        strata[key] = {{"total", st.total}, {"errors", st.errors}, {"error_rate", st.error_rate}};
    }
    j["strata"] = strata;
    j["localization_errors_mm"] = report.localization_errors_mm;
    j["localization_mean_mm"] = report.loc_mean_mm;
    j["localization_std_mm"] = report.loc_std_mm;
    return j;
}

}  // namespace pairloc
