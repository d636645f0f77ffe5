#include "pipeline/pipeline.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "core/labels.hpp"
#include "core/parallel.hpp"
#include "core/volume.hpp"
#include "detect/detector.hpp"
#include "eval/evalkit.hpp"
#include "net/net.hpp"
#include "shape/shapemodel.hpp"
#include "train/trainer.hpp"

namespace pairloc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<KeySpec> phantom_keys() {
    return {
        {"count_per_category", "50", "samples per category (B, L, R, N)"},
        {"seed", "0", "master seed for geometry, noise, and distractor draws"},
        {"dim_x", "32", "grid size along x, voxels"},
        {"dim_y", "32", "grid size along y, voxels"},
        {"dim_z", "32", "grid size along z, voxels"},
        {"spacing_mm", "2.25", "isotropic voxel spacing, mm"},
        {"head_semi_x_mm", "30", "head ellipsoid semi-axis along x, mm"},
        {"head_semi_y_mm", "26", "head ellipsoid semi-axis along y, mm"},
        {"head_semi_z_mm", "24", "head ellipsoid semi-axis along z, mm"},
        {"head_intensity", "0.3", "head tissue value"},
        {"ear_radius_mm", "5", "ear shell radius, mm"},
        {"ear_intensity", "1.0", "ear shell value; interior is 0.6x"},
        {"ear_separation_mm", "40", "distance between ear centers before jitter, mm"},
        {"ear_jitter_mm", "2", "per-axis uniform jitter of each ear center, mm"},
        {"distractor_probability", "0.2", "chance a volume gets one distractor blob"},
        {"distractor_intensity", "1.0", "distractor blob value"},
        {"noise_sigma_clean", "0.01", "Gaussian noise sigma, clean profile"},
        {"noise_sigma_lowdose", "0.05", "Gaussian noise sigma, low-dose profile"},
    };
}

std::vector<KeySpec> net_keys() {
    return {
        {"depth", "3", "encoder pooling steps; dims must divide by 2^depth"},
        {"base_channels", "8", "channels at full resolution; doubles per level"},
    };
}

PhantomConfig phantom_config_from(const RunConfig& cfg) {
    PhantomConfig pc;
    pc.dims = {static_cast<std::uint32_t>(cfg.get_int("dim_x")),
               static_cast<std::uint32_t>(cfg.get_int("dim_y")),
               static_cast<std::uint32_t>(cfg.get_int("dim_z"))};
    pc.spacing_mm = cfg.get_double("spacing_mm");
    pc.head_semi_axes_mm = {cfg.get_double("head_semi_x_mm"), cfg.get_double("head_semi_y_mm"),
                            cfg.get_double("head_semi_z_mm")};
    pc.head_intensity = cfg.get_double("head_intensity");
    pc.ear_radius_mm = cfg.get_double("ear_radius_mm");
    pc.ear_intensity = cfg.get_double("ear_intensity");
    pc.ear_separation_mm = cfg.get_double("ear_separation_mm");
    pc.ear_jitter_mm = cfg.get_double("ear_jitter_mm");
    pc.distractor_probability = cfg.get_double("distractor_probability");
    pc.distractor_intensity = cfg.get_double("distractor_intensity");
    pc.noise_sigma_clean = cfg.get_double("noise_sigma_clean");
    pc.noise_sigma_lowdose = cfg.get_double("noise_sigma_lowdose");
    pc.seed = cfg.get_u64("seed");
    return pc;
}

void write_json_file(const json& j, const std::string& path) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw format_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw format_error("write failed for '" + path + "'");
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw format_error("cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw format_error(path + ": " + e.what());
    }
}

Vec3d voxel_to_mm(const VoxelIndex& v, const Vec3d& spacing, const Vec3d& origin) {
    return {origin.x + spacing.x * static_cast<double>(v.i),
            origin.y + spacing.y * static_cast<double>(v.j),
            origin.z + spacing.z * static_cast<double>(v.k)};
}

double loc_error_mm(const VoxelIndex& a, const VoxelIndex& b, const Vec3d& spacing) {
    const double dx = (static_cast<double>(a.i) - static_cast<double>(b.i)) * spacing.x;
    const double dy = (static_cast<double>(a.j) - static_cast<double>(b.j)) * spacing.y;
    const double dz = (static_cast<double>(a.k) - static_cast<double>(b.k)) * spacing.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

json side_to_json(const SideDetection& s) {
    return json{{"present", s.present},
                {"peak_voxel", {s.peak_voxel.i, s.peak_voxel.j, s.peak_voxel.k}},
                {"peak_value", s.peak_value},
                {"rejected_by_shape", s.rejected_by_shape}};
}

SideDetection side_from_json(const json& j) {
    SideDetection s;
    try {
        s.present = j.at("present").get<bool>();
        const auto& pv = j.at("peak_voxel");
        if (!pv.is_array() || pv.size() != 3)
            throw format_error("peak_voxel must be a 3-element array");
        s.peak_voxel = {pv[0].get<std::uint32_t>(), pv[1].get<std::uint32_t>(),
                        pv[2].get<std::uint32_t>()};
        s.peak_value = j.at("peak_value").get<double>();
        s.rejected_by_shape = j.at("rejected_by_shape").get<bool>();
    } catch (const json::exception& e) {
        throw format_error(std::string("bad side entry: ") + e.what());
    }
    return s;
}

/// volume_id -> result, in report order. Error entries are rejected.
std::map<std::string, DetectionResult> index_report(const json& report, const std::string& path) {
    if (!report.is_object() || !report.contains("volumes") || !report["volumes"].is_array())
        throw format_error(path + ": expected an object with a 'volumes' array");
    std::map<std::string, DetectionResult> out;
    for (const json& entry : report["volumes"]) {
        std::string id;
        try {
            id = entry.at("volume_id").get<std::string>();
        } catch (const json::exception& e) {
            throw format_error(path + ": volume entry without volume_id: " + e.what());
        }
        if (entry.contains("error"))
            throw format_error(path + ": entry '" + id +
                               "' is an error entry; rerun detection cleanly before evaluating");
        DetectionResult r;
        try {
            r.left = side_from_json(entry.at("left"));
            r.right = side_from_json(entry.at("right"));
        } catch (const json::exception& e) {
            throw format_error(path + ": entry '" + id + "': " + e.what());
        }
        if (!out.emplace(id, r).second)
            throw format_error(path + ": duplicate volume_id '" + id + "'");
    }
    return out;
}

struct JoinedCase {
    EvalCase ec;
    DetectionResult compare_result;  // valid only when a compare report is given
};

std::vector<JoinedCase> join_cases(const std::vector<ManifestEntry>& manifest,
                                   const std::map<std::string, DetectionResult>& results,
                                   const std::map<std::string, DetectionResult>* compare,
                                   const std::string& report_path) {
    std::vector<JoinedCase> cases;
    cases.reserve(manifest.size());
    for (const ManifestEntry& entry : manifest) {
        const auto it = results.find(entry.annotation.volume_id);
        if (it == results.end())
            throw format_error(report_path + ": no entry for manifest volume '" +
                               entry.annotation.volume_id + "'");
        const VolumeGrid vol = read_volume(entry.volume_path);
        JoinedCase jc;
        jc.ec.result_id = it->first;
        jc.ec.result = it->second;
        jc.ec.truth = entry.annotation;
        jc.ec.spacing = vol.spacing();
        jc.ec.origin = vol.origin();
        jc.ec.has_distractor = !entry.annotation.distractor_voxels.empty();
        jc.ec.noise_profile = entry.noise_profile;
        if (compare) {
            const auto cit = compare->find(entry.annotation.volume_id);
            if (cit == compare->end())
                throw format_error("compare report: no entry for manifest volume '" +
                                   entry.annotation.volume_id + "'");
            jc.compare_result = cit->second;
        }
        cases.push_back(std::move(jc));
    }
    return cases;
}

}  // namespace

RunConfig make_run_config(const std::string& command) {
    if (command == "gen-data") {
        std::vector<KeySpec> keys{
            {"out", "", "output directory for volumes and manifest.json", true},
        };
        for (auto& k : phantom_keys()) keys.push_back(std::move(k));
        return RunConfig(command, std::move(keys));
    }
    if (command == "train") {
        std::vector<KeySpec> keys{
            {"manifest", "", "dataset manifest JSON", true},
            {"checkpoint_dir", "", "directory for UNC1 checkpoints", true},
            {"loss_csv", "", "loss log path; default <checkpoint_dir>/loss.csv"},
            {"resume", "", "checkpoint to continue from (ckpt_ep<N>.unc1)"},
            {"checkpoint_every", "0", "epoch interval between checkpoints; 0 = final only"},
            {"epochs", "1", "total epochs to reach, counting any resumed epochs"},
            {"learning_rate", "1e-4", "SGD learning rate"},
            {"momentum", "0.9", "SGD momentum coefficient"},
            {"batch_size", "1", "samples per parameter update"},
            {"shuffle", "on", "reshuffle sample order each epoch"},
            {"seed", "0", "seed for weight init and shuffling"},
            {"sigma", "3", "target Gaussian sigma, voxels"},
            {"floor_threshold", "0.05", "zero target magnitudes below this"},
            {"suppression", "on", "negative target at the opposite landmark"},
            {"threads", "0", "worker threads; 0 = hardware default"},
        };
        for (auto& k : net_keys()) keys.push_back(std::move(k));
        return RunConfig(command, std::move(keys));
    }
    if (command == "shape-fit") {
        return RunConfig(command, {
            {"manifest", "", "dataset manifest JSON", true},
            {"out", "", "output path for the shape model JSON", true},
        });
    }
    if (command == "detect") {
        std::vector<KeySpec> keys{
            {"manifest", "", "dataset manifest JSON", true},
            {"checkpoint", "", "UNC1 checkpoint to run", true},
            {"out", "", "output path for the detection report JSON", true},
            {"shape_model", "", "shape model JSON; empty disables the pair constraint"},
            {"p_thres", "0.5", "presence threshold on the peak response"},
            {"threads", "0", "worker threads; 0 = hardware default"},
        };
        return RunConfig(command, std::move(keys));
    }
    if (command == "eval") {
        return RunConfig(command, {
            {"report", "", "detection report JSON to score", true},
            {"manifest", "", "dataset manifest JSON with ground truth", true},
            {"out", "", "output path for the evaluation JSON", true},
            {"compare", "", "second detection report for a paired t-test"},
        });
    }
    throw config_error("unknown command '" + command + "'");
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_array()) throw format_error(path + ": manifest must be a JSON array");
    const fs::path base = fs::path(path).parent_path();
    std::vector<ManifestEntry> entries;
    entries.reserve(j.size());
    for (const json& rec : j) {
        ManifestEntry e;
        try {
            const std::string rel = rec.at("volume_path").get<std::string>();
            const fs::path p(rel);
            e.volume_path = p.is_absolute() ? p.string() : (base / p).string();
            e.annotation = annotation_from_json(rec.at("annotation"));
            if (rec.contains("noise_profile"))
                e.noise_profile = noise_profile_from_name(rec["noise_profile"].get<std::string>());
        } catch (const json::exception& ex) {
            throw format_error(path + ": bad manifest record: " + ex.what());
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

std::string cmd_gen_data(const RunConfig& cfg, std::ostream* log) {
    const std::string out_dir = cfg.get_string("out");
    const int count = cfg.get_int("count_per_category");
    const PhantomConfig pc = phantom_config_from(cfg);

    const std::vector<PhantomSample> samples = generate_phantoms(pc, count);
    fs::create_directories(out_dir);

    json manifest = json::array();
    std::array<int, 4> per_category{};
    for (const PhantomSample& s : samples) {
        const std::string file_name = s.annotation.volume_id + ".vvr1";
        write_volume(s.volume, (fs::path(out_dir) / file_name).string());
        manifest.push_back(json{{"volume_path", file_name},
                                {"annotation", annotation_to_json(s.annotation)},
                                {"noise_profile", noise_profile_name(s.noise_profile)}});
        per_category[static_cast<int>(s.annotation.category)] += 1;
    }
    const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
    write_json_file(manifest, manifest_path);

    if (log)
        *log << "generated " << samples.size() << " volumes (B=" << per_category[0]
             << " L=" << per_category[1] << " R=" << per_category[2] << " N=" << per_category[3]
             << ") -> " << manifest_path << "\n";
    return manifest_path;
}

std::string cmd_train(const RunConfig& cfg, std::ostream* log) {
    set_thread_count(cfg.get_int("threads"));

    const std::vector<ManifestEntry> manifest = load_manifest(cfg.get_string("manifest"));
    std::vector<TrainSample> dataset;
    dataset.reserve(manifest.size());
    for (const ManifestEntry& e : manifest)
        dataset.push_back({read_volume(e.volume_path), e.annotation});

    NetArch arch;
    arch.depth = cfg.get_int("depth");
    arch.base_channels = cfg.get_int("base_channels");

    TrainConfig tc;
    tc.learning_rate = cfg.get_double("learning_rate");
    tc.momentum = cfg.get_double("momentum");
    tc.batch_size = cfg.get_int("batch_size");
    tc.epochs = cfg.get_int("epochs");
    tc.seed = cfg.get_u64("seed");
    tc.shuffle = cfg.get_bool("shuffle");

    LabelConfig lc;
    lc.sigma = cfg.get_double("sigma");
    lc.floor_threshold = cfg.get_double("floor_threshold");
    lc.suppression_enabled = cfg.get_bool("suppression");

    TrainIoOptions io;
    io.checkpoint_dir = cfg.get_string("checkpoint_dir");
    io.checkpoint_every = cfg.get_int("checkpoint_every");
    io.loss_csv = cfg.get_string("loss_csv");
    if (io.loss_csv.empty()) io.loss_csv = (fs::path(io.checkpoint_dir) / "loss.csv").string();
    io.resume = cfg.get_string("resume");

    const TrainState state = train(dataset, arch, tc, lc, io);

    char name[32];
    std::snprintf(name, sizeof(name), "ckpt_ep%06d.unc1", state.epoch);
    const std::string final_path = (fs::path(io.checkpoint_dir) / name).string();
    if (log)
        *log << "trained " << state.epoch << " epochs on " << dataset.size()
             << " volumes; final loss " << (state.loss_history.empty()
                                                ? 0.0
                                                : state.loss_history.back())
             << " -> " << final_path << "\n";
    return final_path;
}

void cmd_shape_fit(const RunConfig& cfg, std::ostream* log) {
    const std::vector<ManifestEntry> manifest = load_manifest(cfg.get_string("manifest"));
    std::vector<EarPairShape> shapes;
    for (const ManifestEntry& e : manifest) {
        const LandmarkAnnotation& ann = e.annotation;
        if (!(ann.left_present && ann.right_present)) continue;
        const VolumeGrid vol = read_volume(e.volume_path);
        shapes.push_back(pair_to_shape(voxel_to_mm(ann.left_voxel, vol.spacing(), vol.origin()),
                                       voxel_to_mm(ann.right_voxel, vol.spacing(), vol.origin())));
    }
    if (shapes.size() < 2)
        throw degenerate_error("shape-fit: need at least 2 both-present samples, found " +
                               std::to_string(shapes.size()));

    const ShapeModel model = fit_shape_model(shapes);
    const std::string out = cfg.get_string("out");
    save_shape_model(model, out);
    if (log)
        *log << "fitted shape model on " << shapes.size() << " pairs; " << model.eigvals.size()
             << " modes, m_max " << model.m_max << " -> " << out << "\n";
}

void cmd_detect(const RunConfig& cfg, std::ostream* log) {
    set_thread_count(cfg.get_int("threads"));

    const std::string checkpoint_path = cfg.get_string("checkpoint");
    const NetParams params = load_checkpoint(checkpoint_path);

    const std::string shape_path = cfg.get_string("shape_model");
    ShapeModel model;
    const bool constrain = !shape_path.empty();
    if (constrain) model = load_shape_model(shape_path);

    DetectorConfig dc;
    dc.p_thres = cfg.get_double("p_thres");

    const std::string manifest_path = cfg.get_string("manifest");
    const std::vector<ManifestEntry> manifest = load_manifest(manifest_path);

    json volumes = json::array();
    int failed = 0;
    for (const ManifestEntry& e : manifest) {
        const VolumeGrid vol = read_volume(e.volume_path);
        json entry{{"volume_id", e.annotation.volume_id}};
        try {
            const Tensor out = net_forward(params, vol, nullptr);
            const std::size_t n = out.channel_size();
            VolumeGrid left_map(vol.dims(), vol.spacing(), vol.origin(),
                                std::vector<double>(out.channel(0), out.channel(0) + n));
            VolumeGrid right_map(vol.dims(), vol.spacing(), vol.origin(),
                                 std::vector<double>(out.channel(1), out.channel(1) + n));
            DetectionResult result = detect(left_map, right_map, dc);
            if (constrain)
                result = apply_shape_constraint(result, model, vol.spacing(), vol.origin());
            entry["left"] = side_to_json(result.left);
            entry["right"] = side_to_json(result.right);
            entry["category"] = category_name(categorize(result));
        } catch (const std::invalid_argument& ex) {
            entry["error"] = ex.what();
            ++failed;
        }
        volumes.push_back(std::move(entry));
    }

    const json report{{"config", json{{"manifest", manifest_path},
                                      {"checkpoint", checkpoint_path},
                                      {"shape_model", shape_path},
                                      {"p_thres", dc.p_thres}}},
                      {"volumes", std::move(volumes)}};
    const std::string out = cfg.get_string("out");
    write_json_file(report, out);
    if (log)
        *log << "detected on " << manifest.size() << " volumes (" << failed << " failed) -> "
             << out << "\n";
    if (failed > 0)
        throw config_error("detect: " + std::to_string(failed) +
                           " volume(s) failed; see error entries in " + out);
}

void cmd_eval(const RunConfig& cfg, std::ostream* log) {
    const std::string report_path = cfg.get_string("report");
    const auto results = index_report(read_json_file(report_path), report_path);

    const std::string compare_path = cfg.get_string("compare");
    std::map<std::string, DetectionResult> compare_results;
    const bool comparing = !compare_path.empty();
    if (comparing) compare_results = index_report(read_json_file(compare_path), compare_path);

    const std::vector<ManifestEntry> manifest = load_manifest(cfg.get_string("manifest"));
    const std::vector<JoinedCase> joined =
        join_cases(manifest, results, comparing ? &compare_results : nullptr, report_path);

    std::vector<EvalCase> cases;
    cases.reserve(joined.size());
    for (const JoinedCase& jc : joined) cases.push_back(jc.ec);
    const EvalReport report = score(cases);
    json out_json = eval_report_to_json(report);

    if (comparing) {
        // Pair per-side localization errors on the volumes both runs
        // classified correctly; a correct classification implies the
        // prediction's presence flags match the truth.
        std::vector<double> errs_a;
        std::vector<double> errs_b;
        for (const JoinedCase& jc : joined) {
            const Category truth = jc.ec.truth.category;
            if (categorize(jc.ec.result) != truth || categorize(jc.compare_result) != truth)
                continue;
            const auto add_side = [&](bool present, const VoxelIndex& truth_vox,
                                      const SideDetection& a, const SideDetection& b) {
                if (!present) return;
                errs_a.push_back(loc_error_mm(a.peak_voxel, truth_vox, jc.ec.spacing));
                errs_b.push_back(loc_error_mm(b.peak_voxel, truth_vox, jc.ec.spacing));
            };
            add_side(jc.ec.truth.left_present, jc.ec.truth.left_voxel, jc.ec.result.left,
                     jc.compare_result.left);
            add_side(jc.ec.truth.right_present, jc.ec.truth.right_voxel, jc.ec.result.right,
                     jc.compare_result.right);
        }
        if (errs_a.size() < 2)
            throw degenerate_error("eval: comparison needs at least 2 paired localization "
                                   "errors common to both reports, found " +
                                   std::to_string(errs_a.size()));
        const TTestResult tt = paired_t_test(errs_a, errs_b);
        double mean_a = 0.0;
        double mean_b = 0.0;
        for (const double v : errs_a) mean_a += v;
        for (const double v : errs_b) mean_b += v;
        mean_a /= static_cast<double>(errs_a.size());
        mean_b /= static_cast<double>(errs_b.size());
        out_json["comparison"] = json{{"compare_report", compare_path},
                                      {"n_pairs", errs_a.size()},
                                      {"t", tt.t},
                                      {"df", tt.df},
                                      {"p_two_sided", tt.p_two_sided},
                                      {"mean_mm", mean_a},
                                      {"compare_mean_mm", mean_b}};
    }

    const std::string out = cfg.get_string("out");
    write_json_file(out_json, out);
    if (log)
        *log << "evaluated " << report.total << " volumes; error rate " << report.error_rate
             << " -> " << out << "\n";
}

}  // namespace pairloc
