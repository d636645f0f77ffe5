// pipeline.hpp: the five toolkit commands as library functions over a
// RunConfig: phantom dataset generation, training, shape-model fitting,
// detection, and evaluation.
//
// Every command is deterministic given its config and input files. Artifact
// formats: volumes as VVR1, checkpoints as UNC1, everything else JSON. The
// dataset manifest is a JSON array of records {volume_path, annotation,
// noise_profile}; volume paths are stored relative to the manifest file and
// resolved against its directory on load.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "core/annotation.hpp"
#include "phantom/phantom.hpp"
#include "pipeline/config.hpp"

namespace pairloc {

/// Fresh config pre-loaded with the schema for one of "gen-data", "train",
/// "shape-fit", "detect", "eval". Unknown command raises a config error.
RunConfig make_run_config(const std::string& command);

struct ManifestEntry {
    std::string volume_path;  // resolved, loadable as-is
    LandmarkAnnotation annotation;
    NoiseProfile noise_profile = NoiseProfile::Clean;
};

std::vector<ManifestEntry> load_manifest(const std::string& path);

/// Generate the four-category phantom dataset under cfg "out": one VVR1 file
/// per volume plus manifest.json. Returns the manifest path. Per-category
/// counts go to *log when given.
std::string cmd_gen_data(const RunConfig& cfg, std::ostream* log = nullptr);

/// Train on the manifest dataset; writes checkpoints and the loss CSV under
/// the configured paths. Returns the final checkpoint path.
std::string cmd_train(const RunConfig& cfg, std::ostream* log = nullptr);

/// Fit the pair-shape model on the manifest's both-present samples (voxel
/// coordinates mapped to mm through each volume's spacing and origin) and
/// write it as JSON. Fewer than two usable samples is a degenerate-model
/// error.
void cmd_shape_fit(const RunConfig& cfg, std::ostream* log = nullptr);

/// Run the checkpoint over every manifest volume and write the detection
/// report JSON: {"config": applied settings, "volumes": [per-volume
/// {volume_id, left, right, category} entries]}. A volume the network cannot
/// process becomes an {"volume_id", "error"} entry; any such entry fails the
/// command after the report is written.
void cmd_detect(const RunConfig& cfg, std::ostream* log = nullptr);

/// Join a detection report with the manifest ground truth and write the
/// evaluation report JSON. With "compare" set to a second detection report,
/// adds a paired t-test over per-side localization errors on the volumes
/// both runs classified correctly.
void cmd_eval(const RunConfig& cfg, std::ostream* log = nullptr);

}  // namespace pairloc
