#pragma once

#include "pgd/depth_graph.hpp"
#include "pgd/prob_depth.hpp"
#include "pgd/scene_sim.hpp"

#include <cstdint>
#include <string>

namespace pgd {

enum class EvalMode { Kitti, Nuscenes, Both };
enum class DepthSource { Local, Fused };

const char* to_string(EvalMode m);
EvalMode eval_mode_from_string(const std::string& s);        // throws ParseError
const char* to_string(DepthSource s);
DepthSource depth_source_from_string(const std::string& s);  // throws ParseError

struct QuantizerConfig {
    DepthDivision method = DepthDivision::Uniform;
    double unit = 10.0;
    double d_max = 70.0;
    double d_lo = 1.0;

    DepthQuantizer build() const { return build_quantizer(d_max, unit, method, d_lo); }
};

// Every knob of the pipeline, simulator and evaluator. Parsed from a
// sectioned key=value file and overridable key-by-key ("section.key").
struct RunConfig {
    QuantizerConfig quantizer;

    // pipeline
    double lambda = kDefaultLambda;
    DepthScoreVariant depth_score = DepthScoreVariant::Top2Avg;
    int k = 5;
    double t2d_max = 0.0;  // 0 derives the image diagonal from the file header
    DistanceVariant distance = DistanceVariant::Centers2D;
    bool gating = true;
    double v_min = kDefaultVMin;

    // eval
    EvalMode eval_mode = EvalMode::Nuscenes;
    bool pr_clip = true;
    double nms_iou = 0.25;
    bool use_depth_score = true;
    DepthSource depth_source = DepthSource::Fused;
    double pr_threshold = 2.0;  // center-distance matching for the PR table (m)

    // sim
    std::uint64_t seed = 0;
    SceneConfig scene;
    NoiseConfig noise;

    void validate() const;  // throws ParseError on invalid values
};

// Parses the sectioned config text. Unknown sections or keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Same parse applied over an existing config, so a file can refine defaults
// or an earlier file. Error messages carry the file path.
void parse_config_into(const std::string& text, RunConfig& cfg);
void merge_config_file(RunConfig& cfg, const std::string& path);

// Applies one "section.key" = value override. Throws ParseError.
void apply_config_value(RunConfig& cfg, const std::string& dotted_key,
                        const std::string& value);

// Reads one "section.key" back as its canonical string form.
std::string get_config_value(const RunConfig& cfg, const std::string& dotted_key);

// Canonical serialization of the full config (includable in reports).
std::string dump_config(const RunConfig& cfg);

} // namespace pgd
