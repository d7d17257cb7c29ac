#pragma once

#include "pgd/camera.hpp"
#include "pgd/records.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pgd {

struct CategoryPrior {
    std::string name;
    double weight = 1.0;                  // mixture weight
    double w_mean = 1.0, w_std = 0.0;
    double l_mean = 1.0, l_std = 0.0;
    double h_mean = 1.0, h_std = 0.0;
};

std::vector<CategoryPrior> default_categories();  // car, pedestrian, cyclist

// Ground-plane scene layout. Objects stand on y = ground_y plus a structured
// bottom offset with marginal std bottom_sigma (category-correlated part,
// smooth spatial field, small iid residual); bottom_sigma = 0 puts every
// bottom exactly at ground_y.
struct SceneConfig {
    CameraModel cam{721.5377, 609.5593, 172.854, 0.0, 0.0, 0.0};
    double image_w = 1242.0;
    double image_h = 375.0;
    int frames = 1;
    int n_min = 6;
    int n_max = 10;
    double depth_min = 5.0;
    double depth_max = 45.0;
    double ground_y = 1.65;
    double bottom_sigma = 0.005;
    double lateral_extent = 12.0;
    std::vector<CategoryPrior> categories = default_categories();

    void validate() const;  // throws ParseError on inconsistent config values
};

// Error profile of the synthetic prediction head. Depth noise std grows
// linearly with depth: sigma(d) = depth_a + depth_b * d. A configurable
// fraction of objects are anchors: depth noise scaled down by anchor_scale,
// sharper logits, exempt from corruption. The alpha generator is quality
// aware, the way a trained location-aware weight is: anchors shift the
// fusion logit up by alpha_quality, corrupted instances down by twice it.
struct NoiseConfig {
    double depth_a = 0.5;
    double depth_b = 0.05;
    double temperature = 1.0;         // logit bump width, in bins
    double corruption = 0.18;         // chance a distribution collapses to noise
    double confusion = 0.06;          // chance the class argmax flips
    double center_jitter = 1.5;       // px
    double size_sigma = 0.03;         // log-scale
    double yaw_sigma = 0.05;          // rad
    double vel_sigma = 0.3;           // m/s per axis
    double attr_flip = 0.05;
    double alpha_mean = 0.5;          // logit of the global-fusion weight
    double alpha_std = 0.4;
    double alpha_quality = 1.5;       // logit shift per quality step
    double anchor_fraction = 0.25;
    double anchor_scale = 0.1;
    double anchor_temperature = 0.35;

    void validate() const;
};

// One frame of ground-truth objects; deterministic in (config, seed, frame).
// Throws DomainError (infeasible_spec) when placement fails 1000 attempts.
std::vector<ObjectRecord> generate_scene(const SceneConfig& cfg, std::uint64_t seed, int frame);

// Synthesizes raw prediction records for the given ground truth: noisy d_r,
// a logit bump whose decode equals the noisy depth, noisy class vector over
// category_count entries, centerness from 2D center accuracy, per-instance
// alpha. Deterministic in (inputs, seed).
std::vector<ObjectRecord> corrupt_to_predictions(const std::vector<ObjectRecord>& gt,
                                                 const CameraModel& cam,
                                                 const DepthQuantizer& quantizer,
                                                 const NoiseConfig& noise, int category_count,
                                                 std::uint64_t seed);

// Which raw prediction fields get replaced by their ground-truth values.
struct OracleSpec {
    bool score_class = false;
    bool offset = false;
    bool depth = false;
    bool size = false;
    bool rotation = false;
    bool velocity = false;
    bool attribute = false;

    static OracleSpec all();
    static OracleSpec none();
    bool any() const;
    std::string label() const;  // "none", "all" or "depth+size" style
};

// Parses "none", "all" or a +/, separated flag list (score_class, offset,
// depth, size, rotation, velocity, attribute). Throws ParseError.
OracleSpec parse_oracle_spec(const std::string& text);

// Replaces the flagged raw fields of each prediction with ground truth,
// aligned by (frame, id). Throws DomainError (id_mismatch) when a prediction
// has no ground-truth partner.
void apply_oracles(std::vector<ObjectRecord>& predictions,
                   const std::vector<ObjectRecord>& gt, const CameraModel& cam,
                   const DepthQuantizer& quantizer, const OracleSpec& spec);

// Logit bump in bin space whose decode equals target (clamped to the
// reachable decode interval); width in bins. Exposed for tests.
std::vector<double> logits_for_target_depth(const DepthQuantizer& q, double target,
                                            double width_bins);

} // namespace pgd
