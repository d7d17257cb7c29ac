#pragma once

#include "pgd/types.hpp"

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pgd {

// A scored prediction ready for NMS / evaluation. final_score is the ranking
// key: cls_score * centerness * depth_score (factors default to 1 when a
// stage did not produce them).
struct ScoredDetection {
    int id = 0;
    int frame = 0;
    Box3D box;
    double cls_score = 1.0;
    double centerness = 1.0;
    double depth_score = 1.0;
    double final_score = 1.0;
};

// Ground truth for evaluation.
struct GtObject {
    int id = 0;
    int frame = 0;
    Box3D box;
};

// Area of the intersection of two rotated BEV rectangles (x-z plane).
double bev_intersection_area(const Box3D& a, const Box3D& b);

// IoU of two rotated BEV rectangles. Throws DomainError (degenerate_box) on
// non-positive extents.
double bev_iou(const Box3D& a, const Box3D& b);

// 3D IoU: BEV intersection times vertical overlap over the union volume.
double iou_3d(const Box3D& a, const Box3D& b);

// Greedy rotated NMS over one pool of detections: highest final_score first
// (ties by id ascending), suppress anything with BEV IoU strictly above the
// threshold. Returns kept indices in processing order.
std::vector<std::size_t> rotated_nms(const std::vector<ScoredDetection>& dets,
                                     double iou_threshold);

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

// One detection's match outcome, in descending score order.
struct MatchOutcome {
    std::size_t det_index = 0;
    bool tp = false;
    bool ignored = false;        // matched an ineligible ground truth
    int gt_index = -1;           // >= 0 when matched
};

// Greedy matching by descending final_score (ties by id). A detection takes
// the best remaining ground truth of the same frame; candidates must pass
// the threshold (IoU above, or center distance below, depending on mode).
// Inputs are expected to be single-class.
struct IouMatchResult {
    std::vector<MatchOutcome> outcomes;
    int eligible_gt = 0;
};

// KITTI-style matching: best-IoU ground truth, ignore-style handling of GT
// harder than `difficulty` (matching one is neither TP nor FP).
IouMatchResult match_by_iou(const std::vector<GtObject>& gt,
                            const std::vector<ScoredDetection>& dets, double iou_threshold,
                            int difficulty, bool use_3d_iou);

// Center-distance matching in the BEV plane (smallest distance wins).
struct DistanceMatch {
    std::size_t det_index = 0;
    int gt_index = -1;
    double distance = 0.0;
};

struct DistanceMatchResult {
    std::vector<MatchOutcome> outcomes;          // detection order: score desc
    std::vector<DistanceMatch> matches;          // TP pairs only
    int total_gt = 0;
};

DistanceMatchResult match_by_center_distance(const std::vector<GtObject>& gt,
                                             const std::vector<ScoredDetection>& dets,
                                             double max_distance);

// Raw PR points in descending score order (one per counted detection).
std::vector<PrPoint> pr_points(const std::vector<MatchOutcome>& outcomes, int gt_count);

enum class MatchMode { Iou3D, IouBev, CenterDistanceBev };

// Cumulative PR sweep under the given matching. Throws DomainError
// (no_ground_truth) when gt is empty; empty detections yield an empty curve.
std::vector<PrPoint> pr_curve(const std::vector<GtObject>& gt,
                              const std::vector<ScoredDetection>& dets, MatchMode mode,
                              double threshold, int difficulty = 2);

// Envelope-interpolated precision: max precision among curve samples with
// recall >= r, 0 when none qualifies.
double precision_at(const std::vector<PrPoint>& pr, double recall);

// 40-point interpolated KITTI AP. Returns nullopt when no eligible ground
// truth exists (no_ground_truth).
std::optional<double> kitti_ap(const std::vector<GtObject>& gt,
                               const std::vector<ScoredDetection>& dets, double iou_threshold,
                               int difficulty, bool use_3d_iou);

// 101-point nuScenes AP at a BEV center-distance threshold. With pr_clip the
// operating region below 0.1 recall/precision is removed and the rest
// renormalized; without it the plain interpolated average is returned.
// Returns nullopt when the class has no ground truth.
std::optional<double> nuscenes_ap(const std::vector<GtObject>& gt,
                                  const std::vector<ScoredDetection>& dets,
                                  double distance_threshold, bool pr_clip);

// True-positive error means over matched pairs: translation (BEV centers),
// scale (1 - aligned IoU), orientation (|wrapped yaw delta|), velocity (BEV),
// attribute (mismatch rate). has_tp is false when there are no pairs, in
// which case every error reads 1.
struct TpErrors {
    double ate = 1.0;
    double ase = 1.0;
    double aoe = 1.0;
    double ave = 1.0;
    double aae = 1.0;
    bool has_tp = false;
};

TpErrors tp_metrics(const std::vector<GtObject>& gt, const std::vector<ScoredDetection>& dets,
                    const std::vector<DistanceMatch>& matches);

// nuScenes detection score from mAP and the five mean TP errors, each error
// clamped at 1.
double nds(double m_ap, double m_ate, double m_ase, double m_aoe, double m_ave, double m_aae);

// Mean absolute and mean relative depth error over caller-supplied pairs of
// (ground-truth depth, predicted depth). Throws DomainError on empty input.
struct DepthErrorStats {
    double mean_abs = 0.0;
    double mean_rel = 0.0;
};

DepthErrorStats depth_error_stats(const std::vector<std::pair<double, double>>& pairs);

// Assembled evaluation output: flat ordered key/value metrics plus the pooled
// PR samples used by plot-data.
struct EvalReport {
    std::map<std::string, double> values;
    std::vector<PrPoint> pr;
    std::vector<std::string> notes;
};

} // namespace pgd
