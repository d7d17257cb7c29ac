#pragma once

#include "pgd/config.hpp"
#include "pgd/metrics.hpp"
#include "pgd/records.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pgd {

// Fills d_p, s_d and d_l on every prediction record using the file header's
// quantizer. Ground-truth records pass through untouched.
void decode_records(RecordFile& file, const RunConfig& cfg);

// Builds the per-frame propagation graph over decoded predictions and fills
// d_g, d (final) and the no_geometry flag. When edge_dump is non-null it
// receives a deterministic per-edge table.
void propagate_records(RecordFile& file, const RunConfig& cfg, std::string* edge_dump);

// Ground truth and scored detections extracted from record files.
std::vector<GtObject> gt_objects(const RecordFile& file);

// Converts prediction records into scored detections (pose back-projected at
// the configured depth source) and applies per-frame, per-class rotated NMS.
std::vector<ScoredDetection> scored_detections(const RecordFile& file, const RunConfig& cfg);

// Full evaluation: AP / TP metrics / NDS per eval mode, depth-error stats
// over the 2 m matches, pooled PR samples.
EvalReport evaluate_records(const RecordFile& gt, const RecordFile& pred,
                            const RunConfig& cfg);

std::string report_text(const EvalReport& report);
std::string report_json(const EvalReport& report);

// Generates the configured multi-frame scene batch: ground truth and
// corrupted raw predictions sharing one header.
std::pair<RecordFile, RecordFile> simulate_records(const RunConfig& cfg);

// Re-runs the full pipeline per oracle subset and tabulates mAP / NDS.
std::string oracle_table(const RecordFile& gt, const RecordFile& pred, const RunConfig& cfg,
                         const std::vector<std::string>& subsets);

// Numeric plot tables; see the CLI documentation for the kinds.
std::string plot_data(const RecordFile* gt, const RecordFile& records, const RunConfig& cfg,
                      const std::string& kind);

// Depth pairs (gt z, predicted z) aligned by (frame, id); simulator files
// guarantee the identity alignment. Throws DomainError (id_mismatch) when a
// prediction has no partner.
std::vector<std::pair<double, double>> depth_pairs_by_id(const RecordFile& gt,
                                                         const RecordFile& pred,
                                                         const RunConfig& cfg);

} // namespace pgd
