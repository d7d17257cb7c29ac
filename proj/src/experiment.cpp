#include "pgd/experiment.hpp"

namespace pgd {

ExperimentResult run_experiment(const RunConfig& cfg) {
    auto [gt, pred] = simulate_records(cfg);
    decode_records(pred, cfg);

    ExperimentResult result;
    result.object_count = static_cast<int>(pred.objects.size());

    RunConfig local_cfg = cfg;
    local_cfg.depth_source = DepthSource::Local;
    result.local_report = evaluate_records(gt, pred, local_cfg);
    result.local_depth = depth_error_stats(depth_pairs_by_id(gt, pred, local_cfg));

    propagate_records(pred, cfg, nullptr);

    RunConfig fused_cfg = cfg;
    fused_cfg.depth_source = DepthSource::Fused;
    result.fused_report = evaluate_records(gt, pred, fused_cfg);
    result.fused_depth = depth_error_stats(depth_pairs_by_id(gt, pred, fused_cfg));
    return result;
}

} // namespace pgd
