#pragma once

#include "pgd/config.hpp"
#include "pgd/metrics.hpp"
#include "pgd/pipeline.hpp"

namespace pgd {

// One synthetic end-to-end run evaluated twice, once from the local depth
// and once from the fused depth, so ablations can compare the two.
struct ExperimentResult {
    EvalReport local_report;
    EvalReport fused_report;
    DepthErrorStats local_depth;
    DepthErrorStats fused_depth;
    int object_count = 0;
};

// simulate -> decode -> propagate -> evaluate. Depth error stats pair each
// prediction with its ground-truth source by (frame, id).
ExperimentResult run_experiment(const RunConfig& cfg);

} // namespace pgd
