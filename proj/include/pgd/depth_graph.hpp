#pragma once

#include "pgd/camera.hpp"
#include "pgd/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace pgd {

// How the 2D/3D proximity score between two instances is computed.
enum class DistanceVariant {
    Centers2D,  // 1 - t / t2d_max over projected-center distance
    Centers3D,  // 1 - t / (d_max * sqrt(2)) over 3D center distance
    Bottoms3D,  // exp(-|bottom_i - bottom_j| / 1 m)
};

const char* to_string(DistanceVariant v);
DistanceVariant distance_from_string(const std::string& s);  // throws ParseError

// Per-instance inputs of the propagation graph. Boxes are decoded at the
// local depth; v is the signed distance of the projected center below the
// horizon.
struct InstanceNode {
    int id = 0;
    double u_prime = 0.0;
    double v_prime = 0.0;
    double v = 0.0;
    double d_local = 0.0;
    double depth_score = 0.0;        // s_d in [0, 1]
    std::vector<double> cls;         // per-category confidences
    Box3D box;
};

struct GraphConfig {
    int k = 5;                       // in-edges kept per node
    double t2d_max = 0.0;            // Centers2D normalizer (image diagonal, px)
    DistanceVariant distance = DistanceVariant::Centers2D;
    double d_max = 70.0;             // Centers3D normalizer
    double v_min = kDefaultVMin;
    bool gating = true;              // false keeps every edge at uniform weight
};

struct GatedEdge {
    int src = 0;                     // index into the node list
    int dst = 0;
    double s_2d = 0.0;
    double s_cls = 0.0;
    double weight = 0.0;             // unnormalized s_d * s_2d * s_cls
    double s_e = 0.0;                // weight normalized over the kept in-edges
    double d_transfer = 0.0;         // approx transfer from src at dst
};

struct NodeEdges {
    std::vector<GatedEdge> in_edges;
    bool no_geometry = false;        // no usable in-edge survived
    int dropped_singular = 0;        // candidates unusable geometrically
                                     // (horizon margin or non-positive source depth)
};

struct PropagationGraph {
    std::vector<NodeEdges> per_node;
};

// Proximity score in [0, 1] under cfg.distance.
double distance_score(const InstanceNode& a, const InstanceNode& b, const GraphConfig& cfg);

// Cosine similarity of two confidence vectors. Throws DomainError on a
// length mismatch or a zero vector.
double class_similarity(const std::vector<double>& fa, const std::vector<double>& fb);

// Builds per-node gated in-edges: candidate weight s_d * s_2d * s_cls with
// negative similarity clamped to zero, zero-weight candidates dropped, top-k
// kept (weight desc, source id asc), weights normalized to sum 1. Nodes whose
// candidates all vanish are flagged no_geometry.
PropagationGraph build_graph(const std::vector<InstanceNode>& nodes, const CameraModel& cam,
                             const GraphConfig& cfg);

// Edge-weighted mean of the transferred depths. Throws DomainError
// (no_geometry) when the node kept no in-edge.
double geometric_depth(const PropagationGraph& g, int node_index);

// Global fusion: sigmoid(alpha) * d_local + (1 - sigmoid(alpha)) * d_geometric.
double fuse_global(double d_local, double d_geometric, double alpha);

// Inputs of the fusion-weight diagnostics, one per instance.
struct WeightSample {
    double alpha = 0.0;
    double depth = 0.0;
    int category = 0;
};

struct WeightStats {
    std::array<int, 20> histogram{};                  // sigmoid(alpha) binned over [0, 1]
    std::vector<std::array<double, 3>> scatter;       // (depth, weight, category)
};

// Histogram + scatter of the global fusion weights. Throws DomainError on
// empty input.
WeightStats fusion_weight_stats(const std::vector<WeightSample>& samples);

} // namespace pgd
