#include "pgd/depth_graph.hpp"

#include "pgd/errors.hpp"
#include "pgd/prob_depth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pgd {

const char* to_string(DistanceVariant v) {
    switch (v) {
    case DistanceVariant::Centers2D: return "centers_2d";
    case DistanceVariant::Centers3D: return "centers_3d";
    case DistanceVariant::Bottoms3D: return "bottoms_3d";
    }
    return "centers_2d";
}

DistanceVariant distance_from_string(const std::string& s) {
    if (s == "centers_2d") return DistanceVariant::Centers2D;
    if (s == "centers_3d") return DistanceVariant::Centers3D;
    if (s == "bottoms_3d") return DistanceVariant::Bottoms3D;
    throw_parse("unknown distance variant '" + s +
                "' (expected centers_2d, centers_3d or bottoms_3d)");
}

double distance_score(const InstanceNode& a, const InstanceNode& b, const GraphConfig& cfg) {
    switch (cfg.distance) {
    case DistanceVariant::Centers2D: {
        if (!(cfg.t2d_max > 0.0)) {
            throw_domain("distance_score: t2d_max must be positive for centers_2d");
        }
        const double t = std::hypot(a.u_prime - b.u_prime, a.v_prime - b.v_prime);
        return std::clamp(1.0 - t / cfg.t2d_max, 0.0, 1.0);
    }
    case DistanceVariant::Centers3D: {
        if (!(cfg.d_max > 0.0)) {
            throw_domain("distance_score: d_max must be positive for centers_3d");
        }
        const double dx = a.box.x - b.box.x;
        const double dy = a.box.y - b.box.y;
        const double dz = a.box.z - b.box.z;
        const double t = std::sqrt(dx * dx + dy * dy + dz * dz);
        return std::clamp(1.0 - t / (cfg.d_max * std::sqrt(2.0)), 0.0, 1.0);
    }
    case DistanceVariant::Bottoms3D:
        return std::exp(-std::abs(a.box.bottom() - b.box.bottom()));
    }
    return 0.0;
}

double class_similarity(const std::vector<double>& fa, const std::vector<double>& fb) {
    if (fa.size() != fb.size()) {
        throw_domain("dimension_mismatch: class vectors of length " + std::to_string(fa.size()) +
                     " and " + std::to_string(fb.size()));
    }
    if (fa.empty()) {
        throw_domain("dimension_mismatch: empty class vectors");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        dot += fa[i] * fb[i];
        na += fa[i] * fa[i];
        nb += fb[i] * fb[i];
    }
    if (!(na > 0.0) || !(nb > 0.0)) {
        throw_domain("zero_vector: class similarity is undefined for a zero vector");
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

PropagationGraph build_graph(const std::vector<InstanceNode>& nodes, const CameraModel& cam,
                             const GraphConfig& cfg) {
    cam.validate();
    if (nodes.empty()) {
        throw_domain("empty_input: graph needs at least one instance");
    }
    if (cfg.k < 1) {
        throw_domain("build_graph: k must be at least 1");
    }

    const int n = static_cast<int>(nodes.size());
    PropagationGraph g;
    g.per_node.resize(n);

    for (int i = 0; i < n; ++i) {
        NodeEdges& out = g.per_node[i];
        const InstanceNode& dst = nodes[i];
        const bool dst_singular = !(std::abs(dst.v) > cfg.v_min);

        std::vector<GatedEdge> candidates;
        candidates.reserve(n - 1);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const InstanceNode& src = nodes[j];
            if (dst_singular || !(src.d_local > 0.0)) {
                ++out.dropped_singular;
                continue;
            }
            GatedEdge e;
            e.src = j;
            e.dst = i;
            e.d_transfer = pairwise_depth_approx(cam, src.v, src.d_local, src.box.h,
                                                 dst.v, dst.box.h, cfg.v_min);
            if (cfg.gating) {
                e.s_2d = distance_score(dst, src, cfg);
                const bool have_cls = !src.cls.empty() && !dst.cls.empty() &&
                                      src.cls.size() == dst.cls.size();
                double na = 0.0, nb = 0.0;
                if (have_cls) {
                    for (double v : src.cls) na += v * v;
                    for (double v : dst.cls) nb += v * v;
                }
                e.s_cls = (have_cls && na > 0.0 && nb > 0.0)
                              ? std::max(0.0, class_similarity(dst.cls, src.cls))
                              : 0.0;
                e.weight = src.depth_score * e.s_2d * e.s_cls;
                if (!(e.weight > 0.0)) continue;
            } else {
                e.weight = 1.0;
            }
            candidates.push_back(e);
        }

        if (cfg.gating) {
            std::sort(candidates.begin(), candidates.end(),
                      [&nodes](const GatedEdge& a, const GatedEdge& b) {
                          if (a.weight != b.weight) return a.weight > b.weight;
                          return nodes[a.src].id < nodes[b.src].id;
                      });
            if (static_cast<int>(candidates.size()) > cfg.k) {
                candidates.resize(cfg.k);
            }
        }

        if (candidates.empty()) {
            out.no_geometry = true;
            continue;
        }
        double total = 0.0;
        for (const GatedEdge& e : candidates) total += e.weight;
        for (GatedEdge& e : candidates) e.s_e = e.weight / total;
        out.in_edges = std::move(candidates);
    }
    return g;
}

double geometric_depth(const PropagationGraph& g, int node_index) {
    if (node_index < 0 || node_index >= static_cast<int>(g.per_node.size())) {
        throw_domain("geometric_depth: node index " + std::to_string(node_index) +
                     " out of range");
    }
    const NodeEdges& ne = g.per_node[node_index];
    if (ne.no_geometry || ne.in_edges.empty()) {
        throw_domain("no_geometry: node " + std::to_string(node_index) +
                     " kept no usable in-edge");
    }
    double d = 0.0;
    for (const GatedEdge& e : ne.in_edges) d += e.s_e * e.d_transfer;
    return d;
}

double fuse_global(double d_local, double d_geometric, double alpha) {
    if (!std::isfinite(d_local) || !(d_local >= 0.0)) {
        throw_domain("fuse_global: local depth must be finite and nonnegative");
    }
    if (!std::isfinite(d_geometric) || !(d_geometric >= 0.0)) {
        throw_domain("fuse_global: geometric depth must be finite and nonnegative");
    }
    if (std::isnan(alpha)) {
        throw_domain("fuse_global: alpha must not be NaN");
    }
    const double w = sigmoid(alpha);
    return w * d_local + (1.0 - w) * d_geometric;
}

WeightStats fusion_weight_stats(const std::vector<WeightSample>& samples) {
    if (samples.empty()) {
        throw_domain("empty_input: fusion weight stats need at least one sample");
    }
    WeightStats stats;
    stats.scatter.reserve(samples.size());
    for (const WeightSample& s : samples) {
        const double w = sigmoid(s.alpha);
        int bin = static_cast<int>(w * 20.0);
        bin = std::clamp(bin, 0, 19);  // w = 1 lands in the top bin
        ++stats.histogram[static_cast<std::size_t>(bin)];
        stats.scatter.push_back({s.depth, w, static_cast<double>(s.category)});
    }
    return stats;
}

} // namespace pgd
