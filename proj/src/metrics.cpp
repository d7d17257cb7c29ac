#include "pgd/metrics.hpp"

#include "pgd/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <string>

namespace pgd {

namespace {

using Pt = std::array<double, 2>;  // (x, z) in the BEV plane

double cross(const Pt& o, const Pt& a, const Pt& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

void check_box(const Box3D& b) {
    if (!(b.w > 0.0) || !(b.l > 0.0) || !(b.h > 0.0)) {
        throw_domain("degenerate_box: extents must be positive, got w=" + std::to_string(b.w) +
                     " l=" + std::to_string(b.l) + " h=" + std::to_string(b.h));
    }
}

// Counterclockwise corners of the yaw-rotated BEV rectangle.
std::array<Pt, 4> bev_corners(const Box3D& b) {
    const double c = std::cos(b.yaw);
    const double s = std::sin(b.yaw);
    const double hl = 0.5 * b.l;
    const double hw = 0.5 * b.w;
    const std::array<Pt, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
    std::array<Pt, 4> world;
    for (int i = 0; i < 4; ++i) {
        world[i] = {b.x + local[i][0] * c - local[i][1] * s,
                    b.z + local[i][0] * s + local[i][1] * c};
    }
    return world;
}

Pt segment_line_intersection(const Pt& a, const Pt& b, const Pt& p, const Pt& q) {
    const double dp = cross(a, b, p);
    const double dq = cross(a, b, q);
    const double t = dp / (dp - dq);
    return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
}

// Sutherland-Hodgman clip of a convex subject polygon by a CCW rectangle.
std::vector<Pt> clip_polygon(std::vector<Pt> subject, const std::array<Pt, 4>& clip) {
    for (int e = 0; e < 4 && !subject.empty(); ++e) {
        const Pt& a = clip[static_cast<std::size_t>(e)];
        const Pt& b = clip[static_cast<std::size_t>((e + 1) % 4)];
        std::vector<Pt> out;
        out.reserve(subject.size() + 2);
        for (std::size_t i = 0; i < subject.size(); ++i) {
            const Pt& p = subject[i];
            const Pt& q = subject[(i + 1) % subject.size()];
            const bool p_in = cross(a, b, p) >= 0.0;
            const bool q_in = cross(a, b, q) >= 0.0;
            if (p_in) out.push_back(p);
            if (p_in != q_in) out.push_back(segment_line_intersection(a, b, p, q));
        }
        subject = std::move(out);
    }
    return subject;
}

double polygon_area(const std::vector<Pt>& poly) {
    if (poly.size() < 3) return 0.0;
    double twice = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Pt& p = poly[i];
        const Pt& q = poly[(i + 1) % poly.size()];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    return 0.5 * std::abs(twice);
}

double final_score_checked(const ScoredDetection& d) {
    if (!std::isfinite(d.final_score)) {
        throw_domain("score: non-finite final_score on detection id " + std::to_string(d.id));
    }
    return d.final_score;
}

// Descending final_score, ties by ascending id then index.
std::vector<std::size_t> score_order(const std::vector<ScoredDetection>& dets) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (const ScoredDetection& d : dets) final_score_checked(d);
    std::sort(order.begin(), order.end(), [&dets](std::size_t a, std::size_t b) {
        if (dets[a].final_score != dets[b].final_score) {
            return dets[a].final_score > dets[b].final_score;
        }
        if (dets[a].id != dets[b].id) return dets[a].id < dets[b].id;
        return a < b;
    });
    return order;
}

} // namespace

double bev_intersection_area(const Box3D& a, const Box3D& b) {
    check_box(a);
    check_box(b);
    const std::array<Pt, 4> ca = bev_corners(a);
    const std::array<Pt, 4> cb = bev_corners(b);
    return polygon_area(clip_polygon(std::vector<Pt>(ca.begin(), ca.end()), cb));
}

double bev_iou(const Box3D& a, const Box3D& b) {
    const double inter = bev_intersection_area(a, b);
    const double uni = a.w * a.l + b.w * b.l - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a, const Box3D& b) {
    const double inter_area = bev_intersection_area(a, b);
    const double y_lo = std::max(a.y - 0.5 * a.h, b.y - 0.5 * b.h);
    const double y_hi = std::min(a.y + 0.5 * a.h, b.y + 0.5 * b.h);
    const double inter = inter_area * std::max(0.0, y_hi - y_lo);
    const double uni = a.volume() + b.volume() - inter;
    return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> rotated_nms(const std::vector<ScoredDetection>& dets,
                                     double iou_threshold) {
    const std::vector<std::size_t> order = score_order(dets);
    std::vector<bool> suppressed(dets.size(), false);
    std::vector<std::size_t> kept;
    for (std::size_t oi = 0; oi < order.size(); ++oi) {
        const std::size_t i = order[oi];
        if (suppressed[i]) continue;
        kept.push_back(i);
        for (std::size_t oj = oi + 1; oj < order.size(); ++oj) {
            const std::size_t j = order[oj];
            if (suppressed[j]) continue;
            if (bev_iou(dets[i].box, dets[j].box) > iou_threshold) {
                suppressed[j] = true;
            }
        }
    }
    return kept;
}

IouMatchResult match_by_iou(const std::vector<GtObject>& gt,
                            const std::vector<ScoredDetection>& dets, double iou_threshold,
                            int difficulty, bool use_3d_iou) {
    IouMatchResult result;
    for (const GtObject& g : gt) {
        if (g.box.difficulty <= difficulty) ++result.eligible_gt;
    }
    std::vector<bool> taken(gt.size(), false);
    for (std::size_t det_index : score_order(dets)) {
        const ScoredDetection& d = dets[det_index];
        int best_eligible = -1, best_ignored = -1;
        double best_eligible_iou = 0.0, best_ignored_iou = 0.0;
        for (std::size_t g = 0; g < gt.size(); ++g) {
            if (taken[g] || gt[g].frame != d.frame) continue;
            const double iou =
                use_3d_iou ? iou_3d(gt[g].box, d.box) : bev_iou(gt[g].box, d.box);
            if (iou < iou_threshold) continue;
            if (gt[g].box.difficulty <= difficulty) {
                if (iou > best_eligible_iou) {
                    best_eligible_iou = iou;
                    best_eligible = static_cast<int>(g);
                }
            } else if (iou > best_ignored_iou) {
                best_ignored_iou = iou;
                best_ignored = static_cast<int>(g);
            }
        }
        MatchOutcome o;
        o.det_index = det_index;
        if (best_eligible >= 0) {
            o.tp = true;
            o.gt_index = best_eligible;
            taken[static_cast<std::size_t>(best_eligible)] = true;
        } else if (best_ignored >= 0) {
            o.ignored = true;
            o.gt_index = best_ignored;
            taken[static_cast<std::size_t>(best_ignored)] = true;
        }
        result.outcomes.push_back(o);
    }
    return result;
}

DistanceMatchResult match_by_center_distance(const std::vector<GtObject>& gt,
                                             const std::vector<ScoredDetection>& dets,
                                             double max_distance) {
    DistanceMatchResult result;
    result.total_gt = static_cast<int>(gt.size());
    std::vector<bool> taken(gt.size(), false);
    for (std::size_t det_index : score_order(dets)) {
        const ScoredDetection& d = dets[det_index];
        int best = -1;
        double best_dist = max_distance;
        for (std::size_t g = 0; g < gt.size(); ++g) {
            if (taken[g] || gt[g].frame != d.frame) continue;
            const double dist = std::hypot(gt[g].box.x - d.box.x, gt[g].box.z - d.box.z);
            if (dist <= best_dist && (best < 0 || dist < best_dist)) {
                best_dist = dist;
                best = static_cast<int>(g);
            }
        }
        MatchOutcome o;
        o.det_index = det_index;
        if (best >= 0) {
            o.tp = true;
            o.gt_index = best;
            taken[static_cast<std::size_t>(best)] = true;
            result.matches.push_back({det_index, best, best_dist});
        }
        result.outcomes.push_back(o);
    }
    return result;
}

std::vector<PrPoint> pr_points(const std::vector<MatchOutcome>& outcomes, int gt_count) {
    std::vector<PrPoint> pr;
    if (gt_count <= 0) return pr;
    int tp = 0, fp = 0;
    for (const MatchOutcome& o : outcomes) {
        if (o.ignored) continue;
        if (o.tp) ++tp; else ++fp;
        pr.push_back({static_cast<double>(tp) / gt_count,
                      static_cast<double>(tp) / (tp + fp)});
    }
    return pr;
}

std::vector<PrPoint> pr_curve(const std::vector<GtObject>& gt,
                              const std::vector<ScoredDetection>& dets, MatchMode mode,
                              double threshold, int difficulty) {
    if (gt.empty()) {
        throw_domain("no_ground_truth: PR curve needs at least one ground-truth object");
    }
    if (mode == MatchMode::CenterDistanceBev) {
        const DistanceMatchResult m = match_by_center_distance(gt, dets, threshold);
        return pr_points(m.outcomes, m.total_gt);
    }
    const IouMatchResult m =
        match_by_iou(gt, dets, threshold, difficulty, mode == MatchMode::Iou3D);
    if (m.eligible_gt == 0) {
        throw_domain("no_ground_truth: no eligible ground truth at this difficulty");
    }
    return pr_points(m.outcomes, m.eligible_gt);
}

// Interpolated precision: max precision among samples with recall >= r.
double precision_at(const std::vector<PrPoint>& pr, double recall) {
    double best = 0.0;
    for (const PrPoint& p : pr) {
        if (p.recall >= recall && p.precision > best) best = p.precision;
    }
    return best;
}

std::optional<double> kitti_ap(const std::vector<GtObject>& gt,
                               const std::vector<ScoredDetection>& dets, double iou_threshold,
                               int difficulty, bool use_3d_iou) {
    const IouMatchResult m = match_by_iou(gt, dets, iou_threshold, difficulty, use_3d_iou);
    if (m.eligible_gt == 0) return std::nullopt;
    const std::vector<PrPoint> pr = pr_points(m.outcomes, m.eligible_gt);
    double sum = 0.0;
    for (int i = 1; i <= 40; ++i) {
        sum += precision_at(pr, i / 40.0);
    }
    return sum / 40.0;
}

std::optional<double> nuscenes_ap(const std::vector<GtObject>& gt,
                                  const std::vector<ScoredDetection>& dets,
                                  double distance_threshold, bool pr_clip) {
    if (gt.empty()) return std::nullopt;
    const DistanceMatchResult m = match_by_center_distance(gt, dets, distance_threshold);
    const std::vector<PrPoint> pr = pr_points(m.outcomes, m.total_gt);
    if (pr_clip) {
        double sum = 0.0;
        for (int j = 11; j <= 100; ++j) {
            sum += std::max(0.0, precision_at(pr, j / 100.0) - 0.1);
        }
        // The accumulated sum of ninety 0.9-sized terms can overshoot the
        // denominator by an ulp, so pin the quotient back into [0, 1].
        return std::min(1.0, sum / (90.0 * 0.9));
    }
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        sum += precision_at(pr, j / 100.0);
    }
    return std::min(1.0, sum / 100.0);
}

TpErrors tp_metrics(const std::vector<GtObject>& gt, const std::vector<ScoredDetection>& dets,
                    const std::vector<DistanceMatch>& matches) {
    TpErrors e;
    if (matches.empty()) return e;  // all errors stay at the worst value 1
    double ate = 0.0, ase = 0.0, aoe = 0.0, ave = 0.0, aae = 0.0;
    for (const DistanceMatch& m : matches) {
        const Box3D& g = gt[static_cast<std::size_t>(m.gt_index)].box;
        const Box3D& p = dets[m.det_index].box;
        check_box(g);
        check_box(p);
        ate += m.distance;
        const double inter = std::min(g.w, p.w) * std::min(g.l, p.l) * std::min(g.h, p.h);
        ase += 1.0 - inter / (g.volume() + p.volume() - inter);
        aoe += std::abs(wrap_angle(p.yaw - g.yaw));
        ave += std::hypot(p.vx - g.vx, p.vz - g.vz);
        aae += (p.attribute == g.attribute) ? 0.0 : 1.0;
    }
    const double n = static_cast<double>(matches.size());
    e.ate = ate / n;
    e.ase = ase / n;
    e.aoe = aoe / n;
    e.ave = ave / n;
    e.aae = aae / n;
    e.has_tp = true;
    return e;
}

double nds(double m_ap, double m_ate, double m_ase, double m_aoe, double m_ave, double m_aae) {
    const std::array<double, 6> in{m_ap, m_ate, m_ase, m_aoe, m_ave, m_aae};
    for (double v : in) {
        if (!std::isfinite(v)) throw_domain("nds: inputs must be finite");
    }
    if (m_ap < 0.0 || m_ap > 1.0) {
        throw_domain("nds: mAP must lie in [0, 1], got " + std::to_string(m_ap));
    }
    double sum = 5.0 * m_ap;
    for (int i = 1; i < 6; ++i) {
        sum += 1.0 - std::min(1.0, in[static_cast<std::size_t>(i)]);
    }
    return sum / 10.0;
}

DepthErrorStats depth_error_stats(const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.empty()) {
        throw_domain("empty_input: depth error stats need at least one pair");
    }
    DepthErrorStats s;
    for (const auto& [d_gt, d_pred] : pairs) {
        if (!(d_gt > 0.0)) {
            throw_domain("depth_error_stats: ground-truth depth must be positive");
        }
        const double abs_err = std::abs(d_pred - d_gt);
        s.mean_abs += abs_err;
        s.mean_rel += abs_err / d_gt;
    }
    s.mean_abs /= static_cast<double>(pairs.size());
    s.mean_rel /= static_cast<double>(pairs.size());
    return s;
}

} // namespace pgd
