#include "pgd/pipeline.hpp"

#include "pgd/depth_graph.hpp"
#include "pgd/errors.hpp"
#include "pgd/scene_sim.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace pgd {

namespace {

std::string record_name(const ObjectRecord& r) {
    return "record frame " + std::to_string(r.frame) + " id " + std::to_string(r.id);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t state = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double chosen_depth(const ObjectRecord& r, DepthSource source) {
    if (source == DepthSource::Fused && r.d_final) return *r.d_final;
    if (r.d_l) return *r.d_l;
    if (r.d_r) return *r.d_r;
    throw_parse(record_name(r) + ": no usable depth (run decode first)");
}

double score_factor(double v, const ObjectRecord& r, const char* what) {
    if (!(v >= 0.0) || !(v <= 1.0)) {
        throw_domain(record_name(r) + ": " + what + " must lie in [0, 1], got " +
                     format_double(v));
    }
    return v;
}

} // namespace

void decode_records(RecordFile& file, const RunConfig& cfg) {
    cfg.validate();
    const DepthQuantizer& q = file.header.quantizer;
    for (ObjectRecord& r : file.objects) {
        if (r.kind != RecordKind::Prediction) continue;
        if (r.logits.empty()) {
            throw_parse(record_name(r) + ": missing logits for decode");
        }
        if (!r.d_r) {
            throw_parse(record_name(r) + ": missing dr for decode");
        }
        const DepthDistribution dist{r.logits};
        r.d_p = decode_expectation(q, dist);
        r.s_d = depth_score(q, dist, cfg.depth_score);
        r.d_l = fuse_local(*r.d_r, *r.d_p, cfg.lambda);
    }
}

void propagate_records(RecordFile& file, const RunConfig& cfg, std::string* edge_dump) {
    cfg.validate();
    const CameraModel& cam = file.header.cam;
    std::map<int, std::vector<std::size_t>> frames;
    for (std::size_t i = 0; i < file.objects.size(); ++i) {
        if (file.objects[i].kind == RecordKind::Prediction) {
            frames[file.objects[i].frame].push_back(i);
        }
    }

    std::string dump;
    if (edge_dump) {
        dump = "# pgd edges\n# columns: frame dst src s2d scls weight se dtransfer\n";
    }

    GraphConfig gcfg;
    gcfg.k = cfg.k;
    gcfg.t2d_max = cfg.t2d_max > 0.0
                       ? cfg.t2d_max
                       : std::hypot(file.header.image_w, file.header.image_h);
    gcfg.distance = cfg.distance;
    gcfg.d_max = file.header.quantizer.d_max;
    gcfg.v_min = cfg.v_min;
    gcfg.gating = cfg.gating;

    for (const auto& [frame, indexes] : frames) {
        std::vector<InstanceNode> nodes;
        nodes.reserve(indexes.size());
        for (std::size_t idx : indexes) {
            const ObjectRecord& r = file.objects[idx];
            if (!r.d_l || !r.s_d) {
                throw_parse(record_name(r) + ": missing decoded depth (run decode first)");
            }
            InstanceNode n;
            n.id = r.id;
            n.u_prime = *r.u_prime;
            n.v_prime = *r.v_prime;
            n.v = *r.v_prime - cam.c_v;
            n.d_local = *r.d_l;
            n.depth_score = *r.s_d;
            n.cls = r.cls;
            back_project(cam, *r.u_prime, *r.v_prime, *r.d_l, n.box.x, n.box.y, n.box.z);
            n.box.w = r.w;
            n.box.l = r.l;
            n.box.h = r.h;
            n.box.yaw = r.yaw;
            n.box.category = r.category;
            nodes.push_back(std::move(n));
        }

        const PropagationGraph graph = build_graph(nodes, cam, gcfg);
        for (std::size_t local = 0; local < indexes.size(); ++local) {
            ObjectRecord& r = file.objects[indexes[local]];
            const NodeEdges& ne = graph.per_node[local];
            if (ne.in_edges.empty()) {
                r.d_g.reset();
                r.d_final = *r.d_l;
                r.no_geometry = true;
                continue;
            }
            const double d_g = geometric_depth(graph, static_cast<int>(local));
            if (!r.alpha) {
                throw_parse(record_name(r) + ": missing alpha for global fusion");
            }
            if (!(d_g > 0.0)) {
                // A non-positive aggregate is rejected, not clamped: the record
                // falls back to its local depth like a node without geometry.
                r.d_g.reset();
                r.d_final = *r.d_l;
                r.no_geometry = true;
                continue;
            }
            r.d_g = d_g;
            r.d_final = fuse_global(*r.d_l, d_g, *r.alpha);
            r.no_geometry = false;
            if (edge_dump) {
                for (const GatedEdge& e : ne.in_edges) {
                    dump += std::to_string(frame) + " " + std::to_string(nodes[local].id) +
                            " " + std::to_string(nodes[static_cast<std::size_t>(e.src)].id) +
                            " " + format_double(e.s_2d) + " " + format_double(e.s_cls) + " " +
                            format_double(e.weight) + " " + format_double(e.s_e) + " " +
                            format_double(e.d_transfer) + "\n";
                }
            }
        }
    }
    if (edge_dump) *edge_dump = std::move(dump);
}

std::vector<GtObject> gt_objects(const RecordFile& file) {
    std::vector<GtObject> out;
    for (const ObjectRecord& r : file.objects) {
        if (r.kind != RecordKind::GroundTruth) continue;
        GtObject g;
        g.id = r.id;
        g.frame = r.frame;
        g.box.x = *r.x;
        g.box.y = *r.y;
        g.box.z = *r.z;
        g.box.w = r.w;
        g.box.l = r.l;
        g.box.h = r.h;
        g.box.yaw = r.yaw;
        g.box.category = r.category;
        g.box.vx = r.vx.value_or(0.0);
        g.box.vz = r.vz.value_or(0.0);
        g.box.attribute = r.attribute.value_or(0);
        g.box.difficulty = r.difficulty.value_or(0);
        out.push_back(g);
    }
    return out;
}

std::vector<ScoredDetection> scored_detections(const RecordFile& file, const RunConfig& cfg) {
    const CameraModel& cam = file.header.cam;
    std::vector<ScoredDetection> all;
    for (const ObjectRecord& r : file.objects) {
        if (r.kind != RecordKind::Prediction) continue;
        ScoredDetection d;
        d.id = r.id;
        d.frame = r.frame;
        const double depth = chosen_depth(r, cfg.depth_source);
        back_project(cam, *r.u_prime, *r.v_prime, depth, d.box.x, d.box.y, d.box.z);
        d.box.w = r.w;
        d.box.l = r.l;
        d.box.h = r.h;
        d.box.yaw = r.yaw;
        d.box.category = r.category;
        d.box.vx = r.vx.value_or(0.0);
        d.box.vz = r.vz.value_or(0.0);
        d.box.attribute = r.attribute.value_or(0);
        double cls_score = 1.0;
        if (!r.cls.empty()) {
            cls_score = *std::max_element(r.cls.begin(), r.cls.end());
        }
        d.cls_score = score_factor(cls_score, r, "cls score");
        d.centerness = score_factor(r.centerness.value_or(1.0), r, "centerness");
        d.depth_score =
            cfg.use_depth_score ? score_factor(r.s_d.value_or(1.0), r, "depth score") : 1.0;
        d.final_score = d.cls_score * d.centerness * d.depth_score;
        all.push_back(d);
    }

    // per-frame, per-class rotated NMS
    std::map<std::pair<int, int>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < all.size(); ++i) {
        groups[{all[i].frame, all[i].box.category}].push_back(i);
    }
    std::vector<bool> keep(all.size(), false);
    for (const auto& [key, idxs] : groups) {
        std::vector<ScoredDetection> group;
        group.reserve(idxs.size());
        for (std::size_t i : idxs) group.push_back(all[i]);
        for (std::size_t kept : rotated_nms(group, cfg.nms_iou)) {
            keep[idxs[kept]] = true;
        }
    }
    std::vector<ScoredDetection> out;
    out.reserve(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (keep[i]) out.push_back(all[i]);
    }
    return out;
}

namespace {

std::vector<GtObject> filter_gt(const std::vector<GtObject>& gt, int category) {
    std::vector<GtObject> out;
    for (const GtObject& g : gt) {
        if (g.box.category == category) out.push_back(g);
    }
    return out;
}

std::vector<ScoredDetection> filter_det(const std::vector<ScoredDetection>& dets,
                                        int category) {
    std::vector<ScoredDetection> out;
    for (const ScoredDetection& d : dets) {
        if (d.box.category == category) out.push_back(d);
    }
    return out;
}

constexpr double kDistanceThresholds[] = {0.5, 1.0, 2.0, 4.0};
constexpr double kKittiIouThresholds[] = {0.7, 0.5};
constexpr const char* kDifficultyNames[] = {"easy", "moderate", "hard"};
constexpr double kTpMatchDistance = 2.0;

} // namespace

EvalReport evaluate_records(const RecordFile& gt, const RecordFile& pred,
                            const RunConfig& cfg) {
    cfg.validate();
    if (gt.header.categories != pred.header.categories) {
        throw_parse("evaluate: ground-truth and prediction files declare different categories");
    }
    const std::vector<GtObject> gts = gt_objects(gt);
    if (gts.empty()) {
        throw_domain("no_ground_truth: the ground-truth file has no gt records");
    }
    const std::vector<ScoredDetection> dets = scored_detections(pred, cfg);
    const std::vector<std::string>& classes = gt.header.categories;

    EvalReport rep;
    rep.notes.push_back("ap_interpolation kitti=40point nuscenes=101point");
    rep.notes.push_back(std::string("eval_mode=") + to_string(cfg.eval_mode));
    rep.notes.push_back("nms_iou=" + format_double(cfg.nms_iou));
    rep.notes.push_back(std::string("pr_clip=") + (cfg.pr_clip ? "on" : "off"));
    rep.notes.push_back(std::string("depth_source=") + to_string(cfg.depth_source));
    rep.notes.push_back(std::string("use_depth_score=") +
                        (cfg.use_depth_score ? "on" : "off"));
    rep.notes.push_back("pr_threshold=" + format_double(cfg.pr_threshold));

    if (cfg.eval_mode != EvalMode::Kitti) {
        double map_sum = 0.0;
        int map_classes = 0;
        double mtp_sum[5] = {0, 0, 0, 0, 0};
        int tp_classes = 0;
        std::vector<std::pair<double, double>> depth_pairs;
        for (std::size_t ci = 0; ci < classes.size(); ++ci) {
            const std::vector<GtObject> gt_c = filter_gt(gts, static_cast<int>(ci));
            if (gt_c.empty()) continue;
            const std::vector<ScoredDetection> det_c =
                filter_det(dets, static_cast<int>(ci));
            double class_sum = 0.0;
            for (double t : kDistanceThresholds) {
                const double ap = nuscenes_ap(gt_c, det_c, t, cfg.pr_clip).value();
                rep.values["nuscenes.ap." + classes[ci] + "." + format_double(t)] = ap;
                class_sum += ap;
            }
            const double class_mean = class_sum / 4.0;
            rep.values["nuscenes.ap." + classes[ci] + ".mean"] = class_mean;
            map_sum += class_mean;
            ++map_classes;

            const DistanceMatchResult m2 =
                match_by_center_distance(gt_c, det_c, kTpMatchDistance);
            const TpErrors tp = tp_metrics(gt_c, det_c, m2.matches);
            rep.values["nuscenes.tp." + classes[ci] + ".ate"] = tp.ate;
            rep.values["nuscenes.tp." + classes[ci] + ".ase"] = tp.ase;
            rep.values["nuscenes.tp." + classes[ci] + ".aoe"] = tp.aoe;
            rep.values["nuscenes.tp." + classes[ci] + ".ave"] = tp.ave;
            rep.values["nuscenes.tp." + classes[ci] + ".aae"] = tp.aae;
            mtp_sum[0] += tp.ate;
            mtp_sum[1] += tp.ase;
            mtp_sum[2] += tp.aoe;
            mtp_sum[3] += tp.ave;
            mtp_sum[4] += tp.aae;
            ++tp_classes;
            for (const DistanceMatch& m : m2.matches) {
                depth_pairs.emplace_back(gt_c[static_cast<std::size_t>(m.gt_index)].box.z,
                                         det_c[m.det_index].box.z);
            }
        }
        const double m_ap = map_classes ? map_sum / map_classes : 0.0;
        const double m_ate = tp_classes ? mtp_sum[0] / tp_classes : 1.0;
        const double m_ase = tp_classes ? mtp_sum[1] / tp_classes : 1.0;
        const double m_aoe = tp_classes ? mtp_sum[2] / tp_classes : 1.0;
        const double m_ave = tp_classes ? mtp_sum[3] / tp_classes : 1.0;
        const double m_aae = tp_classes ? mtp_sum[4] / tp_classes : 1.0;
        rep.values["nuscenes.map"] = m_ap;
        rep.values["nuscenes.mate"] = m_ate;
        rep.values["nuscenes.mase"] = m_ase;
        rep.values["nuscenes.maoe"] = m_aoe;
        rep.values["nuscenes.mave"] = m_ave;
        rep.values["nuscenes.maae"] = m_aae;
        rep.values["nuscenes.nds"] = nds(m_ap, m_ate, m_ase, m_aoe, m_ave, m_aae);
        if (!depth_pairs.empty()) {
            const DepthErrorStats ds = depth_error_stats(depth_pairs);
            rep.values["nuscenes.depth.mean_abs"] = ds.mean_abs;
            rep.values["nuscenes.depth.mean_rel"] = ds.mean_rel;
        }
    }

    if (cfg.eval_mode != EvalMode::Nuscenes) {
        for (std::size_t ci = 0; ci < classes.size(); ++ci) {
            const std::vector<GtObject> gt_c = filter_gt(gts, static_cast<int>(ci));
            if (gt_c.empty()) continue;
            const std::vector<ScoredDetection> det_c =
                filter_det(dets, static_cast<int>(ci));
            for (int diff = 0; diff < 3; ++diff) {
                for (double thr : kKittiIouThresholds) {
                    const auto ap_bev = kitti_ap(gt_c, det_c, thr, diff, false);
                    const auto ap_3d = kitti_ap(gt_c, det_c, thr, diff, true);
                    const std::string suffix = classes[ci] + ".iou" + format_double(thr) +
                                               "." + kDifficultyNames[diff];
                    if (ap_bev) rep.values["kitti.ap_bev." + suffix] = *ap_bev;
                    if (ap_3d) rep.values["kitti.ap_3d." + suffix] = *ap_3d;
                }
            }
        }
    }

    rep.pr = pr_curve(gts, dets, MatchMode::CenterDistanceBev, cfg.pr_threshold);
    return rep;
}

std::string report_text(const EvalReport& report) {
    std::string out = "# pgd evaluation report\n";
    for (const std::string& n : report.notes) out += "# note " + n + "\n";
    for (const auto& [key, value] : report.values) {
        out += key + " " + format_double(value) + "\n";
    }
    return out;
}

std::string report_json(const EvalReport& report) {
    nlohmann::json j;
    j["notes"] = report.notes;
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [key, value] : report.values) values[key] = value;
    j["values"] = values;
    nlohmann::json pr = nlohmann::json::array();
    for (const PrPoint& p : report.pr) {
        pr.push_back({p.recall, p.precision});
    }
    j["pr"] = pr;
    return j.dump(2) + "\n";
}

std::pair<RecordFile, RecordFile> simulate_records(const RunConfig& cfg) {
    cfg.validate();
    RecordHeader header;
    header.version = 1;
    header.cam = cfg.scene.cam;
    header.image_w = cfg.scene.image_w;
    header.image_h = cfg.scene.image_h;
    header.quantizer = cfg.quantizer.build();
    for (const CategoryPrior& c : cfg.scene.categories) header.categories.push_back(c.name);

    RecordFile gt_file;
    gt_file.header = header;
    RecordFile pred_file;
    pred_file.header = header;

    const int ncat = static_cast<int>(cfg.scene.categories.size());
    for (int frame = 0; frame < cfg.scene.frames; ++frame) {
        const std::uint64_t scene_seed = mix_seed(cfg.seed, 2 * static_cast<std::uint64_t>(frame));
        const std::uint64_t noise_seed =
            mix_seed(cfg.seed, 2 * static_cast<std::uint64_t>(frame) + 1);
        std::vector<ObjectRecord> gt = generate_scene(cfg.scene, scene_seed, frame);
        std::vector<ObjectRecord> preds = corrupt_to_predictions(
            gt, cfg.scene.cam, header.quantizer, cfg.noise, ncat, noise_seed);
        for (ObjectRecord& r : gt) gt_file.objects.push_back(std::move(r));
        for (ObjectRecord& r : preds) pred_file.objects.push_back(std::move(r));
    }
    return {std::move(gt_file), std::move(pred_file)};
}

std::vector<std::pair<double, double>> depth_pairs_by_id(const RecordFile& gt,
                                                         const RecordFile& pred,
                                                         const RunConfig& cfg) {
    std::map<std::pair<int, int>, double> gt_depth;
    for (const ObjectRecord& r : gt.objects) {
        if (r.kind == RecordKind::GroundTruth) gt_depth[{r.frame, r.id}] = *r.z;
    }
    std::vector<std::pair<double, double>> out;
    for (const ObjectRecord& r : pred.objects) {
        if (r.kind != RecordKind::Prediction) continue;
        const auto it = gt_depth.find({r.frame, r.id});
        if (it == gt_depth.end()) {
            throw_domain("id_mismatch: prediction frame " + std::to_string(r.frame) +
                         " id " + std::to_string(r.id) + " has no ground-truth partner");
        }
        const double depth = chosen_depth(r, cfg.depth_source);
        const double z = depth + pred.header.cam.f * pred.header.cam.b_z;
        out.emplace_back(it->second, z);
    }
    return out;
}

std::string oracle_table(const RecordFile& gt, const RecordFile& pred, const RunConfig& cfg,
                         const std::vector<std::string>& subsets) {
    std::string out = "# pgd oracle table\n# columns: subset map nds\n";
    RunConfig eval_cfg = cfg;
    eval_cfg.eval_mode = EvalMode::Nuscenes;
    for (const std::string& subset : subsets) {
        const OracleSpec spec = parse_oracle_spec(subset);
        RecordFile work = pred;
        apply_oracles(work.objects, gt.objects, work.header.cam, work.header.quantizer, spec);
        decode_records(work, eval_cfg);
        propagate_records(work, eval_cfg, nullptr);
        const EvalReport rep = evaluate_records(gt, work, eval_cfg);
        out += spec.label() + " " + format_double(rep.values.at("nuscenes.map")) + " " +
               format_double(rep.values.at("nuscenes.nds")) + "\n";
    }
    return out;
}

std::string plot_data(const RecordFile* gt, const RecordFile& records, const RunConfig& cfg,
                      const std::string& kind) {
    cfg.validate();
    std::string out = "# pgd plot " + kind + "\n";
    if (kind == "pr") {
        if (!gt) throw_parse("plot-data pr needs a ground-truth file");
        out += "# columns: recall precision\n";
        const std::vector<ScoredDetection> dets = scored_detections(records, cfg);
        if (dets.empty()) return out;
        const std::vector<PrPoint> pr =
            pr_curve(gt_objects(*gt), dets, MatchMode::CenterDistanceBev, cfg.pr_threshold);
        out += "0 1\n";
        for (const PrPoint& p : pr) {
            out += format_double(p.recall) + " " + format_double(p.precision) + "\n";
        }
        return out;
    }
    if (kind == "weights-hist" || kind == "weights-scatter") {
        std::vector<WeightSample> samples;
        for (const ObjectRecord& r : records.objects) {
            if (r.kind != RecordKind::Prediction || !r.alpha) continue;
            WeightSample s;
            s.alpha = *r.alpha;
            s.depth = r.d_final ? *r.d_final : (r.d_l ? *r.d_l : r.d_r.value_or(0.0));
            s.category = r.category;
            samples.push_back(s);
        }
        if (kind == "weights-hist") {
            out += "# columns: bin_lo bin_hi count\n";
            if (samples.empty()) return out;
            const WeightStats stats = fusion_weight_stats(samples);
            for (int b = 0; b < 20; ++b) {
                out += format_double(b / 20.0) + " " + format_double((b + 1) / 20.0) + " " +
                       std::to_string(stats.histogram[static_cast<std::size_t>(b)]) + "\n";
            }
            return out;
        }
        out += "# columns: depth weight category\n";
        if (samples.empty()) return out;
        const WeightStats stats = fusion_weight_stats(samples);
        for (const auto& row : stats.scatter) {
            out += format_double(row[0]) + " " + format_double(row[1]) + " " +
                   std::to_string(static_cast<int>(row[2])) + "\n";
        }
        return out;
    }
    if (kind == "depth-error-vs-depth") {
        if (!gt) throw_parse("plot-data depth-error-vs-depth needs a ground-truth file");
        out += "# columns: gt_depth abs_error\n";
        const std::vector<std::pair<double, double>> pairs =
            depth_pairs_by_id(*gt, records, cfg);
        for (const auto& [d_gt, d_pred] : pairs) {
            out += format_double(d_gt) + " " + format_double(std::abs(d_pred - d_gt)) + "\n";
        }
        return out;
    }
    throw_parse("unknown plot kind '" + kind +
                "' (expected pr, weights-hist, weights-scatter or depth-error-vs-depth)");
}

} // namespace pgd
