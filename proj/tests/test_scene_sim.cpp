#include <doctest.h>

#include <pgd/camera.hpp>
#include <pgd/config.hpp>
#include <pgd/errors.hpp>
#include <pgd/experiment.hpp>
#include <pgd/pipeline.hpp>
#include <pgd/scene_sim.hpp>

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

using namespace pgd;

namespace {

NoiseConfig zero_noise() {
    NoiseConfig n;
    n.depth_a = 0.0;
    n.depth_b = 0.0;
    n.corruption = 0.0;
    n.confusion = 0.0;
    n.center_jitter = 0.0;
    n.size_sigma = 0.0;
    n.yaw_sigma = 0.0;
    n.vel_sigma = 0.0;
    n.attr_flip = 0.0;
    n.alpha_std = 0.0;
    n.anchor_fraction = 0.0;
    return n;
}

std::string objects_text(const RecordHeader& header, const std::vector<ObjectRecord>& objects) {
    RecordFile file;
    file.header = header;
    file.objects = objects;
    return write_records(file);
}

RecordHeader header_for(const SceneConfig& scene, const DepthQuantizer& quantizer) {
    RecordHeader h;
    h.cam = scene.cam;
    h.image_w = scene.image_w;
    h.image_h = scene.image_h;
    h.quantizer = quantizer;
    for (const CategoryPrior& c : scene.categories) h.categories.push_back(c.name);
    return h;
}

std::map<std::pair<int, int>, const ObjectRecord*> by_identity(
    const std::vector<ObjectRecord>& objects) {
    std::map<std::pair<int, int>, const ObjectRecord*> out;
    for (const ObjectRecord& r : objects) out[{r.frame, r.id}] = &r;
    return out;
}

}  // namespace

TEST_CASE("generate_scene is deterministic and respects the configured ranges") {
    SceneConfig cfg;
    cfg.n_min = 5;
    cfg.n_max = 9;
    const std::vector<ObjectRecord> a = generate_scene(cfg, 77, 3);
    const std::vector<ObjectRecord> b = generate_scene(cfg, 77, 3);
    const DepthQuantizer q = build_quantizer(70.0, 10.0, DepthDivision::Uniform);
    CHECK(objects_text(header_for(cfg, q), a) == objects_text(header_for(cfg, q), b));
    CHECK(objects_text(header_for(cfg, q), a) !=
          objects_text(header_for(cfg, q), generate_scene(cfg, 78, 3)));

    REQUIRE(a.size() >= 5);
    REQUIRE(a.size() <= 9);
    const int ncat = static_cast<int>(cfg.categories.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const ObjectRecord& r = a[i];
        CHECK(r.kind == RecordKind::GroundTruth);
        CHECK(r.id == static_cast<int>(i));
        CHECK(r.frame == 3);
        CHECK(r.category >= 0);
        CHECK(r.category < ncat);
        CHECK(*r.z >= cfg.depth_min);
        CHECK(*r.z <= cfg.depth_max);
        CHECK(std::abs(*r.x) <= cfg.lateral_extent);
        CHECK(r.w > 0.0);
        CHECK(r.l > 0.0);
        CHECK(r.h > 0.0);
        CHECK(r.vx.has_value());
        CHECK(r.vz.has_value());
        CHECK(r.attribute.has_value());
        REQUIRE(r.difficulty.has_value());
        CHECK(*r.difficulty >= 0);
        CHECK(*r.difficulty <= 2);
        const Projection pj = project_point(cfg.cam, *r.x, *r.y, *r.z);
        CHECK(pj.center.u_prime >= 0.0);
        CHECK(pj.center.u_prime <= cfg.image_w);
        CHECK(pj.center.v_prime >= 0.0);
        CHECK(pj.center.v_prime <= cfg.image_h);
    }
}

TEST_CASE("zero bottom_sigma puts every object exactly on the ground plane") {
    SceneConfig cfg;
    cfg.bottom_sigma = 0.0;
    cfg.n_min = 8;
    cfg.n_max = 8;
    for (int frame = 0; frame < 10; ++frame) {
        const std::vector<ObjectRecord> gt = generate_scene(cfg, 500 + frame, frame);
        for (const ObjectRecord& r : gt) {
            CHECK(*r.y + 0.5 * r.h == doctest::Approx(cfg.ground_y).epsilon(1e-12));
        }
    }
}

TEST_CASE("shared-ground scenes transfer depth exactly between all pairs") {
    SceneConfig cfg;
    cfg.bottom_sigma = 0.0;
    cfg.n_min = 8;
    cfg.n_max = 8;
    cfg.depth_min = 5.0;
    cfg.depth_max = 45.0;
    const std::vector<ObjectRecord> gt = generate_scene(cfg, 99, 0);
    std::vector<Projection> proj;
    for (const ObjectRecord& r : gt) proj.push_back(project_point(cfg.cam, *r.x, *r.y, *r.z));
    for (std::size_t i = 0; i < gt.size(); ++i) {
        for (std::size_t j = 0; j < gt.size(); ++j) {
            if (i == j) continue;
            const double strict = pairwise_depth_strict(cfg.cam, proj[i].center.v,
                                                        proj[i].depth, *gt[i].y,
                                                        proj[j].center.v, *gt[j].y);
            CHECK(strict == doctest::Approx(proj[j].depth).epsilon(1e-9));
            // Equal bottoms make the half-height form of the transfer exact too.
            const double approx = pairwise_depth_approx(cfg.cam, proj[i].center.v,
                                                        proj[i].depth, gt[i].h,
                                                        proj[j].center.v, gt[j].h);
            CHECK(approx == doctest::Approx(proj[j].depth).epsilon(1e-9));
        }
    }
}

TEST_CASE("structured bottom offsets have the configured marginal spread") {
    SceneConfig cfg;
    cfg.bottom_sigma = 0.5;
    std::vector<double> offsets;
    for (int frame = 0; frame < 300; ++frame) {
        for (const ObjectRecord& r : generate_scene(cfg, 9000 + frame, frame)) {
            offsets.push_back((*r.y + 0.5 * r.h - cfg.ground_y) / cfg.bottom_sigma);
        }
    }
    REQUIRE(offsets.size() > 1500);
    double mean = 0.0;
    for (double v : offsets) mean += v;
    mean /= static_cast<double>(offsets.size());
    double var = 0.0;
    for (double v : offsets) var += (v - mean) * (v - mean);
    var /= static_cast<double>(offsets.size() - 1);
    CHECK(std::abs(mean) < 0.15);
    CHECK(std::sqrt(var) > 0.85);
    CHECK(std::sqrt(var) < 1.15);
}

TEST_CASE("corrupt_to_predictions is deterministic and validates its inputs") {
    SceneConfig scene;
    const DepthQuantizer q = build_quantizer(70.0, 10.0, DepthDivision::Uniform);
    const std::vector<ObjectRecord> gt = generate_scene(scene, 31, 0);
    NoiseConfig noise;
    const auto a = corrupt_to_predictions(gt, scene.cam, q, noise, 3, 7);
    const auto b = corrupt_to_predictions(gt, scene.cam, q, noise, 3, 7);
    const RecordHeader h = header_for(scene, q);
    CHECK(objects_text(h, a) == objects_text(h, b));
    CHECK(objects_text(h, a) != objects_text(h, corrupt_to_predictions(gt, scene.cam, q, noise, 3, 8)));

    CHECK_THROWS_AS(corrupt_to_predictions(gt, scene.cam, q, noise, 0, 7), DomainError);
    CHECK_THROWS_AS(corrupt_to_predictions(a, scene.cam, q, noise, 3, 7), DomainError);
}

TEST_CASE("zero noise reproduces the ground truth fields exactly") {
    SceneConfig scene;
    scene.bottom_sigma = 0.0;
    scene.n_min = 7;
    scene.n_max = 7;
    const DepthQuantizer q = build_quantizer(70.0, 10.0, DepthDivision::Uniform);
    const std::vector<ObjectRecord> gt = generate_scene(scene, 12, 0);
    const std::vector<ObjectRecord> preds =
        corrupt_to_predictions(gt, scene.cam, q, zero_noise(), 3, 5);
    REQUIRE(preds.size() == gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) {
        const ObjectRecord& g = gt[i];
        const ObjectRecord& p = preds[i];
        CHECK(p.id == g.id);
        CHECK(p.frame == g.frame);
        CHECK(p.kind == RecordKind::Prediction);
        const Projection pj = project_point(scene.cam, *g.x, *g.y, *g.z);
        CHECK(*p.u_prime == pj.center.u_prime);
        CHECK(*p.v_prime == pj.center.v_prime);
        CHECK(*p.d_r == doctest::Approx(pj.depth).epsilon(1e-9));
        CHECK(decode_expectation(q, DepthDistribution{p.logits}) ==
              doctest::Approx(pj.depth).epsilon(1e-9));
        CHECK(p.w == g.w);
        CHECK(p.l == g.l);
        CHECK(p.h == g.h);
        CHECK(p.yaw == doctest::Approx(g.yaw).epsilon(1e-12));
        CHECK(*p.vx == *g.vx);
        CHECK(*p.vz == *g.vz);
        CHECK(*p.attribute == *g.attribute);
        CHECK(p.category == g.category);
        CHECK(*p.centerness == 1.0);
        CHECK(*p.alpha == doctest::Approx(0.5).epsilon(1e-12));
        REQUIRE(p.cls.size() == 3);
        CHECK(p.cls[static_cast<std::size_t>(g.category)] > 0.9);
    }
}

TEST_CASE("zero-noise batch is a fixed point of the full pipeline") {
    RunConfig cfg;
    cfg.noise = zero_noise();
    cfg.scene.bottom_sigma = 0.0;
    cfg.scene.frames = 6;
    cfg.seed = 4;
    cfg.eval_mode = EvalMode::Both;
    auto [gt, pred] = simulate_records(cfg);
    decode_records(pred, cfg);
    propagate_records(pred, cfg, nullptr);
    const EvalReport rep = evaluate_records(gt, pred, cfg);
    REQUIRE(rep.values.count("nuscenes.map") == 1);
    CHECK(rep.values.at("nuscenes.map") >= 1.0 - 1e-9);
    CHECK(rep.values.at("nuscenes.nds") >= 1.0 - 1e-9);
    CHECK(rep.values.at("nuscenes.mate") <= 1e-6);
    CHECK(rep.values.at("nuscenes.depth.mean_abs") <= 1e-6);
    int kitti_keys = 0;
    for (const auto& [key, value] : rep.values) {
        if (key.rfind("kitti.ap_", 0) == 0) {
            ++kitti_keys;
            CHECK(value >= 1.0 - 1e-9);
        }
    }
    CHECK(kitti_keys > 0);
}

TEST_CASE("regression depth noise has the configured magnitude") {
    SceneConfig scene;
    scene.n_min = 8;
    scene.n_max = 8;
    scene.depth_min = 10.0;
    scene.depth_max = 40.0;
    NoiseConfig noise = zero_noise();
    noise.depth_a = 2.0;
    const DepthQuantizer q = build_quantizer(70.0, 10.0, DepthDivision::Uniform);

    std::vector<ObjectRecord> gt;
    for (int frame = 0; frame < 1300; ++frame) {
        for (ObjectRecord& r : generate_scene(scene, 40000 + frame, frame)) {
            gt.push_back(std::move(r));
        }
    }
    REQUIRE(gt.size() >= 10000);
    const std::vector<ObjectRecord> preds =
        corrupt_to_predictions(gt, scene.cam, q, noise, 3, 2026);
    double mean_abs = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        mean_abs += std::abs(*preds[i].d_r - *gt[i].z);
    }
    mean_abs /= static_cast<double>(gt.size());
    // E|N(0, sigma)| = sigma * sqrt(2/pi).
    const double expected = 2.0 * std::sqrt(2.0 / 3.14159265358979323846);
    CHECK(mean_abs == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("corrupted distributions score low and decode poorly") {
    SceneConfig scene;
    scene.n_min = 8;
    scene.n_max = 8;
    const DepthQuantizer q = build_quantizer(70.0, 10.0, DepthDivision::Uniform);
    std::vector<ObjectRecord> gt;
    for (int frame = 0; frame < 40; ++frame) {
        for (ObjectRecord& r : generate_scene(scene, 600 + frame, frame)) {
            gt.push_back(std::move(r));
        }
    }
    NoiseConfig clean = zero_noise();
    NoiseConfig corrupt = zero_noise();
    corrupt.corruption = 1.0;
    const auto clean_preds = corrupt_to_predictions(gt, scene.cam, q, clean, 3, 9);
    const auto corrupt_preds = corrupt_to_predictions(gt, scene.cam, q, corrupt, 3, 9);

    auto mean_stats = [&](const std::vector<ObjectRecord>& preds) {
        double score = 0.0, err = 0.0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const DepthDistribution dist{preds[i].logits};
            score += depth_score(q, dist, DepthScoreVariant::Top2Avg);
            err += std::abs(decode_expectation(q, dist) - *gt[i].z);
        }
        const double n = static_cast<double>(preds.size());
        return std::pair<double, double>{score / n, err / n};
    };
    const auto [clean_score, clean_err] = mean_stats(clean_preds);
    const auto [corrupt_score, corrupt_err] = mean_stats(corrupt_preds);
    CHECK(clean_score > corrupt_score + 0.1);
    CHECK(corrupt_err > 3.0 * clean_err);
    CHECK(clean_err < 0.01);
}

TEST_CASE("logits_for_target_depth decodes back to the target") {
    for (DepthDivision method : {DepthDivision::Uniform, DepthDivision::Sid,
                                 DepthDivision::UniformLog, DepthDivision::Lid}) {
        const DepthQuantizer q = build_quantizer(70.0, 10.0, method, 1.0);
        const double front = q.finish_decode(q.decode_points.front());
        const double back = q.finish_decode(q.decode_points.back());
        const double span = back - front;
        for (int i = 1; i <= 9; ++i) {
            const double target = front + span * (0.05 + 0.9 * i / 10.0);
            for (double width : {0.35, 1.0, 2.0}) {
                const std::vector<double> logits = logits_for_target_depth(q, target, width);
                REQUIRE(static_cast<int>(logits.size()) == q.bins());
                const double decoded = decode_expectation(q, DepthDistribution{logits});
                CHECK(decoded == doctest::Approx(target).epsilon(1e-8));
            }
        }
        // Out-of-range targets clamp to the reachable decode interval.
        const double high = decode_expectation(
            q, DepthDistribution{logits_for_target_depth(q, 1e6, 1.0)});
        CHECK(high <= back + 1e-9);
        CHECK(high >= back - span * 0.05);
        const double low = decode_expectation(
            q, DepthDistribution{logits_for_target_depth(q, -100.0, 1.0)});
        CHECK(low >= front - 1e-9);
        CHECK(low <= front + span * 0.05);
    }
    const DepthQuantizer q = build_quantizer(70.0, 10.0, DepthDivision::Uniform);
    CHECK_THROWS_AS(logits_for_target_depth(q, std::nan(""), 1.0), DomainError);
}

TEST_CASE("oracle spec parsing and labels") {
    CHECK_FALSE(parse_oracle_spec("none").any());
    CHECK(parse_oracle_spec("all").label() == "all");
    CHECK(OracleSpec::all().any());
    CHECK(OracleSpec::none().label() == "none");

    const OracleSpec plus = parse_oracle_spec("depth+size");
    CHECK(plus.depth);
    CHECK(plus.size);
    CHECK_FALSE(plus.rotation);
    CHECK(plus.label() == "depth+size");
    const OracleSpec comma = parse_oracle_spec("size,depth");
    CHECK(comma.label() == "depth+size");
    CHECK(parse_oracle_spec("velocity").label() == "velocity");
    CHECK(parse_oracle_spec("score_class+offset+depth+size+rotation+velocity+attribute")
              .label() == "all");
    CHECK_THROWS_AS(parse_oracle_spec("depth+pose"), ParseError);
    CHECK_THROWS_AS(parse_oracle_spec(""), ParseError);
}

TEST_CASE("apply_oracles replaces exactly the flagged fields") {
    SceneConfig scene;
    scene.n_min = 7;
    scene.n_max = 7;
    const DepthQuantizer q = build_quantizer(70.0, 10.0, DepthDivision::Uniform);
    NoiseConfig noise;
    noise.depth_a = 3.0;
    std::vector<ObjectRecord> gt;
    for (int frame = 0; frame < 30; ++frame) {
        for (ObjectRecord& r : generate_scene(scene, 70 + frame, frame)) {
            gt.push_back(std::move(r));
        }
    }
    const std::vector<ObjectRecord> base =
        corrupt_to_predictions(gt, scene.cam, q, noise, 3, 44);
    const RecordHeader h = header_for(scene, q);
    const auto gt_index = by_identity(gt);

    auto mean_decode_err = [&](const std::vector<ObjectRecord>& preds) {
        double err = 0.0;
        for (const ObjectRecord& p : preds) {
            const ObjectRecord& g = *gt_index.at({p.frame, p.id});
            err += std::abs(decode_expectation(q, DepthDistribution{p.logits}) - *g.z);
        }
        return err / static_cast<double>(preds.size());
    };

    std::vector<ObjectRecord> untouched = base;
    apply_oracles(untouched, gt, scene.cam, q, OracleSpec::none());
    CHECK(objects_text(h, untouched) == objects_text(h, base));

    std::vector<ObjectRecord> depth_fixed = base;
    apply_oracles(depth_fixed, gt, scene.cam, q, parse_oracle_spec("depth"));
    CHECK(mean_decode_err(base) > 0.5);
    CHECK(mean_decode_err(depth_fixed) < 0.01);

    std::vector<ObjectRecord> size_fixed = base;
    apply_oracles(size_fixed, gt, scene.cam, q, parse_oracle_spec("size+rotation"));
    for (std::size_t i = 0; i < base.size(); ++i) {
        const ObjectRecord& g = *gt_index.at({base[i].frame, base[i].id});
        CHECK(size_fixed[i].w == g.w);
        CHECK(size_fixed[i].l == g.l);
        CHECK(size_fixed[i].yaw == g.yaw);
        CHECK(size_fixed[i].logits == base[i].logits);
        CHECK(size_fixed[i].u_prime == base[i].u_prime);
    }

    std::vector<ObjectRecord> orphan = base;
    orphan[0].frame = 999;
    CHECK_THROWS_AS(apply_oracles(orphan, gt, scene.cam, q, OracleSpec::all()), DomainError);
}

TEST_CASE("the all-oracle run saturates the evaluation") {
    RunConfig cfg;
    cfg.scene.frames = 20;
    cfg.seed = 123;
    auto [gt, pred] = simulate_records(cfg);
    apply_oracles(pred.objects, gt.objects, gt.header.cam, gt.header.quantizer,
                  OracleSpec::all());
    decode_records(pred, cfg);
    propagate_records(pred, cfg, nullptr);
    const EvalReport rep = evaluate_records(gt, pred, cfg);
    CHECK(rep.values.at("nuscenes.map") >= 0.999);
    // Residual alpha noise blends in ground-plane transfers, so NDS keeps a
    // sliver of translation error even with every raw field oracled.
    CHECK(rep.values.at("nuscenes.nds") >= 0.99);
}

TEST_CASE("impossible placement requests fail with a domain error") {
    SceneConfig cfg;
    cfg.n_min = 60;
    cfg.n_max = 60;
    cfg.depth_min = 5.0;
    cfg.depth_max = 7.0;
    cfg.lateral_extent = 2.0;
    try {
        (void)generate_scene(cfg, 1, 0);
        FAIL_CHECK("expected DomainError for infeasible placement");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("infeasible_spec") != std::string::npos);
    }
}

TEST_CASE("depth_pairs_by_id aligns by identity and rejects orphans") {
    RunConfig cfg;
    cfg.noise = zero_noise();
    cfg.scene.bottom_sigma = 0.0;
    cfg.scene.frames = 2;
    cfg.seed = 8;
    auto [gt, pred] = simulate_records(cfg);
    decode_records(pred, cfg);
    propagate_records(pred, cfg, nullptr);
    const auto pairs = depth_pairs_by_id(gt, pred, cfg);
    REQUIRE(pairs.size() == pred.objects.size());
    for (const auto& [z_gt, z_pred] : pairs) {
        CHECK(z_pred == doctest::Approx(z_gt).epsilon(1e-6));
    }
    pred.objects[0].frame = 999;
    CHECK_THROWS_AS(depth_pairs_by_id(gt, pred, cfg), DomainError);
}

TEST_CASE("run_experiment reports both depth sources") {
    RunConfig clean;
    clean.noise = zero_noise();
    clean.scene.bottom_sigma = 0.0;
    clean.scene.frames = 4;
    clean.seed = 21;
    const ExperimentResult zero = run_experiment(clean);
    CHECK(zero.local_report.values.at("nuscenes.map") >= 1.0 - 1e-9);
    CHECK(zero.fused_report.values.at("nuscenes.map") >= 1.0 - 1e-9);
    CHECK(zero.local_depth.mean_abs <= 1e-6);
    CHECK(zero.fused_depth.mean_abs <= 1e-6);
    CHECK(zero.object_count > 0);

    // Anchored neighbors plus quality-aware fusion shrink the depth error.
    RunConfig noisy;
    noisy.scene.frames = 30;
    noisy.seed = 11;
    const ExperimentResult result = run_experiment(noisy);
    CHECK(result.object_count > 100);
    CHECK(result.fused_depth.mean_abs < result.local_depth.mean_abs * 0.98);
}
