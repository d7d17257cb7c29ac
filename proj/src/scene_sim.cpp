#include "pgd/scene_sim.hpp"

#include "pgd/errors.hpp"
#include "pgd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

namespace pgd {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Structured bottom-offset mix: same-category bias, smooth spatial field,
// iid residual. Weights are unit-variance in the marginal.
constexpr double kCatWeight = 0.55;
constexpr double kFieldWeight = 0.65;
const double kIidWeight = std::sqrt(1.0 - kCatWeight * kCatWeight - kFieldWeight * kFieldWeight);
constexpr double kFieldWavelength = 80.0;  // m

constexpr double kOracleBumpWidth = 0.6;   // bins
constexpr int kPlacementAttempts = 1000;

[[noreturn]] void config_fail(const std::string& msg) {
    throw_parse("config: " + msg);
}

} // namespace

std::vector<CategoryPrior> default_categories() {
    return {
        {"car", 0.6, 1.6, 0.1, 3.9, 0.25, 1.56, 0.08},
        {"pedestrian", 0.25, 0.6, 0.08, 0.8, 0.1, 1.73, 0.08},
        {"cyclist", 0.15, 0.6, 0.08, 1.76, 0.15, 1.73, 0.08},
    };
}

void SceneConfig::validate() const {
    if (!(cam.f > 0.0)) config_fail("camera focal length must be positive");
    if (!(image_w > 0.0) || !(image_h > 0.0)) config_fail("image size must be positive");
    if (frames < 1) config_fail("frames must be at least 1");
    if (n_min < 1 || n_max < n_min) config_fail("need n_max >= n_min >= 1");
    if (!(depth_min > 0.0) || !(depth_max > depth_min)) {
        config_fail("need depth_max > depth_min > 0");
    }
    if (!(bottom_sigma >= 0.0)) config_fail("bottom_sigma must be nonnegative");
    if (!(lateral_extent > 0.0)) config_fail("lateral_extent must be positive");
    if (categories.empty()) config_fail("at least one category is required");
    for (const CategoryPrior& c : categories) {
        if (c.name.empty()) config_fail("category name must be nonempty");
        if (!(c.weight > 0.0)) config_fail("category weight must be positive");
        if (!(c.w_mean > 0.0) || !(c.l_mean > 0.0) || !(c.h_mean > 0.0)) {
            config_fail("category size means must be positive");
        }
        if (c.w_std < 0.0 || c.l_std < 0.0 || c.h_std < 0.0) {
            config_fail("category size stds must be nonnegative");
        }
    }
}

void NoiseConfig::validate() const {
    const double stds[] = {depth_a,       depth_b,   center_jitter, size_sigma,
                           yaw_sigma,     vel_sigma, alpha_std,     alpha_quality,
                           anchor_scale,  temperature, anchor_temperature};
    for (double v : stds) {
        if (!(v >= 0.0)) config_fail("noise stds and scales must be nonnegative");
    }
    const double rates[] = {corruption, confusion, attr_flip, anchor_fraction};
    for (double v : rates) {
        if (!(v >= 0.0) || !(v <= 1.0)) config_fail("noise rates must lie in [0, 1]");
    }
    if (!(temperature > 0.0) || !(anchor_temperature > 0.0)) {
        config_fail("logit temperatures must be positive");
    }
}

namespace {

double clamped_dim(std::mt19937_64& rng, double mean, double std) {
    std::normal_distribution<double> n(mean, std);
    double v = std > 0.0 ? n(rng) : mean;
    return std::clamp(v, std::max(0.2, 0.35 * mean), 2.2 * mean);
}

// Boxes inflated slightly must stay BEV-disjoint so perfect predictions are
// never cross-suppressed by NMS.
bool placement_collides(const Box3D& candidate, const std::vector<Box3D>& accepted) {
    Box3D a = candidate;
    a.w = a.w * 1.25 + 0.4;
    a.l = a.l * 1.25 + 0.4;
    for (const Box3D& other : accepted) {
        Box3D b = other;
        b.w = b.w * 1.25 + 0.4;
        b.l = b.l * 1.25 + 0.4;
        if (bev_intersection_area(a, b) > 1e-12) return true;
    }
    return false;
}

} // namespace

std::vector<ObjectRecord> generate_scene(const SceneConfig& cfg, std::uint64_t seed, int frame) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);

    const int ncat = static_cast<int>(cfg.categories.size());
    std::vector<double> weights;
    weights.reserve(cfg.categories.size());
    for (const CategoryPrior& c : cfg.categories) weights.push_back(c.weight);
    std::discrete_distribution<int> cat_dist(weights.begin(), weights.end());

    // per-frame bottom-offset structure
    std::vector<double> cat_offset(static_cast<std::size_t>(ncat));
    for (double& v : cat_offset) v = n01(rng);
    const double field_theta = unit(rng) * 2.0 * kPi;
    const double field_phase = unit(rng) * 2.0 * kPi;
    const double gx = std::cos(field_theta);
    const double gz = std::sin(field_theta);
    const auto field = [&](double x, double z) {
        return std::sqrt(2.0) * std::sin(2.0 * kPi * (x * gx + z * gz) / kFieldWavelength +
                                         field_phase);
    };

    std::uniform_int_distribution<int> n_dist(cfg.n_min, cfg.n_max);
    const int n = n_dist(rng);

    std::vector<ObjectRecord> out;
    std::vector<Box3D> accepted;
    const double margin = 10.0;
    for (int i = 0; i < n; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
            const int cat = cat_dist(rng);
            const CategoryPrior& prior = cfg.categories[static_cast<std::size_t>(cat)];
            Box3D box;
            box.category = cat;
            box.w = clamped_dim(rng, prior.w_mean, prior.w_std);
            box.l = clamped_dim(rng, prior.l_mean, prior.l_std);
            box.h = clamped_dim(rng, prior.h_mean, prior.h_std);
            box.z = cfg.depth_min + unit(rng) * (cfg.depth_max - cfg.depth_min);
            const double visible_half_width =
                (cfg.image_w * 0.5 - 4.0 * margin) * box.z / cfg.cam.f;
            const double x_range = std::min(cfg.lateral_extent, visible_half_width);
            box.x = (2.0 * unit(rng) - 1.0) * x_range;
            box.yaw = wrap_angle((2.0 * unit(rng) - 1.0) * kPi);
            const double offset = kCatWeight * cat_offset[static_cast<std::size_t>(cat)] +
                                  kFieldWeight * field(box.x, box.z) + kIidWeight * n01(rng);
            const double bottom = cfg.ground_y + cfg.bottom_sigma * offset;
            box.y = bottom - 0.5 * box.h;

            const Projection pj = project_point(cfg.cam, box.x, box.y, box.z);
            if (pj.center.u_prime < margin || pj.center.u_prime > cfg.image_w - margin ||
                pj.center.v_prime < margin || pj.center.v_prime > cfg.image_h - margin) {
                continue;
            }
            if (placement_collides(box, accepted)) continue;

            std::normal_distribution<double> vel(0.0, cat == 0 ? 2.0 : 0.5);
            box.vx = vel(rng);
            box.vz = vel(rng);
            std::uniform_int_distribution<int> attr_dist(0, 1);
            box.attribute = attr_dist(rng);
            box.difficulty = box.z < 20.0 ? 0 : (box.z < 35.0 ? 1 : 2);

            ObjectRecord r;
            r.id = i;
            r.frame = frame;
            r.kind = RecordKind::GroundTruth;
            r.category = cat;
            r.x = box.x;
            r.y = box.y;
            r.z = box.z;
            r.w = box.w;
            r.l = box.l;
            r.h = box.h;
            r.yaw = box.yaw;
            r.vx = box.vx;
            r.vz = box.vz;
            r.attribute = box.attribute;
            r.difficulty = box.difficulty;
            out.push_back(std::move(r));
            accepted.push_back(box);
            placed = true;
        }
        if (!placed) {
            throw_domain("infeasible_spec: failed to place object " + std::to_string(i) +
                         " after " + std::to_string(kPlacementAttempts) + " attempts");
        }
    }
    return out;
}

std::vector<double> logits_for_target_depth(const DepthQuantizer& q, double target,
                                            double width_bins) {
    if (!std::isfinite(target)) {
        throw_domain("logit bump: target depth must be finite");
    }
    const int c_bins = q.bins();
    const double s = std::max(width_bins, 1e-3);
    const std::vector<double>& pts = q.decode_points;

    const auto expectation_at = [&](double center) {
        double max_logit = 0.0;
        bool first = true;
        for (int i = 0; i < c_bins; ++i) {
            const double li = -(i - center) * (i - center) / (2.0 * s * s);
            if (first || li > max_logit) {
                max_logit = li;
                first = false;
            }
        }
        double sum = 0.0, acc = 0.0;
        for (int i = 0; i < c_bins; ++i) {
            const double w =
                std::exp(-(i - center) * (i - center) / (2.0 * s * s) - max_logit);
            sum += w;
            acc += w * pts[static_cast<std::size_t>(i)];
        }
        return acc / sum;
    };

    double goal = q.method == DepthDivision::UniformLog
                      ? std::log(std::max(target, 1e-9))
                      : target;
    double lo = -3.0 * c_bins;
    double hi = 4.0 * c_bins;
    goal = std::clamp(goal, expectation_at(lo), expectation_at(hi));
    for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (expectation_at(mid) < goal) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double center = 0.5 * (lo + hi);

    std::vector<double> logits(static_cast<std::size_t>(c_bins));
    double max_logit = -1e300;
    for (int i = 0; i < c_bins; ++i) {
        logits[static_cast<std::size_t>(i)] = -(i - center) * (i - center) / (2.0 * s * s);
        max_logit = std::max(max_logit, logits[static_cast<std::size_t>(i)]);
    }
    for (double& v : logits) v -= max_logit;
    return logits;
}

std::vector<ObjectRecord> corrupt_to_predictions(const std::vector<ObjectRecord>& gt,
                                                 const CameraModel& cam,
                                                 const DepthQuantizer& quantizer,
                                                 const NoiseConfig& noise, int category_count,
                                                 std::uint64_t seed) {
    noise.validate();
    cam.validate();
    if (category_count < 1) {
        throw_domain("corrupt_to_predictions: category_count must be positive");
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<ObjectRecord> out;
    out.reserve(gt.size());
    for (const ObjectRecord& g : gt) {
        if (g.kind != RecordKind::GroundTruth) {
            throw_domain("corrupt_to_predictions: input must be ground-truth records");
        }
        const Projection pj = project_point(cam, *g.x, *g.y, *g.z);

        const bool anchor = unit(rng) < noise.anchor_fraction;
        const double depth_scale = anchor ? noise.anchor_scale : 1.0;
        const double depth_std = (noise.depth_a + noise.depth_b * pj.depth) * depth_scale;
        const double d_noisy = pj.depth + n01(rng) * depth_std;
        const bool corrupted = !anchor && unit(rng) < noise.corruption;
        const double width = anchor ? noise.anchor_temperature : noise.temperature;

        ObjectRecord r;
        r.id = g.id;
        r.frame = g.frame;
        r.kind = RecordKind::Prediction;

        if (corrupted) {
            r.logits.resize(static_cast<std::size_t>(quantizer.bins()));
            for (double& v : r.logits) v = 0.3 * n01(rng);
            r.d_r = std::max(0.1, d_noisy);
        } else {
            r.logits = logits_for_target_depth(quantizer, d_noisy, width);
            r.d_r = decode_expectation(quantizer, DepthDistribution{r.logits});
        }

        const double du = noise.center_jitter * n01(rng);
        const double dv = noise.center_jitter * n01(rng);
        r.u_prime = pj.center.u_prime + du;
        r.v_prime = pj.center.v_prime + dv;
        r.centerness =
            noise.center_jitter > 0.0
                ? std::exp(-(du * du + dv * dv) /
                           (2.0 * (3.0 * noise.center_jitter) * (3.0 * noise.center_jitter)))
                : 1.0;

        r.w = g.w * std::exp(noise.size_sigma * n01(rng));
        r.l = g.l * std::exp(noise.size_sigma * n01(rng));
        r.h = g.h * std::exp(noise.size_sigma * n01(rng));
        r.yaw = wrap_angle(g.yaw + noise.yaw_sigma * n01(rng));
        r.vx = g.vx.value_or(0.0) + noise.vel_sigma * n01(rng);
        r.vz = g.vz.value_or(0.0) + noise.vel_sigma * n01(rng);
        const int attr = g.attribute.value_or(0);
        r.attribute = unit(rng) < noise.attr_flip ? (attr ^ 1) : attr;

        int argcat = g.category;
        if (category_count >= 2 && unit(rng) < noise.confusion) {
            std::uniform_int_distribution<int> other(0, category_count - 2);
            argcat = (g.category + 1 + other(rng)) % category_count;
        }
        std::vector<double> cls_logits(static_cast<std::size_t>(category_count));
        for (int c = 0; c < category_count; ++c) {
            const double entry_noise = noise.confusion > 0.0 ? 0.35 * n01(rng) : 0.0;
            cls_logits[static_cast<std::size_t>(c)] = (c == argcat ? 4.0 : 0.0) + entry_noise;
        }
        r.cls = softmax(cls_logits);
        r.category = static_cast<int>(
            std::max_element(r.cls.begin(), r.cls.end()) - r.cls.begin());
        const double quality = anchor ? 1.0 : (corrupted ? -2.0 : 0.0);
        r.alpha = noise.alpha_mean + noise.alpha_quality * quality +
                  noise.alpha_std * n01(rng);
        out.push_back(std::move(r));
    }
    return out;
}

OracleSpec OracleSpec::all() {
    OracleSpec s;
    s.score_class = s.offset = s.depth = s.size = s.rotation = s.velocity = s.attribute = true;
    return s;
}

OracleSpec OracleSpec::none() { return OracleSpec{}; }

bool OracleSpec::any() const {
    return score_class || offset || depth || size || rotation || velocity || attribute;
}

std::string OracleSpec::label() const {
    if (!any()) return "none";
    const OracleSpec a = all();
    if (score_class == a.score_class && offset == a.offset && depth == a.depth &&
        size == a.size && rotation == a.rotation && velocity == a.velocity &&
        attribute == a.attribute) {
        return "all";
    }
    std::string out;
    const auto add = [&out](bool on, const char* name) {
        if (!on) return;
        if (!out.empty()) out += '+';
        out += name;
    };
    add(score_class, "score_class");
    add(offset, "offset");
    add(depth, "depth");
    add(size, "size");
    add(rotation, "rotation");
    add(velocity, "velocity");
    add(attribute, "attribute");
    return out;
}

OracleSpec parse_oracle_spec(const std::string& text) {
    OracleSpec spec;
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == '+' || c == ',') {
            parts.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    parts.push_back(cur);
    for (const std::string& p : parts) {
        if (p.empty()) throw_parse("oracle list: empty flag in '" + text + "'");
        if (p == "none") {
            if (parts.size() != 1) throw_parse("oracle list: 'none' cannot be combined");
        } else if (p == "all") {
            spec = OracleSpec::all();
        } else if (p == "score_class") {
            spec.score_class = true;
        } else if (p == "offset") {
            spec.offset = true;
        } else if (p == "depth") {
            spec.depth = true;
        } else if (p == "size") {
            spec.size = true;
        } else if (p == "rotation") {
            spec.rotation = true;
        } else if (p == "velocity") {
            spec.velocity = true;
        } else {
            if (p != "attribute") {
                throw_parse("oracle list: unknown flag '" + p + "'");
            }
            spec.attribute = true;
        }
    }
    return spec;
}

void apply_oracles(std::vector<ObjectRecord>& predictions, const std::vector<ObjectRecord>& gt,
                   const CameraModel& cam, const DepthQuantizer& quantizer,
                   const OracleSpec& spec) {
    if (!spec.any()) return;
    std::map<std::pair<int, int>, const ObjectRecord*> lookup;
    for (const ObjectRecord& g : gt) {
        if (g.kind == RecordKind::GroundTruth) {
            lookup[{g.frame, g.id}] = &g;
        }
    }
    for (ObjectRecord& p : predictions) {
        if (p.kind != RecordKind::Prediction) continue;
        const auto it = lookup.find({p.frame, p.id});
        if (it == lookup.end()) {
            throw_domain("id_mismatch: prediction frame " + std::to_string(p.frame) + " id " +
                         std::to_string(p.id) + " has no ground-truth partner");
        }
        const ObjectRecord& g = *it->second;
        const Projection pj = project_point(cam, *g.x, *g.y, *g.z);
        if (spec.offset) {
            p.u_prime = pj.center.u_prime;
            p.v_prime = pj.center.v_prime;
            p.centerness = 1.0;
        }
        if (spec.depth) {
            p.logits = logits_for_target_depth(quantizer, pj.depth, kOracleBumpWidth);
            p.d_r = decode_expectation(quantizer, DepthDistribution{p.logits});
        }
        if (spec.size) {
            p.w = g.w;
            p.l = g.l;
            p.h = g.h;
        }
        if (spec.rotation) p.yaw = g.yaw;
        if (spec.velocity) {
            p.vx = g.vx;
            p.vz = g.vz;
        }
        if (spec.attribute) p.attribute = g.attribute;
        if (spec.score_class && !p.cls.empty()) {
            std::fill(p.cls.begin(), p.cls.end(), 0.0);
            p.cls[static_cast<std::size_t>(g.category)] = 1.0;
            p.category = g.category;
        }
        // stale derived fields are recomputed by decode/propagate
        p.d_p.reset();
        p.s_d.reset();
        p.d_l.reset();
        p.d_g.reset();
        p.d_final.reset();
        p.no_geometry.reset();
    }
}

} // namespace pgd
