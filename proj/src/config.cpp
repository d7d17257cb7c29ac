#include "pgd/config.hpp"

#include "pgd/errors.hpp"
#include "pgd/records.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

namespace pgd {

const char* to_string(EvalMode m) {
    switch (m) {
    case EvalMode::Kitti: return "kitti";
    case EvalMode::Nuscenes: return "nuscenes";
    case EvalMode::Both: return "both";
    }
    return "nuscenes";
}

EvalMode eval_mode_from_string(const std::string& s) {
    if (s == "kitti") return EvalMode::Kitti;
    if (s == "nuscenes") return EvalMode::Nuscenes;
    if (s == "both") return EvalMode::Both;
    throw_parse("unknown eval mode '" + s + "' (expected kitti, nuscenes or both)");
}

const char* to_string(DepthSource s) {
    return s == DepthSource::Local ? "local" : "fused";
}

DepthSource depth_source_from_string(const std::string& s) {
    if (s == "local") return DepthSource::Local;
    if (s == "fused") return DepthSource::Fused;
    throw_parse("unknown depth source '" + s + "' (expected local or fused)");
}

namespace {

bool parse_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw_parse("expected a boolean, got '" + s + "'");
}

std::uint64_t parse_u64(const std::string& s) {
    std::uint64_t v = 0;
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(s.data(), last, v);
    if (res.ec != std::errc{} || res.ptr != last || s.empty()) {
        throw_parse("expected an unsigned integer, got '" + s + "'");
    }
    return v;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    return s.substr(a, b - a);
}

struct KeyHandler {
    std::string key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

std::vector<KeyHandler> build_handlers() {
    std::vector<KeyHandler> h;
    const auto dbl = [&h](const char* key, auto member) {
        h.push_back({key,
                     [member](const RunConfig& c) { return format_double(c.*member); },
                     [member](RunConfig& c, const std::string& v) { c.*member = parse_double(v); }});
    };
    const auto bol = [&h](const char* key, auto member) {
        h.push_back({key,
                     [member](const RunConfig& c) { return std::string(c.*member ? "true" : "false"); },
                     [member](RunConfig& c, const std::string& v) { c.*member = parse_bool(v); }});
    };
    const auto scene_dbl = [&h](const char* key, auto member) {
        h.push_back({key,
                     [member](const RunConfig& c) { return format_double(c.scene.*member); },
                     [member](RunConfig& c, const std::string& v) { c.scene.*member = parse_double(v); }});
    };
    const auto scene_int = [&h](const char* key, auto member) {
        h.push_back({key,
                     [member](const RunConfig& c) { return std::to_string(c.scene.*member); },
                     [member](RunConfig& c, const std::string& v) { c.scene.*member = parse_int(v); }});
    };
    const auto cam_dbl = [&h](const char* key, auto member) {
        h.push_back({key,
                     [member](const RunConfig& c) { return format_double(c.scene.cam.*member); },
                     [member](RunConfig& c, const std::string& v) { c.scene.cam.*member = parse_double(v); }});
    };
    const auto noise_dbl = [&h](const char* key, auto member) {
        h.push_back({key,
                     [member](const RunConfig& c) { return format_double(c.noise.*member); },
                     [member](RunConfig& c, const std::string& v) { c.noise.*member = parse_double(v); }});
    };

    h.push_back({"quantizer.method",
                 [](const RunConfig& c) { return std::string(to_string(c.quantizer.method)); },
                 [](RunConfig& c, const std::string& v) { c.quantizer.method = division_from_string(v); }});
    h.push_back({"quantizer.unit",
                 [](const RunConfig& c) { return format_double(c.quantizer.unit); },
                 [](RunConfig& c, const std::string& v) { c.quantizer.unit = parse_double(v); }});
    h.push_back({"quantizer.d_max",
                 [](const RunConfig& c) { return format_double(c.quantizer.d_max); },
                 [](RunConfig& c, const std::string& v) { c.quantizer.d_max = parse_double(v); }});
    h.push_back({"quantizer.d_lo",
                 [](const RunConfig& c) { return format_double(c.quantizer.d_lo); },
                 [](RunConfig& c, const std::string& v) { c.quantizer.d_lo = parse_double(v); }});

    dbl("pipeline.lambda", &RunConfig::lambda);
    h.push_back({"pipeline.depth_score",
                 [](const RunConfig& c) { return std::string(to_string(c.depth_score)); },
                 [](RunConfig& c, const std::string& v) { c.depth_score = depth_score_from_string(v); }});
    h.push_back({"pipeline.k",
                 [](const RunConfig& c) { return std::to_string(c.k); },
                 [](RunConfig& c, const std::string& v) { c.k = parse_int(v); }});
    dbl("pipeline.t2d_max", &RunConfig::t2d_max);
    h.push_back({"pipeline.distance",
                 [](const RunConfig& c) { return std::string(to_string(c.distance)); },
                 [](RunConfig& c, const std::string& v) { c.distance = distance_from_string(v); }});
    bol("pipeline.gating", &RunConfig::gating);
    dbl("pipeline.v_min", &RunConfig::v_min);

    h.push_back({"eval.mode",
                 [](const RunConfig& c) { return std::string(to_string(c.eval_mode)); },
                 [](RunConfig& c, const std::string& v) { c.eval_mode = eval_mode_from_string(v); }});
    bol("eval.pr_clip", &RunConfig::pr_clip);
    dbl("eval.nms_iou", &RunConfig::nms_iou);
    bol("eval.use_depth_score", &RunConfig::use_depth_score);
    h.push_back({"eval.depth_source",
                 [](const RunConfig& c) { return std::string(to_string(c.depth_source)); },
                 [](RunConfig& c, const std::string& v) { c.depth_source = depth_source_from_string(v); }});
    dbl("eval.pr_threshold", &RunConfig::pr_threshold);

    h.push_back({"sim.seed",
                 [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& v) { c.seed = parse_u64(v); }});

    cam_dbl("camera.f", &CameraModel::f);
    cam_dbl("camera.cu", &CameraModel::c_u);
    cam_dbl("camera.cv", &CameraModel::c_v);
    cam_dbl("camera.bx", &CameraModel::b_x);
    cam_dbl("camera.by", &CameraModel::b_y);
    cam_dbl("camera.bz", &CameraModel::b_z);

    scene_dbl("scene.image_w", &SceneConfig::image_w);
    scene_dbl("scene.image_h", &SceneConfig::image_h);
    scene_int("scene.frames", &SceneConfig::frames);
    scene_int("scene.n_min", &SceneConfig::n_min);
    scene_int("scene.n_max", &SceneConfig::n_max);
    scene_dbl("scene.depth_min", &SceneConfig::depth_min);
    scene_dbl("scene.depth_max", &SceneConfig::depth_max);
    scene_dbl("scene.ground_y", &SceneConfig::ground_y);
    scene_dbl("scene.bottom_sigma", &SceneConfig::bottom_sigma);
    scene_dbl("scene.lateral_extent", &SceneConfig::lateral_extent);

    noise_dbl("noise.depth_a", &NoiseConfig::depth_a);
    noise_dbl("noise.depth_b", &NoiseConfig::depth_b);
    noise_dbl("noise.temperature", &NoiseConfig::temperature);
    noise_dbl("noise.corruption", &NoiseConfig::corruption);
    noise_dbl("noise.confusion", &NoiseConfig::confusion);
    noise_dbl("noise.center_jitter", &NoiseConfig::center_jitter);
    noise_dbl("noise.size_sigma", &NoiseConfig::size_sigma);
    noise_dbl("noise.yaw_sigma", &NoiseConfig::yaw_sigma);
    noise_dbl("noise.vel_sigma", &NoiseConfig::vel_sigma);
    noise_dbl("noise.attr_flip", &NoiseConfig::attr_flip);
    noise_dbl("noise.alpha_mean", &NoiseConfig::alpha_mean);
    noise_dbl("noise.alpha_std", &NoiseConfig::alpha_std);
    noise_dbl("noise.alpha_quality", &NoiseConfig::alpha_quality);
    noise_dbl("noise.anchor_fraction", &NoiseConfig::anchor_fraction);
    noise_dbl("noise.anchor_scale", &NoiseConfig::anchor_scale);
    noise_dbl("noise.anchor_temperature", &NoiseConfig::anchor_temperature);
    return h;
}

const std::vector<KeyHandler>& handlers() {
    static const std::vector<KeyHandler> h = build_handlers();
    return h;
}

std::string format_category(const CategoryPrior& c) {
    std::string out = format_double(c.weight);
    for (double v : {c.w_mean, c.w_std, c.l_mean, c.l_std, c.h_mean, c.h_std}) {
        out += ',';
        out += format_double(v);
    }
    return out;
}

CategoryPrior parse_category(const std::string& name, const std::string& value) {
    std::vector<double> vals;
    std::string cur;
    for (char c : value + ",") {
        if (c == ',') {
            vals.push_back(parse_double(trim(cur)));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (vals.size() != 7) {
        throw_parse("category '" + name +
                    "': expected 7 values (weight,w_mean,w_std,l_mean,l_std,h_mean,h_std)");
    }
    return {name, vals[0], vals[1], vals[2], vals[3], vals[4], vals[5], vals[6]};
}

} // namespace

void apply_config_value(RunConfig& cfg, const std::string& dotted_key,
                        const std::string& value) {
    if (dotted_key.rfind("categories.", 0) == 0) {
        const std::string name = dotted_key.substr(11);
        if (name.empty()) throw_parse("config: empty category name");
        for (CategoryPrior& c : cfg.scene.categories) {
            if (c.name == name) {
                c = parse_category(name, value);
                return;
            }
        }
        cfg.scene.categories.push_back(parse_category(name, value));
        return;
    }
    for (const KeyHandler& h : handlers()) {
        if (h.key == dotted_key) {
            try {
                h.set(cfg, value);
            } catch (const ParseError& e) {
                throw_parse("config key '" + dotted_key + "': " + e.what());
            }
            return;
        }
    }
    throw_parse("config: unknown key '" + dotted_key + "'");
}

std::string get_config_value(const RunConfig& cfg, const std::string& dotted_key) {
    if (dotted_key.rfind("categories.", 0) == 0) {
        const std::string name = dotted_key.substr(11);
        for (const CategoryPrior& c : cfg.scene.categories) {
            if (c.name == name) return format_category(c);
        }
        throw_parse("config: unknown category '" + name + "'");
    }
    for (const KeyHandler& h : handlers()) {
        if (h.key == dotted_key) return h.get(cfg);
    }
    throw_parse("config: unknown key '" + dotted_key + "'");
}

void parse_config_into(const std::string& text, RunConfig& cfg) {
    std::istringstream stream(text);
    std::string line;
    std::string section;
    bool categories_reset = false;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw_parse("config line " + std::to_string(line_no) + ": malformed section");
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) {
                throw_parse("config line " + std::to_string(line_no) + ": empty section name");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw_parse("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw_parse("config line " + std::to_string(line_no) + ": empty key");
        }
        if (section.empty()) {
            throw_parse("config line " + std::to_string(line_no) + ": key outside a section");
        }
        if (section == "categories" && !categories_reset) {
            cfg.scene.categories.clear();
            categories_reset = true;
        }
        try {
            apply_config_value(cfg, section + "." + key, value);
        } catch (const ParseError& e) {
            throw_parse("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    cfg.validate();
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    parse_config_into(text, cfg);
    return cfg;
}

void merge_config_file(RunConfig& cfg, const std::string& path) {
    try {
        parse_config_into(read_text_file(path), cfg);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    merge_config_file(cfg, path);
    return cfg;
}

void RunConfig::validate() const {
    try {
        (void)quantizer.build();
    } catch (const Error& e) {
        throw_parse(std::string("config: invalid quantizer: ") + e.what());
    }
    if (std::isnan(lambda)) throw_parse("config: lambda must not be NaN");
    if (k < 1) throw_parse("config: k must be at least 1");
    if (!(v_min >= 0.0)) throw_parse("config: v_min must be nonnegative");
    if (!(t2d_max >= 0.0)) throw_parse("config: t2d_max must be nonnegative");
    if (!(nms_iou > 0.0) || !(nms_iou < 1.0)) {
        throw_parse("config: nms_iou must lie in (0, 1)");
    }
    if (!(pr_threshold > 0.0)) throw_parse("config: pr_threshold must be positive");
    scene.validate();
    noise.validate();
    if (scene.depth_max > quantizer.d_max) {
        throw_parse("config: scene depth_max exceeds the quantizer range d_max");
    }
}

std::string dump_config(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const KeyHandler& h : handlers()) {
        const std::size_t dot = h.key.find('.');
        const std::string sec = h.key.substr(0, dot);
        if (sec != section) {
            if (!out.empty()) out += '\n';
            out += "[" + sec + "]\n";
            section = sec;
        }
        out += h.key.substr(dot + 1) + " = " + h.get(cfg) + "\n";
    }
    out += "\n[categories]\n";
    for (const CategoryPrior& c : cfg.scene.categories) {
        out += c.name + " = " + format_category(c) + "\n";
    }
    return out;
}

} // namespace pgd
