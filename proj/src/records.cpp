#include "pgd/records.hpp"

#include "pgd/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string_view>

namespace pgd {

std::string format_double(double v) {
    std::array<char, 40> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& token) {
    double v = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || token.empty()) {
        throw_parse("expected a number, got '" + token + "'");
    }
    return v;
}

int parse_int(const std::string& token) {
    int v = 0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last || token.empty()) {
        throw_parse("expected an integer, got '" + token + "'");
    }
    return v;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ' ') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<double> parse_double_list(const std::string& value) {
    std::vector<double> out;
    for (const std::string& item : split(value, ',')) out.push_back(parse_double(item));
    return out;
}

std::string join_doubles(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += format_double(values[i]);
    }
    return out;
}

// Ordered key=value view of one line, with duplicate detection.
class FieldMap {
public:
    FieldMap(const std::vector<std::string>& tokens, int line) : line_(line) {
        for (std::size_t i = 1; i < tokens.size(); ++i) {
            const std::string& tok = tokens[i];
            const std::size_t eq = tok.find('=');
            if (eq == std::string::npos || eq == 0) {
                fail("malformed token '" + tok + "' (expected key=value)");
            }
            const std::string key = tok.substr(0, eq);
            if (!seen_.insert(key).second) {
                fail("duplicate key '" + key + "'");
            }
            fields_.push_back({key, tok.substr(eq + 1)});
        }
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw_parse("line " + std::to_string(line_) + ": " + msg);
    }

    const std::string* find(const std::string& key) {
        for (const UnknownField& f : fields_) {
            if (f.key == key) {
                consumed_.insert(key);
                return &f.value;
            }
        }
        return nullptr;
    }

    std::string require(const std::string& key) {
        const std::string* v = find(key);
        if (!v) fail("missing required key '" + key + "'");
        return *v;
    }

    std::optional<double> opt_double(const std::string& key) {
        const std::string* v = find(key);
        if (!v) return std::nullopt;
        return wrap(key, [&] { return parse_double(*v); });
    }

    std::optional<int> opt_int(const std::string& key) {
        const std::string* v = find(key);
        if (!v) return std::nullopt;
        return wrap(key, [&] { return parse_int(*v); });
    }

    double req_double(const std::string& key) {
        const std::string v = require(key);
        return wrap(key, [&] { return parse_double(v); });
    }

    int req_int(const std::string& key) {
        const std::string v = require(key);
        return wrap(key, [&] { return parse_int(v); });
    }

    template <typename F>
    auto wrap(const std::string& key, F&& f) -> decltype(f()) {
        try {
            return f();
        } catch (const ParseError& e) {
            fail("key '" + key + "': " + e.what());
        }
    }

    std::vector<UnknownField> leftovers() const {
        std::vector<UnknownField> out;
        for (const UnknownField& f : fields_) {
            if (!consumed_.count(f.key)) out.push_back(f);
        }
        return out;
    }

    int line() const { return line_; }

private:
    int line_;
    std::vector<UnknownField> fields_;
    std::set<std::string> seen_;
    std::set<std::string> consumed_;
};

RecordHeader parse_header(const std::vector<std::string>& tokens, int line) {
    FieldMap f(tokens, line);
    RecordHeader h;
    h.version = f.req_int("version");
    if (h.version != 1) f.fail("unsupported record version " + std::to_string(h.version));
    h.cam.f = f.req_double("f");
    h.cam.c_u = f.req_double("cu");
    h.cam.c_v = f.req_double("cv");
    h.cam.b_x = f.opt_double("bx").value_or(0.0);
    h.cam.b_y = f.opt_double("by").value_or(0.0);
    h.cam.b_z = f.opt_double("bz").value_or(0.0);
    if (!(h.cam.f > 0.0)) f.fail("focal length must be positive");
    h.image_w = f.req_double("imgw");
    h.image_h = f.req_double("imgh");
    if (!(h.image_w > 0.0) || !(h.image_h > 0.0)) f.fail("image size must be positive");
    const std::string method = f.require("quant");
    const double unit = f.req_double("unit");
    const double d_max = f.req_double("dmax");
    const double d_lo = f.opt_double("dlo").value_or(1.0);
    try {
        h.quantizer = build_quantizer(d_max, unit, division_from_string(method), d_lo);
    } catch (const Error& e) {
        f.fail(std::string("invalid quantizer: ") + e.what());
    }
    const std::string cats = f.require("cats");
    for (const std::string& name : split(cats, ',')) {
        if (name.empty()) f.fail("empty category name");
        h.categories.push_back(name);
    }
    h.extras = f.leftovers();
    return h;
}

ObjectRecord parse_object(const std::vector<std::string>& tokens, int line,
                          const RecordHeader& header) {
    FieldMap f(tokens, line);
    ObjectRecord r;
    r.id = f.req_int("id");
    r.frame = f.req_int("frame");
    if (r.id < 0 || r.frame < 0) f.fail("id and frame must be nonnegative");
    const std::string type = f.require("type");
    if (type == "gt") {
        r.kind = RecordKind::GroundTruth;
    } else if (type == "pred") {
        r.kind = RecordKind::Prediction;
    } else {
        f.fail("unknown type '" + type + "' (expected gt or pred)");
    }
    r.category = f.req_int("cat");
    if (r.category < 0 || r.category >= static_cast<int>(header.categories.size())) {
        f.fail("category " + std::to_string(r.category) + " outside the header's " +
               std::to_string(header.categories.size()) + " categories");
    }

    r.x = f.opt_double("x");
    r.y = f.opt_double("y");
    r.z = f.opt_double("z");
    r.u_prime = f.opt_double("u");
    r.v_prime = f.opt_double("v");
    r.w = f.req_double("w");
    r.l = f.req_double("l");
    r.h = f.req_double("h");
    if (!(r.w > 0.0) || !(r.l > 0.0) || !(r.h > 0.0)) {
        f.fail("box extents must be positive");
    }
    r.yaw = f.req_double("yaw");
    r.vx = f.opt_double("vx");
    r.vz = f.opt_double("vz");
    r.attribute = f.opt_int("attr");
    r.difficulty = f.opt_int("diff");
    if (r.difficulty && (*r.difficulty < 0 || *r.difficulty > 2)) {
        f.fail("difficulty must be 0, 1 or 2");
    }

    r.d_r = f.opt_double("dr");
    r.centerness = f.opt_double("ctr");
    r.alpha = f.opt_double("alpha");
    r.d_p = f.opt_double("dp");
    r.s_d = f.opt_double("sd");
    r.d_l = f.opt_double("dl");
    r.d_g = f.opt_double("dg");
    r.d_final = f.opt_double("d");
    if (const std::optional<int> ng = f.opt_int("nogeo")) {
        if (*ng != 0 && *ng != 1) f.fail("nogeo must be 0 or 1");
        r.no_geometry = (*ng == 1);
    }

    if (const std::string* v = f.find("cls")) {
        r.cls = f.wrap("cls", [&] { return parse_double_list(*v); });
        if (r.cls.size() != header.categories.size()) {
            f.fail("cls length " + std::to_string(r.cls.size()) + " does not match the header's " +
                   std::to_string(header.categories.size()) + " categories");
        }
    }
    if (const std::string* v = f.find("logits")) {
        r.logits = f.wrap("logits", [&] { return parse_double_list(*v); });
        if (static_cast<int>(r.logits.size()) != header.quantizer.bins()) {
            f.fail("logits length " + std::to_string(r.logits.size()) +
                   " does not match the header quantizer's " +
                   std::to_string(header.quantizer.bins()) + " bins");
        }
    }

    if (r.kind == RecordKind::GroundTruth) {
        if (!r.x || !r.y || !r.z) f.fail("ground-truth record needs x, y and z");
    } else {
        if (!r.u_prime || !r.v_prime) f.fail("prediction record needs u and v");
    }
    r.extras = f.leftovers();
    return r;
}

void append(std::string& line, const std::string& key, const std::string& value) {
    line += ' ';
    line += key;
    line += '=';
    line += value;
}

void append_opt(std::string& line, const std::string& key, const std::optional<double>& v) {
    if (v) append(line, key, format_double(*v));
}

} // namespace

RecordFile parse_records(const std::string& text) {
    RecordFile file;
    bool have_header = false;
    int line_no = 0;
    std::string line;
    std::istringstream stream(text);
    std::set<std::tuple<int, int, int>> identity;  // (kind, frame, id)
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::vector<std::string> tokens = tokenize(line);
        if (tokens.empty()) continue;
        if (tokens[0] == "header") {
            if (have_header) {
                throw_parse("line " + std::to_string(line_no) + ": duplicate header");
            }
            file.header = parse_header(tokens, line_no);
            have_header = true;
        } else if (tokens[0] == "obj") {
            if (!have_header) {
                throw_parse("line " + std::to_string(line_no) + ": object before header");
            }
            ObjectRecord r = parse_object(tokens, line_no, file.header);
            const auto key = std::make_tuple(static_cast<int>(r.kind), r.frame, r.id);
            if (!identity.insert(key).second) {
                throw_parse("line " + std::to_string(line_no) + ": duplicate object id " +
                            std::to_string(r.id) + " in frame " + std::to_string(r.frame));
            }
            file.objects.push_back(std::move(r));
        } else {
            throw_parse("line " + std::to_string(line_no) + ": unknown record tag '" +
                        tokens[0] + "'");
        }
    }
    if (!have_header) {
        throw_parse("line 1: missing header record");
    }
    return file;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw_parse("cannot open file '" + path + "'");
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw_parse("cannot open file '" + path + "' for writing");
    }
    out << text;
    if (!out) {
        throw_parse("failed writing file '" + path + "'");
    }
}

RecordFile read_records(const std::string& path) {
    try {
        return parse_records(read_text_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string write_records(const RecordFile& file) {
    const RecordHeader& h = file.header;
    std::string out = "header";
    append(out, "version", std::to_string(h.version));
    append(out, "f", format_double(h.cam.f));
    append(out, "cu", format_double(h.cam.c_u));
    append(out, "cv", format_double(h.cam.c_v));
    append(out, "bx", format_double(h.cam.b_x));
    append(out, "by", format_double(h.cam.b_y));
    append(out, "bz", format_double(h.cam.b_z));
    append(out, "imgw", format_double(h.image_w));
    append(out, "imgh", format_double(h.image_h));
    append(out, "quant", to_string(h.quantizer.method));
    append(out, "unit", format_double(h.quantizer.unit));
    append(out, "dmax", format_double(h.quantizer.d_max));
    append(out, "dlo", format_double(h.quantizer.d_lo));
    std::string cats;
    for (std::size_t i = 0; i < h.categories.size(); ++i) {
        if (i) cats += ',';
        cats += h.categories[i];
    }
    append(out, "cats", cats);
    for (const UnknownField& f : h.extras) append(out, f.key, f.value);
    out += '\n';

    for (const ObjectRecord& r : file.objects) {
        std::string line = "obj";
        append(line, "id", std::to_string(r.id));
        append(line, "frame", std::to_string(r.frame));
        append(line, "type", r.kind == RecordKind::GroundTruth ? "gt" : "pred");
        append(line, "cat", std::to_string(r.category));
        append_opt(line, "x", r.x);
        append_opt(line, "y", r.y);
        append_opt(line, "z", r.z);
        append_opt(line, "u", r.u_prime);
        append_opt(line, "v", r.v_prime);
        append(line, "w", format_double(r.w));
        append(line, "l", format_double(r.l));
        append(line, "h", format_double(r.h));
        append(line, "yaw", format_double(r.yaw));
        append_opt(line, "vx", r.vx);
        append_opt(line, "vz", r.vz);
        if (r.attribute) append(line, "attr", std::to_string(*r.attribute));
        if (r.difficulty) append(line, "diff", std::to_string(*r.difficulty));
        append_opt(line, "dr", r.d_r);
        append_opt(line, "ctr", r.centerness);
        append_opt(line, "alpha", r.alpha);
        append_opt(line, "dp", r.d_p);
        append_opt(line, "sd", r.s_d);
        append_opt(line, "dl", r.d_l);
        append_opt(line, "dg", r.d_g);
        append_opt(line, "d", r.d_final);
        if (r.no_geometry) append(line, "nogeo", *r.no_geometry ? "1" : "0");
        if (!r.cls.empty()) append(line, "cls", join_doubles(r.cls));
        if (!r.logits.empty()) append(line, "logits", join_doubles(r.logits));
        for (const UnknownField& f : r.extras) append(line, f.key, f.value);
        out += line;
        out += '\n';
    }
    return out;
}

void write_records_file(const RecordFile& file, const std::string& path) {
    write_text_file(path, write_records(file));
}

bool records_equal(const RecordFile& a, const RecordFile& b) {
    return write_records(a) == write_records(b);
}

} // namespace pgd
