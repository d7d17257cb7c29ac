#pragma once

#include "pgd/camera.hpp"
#include "pgd/prob_depth.hpp"
#include "pgd/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pgd {

// A key=value token whose key the reader does not interpret. Preserved
// verbatim and in order so foreign annotations survive a round-trip.
struct UnknownField {
    std::string key;
    std::string value;
};

enum class RecordKind { GroundTruth, Prediction };

// One object line. Ground truth carries an explicit pose (x, y, z);
// predictions carry the raw head outputs (u', v', d_r, logits, ...) and get
// their pose from back-projection at the chosen depth. Optional fields are
// written only when present.
struct ObjectRecord {
    int id = 0;
    int frame = 0;
    RecordKind kind = RecordKind::GroundTruth;
    int category = 0;

    std::optional<double> x, y, z;          // ground-truth center
    double w = 0.0, l = 0.0, h = 0.0;
    double yaw = 0.0;
    std::optional<double> vx, vz;           // BEV velocity
    std::optional<int> attribute;
    std::optional<int> difficulty;

    std::optional<double> u_prime, v_prime; // projected 2D center
    std::optional<double> d_r;              // direct-regression depth
    std::optional<double> centerness;
    std::optional<double> alpha;            // global-fusion logit
    std::vector<double> cls;                // class confidences (empty = absent)
    std::vector<double> logits;             // depth-bin logits (empty = absent)

    std::optional<double> d_p, s_d, d_l;    // filled by decode
    std::optional<double> d_g, d_final;     // filled by propagate
    std::optional<bool> no_geometry;

    std::vector<UnknownField> extras;
};

struct RecordHeader {
    int version = 1;
    CameraModel cam;
    double image_w = 0.0;
    double image_h = 0.0;
    DepthQuantizer quantizer;
    std::vector<std::string> categories;
    std::vector<UnknownField> extras;
};

struct RecordFile {
    RecordHeader header;
    std::vector<ObjectRecord> objects;
};

// Shortest round-trip decimal formatting shared by every text emitter.
std::string format_double(double v);
double parse_double(const std::string& token);  // throws ParseError
int parse_int(const std::string& token);        // throws ParseError

// Parses the line-delimited record format. Line 1 must be the header; every
// error message carries its 1-based line number.
RecordFile parse_records(const std::string& text);
RecordFile read_records(const std::string& path);

std::string write_records(const RecordFile& file);
void write_records_file(const RecordFile& file, const std::string& path);

// Generic file helpers used by the CLI surface.
std::string read_text_file(const std::string& path);   // throws ParseError
void write_text_file(const std::string& path, const std::string& text);

bool records_equal(const RecordFile& a, const RecordFile& b);

} // namespace pgd
