#pragma once

#include <string>
#include <vector>

namespace pgd {

// How the detection range [0, d_max] is discretized into split points.
enum class DepthDivision {
    Uniform,     // omega_i = i * unit
    Sid,         // log-spaced between d_lo and d_max
    Lid,         // linearly increasing bin widths between d_lo and d_max
    UniformLog,  // log-spaced points, expectation taken in log space
};

const char* to_string(DepthDivision m);
DepthDivision division_from_string(const std::string& s);  // throws ParseError

// Split points of a depth discretization. decode_points holds the values the
// probabilistic expectation is taken over: omega itself for most divisions,
// log(omega) for UniformLog (decoded back through exp).
struct DepthQuantizer {
    DepthDivision method = DepthDivision::Uniform;
    double d_max = 70.0;
    double unit = 10.0;
    double d_lo = 1.0;
    std::vector<double> omega;         // C strictly increasing points (m)
    std::vector<double> decode_points;

    int bins() const { return static_cast<int>(omega.size()); }
    double finish_decode(double expectation) const;
};

// Builds the C = floor(d_max / unit) + 1 split points for the given method.
// Throws DomainError (bad_range) unless d_max > unit > 0, and additionally
// d_max > d_lo > 0 for the log-based divisions.
DepthQuantizer build_quantizer(double d_max, double unit, DepthDivision method,
                               double d_lo = 1.0);

// Per-bin logits of a depth distribution. Probabilities are softmax(logits),
// invariant to adding a constant to every logit.
struct DepthDistribution {
    std::vector<double> logits;
};

// softmax with max subtraction; length and finiteness checked.
std::vector<double> softmax(const std::vector<double>& logits);

// Expected depth under softmax(logits) over the quantizer's decode points.
// Throws DomainError on a length mismatch or non-finite logit.
double decode_expectation(const DepthQuantizer& q, const DepthDistribution& dist);

enum class DepthScoreVariant {
    Top2Avg,            // mean of the two largest probabilities
    NormalizedEntropy,  // 1 - H(p) / log(C)
    OneMinusStd,        // 1 - std(p) / std_max over the decode points
};

const char* to_string(DepthScoreVariant v);
DepthScoreVariant depth_score_from_string(const std::string& s);  // throws ParseError

// Confidence in [0, 1] that the depth distribution is concentrated.
double depth_score(const DepthQuantizer& q, const DepthDistribution& dist,
                   DepthScoreVariant variant);

// Numerically stable logistic sigmoid.
double sigmoid(double x);

// Local fusion of the direct depth-head output d_r with the probabilistic
// decode d_p: sigmoid(lambda) * d_r + (1 - sigmoid(lambda)) * d_p.
double fuse_local(double d_r, double d_p, double lambda);

// lambda value whose sigmoid is the converged local-fusion weight 0.256.
inline constexpr double kDefaultLambda = -1.0668635903535293;

} // namespace pgd
