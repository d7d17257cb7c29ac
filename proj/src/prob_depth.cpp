#include "pgd/prob_depth.hpp"

#include "pgd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pgd {

const char* to_string(DepthDivision m) {
    switch (m) {
    case DepthDivision::Uniform: return "uniform";
    case DepthDivision::Sid: return "sid";
    case DepthDivision::Lid: return "lid";
    case DepthDivision::UniformLog: return "uniform_log";
    }
    return "uniform";
}

DepthDivision division_from_string(const std::string& s) {
    if (s == "uniform") return DepthDivision::Uniform;
    if (s == "sid") return DepthDivision::Sid;
    if (s == "lid") return DepthDivision::Lid;
    if (s == "uniform_log") return DepthDivision::UniformLog;
    throw_parse("unknown depth division '" + s +
                "' (expected uniform, sid, lid or uniform_log)");
}

const char* to_string(DepthScoreVariant v) {
    switch (v) {
    case DepthScoreVariant::Top2Avg: return "top2_avg";
    case DepthScoreVariant::NormalizedEntropy: return "normalized_entropy";
    case DepthScoreVariant::OneMinusStd: return "one_minus_std";
    }
    return "top2_avg";
}

DepthScoreVariant depth_score_from_string(const std::string& s) {
    if (s == "top2_avg") return DepthScoreVariant::Top2Avg;
    if (s == "normalized_entropy") return DepthScoreVariant::NormalizedEntropy;
    if (s == "one_minus_std") return DepthScoreVariant::OneMinusStd;
    throw_parse("unknown depth score variant '" + s +
                "' (expected top2_avg, normalized_entropy or one_minus_std)");
}

double DepthQuantizer::finish_decode(double expectation) const {
    return method == DepthDivision::UniformLog ? std::exp(expectation) : expectation;
}

DepthQuantizer build_quantizer(double d_max, double unit, DepthDivision method, double d_lo) {
    if (!(unit > 0.0) || !(d_max > unit)) {
        throw_domain("bad_range: need d_max > unit > 0, got d_max = " + std::to_string(d_max) +
                     ", unit = " + std::to_string(unit));
    }
    const bool log_based = method != DepthDivision::Uniform;
    if (log_based && (!(d_lo > 0.0) || !(d_max > d_lo))) {
        throw_domain("bad_range: need d_max > d_lo > 0 for the " +
                     std::string(to_string(method)) + " division, got d_lo = " +
                     std::to_string(d_lo));
    }

    DepthQuantizer q;
    q.method = method;
    q.d_max = d_max;
    q.unit = unit;
    q.d_lo = d_lo;

    const int c = static_cast<int>(std::floor(d_max / unit)) + 1;
    const int k = c - 1;
    q.omega.resize(c);
    switch (method) {
    case DepthDivision::Uniform:
        for (int i = 0; i < c; ++i) q.omega[i] = i * unit;
        break;
    case DepthDivision::Sid:
    case DepthDivision::UniformLog: {
        const double lo = std::log(d_lo);
        const double hi = std::log(d_max);
        for (int i = 0; i < c; ++i) {
            q.omega[i] = std::exp(lo + (hi - lo) * i / k);
        }
        // exact endpoints, exp/log round trips drift by an ulp
        q.omega.front() = d_lo;
        q.omega.back() = d_max;
        break;
    }
    case DepthDivision::Lid:
        for (int i = 0; i < c; ++i) {
            q.omega[i] = d_lo + (d_max - d_lo) * (static_cast<double>(i) * (i + 1)) /
                                    (static_cast<double>(k) * (k + 1));
        }
        break;
    }

    for (int i = 1; i < c; ++i) {
        if (!(q.omega[i] > q.omega[i - 1])) {
            throw_domain("bad_range: split points are not strictly increasing");
        }
    }

    if (method == DepthDivision::UniformLog) {
        q.decode_points.resize(c);
        for (int i = 0; i < c; ++i) q.decode_points[i] = std::log(q.omega[i]);
    } else {
        q.decode_points = q.omega;
    }
    return q;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.empty()) {
        throw_domain("softmax: empty logit vector");
    }
    for (double v : logits) {
        if (!std::isfinite(v)) {
            throw_domain("non_finite_logit: logit vector contains a non-finite value");
        }
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

namespace {

std::vector<double> checked_probs(const DepthQuantizer& q, const DepthDistribution& dist) {
    if (static_cast<int>(dist.logits.size()) != q.bins()) {
        throw_domain("dimension_mismatch: got " + std::to_string(dist.logits.size()) +
                     " logits for a quantizer with " + std::to_string(q.bins()) + " bins");
    }
    return softmax(dist.logits);
}

} // namespace

double decode_expectation(const DepthQuantizer& q, const DepthDistribution& dist) {
    const std::vector<double> p = checked_probs(q, dist);
    double e = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) e += p[i] * q.decode_points[i];
    return q.finish_decode(e);
}

double depth_score(const DepthQuantizer& q, const DepthDistribution& dist,
                   DepthScoreVariant variant) {
    const std::vector<double> p = checked_probs(q, dist);
    const int c = q.bins();
    switch (variant) {
    case DepthScoreVariant::Top2Avg: {
        double top1 = 0.0, top2 = 0.0;
        for (double v : p) {
            if (v > top1) {
                top2 = top1;
                top1 = v;
            } else if (v > top2) {
                top2 = v;
            }
        }
        return 0.5 * (top1 + top2);
    }
    case DepthScoreVariant::NormalizedEntropy: {
        double h = 0.0;
        for (double v : p) {
            if (v > 0.0) h -= v * std::log(v);
        }
        return std::clamp(1.0 - h / std::log(static_cast<double>(c)), 0.0, 1.0);
    }
    case DepthScoreVariant::OneMinusStd: {
        double mean = 0.0;
        for (int i = 0; i < c; ++i) mean += p[i] * q.decode_points[i];
        double var = 0.0;
        for (int i = 0; i < c; ++i) {
            const double dx = q.decode_points[i] - mean;
            var += p[i] * dx * dx;
        }
        const double std_max = 0.5 * (q.decode_points.back() - q.decode_points.front());
        return std::clamp(1.0 - std::sqrt(std::max(var, 0.0)) / std_max, 0.0, 1.0);
    }
    }
    return 0.0;
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double fuse_local(double d_r, double d_p, double lambda) {
    if (!std::isfinite(d_r) || !(d_r >= 0.0)) {
        throw_domain("fuse_local: direct depth must be finite and nonnegative");
    }
    if (!std::isfinite(d_p) || !(d_p >= 0.0)) {
        throw_domain("fuse_local: probabilistic depth must be finite and nonnegative");
    }
    if (std::isnan(lambda)) {
        throw_domain("fuse_local: lambda must not be NaN");
    }
    const double w = sigmoid(lambda);
    return w * d_r + (1.0 - w) * d_p;
}

} // namespace pgd
