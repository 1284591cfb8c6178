#include "stens/distance.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "stens/error.hpp"

namespace stens {

void MetricConfig::validate() const {
    if (!(segmentation_threshold >= 0)) throw input_error("threshold must be >= 0", "threshold");
    if (histogram_bins < 2) throw input_error("histogram bins must be >= 2", "bins");
    if (saturation_range && !(saturation_range->lo < saturation_range->hi)) {
        throw input_error("saturation histogram range must have lo < hi", "saturation_range");
    }
    if (concentration_range && !(concentration_range->lo < concentration_range->hi)) {
        throw input_error("concentration histogram range must have lo < hi", "concentration_range");
    }
}

const char* to_string(MetricKind kind) {
    switch (kind) {
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::Manhattan: return "manhattan";
    case MetricKind::Wasserstein: return "wasserstein";
    case MetricKind::Embedding: return "embedding";
    case MetricKind::EmbeddingSubdivided: return "embedding_subdivided";
    }
    return "unknown";
}

const char* to_string(Variable variable) {
    switch (variable) {
    case Variable::Saturation: return "saturation";
    case Variable::Concentration: return "concentration";
    case Variable::Both: return "both";
    }
    return "unknown";
}

const char* to_string(RangeMode mode) {
    return mode == RangeMode::Global ? "global" : "per_pair";
}

MetricKind parse_metric_kind(std::string_view s) {
    for (auto k : {MetricKind::Euclidean, MetricKind::Manhattan, MetricKind::Wasserstein, MetricKind::Embedding,
                   MetricKind::EmbeddingSubdivided}) {
        if (s == to_string(k)) return k;
    }
    throw input_error(fmt::format("unknown metric '{}'", s), "metric");
}

Variable parse_variable(std::string_view s) {
    for (auto v : {Variable::Saturation, Variable::Concentration, Variable::Both}) {
        if (s == to_string(v)) return v;
    }
    throw input_error(fmt::format("unknown variable '{}'", s), "variable");
}

RangeMode parse_range_mode(std::string_view s) {
    if (s == "global") return RangeMode::Global;
    if (s == "per_pair") return RangeMode::PerPair;
    throw input_error(fmt::format("unknown histogram range mode '{}'", s), "range");
}

namespace {

double sum_abs_diff(std::span<const double> a, std::span<const double> b) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    const auto n = a.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += std::abs(a[i] - b[i]);
        s1 += std::abs(a[i + 1] - b[i + 1]);
        s2 += std::abs(a[i + 2] - b[i + 2]);
        s3 += std::abs(a[i + 3] - b[i + 3]);
    }
    for (; i < n; ++i) s0 += std::abs(a[i] - b[i]);
    return (s0 + s1) + (s2 + s3);
}

double sum_sq_diff(std::span<const double> a, std::span<const double> b) {
    double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
    const auto n = a.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const double d0 = a[i] - b[i], d1 = a[i + 1] - b[i + 1], d2 = a[i + 2] - b[i + 2], d3 = a[i + 3] - b[i + 3];
        s0 += d0 * d0;
        s1 += d1 * d1;
        s2 += d2 * d2;
        s3 += d3 * d3;
    }
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s0 += d * d;
    }
    return (s0 + s1) + (s2 + s3);
}

void check_same_shape(const Patch& a, const Patch& b) {
    if (a.saturation.size() != b.saturation.size() || a.concentration.size() != b.concentration.size() ||
        a.steps() != b.steps() || a.x.size() != b.x.size() || a.y.size() != b.y.size()) {
        throw input_error(fmt::format("patch shapes differ: {}#{} vs {}#{}", a.run_id, a.index, b.run_id, b.index),
                          "patch");
    }
}

} // namespace

double l1(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw input_error("vector dimensions differ", "embeddings");
    return sum_abs_diff(a, b);
}

double dist_lp(const Patch& a, const Patch& b, int p, Variable variable) {
    check_same_shape(a, b);
    if (p != 1 && p != 2) throw input_error("lp distance supports p = 1 or p = 2", "p");
    const bool sat = variable != Variable::Concentration;
    const bool con = variable != Variable::Saturation;
    if (p == 1) {
        double s = 0;
        if (sat) s += sum_abs_diff(a.saturation, b.saturation);
        if (con) s += sum_abs_diff(a.concentration, b.concentration);
        return s;
    }
    double s = 0;
    if (sat) s += sum_sq_diff(a.saturation, b.saturation);
    if (con) s += sum_sq_diff(a.concentration, b.concentration);
    return std::sqrt(s);
}

std::vector<double> histogram(std::span<const double> values, int bins, ValueRange range) {
    if (bins < 2) throw input_error("histogram bins must be >= 2", "bins");
    if (!(range.lo < range.hi)) throw input_error("histogram range must have lo < hi", "range");
    if (values.empty()) throw input_error("cannot build a histogram of an empty patch", "patch");
    std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
    const double scale = static_cast<double>(bins) / (range.hi - range.lo);
    for (double v : values) {
        const double pos = (v - range.lo) * scale;
        std::size_t b = 0;
        if (pos >= static_cast<double>(bins)) {
            b = static_cast<std::size_t>(bins - 1);
        } else if (pos > 0) {
            b = static_cast<std::size_t>(pos);
        }
        counts[b] += 1.0;
    }
    const double total = static_cast<double>(values.size());
    for (auto& c : counts) c /= total;
    return counts;
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw input_error("histograms must have equal, non-zero bin counts", "bins");
    double cdf_a = 0, cdf_b = 0, total = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        cdf_a += a[k];
        cdf_b += b[k];
        total += std::abs(cdf_a - cdf_b);
    }
    return total / static_cast<double>(a.size());
}

PatchHistograms patch_histograms(const Patch& patch, int bins, ValueRange saturation_range,
                                 ValueRange concentration_range) {
    return {histogram(patch.saturation, bins, saturation_range),
            histogram(patch.concentration, bins, concentration_range)};
}

double wasserstein_from_histograms(const PatchHistograms& a, const PatchHistograms& b, Variable variable) {
    switch (variable) {
    case Variable::Saturation: return wasserstein_1d(a.saturation, b.saturation);
    case Variable::Concentration: return wasserstein_1d(a.concentration, b.concentration);
    case Variable::Both:
        return 0.5 * (wasserstein_1d(a.saturation, b.saturation) + wasserstein_1d(a.concentration, b.concentration));
    }
    return 0;
}

namespace {

ValueRange span_range(std::span<const double> a, std::span<const double> b) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto s : {a, b}) {
        for (double v : s) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (!(lo < hi)) hi = lo + 1.0;
    return {lo, hi};
}

} // namespace

double dist_wasserstein(const Patch& a, const Patch& b, const MetricConfig& cfg) {
    check_same_shape(a, b);
    if (a.size() == 0) throw input_error("cannot compare empty patches", "patch");
    ValueRange sat_range, con_range;
    if (cfg.range_mode == RangeMode::PerPair) {
        sat_range = span_range(a.saturation, b.saturation);
        con_range = span_range(a.concentration, b.concentration);
    } else {
        sat_range = cfg.saturation_range.value_or(ValueRange{0.0, 1.0});
        if (cfg.concentration_range) {
            con_range = *cfg.concentration_range;
        } else {
            double hi = 0;
            for (double v : a.concentration) hi = std::max(hi, v);
            for (double v : b.concentration) hi = std::max(hi, v);
            con_range = {0.0, hi > 0 ? hi : 1.0};
        }
    }
    const auto ha = patch_histograms(a, cfg.histogram_bins, sat_range, con_range);
    const auto hb = patch_histograms(b, cfg.histogram_bins, sat_range, con_range);
    return wasserstein_from_histograms(ha, hb, cfg.variable);
}

double dist_embedding(const PatchKey& a, const PatchKey& b, const EmbeddingTable& embeddings, bool subdivided) {
    if (!subdivided) {
        return l1(embeddings.at({a.run, a.patch, std::nullopt}), embeddings.at({b.run, b.patch, std::nullopt}));
    }
    const auto subs_a = embeddings.sub_indices(a.run, a.patch);
    const auto subs_b = embeddings.sub_indices(b.run, b.patch);
    if (subs_a.empty()) throw not_found("no sub-patch embeddings for " + to_string(a), "embeddings");
    if (subs_b.empty()) throw not_found("no sub-patch embeddings for " + to_string(b), "embeddings");
    if (subs_a != subs_b) {
        throw input_error(fmt::format("sub-patch layouts differ between {} and {}", to_string(a), to_string(b)),
                          "embeddings");
    }
    double total = 0;
    for (auto s : subs_a) total += l1(embeddings.at({a.run, a.patch, s}), embeddings.at({b.run, b.patch, s}));
    return total;
}

} // namespace stens
