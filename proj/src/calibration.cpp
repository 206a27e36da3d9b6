#include "agekit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "agekit/errors.hpp"
#include "agekit/kv.hpp"

namespace agekit {

namespace {

constexpr int kTableFormatVersion = 1;

void check_prediction(const Prediction& p, std::size_t i) {
    if (!std::isfinite(p.mu) || !std::isfinite(p.age)) {
        throw InvalidArgument("calibrate: prediction " + std::to_string(i) +
                              " has a non-finite mu or age");
    }
    if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) {
        throw InvalidArgument("calibrate: prediction " + std::to_string(i) +
                              " has non-positive sigma " + format_double(p.sigma));
    }
}

long long bucket_ordinal(double mu, double width) {
    return static_cast<long long>(std::floor(mu / width));
}

void validate_table(const ThresholdTable& t, const std::string& where) {
    if (!(t.bucket_width > 0.0) || !std::isfinite(t.bucket_width)) {
        throw ParseError(where + ": field 'bucket_width' must be positive");
    }
    if (!(t.target_fpr > 0.0) || !(t.target_fpr < 1.0)) {
        throw ParseError(where + ": field 'target_fpr' must be in (0, 1)");
    }
    if (!(t.side_split > 0.0) || !(t.side_split <= 1.0)) {
        throw ParseError(where + ": field 'side_split' must be in (0, 1]");
    }
    if (!(t.fallback_lt >= 0.0) || !(t.fallback_ut >= 0.0)) {
        throw ParseError(where + ": fallback thresholds must be >= 0");
    }
    for (std::size_t j = 0; j < t.buckets.size(); ++j) {
        const ThresholdBucket& b = t.buckets[j];
        const std::string name = "bucket." + std::to_string(j);
        if (!(b.lt >= 0.0) || !(b.ut >= 0.0) || !std::isfinite(b.lt) ||
            !std::isfinite(b.ut)) {
            throw ParseError(where + ": field '" + name +
                             "' has a negative or non-finite threshold");
        }
        if (!(b.hi > b.lo)) {
            throw ParseError(where + ": field '" + name + "' has hi <= lo");
        }
        const double span = b.hi - b.lo;
        if (std::abs(span - t.bucket_width) > 1e-9 * t.bucket_width) {
            throw ParseError(where + ": field '" + name +
                             "' span does not equal bucket_width");
        }
        const double cells = b.lo / t.bucket_width;
        if (std::abs(cells - std::round(cells)) > 1e-9) {
            throw ParseError(where + ": field '" + name +
                             "' lo is not a multiple of bucket_width");
        }
        if (j > 0 && t.buckets[j - 1].hi != b.lo) {
            throw ParseError(where + ": field '" + name +
                             "' is not contiguous with the previous bucket");
        }
    }
}

void write_table(KvDoc& doc, const std::string& prefix, const ThresholdTable& t) {
    doc.add_double(prefix + "target_fpr", t.target_fpr);
    doc.add_double(prefix + "side_split", t.side_split);
    doc.add_double(prefix + "bucket_width", t.bucket_width);
    doc.add_i64(prefix + "min_bucket_n", static_cast<long long>(t.min_bucket_n));
    doc.add_double(prefix + "fallback_lt", t.fallback_lt);
    doc.add_double(prefix + "fallback_ut", t.fallback_ut);
    doc.add_i64(prefix + "bucket_count", static_cast<long long>(t.buckets.size()));
    for (std::size_t j = 0; j < t.buckets.size(); ++j) {
        const ThresholdBucket& b = t.buckets[j];
        const std::string p = prefix + "bucket." + std::to_string(j) + ".";
        doc.add_double(p + "lo", b.lo);
        doc.add_double(p + "hi", b.hi);
        doc.add_double(p + "lt", b.lt);
        doc.add_double(p + "ut", b.ut);
        doc.add_i64(p + "n", static_cast<long long>(b.n));
    }
}

ThresholdTable read_table(const KvDoc& doc, const std::string& prefix,
                          const std::string& path,
                          std::set<std::string>& known) {
    auto mark = [&known](std::string key) {
        known.insert(key);
        return key;
    };
    ThresholdTable t;
    t.target_fpr = doc.get_double(mark(prefix + "target_fpr"));
    t.side_split = doc.get_double(mark(prefix + "side_split"));
    t.bucket_width = doc.get_double(mark(prefix + "bucket_width"));
    const long long min_n = doc.get_i64(mark(prefix + "min_bucket_n"));
    if (min_n < 1) {
        throw ParseError(path + ": field '" + prefix +
                         "min_bucket_n' must be >= 1");
    }
    t.min_bucket_n = static_cast<std::size_t>(min_n);
    t.fallback_lt = doc.get_double(mark(prefix + "fallback_lt"));
    t.fallback_ut = doc.get_double(mark(prefix + "fallback_ut"));
    const long long count = doc.get_i64(mark(prefix + "bucket_count"));
    if (count < 0) {
        throw ParseError(path + ": field '" + prefix + "bucket_count' is negative");
    }
    t.buckets.resize(static_cast<std::size_t>(count));
    for (std::size_t j = 0; j < t.buckets.size(); ++j) {
        const std::string p = prefix + "bucket." + std::to_string(j) + ".";
        ThresholdBucket& b = t.buckets[j];
        b.lo = doc.get_double(mark(p + "lo"));
        b.hi = doc.get_double(mark(p + "hi"));
        b.lt = doc.get_double(mark(p + "lt"));
        b.ut = doc.get_double(mark(p + "ut"));
        const long long n = doc.get_i64(mark(p + "n"));
        if (n < 0) {
            throw ParseError(path + ": field '" + p + "n' is negative");
        }
        b.n = static_cast<std::size_t>(n);
    }
    validate_table(t, path + (prefix.empty() ? "" : ": " + prefix + "*"));
    return t;
}

} // namespace

int ThresholdTable::bucket_for(double mu) const {
    if (buckets.empty()) {
        return -1;
    }
    const double lo0 = buckets.front().lo;
    if (!(mu >= lo0) || !(mu < buckets.back().hi)) {
        return -1;
    }
    auto j = static_cast<std::size_t>((mu - lo0) / bucket_width);
    if (j >= buckets.size()) {
        j = buckets.size() - 1;
    }
    // Guard the float division against straddling a boundary.
    if (mu < buckets[j].lo && j > 0) {
        --j;
    } else if (mu >= buckets[j].hi && j + 1 < buckets.size()) {
        ++j;
    }
    return static_cast<int>(j);
}

void CalibOptions::validate() const {
    if (!(target_fpr > 0.0) || !(target_fpr < 0.5)) {
        throw InvalidArgument("calibration: target_fpr must be in (0, 0.5)");
    }
    if (!(bucket_width > 0.0) || !std::isfinite(bucket_width)) {
        throw InvalidArgument("calibration: bucket_width must be positive");
    }
    if (!(side_split > 0.0) || !(side_split <= 1.0)) {
        throw InvalidArgument("calibration: side_split must be in (0, 1]");
    }
    if (min_bucket_n == 0) {
        throw InvalidArgument("calibration: min_bucket_n must be >= 1");
    }
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw InvalidArgument("quantile: empty sample");
    }
    if (!(p >= 0.0) || !(p <= 1.0)) {
        throw InvalidArgument("quantile: level must be in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double h = static_cast<double>(values.size() - 1) * p;
    const auto i = static_cast<std::size_t>(h);
    if (i + 1 >= values.size()) {
        return values.back();
    }
    return values[i] + (h - static_cast<double>(i)) * (values[i + 1] - values[i]);
}

ThresholdTable calibrate(std::span<const Prediction> preds,
                         const CalibOptions& opt) {
    opt.validate();
    if (preds.size() < opt.min_bucket_n) {
        throw InvalidArgument("calibrate: need at least " +
                              std::to_string(opt.min_bucket_n) +
                              " predictions, got " + std::to_string(preds.size()));
    }
    for (std::size_t i = 0; i < preds.size(); ++i) {
        check_prediction(preds[i], i);
    }

    const double lt_level = 1.0 - opt.target_fpr * opt.side_split;
    const double ut_level = 1.0 - opt.target_fpr * (1.0 - opt.side_split);

    long long first = bucket_ordinal(preds[0].mu, opt.bucket_width);
    long long last = first;
    for (const Prediction& p : preds) {
        const long long o = bucket_ordinal(p.mu, opt.bucket_width);
        first = std::min(first, o);
        last = std::max(last, o);
    }
    const auto n_buckets = static_cast<std::size_t>(last - first + 1);

    // Signed normalized residuals per bucket; the upper set is the negation
    // of the lower one, kept separately for clarity.
    std::vector<std::vector<double>> low(n_buckets), up(n_buckets);
    std::vector<std::size_t> n_low(n_buckets, 0), n_up(n_buckets, 0);
    std::vector<double> low_all, up_all;
    low_all.reserve(preds.size());
    up_all.reserve(preds.size());
    for (const Prediction& p : preds) {
        const auto j = static_cast<std::size_t>(
            bucket_ordinal(p.mu, opt.bucket_width) - first);
        const double z = (p.mu - p.age) / p.sigma;
        low[j].push_back(z);
        up[j].push_back(-z);
        if (p.age < p.mu) {
            ++n_low[j];
        } else {
            ++n_up[j];
        }
        low_all.push_back(z);
        up_all.push_back(-z);
    }

    ThresholdTable table;
    table.bucket_width = opt.bucket_width;
    table.target_fpr = opt.target_fpr;
    table.side_split = opt.side_split;
    table.min_bucket_n = opt.min_bucket_n;
    table.fallback_lt = std::max(0.0, quantile(low_all, lt_level));
    table.fallback_ut = std::max(0.0, quantile(up_all, ut_level));

    table.buckets.resize(n_buckets);
    for (std::size_t j = 0; j < n_buckets; ++j) {
        ThresholdBucket& b = table.buckets[j];
        b.lo = static_cast<double>(first + static_cast<long long>(j)) *
               opt.bucket_width;
        b.hi = b.lo + opt.bucket_width;
        b.n = low[j].size();
        b.lt = n_low[j] >= opt.min_bucket_n
                   ? std::max(0.0, quantile(low[j], lt_level))
                   : table.fallback_lt;
        b.ut = n_up[j] >= opt.min_bucket_n
                   ? std::max(0.0, quantile(up[j], ut_level))
                   : table.fallback_ut;
    }
    return table;
}

AgeRange range_for(double mu, double sigma, const ThresholdTable& table) {
    if (!std::isfinite(mu) || !std::isfinite(sigma)) {
        throw InvalidArgument("range_for: non-finite mu or sigma");
    }
    if (!(sigma > 0.0)) {
        throw InvalidArgument("range_for: sigma must be positive");
    }
    AgeRange r;
    r.mu = mu;
    r.sigma = sigma;
    r.bucket_index = table.bucket_for(mu);
    const double lt =
        r.bucket_index < 0 ? table.fallback_lt
                           : table.buckets[static_cast<std::size_t>(r.bucket_index)].lt;
    const double ut =
        r.bucket_index < 0 ? table.fallback_ut
                           : table.buckets[static_cast<std::size_t>(r.bucket_index)].ut;
    r.lo = mu - sigma * lt;
    r.hi = mu + sigma * ut;
    return r;
}

double piecewise_pdf(double x, double mu, double sigma, double lt, double ut) {
    if (!std::isfinite(x) || !std::isfinite(mu)) {
        throw InvalidArgument("piecewise_pdf: non-finite x or mu");
    }
    if (!(sigma > 0.0) || !(lt > 0.0) || !(ut > 0.0)) {
        throw InvalidArgument("piecewise_pdf: sigma, lt, ut must all be positive");
    }
    const double s = x < mu ? sigma * lt : sigma * ut;
    const double z = (x - mu) / s;
    constexpr double inv_sqrt_2pi =
        std::numbers::inv_sqrtpi / std::numbers::sqrt2;
    return inv_sqrt_2pi * std::exp(-0.5 * z * z) / s;
}

void save_table(const TableArtifact& artifact, const std::string& path) {
    KvDoc doc;
    doc.add_i64("format_version", kTableFormatVersion);
    doc.add_token("kind", "threshold_table");
    doc.add_u64("seed", artifact.seed);
    write_table(doc, "", artifact.table);
    doc.add_i64("baseline.present", artifact.baseline.has_value() ? 1 : 0);
    if (artifact.baseline.has_value()) {
        write_table(doc, "baseline.", *artifact.baseline);
    }
    for (const auto& [key, value] : artifact.provenance) {
        doc.add_raw("config." + key, value);
    }
    doc.save(path);
}

TableArtifact load_table(const std::string& path) {
    KvDoc doc = KvDoc::load(path);
    std::set<std::string> known;
    auto mark = [&known](std::string key) {
        known.insert(key);
        return key;
    };

    const long long version = doc.get_i64(mark("format_version"));
    if (version != kTableFormatVersion) {
        throw ParseError(path + ": unsupported format_version " +
                         std::to_string(version) + " (expected " +
                         std::to_string(kTableFormatVersion) + ")");
    }
    if (doc.get_token(mark("kind")) != "threshold_table") {
        throw ParseError(path + ": field 'kind' is not 'threshold_table'");
    }

    TableArtifact artifact;
    artifact.seed = doc.get_u64(mark("seed"));
    artifact.table = read_table(doc, "", path, known);
    if (doc.get_i64(mark("baseline.present")) != 0) {
        artifact.baseline = read_table(doc, "baseline.", path, known);
    }

    for (const auto& [key, value] : doc.entries()) {
        if (known.count(key) != 0) {
            continue;
        }
        if (key.rfind("config.", 0) == 0) {
            artifact.provenance.emplace_back(key.substr(7), value);
            continue;
        }
        throw ParseError(path + ": unexpected field '" + key + "'");
    }
    return artifact;
}

} // namespace agekit
