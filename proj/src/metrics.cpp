#include "agekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "agekit/errors.hpp"

namespace agekit {

namespace {

double lower_median(std::vector<double> values) {
    // callers guarantee values is non-empty
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

void add_rates(KvDoc& doc, const std::string& prefix, const RateResult& r) {
    if (r.fpr.has_value()) {
        doc.add_double(prefix + "fpr", *r.fpr);
    } else {
        doc.add_token(prefix + "fpr", "undefined");
    }
    if (r.tpr.has_value()) {
        doc.add_double(prefix + "tpr", *r.tpr);
    } else {
        doc.add_token(prefix + "tpr", "undefined");
    }
    doc.add_i64(prefix + "n_adult", static_cast<long long>(r.n_adult));
    doc.add_i64(prefix + "n_under", static_cast<long long>(r.n_under));
    doc.add_i64(prefix + "flagged_adult", static_cast<long long>(r.flagged_adult));
    doc.add_i64(prefix + "flagged_under", static_cast<long long>(r.flagged_under));
}

void add_comparability(KvDoc& doc, const std::string& prefix,
                       const ComparabilityStats& s) {
    doc.add_double(prefix + "empirical_fpr", s.empirical_fpr);
    doc.add_double(prefix + "median_width", s.median_width);
    doc.add_double(prefix + "mean_width", s.mean_width);
}

} // namespace

double mae(std::span<const double> predictions, std::span<const double> truths) {
    if (predictions.size() != truths.size()) {
        throw InvalidArgument("mae: " + std::to_string(predictions.size()) +
                              " predictions vs " + std::to_string(truths.size()) +
                              " truths");
    }
    if (predictions.empty()) {
        throw InvalidArgument("mae: empty input");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        acc += std::abs(predictions[i] - truths[i]);
    }
    return acc / static_cast<double>(predictions.size());
}

RateResult verification_rates(std::span<const DecisionRecord> records,
                              std::span<const double> truths, double legal_age) {
    if (records.size() != truths.size()) {
        throw InvalidArgument("verification_rates: " +
                              std::to_string(records.size()) + " records vs " +
                              std::to_string(truths.size()) + " truths");
    }
    RateResult out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!records[i].flagged.has_value()) {
            throw InvalidArgument("verification_rates: record " +
                                  std::to_string(i) + " has no flagged bit");
        }
        const bool adult = truths[i] >= legal_age;
        const bool flagged = *records[i].flagged;
        if (adult) {
            ++out.n_adult;
            out.flagged_adult += flagged ? 1 : 0;
        } else {
            ++out.n_under;
            out.flagged_under += flagged ? 1 : 0;
        }
    }
    if (out.n_adult > 0) {
        out.fpr = static_cast<double>(out.flagged_adult) /
                  static_cast<double>(out.n_adult);
    }
    if (out.n_under > 0) {
        out.tpr = static_cast<double>(out.flagged_under) /
                  static_cast<double>(out.n_under);
    }
    return out;
}

void MatchOptions::validate() const {
    if (!(grid_min > 0.0) || !(grid_max >= grid_min) ||
        !std::isfinite(grid_max)) {
        throw InvalidArgument("match: need 0 < grid_min <= grid_max");
    }
    if (grid_points < 2) {
        throw InvalidArgument("match: grid_points must be >= 2");
    }
    if (!(tpr_tolerance >= 0.0)) {
        throw InvalidArgument("match: tpr_tolerance must be >= 0");
    }
}

MatchedPoint match_tpr(std::span<const Prediction> preds,
                       const ThresholdTable& table,
                       const VerificationPolicy& policy,
                       const MatchOptions& opt) {
    opt.validate();
    policy.validate();
    if (preds.empty()) {
        throw InvalidArgument("match_tpr: no predictions");
    }

    // Singular-regression operating point, the target to match.
    std::size_t n_adult = 0, n_under = 0, sr_fa = 0, sr_fu = 0;
    for (const Prediction& p : preds) {
        const bool adult = p.age >= policy.legal_age;
        const bool flagged = p.mu < policy.challenge_age;
        (adult ? n_adult : n_under) += 1;
        if (flagged) {
            (adult ? sr_fa : sr_fu) += 1;
        }
    }
    if (n_adult == 0 || n_under == 0) {
        throw InvalidArgument("match_tpr: need both adults and underage samples, got " +
                              std::to_string(n_adult) + " adults and " +
                              std::to_string(n_under) + " underage");
    }
    const double sr_tpr = static_cast<double>(sr_fu) / static_cast<double>(n_under);
    const double sr_fpr = static_cast<double>(sr_fa) / static_cast<double>(n_adult);

    // The flag decision only involves range.lo = mu - sigma*lt*scale, so the
    // per-sample base threshold can be resolved once.
    std::vector<double> slack(preds.size()); // sigma * lt of the sample's bucket
    std::vector<bool> adult(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const Prediction& p = preds[i];
        if (!(p.sigma > 0.0) || !std::isfinite(p.sigma) || !std::isfinite(p.mu)) {
            throw InvalidArgument("match_tpr: prediction " + std::to_string(i) +
                                  " has non-finite mu or non-positive sigma");
        }
        const int j = table.bucket_for(p.mu);
        const double lt =
            j < 0 ? table.fallback_lt
                  : table.buckets[static_cast<std::size_t>(j)].lt;
        slack[i] = p.sigma * lt;
        adult[i] = p.age >= policy.legal_age;
    }

    MatchedPoint best;
    double best_gap = std::numeric_limits<double>::infinity();
    double tpr_lo = 1.0, tpr_hi = 0.0;
    const double ratio = opt.grid_max / opt.grid_min;
    for (std::size_t g = 0; g < opt.grid_points; ++g) {
        const double scale =
            opt.grid_min *
            std::pow(ratio, static_cast<double>(g) /
                                static_cast<double>(opt.grid_points - 1));
        std::size_t fa = 0, fu = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (preds[i].mu - slack[i] * scale < policy.legal_age) {
                (adult[i] ? fa : fu) += 1;
            }
        }
        const double tpr = static_cast<double>(fu) / static_cast<double>(n_under);
        const double fpr = static_cast<double>(fa) / static_cast<double>(n_adult);
        tpr_lo = std::min(tpr_lo, tpr);
        tpr_hi = std::max(tpr_hi, tpr);
        const double gap = std::abs(tpr - sr_tpr);
        const bool better =
            gap < best_gap ||
            (gap == best_gap &&
             (fpr < best.confidence_fpr ||
              (fpr == best.confidence_fpr && scale < best.scale)));
        if (better) {
            best_gap = gap;
            best.scale = scale;
            best.confidence_fpr = fpr;
            best.confidence_tpr = tpr;
        }
    }

    if (best_gap > opt.tpr_tolerance) {
        throw NumericError("match_tpr: SR TPR " + format_double(sr_tpr) +
                           " not reachable within " +
                           format_double(opt.tpr_tolerance) +
                           "; the sweep achieves [" + format_double(tpr_lo) +
                           ", " + format_double(tpr_hi) + "]");
    }
    best.sr_fpr = sr_fpr;
    best.sr_tpr = sr_tpr;
    return best;
}

ComparabilityStats comparability_stats(std::span<const AgeRange> ranges,
                                       std::span<const double> truths) {
    if (ranges.size() != truths.size()) {
        throw InvalidArgument("comparability_stats: " +
                              std::to_string(ranges.size()) + " ranges vs " +
                              std::to_string(truths.size()) + " truths");
    }
    if (ranges.empty()) {
        throw InvalidArgument("comparability_stats: empty input");
    }
    std::size_t outside = 0;
    std::vector<double> widths(ranges.size());
    double width_sum = 0.0;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        if (truths[i] < ranges[i].lo || truths[i] > ranges[i].hi) {
            ++outside;
        }
        widths[i] = ranges[i].width();
        width_sum += widths[i];
    }
    ComparabilityStats out;
    out.empirical_fpr =
        static_cast<double>(outside) / static_cast<double>(ranges.size());
    out.mean_width = width_sum / static_cast<double>(ranges.size());
    out.median_width = lower_median(std::move(widths));
    return out;
}

std::vector<BucketWidth> bucket_widths(std::span<const AgeRange> ranges,
                                       const ThresholdTable& table) {
    std::map<int, std::vector<double>> by_bucket;
    for (const AgeRange& r : ranges) {
        by_bucket[r.bucket_index].push_back(r.width());
    }
    std::vector<BucketWidth> out;
    out.reserve(by_bucket.size());
    for (auto& [index, widths] : by_bucket) {
        BucketWidth row;
        row.bucket_index = index;
        if (index >= 0) {
            const auto& b = table.buckets.at(static_cast<std::size_t>(index));
            row.lo = b.lo;
            row.hi = b.hi;
        }
        row.n = widths.size();
        row.median_width = lower_median(std::move(widths));
        out.push_back(row);
    }
    return out;
}

KvDoc EvalReport::to_doc() const {
    KvDoc doc;
    doc.add_i64("format_version", 1);
    doc.add_token("kind", "report");
    doc.add_u64("seed", seed);
    doc.add_token("task", to_token(task));
    doc.add_i64("n", static_cast<long long>(n));
    doc.add_double("mae.overall", overall_mae);
    for (const auto& [group, value] : per_group_mae) {
        doc.add_double("mae.group." + std::to_string(group), value);
    }
    if (verification.has_value()) {
        const VerificationEval& v = *verification;
        doc.add_token("verification.method", v.method);
        doc.add_double("verification.legal_age", v.legal_age);
        doc.add_double("verification.challenge_age", v.challenge_age);
        if (v.sr.has_value()) {
            add_rates(doc, "verification.sr.", *v.sr);
        }
        if (v.confidence.has_value()) {
            add_rates(doc, "verification.confidence.", *v.confidence);
        }
        if (v.matched.has_value()) {
            doc.add_double("verification.matched.scale", v.matched->scale);
            doc.add_double("verification.matched.confidence_fpr",
                           v.matched->confidence_fpr);
            doc.add_double("verification.matched.confidence_tpr",
                           v.matched->confidence_tpr);
            doc.add_double("verification.matched.sr_fpr", v.matched->sr_fpr);
            doc.add_double("verification.matched.sr_tpr", v.matched->sr_tpr);
        }
    }
    if (comparability.has_value()) {
        const ComparabilityEval& c = *comparability;
        add_comparability(doc, "comparability.", c.confidence);
        for (const BucketWidth& row : c.per_bucket) {
            if (row.bucket_index < 0) {
                doc.add_i64("comparability.fallback.n",
                            static_cast<long long>(row.n));
                doc.add_double("comparability.fallback.median_width",
                               row.median_width);
                continue;
            }
            const std::string p =
                "comparability.bucket." + std::to_string(row.bucket_index) + ".";
            doc.add_double(p + "lo", row.lo);
            doc.add_double(p + "hi", row.hi);
            doc.add_i64(p + "n", static_cast<long long>(row.n));
            doc.add_double(p + "median_width", row.median_width);
        }
        if (c.baseline.has_value()) {
            add_comparability(doc, "comparability.baseline.", *c.baseline);
        }
    }
    for (const auto& [key, value] : provenance) {
        doc.add_raw("config." + key, value);
    }
    return doc;
}

std::string EvalReport::summary() const {
    const KvDoc doc = to_doc();
    std::string out;
    for (const auto& [key, value] : doc.entries()) {
        if (key == "format_version" || key == "kind" || key == "seed" ||
            key.rfind("config.", 0) == 0) {
            continue;
        }
        out += key;
        out += '\t';
        out += value;
        out += '\n';
    }
    return out;
}

void save_report(const EvalReport& report, const std::string& path) {
    report.to_doc().save(path);
}

} // namespace agekit
