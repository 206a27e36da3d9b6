#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace agekit {

/// One model output paired with ground truth, the unit calibration and
/// evaluation work on.
struct Prediction {
    double mu = 0.0;
    double sigma = 0.0;
    double age = 0.0;
    int group = 0;
};

struct ThresholdBucket {
    double lo = 0.0;
    double hi = 0.0;
    double lt = 0.0;
    double ut = 0.0;
    std::size_t n = 0; ///< calibration samples whose mu fell in [lo, hi)
};

/// Per-bucket confidence-range multipliers. Immutable once built; safe for
/// concurrent readers. Thresholds are multipliers of sigma, except in the
/// sigma-blind baseline produced by fixed_width_baseline, where the same
/// structure holds additive offsets in years.
struct ThresholdTable {
    double bucket_width = 5.0;
    std::vector<ThresholdBucket> buckets; ///< contiguous, sorted by lo
    double fallback_lt = 0.0;
    double fallback_ut = 0.0;
    double target_fpr = 0.005;
    double side_split = 0.5;
    std::size_t min_bucket_n = 50;

    /// Index of the bucket whose [lo, hi) contains mu, or -1 when mu falls
    /// outside the calibrated span (callers then use the fallbacks).
    int bucket_for(double mu) const;
};

struct CalibOptions {
    double target_fpr = 0.005;
    double bucket_width = 5.0;
    double side_split = 0.5;
    std::size_t min_bucket_n = 50;

    void validate() const;
};

/// Confidence range for one prediction: [lo, hi] = [mu - sigma*lt, mu + sigma*ut].
struct AgeRange {
    double lo = 0.0;
    double hi = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    int bucket_index = -1; ///< -1 when the fallback thresholds were used

    double width() const { return hi - lo; }
};

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7): h = (n-1)p, result interpolates values[floor(h)]
/// and values[floor(h)+1]. Throws on an empty sample or p outside [0, 1].
double quantile(std::vector<double> values, double p);

/// Learns per-bucket thresholds from held-out predictions.
///
/// For each bucket (assigned by mu, half-open, boundaries at multiples of
/// bucket_width) the lower threshold is the (1 - target_fpr*side_split)
/// quantile of the signed normalized residuals (mu-y)/sigma over the whole
/// bucket, and the upper threshold the (1 - target_fpr*(1-side_split))
/// quantile of (y-mu)/sigma; this makes each tail of the true-age
/// distribution escape the range with the side's share of the FPR budget.
/// Quantiles are clamped at zero (a perfect predictor yields lt = ut = 0).
/// A side with fewer than min_bucket_n residuals of its sign falls back to
/// the global quantile over all predictions.
ThresholdTable calibrate(std::span<const Prediction> preds,
                         const CalibOptions& opt);

/// Eq.-style confidence range lookup; mu outside the calibrated span uses
/// the fallback thresholds. Throws on non-finite mu/sigma or sigma <= 0.
AgeRange range_for(double mu, double sigma, const ThresholdTable& table);

/// Piecewise two-Gaussian density: std sigma*lt left of mu, sigma*ut right
/// of mu. Each native half carries mass exactly 1/2, so the total
/// integrates to 1. Throws unless sigma, lt, ut are all positive.
double piecewise_pdf(double x, double mu, double sigma, double lt, double ut);

/// On-disk bundle: the calibrated table, the sigma-blind fixed-width
/// baseline grown from the same predictions, and run provenance.
struct TableArtifact {
    ThresholdTable table;
    std::optional<ThresholdTable> baseline;
    std::uint64_t seed = 0;
    /// Flattened run-config echo written into the file.
    std::vector<std::pair<std::string, std::string>> provenance;
};

/// Threshold-table file I/O (docs/FORMATS.md). Bit-exact round trip;
/// loaders validate the schema and name the first offending field.
void save_table(const TableArtifact& artifact, const std::string& path);
TableArtifact load_table(const std::string& path);

} // namespace agekit
