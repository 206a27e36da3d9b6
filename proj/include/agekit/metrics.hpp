#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agekit/calibration.hpp"
#include "agekit/decision.hpp"
#include "agekit/kv.hpp"

namespace agekit {

/// Mean absolute error; lengths must match and be >= 1.
double mae(std::span<const double> predictions, std::span<const double> truths);

/// Verification confusion counts. Rates are left empty (not coerced to 0)
/// when their denominator is zero.
struct RateResult {
    std::optional<double> fpr; ///< flagged adults / adults
    std::optional<double> tpr; ///< flagged underage / underage
    std::size_t n_adult = 0;
    std::size_t n_under = 0;
    std::size_t flagged_adult = 0;
    std::size_t flagged_under = 0;
};

/// Counts flags against truth; adult means true age >= legal_age. Every
/// record must have its flagged bit set.
RateResult verification_rates(std::span<const DecisionRecord> records,
                              std::span<const double> truths, double legal_age);

struct MatchOptions {
    double grid_min = 0.25;
    double grid_max = 4.0;
    std::size_t grid_points = 200;
    double tpr_tolerance = 0.005;

    void validate() const;
};

struct MatchedPoint {
    double scale = 1.0; ///< multiplier applied to every lt (fallback included)
    double confidence_fpr = 0.0;
    double confidence_tpr = 0.0;
    double sr_fpr = 0.0;
    double sr_tpr = 0.0;
};

/// Matches the confidence method's TPR to the singular-regression baseline
/// by sweeping a scalar on the lower thresholds over a geometric grid.
/// Picks the grid point with TPR closest to SR's; ties break toward lower
/// FPR, then toward the smaller scale. Throws NumericError (reporting the
/// achievable TPR range) if no grid point lands within tpr_tolerance, and
/// InvalidArgument when the data has no adults or no underage samples.
MatchedPoint match_tpr(std::span<const Prediction> preds,
                       const ThresholdTable& table,
                       const VerificationPolicy& policy,
                       const MatchOptions& opt);

struct ComparabilityStats {
    double empirical_fpr = 0.0; ///< truth outside the closed range
    double median_width = 0.0;  ///< lower median on even counts
    double mean_width = 0.0;
};

ComparabilityStats comparability_stats(std::span<const AgeRange> ranges,
                                       std::span<const double> truths);

/// Median range width per threshold bucket; bucket_index -1 collects the
/// ranges that used the fallback thresholds (lo/hi are 0 for that row).
struct BucketWidth {
    int bucket_index = -1;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;
    double median_width = 0.0;
};

std::vector<BucketWidth> bucket_widths(std::span<const AgeRange> ranges,
                                       const ThresholdTable& table);

struct VerificationEval {
    std::string method; ///< sr, confidence, or both
    double legal_age = 18.0;
    double challenge_age = 25.0;
    std::optional<RateResult> sr;
    std::optional<RateResult> confidence;
    std::optional<MatchedPoint> matched; ///< present when method = both
};

struct ComparabilityEval {
    ComparabilityStats confidence;
    std::vector<BucketWidth> per_bucket;
    std::optional<ComparabilityStats> baseline; ///< sigma-blind fixed-width
};

/// Everything one eval run reports. Serialization is deterministic:
/// identical inputs yield byte-identical files.
struct EvalReport {
    Task task = Task::Estimate;
    std::size_t n = 0;
    double overall_mae = 0.0;
    std::map<int, double> per_group_mae;
    std::optional<VerificationEval> verification;
    std::optional<ComparabilityEval> comparability;
    std::uint64_t seed = 0;
    /// Flattened run-config echo written into the file.
    std::vector<std::pair<std::string, std::string>> provenance;

    KvDoc to_doc() const;
    /// Flat `name<TAB>value` lines (metrics only), for diffing in CI.
    std::string summary() const;
};

void save_report(const EvalReport& report, const std::string& path);

} // namespace agekit
