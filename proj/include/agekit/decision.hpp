#pragma once

#include <optional>
#include <span>
#include <string>

#include "agekit/calibration.hpp"

namespace agekit {

enum class Task { Estimate, Verify, Compare };
enum class VerifyMethod { Confidence, SingularRegression };

Task task_from_token(const std::string& token);
VerifyMethod verify_method_from_token(const std::string& token);
std::string to_token(Task t);
std::string to_token(VerifyMethod m);

/// Challenge-style verification policy: anyone judged to look younger than
/// challenge_age is flagged to prove they are at least legal_age.
struct VerificationPolicy {
    double legal_age = 18.0;
    double challenge_age = 25.0;
    VerifyMethod method = VerifyMethod::Confidence;

    void validate() const;
};

/// Outcome of one decision query. Which optionals are set depends on the
/// task; see to_line() / docs/FORMATS.md for the serialized schema.
struct DecisionRecord {
    Task task = Task::Estimate;
    double mu = 0.0;
    double sigma = 0.0;
    std::optional<AgeRange> range;
    std::optional<bool> flagged;  ///< verification: treat as potentially underage
    std::optional<bool> accepted; ///< comparability: claimed age inside range
    std::optional<double> claimed_age;
    std::optional<VerificationPolicy> policy;

    /// One line of `key=value` pairs in fixed order, no trailing newline.
    std::string to_line() const;
};

/// The point estimate is mu; sigma rides along for reporting only.
double estimate_age(double mu, double sigma);
DecisionRecord estimate(double mu, double sigma);

/// Singular regression flags iff mu < challenge_age (a tie passes).
/// The confidence method flags iff the calibrated range reaches below
/// legal_age, i.e. range.lo < legal_age; it requires a table.
DecisionRecord verify(double mu, double sigma, const VerificationPolicy& policy,
                      const ThresholdTable* table);

/// Age comparability: accepted iff claimed_age lies in the closed range
/// [lo, hi]. claimed_age must sit in [0, 115).
DecisionRecord compare(double mu, double sigma, double claimed_age,
                       const ThresholdTable& table);

/// Sigma-blind comparability baseline: the calibrate() procedure run on raw
/// residuals (every sigma treated as 1), so lt/ut become additive offsets
/// in years. Pairs with fixed_range_for.
ThresholdTable fixed_width_baseline(std::span<const Prediction> preds,
                                    const CalibOptions& opt);
AgeRange fixed_range_for(double mu, const ThresholdTable& baseline);

} // namespace agekit
