#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace agekit {

/// Hyperparameters of the composite age-weighted loss
///
///   total = alpha * reg + beta * std + delta * dist
///
/// where each per-sample term is weighted by a power of the age-decay
/// factor (1 - target/max_age)^2, so younger targets carry more weight.
struct LossConfig {
    double alpha = 1.0;    ///< weight of the absolute-error term
    double beta = 1.0;     ///< weight of the sigma penalty term
    double delta = 1.5;    ///< weight of the normalized-error term
    double r = 1.0;        ///< age-decay exponent on the absolute-error term
    double s = 1.5;        ///< age-decay exponent on the sigma penalty term
    double d = 2.0;        ///< age-decay exponent on the normalized-error term
    double max_age = 115.0; ///< maximum-age normalization factor, years
    double c = 1e-3;       ///< denominator stabilizer added to sigma, years

    void validate() const; // throws InvalidArgument
};

/// Non-owning view over one batch of (mean, sigma) outputs and targets.
/// All three spans must have the same non-zero length; sigma entries must
/// be positive and targets must lie in [0, max_age).
struct PredictionBatch {
    std::span<const double> mu;
    std::span<const double> sigma;
    std::span<const double> target;

    std::size_t size() const { return mu.size(); }
};

struct LossBreakdown {
    double l_reg = 0.0;
    double l_std = 0.0;
    double l_dist = 0.0;
    double l_total = 0.0;
};

struct LossGradients {
    std::vector<double> mu;
    std::vector<double> sigma;
};

/// Age-decay weight (1 - target_age/max_age)^2. Strictly decreasing on
/// [0, max_age], equal to 1 at age 0 and 0 at max_age.
double age_decay(double target_age, const LossConfig& cfg);

/// Batch loss. Reduction is a fixed left-to-right mean, so results are
/// bit-reproducible for a given input order.
LossBreakdown loss_forward(const PredictionBatch& batch, const LossConfig& cfg);

/// Analytic d(total)/d(mu) and d(total)/d(sigma) per sample, including the
/// 1/N batch averaging. The absolute-error term uses the subgradient
/// convention sign(0) = 0. No gradient flows through the age decay, which
/// depends only on the target.
LossGradients loss_backward(const PredictionBatch& batch, const LossConfig& cfg);

} // namespace agekit
