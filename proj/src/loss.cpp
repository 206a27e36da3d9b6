#include "agekit/loss.hpp"

#include <cmath>
#include <string>

#include "agekit/errors.hpp"
#include "agekit/kv.hpp"

namespace agekit {

namespace {

void check_batch(const PredictionBatch& batch, const LossConfig& cfg) {
    const std::size_t n = batch.mu.size();
    if (n == 0) {
        throw InvalidArgument("loss: empty batch");
    }
    if (batch.sigma.size() != n || batch.target.size() != n) {
        throw InvalidArgument("loss: mu/sigma/target lengths differ (" +
                              std::to_string(n) + ", " +
                              std::to_string(batch.sigma.size()) + ", " +
                              std::to_string(batch.target.size()) + ")");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(batch.mu[i]) || !std::isfinite(batch.sigma[i]) ||
            !std::isfinite(batch.target[i])) {
            throw InvalidArgument("loss: non-finite input at sample " +
                                  std::to_string(i));
        }
        if (batch.sigma[i] <= 0.0) {
            throw InvalidArgument("loss: sigma must be positive, got " +
                                  format_double(batch.sigma[i]) + " at sample " +
                                  std::to_string(i));
        }
        if (batch.target[i] < 0.0 || batch.target[i] >= cfg.max_age) {
            throw InvalidArgument("loss: target age " +
                                  format_double(batch.target[i]) + " at sample " +
                                  std::to_string(i) + " outside [0, " +
                                  format_double(cfg.max_age) + ")");
        }
    }
}

} // namespace

void LossConfig::validate() const {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(delta >= 0.0)) {
        throw InvalidArgument("loss config: alpha, beta, delta must be >= 0");
    }
    if (!(max_age > 0.0)) {
        throw InvalidArgument("loss config: max_age must be positive, got " +
                              format_double(max_age));
    }
    if (!(c > 0.0)) {
        throw InvalidArgument("loss config: c must be positive, got " +
                              format_double(c));
    }
    if (!std::isfinite(r) || !std::isfinite(s) || !std::isfinite(d)) {
        throw InvalidArgument("loss config: exponents r, s, d must be finite");
    }
}

double age_decay(double target_age, const LossConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(target_age) || target_age < 0.0 || target_age > cfg.max_age) {
        throw InvalidArgument("age_decay: target age " + format_double(target_age) +
                              " outside [0, " + format_double(cfg.max_age) + "]");
    }
    const double u = 1.0 - target_age / cfg.max_age;
    return u * u;
}

LossBreakdown loss_forward(const PredictionBatch& batch, const LossConfig& cfg) {
    cfg.validate();
    check_batch(batch, cfg);

    const std::size_t n = batch.size();
    double sum_reg = 0.0;
    double sum_std = 0.0;
    double sum_dist = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ad = age_decay(batch.target[i], cfg);
        const double err = batch.mu[i] - batch.target[i];
        const double norm_err = err / (batch.sigma[i] + cfg.c);
        sum_reg += std::abs(err) * std::pow(ad, cfg.r);
        sum_std += batch.sigma[i] * std::pow(ad, cfg.s);
        sum_dist += norm_err * norm_err * std::pow(ad, cfg.d);
    }

    LossBreakdown out;
    out.l_reg = sum_reg / static_cast<double>(n);
    out.l_std = sum_std / static_cast<double>(n);
    out.l_dist = sum_dist / static_cast<double>(n);
    out.l_total = cfg.alpha * out.l_reg + cfg.beta * out.l_std + cfg.delta * out.l_dist;
    return out;
}

LossGradients loss_backward(const PredictionBatch& batch, const LossConfig& cfg) {
    cfg.validate();
    check_batch(batch, cfg);

    const std::size_t n = batch.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    LossGradients grads;
    grads.mu.resize(n);
    grads.sigma.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ad = age_decay(batch.target[i], cfg);
        const double err = batch.mu[i] - batch.target[i];
        const double denom = batch.sigma[i] + cfg.c;
        const double sgn = err > 0.0 ? 1.0 : (err < 0.0 ? -1.0 : 0.0);
        const double ad_d = std::pow(ad, cfg.d);

        grads.mu[i] = inv_n * (cfg.alpha * sgn * std::pow(ad, cfg.r) +
                               cfg.delta * 2.0 * err / (denom * denom) * ad_d);
        grads.sigma[i] = inv_n * (cfg.beta * std::pow(ad, cfg.s) -
                                  cfg.delta * 2.0 * err * err /
                                      (denom * denom * denom) * ad_d);
    }
    return grads;
}

} // namespace agekit
