#include "agekit/decision.hpp"

#include <cmath>
#include <vector>

#include "agekit/data.hpp"
#include "agekit/errors.hpp"
#include "agekit/kv.hpp"

namespace agekit {

namespace {

void check_mu_sigma(const char* what, double mu, double sigma) {
    if (!std::isfinite(mu)) {
        throw InvalidArgument(std::string(what) + ": non-finite mu");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument(std::string(what) + ": sigma must be positive, got " +
                              format_double(sigma));
    }
}

void append_kv(std::string& line, const char* key, const std::string& value) {
    if (!line.empty()) {
        line += ' ';
    }
    line += key;
    line += '=';
    line += value;
}

void append_kv(std::string& line, const char* key, double value) {
    append_kv(line, key, format_double(value));
}

void append_kv(std::string& line, const char* key, bool value) {
    append_kv(line, key, std::string(value ? "true" : "false"));
}

} // namespace

Task task_from_token(const std::string& token) {
    if (token == "estimate") {
        return Task::Estimate;
    }
    if (token == "verify") {
        return Task::Verify;
    }
    if (token == "compare") {
        return Task::Compare;
    }
    throw InvalidArgument("unknown task '" + token +
                          "' (expected estimate, verify, or compare)");
}

VerifyMethod verify_method_from_token(const std::string& token) {
    if (token == "confidence") {
        return VerifyMethod::Confidence;
    }
    if (token == "sr" || token == "singular_regression") {
        return VerifyMethod::SingularRegression;
    }
    throw InvalidArgument("unknown verification method '" + token +
                          "' (expected confidence or sr)");
}

std::string to_token(Task t) {
    switch (t) {
    case Task::Estimate:
        return "estimate";
    case Task::Verify:
        return "verify";
    case Task::Compare:
        return "compare";
    }
    return "estimate";
}

std::string to_token(VerifyMethod m) {
    return m == VerifyMethod::Confidence ? "confidence" : "sr";
}

void VerificationPolicy::validate() const {
    if (!std::isfinite(legal_age) || !std::isfinite(challenge_age) ||
        legal_age < 0.0) {
        throw InvalidArgument("verification policy: ages must be finite and >= 0");
    }
    if (challenge_age < legal_age) {
        throw InvalidArgument("verification policy: challenge_age " +
                              format_double(challenge_age) +
                              " is below legal_age " + format_double(legal_age));
    }
}

std::string DecisionRecord::to_line() const {
    std::string line;
    append_kv(line, "task", to_token(task));
    append_kv(line, "mu", mu);
    append_kv(line, "sigma", sigma);
    if (policy.has_value()) {
        append_kv(line, "method", to_token(policy->method));
        append_kv(line, "legal_age", policy->legal_age);
        append_kv(line, "challenge_age", policy->challenge_age);
    }
    if (claimed_age.has_value()) {
        append_kv(line, "claimed_age", *claimed_age);
    }
    if (range.has_value()) {
        append_kv(line, "range_lo", range->lo);
        append_kv(line, "range_hi", range->hi);
        append_kv(line, "bucket_index", std::to_string(range->bucket_index));
    }
    if (flagged.has_value()) {
        append_kv(line, "flagged", *flagged);
    }
    if (accepted.has_value()) {
        append_kv(line, "accepted", *accepted);
    }
    return line;
}

double estimate_age(double mu, double sigma) {
    check_mu_sigma("estimate_age", mu, sigma);
    return mu;
}

DecisionRecord estimate(double mu, double sigma) {
    check_mu_sigma("estimate", mu, sigma);
    DecisionRecord rec;
    rec.task = Task::Estimate;
    rec.mu = mu;
    rec.sigma = sigma;
    return rec;
}

DecisionRecord verify(double mu, double sigma, const VerificationPolicy& policy,
                      const ThresholdTable* table) {
    check_mu_sigma("verify", mu, sigma);
    policy.validate();

    DecisionRecord rec;
    rec.task = Task::Verify;
    rec.mu = mu;
    rec.sigma = sigma;
    rec.policy = policy;
    if (policy.method == VerifyMethod::SingularRegression) {
        rec.flagged = mu < policy.challenge_age;
        return rec;
    }
    if (table == nullptr) {
        throw InvalidArgument("verify: the confidence method requires a threshold table");
    }
    rec.range = range_for(mu, sigma, *table);
    rec.flagged = rec.range->lo < policy.legal_age;
    return rec;
}

DecisionRecord compare(double mu, double sigma, double claimed_age,
                       const ThresholdTable& table) {
    check_mu_sigma("compare", mu, sigma);
    if (!std::isfinite(claimed_age) || claimed_age < 0.0 ||
        claimed_age >= kMaxIngestAge) {
        throw InvalidArgument("compare: claimed_age " + format_double(claimed_age) +
                              " outside [0, " + format_double(kMaxIngestAge) + ")");
    }
    DecisionRecord rec;
    rec.task = Task::Compare;
    rec.mu = mu;
    rec.sigma = sigma;
    rec.claimed_age = claimed_age;
    rec.range = range_for(mu, sigma, table);
    rec.accepted = claimed_age >= rec.range->lo && claimed_age <= rec.range->hi;
    return rec;
}

ThresholdTable fixed_width_baseline(std::span<const Prediction> preds,
                                    const CalibOptions& opt) {
    std::vector<Prediction> blind(preds.begin(), preds.end());
    for (Prediction& p : blind) {
        p.sigma = 1.0;
    }
    return calibrate(blind, opt);
}

AgeRange fixed_range_for(double mu, const ThresholdTable& baseline) {
    return range_for(mu, 1.0, baseline);
}

} // namespace agekit
