#include "agekit/pipeline.hpp"

#include <map>

#include "agekit/errors.hpp"

namespace agekit {

Dataset run_generate(const RunConfig& cfg) {
    cfg.validate();
    GenConfig gen = cfg.gen;
    gen.seed = cfg.seed;
    return generate(gen);
}

std::pair<Model, TrainingLog> run_training(const RunConfig& cfg,
                                           const Dataset& ds) {
    cfg.validate();
    ModelSpec spec = cfg.model;
    spec.input_dim = ds.feature_dim;
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    auto [model, log] = train(ds, spec, cfg.loss, tc);
    model.provenance = cfg.echo();
    return {std::move(model), std::move(log)};
}

std::vector<Prediction> predict_dataset(const Model& model, const Dataset& ds) {
    const ModelOutputs out = predict(model, ds);
    std::vector<Prediction> preds(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        preds[i] = {out.mu[i], out.sigma[i], ds.samples[i].age,
                    ds.samples[i].group};
    }
    return preds;
}

TableArtifact run_calibration(const RunConfig& cfg, const Model& model,
                              const Dataset& ds) {
    cfg.validate();
    const std::vector<Prediction> preds = predict_dataset(model, ds);
    TableArtifact artifact;
    artifact.table = calibrate(preds, cfg.calib);
    artifact.baseline = fixed_width_baseline(preds, cfg.calib);
    artifact.seed = cfg.seed;
    artifact.provenance = cfg.echo();
    return artifact;
}

EvalReport run_eval(const RunConfig& cfg, const Model& model,
                    const TableArtifact* artifact, const Dataset& ds,
                    Task task) {
    cfg.validate();
    if (ds.size() == 0) {
        throw InvalidArgument("eval: dataset is empty");
    }
    const std::vector<Prediction> preds = predict_dataset(model, ds);

    EvalReport report;
    report.task = task;
    report.n = ds.size();
    report.seed = cfg.seed;
    report.provenance = cfg.echo();

    std::vector<double> mus(preds.size()), truths(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        mus[i] = preds[i].mu;
        truths[i] = preds[i].age;
    }
    report.overall_mae = mae(mus, truths);
    std::map<int, std::pair<double, std::size_t>> group_acc;
    for (const Prediction& p : preds) {
        auto& [sum, count] = group_acc[p.group];
        sum += std::abs(p.mu - p.age);
        ++count;
    }
    for (const auto& [group, acc] : group_acc) {
        report.per_group_mae[group] = acc.first / static_cast<double>(acc.second);
    }

    if (task == Task::Verify) {
        const bool want_sr =
            cfg.verify_method == "sr" || cfg.verify_method == "both";
        const bool want_conf =
            cfg.verify_method == "confidence" || cfg.verify_method == "both";
        if (want_conf && artifact == nullptr) {
            throw InvalidArgument(
                "eval: verify with the confidence method requires a threshold table");
        }
        VerificationEval ve;
        ve.method = cfg.verify_method;
        ve.legal_age = cfg.policy.legal_age;
        ve.challenge_age = cfg.policy.challenge_age;

        auto rates_for = [&](VerifyMethod method) {
            VerificationPolicy policy = cfg.policy;
            policy.method = method;
            const ThresholdTable* table =
                method == VerifyMethod::Confidence ? &artifact->table : nullptr;
            std::vector<DecisionRecord> records;
            records.reserve(preds.size());
            for (const Prediction& p : preds) {
                records.push_back(verify(p.mu, p.sigma, policy, table));
            }
            return verification_rates(records, truths, policy.legal_age);
        };
        if (want_sr) {
            ve.sr = rates_for(VerifyMethod::SingularRegression);
        }
        if (want_conf) {
            ve.confidence = rates_for(VerifyMethod::Confidence);
        }
        if (cfg.verify_method == "both") {
            ve.matched = match_tpr(preds, artifact->table, cfg.policy, cfg.match);
        }
        report.verification = std::move(ve);
    } else if (task == Task::Compare) {
        if (artifact == nullptr) {
            throw InvalidArgument("eval: compare requires a threshold table");
        }
        ComparabilityEval ce;
        std::vector<AgeRange> ranges;
        ranges.reserve(preds.size());
        for (const Prediction& p : preds) {
            ranges.push_back(range_for(p.mu, p.sigma, artifact->table));
        }
        ce.confidence = comparability_stats(ranges, truths);
        ce.per_bucket = bucket_widths(ranges, artifact->table);
        if (cfg.compare_baseline == "fixed") {
            if (!artifact->baseline.has_value()) {
                throw InvalidArgument(
                    "eval: compare.baseline = fixed, but the table file carries no baseline");
            }
            std::vector<AgeRange> fixed;
            fixed.reserve(preds.size());
            for (const Prediction& p : preds) {
                fixed.push_back(fixed_range_for(p.mu, *artifact->baseline));
            }
            ce.baseline = comparability_stats(fixed, truths);
        }
        report.comparability = std::move(ce);
    }
    return report;
}

} // namespace agekit
