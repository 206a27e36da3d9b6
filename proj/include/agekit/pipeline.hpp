#pragma once

#include <vector>

#include "agekit/calibration.hpp"
#include "agekit/config.hpp"
#include "agekit/data.hpp"
#include "agekit/decision.hpp"
#include "agekit/metrics.hpp"
#include "agekit/model.hpp"

namespace agekit {

/// Config-driven drivers behind the CLI and the C API. Each one wires the
/// global seed and the config echo into the artifact it produces.

/// generate() with the config's gen block and global seed.
Dataset run_generate(const RunConfig& cfg);

/// Trains on ds; the model's input width comes from the dataset, not the
/// config (gen.input_dim only shapes generated data).
std::pair<Model, TrainingLog> run_training(const RunConfig& cfg,
                                           const Dataset& ds);

std::vector<Prediction> predict_dataset(const Model& model, const Dataset& ds);

/// Calibrates the confidence thresholds and the sigma-blind baseline on the
/// model's predictions over ds.
TableArtifact run_calibration(const RunConfig& cfg, const Model& model,
                              const Dataset& ds);

/// Evaluates one task over ds. verify: rates for the configured method(s),
/// plus the matched-TPR comparison when verify.method = both (the table is
/// not needed for method sr). compare: comparability stats, per-bucket
/// widths, and the fixed-width baseline when compare.baseline = fixed
/// (which requires the artifact to carry one). estimate: MAE only. The
/// table pointer may be null where unused.
EvalReport run_eval(const RunConfig& cfg, const Model& model,
                    const TableArtifact* artifact, const Dataset& ds,
                    Task task);

} // namespace agekit
