#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "agekit/calibration.hpp"
#include "agekit/data.hpp"
#include "agekit/decision.hpp"
#include "agekit/loss.hpp"
#include "agekit/metrics.hpp"
#include "agekit/model.hpp"

namespace agekit {

/// Full run configuration behind the CLI: flat dotted keys over the module
/// configs, every key defaulting to its module default. Unknown keys are
/// rejected — both in files and in set(). docs/FORMATS.md lists the schema.
struct RunConfig {
    std::uint64_t seed = 42;
    GenConfig gen;
    ModelSpec model;
    TrainConfig train;
    LossConfig loss;
    CalibOptions calib;
    VerificationPolicy policy;
    /// verify.method may also be "both" (eval runs SR and confidence and
    /// matches TPR); policy.method holds the parsed value otherwise.
    std::string verify_method = "confidence";
    std::string compare_baseline = "fixed"; ///< fixed or none
    MatchOptions match;

    /// Sets one dotted key from its text form (numbers, tokens, or comma /
    /// bracket lists). Throws InvalidArgument on unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    /// Canonical text for one key; throws on unknown keys.
    std::string get(const std::string& key) const;

    /// Cross-field validation of everything at once.
    void validate() const;

    /// Canonical serialization: every key, documented order.
    KvDoc to_doc() const;
    /// The to_doc() entries as key/value pairs, for embedding into
    /// artifacts as their config echo.
    std::vector<std::pair<std::string, std::string>> echo() const;

    static RunConfig from_doc(const KvDoc& doc);
    static RunConfig load(const std::string& path);
};

} // namespace agekit
