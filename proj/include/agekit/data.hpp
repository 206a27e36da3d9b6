#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace agekit {

/// Ages accepted on ingestion live in [0, kMaxIngestAge).
inline constexpr double kMaxIngestAge = 115.0;

/// Generated ages span [kGenAgeLo, kGenAgeHi].
inline constexpr double kGenAgeLo = 3.0;
inline constexpr double kGenAgeHi = 91.0;

struct Sample {
    std::string id;
    double age = 0.0;
    int group = 0;
    std::vector<double> features;
};

struct Dataset {
    std::size_t feature_dim = 0;
    std::vector<Sample> samples;

    std::size_t size() const { return samples.size(); }
};

/// Synthetic generator settings. Features are a fixed seeded nonlinear
/// embedding of age plus Gaussian noise whose scale grows with age
/// (noise_slope) and differs across group labels (group_noise_mult), so
/// per-sample uncertainty genuinely varies.
struct GenConfig {
    std::size_t n = 20000;
    std::size_t input_dim = 16;
    double noise_base = 0.2;
    double noise_slope = 1.0;
    int groups = 4;
    std::vector<double> group_noise_mult = {0.5, 1.0, 1.5, 2.5};
    std::uint64_t seed = 42;

    void validate() const;
};

/// Deterministic given the seed; ages, group labels, the embedding matrix,
/// and the noise come from independent seeded streams (see docs/FORMATS.md).
Dataset generate(const GenConfig& cfg);

/// CSV schema: header `id,age,group,f0..f{D-1}`, '.' decimal point, UTF-8,
/// LF newlines. Leading '#' lines before the header carry provenance and
/// are skipped on load. Errors cite the offending line number.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& ds, const std::string& path,
              const std::vector<std::string>& provenance_comments = {});

} // namespace agekit
