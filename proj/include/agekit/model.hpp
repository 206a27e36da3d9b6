#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agekit/data.hpp"
#include "agekit/loss.hpp"

namespace agekit {

enum class Activation { Relu, Tanh };
enum class SigmaMap { Softplus, Exp };

Activation activation_from_token(const std::string& token);
SigmaMap sigma_map_from_token(const std::string& token);
std::string to_token(Activation a);
std::string to_token(SigmaMap m);

/// Architecture of the regression head. The output layer always has two
/// units: a raw mean and a raw sigma, the latter pushed through sigma_map
/// and floored to keep it positive.
struct ModelSpec {
    std::size_t input_dim = 16;
    std::vector<std::size_t> hidden_dims = {64, 32};
    Activation activation = Activation::Relu;
    SigmaMap sigma_map = SigmaMap::Softplus;

    void validate() const;
};

struct Layer {
    std::size_t rows = 0; ///< outputs
    std::size_t cols = 0; ///< inputs
    std::vector<double> w; ///< row-major rows x cols
    std::vector<double> b; ///< rows
};

struct ModelParams {
    std::vector<Layer> layers;
};

struct TrainConfig {
    enum class Optimizer { Sgd, Adam };

    std::size_t epochs = 40;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    std::uint64_t seed = 42;
    Optimizer optimizer = Optimizer::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double sigma_floor = 0.05;

    void validate() const;
};

/// Trained model artifact: everything inference and provenance need.
struct Model {
    ModelSpec spec;
    ModelParams params;
    double sigma_floor = 0.05;
    LossConfig loss;
    std::uint64_t seed = 0;
    /// Flattened run-config echo written into the checkpoint.
    std::vector<std::pair<std::string, std::string>> provenance;
};

struct ModelOutputs {
    std::vector<double> mu;
    std::vector<double> sigma;
};

struct EpochStats {
    double l_total = 0.0;
    double l_reg = 0.0;
    double l_std = 0.0;
    double l_dist = 0.0;
    double mae = 0.0;
};

struct TrainingLog {
    std::vector<EpochStats> train; ///< running means over the epoch's batches
    std::vector<EpochStats> val;   ///< full pass at each epoch's end

    std::string to_tsv() const;
};

/// Glorot-uniform weights, zero biases, raw-sigma output bias at +1 so the
/// initial sigma sits near 1.3 years.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

/// Pure forward pass on a row-major feature block of n rows.
ModelOutputs forward(const ModelParams& params, const ModelSpec& spec,
                     double sigma_floor, std::span<const double> features,
                     std::size_t n);
ModelOutputs forward(const Model& model, std::span<const double> features,
                     std::size_t n);
ModelOutputs predict(const Model& model, const Dataset& ds);

/// Mini-batch training against the composite loss. Deterministic: the
/// 80/20 train/validation split, weight init, and per-epoch shuffles all
/// derive from cfg.seed. Throws NumericError naming the epoch and batch
/// if the loss goes non-finite.
std::pair<Model, TrainingLog> train(const Dataset& data, const ModelSpec& spec,
                                    const LossConfig& loss_cfg,
                                    const TrainConfig& cfg);

/// Checkpoint I/O. Text format (docs/FORMATS.md); parameters round-trip
/// bit-exactly. Readers reject unknown format versions and name the first
/// offending field of a malformed file.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

} // namespace agekit
