#include "agekit/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "agekit/errors.hpp"
#include "agekit/kv.hpp"
#include "agekit/rng.hpp"

namespace agekit {

namespace {

constexpr std::uint64_t kStreamInit = 11;
constexpr std::uint64_t kStreamSplit = 12;
constexpr std::uint64_t kStreamShuffle = 13;

constexpr int kModelFormatVersion = 1;

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double apply_sigma_map(SigmaMap map, double raw, double floor) {
    return (map == SigmaMap::Softplus ? softplus(raw) : std::exp(raw)) + floor;
}

double sigma_map_deriv(SigmaMap map, double raw) {
    return map == SigmaMap::Softplus ? sigmoid(raw) : std::exp(raw);
}

double activate(Activation act, double z) {
    return act == Activation::Relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

double activate_deriv(Activation act, double z) {
    if (act == Activation::Relu) {
        return z > 0.0 ? 1.0 : 0.0;
    }
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

std::vector<std::size_t> layer_sizes(const ModelSpec& spec) {
    std::vector<std::size_t> sizes;
    sizes.push_back(spec.input_dim);
    for (std::size_t h : spec.hidden_dims) {
        sizes.push_back(h);
    }
    sizes.push_back(2);
    return sizes;
}

// Dense forward for a block of m rows; writes pre-activations per layer.
// zs[l] has shape m x layers[l].rows.
void forward_block(const ModelParams& params, const ModelSpec& spec,
                   std::span<const double> features, std::size_t m,
                   std::vector<std::vector<double>>& zs,
                   std::vector<std::vector<double>>& hs) {
    const std::size_t n_layers = params.layers.size();
    zs.assign(n_layers, {});
    hs.assign(n_layers, {});
    const double* prev = features.data();
    std::size_t prev_dim = spec.input_dim;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Layer& ly = params.layers[l];
        zs[l].resize(m * ly.rows);
        for (std::size_t i = 0; i < m; ++i) {
            const double* x = prev + i * prev_dim;
            double* z = zs[l].data() + i * ly.rows;
            for (std::size_t r = 0; r < ly.rows; ++r) {
                double acc = ly.b[r];
                const double* wrow = ly.w.data() + r * ly.cols;
                for (std::size_t c = 0; c < ly.cols; ++c) {
                    acc += wrow[c] * x[c];
                }
                z[r] = acc;
            }
        }
        if (l + 1 < n_layers) {
            hs[l].resize(m * ly.rows);
            for (std::size_t k = 0; k < zs[l].size(); ++k) {
                hs[l][k] = activate(spec.activation, zs[l][k]);
            }
            prev = hs[l].data();
            prev_dim = ly.rows;
        }
    }
}

struct GradBuffers {
    std::vector<Layer> g; // same shapes as params, gradient accumulators

    explicit GradBuffers(const ModelParams& params) {
        g.resize(params.layers.size());
        for (std::size_t l = 0; l < g.size(); ++l) {
            g[l].rows = params.layers[l].rows;
            g[l].cols = params.layers[l].cols;
            g[l].w.assign(params.layers[l].w.size(), 0.0);
            g[l].b.assign(params.layers[l].b.size(), 0.0);
        }
    }

    void zero() {
        for (auto& ly : g) {
            std::fill(ly.w.begin(), ly.w.end(), 0.0);
            std::fill(ly.b.begin(), ly.b.end(), 0.0);
        }
    }
};

// Backpropagates the loss gradients (d/dmu, d/d raw_sigma) through the
// network, accumulating into grads.
void backward_block(const ModelParams& params, const ModelSpec& spec,
                    std::span<const double> features, std::size_t m,
                    const std::vector<std::vector<double>>& zs,
                    const std::vector<std::vector<double>>& hs,
                    const std::vector<double>& d_mu,
                    const std::vector<double>& d_raw_sigma, GradBuffers& grads) {
    const std::size_t n_layers = params.layers.size();
    std::vector<double> delta(m * 2);
    for (std::size_t i = 0; i < m; ++i) {
        delta[i * 2 + 0] = d_mu[i];
        delta[i * 2 + 1] = d_raw_sigma[i];
    }

    for (std::size_t l = n_layers; l-- > 0;) {
        const Layer& ly = params.layers[l];
        Layer& gl = grads.g[l];
        const double* below = l == 0 ? features.data() : hs[l - 1].data();
        const std::size_t below_dim = ly.cols;

        for (std::size_t i = 0; i < m; ++i) {
            const double* x = below + i * below_dim;
            const double* dz = delta.data() + i * ly.rows;
            for (std::size_t r = 0; r < ly.rows; ++r) {
                gl.b[r] += dz[r];
                double* grow = gl.w.data() + r * ly.cols;
                for (std::size_t c = 0; c < ly.cols; ++c) {
                    grow[c] += dz[r] * x[c];
                }
            }
        }

        if (l == 0) {
            break;
        }
        std::vector<double> next_delta(m * below_dim, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double* dz = delta.data() + i * ly.rows;
            double* nd = next_delta.data() + i * below_dim;
            for (std::size_t r = 0; r < ly.rows; ++r) {
                const double* wrow = ly.w.data() + r * ly.cols;
                for (std::size_t c = 0; c < ly.cols; ++c) {
                    nd[c] += wrow[c] * dz[r];
                }
            }
            const double* z_below = zs[l - 1].data() + i * below_dim;
            for (std::size_t c = 0; c < below_dim; ++c) {
                nd[c] *= activate_deriv(spec.activation, z_below[c]);
            }
        }
        delta = std::move(next_delta);
    }
}

struct AdamState {
    std::vector<Layer> m, v;
    long long t = 0;

    explicit AdamState(const ModelParams& params) {
        auto zeros_like = [&params]() {
            std::vector<Layer> out(params.layers.size());
            for (std::size_t l = 0; l < out.size(); ++l) {
                out[l].rows = params.layers[l].rows;
                out[l].cols = params.layers[l].cols;
                out[l].w.assign(params.layers[l].w.size(), 0.0);
                out[l].b.assign(params.layers[l].b.size(), 0.0);
            }
            return out;
        };
        m = zeros_like();
        v = zeros_like();
    }
};

void apply_update(ModelParams& params, const GradBuffers& grads,
                  const TrainConfig& cfg, AdamState& adam) {
    if (cfg.optimizer == TrainConfig::Optimizer::Sgd) {
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            Layer& ly = params.layers[l];
            const Layer& gl = grads.g[l];
            for (std::size_t k = 0; k < ly.w.size(); ++k) {
                ly.w[k] -= cfg.learning_rate * gl.w[k];
            }
            for (std::size_t k = 0; k < ly.b.size(); ++k) {
                ly.b[k] -= cfg.learning_rate * gl.b[k];
            }
        }
        return;
    }

    ++adam.t;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.t));
    auto step = [&](std::vector<double>& w, std::vector<double>& mw,
                    std::vector<double>& vw, const std::vector<double>& gw) {
        for (std::size_t k = 0; k < w.size(); ++k) {
            mw[k] = cfg.adam_beta1 * mw[k] + (1.0 - cfg.adam_beta1) * gw[k];
            vw[k] = cfg.adam_beta2 * vw[k] + (1.0 - cfg.adam_beta2) * gw[k] * gw[k];
            const double mhat = mw[k] / bc1;
            const double vhat = vw[k] / bc2;
            w[k] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        step(params.layers[l].w, adam.m[l].w, adam.v[l].w, grads.g[l].w);
        step(params.layers[l].b, adam.m[l].b, adam.v[l].b, grads.g[l].b);
    }
}

EpochStats eval_split(const Model& model, const Dataset& data,
                      const std::vector<std::size_t>& idx,
                      std::vector<double>& scratch) {
    EpochStats st;
    if (idx.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        st = {nan, nan, nan, nan, nan};
        return st;
    }
    const std::size_t dim = model.spec.input_dim;
    scratch.resize(idx.size() * dim);
    std::vector<double> targets(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const Sample& smp = data.samples[idx[i]];
        std::copy(smp.features.begin(), smp.features.end(),
                  scratch.begin() + i * dim);
        targets[i] = smp.age;
    }
    ModelOutputs out = forward(model, scratch, idx.size());
    LossBreakdown lb = loss_forward({out.mu, out.sigma, targets}, model.loss);
    double abs_err = 0.0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        abs_err += std::abs(out.mu[i] - targets[i]);
    }
    st.l_total = lb.l_total;
    st.l_reg = lb.l_reg;
    st.l_std = lb.l_std;
    st.l_dist = lb.l_dist;
    st.mae = abs_err / static_cast<double>(idx.size());
    return st;
}

} // namespace

Activation activation_from_token(const std::string& token) {
    if (token == "relu") {
        return Activation::Relu;
    }
    if (token == "tanh") {
        return Activation::Tanh;
    }
    throw InvalidArgument("unknown activation '" + token + "' (expected relu or tanh)");
}

SigmaMap sigma_map_from_token(const std::string& token) {
    if (token == "softplus") {
        return SigmaMap::Softplus;
    }
    if (token == "exp") {
        return SigmaMap::Exp;
    }
    throw InvalidArgument("unknown sigma_map '" + token + "' (expected softplus or exp)");
}

std::string to_token(Activation a) {
    return a == Activation::Relu ? "relu" : "tanh";
}

std::string to_token(SigmaMap m) {
    return m == SigmaMap::Softplus ? "softplus" : "exp";
}

void ModelSpec::validate() const {
    if (input_dim == 0) {
        throw InvalidArgument("model spec: input_dim must be positive");
    }
    for (std::size_t h : hidden_dims) {
        if (h == 0) {
            throw InvalidArgument("model spec: hidden layer widths must be positive");
        }
    }
}

void TrainConfig::validate() const {
    if (epochs == 0) {
        throw InvalidArgument("train config: epochs must be positive");
    }
    if (batch_size == 0) {
        throw InvalidArgument("train config: batch_size must be positive");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw InvalidArgument("train config: learning_rate must be positive");
    }
    if (!(sigma_floor > 0.0) || !std::isfinite(sigma_floor)) {
        throw InvalidArgument("train config: sigma_floor must be positive");
    }
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    Rng rng(seed, kStreamInit);
    const auto sizes = layer_sizes(spec);
    ModelParams params;
    params.layers.resize(sizes.size() - 1);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        Layer& ly = params.layers[l];
        ly.cols = sizes[l];
        ly.rows = sizes[l + 1];
        ly.w.resize(ly.rows * ly.cols);
        ly.b.assign(ly.rows, 0.0);
        const double limit =
            std::sqrt(6.0 / static_cast<double>(ly.cols + ly.rows));
        for (auto& w : ly.w) {
            w = rng.uniform(-limit, limit);
        }
    }
    // Start the raw sigma output near softplus(1)+floor ~ 1.3 years.
    params.layers.back().b[1] = 1.0;
    return params;
}

ModelOutputs forward(const ModelParams& params, const ModelSpec& spec,
                     double sigma_floor, std::span<const double> features,
                     std::size_t n) {
    spec.validate();
    if (params.layers.empty()) {
        throw InvalidArgument("forward: model has no layers");
    }
    if (features.size() != n * spec.input_dim) {
        throw InvalidArgument("forward: feature block has " +
                              std::to_string(features.size()) +
                              " values, expected " +
                              std::to_string(n * spec.input_dim));
    }
    for (double f : features) {
        if (!std::isfinite(f)) {
            throw InvalidArgument("forward: non-finite feature value");
        }
    }

    std::vector<std::vector<double>> zs, hs;
    forward_block(params, spec, features, n, zs, hs);
    const std::vector<double>& out = zs.back();

    ModelOutputs res;
    res.mu.resize(n);
    res.sigma.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        res.mu[i] = out[i * 2 + 0];
        res.sigma[i] = apply_sigma_map(spec.sigma_map, out[i * 2 + 1], sigma_floor);
    }
    return res;
}

ModelOutputs forward(const Model& model, std::span<const double> features,
                     std::size_t n) {
    return forward(model.params, model.spec, model.sigma_floor, features, n);
}

ModelOutputs predict(const Model& model, const Dataset& ds) {
    if (ds.feature_dim != model.spec.input_dim) {
        throw InvalidArgument("predict: dataset has " +
                              std::to_string(ds.feature_dim) +
                              " features, model expects " +
                              std::to_string(model.spec.input_dim));
    }
    std::vector<double> block(ds.size() * ds.feature_dim);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::copy(ds.samples[i].features.begin(), ds.samples[i].features.end(),
                  block.begin() + i * ds.feature_dim);
    }
    return forward(model, block, ds.size());
}

std::string TrainingLog::to_tsv() const {
    std::string out =
        "epoch\ttrain_l_total\ttrain_l_reg\ttrain_l_std\ttrain_l_dist"
        "\tval_l_total\tval_l_reg\tval_l_std\tval_l_dist\tval_mae\n";
    for (std::size_t e = 0; e < train.size(); ++e) {
        out += std::to_string(e + 1);
        const EpochStats& tr = train[e];
        const EpochStats& va = val[e];
        for (double v : {tr.l_total, tr.l_reg, tr.l_std, tr.l_dist, va.l_total,
                         va.l_reg, va.l_std, va.l_dist, va.mae}) {
            out += '\t';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

std::pair<Model, TrainingLog> train(const Dataset& data, const ModelSpec& spec,
                                    const LossConfig& loss_cfg,
                                    const TrainConfig& cfg) {
    spec.validate();
    loss_cfg.validate();
    cfg.validate();
    if (data.size() == 0) {
        throw InvalidArgument("train: dataset is empty");
    }
    if (data.feature_dim != spec.input_dim) {
        throw InvalidArgument("train: dataset has " +
                              std::to_string(data.feature_dim) +
                              " features, spec expects " +
                              std::to_string(spec.input_dim));
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double age = data.samples[i].age;
        if (!(age >= 0.0) || !(age < loss_cfg.max_age)) {
            throw InvalidArgument("train: sample " + std::to_string(i) + " age " +
                                  format_double(age) + " outside [0, " +
                                  format_double(loss_cfg.max_age) + ")");
        }
    }

    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(cfg.seed, kStreamSplit);
    split_rng.shuffle(order);
    std::size_t n_val = n / 5;
    if (n_val == 0 && n >= 2) {
        n_val = 1;
    }
    std::vector<std::size_t> train_idx(order.begin(), order.end() - n_val);
    std::vector<std::size_t> val_idx(order.end() - n_val, order.end());

    Model model;
    model.spec = spec;
    model.params = init_params(spec, cfg.seed);
    model.sigma_floor = cfg.sigma_floor;
    model.loss = loss_cfg;
    model.seed = cfg.seed;

    GradBuffers grads(model.params);
    AdamState adam(model.params);
    Rng shuffle_rng(cfg.seed, kStreamShuffle);

    TrainingLog log;
    const std::size_t dim = spec.input_dim;
    std::vector<double> batch_x;
    std::vector<double> batch_y;
    std::vector<double> scratch;
    std::vector<std::vector<double>> zs, hs;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(train_idx);

        double ep_reg = 0.0, ep_std = 0.0, ep_dist = 0.0, ep_total = 0.0;
        double ep_abs_err = 0.0;
        std::size_t seen = 0;

        for (std::size_t start = 0, batch_no = 0; start < train_idx.size();
             start += cfg.batch_size, ++batch_no) {
            const std::size_t m =
                std::min(cfg.batch_size, train_idx.size() - start);
            batch_x.resize(m * dim);
            batch_y.resize(m);
            for (std::size_t i = 0; i < m; ++i) {
                const Sample& smp = data.samples[train_idx[start + i]];
                std::copy(smp.features.begin(), smp.features.end(),
                          batch_x.begin() + i * dim);
                batch_y[i] = smp.age;
            }

            forward_block(model.params, spec, batch_x, m, zs, hs);
            const std::vector<double>& raw_out = zs.back();
            std::vector<double> mu(m), sigma(m), raw_sigma(m);
            for (std::size_t i = 0; i < m; ++i) {
                mu[i] = raw_out[i * 2 + 0];
                raw_sigma[i] = raw_out[i * 2 + 1];
                sigma[i] =
                    apply_sigma_map(spec.sigma_map, raw_sigma[i], cfg.sigma_floor);
            }
            if (!std::all_of(sigma.begin(), sigma.end(),
                             [](double v) { return std::isfinite(v); }) ||
                !std::all_of(mu.begin(), mu.end(),
                             [](double v) { return std::isfinite(v); })) {
                throw NumericError("training diverged (non-finite output) at epoch " +
                                   std::to_string(epoch + 1) + ", batch " +
                                   std::to_string(batch_no + 1));
            }

            LossBreakdown lb = loss_forward({mu, sigma, batch_y}, loss_cfg);
            if (!std::isfinite(lb.l_total)) {
                throw NumericError("training diverged (non-finite loss) at epoch " +
                                   std::to_string(epoch + 1) + ", batch " +
                                   std::to_string(batch_no + 1));
            }
            LossGradients lg = loss_backward({mu, sigma, batch_y}, loss_cfg);
            std::vector<double> d_raw(m);
            for (std::size_t i = 0; i < m; ++i) {
                d_raw[i] =
                    lg.sigma[i] * sigma_map_deriv(spec.sigma_map, raw_sigma[i]);
            }

            grads.zero();
            backward_block(model.params, spec, batch_x, m, zs, hs, lg.mu, d_raw,
                           grads);
            apply_update(model.params, grads, cfg, adam);

            const double w = static_cast<double>(m);
            ep_reg += lb.l_reg * w;
            ep_std += lb.l_std * w;
            ep_dist += lb.l_dist * w;
            ep_total += lb.l_total * w;
            for (std::size_t i = 0; i < m; ++i) {
                ep_abs_err += std::abs(mu[i] - batch_y[i]);
            }
            seen += m;
        }

        EpochStats tr;
        tr.l_total = ep_total / static_cast<double>(seen);
        tr.l_reg = ep_reg / static_cast<double>(seen);
        tr.l_std = ep_std / static_cast<double>(seen);
        tr.l_dist = ep_dist / static_cast<double>(seen);
        tr.mae = ep_abs_err / static_cast<double>(seen);
        log.train.push_back(tr);
        log.val.push_back(eval_split(model, data, val_idx, scratch));
    }

    return {std::move(model), std::move(log)};
}

void save_model(const Model& model, const std::string& path) {
    KvDoc doc;
    doc.add_i64("format_version", kModelFormatVersion);
    doc.add_token("kind", "model");
    doc.add_u64("seed", model.seed);
    doc.add_i64("spec.input_dim", static_cast<long long>(model.spec.input_dim));
    std::vector<long long> hidden(model.spec.hidden_dims.begin(),
                                  model.spec.hidden_dims.end());
    doc.add_int_array("spec.hidden_dims", hidden);
    doc.add_token("spec.activation", to_token(model.spec.activation));
    doc.add_token("spec.sigma_map", to_token(model.spec.sigma_map));
    doc.add_double("sigma_floor", model.sigma_floor);
    doc.add_double("loss.alpha", model.loss.alpha);
    doc.add_double("loss.beta", model.loss.beta);
    doc.add_double("loss.delta", model.loss.delta);
    doc.add_double("loss.r", model.loss.r);
    doc.add_double("loss.s", model.loss.s);
    doc.add_double("loss.d", model.loss.d);
    doc.add_double("loss.max_age", model.loss.max_age);
    doc.add_double("loss.c", model.loss.c);
    doc.add_i64("layer_count", static_cast<long long>(model.params.layers.size()));
    for (std::size_t l = 0; l < model.params.layers.size(); ++l) {
        const Layer& ly = model.params.layers[l];
        const std::string p = "layer." + std::to_string(l) + ".";
        doc.add_i64(p + "rows", static_cast<long long>(ly.rows));
        doc.add_i64(p + "cols", static_cast<long long>(ly.cols));
        doc.add_double_array(p + "weight", ly.w);
        doc.add_double_array(p + "bias", ly.b);
    }
    for (const auto& [key, value] : model.provenance) {
        doc.add_raw("config." + key, value);
    }
    doc.save(path);
}

Model load_model(const std::string& path) {
    KvDoc doc = KvDoc::load(path);
    std::set<std::string> known;
    auto mark = [&known](const std::string& key) {
        known.insert(key);
        return key;
    };

    const long long version = doc.get_i64(mark("format_version"));
    if (version != kModelFormatVersion) {
        throw ParseError(path + ": unsupported format_version " +
                         std::to_string(version) + " (expected " +
                         std::to_string(kModelFormatVersion) + ")");
    }
    if (doc.get_token(mark("kind")) != "model") {
        throw ParseError(path + ": field 'kind' is not 'model'");
    }

    Model model;
    model.seed = doc.get_u64(mark("seed"));
    const long long input_dim = doc.get_i64(mark("spec.input_dim"));
    if (input_dim < 1) {
        throw ParseError(path + ": field 'spec.input_dim' must be >= 1");
    }
    model.spec.input_dim = static_cast<std::size_t>(input_dim);
    model.spec.hidden_dims.clear();
    for (long long h : doc.get_int_array(mark("spec.hidden_dims"))) {
        if (h < 1) {
            throw ParseError(path + ": field 'spec.hidden_dims' entries must be >= 1");
        }
        model.spec.hidden_dims.push_back(static_cast<std::size_t>(h));
    }
    try {
        model.spec.activation = activation_from_token(doc.get_token(mark("spec.activation")));
        model.spec.sigma_map = sigma_map_from_token(doc.get_token(mark("spec.sigma_map")));
    } catch (const InvalidArgument& e) {
        throw ParseError(path + ": " + e.what());
    }
    model.sigma_floor = doc.get_double(mark("sigma_floor"));
    if (!(model.sigma_floor > 0.0) || !std::isfinite(model.sigma_floor)) {
        throw ParseError(path + ": field 'sigma_floor' must be positive");
    }
    model.loss.alpha = doc.get_double(mark("loss.alpha"));
    model.loss.beta = doc.get_double(mark("loss.beta"));
    model.loss.delta = doc.get_double(mark("loss.delta"));
    model.loss.r = doc.get_double(mark("loss.r"));
    model.loss.s = doc.get_double(mark("loss.s"));
    model.loss.d = doc.get_double(mark("loss.d"));
    model.loss.max_age = doc.get_double(mark("loss.max_age"));
    model.loss.c = doc.get_double(mark("loss.c"));
    try {
        model.loss.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(path + ": " + e.what());
    }

    const long long layer_count = doc.get_i64(mark("layer_count"));
    const std::size_t expected_layers = model.spec.hidden_dims.size() + 1;
    if (layer_count !=
        static_cast<long long>(expected_layers)) {
        throw ParseError(path + ": field 'layer_count' is " +
                         std::to_string(layer_count) + ", spec implies " +
                         std::to_string(expected_layers));
    }

    std::vector<std::size_t> sizes;
    sizes.push_back(model.spec.input_dim);
    for (std::size_t h : model.spec.hidden_dims) {
        sizes.push_back(h);
    }
    sizes.push_back(2);

    model.params.layers.resize(static_cast<std::size_t>(layer_count));
    for (std::size_t l = 0; l < model.params.layers.size(); ++l) {
        Layer& ly = model.params.layers[l];
        const std::string p = "layer." + std::to_string(l) + ".";
        const long long rows = doc.get_i64(mark(p + "rows"));
        const long long cols = doc.get_i64(mark(p + "cols"));
        if (rows != static_cast<long long>(sizes[l + 1]) ||
            cols != static_cast<long long>(sizes[l])) {
            throw ParseError(path + ": field '" + p + "rows' / '" + p +
                             "cols' (" + std::to_string(rows) + "x" +
                             std::to_string(cols) + ") does not match spec (" +
                             std::to_string(sizes[l + 1]) + "x" +
                             std::to_string(sizes[l]) + ")");
        }
        ly.rows = static_cast<std::size_t>(rows);
        ly.cols = static_cast<std::size_t>(cols);
        ly.w = doc.get_double_array(mark(p + "weight"));
        ly.b = doc.get_double_array(mark(p + "bias"));
        if (ly.w.size() != ly.rows * ly.cols) {
            throw ParseError(path + ": field '" + p + "weight' has " +
                             std::to_string(ly.w.size()) + " values, expected " +
                             std::to_string(ly.rows * ly.cols));
        }
        if (ly.b.size() != ly.rows) {
            throw ParseError(path + ": field '" + p + "bias' has " +
                             std::to_string(ly.b.size()) + " values, expected " +
                             std::to_string(ly.rows));
        }
        for (double v : ly.w) {
            if (!std::isfinite(v)) {
                throw ParseError(path + ": field '" + p + "weight' has a non-finite value");
            }
        }
        for (double v : ly.b) {
            if (!std::isfinite(v)) {
                throw ParseError(path + ": field '" + p + "bias' has a non-finite value");
            }
        }
    }

    for (const auto& [key, value] : doc.entries()) {
        if (known.count(key) != 0) {
            continue;
        }
        if (key.rfind("config.", 0) == 0) {
            model.provenance.emplace_back(key.substr(7), value);
            continue;
        }
        throw ParseError(path + ": unexpected field '" + key + "'");
    }
    return model;
}

} // namespace agekit
