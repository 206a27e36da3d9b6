#include "agekit.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <string>

#include "agekit/errors.hpp"
#include "agekit/pipeline.hpp"

struct agekit_config {
    agekit::RunConfig cfg;
};
struct agekit_dataset {
    agekit::Dataset ds;
};
struct agekit_model {
    agekit::Model model;
};
struct agekit_table {
    agekit::TableArtifact artifact;
};
struct agekit_report {
    agekit::EvalReport report;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
agekit_status wrap(F&& body) noexcept {
    try {
        body();
        g_last_error.clear();
        return AGEKIT_OK;
    } catch (const agekit::InvalidArgument& e) {
        g_last_error = e.what();
        return AGEKIT_ERR_INVALID_ARGUMENT;
    } catch (const agekit::ParseError& e) {
        g_last_error = e.what();
        return AGEKIT_ERR_PARSE;
    } catch (const agekit::IoError& e) {
        g_last_error = e.what();
        return AGEKIT_ERR_IO;
    } catch (const agekit::NumericError& e) {
        g_last_error = e.what();
        return AGEKIT_ERR_NUMERIC;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return AGEKIT_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return AGEKIT_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) {
        throw agekit::InvalidArgument(std::string(what) + " must not be null");
    }
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::vector<std::string> echo_lines(const agekit::RunConfig& cfg) {
    std::vector<std::string> lines;
    for (const auto& [key, value] : cfg.echo()) {
        lines.push_back(key + " = " + value);
    }
    return lines;
}

} // namespace

extern "C" {

const char* agekit_version(void) {
    return "1.0.0";
}

const char* agekit_last_error(void) {
    return g_last_error.c_str();
}

void agekit_string_free(char* s) {
    std::free(s);
}

agekit_config* agekit_config_create(void) {
    return new (std::nothrow) agekit_config{};
}

agekit_status agekit_config_load(const char* path, agekit_config** out) {
    return wrap([&] {
        require(path, "path");
        require(out, "out");
        *out = new agekit_config{agekit::RunConfig::load(path)};
    });
}

agekit_status agekit_config_set(agekit_config* cfg, const char* key,
                                const char* value) {
    return wrap([&] {
        require(cfg, "cfg");
        require(key, "key");
        require(value, "value");
        cfg->cfg.set(key, value);
    });
}

agekit_status agekit_config_get(const agekit_config* cfg, const char* key,
                                char** out) {
    return wrap([&] {
        require(cfg, "cfg");
        require(key, "key");
        require(out, "out");
        *out = dup_string(cfg->cfg.get(key));
    });
}

void agekit_config_free(agekit_config* cfg) {
    delete cfg;
}

agekit_status agekit_dataset_generate(const agekit_config* cfg,
                                      agekit_dataset** out) {
    return wrap([&] {
        require(cfg, "cfg");
        require(out, "out");
        *out = new agekit_dataset{agekit::run_generate(cfg->cfg)};
    });
}

agekit_status agekit_dataset_load_csv(const char* path, agekit_dataset** out) {
    return wrap([&] {
        require(path, "path");
        require(out, "out");
        *out = new agekit_dataset{agekit::load_csv(path)};
    });
}

agekit_status agekit_dataset_save_csv(const agekit_dataset* ds,
                                      const agekit_config* cfg,
                                      const char* path) {
    return wrap([&] {
        require(ds, "ds");
        require(path, "path");
        agekit::save_csv(ds->ds, path,
                         cfg != nullptr ? echo_lines(cfg->cfg)
                                        : std::vector<std::string>{});
    });
}

size_t agekit_dataset_size(const agekit_dataset* ds) {
    return ds == nullptr ? 0 : ds->ds.size();
}

size_t agekit_dataset_feature_dim(const agekit_dataset* ds) {
    return ds == nullptr ? 0 : ds->ds.feature_dim;
}

void agekit_dataset_free(agekit_dataset* ds) {
    delete ds;
}

agekit_status agekit_train(const agekit_config* cfg, const agekit_dataset* ds,
                           const char* log_path, agekit_model** out) {
    return wrap([&] {
        require(cfg, "cfg");
        require(ds, "ds");
        require(out, "out");
        auto [model, log] = agekit::run_training(cfg->cfg, ds->ds);
        if (log_path != nullptr) {
            std::ofstream f(log_path, std::ios::binary);
            if (!f) {
                throw agekit::IoError(std::string("cannot open '") + log_path +
                                      "' for writing");
            }
            f << log.to_tsv();
            if (!f) {
                throw agekit::IoError(std::string("write failed for '") +
                                      log_path + "'");
            }
        }
        *out = new agekit_model{std::move(model)};
    });
}

agekit_status agekit_model_load(const char* path, agekit_model** out) {
    return wrap([&] {
        require(path, "path");
        require(out, "out");
        *out = new agekit_model{agekit::load_model(path)};
    });
}

agekit_status agekit_model_save(const agekit_model* model, const char* path) {
    return wrap([&] {
        require(model, "model");
        require(path, "path");
        agekit::save_model(model->model, path);
    });
}

size_t agekit_model_input_dim(const agekit_model* model) {
    return model == nullptr ? 0 : model->model.spec.input_dim;
}

agekit_status agekit_model_predict(const agekit_model* model,
                                   const double* features, size_t n_rows,
                                   double* mu_out, double* sigma_out) {
    return wrap([&] {
        require(model, "model");
        require(features, "features");
        require(mu_out, "mu_out");
        require(sigma_out, "sigma_out");
        const std::size_t dim = model->model.spec.input_dim;
        const agekit::ModelOutputs res = agekit::forward(
            model->model, std::span<const double>(features, n_rows * dim),
            n_rows);
        std::memcpy(mu_out, res.mu.data(), n_rows * sizeof(double));
        std::memcpy(sigma_out, res.sigma.data(), n_rows * sizeof(double));
    });
}

void agekit_model_free(agekit_model* model) {
    delete model;
}

agekit_status agekit_calibrate(const agekit_config* cfg,
                               const agekit_model* model,
                               const agekit_dataset* ds, agekit_table** out) {
    return wrap([&] {
        require(cfg, "cfg");
        require(model, "model");
        require(ds, "ds");
        require(out, "out");
        *out = new agekit_table{
            agekit::run_calibration(cfg->cfg, model->model, ds->ds)};
    });
}

agekit_status agekit_table_load(const char* path, agekit_table** out) {
    return wrap([&] {
        require(path, "path");
        require(out, "out");
        *out = new agekit_table{agekit::load_table(path)};
    });
}

agekit_status agekit_table_save(const agekit_table* table, const char* path) {
    return wrap([&] {
        require(table, "table");
        require(path, "path");
        agekit::save_table(table->artifact, path);
    });
}

agekit_status agekit_range_for(const agekit_table* table, double mu,
                               double sigma, double* lo_out, double* hi_out) {
    return wrap([&] {
        require(table, "table");
        require(lo_out, "lo_out");
        require(hi_out, "hi_out");
        const agekit::AgeRange r =
            agekit::range_for(mu, sigma, table->artifact.table);
        *lo_out = r.lo;
        *hi_out = r.hi;
    });
}

void agekit_table_free(agekit_table* table) {
    delete table;
}

agekit_status agekit_decide_estimate(double mu, double sigma, char** out) {
    return wrap([&] {
        require(out, "out");
        *out = dup_string(agekit::estimate(mu, sigma).to_line());
    });
}

agekit_status agekit_decide_verify(double mu, double sigma, double legal_age,
                                   double challenge_age, const char* method,
                                   const agekit_table* table, char** out) {
    return wrap([&] {
        require(method, "method");
        require(out, "out");
        agekit::VerificationPolicy policy;
        policy.legal_age = legal_age;
        policy.challenge_age = challenge_age;
        policy.method = agekit::verify_method_from_token(method);
        const agekit::ThresholdTable* t =
            table != nullptr ? &table->artifact.table : nullptr;
        *out = dup_string(agekit::verify(mu, sigma, policy, t).to_line());
    });
}

agekit_status agekit_decide_compare(double mu, double sigma,
                                    double claimed_age,
                                    const agekit_table* table, char** out) {
    return wrap([&] {
        require(table, "table");
        require(out, "out");
        *out = dup_string(
            agekit::compare(mu, sigma, claimed_age, table->artifact.table)
                .to_line());
    });
}

agekit_status agekit_eval(const agekit_config* cfg, const agekit_model* model,
                          const agekit_table* table, const agekit_dataset* ds,
                          const char* task, agekit_report** out) {
    return wrap([&] {
        require(cfg, "cfg");
        require(model, "model");
        require(ds, "ds");
        require(task, "task");
        require(out, "out");
        *out = new agekit_report{agekit::run_eval(
            cfg->cfg, model->model,
            table != nullptr ? &table->artifact : nullptr, ds->ds,
            agekit::task_from_token(task))};
    });
}

agekit_status agekit_report_save(const agekit_report* report,
                                 const char* path) {
    return wrap([&] {
        require(report, "report");
        require(path, "path");
        agekit::save_report(report->report, path);
    });
}

agekit_status agekit_report_summary(const agekit_report* report, char** out) {
    return wrap([&] {
        require(report, "report");
        require(out, "out");
        *out = dup_string(report->report.summary());
    });
}

void agekit_report_free(agekit_report* report) {
    delete report;
}

} // extern "C"
