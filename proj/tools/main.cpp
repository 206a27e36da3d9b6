// agekit command-line tool: gen / train / calibrate / eval / decide over the
// C API. Exit codes: 0 success, 1 runtime failure (bad file contents,
// divergence), 2 usage or validation error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "agekit.h"

namespace {

struct Failure {
    int code;
};

void check(agekit_status st) {
    if (st != AGEKIT_OK) {
        std::cerr << "agekit: " << agekit_last_error() << '\n';
        throw Failure{st == AGEKIT_ERR_INVALID_ARGUMENT ? 2 : 1};
    }
}

[[noreturn]] void usage_error(const std::string& message) {
    std::cerr << "agekit: " << message << '\n';
    throw Failure{2};
}

template <typename T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;

    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() {
        if (p != nullptr) {
            Free(p);
        }
    }

    T** slot() { return &p; }
    operator T*() const { return p; }
};

using ConfigHandle = Handle<agekit_config, agekit_config_free>;
using DatasetHandle = Handle<agekit_dataset, agekit_dataset_free>;
using ModelHandle = Handle<agekit_model, agekit_model_free>;
using TableHandle = Handle<agekit_table, agekit_table_free>;
using ReportHandle = Handle<agekit_report, agekit_report_free>;

struct OwnedString {
    char* s = nullptr;

    OwnedString() = default;
    OwnedString(const OwnedString&) = delete;
    OwnedString& operator=(const OwnedString&) = delete;
    ~OwnedString() { agekit_string_free(s); }
};

/// Options shared by every subcommand, applied in a fixed order: config
/// file, then --set overrides, then --seed, then the subcommand's own
/// shortcut flags (strongest).
struct GlobalArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    bool verbose = false;

    void build(ConfigHandle& cfg,
               const std::vector<std::pair<std::string, std::string>>&
                   shortcuts) const {
        if (!config_path.empty()) {
            check(agekit_config_load(config_path.c_str(), cfg.slot()));
        } else {
            cfg.p = agekit_config_create();
            if (cfg.p == nullptr) {
                std::cerr << "agekit: out of memory\n";
                throw Failure{1};
            }
        }
        for (const std::string& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) {
                usage_error("--set expects KEY=VALUE, got '" + kv + "'");
            }
            check(agekit_config_set(cfg, kv.substr(0, eq).c_str(),
                                    kv.substr(eq + 1).c_str()));
        }
        if (seed.has_value()) {
            check(agekit_config_set(cfg, "seed", std::to_string(*seed).c_str()));
        }
        for (const auto& [key, value] : shortcuts) {
            check(agekit_config_set(cfg, key.c_str(), value.c_str()));
        }
    }

    void note(const std::string& message) const {
        if (verbose) {
            std::cerr << "agekit: " << message << '\n';
        }
    }
};

std::string fmt(double v) {
    std::string s = std::to_string(v);
    // std::to_string pads with zeros; fine for forwarding flag values.
    return s;
}

void cmd_gen(const GlobalArgs& g, const std::optional<std::uint64_t>& n,
             const std::string& out) {
    std::vector<std::pair<std::string, std::string>> shortcuts;
    if (n.has_value()) {
        shortcuts.emplace_back("gen.n", std::to_string(*n));
    }
    ConfigHandle cfg;
    g.build(cfg, shortcuts);
    DatasetHandle ds;
    check(agekit_dataset_generate(cfg, ds.slot()));
    check(agekit_dataset_save_csv(ds, cfg, out.c_str()));
    g.note("wrote " + std::to_string(agekit_dataset_size(ds)) + " samples to " +
           out);
}

void cmd_train(const GlobalArgs& g, const std::string& data,
               const std::string& out, const std::string& log,
               const std::optional<std::uint64_t>& epochs) {
    std::vector<std::pair<std::string, std::string>> shortcuts;
    if (epochs.has_value()) {
        shortcuts.emplace_back("train.epochs", std::to_string(*epochs));
    }
    ConfigHandle cfg;
    g.build(cfg, shortcuts);
    DatasetHandle ds;
    check(agekit_dataset_load_csv(data.c_str(), ds.slot()));
    g.note("loaded " + std::to_string(agekit_dataset_size(ds)) +
           " samples from " + data);
    ModelHandle model;
    check(agekit_train(cfg, ds, log.empty() ? nullptr : log.c_str(),
                       model.slot()));
    check(agekit_model_save(model, out.c_str()));
    g.note("wrote model to " + out);
}

void cmd_calibrate(const GlobalArgs& g, const std::string& model_path,
                   const std::string& data, const std::string& out,
                   const std::optional<double>& fpr) {
    std::vector<std::pair<std::string, std::string>> shortcuts;
    if (fpr.has_value()) {
        shortcuts.emplace_back("calib.target_fpr", fmt(*fpr));
    }
    ConfigHandle cfg;
    g.build(cfg, shortcuts);
    ModelHandle model;
    check(agekit_model_load(model_path.c_str(), model.slot()));
    DatasetHandle ds;
    check(agekit_dataset_load_csv(data.c_str(), ds.slot()));
    TableHandle table;
    check(agekit_calibrate(cfg, model, ds, table.slot()));
    check(agekit_table_save(table, out.c_str()));
    g.note("wrote threshold table to " + out);
}

struct PolicyFlags {
    std::optional<double> legal;
    std::optional<double> challenge;
    std::string method;

    void append(std::vector<std::pair<std::string, std::string>>& shortcuts) const {
        if (legal.has_value()) {
            shortcuts.emplace_back("verify.legal_age", fmt(*legal));
        }
        if (challenge.has_value()) {
            shortcuts.emplace_back("verify.challenge_age", fmt(*challenge));
        }
        if (!method.empty()) {
            shortcuts.emplace_back("verify.method", method);
        }
    }
};

void cmd_eval(const GlobalArgs& g, const std::string& model_path,
              const std::string& table_path, const std::string& data,
              const std::string& task, const PolicyFlags& policy,
              const std::string& baseline, const std::string& out) {
    std::vector<std::pair<std::string, std::string>> shortcuts;
    policy.append(shortcuts);
    if (!baseline.empty()) {
        shortcuts.emplace_back("compare.baseline", baseline);
    }
    ConfigHandle cfg;
    g.build(cfg, shortcuts);
    ModelHandle model;
    check(agekit_model_load(model_path.c_str(), model.slot()));
    TableHandle table;
    if (!table_path.empty()) {
        check(agekit_table_load(table_path.c_str(), table.slot()));
    }
    DatasetHandle ds;
    check(agekit_dataset_load_csv(data.c_str(), ds.slot()));
    g.note("evaluating task '" + task + "' on " +
           std::to_string(agekit_dataset_size(ds)) + " samples");
    ReportHandle report;
    check(agekit_eval(cfg, model, table, ds, task.c_str(), report.slot()));
    if (!out.empty()) {
        check(agekit_report_save(report, out.c_str()));
        g.note("wrote report to " + out);
    }
    OwnedString summary;
    check(agekit_report_summary(report, &summary.s));
    std::cout << summary.s;
}

void cmd_decide(const GlobalArgs& g, const std::string& task,
                const std::optional<double>& mu,
                const std::optional<double>& sigma,
                const std::vector<double>& features,
                const std::string& model_path, const std::string& table_path,
                const PolicyFlags& policy,
                const std::optional<double>& claimed) {
    std::vector<std::pair<std::string, std::string>> shortcuts;
    policy.append(shortcuts);
    ConfigHandle cfg;
    g.build(cfg, shortcuts);

    double mu_v = 0.0, sigma_v = 0.0;
    if (!features.empty()) {
        if (mu.has_value() || sigma.has_value()) {
            usage_error("give either --features or --mu/--sigma, not both");
        }
        if (model_path.empty()) {
            usage_error("--features requires --model");
        }
        ModelHandle model;
        check(agekit_model_load(model_path.c_str(), model.slot()));
        check(agekit_model_predict(model, features.data(), 1, &mu_v, &sigma_v));
        g.note("model prediction: mu=" + fmt(mu_v) + " sigma=" + fmt(sigma_v));
    } else if (mu.has_value() && sigma.has_value()) {
        mu_v = *mu;
        sigma_v = *sigma;
    } else {
        usage_error("decide needs --features or both --mu and --sigma");
    }

    TableHandle table;
    if (!table_path.empty()) {
        check(agekit_table_load(table_path.c_str(), table.slot()));
    }

    OwnedString line;
    if (task == "estimate") {
        check(agekit_decide_estimate(mu_v, sigma_v, &line.s));
    } else if (task == "verify") {
        OwnedString method;
        check(agekit_config_get(cfg, "verify.method", &method.s));
        if (std::string(method.s) == "both") {
            usage_error("decide verifies with one method; pass --method sr or "
                        "--method confidence");
        }
        OwnedString legal, challenge;
        check(agekit_config_get(cfg, "verify.legal_age", &legal.s));
        check(agekit_config_get(cfg, "verify.challenge_age", &challenge.s));
        check(agekit_decide_verify(mu_v, sigma_v, std::stod(legal.s),
                                   std::stod(challenge.s), method.s, table,
                                   &line.s));
    } else if (task == "compare") {
        if (!claimed.has_value()) {
            usage_error("decide --task compare needs --claimed");
        }
        if (table.p == nullptr) {
            usage_error("decide --task compare needs --table");
        }
        check(agekit_decide_compare(mu_v, sigma_v, *claimed, table, &line.s));
    } else {
        usage_error("unknown task '" + task +
                    "' (expected estimate, verify, or compare)");
    }
    std::cout << line.s << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"agekit - confidence-aware age estimation toolkit"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path,
                   "Run-config file (key = value lines)");
    app.add_option("--set", g.sets,
                   "Override one config key, KEY=VALUE (repeatable)")
        ->take_all();
    app.add_option("--seed", g.seed, "Global seed (overrides the config file)");
    app.add_flag("--verbose", g.verbose, "Progress messages on stderr");

    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset CSV");
    gen->fallthrough();
    std::optional<std::uint64_t> gen_n;
    std::string gen_out;
    gen->add_option("--n", gen_n, "Sample count (gen.n)");
    gen->add_option("--out", gen_out, "Output CSV path")->required();

    auto* train = app.add_subcommand("train", "Train a model on a CSV dataset");
    train->fallthrough();
    std::string train_data, train_out, train_log;
    std::optional<std::uint64_t> train_epochs;
    train->add_option("--data", train_data, "Input CSV path")->required();
    train->add_option("--out", train_out, "Output checkpoint path")->required();
    train->add_option("--log", train_log, "Per-epoch training log (TSV)");
    train->add_option("--epochs", train_epochs, "Epoch count (train.epochs)");

    auto* calibrate =
        app.add_subcommand("calibrate", "Calibrate confidence thresholds");
    calibrate->fallthrough();
    std::string cal_model, cal_data, cal_out;
    std::optional<double> cal_fpr;
    calibrate->add_option("--model", cal_model, "Checkpoint path")->required();
    calibrate->add_option("--data", cal_data, "Held-out CSV path")->required();
    calibrate->add_option("--out", cal_out, "Output table path")->required();
    calibrate->add_option("--fpr", cal_fpr, "Target FPR (calib.target_fpr)");

    auto* eval = app.add_subcommand("eval", "Evaluate a task over a dataset");
    eval->fallthrough();
    std::string ev_model, ev_table, ev_data, ev_task = "estimate", ev_baseline,
                ev_out;
    PolicyFlags ev_policy;
    eval->add_option("--model", ev_model, "Checkpoint path")->required();
    eval->add_option("--table", ev_table, "Threshold-table path");
    eval->add_option("--data", ev_data, "Evaluation CSV path")->required();
    eval->add_option("--task", ev_task, "estimate, verify, or compare");
    eval->add_option("--legal", ev_policy.legal, "Legal age (verify.legal_age)");
    eval->add_option("--challenge", ev_policy.challenge,
                     "Challenge age (verify.challenge_age)");
    eval->add_option("--method", ev_policy.method,
                     "sr, confidence, or both (verify.method)");
    eval->add_option("--baseline", ev_baseline,
                     "fixed or none (compare.baseline)");
    eval->add_option("--out", ev_out, "Report file path (summary always prints)");

    auto* decide = app.add_subcommand("decide", "One decision on stdout");
    decide->fallthrough();
    std::string de_task = "estimate", de_model, de_table;
    std::optional<double> de_mu, de_sigma, de_claimed;
    std::vector<double> de_features;
    PolicyFlags de_policy;
    decide->add_option("--task", de_task, "estimate, verify, or compare");
    decide->add_option("--mu", de_mu, "Predicted mean age");
    decide->add_option("--sigma", de_sigma, "Predicted standard deviation");
    decide->add_option("--features", de_features,
                       "Feature vector (comma separated); needs --model")
        ->delimiter(',');
    decide->add_option("--model", de_model, "Checkpoint path");
    decide->add_option("--table", de_table, "Threshold-table path");
    decide->add_option("--legal", de_policy.legal, "Legal age");
    decide->add_option("--challenge", de_policy.challenge, "Challenge age");
    decide->add_option("--method", de_policy.method, "sr or confidence");
    decide->add_option("--claimed", de_claimed, "Claimed age (compare)");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) {
            cmd_gen(g, gen_n, gen_out);
        } else if (train->parsed()) {
            cmd_train(g, train_data, train_out, train_log, train_epochs);
        } else if (calibrate->parsed()) {
            cmd_calibrate(g, cal_model, cal_data, cal_out, cal_fpr);
        } else if (eval->parsed()) {
            cmd_eval(g, ev_model, ev_table, ev_data, ev_task, ev_policy,
                     ev_baseline, ev_out);
        } else if (decide->parsed()) {
            cmd_decide(g, de_task, de_mu, de_sigma, de_features, de_model,
                       de_table, de_policy, de_claimed);
        }
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const Failure& f) {
        return f.code;
    }
    return 0;
}
