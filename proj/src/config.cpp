#include "agekit/config.hpp"

#include <functional>
#include <map>

#include "agekit/errors.hpp"

namespace agekit {

namespace {

std::vector<std::string> split_list(const std::string& text,
                                    const std::string& key) {
    std::string body = text;
    if (!body.empty() && body.front() == '[') {
        if (body.back() != ']') {
            throw InvalidArgument("config key '" + key + "': unterminated list");
        }
        body = body.substr(1, body.size() - 2);
    }
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t comma = body.find(',', start);
        if (comma == std::string::npos) {
            comma = body.size();
        }
        std::string item = body.substr(start, comma - start);
        const auto a = item.find_first_not_of(" \t");
        if (a == std::string::npos) {
            item.clear();
        } else {
            const auto b = item.find_last_not_of(" \t");
            item = item.substr(a, b - a + 1);
        }
        if (!item.empty()) {
            items.push_back(item);
        } else if (comma < body.size() || !items.empty()) {
            throw InvalidArgument("config key '" + key + "': empty list element");
        }
        start = comma + 1;
    }
    return items;
}

std::string format_double_list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += format_double(v[i]);
    }
    out += "]";
    return out;
}

std::string format_size_list(const std::vector<std::size_t>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) {
            out += ", ";
        }
        out += std::to_string(v[i]);
    }
    out += "]";
    return out;
}

struct Binding {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename F>
Binding dbl_field(const std::string& key, F field) {
    return {key,
            [key, field](RunConfig& c, const std::string& v) {
                field(c) = parse_double_text(v, "config key '" + key + "'");
            },
            [field](const RunConfig& c) { return format_double(field(c)); }};
}

template <typename F>
Binding size_field(const std::string& key, F field) {
    return {key,
            [key, field](RunConfig& c, const std::string& v) {
                field(c) = static_cast<std::size_t>(
                    parse_u64_text(v, "config key '" + key + "'"));
            },
            [field](const RunConfig& c) { return std::to_string(field(c)); }};
}

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> table = [] {
        std::vector<Binding> b;

        b.push_back({"seed",
                     [](RunConfig& c, const std::string& v) {
                         c.seed = parse_u64_text(v, "config key 'seed'");
                     },
                     [](const RunConfig& c) { return std::to_string(c.seed); }});

        b.push_back(size_field("gen.n", [](auto& c) -> auto& { return c.gen.n; }));
        b.push_back(size_field("gen.input_dim",
                               [](auto& c) -> auto& { return c.gen.input_dim; }));
        b.push_back(dbl_field("gen.noise_base",
                              [](auto& c) -> auto& { return c.gen.noise_base; }));
        b.push_back(dbl_field("gen.noise_slope",
                              [](auto& c) -> auto& { return c.gen.noise_slope; }));
        b.push_back({"gen.groups",
                     [](RunConfig& c, const std::string& v) {
                         c.gen.groups = static_cast<int>(
                             parse_i64_text(v, "config key 'gen.groups'"));
                     },
                     [](const RunConfig& c) { return std::to_string(c.gen.groups); }});
        b.push_back({"gen.group_noise_mult",
                     [](RunConfig& c, const std::string& v) {
                         c.gen.group_noise_mult.clear();
                         for (const std::string& item :
                              split_list(v, "gen.group_noise_mult")) {
                             c.gen.group_noise_mult.push_back(parse_double_text(
                                 item, "config key 'gen.group_noise_mult'"));
                         }
                     },
                     [](const RunConfig& c) {
                         return format_double_list(c.gen.group_noise_mult);
                     }});

        b.push_back({"model.hidden_dims",
                     [](RunConfig& c, const std::string& v) {
                         c.model.hidden_dims.clear();
                         for (const std::string& item :
                              split_list(v, "model.hidden_dims")) {
                             c.model.hidden_dims.push_back(
                                 static_cast<std::size_t>(parse_u64_text(
                                     item, "config key 'model.hidden_dims'")));
                         }
                     },
                     [](const RunConfig& c) {
                         return format_size_list(c.model.hidden_dims);
                     }});
        b.push_back({"model.activation",
                     [](RunConfig& c, const std::string& v) {
                         c.model.activation = activation_from_token(v);
                     },
                     [](const RunConfig& c) { return to_token(c.model.activation); }});
        b.push_back({"model.sigma_map",
                     [](RunConfig& c, const std::string& v) {
                         c.model.sigma_map = sigma_map_from_token(v);
                     },
                     [](const RunConfig& c) { return to_token(c.model.sigma_map); }});

        b.push_back(size_field("train.epochs",
                               [](auto& c) -> auto& { return c.train.epochs; }));
        b.push_back(size_field("train.batch_size",
                               [](auto& c) -> auto& { return c.train.batch_size; }));
        b.push_back(dbl_field("train.learning_rate", [](auto& c) -> auto& {
            return c.train.learning_rate;
        }));
        b.push_back({"train.optimizer",
                     [](RunConfig& c, const std::string& v) {
                         if (v == "sgd") {
                             c.train.optimizer = TrainConfig::Optimizer::Sgd;
                         } else if (v == "adam") {
                             c.train.optimizer = TrainConfig::Optimizer::Adam;
                         } else {
                             throw InvalidArgument(
                                 "config key 'train.optimizer': unknown value '" +
                                 v + "' (expected sgd or adam)");
                         }
                     },
                     [](const RunConfig& c) {
                         return c.train.optimizer == TrainConfig::Optimizer::Sgd
                                    ? "sgd"
                                    : "adam";
                     }});
        b.push_back(dbl_field("train.adam_beta1",
                              [](auto& c) -> auto& { return c.train.adam_beta1; }));
        b.push_back(dbl_field("train.adam_beta2",
                              [](auto& c) -> auto& { return c.train.adam_beta2; }));
        b.push_back(dbl_field("train.adam_eps",
                              [](auto& c) -> auto& { return c.train.adam_eps; }));
        b.push_back(dbl_field("train.sigma_floor",
                              [](auto& c) -> auto& { return c.train.sigma_floor; }));

        b.push_back(dbl_field("loss.alpha",
                              [](auto& c) -> auto& { return c.loss.alpha; }));
        b.push_back(dbl_field("loss.beta",
                              [](auto& c) -> auto& { return c.loss.beta; }));
        b.push_back(dbl_field("loss.delta",
                              [](auto& c) -> auto& { return c.loss.delta; }));
        b.push_back(dbl_field("loss.r", [](auto& c) -> auto& { return c.loss.r; }));
        b.push_back(dbl_field("loss.s", [](auto& c) -> auto& { return c.loss.s; }));
        b.push_back(dbl_field("loss.d", [](auto& c) -> auto& { return c.loss.d; }));
        b.push_back(dbl_field("loss.max_age",
                              [](auto& c) -> auto& { return c.loss.max_age; }));
        b.push_back(dbl_field("loss.c", [](auto& c) -> auto& { return c.loss.c; }));

        b.push_back(dbl_field("calib.target_fpr",
                              [](auto& c) -> auto& { return c.calib.target_fpr; }));
        b.push_back(dbl_field("calib.bucket_width",
                              [](auto& c) -> auto& { return c.calib.bucket_width; }));
        b.push_back(dbl_field("calib.side_split",
                              [](auto& c) -> auto& { return c.calib.side_split; }));
        b.push_back(size_field("calib.min_bucket_n", [](auto& c) -> auto& {
            return c.calib.min_bucket_n;
        }));

        b.push_back(dbl_field("verify.legal_age",
                              [](auto& c) -> auto& { return c.policy.legal_age; }));
        b.push_back(dbl_field("verify.challenge_age", [](auto& c) -> auto& {
            return c.policy.challenge_age;
        }));
        b.push_back({"verify.method",
                     [](RunConfig& c, const std::string& v) {
                         if (v == "both") {
                             c.verify_method = "both";
                             return;
                         }
                         c.policy.method = verify_method_from_token(v);
                         c.verify_method = to_token(c.policy.method);
                     },
                     [](const RunConfig& c) { return c.verify_method; }});

        b.push_back({"compare.baseline",
                     [](RunConfig& c, const std::string& v) {
                         if (v != "fixed" && v != "none") {
                             throw InvalidArgument(
                                 "config key 'compare.baseline': unknown value '" +
                                 v + "' (expected fixed or none)");
                         }
                         c.compare_baseline = v;
                     },
                     [](const RunConfig& c) { return c.compare_baseline; }});

        b.push_back(dbl_field("match.grid_min",
                              [](auto& c) -> auto& { return c.match.grid_min; }));
        b.push_back(dbl_field("match.grid_max",
                              [](auto& c) -> auto& { return c.match.grid_max; }));
        b.push_back(size_field("match.grid_points", [](auto& c) -> auto& {
            return c.match.grid_points;
        }));
        b.push_back(dbl_field("match.tpr_tolerance", [](auto& c) -> auto& {
            return c.match.tpr_tolerance;
        }));

        return b;
    }();
    return table;
}

const Binding& find_binding(const std::string& key) {
    static const std::map<std::string, std::size_t> index = [] {
        std::map<std::string, std::size_t> m;
        for (std::size_t i = 0; i < bindings().size(); ++i) {
            m.emplace(bindings()[i].key, i);
        }
        return m;
    }();
    const auto it = index.find(key);
    if (it == index.end()) {
        throw InvalidArgument("unknown config key '" + key + "'");
    }
    return bindings()[it->second];
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    try {
        find_binding(key).set(*this, value);
    } catch (const ParseError& e) {
        // The scalar parsers report malformed text as ParseError; at this
        // boundary a bad value is an invalid argument, not a broken file.
        throw InvalidArgument(e.what());
    }
}

std::string RunConfig::get(const std::string& key) const {
    return find_binding(key).get(*this);
}

void RunConfig::validate() const {
    gen.validate();
    model.validate();
    train.validate();
    loss.validate();
    calib.validate();
    policy.validate();
    match.validate();
}

KvDoc RunConfig::to_doc() const {
    KvDoc doc;
    for (const Binding& b : bindings()) {
        doc.add_raw(b.key, b.get(*this));
    }
    return doc;
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
    return to_doc().entries();
}

RunConfig RunConfig::from_doc(const KvDoc& doc) {
    RunConfig cfg;
    for (const auto& [key, value] : doc.entries()) {
        cfg.set(key, value);
    }
    cfg.validate();
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    return from_doc(KvDoc::load(path));
}

} // namespace agekit
