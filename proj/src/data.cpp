#include "agekit/data.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "agekit/errors.hpp"
#include "agekit/kv.hpp"
#include "agekit/rng.hpp"

namespace agekit {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Stream tags for the generator's independent draws.
constexpr std::uint64_t kStreamEmbedding = 1;
constexpr std::uint64_t kStreamAges = 2;
constexpr std::uint64_t kStreamGroups = 3;
constexpr std::uint64_t kStreamNoise = 4;

// Basis of the age embedding: [a, sin(k*pi*a), cos(k*pi*a)] for k=1..4
// with a = age/115. Nine entries.
constexpr std::size_t kBasisDim = 9;

void eval_basis(double age, double basis[kBasisDim]) {
    const double a = age / kMaxIngestAge;
    basis[0] = a;
    for (int k = 1; k <= 4; ++k) {
        basis[2 * k - 1] = std::sin(static_cast<double>(k) * a * kPi);
        basis[2 * k] = std::cos(static_cast<double>(k) * a * kPi);
    }
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') {
        cells.back().pop_back();
    }
    return cells;
}

std::string expected_header(std::size_t dim) {
    std::string h = "id,age,group";
    for (std::size_t k = 0; k < dim; ++k) {
        h += ",f" + std::to_string(k);
    }
    return h;
}

} // namespace

void GenConfig::validate() const {
    if (n == 0) {
        throw InvalidArgument("gen config: n must be positive");
    }
    if (input_dim == 0) {
        throw InvalidArgument("gen config: input_dim must be positive");
    }
    if (!(noise_base >= 0.0) || !std::isfinite(noise_base)) {
        throw InvalidArgument("gen config: noise_base must be >= 0");
    }
    if (!(noise_slope >= 0.0) || !std::isfinite(noise_slope)) {
        throw InvalidArgument("gen config: noise_slope must be >= 0");
    }
    if (groups < 1) {
        throw InvalidArgument("gen config: groups must be >= 1");
    }
    if (group_noise_mult.size() != static_cast<std::size_t>(groups)) {
        throw InvalidArgument("gen config: group_noise_mult has " +
                              std::to_string(group_noise_mult.size()) +
                              " entries, expected " + std::to_string(groups));
    }
    for (double m : group_noise_mult) {
        if (!(m > 0.0) || !std::isfinite(m)) {
            throw InvalidArgument("gen config: group noise multipliers must be positive");
        }
    }
}

Dataset generate(const GenConfig& cfg) {
    cfg.validate();

    // Embedding matrix: input_dim x kBasisDim, standard normal entries,
    // row-major draw order.
    Rng embed_rng(cfg.seed, kStreamEmbedding);
    std::vector<double> embedding(cfg.input_dim * kBasisDim);
    for (auto& w : embedding) {
        w = embed_rng.normal();
    }

    Rng age_rng(cfg.seed, kStreamAges);
    Rng group_rng(cfg.seed, kStreamGroups);
    Rng noise_rng(cfg.seed, kStreamNoise);

    std::vector<double> ages(cfg.n);
    for (auto& a : ages) {
        a = age_rng.uniform(kGenAgeLo, kGenAgeHi);
    }
    std::vector<int> groups(cfg.n);
    for (auto& g : groups) {
        g = static_cast<int>(group_rng.below(static_cast<std::uint64_t>(cfg.groups)));
    }

    Dataset ds;
    ds.feature_dim = cfg.input_dim;
    ds.samples.resize(cfg.n);
    double basis[kBasisDim];
    for (std::size_t i = 0; i < cfg.n; ++i) {
        Sample& smp = ds.samples[i];
        smp.id = "s" + std::to_string(i);
        smp.age = ages[i];
        smp.group = groups[i];
        smp.features.resize(cfg.input_dim);

        eval_basis(smp.age, basis);
        const double noise_std = cfg.group_noise_mult[smp.group] *
                                 (cfg.noise_base + cfg.noise_slope * smp.age / kMaxIngestAge);
        for (std::size_t j = 0; j < cfg.input_dim; ++j) {
            double clean = 0.0;
            for (std::size_t k = 0; k < kBasisDim; ++k) {
                clean += embedding[j * kBasisDim + k] * basis[k];
            }
            smp.features[j] = clean + noise_std * noise_rng.normal();
        }
    }
    return ds;
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }

    std::string line;
    std::size_t line_no = 0;
    // Skip provenance comments ahead of the header.
    for (;;) {
        if (!std::getline(in, line)) {
            throw ParseError(path + ": missing header row");
        }
        ++line_no;
        if (line.empty() || line[0] != '#') {
            break;
        }
    }

    auto header = split_line(line);
    if (header.size() < 3 || header[0] != "id" || header[1] != "age" ||
        header[2] != "group") {
        throw ParseError(path + ": line " + std::to_string(line_no) +
                         ": header must start with id,age,group");
    }
    const std::size_t dim = header.size() - 3;
    for (std::size_t k = 0; k < dim; ++k) {
        if (header[3 + k] != "f" + std::to_string(k)) {
            throw ParseError(path + ": line " + std::to_string(line_no) +
                             ": expected column f" + std::to_string(k) +
                             ", got '" + header[3 + k] + "'");
        }
    }

    Dataset ds;
    ds.feature_dim = dim;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) {
            continue;
        }
        const std::string where = path + ": line " + std::to_string(line_no);
        auto cells = split_line(line);
        if (cells.size() != 3 + dim) {
            throw ParseError(where + ": expected " + std::to_string(3 + dim) +
                             " columns, got " + std::to_string(cells.size()));
        }
        Sample smp;
        smp.id = cells[0];
        smp.age = parse_double_text(cells[1], where + ": column age");
        if (!std::isfinite(smp.age) || smp.age < 0.0 || smp.age >= kMaxIngestAge) {
            throw ParseError(where + ": age " + cells[1] + " outside [0, 115)");
        }
        smp.group = static_cast<int>(parse_i64_text(cells[2], where + ": column group"));
        smp.features.resize(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            smp.features[k] =
                parse_double_text(cells[3 + k], where + ": column f" + std::to_string(k));
            if (!std::isfinite(smp.features[k])) {
                throw ParseError(where + ": non-finite value in column f" +
                                 std::to_string(k));
            }
        }
        ds.samples.push_back(std::move(smp));
    }
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path,
              const std::vector<std::string>& provenance_comments) {
    for (const auto& smp : ds.samples) {
        if (smp.features.size() != ds.feature_dim) {
            throw InvalidArgument("save_csv: sample '" + smp.id +
                                  "' has feature length " +
                                  std::to_string(smp.features.size()) +
                                  ", dataset expects " + std::to_string(ds.feature_dim));
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    for (const auto& comment : provenance_comments) {
        out << "# " << comment << '\n';
    }
    out << expected_header(ds.feature_dim) << '\n';
    for (const auto& smp : ds.samples) {
        out << smp.id << ',' << format_double(smp.age) << ',' << smp.group;
        for (double f : smp.features) {
            out << ',' << format_double(f);
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("write failed for '" + path + "'");
    }
}

} // namespace agekit
