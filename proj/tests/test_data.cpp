#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "agekit/data.hpp"
#include "agekit/errors.hpp"

using namespace agekit;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("agekit_data_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in),
            std::istreambuf_iterator<char>()};
}

GenConfig small_cfg(std::uint64_t seed, std::size_t n = 500) {
    GenConfig cfg;
    cfg.n = n;
    cfg.input_dim = 6;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("generation is deterministic per seed and diverges across seeds") {
    const Dataset a = generate(small_cfg(42));
    const Dataset b = generate(small_cfg(42));
    const Dataset c = generate(small_cfg(43));
    REQUIRE(a.size() == b.size());
    CHECK(a.feature_dim == 6);
    bool identical = true;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.samples[i].age != b.samples[i].age ||
            a.samples[i].group != b.samples[i].group ||
            a.samples[i].features != b.samples[i].features ||
            a.samples[i].id != b.samples[i].id) {
            identical = false;
        }
    }
    CHECK(identical);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.samples[i].age != c.samples[i].age) {
            differs = true;
            break;
        }
    }
    CHECK(differs);
}

TEST_CASE("generated ages stay inside the documented span") {
    const Dataset ds = generate(small_cfg(7, 2000));
    for (const Sample& s : ds.samples) {
        CHECK(s.age >= kGenAgeLo);
        CHECK(s.age <= kGenAgeHi);
        CHECK(s.age < kMaxIngestAge);
        CHECK(s.group >= 0);
        CHECK(s.group < 4);
        REQUIRE(s.features.size() == ds.feature_dim);
        for (double f : s.features) {
            CHECK(std::isfinite(f));
        }
    }
}

TEST_CASE("age distribution is roughly uniform over the span") {
    GenConfig cfg = small_cfg(11, 100000);
    const Dataset ds = generate(cfg);
    double sum = 0.0, sum_sq = 0.0;
    for (const Sample& s : ds.samples) {
        sum += s.age;
        sum_sq += s.age * s.age;
    }
    const double n = static_cast<double>(ds.size());
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    const double span = kGenAgeHi - kGenAgeLo;
    const double want_mean = 0.5 * (kGenAgeLo + kGenAgeHi);
    const double want_var = span * span / 12.0;
    CHECK(std::abs(mean - want_mean) < 0.5);
    CHECK(std::abs(var / want_var - 1.0) < 0.03);

    // group labels should be close to balanced
    std::vector<std::size_t> counts(4, 0);
    for (const Sample& s : ds.samples) {
        counts[static_cast<std::size_t>(s.group)]++;
    }
    for (std::size_t c : counts) {
        CHECK(std::abs(static_cast<double>(c) / n - 0.25) < 0.01);
    }
}

TEST_CASE("noiseless features are a pure function of age") {
    GenConfig cfg = small_cfg(3, 400);
    cfg.noise_base = 0.0;
    cfg.noise_slope = 0.0;
    const Dataset ds = generate(cfg);
    // same age would give same features; ages are continuous so instead
    // check feature spread between two datasets that share the seed (and
    // therefore the ages and embedding) is exactly zero
    const Dataset twin = generate(cfg);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(ds.samples[i].features == twin.samples[i].features);
    }
    // and that features do vary with age (the embedding is not constant)
    bool varies = false;
    for (std::size_t i = 1; i < ds.size(); ++i) {
        if (ds.samples[i].features[0] != ds.samples[0].features[0]) {
            varies = true;
            break;
        }
    }
    CHECK(varies);
}

TEST_CASE("group noise multipliers scale the injected noise") {
    // compare a noisy dataset against its noiseless twin (same seed, so
    // identical ages / groups / embedding); the residual feature deltas
    // estimate the injected noise per group
    GenConfig noisy = small_cfg(19, 40000);
    noisy.noise_base = 1.0;
    noisy.noise_slope = 0.0; // isolate the group multiplier
    GenConfig clean = noisy;
    clean.noise_base = 0.0;
    const Dataset dn = generate(noisy);
    const Dataset dc = generate(clean);
    REQUIRE(dn.size() == dc.size());

    std::vector<double> sq(4, 0.0);
    std::vector<std::size_t> cnt(4, 0);
    for (std::size_t i = 0; i < dn.size(); ++i) {
        REQUIRE(dn.samples[i].age == dc.samples[i].age);
        REQUIRE(dn.samples[i].group == dc.samples[i].group);
        const auto g = static_cast<std::size_t>(dn.samples[i].group);
        for (std::size_t j = 0; j < dn.feature_dim; ++j) {
            const double delta =
                dn.samples[i].features[j] - dc.samples[i].features[j];
            sq[g] += delta * delta;
            cnt[g]++;
        }
    }
    std::vector<double> sd(4);
    for (std::size_t g = 0; g < 4; ++g) {
        REQUIRE(cnt[g] > 1000);
        sd[g] = std::sqrt(sq[g] / static_cast<double>(cnt[g]));
    }
    // noise sd should track group_noise_mult = {0.5, 1.0, 1.5, 2.5}
    CHECK(sd[1] == doctest::Approx(1.0).epsilon(0.05));
    CHECK(sd[0] / sd[1] == doctest::Approx(0.5).epsilon(0.05));
    CHECK(sd[2] / sd[1] == doctest::Approx(1.5).epsilon(0.05));
    CHECK(sd[3] / sd[1] == doctest::Approx(2.5).epsilon(0.05));
}

TEST_CASE("noise grows with age when noise_slope is set") {
    GenConfig cfg = small_cfg(23, 40000);
    cfg.noise_base = 0.1;
    cfg.noise_slope = 2.0;
    cfg.group_noise_mult = {1.0, 1.0, 1.0, 1.0};
    GenConfig clean = cfg;
    clean.noise_base = 0.0;
    clean.noise_slope = 0.0;
    const Dataset dn = generate(cfg);
    const Dataset dc = generate(clean);

    double young_sq = 0.0, old_sq = 0.0;
    std::size_t young_n = 0, old_n = 0;
    for (std::size_t i = 0; i < dn.size(); ++i) {
        const double age = dn.samples[i].age;
        const bool young = age < 25.0;
        const bool old = age > 70.0;
        if (!young && !old) {
            continue;
        }
        for (std::size_t j = 0; j < dn.feature_dim; ++j) {
            const double delta =
                dn.samples[i].features[j] - dc.samples[i].features[j];
            if (young) {
                young_sq += delta * delta;
                young_n++;
            } else {
                old_sq += delta * delta;
                old_n++;
            }
        }
    }
    const double young_sd = std::sqrt(young_sq / static_cast<double>(young_n));
    const double old_sd = std::sqrt(old_sq / static_cast<double>(old_n));
    CHECK(old_sd > 2.0 * young_sd);
}

TEST_CASE("config validation rejects nonsense") {
    GenConfig cfg;
    cfg.n = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = GenConfig{};
    cfg.input_dim = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = GenConfig{};
    cfg.noise_base = -0.1;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = GenConfig{};
    cfg.groups = 0;
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
    cfg = GenConfig{};
    cfg.group_noise_mult = {1.0};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument); // must match groups
    cfg = GenConfig{};
    cfg.group_noise_mult = {0.5, 1.0, 1.5, 0.0};
    CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("csv round trip preserves every sample bit-exactly") {
    TempDir dir;
    const Dataset ds = generate(small_cfg(5, 120));
    const std::string path = dir.file("roundtrip.csv");
    save_csv(ds, path);
    const Dataset back = load_csv(path);
    REQUIRE(back.size() == ds.size());
    CHECK(back.feature_dim == ds.feature_dim);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.samples[i].id == ds.samples[i].id);
        CHECK(back.samples[i].age == ds.samples[i].age);
        CHECK(back.samples[i].group == ds.samples[i].group);
        CHECK(back.samples[i].features == ds.samples[i].features);
    }
}

TEST_CASE("provenance comments are written and skipped on load") {
    TempDir dir;
    const Dataset ds = generate(small_cfg(5, 8));
    const std::string path = dir.file("prov.csv");
    save_csv(ds, path, {"seed = 5", "gen.n = 8"});
    const std::string body = read_text(path);
    CHECK(body.rfind("# seed = 5\n", 0) == 0);
    CHECK(body.find("# gen.n = 8\n") != std::string::npos);
    const Dataset back = load_csv(path);
    CHECK(back.size() == ds.size());
}

TEST_CASE("header-only csv loads as an empty dataset") {
    TempDir dir;
    const std::string path = dir.file("empty.csv");
    write_text(path, "id,age,group,f0,f1\n");
    const Dataset ds = load_csv(path);
    CHECK(ds.size() == 0);
    CHECK(ds.feature_dim == 2);
}

TEST_CASE("csv loader reports the offending line") {
    TempDir dir;
    const std::string path = dir.file("bad.csv");

    SUBCASE("unrecognized header") {
        write_text(path, "id,years,group,f0\nx,10,0,1.5\n");
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("line 1"),
                             ParseError);
    }
    SUBCASE("wrong field count") {
        write_text(path, "id,age,group,f0,f1\na,10,0,1.5,2.0\nb,11,1,3.0\n");
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("line 3"),
                             ParseError);
    }
    SUBCASE("age at the ingest ceiling is rejected") {
        write_text(path, "id,age,group,f0\na,115,0,1.5\n");
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("line 2"),
                             ParseError);
    }
    SUBCASE("age above the ceiling is rejected") {
        write_text(path, "id,age,group,f0\na,120,0,1.5\n");
        CHECK_THROWS_AS(load_csv(path), ParseError);
    }
    SUBCASE("negative age is rejected") {
        write_text(path, "id,age,group,f0\na,-1,0,1.5\n");
        CHECK_THROWS_AS(load_csv(path), ParseError);
    }
    SUBCASE("non-numeric feature is rejected") {
        write_text(path, "id,age,group,f0\na,10,0,abc\n");
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("line 2"),
                             ParseError);
    }
    SUBCASE("errors carry the file path") {
        write_text(path, "id,years\n");
        CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("bad.csv"),
                             ParseError);
    }
}

TEST_CASE("loading a missing file raises an io error") {
    CHECK_THROWS_AS(load_csv("/nonexistent/nowhere.csv"), IoError);
}

TEST_CASE("age exactly zero is accepted on ingest") {
    TempDir dir;
    const std::string path = dir.file("zero.csv");
    write_text(path, "id,age,group,f0\na,0,0,1.5\n");
    const Dataset ds = load_csv(path);
    REQUIRE(ds.size() == 1);
    CHECK(ds.samples[0].age == 0.0);
}
