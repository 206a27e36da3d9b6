#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "agekit/calibration.hpp"
#include "agekit/errors.hpp"
#include "agekit/rng.hpp"

using namespace agekit;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("agekit_calib_test_" + std::to_string(::getpid()));
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

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in),
            std::istreambuf_iterator<char>()};
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
}

// Predictions whose normalized residual (mu - y) / sigma is exactly N(0,1):
// the ideal calibrated-model regime.
std::vector<Prediction> gaussian_preds(std::size_t n, std::uint64_t seed,
                                       double mu_lo = 25.0,
                                       double mu_hi = 60.0) {
    Rng rng(seed);
    std::vector<Prediction> preds;
    preds.reserve(n);
    while (preds.size() < n) {
        Prediction p;
        p.mu = rng.uniform(mu_lo, mu_hi);
        p.sigma = rng.uniform(0.5, 2.5);
        const double z = rng.normal();
        if (std::abs(z) > 5.0) {
            continue; // keep ages safely inside [0, 115)
        }
        p.age = p.mu - p.sigma * z;
        preds.push_back(p);
    }
    return preds;
}

double gaussian_pdf(double x, double mu, double sd) {
    const double z = (x - mu) / sd;
    return std::exp(-0.5 * z * z) /
           (sd * std::numbers::sqrt2 * std::sqrt(std::numbers::pi));
}

// Composite Simpson integral of the piecewise density over [a, b]. The
// density's value AT mu belongs to the upper side, so when a half-interval
// ends exactly at mu the endpoint is sampled one ulp to the left; otherwise
// the jump leaks into the left half's integral at O(h).
double simpson(double a, double b, std::size_t intervals, double mu,
               double sigma, double lt, double ut) {
    const double mu_left =
        std::nextafter(mu, -std::numeric_limits<double>::infinity());
    auto f = [&](double x) {
        if (x == mu && b <= mu) {
            x = mu_left;
        }
        return piecewise_pdf(x, mu, sigma, lt, ut);
    };
    const double h = (b - a) / static_cast<double>(intervals);
    double acc = f(a) + f(b);
    for (std::size_t i = 1; i < intervals; ++i) {
        acc += f(a + h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
}

} // namespace

TEST_CASE("quantile follows the type-7 interpolation rule") {
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == 2.5);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.0) == 1.0);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 1.0) == 4.0);
    CHECK(quantile({1.0, 2.0, 3.0, 4.0}, 0.25) == 1.75);
    CHECK(quantile({4.0, 1.0, 3.0, 2.0}, 0.25) == 1.75); // sorts internally
    CHECK(quantile({7.5}, 0.3) == 7.5);
    CHECK(quantile({10.0, 20.0}, 0.75) == 17.5);
    // h = (n-1)p = 4*0.9 = 3.6 on five points
    CHECK(quantile({0.0, 1.0, 2.0, 3.0, 10.0}, 0.9) ==
          doctest::Approx(3.0 + 0.6 * 7.0).epsilon(1e-15));
    CHECK_THROWS_AS(quantile({}, 0.5), InvalidArgument);
    CHECK_THROWS_AS(quantile({1.0}, -0.1), InvalidArgument);
    CHECK_THROWS_AS(quantile({1.0}, 1.1), InvalidArgument);
}

TEST_CASE("calibration options are validated") {
    CalibOptions opt;
    opt.target_fpr = 0.0;
    CHECK_THROWS_AS(opt.validate(), InvalidArgument);
    opt = CalibOptions{};
    opt.target_fpr = 0.5;
    CHECK_THROWS_AS(opt.validate(), InvalidArgument);
    opt = CalibOptions{};
    opt.bucket_width = 0.0;
    CHECK_THROWS_AS(opt.validate(), InvalidArgument);
    opt = CalibOptions{};
    opt.side_split = 0.0;
    CHECK_THROWS_AS(opt.validate(), InvalidArgument);
    opt = CalibOptions{};
    opt.side_split = 1.0;
    CHECK_NOTHROW(opt.validate()); // whole budget on the lower side is legal
    opt = CalibOptions{};
    opt.min_bucket_n = 0;
    CHECK_THROWS_AS(opt.validate(), InvalidArgument);
}

TEST_CASE("a perfect predictor calibrates to zero-width ranges") {
    Rng rng(3);
    std::vector<Prediction> preds;
    for (int i = 0; i < 2000; ++i) {
        Prediction p;
        p.age = rng.uniform(10.0, 40.0);
        p.mu = p.age;
        p.sigma = rng.uniform(0.5, 3.0);
        preds.push_back(p);
    }
    const ThresholdTable table = calibrate(preds, CalibOptions{});
    for (const ThresholdBucket& b : table.buckets) {
        CHECK(b.lt == 0.0);
        CHECK(b.ut == 0.0);
    }
    CHECK(table.fallback_lt == 0.0);
    CHECK(table.fallback_ut == 0.0);
    const AgeRange r = range_for(25.0, 2.0, table);
    CHECK(r.lo == 25.0);
    CHECK(r.hi == 25.0);
    CHECK(r.width() == 0.0);
}

TEST_CASE("standard-normal residuals recover the familiar z thresholds") {
    const auto preds = gaussian_preds(100000, 77);
    CalibOptions opt;
    opt.target_fpr = 0.05; // 2.5% per side -> z = 1.96
    const ThresholdTable table = calibrate(preds, opt);
    REQUIRE(table.buckets.size() == 7); // [25,30) .. [55,60)
    for (const ThresholdBucket& b : table.buckets) {
        REQUIRE(b.n > 5000);
        CHECK(b.lt == doctest::Approx(1.959963984540053).epsilon(0.05));
        CHECK(b.ut == doctest::Approx(1.959963984540053).epsilon(0.05));
    }
}

TEST_CASE("held-out coverage lands on the target false-positive rate") {
    const auto calib = gaussian_preds(100000, 101);
    CalibOptions opt;
    opt.target_fpr = 0.05;
    const ThresholdTable table = calibrate(calib, opt);

    const auto held_out = gaussian_preds(100000, 202);
    std::size_t outside = 0;
    for (const Prediction& p : held_out) {
        const AgeRange r = range_for(p.mu, p.sigma, table);
        if (p.age < r.lo || p.age > r.hi) {
            outside++;
        }
    }
    const double fpr =
        static_cast<double>(outside) / static_cast<double>(held_out.size());
    CHECK(fpr == doctest::Approx(0.05).epsilon(0.12));
}

TEST_CASE("tighter targets can only widen the thresholds") {
    const auto preds = gaussian_preds(60000, 55);
    CalibOptions loose;
    loose.target_fpr = 0.1;
    CalibOptions tight;
    tight.target_fpr = 0.01;
    const ThresholdTable tl = calibrate(preds, loose);
    const ThresholdTable tt = calibrate(preds, tight);
    REQUIRE(tl.buckets.size() == tt.buckets.size());
    for (std::size_t i = 0; i < tl.buckets.size(); ++i) {
        CHECK(tt.buckets[i].lt >= tl.buckets[i].lt);
        CHECK(tt.buckets[i].ut >= tl.buckets[i].ut);
    }
    CHECK(tt.fallback_lt >= tl.fallback_lt);
}

TEST_CASE("scaling every sigma rescales thresholds inversely") {
    const auto preds = gaussian_preds(20000, 31);
    std::vector<Prediction> scaled = preds;
    for (Prediction& p : scaled) {
        p.sigma *= 2.0;
    }
    const ThresholdTable a = calibrate(preds, CalibOptions{});
    const ThresholdTable b = calibrate(scaled, CalibOptions{});
    REQUIRE(a.buckets.size() == b.buckets.size());
    for (std::size_t i = 0; i < a.buckets.size(); ++i) {
        CHECK(b.buckets[i].n == a.buckets[i].n); // sigma never moves buckets
        CHECK(b.buckets[i].lt ==
              doctest::Approx(a.buckets[i].lt * 0.5).epsilon(1e-12));
        CHECK(b.buckets[i].ut ==
              doctest::Approx(a.buckets[i].ut * 0.5).epsilon(1e-12));
    }
}

TEST_CASE("side budget split moves the quantile levels") {
    const auto preds = gaussian_preds(60000, 91);
    CalibOptions opt;
    opt.target_fpr = 0.1;
    opt.side_split = 0.8; // 8% of escapes below, 2% above
    const ThresholdTable table = calibrate(preds, opt);
    for (const ThresholdBucket& b : table.buckets) {
        // z_{0.92} = 1.405 on the low side, z_{0.98} = 2.054 on the high side
        CHECK(b.lt == doctest::Approx(1.4050715603096329).epsilon(0.07));
        CHECK(b.ut == doctest::Approx(2.0537489106318225).epsilon(0.07));
    }
}

TEST_CASE("biased predictors clamp the unused side at zero") {
    Rng rng(7);
    std::vector<Prediction> preds;
    for (int i = 0; i < 1000; ++i) {
        Prediction p;
        p.age = rng.uniform(20.0, 30.0);
        p.mu = p.age + 5.0; // always over-predicts
        p.sigma = 1.0;
        preds.push_back(p);
    }
    const ThresholdTable table = calibrate(preds, CalibOptions{});
    for (const ThresholdBucket& b : table.buckets) {
        if (b.n == 0) {
            continue;
        }
        CHECK(b.lt == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(b.ut == 0.0); // the (y - mu) side is all-negative, clamped
    }
    CHECK(table.fallback_ut == 0.0);
}

TEST_CASE("sparsely populated in-span buckets fall back to the globals") {
    Rng rng(13);
    std::vector<Prediction> preds;
    // two dense clusters with an empty gap between them
    for (int i = 0; i < 400; ++i) {
        Prediction p;
        p.mu = rng.uniform(10.0, 15.0);
        p.sigma = 1.0;
        p.age = p.mu - rng.normal();
        preds.push_back(p);
        Prediction q;
        q.mu = rng.uniform(30.0, 35.0);
        q.sigma = 1.0;
        q.age = q.mu - rng.normal();
        preds.push_back(q);
    }
    const ThresholdTable table = calibrate(preds, CalibOptions{});
    REQUIRE(table.buckets.size() == 5); // [10,15) .. [30,35), contiguous
    CHECK(table.buckets.front().lo == 10.0);
    CHECK(table.buckets.back().hi == 35.0);
    for (std::size_t i = 1; i < table.buckets.size(); ++i) {
        CHECK(table.buckets[i].lo == table.buckets[i - 1].hi);
    }
    for (std::size_t i = 1; i + 1 < table.buckets.size(); ++i) {
        CHECK(table.buckets[i].n == 0);
        CHECK(table.buckets[i].lt == table.fallback_lt);
        CHECK(table.buckets[i].ut == table.fallback_ut);
    }
    CHECK(table.buckets.front().n == 400);
    CHECK(table.buckets.back().n == 400);
}

TEST_CASE("calibrate validates its inputs") {
    CalibOptions opt;
    std::vector<Prediction> few(10, Prediction{30.0, 1.0, 29.0, 0});
    CHECK_THROWS_AS(calibrate(few, opt), InvalidArgument); // below min_bucket_n

    std::vector<Prediction> preds(100, Prediction{30.0, 1.0, 29.0, 0});
    preds[42].sigma = 0.0;
    CHECK_THROWS_WITH_AS(calibrate(preds, opt), doctest::Contains("42"),
                         InvalidArgument);
    // truths are not re-checked against the ingest ceiling here; that
    // contract lives at the dataset boundary
    preds[42] = {30.0, 1.0, 115.0, 0};
    CHECK_NOTHROW(calibrate(preds, opt));
    preds[42] = {std::nan(""), 1.0, 29.0, 0};
    CHECK_THROWS_AS(calibrate(preds, opt), InvalidArgument);
}

TEST_CASE("bucket lookup respects half-open boundaries and the span") {
    ThresholdTable table;
    table.bucket_width = 5.0;
    table.buckets = {
        {20.0, 25.0, 1.0, 1.0, 100},
        {25.0, 30.0, 2.0, 2.0, 100},
    };
    table.fallback_lt = 3.0;
    table.fallback_ut = 4.0;
    CHECK(table.bucket_for(20.0) == 0);
    CHECK(table.bucket_for(24.999999) == 0);
    CHECK(table.bucket_for(25.0) == 1); // boundary opens the next bucket
    CHECK(table.bucket_for(29.999999) == 1);
    CHECK(table.bucket_for(30.0) == -1);
    CHECK(table.bucket_for(19.999999) == -1);

    const AgeRange inside = range_for(26.0, 2.0, table);
    CHECK(inside.bucket_index == 1);
    CHECK(inside.lo == 26.0 - 2.0 * 2.0);
    CHECK(inside.hi == 26.0 + 2.0 * 2.0);

    const AgeRange outside = range_for(40.0, 2.0, table);
    CHECK(outside.bucket_index == -1);
    CHECK(outside.lo == 40.0 - 2.0 * 3.0);
    CHECK(outside.hi == 40.0 + 2.0 * 4.0);
}

TEST_CASE("range_for reproduces the worked example") {
    ThresholdTable table;
    table.bucket_width = 5.0;
    table.buckets = {{30.0, 35.0, 1.5, 2.0, 500}};
    table.fallback_lt = 2.5;
    table.fallback_ut = 2.5;
    const AgeRange r = range_for(30.0, 2.0, table);
    CHECK(r.lo == 27.0);
    CHECK(r.hi == 34.0);
    CHECK(r.mu == 30.0);
    CHECK(r.sigma == 2.0);
    CHECK(r.width() == 7.0);
}

TEST_CASE("range_for rejects degenerate inputs") {
    ThresholdTable table;
    table.buckets = {{25.0, 30.0, 1.0, 1.0, 100}};
    CHECK_THROWS_AS(range_for(27.0, 0.0, table), InvalidArgument);
    CHECK_THROWS_AS(range_for(27.0, -1.0, table), InvalidArgument);
    CHECK_THROWS_AS(range_for(std::nan(""), 1.0, table), InvalidArgument);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(range_for(27.0, inf, table), InvalidArgument);
}

TEST_CASE("symmetric piecewise density is exactly gaussian") {
    for (double x : {10.0, 22.5, 30.0, 31.7, 55.0}) {
        CHECK(piecewise_pdf(x, 30.0, 2.0, 1.5, 1.5) ==
              doctest::Approx(gaussian_pdf(x, 30.0, 3.0)).epsilon(1e-12));
    }
}

TEST_CASE("piecewise density integrates to one") {
    struct Case {
        double mu, sigma, lt, ut;
    };
    for (const Case& c : {Case{30.0, 2.0, 1.5, 2.5}, Case{18.0, 0.7, 0.4, 3.0},
                          Case{60.0, 5.0, 2.0, 0.3}}) {
        const double left_span = 12.0 * c.sigma * c.lt;
        const double right_span = 12.0 * c.sigma * c.ut;
        // split at mu: each half is smooth, Simpson converges fast
        const double mass =
            simpson(c.mu - left_span, c.mu, 20000, c.mu, c.sigma, c.lt, c.ut) +
            simpson(c.mu, c.mu + right_span, 20000, c.mu, c.sigma, c.lt, c.ut);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("density jump at the mean is the threshold ratio") {
    const double mu = 40.0, sigma = 2.0, lt = 1.0, ut = 4.0;
    const double at_mu = piecewise_pdf(mu, mu, sigma, lt, ut);
    const double just_left = piecewise_pdf(mu - 1e-12, mu, sigma, lt, ut);
    // x >= mu uses the upper std, so the left limit is ut/lt times higher
    CHECK(just_left / at_mu == doctest::Approx(ut / lt).epsilon(1e-9));
}

TEST_CASE("piecewise density rejects non-positive parameters") {
    CHECK_THROWS_AS(piecewise_pdf(30.0, 30.0, 0.0, 1.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(piecewise_pdf(30.0, 30.0, 1.0, 0.0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(piecewise_pdf(30.0, 30.0, 1.0, 1.0, -2.0),
                    InvalidArgument);
    CHECK_THROWS_AS(piecewise_pdf(std::nan(""), 30.0, 1.0, 1.0, 1.0),
                    InvalidArgument);
}

TEST_CASE("table files round-trip bit-exactly") {
    TempDir dir;
    const auto preds = gaussian_preds(5000, 19);
    const ThresholdTable table = calibrate(preds, CalibOptions{});

    TableArtifact art;
    art.table = table;
    art.seed = 19;
    art.provenance = {{"seed", "19"}, {"calib.target_fpr", "0.005"}};

    ThresholdTable baseline = table;
    for (ThresholdBucket& b : baseline.buckets) {
        b.lt *= 1.5; // any distinct values; persistence is what is tested
        b.ut *= 1.5;
    }
    art.baseline = baseline;

    const std::string path = dir.file("table.kv");
    save_table(art, path);
    const TableArtifact back = load_table(path);

    CHECK(back.seed == art.seed);
    CHECK(back.provenance == art.provenance);
    REQUIRE(back.table.buckets.size() == table.buckets.size());
    for (std::size_t i = 0; i < table.buckets.size(); ++i) {
        CHECK(back.table.buckets[i].lo == table.buckets[i].lo);
        CHECK(back.table.buckets[i].hi == table.buckets[i].hi);
        CHECK(back.table.buckets[i].lt == table.buckets[i].lt);
        CHECK(back.table.buckets[i].ut == table.buckets[i].ut);
        CHECK(back.table.buckets[i].n == table.buckets[i].n);
    }
    CHECK(back.table.fallback_lt == table.fallback_lt);
    CHECK(back.table.fallback_ut == table.fallback_ut);
    CHECK(back.table.target_fpr == table.target_fpr);
    CHECK(back.table.side_split == table.side_split);
    CHECK(back.table.min_bucket_n == table.min_bucket_n);
    REQUIRE(back.baseline.has_value());
    CHECK(back.baseline->buckets.size() == baseline.buckets.size());
    CHECK(back.baseline->buckets[0].lt == baseline.buckets[0].lt);

    const std::string again = dir.file("table2.kv");
    save_table(back, again);
    CHECK(read_text(path) == read_text(again));
}

TEST_CASE("artifacts without a baseline stay baseline-free") {
    TempDir dir;
    const auto preds = gaussian_preds(5000, 23);
    TableArtifact art;
    art.table = calibrate(preds, CalibOptions{});
    const std::string path = dir.file("nobase.kv");
    save_table(art, path);
    const TableArtifact back = load_table(path);
    CHECK_FALSE(back.baseline.has_value());
}

TEST_CASE("table loader rejects broken files") {
    TempDir dir;
    const auto preds = gaussian_preds(5000, 29);
    TableArtifact art;
    art.table = calibrate(preds, CalibOptions{});
    const std::string good = dir.file("good.kv");
    save_table(art, good);
    const std::string body = read_text(good);

    SUBCASE("negative threshold") {
        std::string tampered = body;
        const auto pos = tampered.find("bucket.0.lt = ");
        REQUIRE(pos != std::string::npos);
        const auto eol = tampered.find('\n', pos);
        tampered.replace(pos, eol - pos, "bucket.0.lt = -0.5");
        const std::string path = dir.file("neg.kv");
        write_text(path, tampered);
        CHECK_THROWS_WITH_AS(load_table(path), doctest::Contains("bucket.0"),
                             ParseError);
    }
    SUBCASE("missing fallback") {
        std::string tampered;
        for (std::size_t at = 0, line_end = 0; at < body.size();
             at = line_end + 1) {
            line_end = body.find('\n', at);
            const std::string line = body.substr(at, line_end - at);
            if (line.rfind("fallback_lt", 0) != 0) {
                tampered += line + "\n";
            }
        }
        const std::string path = dir.file("nofall.kv");
        write_text(path, tampered);
        CHECK_THROWS_WITH_AS(load_table(path),
                             doctest::Contains("fallback_lt"), ParseError);
    }
    SUBCASE("unknown key") {
        const std::string path = dir.file("unknown.kv");
        write_text(path, body + "surprise = 1\n");
        CHECK_THROWS_WITH_AS(load_table(path), doctest::Contains("surprise"),
                             ParseError);
    }
    SUBCASE("non-contiguous buckets") {
        std::string tampered = body;
        const auto pos = tampered.find("bucket.1.lo = ");
        REQUIRE(pos != std::string::npos);
        const auto eol = tampered.find('\n', pos);
        tampered.replace(pos, eol - pos, "bucket.1.lo = 999");
        const std::string path = dir.file("gap.kv");
        write_text(path, tampered);
        CHECK_THROWS_AS(load_table(path), ParseError);
    }
    SUBCASE("format version") {
        std::string tampered = body;
        const auto pos = tampered.find("format_version = 1");
        REQUIRE(pos != std::string::npos);
        tampered.replace(pos, 18, "format_version = 3");
        const std::string path = dir.file("ver.kv");
        write_text(path, tampered);
        CHECK_THROWS_WITH_AS(load_table(path),
                             doctest::Contains("format_version"), ParseError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_table(dir.file("absent.kv")), IoError);
    }
}
