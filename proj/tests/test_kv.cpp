#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>

#include "agekit/errors.hpp"
#include "agekit/kv.hpp"

using namespace agekit;

namespace {

std::string temp_path(const char* name) {
    return std::string("kv_test_") + name + ".tmp";
}

} // namespace

TEST_CASE("format_double is shortest round-trip text") {
    CHECK(format_double(0.05) == "0.05");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5) == "-2.5");
    CHECK(format_double(0.1 + 0.2) == "0.30000000000000004");
    CHECK(parse_double_text(format_double(1.0 / 3.0), "x") == 1.0 / 3.0);
    CHECK(parse_double_text(format_double(1e-300), "x") == 1e-300);
}

TEST_CASE("serialize and parse round-trip all value shapes") {
    KvDoc doc;
    doc.add_u64("seed", 42);
    doc.add_i64("count", -3);
    doc.add_double("rate", 0.005);
    doc.add_token("kind", "model");
    doc.add_double_array("weights", {1.5, -0.25, 3.0});
    doc.add_int_array("dims", {64, 32});
    doc.add_double_array("empty", {});

    const std::string text = doc.serialize();
    KvDoc back = KvDoc::parse(text);
    CHECK(back.get_u64("seed") == 42);
    CHECK(back.get_i64("count") == -3);
    CHECK(back.get_double("rate") == 0.005);
    CHECK(back.get_token("kind") == "model");
    CHECK(back.get_double_array("weights") ==
          std::vector<double>{1.5, -0.25, 3.0});
    CHECK(back.get_int_array("dims") == std::vector<long long>{64, 32});
    CHECK(back.get_double_array("empty").empty());
    // reserialization is byte-stable
    CHECK(back.serialize() == text);
}

TEST_CASE("insertion order is preserved") {
    KvDoc doc;
    doc.add_token("zebra", "first");
    doc.add_token("apple", "second");
    CHECK(doc.entries()[0].first == "zebra");
    CHECK(doc.entries()[1].first == "apple");
    CHECK(doc.serialize() == "zebra = first\napple = second\n");
}

TEST_CASE("comments and blank lines are skipped") {
    KvDoc doc = KvDoc::parse("# a comment\n\n  # indented comment\nx = 1\n");
    CHECK(doc.get_i64("x") == 1);
    CHECK(doc.entries().size() == 1);
}

TEST_CASE("parse errors carry line numbers and key names") {
    CHECK_THROWS_WITH_AS(KvDoc::parse("x = 1\nx = 2\n"),
                         doctest::Contains("line 2"), ParseError);
    CHECK_THROWS_WITH_AS(KvDoc::parse("no equals sign\n"),
                         doctest::Contains("line 1"), ParseError);
    CHECK_THROWS_WITH_AS(KvDoc::parse("bad key! = 1\n"),
                         doctest::Contains("line 1"), ParseError);
    CHECK_THROWS_WITH_AS(KvDoc::parse(" = 1\n"), doctest::Contains("line 1"),
                         ParseError);

    KvDoc doc = KvDoc::parse("x = hello\n");
    CHECK_THROWS_WITH_AS(doc.get_double("x"), doctest::Contains("x"),
                         ParseError);
    CHECK_THROWS_WITH_AS(doc.get_double("missing"),
                         doctest::Contains("missing"), ParseError);
    CHECK_THROWS_WITH_AS(doc.get_double_array("x"), doctest::Contains("x"),
                         ParseError);
}

TEST_CASE("duplicate insertion is rejected") {
    KvDoc doc;
    doc.add_u64("k", 1);
    CHECK_THROWS_AS(doc.add_u64("k", 2), InvalidArgument);
}

TEST_CASE("scalar text parsers reject trailing garbage and bad signs") {
    CHECK(parse_double_text("-1.5e3", "v") == -1500.0);
    CHECK(parse_i64_text("-12", "v") == -12);
    CHECK(parse_u64_text("18446744073709551615", "v") == 18446744073709551615ULL);
    CHECK_THROWS_AS(parse_double_text("1.5x", "v"), ParseError);
    CHECK_THROWS_AS(parse_double_text("", "v"), ParseError);
    CHECK_THROWS_AS(parse_i64_text("1.5", "v"), ParseError);
    CHECK_THROWS_AS(parse_u64_text("-1", "v"), ParseError);
}

TEST_CASE("file round trip and io errors") {
    const std::string path = temp_path("roundtrip");
    KvDoc doc;
    doc.add_double("pi", 3.141592653589793);
    doc.add_double_array("xs", {1e-17, 2.5});
    doc.save(path);
    KvDoc back = KvDoc::load(path);
    CHECK(back.get_double("pi") == 3.141592653589793);
    CHECK(back.get_double_array("xs") == std::vector<double>{1e-17, 2.5});
    std::remove(path.c_str());

    CHECK_THROWS_AS(KvDoc::load("definitely_missing_file.kv"), IoError);
}

TEST_CASE("array syntax errors name the field") {
    CHECK_THROWS_WITH_AS(KvDoc::parse("xs = [1, 2\n").get_double_array("xs"),
                         doctest::Contains("xs"), ParseError);
    KvDoc doc = KvDoc::parse("xs = [1, , 2]\n");
    CHECK_THROWS_WITH_AS(doc.get_double_array("xs"),
                         doctest::Contains("empty array element"), ParseError);
}
