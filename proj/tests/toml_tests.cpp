#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "idian/common.hpp"
#include "idian/toml_lite.hpp"

using namespace idian;

namespace {

TomlTable parse(const std::string& text) { return TomlTable::parse_string(text, "test"); }

} // namespace

TEST_CASE("scalar kinds parse into their own types") {
    const TomlTable t = parse(
        "[run]\n"
        "flag = true\n"
        "off = false\n"
        "count = 42\n"
        "rate = 0.25\n"
        "big = 1e3\n"
        "neg = -7\n"
        "label = \"hello world\"\n"
        "names = [\"a\", \"b c\", \"d\"]\n");

    CHECK(t.get_bool("run", "flag", false));
    CHECK(!t.get_bool("run", "off", true));
    CHECK(t.get_int("run", "count", 0) == 42);
    CHECK(t.get_int("run", "neg", 0) == -7);
    CHECK(t.get_real("run", "rate", 0.0) == doctest::Approx(0.25));
    CHECK(t.get_real("run", "big", 0.0) == doctest::Approx(1000.0));
    CHECK(t.get_string("run", "label", "") == "hello world");
    CHECK(t.get_string_array("run", "names", {}) ==
          std::vector<std::string>{"a", "b c", "d"});
}

TEST_CASE("absent keys fall back to the default") {
    const TomlTable t = parse("[a]\nx = 1\n");
    CHECK(t.get_int("a", "missing", 9) == 9);
    CHECK(t.get_int("b", "x", 9) == 9); // absent section
    CHECK(t.get_string("a", "missing", "dflt") == "dflt");
    CHECK(t.has("a", "x"));
    CHECK(!t.has("a", "missing"));
    CHECK(!t.has("b", "x"));
}

TEST_CASE("comments and blank lines are ignored") {
    const TomlTable t = parse(
        "# leading comment\n"
        "\n"
        "[sec]   # section comment\n"
        "key = 3 # trailing comment\n"
        "text = \"keep # this\"\n");
    CHECK(t.get_int("sec", "key", 0) == 3);
    CHECK(t.get_string("sec", "text", "") == "keep # this");
}

TEST_CASE("string escapes cover quotes and backslashes") {
    const TomlTable t = parse("[s]\npath = \"a\\\\b\"\nq = \"say \\\"hi\\\"\"\n");
    CHECK(t.get_string("s", "path", "") == "a\\b");
    CHECK(t.get_string("s", "q", "") == "say \"hi\"");
    CHECK_THROWS_AS(parse("[s]\nbad = \"\\n\"\n"), ParseError); // unsupported escape
}

TEST_CASE("integers promote to reals but nothing else converts") {
    const TomlTable t = parse("[n]\nwhole = 5\nfrac = 0.5\n");
    CHECK(t.get_real("n", "whole", 0.0) == 5.0);
    CHECK_THROWS_AS(t.get_int("n", "frac", 0), ConfigError);
    CHECK_THROWS_AS(t.get_bool("n", "whole", false), ConfigError);
    CHECK_THROWS_AS(t.get_string("n", "whole", ""), ConfigError);
    CHECK_THROWS_AS(t.get_string_array("n", "whole", {}), ConfigError);
}

TEST_CASE("type mismatches name the offending key") {
    const TomlTable t = parse("[train]\nrate = \"fast\"\n");
    CHECK_THROWS_WITH_AS(t.get_real("train", "rate", 0.0),
                         "config train.rate: expected float, got string", ConfigError);
}

TEST_CASE("duplicate keys are rejected with a line number") {
    CHECK_THROWS_WITH_AS(parse("[a]\nx = 1\nx = 2\n"), "test:3: duplicate key 'x'",
                         ParseError);
}

TEST_CASE("malformed lines report their position") {
    CHECK_THROWS_AS(parse("[a\n"), ParseError);
    CHECK_THROWS_AS(parse("[]\n"), ParseError);
    CHECK_THROWS_AS(parse("[a]\nnot a pair\n"), ParseError);
    CHECK_THROWS_AS(parse("[a]\n= 3\n"), ParseError);
    CHECK_THROWS_AS(parse("[a]\nx = \n"), ParseError);
    CHECK_THROWS_AS(parse("[a]\nx = \"open\n"), ParseError);
    CHECK_THROWS_AS(parse("[a]\nx = [1, 2]\n"), ParseError); // only string arrays
    CHECK_THROWS_AS(parse("[a]\nx = zeppelin\n"), ParseError);

    try {
        parse("[a]\n\nx = ?\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("test:3") != std::string::npos);
    }
}

TEST_CASE("unknown keys and sections fail the schema check") {
    const TomlTable t = parse("[data]\nrate = 1\n[extra]\nz = 2\n");
    CHECK_NOTHROW(t.check_known("data", {"rate", "other"}));
    CHECK_THROWS_WITH_AS(t.check_known("data", {"other"}),
                         "config data.rate: unknown key", ConfigError);
    CHECK_NOTHROW(t.check_known("absent", {"whatever"}));
    CHECK_NOTHROW(t.check_known_sections({"data", "extra"}));
    CHECK_THROWS_WITH_AS(t.check_known_sections({"data"}),
                         "config section [extra] unknown", ConfigError);
}

TEST_CASE("arrays allow emptiness and a trailing comma") {
    const TomlTable t = parse("[a]\nxs = []\nys = [\"a\", \"b\",]\n");
    CHECK(t.get_string_array("a", "xs", {"sentinel"}).empty());
    CHECK(t.get_string_array("a", "ys", {}) == std::vector<std::string>{"a", "b"});
}

TEST_CASE("files parse like strings and missing files fail") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "idian_toml_test";
    fs::create_directories(dir);
    const fs::path file = dir / "cfg.toml";
    {
        std::ofstream out(file);
        out << "[x]\ny = 7\n";
    }
    const TomlTable t = TomlTable::parse_file(file);
    CHECK(t.get_int("x", "y", 0) == 7);
    CHECK_THROWS_AS(TomlTable::parse_file(dir / "nope.toml"), IoError);
    fs::remove_all(dir);
}

TEST_CASE("keys before any section land in the unnamed section") {
    const TomlTable t = parse("orphan = 1\n[a]\nx = 2\n");
    CHECK(t.get_int("", "orphan", 0) == 1);
    CHECK_THROWS_AS(t.check_known_sections({"a"}), ConfigError);
}
