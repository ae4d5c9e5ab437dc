#include "twistguide/error.hpp"
#include "twistguide/io.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace twg;

TEST_CASE("numbers are written with 17 significant digits")
{
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(1.0) == "1");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("JSON dump is canonical")
{
  const json a = {{"b", 0.1}, {"a", {1, 2, 3}}, {"c", {{"z", true}, {"y", nullptr}}}};
  const std::string s = dump_json(a);
  CHECK(s.find("\"a\"") < s.find("\"b\""));
  CHECK(s.find("0.10000000000000001") != std::string::npos);
  CHECK(s.find("[1, 2, 3]") != std::string::npos);
  CHECK(json::parse(s) == a);
  CHECK(dump_json(json{{"x", std::numeric_limits<double>::infinity()}}).find("\"inf\"") != std::string::npos);
  CHECK(config_hash(a) == config_hash(json::parse(s)));
  CHECK(config_hash(a) != config_hash(json{{"b", 0.2}}));
}

TEST_CASE("column tables")
{
  const std::string t = format_columns({"x", "y"}, {{1.0, 2.0}, {0.5, 0.25}});
  CHECK(t == "# x y\n1 0.5\n2 0.25\n");
}

TEST_CASE("shape parsing")
{
  const auto r = parse_shape(json{{"shape", "rectangle"}, {"width", 2.0}, {"height", 1.0}, {"offset", {0.1, 0.0}}}, "s");
  CHECK(r.contains(Vec2(1.0, 0.0)));
  CHECK_FALSE(r.contains(Vec2(-1.0, 0.0)));
  CHECK(parse_shape(json{{"shape", "disk"}, {"radius", 1.0}}, "s").is_centered_disk());
  CHECK_THROWS_AS(parse_shape(json{{"shape", "hexagon"}}, "s"), ConfigError);
  CHECK_THROWS_AS(parse_shape(json{{"shape", "rectangle"}, {"width", -1.0}, {"height", 1.0}}, "s"), ConfigError);
  CHECK_THROWS_AS(parse_shape(json{{"shape", "rectangle"}, {"width", 1.0}, {"height", 1.0}, {"depth", 2}}, "s"),
                  ConfigError);
}

TEST_CASE("twist and perturbation parsing")
{
  CHECK(parse_twist(0.5, "t").is_constant());
  const auto b = parse_twist(json{{"mean", 0.5}, {"cos", {0.3}}}, "t");
  CHECK(b(0.0) == doctest::Approx(0.8));
  CHECK(to_json(b) == to_json(parse_twist(to_json(b), "t")));
  const auto eps = parse_decay(json{{"family", "power"}, {"c", 2.0}, {"alpha", 0.8}}, "p");
  CHECK(eps(0.0) == doctest::Approx(2.0));
  CHECK(to_json(eps) == to_json(parse_decay(to_json(eps), "p")));
  CHECK_THROWS_AS(parse_decay(json{{"family", "power"}, {"c", 1.0}, {"alpha", -0.5}}, "p"), ConfigError);
  CHECK_THROWS_AS(parse_decay(json{{"family", "cauchy"}}, "p"), ConfigError);
  CHECK_THROWS_AS(parse_twist("fast", "t"), ConfigError);
  const auto eta = parse_periodic(json{{"mean", 1.0}, {"cos", {0.5}}}, "e");
  CHECK(eta.mean == doctest::Approx(1.0));
  CHECK(eta.max_abs() == doctest::Approx(1.5));
}

TEST_CASE("file errors are config errors")
{
  const auto dir = std::filesystem::temp_directory_path() / "twg_io_test";
  std::filesystem::create_directories(dir);
  CHECK_THROWS_AS(read_json_file(dir / "missing.json"), ConfigError);
  {
    std::ofstream(dir / "bad.json") << "{\"schema\": ";
  }
  CHECK_THROWS_AS(read_json_file(dir / "bad.json"), ConfigError);
  write_text_file(dir / "sub" / "x.txt", "hello\n");
  CHECK(std::filesystem::exists(dir / "sub" / "x.txt"));
  std::filesystem::remove_all(dir);
}
