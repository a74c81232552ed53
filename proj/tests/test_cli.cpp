#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "deltalab/json_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::current_path() / "cli_scratch";

fs::path write_file(const std::string& name, const std::string& text) {
  fs::create_directories(kDir);
  const auto p = kDir / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + DELTALAB_CLI + "\" " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.push_back("");
    rows.push_back(cols);
  }
  return rows;
}

std::string col(const std::vector<std::vector<std::string>>& rows, std::size_t r, const std::string& name) {
  const auto& h = rows.at(0);
  for (std::size_t i = 0; i < h.size(); ++i)
    if (h[i] == name) return rows.at(r).at(i);
  FAIL("no column " << name);
  return "";
}

}  // namespace

TEST_CASE("validate: full grid, singleton and malformed input") {
  const auto full = write_file("full.json", R"({"set": {"m": 4, "cells": [0,1,2,3,4,5,6,7,8,9,10,11,12,13,14,15]}, "s": 1})");
  const auto out = kDir / "full.out.json";
  REQUIRE(run("validate --spec " + full.string() + " --out " + out.string()) == 0);
  CHECK(deltalab::parse_json(slurp(out))["C"].get<double>() == 3.0);

  const auto one = write_file("one.json", R"({"set": {"m": 6, "cells": [17]}, "s": 0.5})");
  REQUIRE(run("validate --spec " + one.string() + " --out " + out.string()) == 0);
  CHECK(deltalab::parse_json(slurp(out))["C"].get<double>() == 1.0);

  const auto bad = write_file("bad.json", R"({"set": {"m": 4, "cells": [1, 2)");
  CHECK(run("validate --spec " + bad.string()) == 2);
  CHECK(run("validate --spec " + (kDir / "missing.json").string()) == 2);
  CHECK(run("validate") == 2);

  const auto strict = write_file("strict.json", R"({"set": {"m": 4, "cells": [0,1,2,3]}, "s": 1, "C_max": 2})");
  CHECK(run("validate --spec " + strict.string() + " --out " + out.string()) == 1);
}

TEST_CASE("expander: row count, theory column and byte-identical reruns") {
  const auto spec = write_file("exp.json", R"({"A": {"type": "cantor", "keep": 2, "of": 4}, "m_range": [6, 10]})");
  const auto a = kDir / "exp_a.csv", b = kDir / "exp_b.csv";
  REQUIRE(run("expander --spec " + spec.string() + " --seed 4 --out " + a.string()) == 0);
  REQUIRE(run("expander --spec " + spec.string() + " --seed 4 --out " + b.string()) == 0);
  const auto text = slurp(a);
  CHECK(text == slurp(b));
  const auto rows = csv_rows(text);
  REQUIRE(rows.size() == 7);  // header, 5 scales, summary
  CHECK(rows[6][0] == "summary");
  CHECK(col(rows, 6, "theory_exponent") == "0.666667");
  CHECK(col(rows, 1, "m") == "6");
  CHECK(col(rows, 5, "m") == "10");
}

TEST_CASE("theorem: exponent column, empty row and trace") {
  const auto s5 = write_file("th5.json", R"({"m": 8, "s": 0.5, "style": "trainlike"})");
  const auto out5 = kDir / "th5.csv";
  const int rc = run("theorem --spec " + s5.string() + " --seed 1 --out " + out5.string());
  CHECK((rc == 0 || rc == 1));
  auto rows = csv_rows(slurp(out5));
  REQUIRE(rows.size() == 2);
  CHECK(col(rows, 1, "exponent") == "0.375");
  CHECK(fs::exists(kDir / "th5.trace.jsonl"));
  std::ifstream trace(kDir / "th5.trace.jsonl");
  std::string line;
  int lines = 0;
  while (std::getline(trace, line)) {
    CHECK_NOTHROW(deltalab::parse_json(line));
    ++lines;
  }
  CHECK(lines >= 2);

  const auto s6 = write_file("th6.json", R"({"m": 8, "s": 0.6, "style": "random"})");
  const auto out6 = kDir / "th6.csv";
  run("theorem --spec " + s6.string() + " --seed 1 --out " + out6.string());
  rows = csv_rows(slurp(out6));
  REQUIRE(rows.size() == 2);
  CHECK(col(rows, 1, "exponent") == "0.42");

  const auto se = write_file("the.json", R"({"m": 8, "s": 0.5, "style": "empty"})");
  const auto oute = kDir / "the.csv";
  REQUIRE(run("theorem --spec " + se.string() + " --out " + oute.string()) == 0);
  rows = csv_rows(slurp(oute));
  REQUIRE(rows.size() == 2);
  for (const char* c : {"card_T", "card_P", "I", "exponent", "bound", "ratio", "steps_completed"})
    CHECK(col(rows, 1, c) == "0");

  const auto bad = write_file("thb.json", R"({"m": 8, "s": 0.5, "style": "spiral"})");
  CHECK(run("theorem --spec " + bad.string() + " --out " + (kDir / "thb.csv").string()) == 2);
}

TEST_CASE("gen and incidence agree with the library") {
  const auto g = write_file("gen.json", R"({"type": "cantor", "m": 8, "keep": 2, "of": 4})");
  const auto set = kDir / "gen.out.json";
  REQUIRE(run("gen --spec " + g.string() + " --out " + set.string()) == 0);
  CHECK(deltalab::gridset1d_from_json(deltalab::parse_json(slurp(set))).size() == 16);

  const auto inc = write_file("inc.json", R"({
    "squares": {"m": 6, "cells": [[0, 8], [1, 8], [2, 8], [3, 7], [40, 50]]},
    "tubes": {"m": 6, "tubes": [{"slope": [0, 1], "intercept": [1, 8], "mult": 2}]},
    "expect_I": 4})");
  const auto out = kDir / "inc.out.json";
  REQUIRE(run("incidence --spec " + inc.string() + " --out " + out.string()) == 0);
  const auto j = deltalab::parse_json(slurp(out));
  CHECK(j["I"] == 4);
  CHECK(j["I_weighted"] == 8);

  const auto wrong = write_file("inc2.json", R"({
    "squares": {"m": 6, "cells": [[0, 8]]},
    "tubes": {"m": 6, "tubes": [{"slope": 0, "intercept": [1, 8]}]},
    "expect_I": 3})");
  CHECK(run("incidence --spec " + wrong.string() + " --out " + out.string()) == 1);
}

TEST_CASE("sweep output does not depend on the job count") {
  const auto spec = write_file("sweep.json", R"({"m": [8], "s": [0.5], "style": ["trainlike", "random"], "seeds": [0, 1]})");
  const auto a = kDir / "sweep1.csv", b = kDir / "sweep2.csv";
  const int ra = run("sweep --spec " + spec.string() + " --jobs 1 --out " + a.string());
  const int rb = run("sweep --spec " + spec.string() + " --jobs 3 --out " + b.string());
  CHECK(ra == rb);
  CHECK(slurp(a) == slurp(b));
  CHECK(csv_rows(slurp(a)).size() == 5);
}
