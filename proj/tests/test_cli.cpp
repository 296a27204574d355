#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "selfsim/cli.hpp"

using namespace selfsim::cli;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "selfsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(Cli, SolveBackwardWritesCsvAndReport) {
  auto dir = std::filesystem::temp_directory_path() / "selfsim_cli_test";
  std::filesystem::create_directories(dir);
  auto csv = dir / "profile.csv";
  Outcome o = run_cli({"solve-backward", "--N", "1", "--p", "3", "--chi", "1", "--a",
                       "0.5", "--r-max", "20", "--output", csv.string()});
  ASSERT_EQ(o.code, 0) << o.err;
  std::string text = slurp(csv);
  EXPECT_EQ(text.substr(0, text.find('\n')), "r,u,w,E,phi");
  RunReport rep = parse_report(slurp(dir / "profile.json"));
  EXPECT_EQ(rep.config.command, "solve-backward");
  EXPECT_EQ(rep.table.columns.size(), 5u);
  EXPECT_TRUE(rep.tolerance_flags.at("energy_law"));
  // u oscillates around u*: more than one equilibrium crossing.
  EXPECT_GE(rep.results.at("events").size(), 4u);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli({"solve-backward", "--N", "3", "--p", "1.2", "--a", "1"}).code, 2);
  EXPECT_EQ(run_cli({"solve-backward", "--N", "1", "--p", "3", "--a", "0"}).code, 2);
  Outcome adm = run_cli({"find-critical", "--N", "3", "--p", "2.1"});
  EXPECT_EQ(adm.code, 2);
  EXPECT_NE(adm.err.find("error[DomainError]"), std::string::npos);
  EXPECT_NE(adm.err.find("admissible"), std::string::npos);
  Outcome bad = run_cli({"find-critical", "--N", "1", "--p", "3", "--bracket", "2:3"});
  EXPECT_EQ(bad.code, 4);
  EXPECT_NE(bad.err.find("error[BadBracket]"), std::string::npos);
  EXPECT_EQ(run_cli({"solve-forward", "--N", "1"}).code, 2);
  EXPECT_EQ(run_cli({"solve-forward", "--N", "2", "--p", "2", "--b", "0", "--r-max", "5",
                     "--fit-decay"})
                .code,
            3);
}

TEST(Cli, FindCriticalClosedForm) {
  Outcome o = run_cli({"find-critical", "--N", "1", "--p", "3", "--format", "json"});
  ASSERT_EQ(o.code, 0) << o.err;
  RunReport rep = parse_report(o.out);
  EXPECT_LT(rep.results.at("closed_form_rel_err").get<double>(), 1e-6);
  EXPECT_TRUE(rep.results.contains("bracket_width"));
  EXPECT_TRUE(rep.results.contains("R_c"));
}

TEST(Cli, FindCriticalStraddleInTwoDimensions) {
  Outcome o = run_cli({"find-critical", "--N", "2", "--p", "3", "--format", "json"});
  ASSERT_EQ(o.code, 0) << o.err;
  RunReport rep = parse_report(o.out);
  EXPECT_EQ(rep.results.at("lo").at("set"), "P");
  EXPECT_TRUE(rep.tolerance_flags.at("straddle"));
}

TEST(Cli, ForwardDecayFit) {
  Outcome o = run_cli({"solve-forward", "--p", "2", "--N", "2", "--chi", "1", "--b", "0",
                       "--fit-decay", "--format", "json"});
  ASSERT_EQ(o.code, 0) << o.err;
  RunReport rep = parse_report(o.out);
  EXPECT_NEAR(rep.results.at("decay").at("estimate").get<double>(), -0.25, 0.005);
}

TEST(Cli, SweepRowsArePrefixThenTail) {
  Outcome o = run_cli({"sweep", "--p", "3", "--N", "2", "--a-grid", "log:0.01:100:200"});
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream in(o.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "a,set,R_of_a,terminal_slope,certificate");
  std::string labels;
  int rows = 0;
  while (std::getline(in, line)) {
    auto c1 = line.find(',');
    labels += line.substr(c1 + 1, line.find(',', c1 + 1) - c1 - 1).substr(0, 1);
    ++rows;
  }
  EXPECT_EQ(rows, 200);
  auto first_n = labels.find('N');
  ASSERT_NE(first_n, std::string::npos);
  EXPECT_GT(first_n, 0u);
  EXPECT_EQ(labels.find('P', first_n), std::string::npos);
}

TEST(Cli, DeltaTestForwardFast) {
  Outcome o = run_cli({"delta-test", "--direction", "forward", "--p", "1.8", "--N", "3",
                       "--a", "1", "--format", "json"});
  ASSERT_EQ(o.code, 0) << o.err;
  RunReport rep = parse_report(o.out);
  EXPECT_TRUE(rep.tolerance_flags.at("monotone_decrease"));
  EXPECT_EQ(rep.table.columns[1], "deviation");
}

TEST(Cli, OutputIsDeterministic) {
  std::vector<std::string> args{"solve-forward", "--N", "1", "--p", "3", "--a", "1",
                                "--format", "json"};
  EXPECT_EQ(run_cli(args).out, run_cli(args).out);
  args.back() = "csv";
  EXPECT_EQ(run_cli(args).out, run_cli(args).out);
}

TEST(Cli, ReportRoundTrip) {
  RunConfig c;
  c.command = "reconstruct";
  c.N = 2;
  c.p = 2.0;
  c.a_or_b = -0.5;
  c.bracket = std::pair{0.1, 3.0};
  c.r_max = 17.25;
  RunReport r;
  r.config = c;
  r.derived = {{"m", 1.0 / 3.0}, {"beta", 0.1}};
  r.results = {{"x", 0.1 + 0.2}, {"nested", {{"y", 1e-300}}}};
  r.table.columns = {"a", "b"};
  r.table.rows = {nlohmann::json::array({1.0 / 7.0, nullptr})};
  r.tolerance_flags = {{"ok", true}};
  r.wall_clock_seconds = 0.125;
  EXPECT_EQ(parse_report(serialize(r)), r);
  EXPECT_EQ(to_json(r).at("schema"), 1);
}

TEST(Cli, CsvFormatting) {
  Table t{{"x", "y"}, {nlohmann::json::array({0.1, nullptr})}};
  EXPECT_EQ(to_csv(t), "x,y\n0.10000000000000001,nan\n");
}

TEST(Cli, GridParsing) {
  auto g = parse_grid("log:0.01:100:5");
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 0.01);
  EXPECT_NEAR(g[2], 1.0, 1e-14);
  EXPECT_NEAR(g.back(), 100.0, 1e-12);
  EXPECT_THROW(parse_grid("log:0:1:5"), std::exception);
  EXPECT_THROW(parse_grid("cubic:1:2:3"), std::exception);
}
