#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "uavcran/io/commands.hpp"

using namespace uavcran;
using namespace uavcran::io;
namespace fs = std::filesystem;

namespace {

const std::string kCli = UAVCRAN_CLI_PATH;
const std::string kConfigs = UAVCRAN_CONFIG_DIR;

const char* kSmallConfig = R"([channel]
n_rx = 2
n_tx = 1

[users]
positions = -20 10, 25 -5, 5 30
p_max = 1e8

[uavs]
altitude = 50
positions = -40 -40, 40 40

[timing]
dt = 0.01
sample = 0.1
end = 3

[output]
seed = 7
)";

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("uavcran_io_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_text(const fs::path& path, const std::string& text) {
  write_file(path.string(), text);
  return path;
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = "\"" + kCli + "\" " + args + " > \"" + out.string() + "\" 2> \"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out.string());
  r.err = read_file(err.string());
  return r;
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST(Csv, HeaderAndRowCount) {
  const Scenario s = build_scenario(parse_config(kSmallConfig));
  const SimLog log = run(s);
  const std::string csv = to_csv(log);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,uav_id,x,y,vx,vy,grad_x,grad_y,r_min,s_min");
  EXPECT_EQ(count_lines(csv), 1 + 2 * 31);
  EXPECT_EQ(csv.back(), '\n');
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  const auto rows = parse_csv(csv);
  ASSERT_EQ(rows.size(), 62u);
  EXPECT_EQ(rows[0].uav_id, 1);
  EXPECT_EQ(rows[1].uav_id, 2);
  EXPECT_EQ(rows[0].x, -40.0);
  EXPECT_EQ(rows[1].y, 40.0);
  EXPECT_EQ(rows[0].t, rows[1].t);
  for (std::size_t j = 2; j < rows.size(); j += 2) EXPECT_GT(rows[j].t, rows[j - 2].t);
}

TEST(Csv, NineSignificantDigits) {
  EXPECT_EQ(format_float(1.0 / 3.0), "0.333333333");
  EXPECT_EQ(format_float(2.0), "2");
  EXPECT_EQ(format_float(-40.0), "-40");
  EXPECT_EQ(format_float(1.23456789012e-5), "1.23456789e-05");
  EXPECT_EQ(format_float(123456789012.0), "1.23456789e+11");
}

TEST(Csv, SubsetColumn) {
  SimLog log;
  log.n_uavs = 1;
  SampleRow row;
  row.position = {Vector2(1, 2)};
  row.velocity = {Vector2(0, 0)};
  row.gradient = {Vector2(0, 0)};
  row.s_min = {0, 2};
  row.r_min = 1.5;
  log.rows.push_back(row);
  EXPECT_EQ(to_csv(log), std::string(kCsvHeader) + "\n0,1,1,2,0,0,0,0,1.5,1-3\n");
}

TEST(Csv, MalformedRejected) {
  EXPECT_THROW(parse_csv("t,x\n"), ValidationError);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\n1,2,3\n"), ValidationError);
  EXPECT_THROW(parse_csv(std::string(kCsvHeader) + "\na,1,1,1,1,1,1,1,1,1\n"), ValidationError);
}

TEST(Config, MissingTimingNamed) {
  const std::string text = "[users]\npositions = 0 0\n[uavs]\npositions = 0 0\n";
  try {
    parse_config(text);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("timing"), std::string::npos);
  }
}

TEST(Config, UnknownKeysAndSectionsRejected) {
  const std::string base = kSmallConfig;
  EXPECT_THROW(parse_config(base + "[extra]\nx = 1\n"), ValidationError);
  try {
    parse_config(base + "[solver]\nmax_iter = 5\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("solver.max_iter"), std::string::npos);
  }
  EXPECT_THROW(parse_config("stray = 1\n" + base), ValidationError);
}

TEST(Config, BadValuesNameTheirKey) {
  auto expect_key = [](const std::string& text, const std::string& key) {
    try {
      build_scenario(parse_config(text));
      ADD_FAILURE() << "accepted: " << key;
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
    }
  };
  std::string s = kSmallConfig;
  expect_key(std::string(s).replace(s.find("n_rx = 2"), 8, "n_rx = two"), "channel.n_rx");
  expect_key(std::string(s).replace(s.find("end = 3"), 7, "end = 3.05"), "timing.end");
  expect_key(std::string(s).replace(s.find("p_max = 1e8"), 11, "p_max = 1, 2"), "users.p_max");
  expect_key(std::string(s).replace(s.find("altitude = 50"), 13, "altitude = -5"), "altitude");
  expect_key(s + "[control]\ngains = fancy\n", "control.gains");
  expect_key(s + "[control]\nsteering_eps = -1\n", "steering_eps");
  expect_key(s + "[control]\ngains = manual\nk1 = 0\n", "control");
}

TEST(Config, DefaultsAndPresetFiles) {
  const ScenarioConfig c = parse_config(kSmallConfig);
  EXPECT_EQ(c.channel.alpha, 2.0);
  EXPECT_EQ(c.channel.pl_d0_db, 40.0);
  EXPECT_EQ((c.timing), (Timing{.dt = 0.01, .sample = 0.1, .end = 3.0}));
  EXPECT_EQ(c.solver, SolverSettings{});
  EXPECT_EQ(c.gain_source, GainSource::Paper);
  EXPECT_EQ(c.seed, 7u);
  for (const char* name : {"paper_like.ini", "overhead.ini", "moving_users.ini"})
    EXPECT_NO_THROW(build_scenario(load_config(kConfigs + "/" + name))) << name;
  const Scenario p = build_scenario(load_config(kConfigs + "/paper_like.ini"));
  EXPECT_EQ(p.users, paper_like_scenario(1).users);
  EXPECT_EQ(p.uavs, paper_like_scenario(1).uavs);
}

TEST(Config, RoundTrip) {
  for (const char* name : {"paper_like.ini", "overhead.ini", "moving_users.ini"}) {
    const ScenarioConfig c = load_config(kConfigs + "/" + name);
    const std::string text = emit_config(c);
    EXPECT_EQ(parse_config(text), c) << name;
    EXPECT_EQ(emit_config(parse_config(text)), text) << name;
  }
  ScenarioConfig odd = parse_config(std::string(kSmallConfig) +
                                    "[control]\ngains = lqr\nlqr_weights = 0.1 2 3\nlqr_r = 0.3\nmu = 1234.5\np = 0.7\n"
                                    "[solver]\nwarm_start = false\nstep0 = 0.05\n");
  odd.schedule = {{1.5, 2, {3.25, -1.0 / 3.0, 0.0}}};
  odd.channel.sigma_shadow_db = 1.0 / 7.0;
  EXPECT_EQ(parse_config(emit_config(odd)), odd);
}

TEST(Config, LqrAndManualGains) {
  const Scenario lqr =
      build_scenario(parse_config(std::string(kSmallConfig) + "[control]\ngains = lqr\nlqr_weights = 1 1 1\n"));
  const LqrDesign d = lqr_design(Vector3(1, 1, 1), 1.0);
  EXPECT_EQ(lqr.gains.k1, d.gains.k1);
  EXPECT_EQ(lqr.gains.p, d.gains.k1);
  const Scenario manual =
      build_scenario(parse_config(std::string(kSmallConfig) + "[control]\ngains = manual\nk1 = 1\nk2 = 20\nk3 = 5\n"));
  EXPECT_EQ(manual.gains.k1, 1.0);
  EXPECT_EQ(manual.gains.p, 1.0);
}

TEST(Config, ScheduleIsOneBased) {
  const ScenarioConfig c =
      parse_config(std::string(kSmallConfig).replace(std::string(kSmallConfig).find("p_max"), 0,
                                                     "schedule = 1 2 -10 -40, 2 3 40 40\n"));
  ASSERT_EQ(c.schedule.size(), 2u);
  EXPECT_EQ(c.schedule[0].user, 1);
  EXPECT_EQ(c.schedule[1].position, Position3(40, 40, 0));
}

TEST(Svg, PureFunctionOfCsv) {
  const std::string csv = to_csv(run(build_scenario(parse_config(kSmallConfig))));
  const auto rows = parse_csv(csv);
  const std::string a = trajectory_svg(rows), b = trajectory_svg(parse_csv(csv));
  EXPECT_EQ(a, b);
  EXPECT_EQ(rate_svg(rows), rate_svg(parse_csv(csv)));
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("</svg>"), std::string::npos);
  EXPECT_NE(a.find("UAV 2"), std::string::npos);
  EXPECT_NE(rate_svg(rows).find("polyline"), std::string::npos);
}

TEST(Cli, RunWritesCsvAndSummary) {
  const fs::path dir = scratch_dir("run");
  const fs::path cfg = write_text(dir / "small.ini", kSmallConfig);
  const CliResult r = cli("run \"" + cfg.string() + "\" --out \"" + (dir / "out").string() + "\" --plot", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = read_file((dir / "out/trajectory.csv").string());
  const auto rows = parse_csv(csv);
  EXPECT_EQ(rows.size(), 62u);
  const std::string summary = read_file((dir / "out/summary.txt").string());
  EXPECT_NE(summary.find("final_r_min"), std::string::npos);
  EXPECT_NE(summary.find("uav 2: final_x"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "out/trajectory.svg"));
  EXPECT_TRUE(fs::exists(dir / "out/rate.svg"));
  // regenerating the plots from the CSV gives identical bytes
  const CliResult p = cli("plot \"" + (dir / "out/trajectory.csv").string() + "\" --out \"" +
                              (dir / "replot").string() + "\"",
                          dir);
  ASSERT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(read_file((dir / "replot/trajectory.svg").string()), read_file((dir / "out/trajectory.svg").string()));
  EXPECT_EQ(read_file((dir / "replot/rate.svg").string()), read_file((dir / "out/rate.svg").string()));
}

TEST(Cli, SameSeedGivesIdenticalBytes) {
  const fs::path dir = scratch_dir("determinism");
  const fs::path cfg = write_text(dir / "small.ini", kSmallConfig);
  ASSERT_EQ(cli("run \"" + cfg.string() + "\" --seed 7 --out \"" + (dir / "a").string() + "\"", dir).code, 0);
  ASSERT_EQ(cli("run \"" + cfg.string() + "\" --seed 7 --out \"" + (dir / "b").string() + "\"", dir).code, 0);
  EXPECT_EQ(read_file((dir / "a/trajectory.csv").string()), read_file((dir / "b/trajectory.csv").string()));
}

TEST(Cli, GradientMethodFlag) {
  const fs::path dir = scratch_dir("method");
  const fs::path cfg = write_text(dir / "small.ini", kSmallConfig);
  const CliResult r =
      cli("run \"" + cfg.string() + "\" --method gradient --out \"" + (dir / "g").string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(read_file((dir / "g/summary.txt").string()).find("method: gradient"), std::string::npos);
  const std::string csv = read_file((dir / "g/trajectory.csv").string());
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kCsvHeader);
}

TEST(Cli, MissingTimingIsValidationError) {
  const fs::path dir = scratch_dir("malformed");
  const fs::path cfg = write_text(dir / "bad.ini", "[users]\npositions = 0 0\n[uavs]\npositions = 0 0\n");
  const CliResult r = cli("run \"" + cfg.string() + "\" --out \"" + dir.string() + "\"", dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("timing"), std::string::npos) << r.err;
  EXPECT_EQ(cli("run \"" + (dir / "nope.ini").string() + "\"", dir).code, 1);
}

TEST(Cli, CompareWritesPairs) {
  const fs::path dir = scratch_dir("compare");
  const fs::path cfg = write_text(dir / "small.ini", kSmallConfig);
  const CliResult r = cli("compare \"" + cfg.string() + "\" --seeds 1 --out \"" + (dir / "c").string() + "\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "c/seed_7_controlled.csv"));
  EXPECT_TRUE(fs::exists(dir / "c/seed_7_gradient.csv"));
  const std::string table = read_file((dir / "c/compare.csv").string());
  EXPECT_EQ(table.substr(0, table.find('\n')), "seed,method,final_r_min,t95,arc_length");
  EXPECT_EQ(count_lines(table), 3);
  EXPECT_NE(table.find("\n7,controlled,"), std::string::npos);
  EXPECT_NE(table.find("\n7,gradient,"), std::string::npos);
  EXPECT_EQ(cli("compare \"" + cfg.string() + "\" --seeds 0", dir).code, 1);
}

TEST(Cli, GradcheckOverheadIsExact) {
  const fs::path dir = scratch_dir("gradcheck");
  const CliResult r = cli("gradcheck \"" + kConfigs + "/overhead.ini\" --samples 1", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("worst relative error 0"), std::string::npos) << r.out;
  // direct check of both sides at the overhead geometry
  const Scenario s = build_scenario(load_config(kConfigs + "/overhead.ini"));
  const PhaseField f(1, 1, s.channel, derive_seed(s.seed, SeedStream::Phases));
  const auto covs = CovarianceSet::isotropic(s.p_max, 1);
  const auto g = min_rate_gradient(s.uavs, s.users, build_channels(s.uavs, s.users, s.channel, f), covs, s.channel);
  EXPECT_LT(g.gradient.max_norm(), 1e-8);
  for (int axis = 0; axis < 2; ++axis) {
    auto plus = s.uavs, minus = s.uavs;
    plus[0][axis] += 1e-4;
    minus[0][axis] -= 1e-4;
    const double fd = (min_rate(build_channels(plus, s.users, s.channel, f), covs).r_min -
                       min_rate(build_channels(minus, s.users, s.channel, f), covs).r_min) /
                      2e-4;
    EXPECT_LT(std::abs(fd), 1e-8);
  }
}

TEST(Cli, GradcheckPaperLike) {
  const fs::path dir = scratch_dir("gradcheck_paper");
  const CliResult r = cli("gradcheck \"" + kConfigs + "/paper_like.ini\" --samples 100", dir);
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("checked"), std::string::npos);
}

TEST(Cli, GradcheckCoarseDeltaWarns) {
  const fs::path dir = scratch_dir("gradcheck_coarse");
  const CliResult r = cli("gradcheck \"" + kConfigs + "/overhead.ini\" --samples 1 --delta 1e-1", dir);
  EXPECT_NE(r.err.find("warning"), std::string::npos) << r.err;
  EXPECT_EQ(cli("gradcheck \"" + kConfigs + "/overhead.ini\" --samples 0", dir).code, 1);
}

TEST(Cli, DesignCommand) {
  const fs::path dir = scratch_dir("design");
  const CliResult paper = cli("design --paper-gains", dir);
  EXPECT_EQ(paper.code, 0);
  EXPECT_NE(paper.out.find("k1 = 0.5477"), std::string::npos) << paper.out;
  EXPECT_NE(paper.out.find("k2 = 23.9683"), std::string::npos);
  EXPECT_NE(paper.out.find("k3 = 6.9308"), std::string::npos);
  EXPECT_NE(paper.out.find("p = 0.5477"), std::string::npos);
  EXPECT_NE(paper.out.find("Hurwitz"), std::string::npos);
  const CliResult def = cli("design", dir);
  EXPECT_EQ(def.code, 0) << def.err;
  EXPECT_NE(def.out.find("\nHurwitz"), std::string::npos);
  EXPECT_EQ(cli("design --r 0", dir).code, 1);
  EXPECT_EQ(cli("design --weights 1,-1,1", dir).code, 1);
  EXPECT_EQ(cli("design --weights 2,0.5,1 --r 0.1", dir).code, 0);
}

TEST(Cli, ConfigCommandPrintsCanonicalForm) {
  const fs::path dir = scratch_dir("config");
  const CliResult r = cli("config \"" + kConfigs + "/moving_users.ini\"", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, emit_config(load_config(kConfigs + "/moving_users.ini")));
}

TEST(Cli, UsageErrors) {
  const fs::path dir = scratch_dir("usage");
  EXPECT_NE(cli("", dir).code, 0);
  EXPECT_NE(cli("run", dir).code, 0);
  EXPECT_NE(cli("frobnicate", dir).code, 0);
}
