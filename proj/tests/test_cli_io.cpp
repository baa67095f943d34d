#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "bowtie/io.hpp"

using namespace bowtie;
namespace fs = std::filesystem;

namespace {

std::string config_error(const json& doc, const std::string& cmd) {
  try {
    parse_config(doc, cmd);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bowtie_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BOWTIE_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

}  // namespace

TEST(Config, DefaultsAndDegrees) {
  const RunConfig c = parse_config(json{{"command", "singular"}, {"geometry", {{"alpha1_deg", 60}, {"alpha2_deg", 90}}}},
                                   "singular");
  EXPECT_NEAR(c.alpha1, pi / 3, 1e-15);
  EXPECT_NEAR(c.alpha2, pi / 2, 1e-15);
  EXPECT_EQ(c.grid.points, GridConfig{}.points);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_EQ(c.sweep.eps_grid, SweepPlan{}.eps_grid);
}

TEST(Config, ErrorsNameTheKeyPath) {
  EXPECT_EQ(config_error({{"command", "solve"}, {"geometry", {{"alpha1_deg", 90}, {"alpha2_deg", 90}}}}, "solve"),
            "missing required key 'geometry.eps'");
  EXPECT_EQ(config_error({{"command", "sweep"}, {"solver", {{"mesh", {{"ordr", 8}}}}}}, "sweep"),
            "unknown key 'solver.mesh.ordr'");
  EXPECT_EQ(config_error({{"command", "sweep"}, {"colour", 1}}, "sweep"), "unknown key 'colour'");
  EXPECT_EQ(config_error({{"geometry", {}}}, "singular"), "missing required key 'command'");
  EXPECT_NE(config_error({{"command", "sweep"}}, "solve").find("'sweep'"), std::string::npos);
  EXPECT_EQ(config_error({{"command", "sweep"}, {"grid", {{"points", 2.5}}}}, "sweep"), "'grid.points' must be an integer");
  EXPECT_EQ(config_error({{"command", "sweep"}, {"seed", -1}}, "sweep"), "'seed' must be non-negative");
  EXPECT_EQ(config_error({{"command", "sweep"}, {"sweep", {{"eps_grid", {1e-2, 1e-3}}}}}, "sweep"),
            "eps grid needs at least 4 values");
  EXPECT_FALSE(config_error({{"command", "sweep"}, {"sweep", {{"near_window", {0.1}}}}}, "sweep").empty());
  EXPECT_THROW(parse_config({{"command", "singular"}, {"geometry", {{"alpha1_deg", 0}, {"alpha2_deg", 90}}}}, "singular"),
               DomainError);
}

TEST(Config, SolverSettingsReachTheSweep) {
  const RunConfig c = parse_config(
      {{"command", "sweep"},
       {"geometry", {{"h", {0.0, 2.0}}}},
       {"solver", {{"mesh", {{"order", 10}, {"residual_gate", 1e-6}}}}}},
      "sweep");
  EXPECT_EQ(c.sweep.mesh.order, 10);
  EXPECT_EQ(c.sweep.tol.boundary_residual_gate, 1e-6);
  EXPECT_EQ(c.sweep.h.cy, 2.0);
}

TEST(Io, Sha256KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Io, CsvQuotingAndRoundTripNumbers) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  CsvTable t({"x", "y"});
  t.row({0.1, 1.0 / 3.0});
  EXPECT_EQ(t.str(), "x,y\n0.10000000000000001,0.33333333333333331\n");
  EXPECT_EQ(std::stod(num(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_THROW(t.row({1.0}), IoError);
}

TEST(Io, ManifestListsHashes) {
  const fs::path d = scratch_dir("manifest");
  OutputDir out(d.string());
  out.write("a.txt", "abc");
  out.finish({{"k", 1}}, {{"r", 2}});
  const json m = json::parse(slurp(d / "manifest.json"));
  EXPECT_EQ(m["tool"], "bowtie");
  EXPECT_EQ(m["files"][0]["path"], "a.txt");
  EXPECT_EQ(m["files"][0]["bytes"], 3);
  EXPECT_EQ(m["files"][0]["sha256"], sha256_hex("abc"));
  EXPECT_EQ(sha256_hex(slurp(d / "a.txt")), sha256_hex("abc"));
  fs::remove_all(d);
}

TEST(Io, SingularTableRowsAndSeeds) {
  const SingularBasis s(ApertureAngles(pi / 3, pi / 2));
  GridConfig g;
  g.points = 21;
  g.boundary_samples = 10;
  const CsvTable a = singular_table(s, g, 7), b = singular_table(s, g, 7), c = singular_table(s, g, 8);
  EXPECT_EQ(a.columns(), 9u);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str(), c.str());
  std::istringstream in(a.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x,y,B1,B2,grad_B1,grad_B2,combined,phi,rho");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) r.push_back(std::stod(f));
    ASSERT_EQ(r.size(), 9u);
    rows.push_back(r);
  }
  // The last 4 * 10 rows lie on the cone edges: S_1 rows first, then S_2.
  ASSERT_GT(rows.size(), 40u);
  for (std::size_t i = rows.size() - 40; i < rows.size(); ++i) {
    const int col = i < rows.size() - 20 ? 2 : 3;
    EXPECT_NEAR(rows[i][col], 0.0, 1e-13);
    EXPECT_GT(rows[i][col == 2 ? 3 : 2], 0.0);
  }
}

TEST(Cli, SingularIsByteReproducible) {
  const fs::path d = scratch_dir("cli_singular");
  const fs::path cfg =
      write_config(d, {{"command", "singular"}, {"geometry", {{"alpha1_deg", 60}, {"alpha2_deg", 90}}}, {"grid", {{"points", 31}}}});
  ASSERT_EQ(run_cli("singular --config " + cfg.string() + " --out " + (d / "a").string()), 0);
  ASSERT_EQ(run_cli("singular --config " + cfg.string() + " --out " + (d / "b").string()), 0);
  for (const char* f : {"singular.csv", "plot_singular.py", "manifest.json"})
    EXPECT_EQ(slurp(d / "a" / f), slurp(d / "b" / f)) << f;
  const json m = json::parse(slurp(d / "a" / "manifest.json"));
  EXPECT_EQ(m["files"][0]["sha256"], sha256_hex(slurp(d / "a" / "singular.csv")));
  EXPECT_NEAR(m["results"]["beta1"].get<double>(), 0.6, 1e-15);
  ASSERT_EQ(run_cli("singular --config " + cfg.string() + " --out " + (d / "c").string() + " --seed 9"), 0);
  EXPECT_NE(slurp(d / "a" / "singular.csv"), slurp(d / "c" / "singular.csv"));
  fs::remove_all(d);
}

TEST(Cli, ConfigErrorsExitTwo) {
  const fs::path d = scratch_dir("cli_errors");
  const fs::path bad = write_config(d, {{"command", "solve"}, {"geometry", {{"alpha1_deg", 90}, {"alpha2_deg", 90}}}});
  EXPECT_EQ(run_cli("solve --config " + bad.string() + " --out " + d.string()), 2);
  const fs::path unk = write_config(d, {{"command", "singular"}, {"geometry", {{"alpha1_deg", 90}, {"alpha2_deg", 90}, {"x", 1}}}});
  EXPECT_EQ(run_cli("singular --config " + unk.string() + " --out " + d.string()), 2);
  EXPECT_EQ(run_cli("singular --config " + (d / "missing.json").string()), 2);
  EXPECT_EQ(run_cli("nonsense"), 2);
  fs::remove_all(d);
}

TEST(Cli, SolveWithTransverseFieldHasNoEnhancement) {
  const fs::path d = scratch_dir("cli_solve");
  const fs::path cfg = write_config(
      d, {{"command", "solve"}, {"geometry", {{"alpha1_deg", 90}, {"alpha2_deg", 90}, {"eps", 1e-2}, {"h", {0.0, 1.0}}}}});
  ASSERT_EQ(run_cli("solve --config " + cfg.string() + " --out " + (d / "o").string()), 0);
  const json m = json::parse(slurp(d / "o" / "manifest.json"));
  EXPECT_NEAR(m["results"]["a_eps"].get<double>(), 0.0, 1e-10);
  EXPECT_NEAR(m["results"]["gamma"].get<double>(), 2.0, 1e-12);
  EXPECT_NEAR(m["results"]["q"][1].get<double>(), -0.5, 1e-15);
  EXPECT_NEAR(m["config"]["geometry"]["alpha1"].get<double>(), pi / 2, 1e-15);
  for (const auto& f : m["files"]) EXPECT_EQ(f["sha256"], sha256_hex(slurp(d / "o" / f["path"].get<std::string>())));
  fs::remove_all(d);
}

TEST(Config, SampleConfigsParse) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(fs::path(BOWTIE_SOURCE_DIR) / "configs")) {
    const json doc = read_json_file(e.path().string());
    EXPECT_NO_THROW(parse_config(doc, doc.at("command").get<std::string>())) << e.path();
    ++n;
  }
  EXPECT_EQ(n, 5);
}

TEST(Config, ParserKnowsEverySchemaKey) {
  // A wrong-typed value for a known key must fail on its type, never as "unknown key".
  const json schema = read_json_file((fs::path(BOWTIE_SOURCE_DIR) / "docs" / "config.schema.json").string());
  const json& top = schema["properties"];
  auto probe = [&](const json& props, const std::function<json(const std::string&)>& wrap) {
    for (auto it = props.begin(); it != props.end(); ++it) {
      const std::string err = config_error(wrap(it.key()), "sweep");
      EXPECT_EQ(err.find("unknown key"), std::string::npos) << it.key() << ": " << err;
    }
  };
  const json bad = "not valid";
  probe(top["geometry"]["properties"], [&](const std::string& k) { return json{{"command", "sweep"}, {"geometry", {{k, bad}}}}; });
  probe(top["grid"]["properties"], [&](const std::string& k) { return json{{"command", "sweep"}, {"grid", {{k, bad}}}}; });
  for (const char* sub : {"mesh", "corrector"})
    probe(top["solver"]["properties"][sub]["properties"],
          [&](const std::string& k) { return json{{"command", "sweep"}, {"solver", {{sub, {{k, bad}}}}}}; });
  probe(top["sweep"]["properties"], [&](const std::string& k) { return json{{"command", "sweep"}, {"sweep", {{k, bad}}}}; });
  probe(top["sweep"]["properties"]["tolerances"]["properties"],
        [&](const std::string& k) { return json{{"command", "sweep"}, {"sweep", {{"tolerances", {{k, bad}}}}}}; });
}
