#pragma once

#include <openssl/evp.h>

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bowtie/corrector.hpp"
#include "bowtie/field_solver.hpp"
#include "bowtie/scaling_lab.hpp"
#include "bowtie/singular_basis.hpp"

namespace bowtie {

inline constexpr const char* kToolVersion = "1.0.0";

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

struct GridConfig {
  double extent = 2.0;  // square [-extent, extent]^2
  int points = 81;      // per side
  double b = 1.0;
  int boundary_samples = 64;  // per cone edge
};

struct RunConfig {
  std::string command;
  double alpha1 = pi / 2, alpha2 = pi / 2;
  double eps = 1e-2;
  double edge_len = 1.0;
  double delta = 0.25;
  LinearH h{1.0, 0.0};
  GridConfig grid{};
  MeshOptions mesh{};
  double residual_gate = 1e-7;
  CorrectorOptions corrector{};
  SweepPlan sweep{};
  std::string output = "bowtie_out";
  std::uint64_t seed = 1;

  ApertureAngles angles() const { return ApertureAngles(alpha1, alpha2); }
};

inline const std::set<std::string>& known_commands() {
  static const std::set<std::string> c{"singular", "corrector", "solve", "sweep", "verify"};
  return c;
}

namespace detail {

inline double deg(double d) { return d * pi / 180.0; }

/// Reads one JSON object against a fixed key list; every error names the
/// dotted key path.
class Block {
 public:
  Block(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("'" + (path_.empty() ? std::string("<root>") : path_) + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!allowed.count(it.key())) throw ConfigError("unknown key '" + key(it.key()) + "'");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  bool has(const std::string& k) const { return j_.contains(k); }
  const json& at(const std::string& k) const { return j_.at(k); }

  void require(const std::string& k) const {
    if (!has(k)) throw ConfigError("missing required key '" + key(k) + "'");
  }

  void number(const std::string& k, double& out) const {
    if (!has(k)) return;
    if (!j_.at(k).is_number()) throw ConfigError("'" + key(k) + "' must be a number");
    out = j_.at(k).get<double>();
  }
  void angle(const std::string& k, double& out) const {
    double d = 0.0;
    if (!has(k)) return;
    number(k, d);
    out = deg(d);
  }
  template <class Int>
  void integer(const std::string& k, Int& out) const {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("'" + key(k) + "' must be an integer");
    if (v.is_number_integer() && v.get<long long>() < 0 && std::is_unsigned_v<Int>)
      throw ConfigError("'" + key(k) + "' must be non-negative");
    out = v.get<Int>();
  }
  void boolean(const std::string& k, bool& out) const {
    if (!has(k)) return;
    if (!j_.at(k).is_boolean()) throw ConfigError("'" + key(k) + "' must be a boolean");
    out = j_.at(k).get<bool>();
  }
  void string(const std::string& k, std::string& out) const {
    if (!has(k)) return;
    if (!j_.at(k).is_string()) throw ConfigError("'" + key(k) + "' must be a string");
    out = j_.at(k).get<std::string>();
  }
  std::vector<double> numbers(const std::string& k, std::size_t n = 0) const {
    const json& v = j_.at(k);
    if (!v.is_array()) throw ConfigError("'" + key(k) + "' must be an array of numbers");
    if (n && v.size() != n) throw ConfigError("'" + key(k) + "' must have " + std::to_string(n) + " entries");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError("'" + key(k) + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

inline void read_mesh(const Block& b, MeshOptions& m, double& gate) {
  b.integer("order", m.order);
  b.number("ratio", m.ratio);
  b.number("vertex_min_rel", m.vertex_min_rel);
  b.number("tangent_min", m.tangent_min);
  b.number("max_panel", m.max_panel);
  b.integer("max_unknowns", m.max_unknowns);
  b.number("residual_gate", gate);
}

inline void read_corrector(const Block& b, CorrectorOptions& c) {
  b.number("rt_factor", c.rt_factor);
  b.integer("order", c.order);
  b.number("ratio", c.ratio);
  b.number("vertex_min", c.vertex_min);
  b.number("junction_min_rel", c.junction_min_rel);
  b.number("max_panel_rel", c.max_panel_rel);
  b.integer("modes", c.modes);
  b.number("tail_tolerance", c.tail_tolerance);
  b.number("residual_gate", c.residual_gate);
}

inline void read_sweep(const Block& b, SweepPlan& p) {
  if (b.has("angle_pairs_deg")) {
    const json& a = b.at("angle_pairs_deg");
    if (!a.is_array() || a.empty()) throw ConfigError("'" + b.key("angle_pairs_deg") + "' must be a non-empty array");
    p.angle_pairs.clear();
    for (const auto& pr : a) {
      if (!pr.is_array() || pr.size() != 2 || !pr[0].is_number() || !pr[1].is_number())
        throw ConfigError("'" + b.key("angle_pairs_deg") + "' entries must be [alpha1, alpha2] in degrees");
      p.angle_pairs.emplace_back(deg(pr[0].get<double>()), deg(pr[1].get<double>()));
    }
  }
  if (b.has("eps_grid")) p.eps_grid = b.numbers("eps_grid");
  b.number("eps_floor", p.eps_floor);
  b.boolean("symmetry_checks", p.symmetry_checks);
  if (b.has("near_window")) {
    const auto w = b.numbers("near_window", 2);
    p.near_lo = w[0];
    p.near_hi = w[1];
  }
  b.integer("near_samples", p.near_samples);
  b.number("amplitude_offset", p.amplitude_offset);
  b.number("mid_lo", p.mid_lo);
  b.integer("mid_samples", p.mid_samples);
  b.integer("batch_per_decade", p.batch_per_decade);
  b.integer("batch_angular", p.batch_angular);
  b.number("r_batch_lo", p.r_batch_lo);
  b.number("e_batch_lo", p.e_batch_lo);
  b.number("delta1", p.decomposition.delta1);
  b.number("h_norm_radius", p.decomposition.h_norm_radius);
  if (b.has("tolerances")) {
    const Block t(b.at("tolerances"), b.key("tolerances"),
                  {"corner_slope", "log_law_ratio", "amplitude_ratio", "mid_slope", "prefactor_ratio", "a_eps_ratio",
                   "a_eps_null", "linearity", "trend_noise"});
    SweepTolerances& x = p.tol;
    t.number("corner_slope", x.corner_slope);
    t.number("log_law_ratio", x.log_law_ratio);
    t.number("amplitude_ratio", x.amplitude_ratio);
    t.number("mid_slope", x.mid_slope);
    t.number("prefactor_ratio", x.prefactor_ratio);
    t.number("a_eps_ratio", x.a_eps_ratio);
    t.number("a_eps_null", x.a_eps_null);
    t.number("linearity", x.linearity);
    t.number("trend_noise", x.trend_noise);
  }
}

}  // namespace detail

/// Validates and reads a configuration document. `command` is the CLI
/// subcommand; a "command" key in the document must agree with it.
inline RunConfig parse_config(const json& doc, const std::string& command) {
  using detail::Block;
  if (!known_commands().count(command)) throw ConfigError("unknown command '" + command + "'");
  const Block root(doc, "", {"command", "geometry", "grid", "solver", "sweep", "output", "seed"});
  RunConfig c;
  root.require("command");
  root.string("command", c.command);
  if (!known_commands().count(c.command)) throw ConfigError("'command' must be one of singular, corrector, solve, sweep, verify");
  if (c.command != command)
    throw ConfigError("config is for command '" + c.command + "' but '" + command + "' was requested");

  const bool needs_angles = command == "singular" || command == "corrector" || command == "solve";
  if (needs_angles) root.require("geometry");
  if (root.has("geometry")) {
    const Block g(root.at("geometry"), "geometry", {"alpha1_deg", "alpha2_deg", "eps", "edge_len", "delta", "h"});
    if (needs_angles) {
      g.require("alpha1_deg");
      g.require("alpha2_deg");
    }
    if (command == "solve") g.require("eps");
    g.angle("alpha1_deg", c.alpha1);
    g.angle("alpha2_deg", c.alpha2);
    g.number("eps", c.eps);
    g.number("edge_len", c.edge_len);
    g.number("delta", c.delta);
    if (g.has("h")) {
      const auto h = g.numbers("h", 2);
      c.h = {h[0], h[1]};
    }
  }
  if (root.has("grid")) {
    const Block g(root.at("grid"), "grid", {"extent", "points", "b", "boundary_samples"});
    g.number("extent", c.grid.extent);
    g.integer("points", c.grid.points);
    g.number("b", c.grid.b);
    g.integer("boundary_samples", c.grid.boundary_samples);
  }
  if (root.has("solver")) {
    const Block s(root.at("solver"), "solver", {"mesh", "corrector"});
    if (s.has("mesh")) {
      const Block m(s.at("mesh"), "solver.mesh",
                    {"order", "ratio", "vertex_min_rel", "tangent_min", "max_panel", "max_unknowns", "residual_gate"});
      detail::read_mesh(m, c.mesh, c.residual_gate);
    }
    if (s.has("corrector")) {
      const Block m(s.at("corrector"), "solver.corrector",
                    {"rt_factor", "order", "ratio", "vertex_min", "junction_min_rel", "max_panel_rel", "modes",
                     "tail_tolerance", "residual_gate"});
      detail::read_corrector(m, c.corrector);
    }
  }
  if (root.has("sweep")) {
    const Block s(root.at("sweep"), "sweep",
                  {"angle_pairs_deg", "eps_grid", "eps_floor", "symmetry_checks", "near_window", "near_samples",
                   "amplitude_offset", "mid_lo", "mid_samples", "batch_per_decade", "batch_angular", "r_batch_lo",
                   "e_batch_lo", "delta1", "h_norm_radius", "tolerances"});
    detail::read_sweep(s, c.sweep);
  }
  root.string("output", c.output);
  root.integer("seed", c.seed);

  c.sweep.mesh = c.mesh;
  c.sweep.corrector = c.corrector;
  c.sweep.tol.boundary_residual_gate = c.residual_gate;
  c.sweep.edge_len = c.edge_len;
  c.sweep.delta = c.delta;
  c.sweep.h = c.h;

  // Range checks reuse the model constructors.
  if (needs_angles) c.angles();
  if (command == "solve") BowTieGeometry(c.angles(), c.eps, c.edge_len, c.delta);
  if (command == "sweep" || command == "verify") c.sweep.validate();
  if (c.grid.points < 2) throw ConfigError("'grid.points' must be at least 2");
  if (!(c.grid.extent > 0.0)) throw ConfigError("'grid.extent' must be positive");
  if (!(c.grid.b > 0.0)) throw ConfigError("'grid.b' must be positive");
  if (c.mesh.order < 2 || c.corrector.order < 2) throw ConfigError("quadrature order must be at least 2");
  return c;
}

inline RunConfig default_config(const std::string& command) {
  if (!known_commands().count(command)) throw ConfigError("unknown command '" + command + "'");
  RunConfig c;
  c.command = command;
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError(path + ": cannot open (" + std::strerror(errno) + ")");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline json config_echo(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["geometry"] = {{"alpha1", c.alpha1}, {"alpha2", c.alpha2}, {"eps", c.eps},
                   {"edge_len", c.edge_len}, {"delta", c.delta}, {"h", {c.h.cx, c.h.cy}}};
  j["seed"] = c.seed;
  return j;
}

// ---------------------------------------------------------------------------
// Hashing and output

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw IoError("sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

/// Shortest round-trip formatting, so reruns write identical bytes.
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }

  void row(const std::vector<double>& v) {
    std::vector<std::string> s;
    for (double x : v) s.push_back(num(x));
    row_strings(s);
  }
  void row_strings(const std::vector<std::string>& v) {
    if (v.size() != cols_) throw IoError("csv row has " + std::to_string(v.size()) + " fields, expected " + std::to_string(cols_));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) text_ += ',';
      text_ += csv_field(v[i]);
    }
    text_ += '\n';
  }
  const std::string& str() const { return text_; }
  std::size_t columns() const { return cols_; }

 private:
  std::size_t cols_;
  std::string text_;
};

/// Writes files under one directory and records each with its SHA-256.
class OutputDir {
 public:
  explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError(dir_ + ": cannot create directory (" + ec.message() + ")");
  }

  const std::string& path() const { return dir_; }

  void write(const std::string& name, const std::string& content) {
    const std::string p = (std::filesystem::path(dir_) / name).string();
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(p + ": cannot open for writing (" + std::strerror(errno) + ")");
    f.write(content.data(), std::streamsize(content.size()));
    f.close();
    if (!f) throw IoError(p + ": write failed");
    files_.push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_hex(content)}});
  }
  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  /// manifest.json: tool version, config echo, results and the file list.
  void finish(const json& config, const json& results) {
    json m;
    m["tool"] = "bowtie";
    m["version"] = kToolVersion;
    m["config"] = config;
    m["results"] = results;
    m["files"] = files_;
    const std::string p = (std::filesystem::path(dir_) / "manifest.json").string();
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(p + ": cannot open for writing (" + std::strerror(errno) + ")");
    f << m.dump(2) << "\n";
    if (!f) throw IoError(p + ": write failed");
  }

  const json& files() const { return files_; }

 private:
  std::string dir_;
  json files_ = json::array();
};

// ---------------------------------------------------------------------------
// Tables

inline CsvTable geometry_table(const BowTieGeometry& g, int per_inclusion = 400) {
  CsvTable t({"inclusion", "s", "x", "y"});
  for (const auto& p : sample_polyline(g, per_inclusion)) t.row({double(p.inclusion), p.s, p.point.x, p.point.y});
  return t;
}

inline const std::vector<std::string>& singular_columns() {
  static const std::vector<std::string> c{"x", "y", "B1", "B2", "grad_B1", "grad_B2", "combined", "phi", "rho"};
  return c;
}

inline void singular_row_to(CsvTable& t, const SingularRow& r) {
  t.row({r.x.x, r.x.y, r.B1, r.B2, r.grad_B1, r.grad_B2, r.combined, r.phi, r.rho});
}

/// Grid over [-extent, extent]^2 outside both cones, then points on every cone
/// edge at seeded random radii.
inline CsvTable singular_table(const SingularBasis& s, const GridConfig& grid, std::uint64_t seed) {
  CsvTable t(singular_columns());
  const int n = grid.points;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const Vec2 x{-grid.extent + 2.0 * grid.extent * k / (n - 1), -grid.extent + 2.0 * grid.extent * i / (n - 1)};
      if (!s.gap().in_pi(x)) continue;
      if (norm(x - s.frame(1).vertex) == 0.0 || norm(x - s.frame(2).vertex) == 0.0) continue;
      singular_row_to(t, singular_row(s, grid.b, x));
    }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lr(std::log(1e-3), std::log(grid.extent));
  for (int j = 1; j <= 2; ++j) {
    const ConeFrame& f = s.frame(j);
    for (const Vec2 dir : {f.reference_ray, f.lower_ray()})
      for (int m = 0; m < grid.boundary_samples; ++m) {
        const double r = std::exp(lr(rng));
        singular_row_to(t, singular_row(s, grid.b, f.vertex + dir * r));
      }
  }
  return t;
}

inline CsvTable field_table(const PotentialSolution& u, const std::vector<DecompositionSample>& samples) {
  CsvTable t({"x", "y", "u", "grad_u", "R_ratio", "E_ratio"});
  for (const auto& s : samples) {
    if (!s.valid) continue;
    t.row({s.x.x, s.x.y, u.value(s.x), norm(s.grad_u), s.r_ratio, s.e_ratio});
  }
  return t;
}

// ---------------------------------------------------------------------------
// JSON views

inline json to_json(const Vec2& v) { return json::array({v.x, v.y}); }

inline json to_json(const ExponentFit& f) {
  return {{"slope", f.slope}, {"stderr_slope", f.stderr_slope}, {"intercept", f.intercept},
          {"stderr_intercept", f.stderr_intercept}, {"samples", f.samples}};
}

/// Timings are left out so that reruns produce identical files.
inline json to_json(const SolverDiagnostics& d) {
  return {{"unknowns", d.unknowns}, {"panels", d.panels}, {"smallest_panel", d.smallest_panel},
          {"largest_panel", d.largest_panel}, {"rcond", d.rcond}, {"warnings", d.warnings}};
}

inline json to_json(const CorrectorDiagnostics& d) {
  return {{"unknowns", d.unknowns}, {"collocation_residual", d.collocation_residual},
          {"check_residual", d.check_residual}, {"tail_size", d.tail_size}};
}

inline json to_json(const DerivedConstants& d) {
  return {{"delta_q", d.delta_q}, {"delta_u", d.delta_u}, {"c_u", d.c_u}, {"a_eps", d.a_eps}, {"eta0", d.eta0}};
}

inline json to_json(const Verdict& v) {
  return {{"id", v.id}, {"law", v.law}, {"measured", v.measured}, {"tolerance", v.tolerance}, {"pass", v.pass},
          {"detail", v.detail}};
}

inline json to_json(const EpsRecord& r) {
  json j{{"eps", r.eps}, {"ok", r.ok}, {"error", r.error}, {"gate_failure", r.gate_failure}};
  if (!r.ok) return j;
  j["solver"] = to_json(r.solver);
  j["residual_u"] = r.residual_u;
  j["residual_q"] = r.residual_q;
  j["c"] = {r.c1, r.c2};
  j["d"] = {r.d1, r.d2};
  j["derived"] = to_json(r.dc);
  j["identity_residual"] = r.identity_residual;
  if (r.a_eps_y) j["a_eps_y"] = *r.a_eps_y;
  if (r.a_eps_xy) j["a_eps_xy"] = *r.a_eps_xy;
  j["near_fit"] = to_json(r.near_fit);
  j["amplitude_grad"] = r.amplitude_grad;
  j["mid_fit"] = to_json(r.mid_fit);
  j["mid_prefactor"] = r.mid_fit.prefactor();
  j["mid_upper"] = r.mid_upper;
  j["r_sup"] = r.r_sup;
  j["r_argmax"] = to_json(r.r_argmax);
  j["e_sup"] = r.e_sup;
  j["e_argmax"] = to_json(r.e_argmax);
  j["r_points"] = r.r_points;
  j["e_points"] = r.e_points;
  j["phi_scaled"] = {r.phi_scaled_min, r.phi_scaled_max};
  j["w_scaled_max"] = r.w_scaled_max;
  return j;
}

inline json to_json(const ScalingReport& rep) {
  json pairs = json::array();
  for (const auto& p : rep.pairs) {
    json a{{"alpha1", p.alpha1}, {"alpha2", p.alpha2}, {"beta1", p.beta1}, {"beta2", p.beta2},
           {"gamma", p.gamma},   {"q", to_json(p.q)},   {"a", p.a},         {"b", p.b},
           {"corrector", to_json(p.corrector)}, {"complete", p.complete}};
    a["mid_pooled"] = {{"slope", p.mid_pooled.slope}, {"stderr_slope", p.mid_pooled.stderr_slope},
                       {"intercepts", p.mid_pooled.intercepts}, {"samples", p.mid_pooled.samples}};
    a["records"] = json::array();
    for (const auto& r : p.records) a["records"].push_back(to_json(r));
    a["verdicts"] = json::array();
    for (const auto& v : p.verdicts) a["verdicts"].push_back(to_json(v));
    pairs.push_back(a);
  }
  return {{"pairs", pairs}, {"complete", rep.complete()}, {"all_pass", rep.all_pass()},
          {"gate_failure", rep.gate_failure()}};
}

inline CsvTable sweep_eps_table(const ScalingReport& rep) {
  CsvTable t({"alpha1", "alpha2", "eps", "ok", "unknowns", "residual_u", "residual_q", "c1", "c2", "d1", "d2",
              "delta_q", "delta_u", "a_eps", "eta0", "identity", "near_slope", "near_stderr", "amplitude_grad",
              "mid_slope", "mid_stderr", "mid_prefactor", "mid_upper", "r_sup", "e_sup"});
  for (const auto& p : rep.pairs)
    for (const auto& r : p.records) {
      if (!r.ok) {
        std::vector<std::string> s{num(p.alpha1), num(p.alpha2), num(r.eps), "0"};
        s.resize(t.columns(), "nan");
        t.row_strings(s);
        continue;
      }
      t.row({p.alpha1, p.alpha2, r.eps, 1.0, double(r.solver.unknowns), r.residual_u, r.residual_q, r.c1, r.c2,
             r.d1, r.d2, r.dc.delta_q, r.dc.delta_u, r.dc.a_eps, r.dc.eta0, r.identity_residual, r.near_fit.slope,
             r.near_fit.stderr_slope, r.amplitude_grad, r.mid_fit.slope, r.mid_fit.stderr_slope,
             r.mid_fit.prefactor(), r.mid_upper, r.r_sup, r.e_sup});
    }
  return t;
}

/// kind 0: near-vertex probes (distance to V_1), kind 1: mid-range probes (|X|).
inline CsvTable sweep_probe_table(const ScalingReport& rep) {
  CsvTable t({"alpha1", "alpha2", "eps", "kind", "distance", "grad_u"});
  for (const auto& p : rep.pairs)
    for (const auto& r : p.records) {
      for (auto [s, v] : r.near) t.row({p.alpha1, p.alpha2, r.eps, 0.0, s, v});
      for (auto [s, v] : r.mid) t.row({p.alpha1, p.alpha2, r.eps, 1.0, s, v});
    }
  return t;
}

inline CsvTable verdict_table(const ScalingReport& rep) {
  CsvTable t({"alpha1", "alpha2", "id", "pass", "measured", "tolerance", "law"});
  for (const auto& p : rep.pairs)
    for (const auto& v : p.verdicts)
      t.row_strings({num(p.alpha1), num(p.alpha2), v.id, v.pass ? "1" : "0", num(v.measured), v.tolerance, v.law});
  return t;
}

// ---------------------------------------------------------------------------
// Plot scripts (matplotlib, run from the output directory)

inline std::string plot_singular_script() {
  return R"(import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("singular.csv")))
x = [float(r["x"]) for r in rows]
y = [float(r["y"]) for r in rows]
fig, axes = plt.subplots(1, 3, figsize=(15, 4.5))
for ax, key in zip(axes, ["B1", "B2", "combined"]):
    v = [float(r[key]) for r in rows]
    sc = ax.scatter(x, y, c=v, s=4, cmap="viridis")
    ax.set_aspect("equal")
    ax.set_title(key)
    fig.colorbar(sc, ax=ax)
fig.tight_layout()
fig.savefig("singular.png", dpi=150)
)";
}

inline std::string plot_corrector_script() {
  return R"(import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("corrector_ray.csv")))
rho = [float(r["rho"]) for r in rows]
gw = [float(r["grad_w"]) for r in rows]
fig, ax = plt.subplots(figsize=(6, 4.5))
ax.loglog(rho, gw, "o-")
ax.set_xlabel("rho")
ax.set_ylabel("|grad w|")
ax.set_title("corrector decay along the gap bisector")
fig.tight_layout()
fig.savefig("corrector_decay.png", dpi=150)
)";
}

inline std::string plot_field_script() {
  return R"(import csv
import math
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("field.csv")))
r = [math.hypot(float(a["x"]), float(a["y"])) for a in rows]
fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
axes[0].loglog(r, [float(a["grad_u"]) for a in rows], ".", ms=3)
axes[0].set_xlabel("|X|")
axes[0].set_ylabel("|grad u|")
axes[1].loglog(r, [float(a["R_ratio"]) for a in rows], ".", ms=3, label="R ratio")
axes[1].loglog(r, [float(a["E_ratio"]) for a in rows], ".", ms=3, label="E ratio")
axes[1].set_xlabel("|X|")
axes[1].legend()
fig.tight_layout()
fig.savefig("field.png", dpi=150)
)";
}

inline std::string plot_sweep_script() {
  return R"(import csv
import math
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

eps_rows = [r for r in csv.DictReader(open("sweep_eps.csv")) if r["ok"] == "1"]
probes = list(csv.DictReader(open("sweep_probes.csv")))
pairs = sorted({(r["alpha1"], r["alpha2"]) for r in eps_rows})

for a1, a2 in pairs:
    tag = "%.4g_%.4g" % (float(a1), float(a2))
    rows = [r for r in eps_rows if (r["alpha1"], r["alpha2"]) == (a1, a2)]
    eps = [float(r["eps"]) for r in rows]
    lg = [abs(math.log(e)) for e in eps]

    fig, axes = plt.subplots(2, 3, figsize=(15, 9))
    for kind, ax, xl in [("0", axes[0][0], "|X - V_1|"), ("1", axes[0][1], "|X|")]:
        for e in eps:
            p = [q for q in probes if q["kind"] == kind and (q["alpha1"], q["alpha2"]) == (a1, a2)
                 and float(q["eps"]) == e]
            ax.loglog([float(q["distance"]) for q in p], [float(q["grad_u"]) for q in p], ".-", label="eps=%g" % e)
        ax.set_xlabel(xl)
        ax.set_ylabel("|grad u|")
        ax.legend(fontsize=7)
    axes[0][0].set_title("near-vertex blow-up")
    axes[0][1].set_title("mid-range decay")
    axes[0][2].semilogx(eps, [float(r["delta_q"]) * l for r, l in zip(rows, lg)], "o-")
    axes[0][2].set_title("delta_q |log eps|")
    axes[1][0].semilogx(eps, [float(r["a_eps"]) for r in rows], "o-")
    axes[1][0].set_title("a_eps")
    axes[1][1].semilogx(eps, [float(r["mid_prefactor"]) * l for r, l in zip(rows, lg)], "o-")
    axes[1][1].set_title("mid-range prefactor |log eps|")
    axes[1][2].loglog(eps, [float(r["r_sup"]) for r in rows], "o-", label="R")
    axes[1][2].loglog(eps, [float(r["e_sup"]) for r in rows], "s-", label="E")
    axes[1][2].set_title("normalized residual sup")
    axes[1][2].legend()
    for ax in axes[1]:
        ax.set_xlabel("eps")
    fig.tight_layout()
    fig.savefig("sweep_%s.png" % tag, dpi=150)
)";
}

}  // namespace bowtie
