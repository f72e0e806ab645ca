#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cubeavg/bounds.hpp"
#include "cubeavg/cesaro.hpp"
#include "cubeavg/counterexamples.hpp"
#include "cubeavg/dynamics.hpp"
#include "cubeavg/recurrence.hpp"
#include "cubeavg/wiener_wintner.hpp"

namespace cubeavg::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kArtifactName = "cubeavg";
inline constexpr const char* kArtifactVersion = "0.1.0";

// Exit codes: 0 success, 2 validation/usage error, 3 a mathematical check
// failed (usable as a property-test harness in CI).
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitCheckFailed = 3;

// ---------------------------------------------------------------------------
// Small parsing helpers.

inline std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list of numbers");
  return out;
}

inline std::vector<std::int64_t> parse_ints(const std::string& csv) {
  std::vector<std::int64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoll(item));
  }
  if (out.empty()) throw std::invalid_argument("expected a comma-separated list of integers");
  return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

// System grammar: rotation:a1[,a2,...] | skew:alpha | skew2x:alpha | identity:dim
inline TorusSystem parse_system(const std::string& text) {
  auto pos = text.find(':');
  std::string kind = text.substr(0, pos);
  std::string arg = pos == std::string::npos ? "" : text.substr(pos + 1);
  if (kind == "rotation") return TorusSystem::rotation(parse_doubles(arg));
  if (kind == "skew") return TorusSystem::skew_product(std::stod(arg));
  if (kind == "skew2x") {
    TorusSystem s = TorusSystem::skew_product(std::stod(arg));
    return TorusSystem::product({s, s});
  }
  if (kind == "identity") return TorusSystem::identity(static_cast<std::size_t>(std::stoll(arg)));
  throw std::invalid_argument("unknown system '" + text +
                              "' (expected rotation:|skew:|skew2x:|identity:)");
}

// Box grammar: per-axis lo:hi joined by 'x', boxes joined by ';'.
//   "0:0.5"            -> [0, 0.5) on T^1
//   "0:0.5x0.25:0.75"  -> a box on T^2
inline BoxSet parse_box_set(const std::string& text) {
  std::vector<std::string> boxes = split(text, ';');
  if (boxes.empty()) throw std::invalid_argument("empty set description");
  std::optional<BoxSet> out;
  for (const std::string& b : boxes) {
    std::vector<std::pair<double, double>> axes;
    for (const std::string& axis : split(b, 'x')) {
      std::vector<std::string> lohi = split(axis, ':');
      if (lohi.size() != 2) throw std::invalid_argument("axis must be lo:hi");
      axes.emplace_back(std::stod(lohi[0]), std::stod(lohi[1]));
    }
    if (!out) {
      out = BoxSet::box(axes);
    } else {
      out->add_box(axes);
    }
  }
  return *out;
}

// Sequence file: CSV rows "re,im" (optional header); bound = max modulus.
inline BoundedSequence read_sequence_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open sequence file '" + path + "'");
  std::vector<cplx> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.find_first_of("0123456789+-.") != 0) continue;  // header or comment
    std::vector<std::string> parts = split(line, ',');
    if (parts.size() < 2) throw std::invalid_argument("sequence file rows must be re,im");
    values.emplace_back(std::stod(parts[0]), std::stod(parts[1]));
  }
  if (values.empty()) throw std::invalid_argument("sequence file '" + path + "' has no rows");
  return BoundedSequence::from_values(std::move(values));
}

// Source grammar: ones | vn[:growth] | weyl[:alpha] | vnweyl[:alpha[:growth]] | file:PATH
inline BoundedSequence make_sequence(const std::string& src, std::size_t len,
                                     double default_alpha, std::uint64_t default_growth) {
  std::vector<std::string> parts = split(src, ':');
  const std::string& kind = parts[0];
  if (kind == "ones") return BoundedSequence::ones(len);
  if (kind == "vn") {
    std::uint64_t growth = parts.size() > 1 ? std::stoull(parts[1]) : default_growth;
    return vn_sequence(len, growth);
  }
  if (kind == "weyl") {
    double alpha = parts.size() > 1 ? std::stod(parts[1]) : default_alpha;
    return weyl_sequence(alpha, len);
  }
  if (kind == "vnweyl") {
    double alpha = parts.size() > 1 ? std::stod(parts[1]) : default_alpha;
    std::uint64_t growth = parts.size() > 2 ? std::stoull(parts[2]) : default_growth;
    return pointwise_product(vn_sequence(len, growth), weyl_sequence(alpha, len));
  }
  if (kind == "file") {
    if (parts.size() < 2) throw std::invalid_argument("file source needs a path");
    std::string path = src.substr(5);
    BoundedSequence s = read_sequence_file(path);
    if (s.size() < len)
      throw std::invalid_argument("sequence file too short: need " + std::to_string(len) +
                                  " values, got " + std::to_string(s.size()));
    return truncate(s, len);
  }
  throw std::invalid_argument("unknown sequence source '" + src + "'");
}

inline json complex_json(const cplx& v) { return json::array({v.real(), v.imag()}); }

inline json series_json(const CesaroSeries& s) {
  json j;
  j["Ns"] = s.Ns;
  json vals = json::array();
  for (const cplx& v : s.values) vals.push_back(complex_json(v));
  j["values"] = vals;
  return j;
}

inline json real_series_json(const std::vector<std::int64_t>& Ns,
                             const std::vector<double>& values) {
  json j;
  j["Ns"] = Ns;
  json vals = json::array();
  for (double v : values) vals.push_back(complex_json(cplx{v, 0.0}));
  j["values"] = vals;
  return j;
}

// ---------------------------------------------------------------------------
// Report emission. JSON is a single object with stable key order; CSV covers
// series payloads (N,value_re,value_im) and margin payloads
// (name,lhs,rhs,margin).

inline std::string format_sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12e", v);
  return buf;
}

inline std::string render_csv(const json& report) {
  const json& results = report.at("results");
  std::string out;
  if (results.contains("series")) {
    const json& series = results["series"];
    out += "N,value_re,value_im\n";
    const auto& ns = series.at("Ns");
    const auto& vals = series.at("values");
    for (std::size_t i = 0; i < ns.size(); ++i) {
      out += std::to_string(ns[i].get<std::int64_t>());
      out += ',' + format_sci(vals[i][0].get<double>());
      out += ',' + format_sci(vals[i][1].get<double>());
      out += '\n';
    }
    return out;
  }
  if (results.contains("margins")) {
    out += "name,lhs,rhs,margin\n";
    for (const json& row : results["margins"]) {
      out += row.at("name").get<std::string>();
      out += ',' + format_sci(row.at("lhs").get<double>());
      out += ',' + format_sci(row.at("rhs").get<double>());
      out += ',' + format_sci(row.at("margin").get<double>());
      out += '\n';
    }
    return out;
  }
  throw std::invalid_argument("csv output is only available for series or margin payloads");
}

inline void emit(const json& report, const std::string& format, const std::string& path) {
  std::string text;
  if (format == "json") {
    text = report.dump(2);
    text += '\n';
  } else if (format == "csv") {
    text = render_csv(report);
  } else {
    throw std::invalid_argument("unknown format '" + format + "'");
  }
  if (path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write to '" + path + "'");
    out << text;
  }
}

// ---------------------------------------------------------------------------
// Command context shared by every subcommand.

struct CommonOptions {
  std::string format = "json";
  std::string out_path;
  std::uint64_t seed = 12345;
  double alpha = 0.41421356237309515;  // sqrt(2) - 1
  std::uint64_t growth = 4;
  bool timing = false;
};

inline json report_skeleton(const std::string& command) {
  json j;
  j["artifact"] = {{"name", kArtifactName}, {"version", kArtifactVersion}};
  j["command"] = command;
  j["config"] = json::object();
  j["results"] = json::object();
  return j;
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"multilinear Cesaro averages along cubes on explicit torus systems"};
  app.require_subcommand(1);

  CommonOptions common;
  app.add_option("--format", common.format, "output format: json|csv")
      ->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--out", common.out_path, "write the report to this path instead of stdout");
  app.add_option("--seed", common.seed, "seed for every stochastic path");
  app.add_option("--alpha", common.alpha, "default angle for generated sequences/systems");
  app.add_option("--growth", common.growth, "default block growth for vn sequences");
  app.add_flag("--timing", common.timing, "include wall time in the report");

  // --- orbit -----------------------------------------------------------
  auto* orbit_cmd = app.add_subcommand("orbit", "evaluate an observable along an orbit");
  std::string orbit_system = "rotation:0.41421356237309515";
  std::string orbit_point = "0";
  std::string orbit_freq = "1";
  std::string orbit_coeff = "1,0";
  std::int64_t orbit_N = 64;
  orbit_cmd->add_option("--system", orbit_system, "system descriptor");
  orbit_cmd->add_option("--point", orbit_point, "start point coordinates");
  orbit_cmd->add_option("--freq", orbit_freq, "character frequency vector");
  orbit_cmd->add_option("--coeff", orbit_coeff, "character coefficient re,im");
  orbit_cmd->add_option("--N", orbit_N, "orbit length")->check(CLI::PositiveNumber);

  // --- average ---------------------------------------------------------
  auto* avg_cmd = app.add_subcommand("average", "multilinear Cesaro average");
  int avg_kind = 2;
  std::string avg_a = "ones", avg_b = "ones", avg_c = "ones", avg_method = "convolution";
  std::vector<std::string> avg_slots;
  std::int64_t avg_N = 64;
  avg_cmd->add_option("--kind", avg_kind, "2 or 3")->check(CLI::IsMember({2, 3}));
  avg_cmd->add_option("--a", avg_a, "sequence source for a");
  avg_cmd->add_option("--b", avg_b, "sequence source for b");
  avg_cmd->add_option("--c", avg_c, "sequence source for c");
  avg_cmd->add_option("--method", avg_method, "naive|convolution|both")
      ->check(CLI::IsMember({"naive", "convolution", "both"}));
  avg_cmd->add_option("--slot", avg_slots, "kind-3 slot: PATTERN=SOURCE[@twist]");
  avg_cmd->add_option("--N", avg_N, "average length")->check(CLI::PositiveNumber);

  // --- theorem1 --------------------------------------------------------
  auto* th_cmd = app.add_subcommand("theorem1", "six-slot cube average series");
  std::string th_config = "skew";
  std::string th_alphas;
  std::string th_point;
  std::string th_Ns = "32,64,128,256";
  th_cmd->add_option("--config", th_config, "skew (two alternating skew products) or rotation")
      ->check(CLI::IsMember({"skew", "rotation"}));
  th_cmd->add_option("--alphas", th_alphas, "angles: 2 for skew config, 6 for rotation");
  th_cmd->add_option("--point", th_point, "start point (dim 2 for skew, 1 for rotation)");
  th_cmd->add_option("--Ns", th_Ns, "ladder of N values");

  // --- ww-sup ----------------------------------------------------------
  auto* ww_cmd = app.add_subcommand("ww-sup", "sup over frequencies of a twisted sum");
  std::string ww_seq = "weyl";
  std::int64_t ww_N = 4096;
  std::int64_t ww_start = -1, ww_end = -1, ww_norm = -1;
  std::size_t ww_grid_factor = 8;
  double ww_refine_tol = 1e-10;
  ww_cmd->add_option("--seq", ww_seq, "sequence source");
  ww_cmd->add_option("--N", ww_N, "range 0..N-1 with normalizer N")->check(CLI::PositiveNumber);
  ww_cmd->add_option("--start", ww_start, "override range start");
  ww_cmd->add_option("--end", ww_end, "override range end (inclusive)");
  ww_cmd->add_option("--normalizer", ww_norm, "override normalizer");
  ww_cmd->add_option("--grid-factor", ww_grid_factor, "frequency grid oversampling");
  ww_cmd->add_option("--refine-tol", ww_refine_tol, "ternary refinement width");

  // --- ww1 -------------------------------------------------------------
  auto* ww1_cmd = app.add_subcommand("ww1", "dyadic twisted-mean defect (WW1 diagnostic)");
  std::string ww1_seq = "vnweyl";
  std::string ww1_Ns = "512,1024,2048,4096";
  std::string ww1_tgrid;
  std::size_t ww1_uniform = 32;
  ww1_cmd->add_option("--seq", ww1_seq, "sequence source");
  ww1_cmd->add_option("--Ns", ww1_Ns, "dyadic ladder");
  ww1_cmd->add_option("--t-grid", ww1_tgrid, "explicit frequency grid (comma separated)");
  ww1_cmd->add_option("--t-grid-uniform", ww1_uniform, "size of the uniform frequency grid");

  // --- lemma-check -----------------------------------------------------
  auto* lemma_cmd = app.add_subcommand("lemma-check", "randomized finite-N inequality margins");
  int lemma_kind = 1;
  std::int64_t lemma_N = 64;
  std::string lemma_Ns;
  std::size_t lemma_trials = 50;
  std::string lemma_ensemble = "mixed";
  double lemma_margin_tol = 1e-9;
  lemma_cmd->add_option("kind", lemma_kind, "1 (three sequences) or 2 (seven sequences)")
      ->required()
      ->check(CLI::IsMember({1, 2}));
  lemma_cmd->add_option("--N", lemma_N, "average length")->check(CLI::PositiveNumber);
  lemma_cmd->add_option("--Ns", lemma_Ns, "ladder (kind 2: reports C_emp per N)");
  lemma_cmd->add_option("--trials", lemma_trials, "number of random tuples");
  lemma_cmd->add_option("--ensemble", lemma_ensemble, "pm1|unit|mixed")
      ->check(CLI::IsMember({"pm1", "unit", "mixed"}));
  lemma_cmd->add_option("--margin-tol", lemma_margin_tol, "allowed negative margin slack");

  // --- recurrence ------------------------------------------------------
  auto* rec_cmd = app.add_subcommand("recurrence", "Khintchine-type intersection series");
  int rec_kind = 2;
  std::string rec_t1 = "rotation:0.41421356237309515";
  std::string rec_t2 = "rotation:0.7320508075688772";
  std::string rec_t3 = "rotation:0.23606797749978969";
  std::string rec_set = "0:0.5";
  std::string rec_Ns = "64,128,256,512";
  std::string rec_mode = "auto";
  std::size_t rec_samples = 100000;
  double rec_tolerance = 1e-9;
  rec_cmd->add_option("kind", rec_kind, "2 or 3 transformations")
      ->required()
      ->check(CLI::IsMember({2, 3}));
  rec_cmd->add_option("--t1", rec_t1, "first system");
  rec_cmd->add_option("--t2", rec_t2, "second system");
  rec_cmd->add_option("--t3", rec_t3, "third system (kind 3)");
  rec_cmd->add_option("--set", rec_set, "box set, e.g. 0:0.5 or 0:0.5x0.25:0.75;...");
  rec_cmd->add_option("--Ns", rec_Ns, "ladder of N values");
  rec_cmd->add_option("--mode", rec_mode, "auto|exact|mc")
      ->check(CLI::IsMember({"auto", "exact", "mc"}));
  rec_cmd->add_option("--samples", rec_samples, "Monte Carlo samples");
  rec_cmd->add_option("--tolerance", rec_tolerance, "slack for the satisfied flag");

  // --- roots -----------------------------------------------------------
  auto* roots_cmd = app.add_subcommand("roots", "threshold roots of the degree-7 polynomials");
  std::string roots_which = "delta";
  double roots_tol = 1e-12;
  roots_cmd->add_option("--which", roots_which, "delta|beta")
      ->check(CLI::IsMember({"delta", "beta"}));
  roots_cmd->add_option("--tol", roots_tol, "bisection tolerance");

  // --- counterexample --------------------------------------------------
  auto* ce_cmd = app.add_subcommand("counterexample", "divergence constructions");
  std::string ce_which = "prop7";
  std::string ce_x = "0.137,0.291,0.548,0.806";
  std::string ce_point = "0.3183,0.5772";
  std::int64_t ce_N = 4096;
  std::string ce_Ns;
  double ce_diff_tol = -1.0;
  double ce_osc_min = 0.5;
  double ce_sup_tol = 1e-9;
  std::int64_t ce_ww1_N = 0;
  ce_cmd->add_option("which", ce_which, "prop7|prop9|uniform-ww")
      ->required()
      ->check(CLI::IsMember({"prop7", "prop9", "uniform-ww"}));
  ce_cmd->add_option("--x", ce_x, "point on T^4 (prop7, uniform-ww)");
  ce_cmd->add_option("--point", ce_point, "point on T^2 (prop9)");
  ce_cmd->add_option("--N", ce_N, "check length")->check(CLI::PositiveNumber);
  ce_cmd->add_option("--Ns", ce_Ns, "divergence ladder (default powers of growth)");
  ce_cmd->add_option("--diff-tol", ce_diff_tol, "collapse tolerance (default per construction)");
  ce_cmd->add_option("--osc-min", ce_osc_min, "required oscillation for divergence");
  ce_cmd->add_option("--sup-tol", ce_sup_tol, "tolerance for the uniform-ww sup");
  ce_cmd->add_option("--ww1-N", ce_ww1_N, "also report weight WW1 defects at this N (prop9)");

  // Global flags such as --seed and --format may appear after the
  // subcommand; let them fall through to the parent parser.
  for (CLI::App* sub : {orbit_cmd, avg_cmd, th_cmd, ww_cmd, ww1_cmd, lemma_cmd, rec_cmd,
                        roots_cmd, ce_cmd})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      app.exit(e);
      return kExitOk;
    }
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  const auto t0 = std::chrono::steady_clock::now();
  int exit_code = kExitOk;
  json report;

  try {
    if (*orbit_cmd) {
      report = report_skeleton("orbit");
      TorusSystem system = parse_system(orbit_system);
      TorusPoint point(parse_doubles(orbit_point));
      std::vector<double> coeff = parse_doubles(orbit_coeff);
      if (coeff.size() != 2) throw std::invalid_argument("--coeff must be re,im");
      Observable f = Observable::character(parse_ints(orbit_freq), cplx{coeff[0], coeff[1]});
      report["config"] = {{"system", orbit_system}, {"point", orbit_point},
                          {"freq", orbit_freq},     {"coeff", orbit_coeff},
                          {"N", orbit_N}};
      BoundedSequence seq = orbit_sequence(system, point, f, static_cast<std::size_t>(orbit_N));
      CesaroSeries series;
      for (std::size_t n = 0; n < seq.size(); ++n) {
        series.Ns.push_back(static_cast<std::int64_t>(n));
        series.values.push_back(seq[n]);
      }
      report["results"]["bound"] = seq.bound();
      report["results"]["series"] = series_json(series);
    } else if (*avg_cmd) {
      report = report_skeleton("average");
      const std::size_t N = static_cast<std::size_t>(avg_N);
      if (avg_kind == 2) {
        BoundedSequence a = make_sequence(avg_a, N, common.alpha, common.growth);
        BoundedSequence b = make_sequence(avg_b, N, common.alpha, common.growth);
        BoundedSequence c = make_sequence(avg_c, 2 * N - 1, common.alpha, common.growth);
        report["config"] = {{"kind", 2},           {"a", avg_a}, {"b", avg_b}, {"c", avg_c},
                            {"method", avg_method}, {"N", avg_N},
                            {"bounds", json::array({a.bound(), b.bound(), c.bound()})}};
        if (avg_method == "both") {
          cplx naive = cube_average_2(a, b, c, N, AverageMethod::Naive);
          cplx conv = cube_average_2(a, b, c, N, AverageMethod::Convolution);
          report["results"]["naive"] = complex_json(naive);
          report["results"]["convolution"] = complex_json(conv);
          report["results"]["abs_diff"] = std::abs(naive - conv);
        } else {
          AverageMethod m =
              avg_method == "naive" ? AverageMethod::Naive : AverageMethod::Convolution;
          report["results"]["value"] = complex_json(cube_average_2(a, b, c, N, m));
        }
      } else {
        if (avg_slots.empty()) throw std::invalid_argument("kind 3 needs at least one --slot");
        CubeSpec spec;
        json slot_echo = json::array();
        for (const std::string& text : avg_slots) {
          auto eq = text.find('=');
          if (eq == std::string::npos)
            throw std::invalid_argument("slot must be PATTERN=SOURCE[@twist]");
          IndexPattern pat = pattern_from_name(text.substr(0, eq));
          std::string rest = text.substr(eq + 1);
          double twist = 0.0;
          auto at = rest.find('@');
          if (at != std::string::npos) {
            twist = std::stod(rest.substr(at + 1));
            rest = rest.substr(0, at);
          }
          std::size_t len = pattern_max_index(pat, N) + 1;
          spec.slots.push_back(
              CubeSlot{make_sequence(rest, len, common.alpha, common.growth), pat, twist});
          slot_echo.push_back(text);
        }
        report["config"] = {{"kind", 3}, {"slots", slot_echo}, {"N", avg_N}};
        report["results"]["value"] = complex_json(cube_average_3(spec, N));
      }
    } else if (*th_cmd) {
      report = report_skeleton("theorem1");
      std::vector<std::int64_t> Ns = parse_ints(th_Ns);
      std::vector<TorusSystem> systems;
      std::vector<Observable> fs;
      TorusPoint point({0.0});
      if (th_config == "skew") {
        std::vector<double> alphas =
            th_alphas.empty() ? std::vector<double>{0.41421356237309515, 0.7320508075688772}
                              : parse_doubles(th_alphas);
        if (alphas.size() != 2) throw std::invalid_argument("skew config needs two angles");
        point = TorusPoint(th_point.empty() ? std::vector<double>{0.1234, 0.2468}
                                            : parse_doubles(th_point));
        for (int i = 0; i < 6; ++i) {
          systems.push_back(TorusSystem::skew_product(alphas[i % 2]));
          fs.push_back(Observable::character({0, 1}));
        }
        report["results"]["commutator_defect"] =
            commutator_defect(systems[0], systems[1], point);
      } else {
        std::vector<double> alphas = parse_doubles(th_alphas);
        if (alphas.size() != 6) throw std::invalid_argument("rotation config needs six angles");
        point =
            TorusPoint(th_point.empty() ? std::vector<double>{0.1234} : parse_doubles(th_point));
        for (int i = 0; i < 6; ++i) {
          systems.push_back(TorusSystem::rotation({alphas[i]}));
          fs.push_back(Observable::character({1}));
        }
      }
      report["config"] = {{"config", th_config},
                          {"alphas", th_alphas},
                          {"point", th_point},
                          {"Ns", th_Ns}};
      CesaroSeries series = theorem1_series(systems, fs, point, Ns);
      report["results"]["series"] = series_json(series);
      json incs = json::array();
      for (std::size_t i = 1; i < series.values.size(); ++i)
        incs.push_back(std::abs(series.values[i] - series.values[i - 1]));
      report["results"]["cauchy_increments"] = incs;
      double diameter = 0.0;
      for (std::size_t i = 0; i < series.values.size(); ++i)
        for (std::size_t j = i + 1; j < series.values.size(); ++j)
          diameter = std::max(diameter, std::abs(series.values[i] - series.values[j]));
      report["results"]["oscillation"] = diameter;
    } else if (*ww_cmd) {
      report = report_skeleton("ww-sup");
      TwistedSumSpec spec = TwistedSumSpec::standard(ww_N);
      if (ww_start >= 0) spec.start = ww_start;
      if (ww_end >= 0) spec.end = ww_end;
      if (ww_norm >= 1) spec.normalizer = ww_norm;
      std::size_t len = static_cast<std::size_t>(spec.end + 1);
      BoundedSequence seq = make_sequence(ww_seq, len, common.alpha, common.growth);
      report["config"] = {{"seq", ww_seq},
                          {"N", ww_N},
                          {"start", spec.start},
                          {"end", spec.end},
                          {"normalizer", spec.normalizer},
                          {"grid_factor", ww_grid_factor},
                          {"refine_tol", ww_refine_tol},
                          {"seq_bound", seq.bound()}};
      WWReport ww = ww_sup(seq, spec, WWSupOptions{ww_grid_factor, ww_refine_tol});
      report["results"] = {{"sup_value", ww.sup_value},
                           {"argmax_t", ww.argmax_t},
                           {"grid_size", ww.grid_size},
                           {"refined", ww.refined}};
    } else if (*ww1_cmd) {
      report = report_skeleton("ww1");
      std::vector<std::int64_t> Ns = parse_ints(ww1_Ns);
      std::vector<double> tgrid;
      if (!ww1_tgrid.empty()) {
        tgrid = parse_doubles(ww1_tgrid);
      } else {
        for (std::size_t j = 0; j < ww1_uniform; ++j)
          tgrid.push_back(static_cast<double>(j) / static_cast<double>(ww1_uniform));
        tgrid.push_back(0.61803398874989485);
      }
      BoundedSequence seq = make_sequence(ww1_seq, static_cast<std::size_t>(Ns.back()),
                                          common.alpha, common.growth);
      report["config"] = {{"seq", ww1_seq},
                          {"Ns", ww1_Ns},
                          {"t_grid_size", tgrid.size()},
                          {"seq_bound", seq.bound()}};
      WW1Report ww1 = ww1_defect(seq, tgrid, Ns);
      report["results"] = {{"defect", ww1.defect},
                           {"witness_t", ww1.witness_t},
                           {"witness_N", ww1.witness_N}};
    } else if (*lemma_cmd) {
      report = report_skeleton("lemma-check");
      if (lemma_trials == 0) throw std::invalid_argument("lemma-check: trials must be >= 1");
      SplitMix64 base(common.seed);
      if (lemma_kind == 1) {
        const std::size_t N = static_cast<std::size_t>(lemma_N);
        report["config"] = {{"kind", 1},
                            {"N", lemma_N},
                            {"trials", lemma_trials},
                            {"ensemble", lemma_ensemble},
                            {"seed", common.seed},
                            {"margin_tol", lemma_margin_tol}};
        double min_margin = std::numeric_limits<double>::infinity();
        json worst;
        std::size_t violations = 0;
        for (std::size_t trial = 0; trial < lemma_trials; ++trial) {
          SplitMix64 g = base.fork(trial);
          bool pm1 = lemma_ensemble == "pm1" ||
                     (lemma_ensemble == "mixed" && trial % 2 == 0);
          auto gen = [&](std::size_t len) {
            std::vector<cplx> v(len);
            for (auto& x : v) x = pm1 ? cplx{g.next_sign(), 0.0} : g.next_unit_complex();
            return BoundedSequence(std::move(v), 1.0);
          };
          BoundedSequence a = gen(N + 1), b = gen(N + 1), c = gen(2 * N - 1);
          MarginReport r = lemma1_margin(a, b, c, N);
          if (r.margin < min_margin) {
            min_margin = r.margin;
            worst = {{"name", "trial" + std::to_string(trial)},
                     {"lhs", r.lhs},
                     {"rhs", r.rhs},
                     {"margin", r.margin},
                     {"witness", r.witness}};
          }
          if (r.margin < -lemma_margin_tol) ++violations;
        }
        report["results"]["min_margin"] = min_margin;
        report["results"]["violations"] = violations;
        report["results"]["margins"] = json::array({worst});
        if (violations > 0) exit_code = kExitCheckFailed;
      } else {
        std::vector<std::int64_t> Ns =
            lemma_Ns.empty() ? std::vector<std::int64_t>{lemma_N} : parse_ints(lemma_Ns);
        report["config"] = {{"kind", 2},
                            {"Ns", Ns},
                            {"trials", lemma_trials},
                            {"seed", common.seed}};
        json per_n = json::array();
        double overall = 0.0;
        bool infinite = false;
        for (std::int64_t N : Ns) {
          double c_emp = 0.0;
          for (std::size_t trial = 0; trial < lemma_trials; ++trial) {
            SplitMix64 g = base.fork(trial * 97 + static_cast<std::uint64_t>(N));
            std::array<BoundedSequence, 7> tuple = {
                BoundedSequence::ones(1), BoundedSequence::ones(1), BoundedSequence::ones(1),
                BoundedSequence::ones(1), BoundedSequence::ones(1), BoundedSequence::ones(1),
                BoundedSequence::ones(1)};
            const std::size_t len = 3 * static_cast<std::size_t>(N) - 2;
            for (int s = 0; s < 7; ++s) {
              std::vector<cplx> v(len);
              for (auto& xv : v) xv = g.next_unit_complex();
              tuple[s] = BoundedSequence(std::move(v), 1.0);
            }
            Lemma2Report r = lemma2_margin(tuple, static_cast<std::size_t>(N));
            if (std::isinf(r.ratio)) infinite = true;
            c_emp = std::max(c_emp, r.ratio);
          }
          per_n.push_back({{"N", N}, {"c_emp", c_emp}});
          overall = std::max(overall, c_emp);
        }
        report["results"]["per_N"] = per_n;
        report["results"]["c_emp_max"] = overall;
        if (infinite) exit_code = kExitCheckFailed;
      }
    } else if (*rec_cmd) {
      report = report_skeleton("recurrence");
      BoxSet A = parse_box_set(rec_set);
      std::vector<std::int64_t> Ns = parse_ints(rec_Ns);
      McConfig mc;
      mc.mode = rec_mode == "auto" ? McMode::Auto
                                   : (rec_mode == "exact" ? McMode::Exact : McMode::MonteCarlo);
      mc.samples = rec_samples;
      mc.seed = common.seed;
      mc.tolerance = rec_tolerance;
      report["config"] = {{"kind", rec_kind},   {"t1", rec_t1},
                          {"t2", rec_t2},       {"t3", rec_kind == 3 ? rec_t3 : ""},
                          {"set", rec_set},     {"Ns", rec_Ns},
                          {"mode", rec_mode},   {"samples", rec_samples},
                          {"seed", common.seed}, {"tolerance", rec_tolerance}};
      RecurrenceReport r =
          rec_kind == 2
              ? khintchine2_series(parse_system(rec_t1), parse_system(rec_t2), A, Ns, mc)
              : khintchine3_series(parse_system(rec_t1), parse_system(rec_t2),
                                   parse_system(rec_t3), A, Ns, mc);
      report["results"]["muA"] = r.muA;
      report["results"]["series"] = real_series_json(r.Ns, r.series_values);
      report["results"]["limit_estimate"] = r.limit_estimate;
      report["results"]["uncertainty"] = r.uncertainty;
      report["results"]["lower_bound"] = r.lower_bound;
      report["results"]["bound_name"] = r.bound_name;
      report["results"]["satisfied"] = r.satisfied == BoundStatus::Satisfied
                                           ? "yes"
                                           : (r.satisfied == BoundStatus::Violated
                                                  ? "no"
                                                  : "not-applicable");
      report["results"]["path"] = r.path;
      if (r.satisfied == BoundStatus::Violated) exit_code = kExitCheckFailed;
    } else if (*roots_cmd) {
      report = report_skeleton("roots");
      report["config"] = {{"which", roots_which}, {"tol", roots_tol}};
      ThresholdKind kind = roots_which == "delta" ? ThresholdKind::Delta : ThresholdKind::Beta;
      double value = threshold_root(kind, roots_tol);
      double root = kind == ThresholdKind::Delta ? 1.0 - value : value;
      double lead = kind == ThresholdKind::Delta ? 0.5 : 1.0;
      double r3 = root * root * root;
      double residual = lead * r3 * r3 * root + root - 1.0;
      report["results"] = {{"which", roots_which},
                           {"value", value},
                           {"root", root},
                           {"residual", residual}};
    } else if (*ce_cmd) {
      report = report_skeleton("counterexample");
      if (ce_which == "prop7") {
        TorusPoint x(parse_doubles(ce_x));
        std::vector<std::int64_t> Ns;
        if (!ce_Ns.empty()) {
          Ns = parse_ints(ce_Ns);
        } else {
          std::int64_t v = static_cast<std::int64_t>(common.growth);
          for (int k = 1; k <= 9; ++k) {
            Ns.push_back(v);
            v *= static_cast<std::int64_t>(common.growth);
          }
        }
        std::int64_t cap = std::max<std::int64_t>(ce_N, Ns.back());
        Prop7Instance inst = make_prop7_instance(common.alpha, x, cap, common.growth);
        double diff_tol = ce_diff_tol > 0 ? ce_diff_tol : 1e-10;
        report["config"] = {{"which", ce_which},   {"alpha", common.alpha},
                            {"x", ce_x},           {"growth", common.growth},
                            {"N", ce_N},           {"Ns", Ns},
                            {"diff_tol", diff_tol}, {"osc_min", ce_osc_min}};
        CollapseCheck chk = prop7_check(inst, static_cast<std::size_t>(ce_N));
        double osc = prop7_divergence(inst, Ns, false);
        // control oscillation is measured where the convergent series has
        // settled: the last three ladder points
        std::vector<std::int64_t> tail(Ns.end() - std::min<std::size_t>(3, Ns.size()), Ns.end());
        double control = prop7_divergence(inst, tail, true);
        report["results"] = {{"lhs", complex_json(chk.lhs)},
                             {"rhs", complex_json(chk.rhs)},
                             {"diff", chk.diff},
                             {"oscillation", osc},
                             {"control_oscillation", control}};
        if (chk.diff > diff_tol || osc < ce_osc_min) exit_code = kExitCheckFailed;
      } else if (ce_which == "prop9") {
        TorusPoint point(parse_doubles(ce_point));
        double diff_tol = ce_diff_tol > 0 ? ce_diff_tol : 1e-9;
        std::int64_t cap = std::max<std::int64_t>(ce_N, std::max<std::int64_t>(ce_ww1_N, 1));
        Prop9Instance inst = make_prop9_instance(common.alpha, point, cap, common.growth);
        report["config"] = {{"which", ce_which},  {"alpha", common.alpha},
                            {"point", ce_point},  {"growth", common.growth},
                            {"N", ce_N},          {"diff_tol", diff_tol},
                            {"ww1_N", ce_ww1_N}};
        CollapseCheck chk = prop9_check(inst, static_cast<std::size_t>(ce_N));
        report["results"] = {{"lhs", complex_json(chk.lhs)},
                             {"rhs", complex_json(chk.rhs)},
                             {"diff", chk.diff}};
        if (ce_ww1_N > 1) {
          std::vector<std::int64_t> ladder;
          for (std::int64_t v = std::max<std::int64_t>(ce_ww1_N / 8, 2); v <= ce_ww1_N; v *= 2)
            ladder.push_back(v);
          std::vector<double> tgrid;
          for (int j = 0; j < 32; ++j) tgrid.push_back(j / 32.0);
          tgrid.push_back(0.61803398874989485);
          json defects = json::array();
          for (std::size_t s = 0; s < 6; ++s) {
            BoundedSequence w = truncate(inst.weights[s], static_cast<std::size_t>(ce_ww1_N));
            defects.push_back(ww1_defect(w, tgrid, ladder).defect);
          }
          report["results"]["ww1_defects"] = defects;
        }
        if (chk.diff > diff_tol) exit_code = kExitCheckFailed;
      } else {
        TorusPoint x(parse_doubles(ce_x));
        report["config"] = {{"which", ce_which},
                            {"alpha", common.alpha},
                            {"x", ce_x},
                            {"N", ce_N},
                            {"sup_tol", ce_sup_tol}};
        WWReport ww = uniform_ww_failure(x, common.alpha, static_cast<std::size_t>(ce_N));
        WWReport control = uniform_ww_ergodic_control(TorusPoint({x[0], x[1]}), common.alpha,
                                                      static_cast<std::size_t>(ce_N));
        double expected = fract(-(x[2] - x[0]));
        report["results"] = {{"sup_value", ww.sup_value},
                             {"argmax_t", ww.argmax_t},
                             {"expected_argmax", expected},
                             {"control_sup", control.sup_value}};
        if (std::fabs(ww.sup_value - 1.0) > ce_sup_tol) exit_code = kExitCheckFailed;
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const auto t1 = std::chrono::steady_clock::now();
  const double wall_ms =
      std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count() / 1000.0;
  // Wall time goes to stderr by default so identical configs produce
  // byte-identical reports; --timing opts into embedding it.
  if (common.timing) {
    report["timing"] = {{"wall_ms", wall_ms}};
  } else {
    std::cerr << "# wall_ms " << wall_ms << "\n";
  }

  try {
    emit(report, common.format, common.out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return exit_code;
}

}  // namespace cubeavg::cli
