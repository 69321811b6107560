#pragma once

// Command-line front end. Every run is first turned into a RunConfig (a JSON
// object holding the command, its parameters, the resolved seed and the
// output settings) and then executed from that object alone, so saving the
// object and replaying it reproduces the data output byte for byte.
//
// Needs CLI11.hpp and json.hpp on the include path.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "contperc/boolean_model.hpp"
#include "contperc/branching.hpp"
#include "contperc/error.hpp"
#include "contperc/estimation.hpp"
#include "contperc/geometry.hpp"
#include "contperc/mixture.hpp"
#include "contperc/pathcount.hpp"
#include "contperc/thresholds.hpp"

namespace contperc::cli {

using Json = nlohmann::ordered_json;

inline constexpr std::uint64_t kDefaultSeed = 20240601;

enum ExitCode : int { kOk = 0, kUsage = 2, kRuntime = 3 };

/// Rows of named values; the column order is the key order of the first row.
struct Table {
  std::vector<Json> rows;
  /// Emit a JSON array even for a single row.
  bool sweep = false;
};

namespace detail {

inline std::string csv_field(const Json& v) {
  std::string s;
  if (v.is_string()) {
    s = v.get<std::string>();
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + csv_field(v[i]);
  } else {
    s = v.dump();
  }
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
  return quoted + "\"";
}

inline std::uint64_t resolve_seed(const std::string& text) {
  if (text == "random") {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used, 0);
    if (used == text.size() && text.find('-') == std::string::npos) return v;
  } catch (const std::logic_error&) {
  }
  throw InvalidArgument("seed must be a non-negative integer or 'random'");
}

template <class T>
T param(const Json& p, const char* key) {
  if (!p.contains(key)) throw InvalidArgument(std::string("missing parameter '") + key + "'");
  return p.at(key).get<T>();
}

inline Json threshold_row(const estimation::ThresholdEstimate& e) {
  return Json{{"lambda_c", e.lambda_c},
              {"ci_low", e.ci_low},
              {"ci_high", e.ci_high},
              {"normalized", e.normalized},
              {"normalized_low", e.normalized_low},
              {"normalized_high", e.normalized_high},
              {"covered_volume", e.covered_volume},
              {"covered_volume_low", e.covered_volume_low()},
              {"covered_volume_high", e.covered_volume_high()},
              {"resolution_limited", e.resolution_limited},
              {"levels", e.history.size()}};
}

inline estimation::ProgressFn progress_printer(std::ostream& err, bool quiet, std::string tag = {}) {
  if (quiet) return {};
  return [&err, tag = std::move(tag)](const estimation::BisectionLevel& level, double lo, double hi) {
    err << tag << "level normalized=" << level.intensity << " crossings=" << level.successes << '/' << level.trials
        << " bracket=[" << lo << ", " << hi << "]\n";
  };
}

inline Table run_kappa(const Json& p) {
  const double rho = param<double>(p, "rho");
  thresholds::KappaResult r;
  if (p.contains("k")) {
    r = thresholds::kappa_c_k(rho, param<int>(p, "k"));
  } else {
    r = thresholds::kappa_c(rho, param<int>(p, "kmax"));
  }
  return {{Json{{"rho", r.rho},
                {"k", r.k_used},
                {"kappa", r.kappa},
                {"offsets", r.argmin_offsets},
                {"genealogy", r.branch_values.genealogy},
                {"geometry", r.branch_values.geometry},
                {"over_all_k", r.over_all_k},
                {"certified", r.certified}}}};
}

inline Table run_kappa_sweep(const Json& p) {
  const double lo = param<double>(p, "rho_min");
  const double hi = param<double>(p, "rho_max");
  const int steps = param<int>(p, "steps");
  const int k_max = param<int>(p, "kmax");
  require(lo > 1.0 && hi > 1.0, "rho must exceed 1");
  require(hi >= lo, "rho_max must not be below rho_min");
  require(steps >= 1 && (steps >= 2 || hi == lo), "steps must be at least 2 for a non-trivial range");
  require(k_max >= 3, "kmax must be at least 3");
  Table t;
  t.sweep = true;
  for (int i = 0; i < steps; ++i) {
    const double rho = steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1);
    const auto all = thresholds::kappa_c(rho, k_max);
    t.rows.push_back(Json{{"rho", rho},
                          {"kappa_k1", thresholds::kappa_c_k(rho, 1).kappa},
                          {"kappa_k2", thresholds::kappa_c_k(rho, 2).kappa},
                          {"kappa_k3", thresholds::kappa_c_k(rho, 3).kappa},
                          {"kappa_min", all.kappa},
                          {"k_argmin", all.k_used}});
  }
  return t;
}

inline Table run_threshold(const Json& p, std::uint64_t seed, unsigned threads, std::ostream& err, bool quiet) {
  const int d = param<int>(p, "d");
  const auto mixture = RadiusMixture::parse(param<std::string>(p, "mixture"));
  const boolean_model::BoxSpec box{d, param<double>(p, "L"), boolean_model::Boundary::kCrossing};
  const auto trials = param<std::int64_t>(p, "trials");
  const estimation::EstimationOptions opt{threads, progress_printer(err, quiet)};
  const auto e = estimation::estimate_lambda_c(mixture, box, trials, param<double>(p, "tol"), seed, opt);
  Json row{{"d", d}, {"mixture", mixture.to_string()}, {"L", box.side}, {"trials", trials}, {"seed", seed}};
  row.update(threshold_row(e));
  return {{row}};
}

inline Table run_alpha_sweep(const Json& p, std::uint64_t seed, unsigned threads, std::ostream& err, bool quiet) {
  const double rho = param<double>(p, "rho");
  const int d = param<int>(p, "d");
  const double side = param<double>(p, "L");
  const auto trials = param<std::int64_t>(p, "trials");
  const auto alphas = param<std::vector<double>>(p, "alphas");
  require(!alphas.empty(), "need at least one alpha");
  Table t;
  t.sweep = true;
  for (double alpha : alphas) {
    std::ostringstream tag;
    tag << "alpha=" << alpha << ' ';
    const estimation::EstimationOptions opt{threads, progress_printer(err, quiet, tag.str())};
    const auto pts = estimation::alpha_sweep(rho, {alpha}, d, side, trials, seed, param<double>(p, "tol"), opt);
    const auto& e = pts.front().estimate;
    t.rows.push_back(Json{{"rho", rho},
                          {"alpha", alpha},
                          {"d", d},
                          {"L", side},
                          {"trials", trials},
                          {"lambda_c", e.lambda_c},
                          {"ci_low", e.ci_low},
                          {"ci_high", e.ci_high},
                          {"normalized", e.normalized},
                          {"covered_volume", e.covered_volume},
                          {"seed", seed}});
  }
  return t;
}

inline Table run_gw(const Json& p) {
  const int d = param<int>(p, "d");
  const double rho = param<double>(p, "rho");
  const double limit = branching::gw_critical_kappa_limit(rho);
  const double kappa = p.contains("kappa") ? param<double>(p, "kappa") : limit;
  const auto m = branching::mean_matrix(d, kappa, rho);
  return {{Json{{"d", d},
                {"kappa", kappa},
                {"rho", rho},
                {"r_d_log", branching::log_perron_root(m)},
                {"kappa_star_d", branching::gw_critical_kappa(d, rho)},
                {"kappa_star_limit", limit}}}};
}

inline Table run_paths(const Json& p, std::uint64_t seed, unsigned threads, std::ostream& err, bool quiet) {
  const int d = param<int>(p, "d");
  const double rho = param<double>(p, "rho");
  const double kappa = param<double>(p, "kappa");
  const int k = param<int>(p, "k");
  const auto trials = param<std::uint64_t>(p, "trials");
  if (!quiet) err << "paths: " << trials << " trials\n";
  const auto r = pathcount::count_paths(d, rho, kappa, k, trials, seed, threads);
  if (!quiet) err << "paths: " << trials << " trials done\n";
  return {{Json{{"d", d},
                {"rho", rho},
                {"kappa", kappa},
                {"k", k},
                {"mean_N", r.mean_N},
                {"se_N", r.se_N},
                {"mean_M", r.mean_M},
                {"se_M", r.se_M},
                {"exact_M", r.exact_M},
                {"gw_bound", r.gw_bound}}}};
}

inline Table run_slab(const Json& p) {
  const geometry::SlabSpec s{param<int>(p, "d"), param<double>(p, "r"), param<double>(p, "a"), param<double>(p, "b")};
  return {{Json{{"d", s.dimension},
                {"r", s.radius},
                {"a", s.lower},
                {"b", s.upper},
                {"volume", geometry::slab_volume(s)},
                {"log_volume", geometry::log_slab_volume(s)},
                {"log_rate", geometry::slab_log_rate(s)},
                {"log_rate_limit", geometry::slab_log_rate_limit(s)}}}};
}

inline void write_table(std::ostream& os, const Table& t, const std::string& format) {
  if (format == "json") {
    os << (t.sweep ? Json(t.rows) : t.rows.front()).dump(2) << '\n';
    return;
  }
  if (t.rows.empty()) return;
  bool first = true;
  for (const auto& [key, _] : t.rows.front().items()) {
    os << (first ? "" : ",") << key;
    first = false;
  }
  os << '\n';
  for (const auto& row : t.rows) {
    first = true;
    for (const auto& [_, value] : row.items()) {
      os << (first ? "" : ",") << csv_field(value);
      first = false;
    }
    os << '\n';
  }
}

}  // namespace detail

/// Executes a RunConfig, writing data to `out` (or to the configured file)
/// and diagnostics to `err`.
inline void execute(const Json& config, std::ostream& out, std::ostream& err) {
  const auto command = detail::param<std::string>(config, "command");
  const Json& p = config.at("params");
  const auto seed = detail::param<std::uint64_t>(config, "seed");
  const auto format = detail::param<std::string>(config, "format");
  const auto threads = detail::param<unsigned>(config, "threads");
  const bool quiet = config.value("quiet", false);
  require(format == "csv" || format == "json", "format must be csv or json");

  std::ofstream file;
  const auto output = config.value("output", std::string("-"));
  std::ostream* sink = &out;
  if (output != "-") {
    file.open(output, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open output file '" + output + "'");
    sink = &file;
  }

  if (command == "sample") {
    const int d = detail::param<int>(p, "d");
    const auto mixture = RadiusMixture::parse(detail::param<std::string>(p, "mixture"));
    const auto boundary = detail::param<std::string>(p, "boundary");
    require(boundary == "crossing" || boundary == "torus", "boundary must be crossing or torus");
    const boolean_model::BoxSpec box{d, detail::param<double>(p, "L"),
                                     boundary == "torus" ? boolean_model::Boundary::kTorus
                                                         : boolean_model::Boundary::kCrossing};
    const auto config_out = boolean_model::sample(mixture, detail::param<double>(p, "lambda"), box, seed);
    boolean_model::write_configuration(*sink, config_out);
    return;
  }

  Table table;
  if (command == "kappa") table = detail::run_kappa(p);
  else if (command == "kappa-sweep") table = detail::run_kappa_sweep(p);
  else if (command == "threshold") table = detail::run_threshold(p, seed, threads, err, quiet);
  else if (command == "alpha-sweep") table = detail::run_alpha_sweep(p, seed, threads, err, quiet);
  else if (command == "gw") table = detail::run_gw(p);
  else if (command == "paths") table = detail::run_paths(p, seed, threads, err, quiet);
  else if (command == "slab") table = detail::run_slab(p);
  else throw InvalidArgument("unknown command '" + command + "'");
  detail::write_table(*sink, table, format);
}

/// Parses argv into a RunConfig and executes it. Returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Continuum percolation thresholds of multi-radius Boolean models", "contperc"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string format = "json";
  std::string output = "-";
  std::string seed_text = std::to_string(kDefaultSeed);
  std::string save_config;
  unsigned threads = 0;
  bool quiet = false;
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--output,-o", output, "Output file ('-' for standard output)");
  app.add_option("--seed", seed_text, "64-bit seed or 'random'");
  app.add_option("--threads", threads, "Worker threads (0 = all)");
  app.add_option("--save-config", save_config, "Write the resolved run configuration as JSON");
  app.add_flag("--quiet,-q", quiet, "Suppress progress output");

  Json params = Json::object();
  std::string command;

  double rho = 0;
  int k = 0;
  int k_max = thresholds::kDefaultKMax;
  auto* kappa = app.add_subcommand("kappa", "Minimax threshold kappa_c(k) or its minimum over k");
  kappa->add_option("--rho", rho)->required();
  auto* k_opt = kappa->add_option("--k", k, "Alternation length");
  kappa->add_option("--kmax", k_max, "Minimize over k = 1..kmax")->excludes(k_opt);

  double rho_min = 1.1, rho_max = 10.0;
  int steps = 90;
  int sweep_kmax = thresholds::kDefaultKMax;
  auto* sweep = app.add_subcommand("kappa-sweep", "Table of kappa_c(k) for k = 1, 2, 3 and the minimum over k");
  sweep->add_option("--rho-min", rho_min);
  sweep->add_option("--rho-max", rho_max);
  sweep->add_option("--steps", steps, "Number of rows, end points included");
  sweep->add_option("--kmax", sweep_kmax);

  int d = 2;
  std::string mixture = "1:1";
  double side = 64.0;
  std::int64_t trials = 200;
  double tol = 0.02;
  auto* threshold = app.add_subcommand("threshold", "Estimate the critical intensity in a crossing box");
  threshold->add_option("--d", d)->required();
  threshold->add_option("--mixture", mixture, "Radius atoms r:w[,r:w...]");
  threshold->add_option("--L", side, "Box side");
  threshold->add_option("--trials", trials, "Trials per bisection level");
  threshold->add_option("--tol", tol, "Relative bracket width target");

  std::vector<double> alphas{0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0};
  double alpha_rho = 10.0;
  auto* alpha = app.add_subcommand("alpha-sweep", "Critical covered volume along (1-a) delta_1 + a rho^-d delta_rho");
  alpha->add_option("--rho", alpha_rho);
  alpha->add_option("--d", d);
  alpha->add_option("--L", side, "Box side in units of the largest radius");
  alpha->add_option("--trials", trials);
  alpha->add_option("--alphas", alphas)->delimiter(',');
  alpha->add_option("--tol", tol);

  double kappa_value = 0;
  auto* gw = app.add_subcommand("gw", "Two-type branching process comparison");
  gw->add_option("--d", d)->required();
  gw->add_option("--rho", rho)->required();
  auto* gw_kappa = gw->add_option("--kappa", kappa_value, "Defaults to the large-d critical value");

  std::uint64_t path_trials = 100000;
  auto* paths = app.add_subcommand("paths", "Monte Carlo counts of k-alternating paths");
  paths->add_option("--d", d)->required();
  paths->add_option("--rho", rho)->required();
  paths->add_option("--kappa", kappa_value)->required();
  paths->add_option("--k", k)->required();
  paths->add_option("--trials", path_trials);

  double r = 1, a = 0, b = 1;
  auto* slab = app.add_subcommand("slab", "Volume of a ball slab");
  slab->add_option("--d", d)->required();
  slab->add_option("--r", r);
  slab->add_option("--a", a)->required();
  slab->add_option("--b", b)->required();

  double lambda = 1.0;
  std::string boundary = "crossing";
  auto* sample = app.add_subcommand("sample", "Write one sampled configuration");
  sample->add_option("--d", d)->required();
  sample->add_option("--mixture", mixture);
  sample->add_option("--lambda", lambda)->required();
  sample->add_option("--L", side);
  sample->add_option("--boundary", boundary)->check(CLI::IsMember({"crossing", "torus"}));

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "Re-run a saved configuration");
  replay->add_option("config", replay_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    Json config;
    if (*replay) {
      std::ifstream in(replay_path);
      if (!in) throw InvalidArgument("cannot read configuration '" + replay_path + "'");
      try {
        config = Json::parse(in);
      } catch (const Json::exception& e) {
        throw InvalidArgument(std::string("malformed configuration: ") + e.what());
      }
      // Destination flags given on the command line take precedence.
      if (app.get_option("--output")->count()) config["output"] = output;
      if (app.get_option("--threads")->count()) config["threads"] = threads;
      if (quiet) config["quiet"] = true;
    } else {
      if (*kappa) {
        command = "kappa";
        params = {{"rho", rho}};
        if (k_opt->count()) params["k"] = k;
        else params["kmax"] = k_max;
      } else if (*sweep) {
        command = "kappa-sweep";
        params = {{"rho_min", rho_min}, {"rho_max", rho_max}, {"steps", steps}, {"kmax", sweep_kmax}};
      } else if (*threshold) {
        command = "threshold";
        params = {{"d", d}, {"mixture", mixture}, {"L", side}, {"trials", trials}, {"tol", tol}};
      } else if (*alpha) {
        command = "alpha-sweep";
        params = {{"rho", alpha_rho}, {"d", d}, {"L", side}, {"trials", trials}, {"alphas", alphas}, {"tol", tol}};
      } else if (*gw) {
        command = "gw";
        params = {{"d", d}, {"rho", rho}};
        if (gw_kappa->count()) params["kappa"] = kappa_value;
      } else if (*paths) {
        command = "paths";
        params = {{"d", d}, {"rho", rho}, {"kappa", kappa_value}, {"k", k}, {"trials", path_trials}};
      } else if (*slab) {
        command = "slab";
        params = {{"d", d}, {"r", r}, {"a", a}, {"b", b}};
      } else if (*sample) {
        command = "sample";
        params = {{"d", d}, {"mixture", mixture}, {"lambda", lambda}, {"L", side}, {"boundary", boundary}};
      }
      config = {{"command", command},
                {"params", params},
                {"seed", detail::resolve_seed(seed_text)},
                {"format", format},
                {"output", output},
                {"threads", threads},
                {"quiet", quiet}};
    }
    if (!save_config.empty()) {
      std::ofstream cfg(save_config, std::ios::binary);
      if (!cfg) throw std::runtime_error("cannot write configuration '" + save_config + "'");
      cfg << config.dump(2) << '\n';
    }
    execute(config, out, err);
    return kOk;
  } catch (const InvalidArgument& e) {
    err << "contperc: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "contperc: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace contperc::cli
