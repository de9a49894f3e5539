#pragma once

// The wfm command-line interface. run_cli() is kept in a header so the test
// suite can drive it in-process.

#include <CLI11/CLI11.hpp>

#include <Eigen/Core>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wfm/wfm.hpp"

namespace wfm::cli {

namespace fs = std::filesystem;
using json = io::json;

/// Writes through a temporary sibling file and renames it into place.
inline void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    body(out);
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

inline void write_json(const fs::path& path, const json& j) {
  write_atomic(path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config '" + path + "': " + e.what());
  }
}

/// Options shared by the subcommands; each may also come from --config.
struct Settings {
  std::string config;
  std::string data;
  std::string out = ".";
  std::string orientation = "rows";
  bool transform = false;
  bool no_standardize = false;
  int rmax = kDefaultRmax;
  double c = 1.0;
  int window = kDefaultWindow;
  std::uint64_t seed = 0;
  int reps = 1;
  int workers = 1;
  std::string methods;
  std::string tasks = "wz,bn,ed,ah,pc";
  std::string panel_out;
  std::string from, to;
  int r = 0;
  // Simulation design overrides.
  int n = 0, t = 0;
  std::vector<double> alpha;
  std::string preprocess;
};

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (auto v = csv::trim(item); !v.empty()) out.emplace_back(v);
  return out;
}

inline std::vector<CountMethod> parse_methods(const std::string& s) {
  std::vector<CountMethod> out;
  for (const auto& tag : split_list(s)) {
    const CountMethod m = parse_method(tag);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw Error("--methods is empty");
  return out;
}

inline std::string join_methods(const std::vector<CountMethod>& ms) {
  std::string s;
  for (CountMethod m : ms) {
    if (!s.empty()) s += ',';
    s += method_tag(m);
  }
  return s;
}

struct LoadedPanel {
  Panel panel;
  std::vector<DroppedSeries> dropped;
};

inline LoadedPanel load_panel(const Settings& s) {
  if (s.data.empty()) throw Error("--data is required");
  std::ifstream in(s.data, std::ios::binary);
  if (!in) throw Error("cannot read data file '" + s.data + "'");
  Orientation o;
  if (s.orientation == "rows")
    o = Orientation::series_in_rows;
  else if (s.orientation == "columns")
    o = Orientation::series_in_columns;
  else
    throw Error("--orientation must be 'rows' or 'columns'");
  IngestResult res = ingest_csv(in, o);
  LoadedPanel lp{std::move(res.panel), std::move(res.dropped)};
  if (s.transform) {
    if (!res.tcodes) throw Error("--transform requires a tcode column in '" + s.data + "'");
    lp.panel = align_and_trim(lp.panel, *res.tcodes);
  }
  return lp;
}

inline json dropped_json(const std::vector<DroppedSeries>& d) {
  json a = json::array();
  for (const auto& x : d) a.push_back({{"series", x.name}, {"reason", x.reason}});
  return a;
}

inline void check_ranges(const Settings& s) {
  if (s.rmax < 1) throw Error("--rmax must be positive");
  if (!(s.c > 0.0)) throw Error("--c must be positive");
  if (s.window < 2) throw Error("--window must be at least 2");
  if (s.reps < 1) throw Error("--reps must be positive");
  if (s.workers < 1) throw Error("--workers must be positive");
  if (s.r < 0) throw Error("--r must be positive");
}

/// Fills settings from the --config document wherever the flag was not given.
inline void apply_config(const json& j, Settings& s, const CLI::App& sub) {
  const auto unset = [&](const char* flag) { return sub.count(flag) == 0; };
  try {
    if (j.contains("data") && unset("--data")) s.data = j.at("data").get<std::string>();
    if (j.contains("out") && unset("--out")) s.out = j.at("out").get<std::string>();
    if (j.contains("orientation") && unset("--orientation")) s.orientation = j.at("orientation").get<std::string>();
    if (j.contains("transform") && unset("--transform")) s.transform = j.at("transform").get<bool>();
    if (j.contains("rmax") && unset("--rmax")) s.rmax = j.at("rmax").get<int>();
    if (j.contains("c") && unset("--c")) s.c = j.at("c").get<double>();
    if (j.contains("window") && unset("--window")) s.window = j.at("window").get<int>();
    if (j.contains("reps") && unset("--reps")) s.reps = j.at("reps").get<int>();
    if (j.contains("workers") && unset("--workers")) s.workers = j.at("workers").get<int>();
    if (j.contains("methods") && unset("--methods")) s.methods = j.at("methods").get<std::string>();
    if (j.contains("tasks") && unset("--tasks")) s.tasks = j.at("tasks").get<std::string>();
    if (j.contains("r") && unset("--r") && sub.get_name() != "simulate") s.r = j.at("r").get<int>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& argv);

 private:
  void emit(const std::string& name, const std::function<void(std::ostream&)>& body) {
    write_atomic(dir_ / name, body);
    outputs_.push_back(name);
  }
  void emit_json(const std::string& name, const json& j) {
    emit(name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  }
  void finish(const std::string& subcommand, const std::vector<std::string>& argv, json resolved) {
    json m;
    m["tool"] = "wfm";
    m["version"] = kVersion;
    m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                         std::to_string(EIGEN_MINOR_VERSION);
    m["subcommand"] = subcommand;
    m["argv"] = argv;
    m["config"] = std::move(resolved);
    m["outputs"] = outputs_;
    m["wall_time_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_json(dir_ / "manifest.json", m);
  }

  json common_config(const Settings& s) const {
    json c;
    if (!s.data.empty()) {
      c["data"] = s.data;
      c["orientation"] = s.orientation;
      c["transform"] = s.transform;
    }
    c["rmax"] = s.rmax;
    c["c"] = s.c;
    return c;
  }

  Panel standardized(const Panel& p, json& cfg) const {
    cfg["standardize"] = !settings_.no_standardize;
    return settings_.no_standardize ? p : standardize(p);
  }

  void cmd_simulate(const CLI::App& sub, const std::vector<std::string>& argv);
  void cmd_estimate(const std::vector<std::string>& argv);
  void cmd_select_r(const std::vector<std::string>& argv);
  void cmd_strengths(const std::vector<std::string>& argv);
  void cmd_rolling(const std::vector<std::string>& argv);
  void cmd_heatmap(const std::vector<std::string>& argv);

  std::ostream& out_;
  std::ostream& err_;
  Settings settings_;
  json config_doc_ = json::object();
  fs::path dir_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void Runner::cmd_simulate(const CLI::App& sub, const std::vector<std::string>& argv) {
  const Settings& s = settings_;
  SimConfig cfg = io::sim_config_from_json(config_doc_);
  if (sub.count("--N")) cfg.n = s.n;
  if (sub.count("--T")) cfg.t = s.t;
  if (sub.count("--alpha")) {
    cfg.alpha = s.alpha;
    cfg.r = static_cast<int>(s.alpha.size());
  }
  if (sub.count("--preprocess")) cfg.preprocess = io::parse_preprocess(s.preprocess);
  if (sub.count("--seed")) {
    cfg.seed = s.seed;
  } else if (!config_doc_.contains("seed")) {
    cfg.seed = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
  }
  cfg.validate();

  ReplicationOptions opt;
  opt.replications = s.reps;
  opt.rmax = s.rmax;
  opt.c_multiplier = s.c;
  opt.workers = s.workers;
  opt.tasks.clear();
  for (const auto& t : split_list(s.tasks)) opt.tasks.insert(io::parse_task(t));
  if (opt.tasks.empty()) throw Error("--tasks is empty");

  if (!s.panel_out.empty()) {
    const SimulatedPanel sim = simulate_panel(cfg);
    emit(s.panel_out, [&](std::ostream& o) { write_csv(o, sim.panel); });
  }

  const MetricsReport rep = run_replications(cfg, opt);
  emit_json("report.json", io::to_json(rep));
  emit("table1_factor_count.csv", [&](std::ostream& o) { io::write_table_factor_count(o, rep); });
  emit("table2_estimation.csv", [&](std::ostream& o) { io::write_table_estimation(o, rep); });
  emit("table3_support.csv", [&](std::ostream& o) { io::write_table_support(o, rep); });
  emit("table4_strength.csv", [&](std::ostream& o) { io::write_table_strength(o, rep); });
  if (!rep.complete())
    err_ << "wfm: warning: " << rep.aggregates.failed << " of " << s.reps << " replications failed\n";

  json resolved = io::to_json(cfg);
  resolved["reps"] = s.reps;
  resolved["tasks"] = s.tasks;
  resolved["rmax"] = s.rmax;
  resolved["c"] = s.c;
  resolved["workers"] = s.workers;
  out_ << "simulated " << rep.aggregates.completed << " replications (seed " << cfg.seed << ")\n";
  finish("simulate", argv, resolved);
}

inline void Runner::cmd_estimate(const std::vector<std::string>& argv) {
  const Settings& s = settings_;
  json cfg = common_config(s);
  const LoadedPanel lp = load_panel(s);
  const Panel p = standardized(lp.panel, cfg);
  const PcDecomposition pc(p);
  int r = s.r;
  if (r == 0) r = select_r_svt(pc, s.rmax).r_hat;
  cfg["r"] = r;
  if (r == 0) throw Error("no factor above the eigenvalue threshold; pass --r to force a rank");
  const PcFit fit = pc.fit(r);
  const SparseFit sparse = screen(fit, threshold_value(pc.n(), pc.t(), s.c), s.c);
  const StrengthEstimate st = strengths(sparse, pc.n());

  emit("factors.csv", [&](std::ostream& o) { io::write_factors_csv(o, fit, p.time_ids); });
  emit("loadings.csv", [&](std::ostream& o) { io::write_loadings_csv(o, fit.loadings, p.series_ids); });
  emit("eigenvalues.csv", [&](std::ostream& o) { io::write_eigenvalues_csv(o, fit.eigvals); });
  emit("sparse_loadings.csv", [&](std::ostream& o) { io::write_loadings_csv(o, sparse.lambda_hat, p.series_ids); });
  json summary = io::sparse_summary(sparse, st);
  summary["notes"] = fit.notes;
  summary["dropped_series"] = dropped_json(lp.dropped);
  emit_json("sparse_summary.json", summary);
  out_ << "estimated " << r << " factors on " << p.n() << " series x " << p.t() << " periods\n";
  finish("estimate", argv, cfg);
}

inline void Runner::cmd_select_r(const std::vector<std::string>& argv) {
  const Settings& s = settings_;
  json cfg = common_config(s);
  const auto methods = parse_methods(s.methods.empty() ? "wz,bn,ed,ah" : s.methods);
  cfg["methods"] = join_methods(methods);
  const LoadedPanel lp = load_panel(s);
  const PcDecomposition pc(standardized(lp.panel, cfg));
  std::vector<FactorCountResult> res;
  for (CountMethod m : methods) res.push_back(select_r(pc, m, s.rmax));

  emit("r_hat.csv", [&](std::ostream& o) {
    o << join_methods(methods) << '\n';
    for (std::size_t k = 0; k < res.size(); ++k) o << (k ? "," : "") << res[k].r_hat;
    o << '\n';
  });
  json diag;
  diag["methods"] = json::array();
  for (const auto& r : res) diag["methods"].push_back(io::count_diagnostics(r));
  diag["dropped_series"] = dropped_json(lp.dropped);
  emit_json("diagnostics.json", diag);
  for (const auto& r : res) out_ << method_tag(r.method) << ' ' << r.r_hat << '\n';
  finish("select-r", argv, cfg);
}

inline void Runner::cmd_strengths(const std::vector<std::string>& argv) {
  const Settings& s = settings_;
  json cfg = common_config(s);
  const LoadedPanel lp = load_panel(s);
  const Panel p = standardized(lp.panel, cfg);
  const PcDecomposition pc(p);
  const int r = s.r ? s.r : select_r_svt(pc, s.rmax).r_hat;
  cfg["r"] = r;
  if (r == 0) throw Error("no factor above the eigenvalue threshold; pass --r to force a rank");
  const SparseFit sparse = screen(pc.fit(r), threshold_value(pc.n(), pc.t(), s.c), s.c);
  const StrengthEstimate st = strengths(sparse, pc.n());

  emit("strengths.csv", [&](std::ostream& o) {
    o << "pc,count,alpha_hat,label\n";
    for (int k = 0; k < r; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      o << k + 1 << ',' << sparse.counts[uk] << ',' << csv::format_number(st.alpha_hat[uk]) << ','
        << to_string(st.labels[uk]) << '\n';
    }
  });
  emit("sparse_loadings.csv", [&](std::ostream& o) { io::write_loadings_csv(o, sparse.lambda_hat, p.series_ids); });
  json summary = io::sparse_summary(sparse, st);
  summary["dropped_series"] = dropped_json(lp.dropped);
  emit_json("sparse_summary.json", summary);
  for (int k = 0; k < r; ++k)
    out_ << "PC" << k + 1 << ' ' << csv::format_number(st.alpha_hat[static_cast<std::size_t>(k)]) << ' '
         << to_string(st.labels[static_cast<std::size_t>(k)]) << '\n';
  finish("strengths", argv, cfg);
}

inline void Runner::cmd_rolling(const std::vector<std::string>& argv) {
  const Settings& s = settings_;
  json cfg = common_config(s);
  RollingOptions opt;
  opt.window = s.window;
  opt.methods = parse_methods(s.methods.empty() ? "wz,bn,ed" : s.methods);
  opt.rmax = s.rmax;
  opt.c_multiplier = s.c;
  opt.workers = s.workers;
  cfg["window"] = s.window;
  cfg["methods"] = join_methods(opt.methods);
  cfg["workers"] = s.workers;
  const LoadedPanel lp = load_panel(s);
  const RollingResult res = rolling_analysis(lp.panel, opt);

  emit("rolling.csv", [&](std::ostream& o) { io::write_rolling_csv(o, res, s.rmax); });
  json notes = json::array();
  for (const auto& w : res.windows)
    if (!w.notes.empty()) notes.push_back({{"endpoint", w.endpoint}, {"notes", w.notes}});
  emit_json("rolling_notes.json", {{"windows", res.windows.size()}, {"notes", notes},
                                   {"dropped_series", dropped_json(lp.dropped)}});
  out_ << res.windows.size() << " windows of length " << s.window << '\n';
  finish("rolling", argv, cfg);
}

inline void Runner::cmd_heatmap(const std::vector<std::string>& argv) {
  const Settings& s = settings_;
  json cfg = common_config(s);
  const LoadedPanel lp = load_panel(s);
  const std::string from = s.from.empty() ? lp.panel.time_ids.front() : s.from;
  const std::string to = s.to.empty() ? lp.panel.time_ids.back() : s.to;
  cfg["from"] = from;
  cfg["to"] = to;
  std::optional<int> r;
  if (s.r) {
    r = s.r;
    cfg["r"] = s.r;
  }
  const HeatmapExport h = subperiod_heatmap(lp.panel, from, to, s.rmax, s.c, r);
  emit("heatmap.csv", [&](std::ostream& o) { io::write_heatmap_csv(o, h); });
  out_ << "heatmap: " << h.values.rows() << " series x " << h.values.cols() << " factors\n";
  finish("heatmap", argv, cfg);
}

inline int Runner::run(const std::vector<std::string>& argv) {
  CLI::App app{"Sparse weak factor models: estimation, screening, factor counts and Monte Carlo"};
  app.name("wfm");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Settings& s = settings_;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", s.config, "JSON file with option defaults; flags win")->check(CLI::ExistingFile);
    sub->add_option("--out", s.out, "Output directory")->capture_default_str();
    sub->add_option("--rmax", s.rmax, "Largest number of factors considered")->capture_default_str();
    sub->add_option("--c", s.c, "Threshold multiplier c")->capture_default_str();
  };
  const auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", s.data, "Panel CSV");
    sub->add_option("--orientation", s.orientation, "Series in 'rows' or 'columns'")->capture_default_str();
    sub->add_flag("--transform", s.transform, "Apply the file's tcode column, then align and trim");
  };

  CLI::App* sim = app.add_subcommand("simulate", "Run seeded Monte Carlo replications");
  add_common(sim);
  sim->add_option("--seed", s.seed, "Master seed (drawn and recorded if absent)");
  sim->add_option("--reps", s.reps, "Number of replications")->capture_default_str();
  sim->add_option("--workers", s.workers, "Worker threads")->capture_default_str();
  sim->add_option("--tasks", s.tasks, "Comma list of wz,bn,ed,ah,pc")->capture_default_str();
  sim->add_option("--panel-out", s.panel_out, "Also write the panel drawn from the master seed");
  sim->add_option("--N", s.n, "Number of series");
  sim->add_option("--T", s.t, "Number of periods");
  sim->add_option("--alpha", s.alpha, "Factor strengths, strongest first")->delimiter(',');
  sim->add_option("--preprocess", s.preprocess, "none, demean or standardize");

  CLI::App* est = app.add_subcommand("estimate", "PC fit, screening and strengths");
  add_common(est);
  add_data(est);
  est->add_option("--r", s.r, "Number of factors (default: SVT estimate)");
  est->add_flag("--no-standardize", s.no_standardize, "Use the panel as given");

  CLI::App* sel = app.add_subcommand("select-r", "Estimate the number of factors");
  add_common(sel);
  add_data(sel);
  sel->add_option("--methods", s.methods, "Comma list of wz,bn,ed,ah");
  sel->add_flag("--no-standardize", s.no_standardize, "Use the panel as given");

  CLI::App* str = app.add_subcommand("strengths", "Screened supports and factor strengths");
  add_common(str);
  add_data(str);
  str->add_option("--r", s.r, "Number of factors (default: SVT estimate)");
  str->add_flag("--no-standardize", s.no_standardize, "Use the panel as given");

  CLI::App* rol = app.add_subcommand("rolling", "Rolling-window factor counts and strengths");
  add_common(rol);
  add_data(rol);
  rol->add_option("--window", s.window, "Window length")->capture_default_str();
  rol->add_option("--methods", s.methods, "Comma list of wz,bn,ed,ah (default wz,bn,ed)");
  rol->add_option("--workers", s.workers, "Worker threads")->capture_default_str();

  CLI::App* heat = app.add_subcommand("heatmap", "Censored screened loadings over a subperiod");
  add_common(heat);
  add_data(heat);
  heat->add_option("--from", s.from, "First period label (default: first)");
  heat->add_option("--to", s.to, "Last period label (default: last)");
  heat->add_option("--r", s.r, "Number of factors (default: SVT estimate)");

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out_ << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out_ << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out_ << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err_ << "wfm: error: " << e.what() << '\n';
    return 1;
  }

  const auto one_line = [](std::string msg) {
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    return msg;
  };
  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!s.config.empty()) {
      config_doc_ = read_json_file(s.config);
      if (!config_doc_.is_object()) throw ParseError("config '" + s.config + "' must be a JSON object");
      apply_config(config_doc_, s, *sub);
    }
    check_ranges(s);
    dir_ = s.out;
    const std::string name = sub->get_name();
    if (name == "simulate")
      cmd_simulate(*sub, argv);
    else if (name == "estimate")
      cmd_estimate(argv);
    else if (name == "select-r")
      cmd_select_r(argv);
    else if (name == "strengths")
      cmd_strengths(argv);
    else if (name == "rolling")
      cmd_rolling(argv);
    else
      cmd_heatmap(argv);
  } catch (const Error& e) {
    err_ << "wfm: error: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err_ << "wfm: error: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err_ << "wfm: internal error: " << one_line(e.what()) << '\n';
    return 2;
  }
  return 0;
}

/// argv excludes the program name.
inline int run_cli(const std::vector<std::string>& argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  Runner runner(out, err);
  return runner.run(argv);
}

}  // namespace wfm::cli
