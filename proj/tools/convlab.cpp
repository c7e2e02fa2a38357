// Command-line front end: one subcommand per experiment plus a metric
// calculator over serialized distributions. Data outputs are deterministic
// CSV; run metadata goes to a .meta.json sidecar. Exit codes: 0 ok, 2 bad
// input, 3 resource cap hit (partial output flagged degraded).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "convlab/accompanying.hpp"
#include "convlab/compound_poisson.hpp"
#include "convlab/experiments.hpp"
#include "convlab/lattice.hpp"
#include "convlab/metrics.hpp"
#include "convlab/plot.hpp"
#include "convlab/serialize.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitCap = 3;

struct CommonOptions {
  std::string out_dir = ".";
  double tail_tol = 1e-12;
  double metric_tol = 1e-9;
  std::size_t atom_budget = convlab::kDefaultAtomBudget;
  std::size_t flow_cap_nodes = 20000;
  bool plot = false;
};

void add_common(CLI::App* cmd, CommonOptions* opt) {
  cmd->add_option("--out", opt->out_dir, "output directory for CSV/SVG files");
  cmd->add_option("--tail-tol", opt->tail_tol,
                  "compound Poisson tail truncation tolerance");
  cmd->add_option("--metric-tol", opt->metric_tol,
                  "bisection tolerance for Levy-Prokhorov brackets");
  cmd->add_option("--atom-budget", opt->atom_budget,
                  "hard cap on any dense support size");
  cmd->add_option("--flow-cap", opt->flow_cap_nodes,
                  "node cap for the coupling max-flow");
  cmd->add_flag("--plot", opt->plot, "also emit an SVG rendering of the CSV");
}

convlab::ExperimentConfig to_config(const CommonOptions& opt) {
  convlab::ExperimentConfig cfg;
  cfg.tail_tol = opt.tail_tol;
  cfg.metric_tol = opt.metric_tol;
  cfg.atom_budget = opt.atom_budget;
  cfg.flow_caps.max_nodes = opt.flow_cap_nodes;
  return cfg;
}

void write_file(const std::string& dir, const std::string& name,
                const std::string& content) {
  std::filesystem::create_directories(dir);
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void write_meta(const std::string& dir, const std::string& name,
                const nlohmann::json& meta) {
  write_file(dir, name, meta.dump(2) + "\n");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    if (cell.empty()) continue;
    out.push_back(std::stod(cell));
  }
  if (out.empty()) throw convlab::ParseError("empty grid: " + text);
  return out;
}

double resolve_c2(double c2_flag, const convlab::ExperimentConfig& cfg,
                  double* c1_out = nullptr) {
  if (c2_flag > 0.0) return c2_flag;
  auto frontier = convlab::lemma1_sweep(convlab::default_delta_grid(),
                                        convlab::default_factor_grid(), cfg);
  if (!frontier.found)
    throw std::runtime_error("window-sup sweep found no admissible constants");
  if (c1_out != nullptr) *c1_out = frontier.c1_emp;
  return frontier.c2_emp;
}

int report_verdicts(const convlab::ExampleReport& rep) {
  std::printf("F_ON_LATTICE: %s\n", rep.f_all_on_lattice ? "EXACT" : "NO");
  std::printf("D_MASS_WINDOW: %s\n",
              convlab::format_double(rep.d_mass_window).c_str());
  std::printf("PI_LOWER_1_8: %s\n",
              rep.pi_lower_certified ? "CERTIFIED" : "NOT_CERTIFIED");
  std::printf("D_EQUALS_G: %s\n", rep.d_equals_g ? "TRUE" : "FALSE");
  std::printf("TV_FG: %s\n", convlab::format_double(rep.tv_fg.value).c_str());
  return kExitOk;
}

nlohmann::json example_meta(const convlab::ExampleReport& rep,
                            const CommonOptions& opt) {
  nlohmann::json meta;
  meta["example"] = rep.example;
  meta["j"] = rep.j;
  meta["n"] = rep.n;
  meta["c2"] = rep.c2;
  meta["tau"] = rep.tau;
  meta["tail_tol"] = opt.tail_tol;
  meta["metric_tol"] = opt.metric_tol;
  meta["atom_budget"] = opt.atom_budget;
  meta["degraded"] = rep.degraded;
  if (!rep.note.empty()) meta["note"] = rep.note;
  return meta;
}

int run_example_command(const std::string& which, int j, double c2_flag,
                        double tau_flag, const CommonOptions& opt) {
  const auto cfg = to_config(opt);
  const double c2 = resolve_c2(c2_flag, cfg);
  convlab::ExampleReport rep;
  int exit_code = kExitOk;
  try {
    rep = which == "example2"
              ? convlab::run_example2(j, c2, cfg)
              : convlab::run_example1(j, c2, tau_flag, cfg);
  } catch (const convlab::AtomBudgetError& e) {
    rep.example = which;
    rep.j = j;
    rep.c2 = c2;
    rep.degraded = true;
    rep.note = e.what();
    exit_code = kExitCap;
  }
  write_file(opt.out_dir, which + ".csv", convlab::example_report_csv(rep));
  write_meta(opt.out_dir, which + ".meta.json", example_meta(rep, opt));
  if (rep.degraded) {
    std::printf("DEGRADED: %s\n", rep.note.c_str());
    return exit_code;
  }
  return report_verdicts(rep);
}

int run_metric_command(const std::string& file_f, const std::string& file_g,
                       const CommonOptions& opt) {
  const auto F = convlab::read_distribution(file_f);
  const auto G = convlab::read_distribution(file_g);
  auto print_row = [](const char* name, const convlab::MetricResult& m) {
    std::printf("%s,%s,%s,%s,%s\n", name,
                convlab::format_double(m.value).c_str(),
                convlab::format_double(m.lower).c_str(),
                convlab::format_double(m.upper).c_str(), m.method.c_str());
  };
  std::printf("metric,value,lower,upper,method\n");
  const auto tv = convlab::total_variation(F, G);
  print_row("tv", tv);
  print_row("kolmogorov", convlab::kolmogorov_distance(F, G));
  const auto levy = convlab::levy_distance(F, G, opt.metric_tol);
  print_row("levy", levy);
  convlab::FlowCaps caps;
  caps.max_nodes = opt.flow_cap_nodes;
  try {
    print_row("prokhorov", convlab::prokhorov_distance(F, G, opt.metric_tol, caps));
  } catch (const convlab::FlowCapError&) {
    // fall back to the certified sandwich L <= pi <= TV
    convlab::MetricResult bracket{0.5 * (levy.lower + tv.upper), levy.lower,
                                  tv.upper, "levy-tv-bracket", 0};
    print_row("prokhorov", bracket);
    return kExitCap;
  }
  return kExitOk;
}

int run_lemma_command(const std::string& delta_text,
                      const std::string& factor_text,
                      const CommonOptions& opt) {
  const auto cfg = to_config(opt);
  auto frontier = convlab::lemma1_sweep(parse_grid(delta_text),
                                        parse_grid(factor_text), cfg);
  const std::string csv = convlab::lemma_frontier_csv(frontier);
  write_file(opt.out_dir, "lemma_frontier.csv", csv);
  nlohmann::json meta;
  meta["delta_grid"] = frontier.delta_grid;
  meta["factor_grid"] = frontier.factor_grid;
  meta["found"] = frontier.found;
  meta["c1_emp"] = frontier.c1_emp;
  meta["c2_emp"] = frontier.c2_emp;
  meta["tail_tol"] = opt.tail_tol;
  write_meta(opt.out_dir, "lemma_frontier.meta.json", meta);
  if (opt.plot)
    write_file(opt.out_dir, "lemma_frontier.svg",
               convlab::lemma_frontier_svg(csv));
  bool fail_seen = false;
  for (const auto& p : frontier.points) fail_seen = fail_seen || !p.pass;
  if (frontier.found)
    std::printf("FRONTIER_FOUND: c1_emp=%s c2_emp=%s\n",
                convlab::format_double(frontier.c1_emp).c_str(),
                convlab::format_double(frontier.c2_emp).c_str());
  else
    std::printf("FRONTIER_FOUND: NONE\n");
  std::printf("FAIL_EXHIBITED: %s\n", fail_seen ? "TRUE" : "FALSE");
  return frontier.found ? kExitOk : kExitInput;
}

int run_bound_command(const std::string& preset, int j_min, int j_max,
                      double c2_flag, const std::string& rows_file,
                      const CommonOptions& opt) {
  const auto cfg = to_config(opt);
  std::vector<convlab::ArrayRow> rows;
  std::vector<std::string> labels;
  if (!rows_file.empty()) {
    std::ifstream in(rows_file);
    if (!in) throw convlab::ParseError("cannot open rows file: " + rows_file);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw convlab::ParseError(std::string("malformed rows file: ") + e.what());
    }
    if (!doc.is_array()) throw convlab::ParseError("rows file must be an array");
    for (const auto& spec : doc) {
      rows.push_back(convlab::parse_row(spec));
      labels.push_back(spec.value("preset", std::string("custom")));
    }
  } else {
    const double c2 = resolve_c2(c2_flag, cfg);
    auto add_preset = [&](const std::string& name, int lo, int hi) {
      for (int j = lo; j <= hi; ++j) {
        const auto n = convlab::preset_row_size(name, j, c2);
        rows.push_back(name == "example2" ? convlab::example2_row(j, n)
                                          : convlab::example1_row(j, n));
        labels.push_back(name);
      }
    };
    // desk-scale caps keep the sweep supports well under the atom budget
    if (preset == "example1" || preset == "both")
      add_preset("example1", std::max(2, j_min), std::min(j_max, 16));
    if (preset == "example2" || preset == "both")
      add_preset("example2", std::max(3, j_min), std::min(j_max, 8));
    if (rows.empty())
      throw convlab::ParseError("unknown preset: " + preset);
  }
  auto sweep = convlab::bound_ratio_sweep(rows, labels, cfg);
  const std::string csv = convlab::bound_sweep_csv(sweep);
  write_file(opt.out_dir, "bound_ratios.csv", csv);
  nlohmann::json meta;
  meta["rows"] = sweep.size();
  meta["preset"] = preset;
  meta["tail_tol"] = opt.tail_tol;
  write_meta(opt.out_dir, "bound_ratios.meta.json", meta);
  if (opt.plot)
    write_file(opt.out_dir, "bound_ratios.svg", convlab::bound_sweep_svg(csv));
  double max_levy = 0.0, max_pi = 0.0;
  for (const auto& e : sweep) {
    max_levy = std::max(max_levy, e.ratio_levy);
    max_pi = std::max(max_pi, e.ratio_pi);
  }
  std::printf("MAX_RATIO_LEVY: %s\n", convlab::format_double(max_levy).c_str());
  std::printf("MAX_RATIO_PI: %s\n", convlab::format_double(max_pi).c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact laboratory for lattice distributions, compound Poisson "
               "approximation and probability metrics"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from a config file");

  CommonOptions metric_opt, ex1_opt, ex2_opt, lemma_opt, bound_opt;

  auto* metric = app.add_subcommand(
      "metric", "all four distances between two serialized distributions");
  std::string file_f, file_g;
  metric->add_option("F", file_f, "first distribution file")->required();
  metric->add_option("G", file_g, "second distribution file")->required();
  add_common(metric, &metric_opt);

  auto* ex1 = app.add_subcommand("example1", "binomial row vs accompanying laws");
  int ex1_j = 8;
  double ex1_c2 = 0.0, ex1_tau = 1.0;
  ex1->add_option("--j", ex1_j, "row index j (>= 2)");
  ex1->add_option("--c2", ex1_c2, "empirical c2 (0 = determine by sweep)");
  ex1->add_option("--tau", ex1_tau, "truncation level for the D centering");
  add_common(ex1, &ex1_opt);

  auto* ex2 = app.add_subcommand("example2", "pre-shifted row vs accompanying laws");
  int ex2_j = 4;
  double ex2_c2 = 0.0;
  ex2->add_option("--j", ex2_j, "row index j (>= 3)");
  ex2->add_option("--c2", ex2_c2, "empirical c2 (0 = determine by sweep)");
  add_common(ex2, &ex2_opt);

  auto* lemma = app.add_subcommand("lemma-sweep",
                                   "window-sup frontier over (delta, lambda)");
  std::string delta_grid = "1,2,4,8,16,32";
  std::string factor_grid = "1,2,4,8,16,32,64,128,256";
  lemma->add_option("--delta-grid", delta_grid, "comma-separated delta values");
  lemma->add_option("--factor-grid", factor_grid,
                    "comma-separated lambda/delta^2 values");
  add_common(lemma, &lemma_opt);

  auto* bound = app.add_subcommand("bound-sweep",
                                   "distance/budget ratios across rows");
  std::string bound_preset = "both";
  std::string rows_file;
  int j_min = 3, j_max = 12;
  double bound_c2 = 0.0;
  bound->add_option("--preset", bound_preset, "example1, example2 or both");
  bound->add_option("--j-min", j_min, "smallest row index");
  bound->add_option("--j-max", j_max, "largest row index");
  bound->add_option("--c2", bound_c2, "empirical c2 (0 = determine by sweep)");
  bound->add_option("--rows", rows_file, "JSON row-specification file");
  add_common(bound, &bound_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (metric->parsed()) return run_metric_command(file_f, file_g, metric_opt);
    if (ex1->parsed())
      return run_example_command("example1", ex1_j, ex1_c2, ex1_tau, ex1_opt);
    if (ex2->parsed())
      return run_example_command("example2", ex2_j, ex2_c2, 0.0, ex2_opt);
    if (lemma->parsed())
      return run_lemma_command(delta_grid, factor_grid, lemma_opt);
    if (bound->parsed())
      return run_bound_command(bound_preset, j_min, j_max, bound_c2, rows_file,
                               bound_opt);
  } catch (const convlab::ParseError& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "input error: %s\n", e.what());
    return kExitInput;
  } catch (const convlab::AtomBudgetError& e) {
    std::fprintf(stderr, "resource cap: %s\n", e.what());
    return kExitCap;
  } catch (const convlab::FlowCapError& e) {
    std::fprintf(stderr, "resource cap: %s\n", e.what());
    return kExitCap;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}
