#include "ctqw/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "ctqw/analysis.hpp"
#include "ctqw/engine.hpp"
#include "ctqw/error.hpp"
#include "ctqw/io.hpp"
#include "ctqw/oracles.hpp"
#include "ctqw/parallel.hpp"
#include "ctqw/spectra.hpp"

namespace ctqw::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  if (!text.empty() && text.back() == sep) parts.emplace_back();
  return parts;
}

double parse_real(const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError("not a number: '" + text + "'", "invalid_number");
  }
  return v;
}

long long parse_int(const std::string& text) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError("not an integer: '" + text + "'", "invalid_number");
  }
  return v;
}

std::size_t parse_size(const std::string& text) {
  const long long v = parse_int(text);
  if (v < 0) throw ConfigError("negative value: '" + text + "'", "invalid_number");
  return static_cast<std::size_t>(v);
}

/// Values collected from flags and the optional JSON config file.
struct Options {
  std::string config;
  std::string graph;
  std::string family;
  std::string n, length, dim, generation;
  bool open = false;
  std::optional<std::size_t> target;
  std::string target_rule;
  std::string gamma;
  std::string times;
  std::optional<double> tmax;
  std::optional<std::size_t> tcount;
  std::string out_dir;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> guard;

  std::string model;
  std::optional<double> alpha;
  std::string gamma_rel;
  std::string check;
  bool krylov = false;
  bool exact = false;
  bool gamma_max = false;
};

/// Fully resolved settings shared by every command.
struct RunConfig {
  std::vector<GraphSpec> specs;
  std::optional<std::size_t> target;
  TargetRule rule = TargetRule::Peripheral;
  std::optional<GridSpec> gamma;
  std::optional<GridSpec> times;
  std::optional<double> tmax;
  std::size_t tcount = 512;
  fs::path out_dir = ".";
  std::size_t threads = 0;
  std::size_t guard = kDefaultDenseGuard;
};

GridSpec grid_from_json(const json& j) {
  if (j.is_number()) return parse_grid(format_real(j.get<double>()));
  if (j.is_string()) return parse_grid(j.get<std::string>());
  GridSpec g;
  g.min = j.at("min").get<double>();
  g.max = j.at("max").get<double>();
  g.count = j.value("count", std::size_t{1});
  g.log = j.value("scale", std::string("lin")) == "log";
  return g;
}

RunConfig resolve(const Options& o) {
  RunConfig cfg;
  cfg.guard = dense_guard_from_env();
  GraphSpec base;
  bool have_graph = false;
  std::string n = o.n, length = o.length, dim = o.dim, generation = o.generation;

  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw ConfigError("cannot read config file " + o.config, "invalid_config");
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config file is not valid JSON: ") + e.what(), "invalid_config");
    }
    try {
      if (j.contains("graph")) {
        // size keys may hold range strings such as "3..6"
        json gj = j.at("graph");
        for (auto [key, slot] : {std::pair<const char*, std::string*>{"n", &n}, {"L", &length}, {"d", &dim},
                                 {"g", &generation}}) {
          if (gj.contains(key) && gj.at(key).is_string()) {
            if (slot->empty()) *slot = gj.at(key).get<std::string>();
            gj.erase(key);
          }
        }
        base = gj.get<GraphSpec>();
        have_graph = true;
      }
      if (j.contains("target")) cfg.target = j.at("target").get<std::size_t>();
      if (j.contains("target_rule")) cfg.rule = target_rule_from_string(j.at("target_rule").get<std::string>());
      if (j.contains("gamma")) cfg.gamma = grid_from_json(j.at("gamma"));
      if (j.contains("t")) cfg.times = grid_from_json(j.at("t"));
      if (j.contains("tmax")) cfg.tmax = j.at("tmax").get<double>();
      if (j.contains("tcount")) cfg.tcount = j.at("tcount").get<std::size_t>();
      if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
      if (j.contains("threads")) cfg.threads = j.at("threads").get<std::size_t>();
      if (j.contains("dense_guard")) cfg.guard = j.at("dense_guard").get<std::size_t>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed config: ") + e.what(), "invalid_config");
    }
  }

  if (!o.graph.empty()) {
    base = parse_graph(o.graph);
    have_graph = true;
  }
  if (!o.family.empty()) {
    const Family f = family_from_string(o.family);
    if (!have_graph || base.family != f) {
      base = GraphSpec{};
      base.family = f;
    }
    have_graph = true;
  }
  if (o.open) base.periodic = false;
  if (o.target) cfg.target = o.target;
  if (!o.target_rule.empty()) cfg.rule = target_rule_from_string(o.target_rule);
  if (!o.gamma.empty()) cfg.gamma = parse_grid(o.gamma);
  if (!o.times.empty()) cfg.times = parse_grid(o.times);
  if (o.tmax) cfg.tmax = o.tmax;
  if (o.tcount) cfg.tcount = *o.tcount;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (o.threads) cfg.threads = *o.threads;
  if (o.guard) cfg.guard = *o.guard;
  if (cfg.guard == 0) throw ConfigError("dense guard must be positive");

  if (!have_graph) {
    cfg.specs.clear();
    return cfg;
  }
  auto values_or = [](const std::string& text, long long fallback) {
    return text.empty() ? std::vector<long long>{fallback} : parse_int_list(text);
  };
  const auto ns = values_or(n, static_cast<long long>(base.n));
  const auto ls = values_or(length, static_cast<long long>(base.length));
  const auto ds = values_or(dim, static_cast<long long>(base.dim));
  const auto gs = values_or(generation, base.generation);
  for (long long nv : ns)
    for (long long lv : ls)
      for (long long dv : ds)
        for (long long gv : gs) {
          if (nv < 0 || lv < 0 || dv < 0) throw ConfigError("sizes must be non-negative");
          GraphSpec s = base;
          s.n = static_cast<std::size_t>(nv);
          s.length = static_cast<std::size_t>(lv);
          s.dim = static_cast<std::size_t>(dv);
          s.generation = static_cast<int>(gv);
          s.validate();
          cfg.specs.push_back(std::move(s));
        }
  return cfg;
}

const GraphSpec& single_spec(const RunConfig& cfg) {
  if (cfg.specs.empty()) throw ConfigError("no graph given (use --family, --graph or a config file)", "missing_graph");
  if (cfg.specs.size() != 1) throw ConfigError("this command takes a single graph, not a range", "invalid_config");
  return cfg.specs.front();
}

NodeId target_for(const RunConfig& cfg, const GraphSpec& spec) {
  if (cfg.target) {
    if (*cfg.target >= spec.node_count()) throw ConfigError("target node out of range", "invalid_target");
    return NodeId{*cfg.target};
  }
  return select_target(spec, cfg.rule);
}

std::vector<double> time_grid(const RunConfig& cfg, std::size_t n) {
  if (cfg.times) return cfg.times->values();
  if (cfg.tmax) return linear_grid(0.0, *cfg.tmax, cfg.tcount);
  return default_time_grid(n);
}

fs::path output_path(const RunConfig& cfg, const std::string& name) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec || !fs::is_directory(cfg.out_dir)) throw IoError("cannot create output directory " + cfg.out_dir.string());
  return cfg.out_dir / name;
}

void write_output(const RunConfig& cfg, std::ostream& out, const std::string& name,
                  const std::function<void(std::ostream&)>& writer) {
  const fs::path path = output_path(cfg, name);
  write_file_atomic(path, writer);
  out << "wrote " << path.string() << '\n';
}

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const GraphSpec& spec = single_spec(cfg);
  const Graph g = build(spec);
  write_output(cfg, out, "graph.edges", [&](std::ostream& os) { write_edge_list(os, g); });
  out << spec.label() << " N=" << g.size() << " edges=" << g.edge_count()
      << " target=" << target_for(cfg, spec).index << '\n';
  return 0;
}

int cmd_spectrum(const RunConfig& cfg, const Options& o, std::ostream& out) {
  const GraphSpec& spec = single_spec(cfg);
  if (o.exact) {
    if (spec.family != Family::DSG) throw ConfigError("--exact is only available for dsg", "invalid_config");
    const ExactSpectrum ex = dsg_exact_spectrum(static_cast<unsigned>(spec.generation));
    const std::vector<double> values = ex.expanded();
    std::vector<DegeneracyGroup> groups;
    std::size_t begin = 0;
    for (const auto& [value, mult] : ex.levels) {
      groups.push_back({begin, static_cast<std::size_t>(mult), value});
      begin += static_cast<std::size_t>(mult);
    }
    write_output(cfg, out, "spectrum_exact.csv", [&](std::ostream& os) { write_spectrum_csv(os, values, groups); });
    return 0;
  }
  const Graph g = build(spec);
  const SpectralDecomposition dec = eigh(g.laplacian(), cfg.guard);
  std::span<const double> values(dec.eigenvalues.data(), static_cast<std::size_t>(dec.eigenvalues.size()));
  write_output(cfg, out, "spectrum.csv", [&](std::ostream& os) { write_spectrum_csv(os, values, dec.groups); });
  const SpectralSums sums = spectral_sums(dec, target_for(cfg, spec));
  json j{{"graph", spec},     {"N", g.size()},          {"target", target_for(cfg, spec).index},
         {"zeta1", sums.zeta1}, {"zeta2", sums.zeta2},  {"xi1", sums.xi1},
         {"xi2", sums.xi2},   {"maxAmpSq", sums.max_amp_sq}, {"maxGroupAmpSq", sums.max_group_amp_sq}};
  write_output(cfg, out, "sums.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  return 0;
}

int cmd_overlaps(const RunConfig& cfg, std::ostream& out) {
  const GraphSpec& spec = single_spec(cfg);
  if (!cfg.gamma) throw ConfigError("overlaps needs --gamma", "missing_gamma");
  auto g = std::make_shared<const Graph>(build(spec));
  const std::vector<double> gammas = cfg.gamma->values();
  const auto records = overlap_sweep(g, target_for(cfg, spec), gammas, cfg.threads, cfg.guard);
  write_output(cfg, out, "overlaps.csv", [&](std::ostream& os) { write_overlap_csv(os, records); });
  return 0;
}

int cmd_critgamma(const RunConfig& cfg, std::ostream& out) {
  if (cfg.specs.empty()) throw ConfigError("no graph given", "missing_graph");
  std::vector<CriticalGamma> results(cfg.specs.size());
  std::vector<std::size_t> sizes(cfg.specs.size()), targets(cfg.specs.size());
  parallel_for(cfg.specs.size(), cfg.threads, [&](std::size_t i) {
    auto g = std::make_shared<const Graph>(build(cfg.specs[i]));
    const NodeId w = target_for(cfg, cfg.specs[i]);
    CriticalGammaOptions opt;
    opt.guard = cfg.guard;
    if (cfg.gamma) {
      opt.lower_limit = cfg.gamma->min;
      opt.upper_limit = cfg.gamma->max;
    }
    results[i] = critical_gamma(g, w, opt);
    sizes[i] = g->size();
    targets[i] = w.index;
  });
  write_output(cfg, out, "critgamma.csv", [&](std::ostream& os) {
    os << "graph,N,target,gamma_tilde,gamma_lo,gamma_hi,residual,xi1,evaluations,roots\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      os << '"' << cfg.specs[i].label() << "\"," << sizes[i] << ',' << targets[i] << ',' << format_real(r.gamma)
         << ',' << format_real(r.lo) << ',' << format_real(r.hi) << ',' << format_real(r.residual) << ','
         << format_real(r.seed) << ',' << r.evaluations << ',';
      for (std::size_t k = 0; k < r.roots.size(); ++k) os << (k ? ";" : "") << format_real(r.roots[k]);
      os << '\n';
    }
  });
  for (std::size_t i = 0; i < results.size(); ++i) {
    out << cfg.specs[i].label() << "\tN=" << sizes[i] << "\tgamma_tilde=" << format_real(results[i].gamma);
    if (results[i].roots.size() > 1) out << "\t(" << results[i].roots.size() << " roots)";
    out << '\n';
  }
  return 0;
}

int cmd_success(const RunConfig& cfg, const Options& o, std::ostream& out) {
  const GraphSpec& spec = single_spec(cfg);
  auto g = std::make_shared<const Graph>(build(spec));
  const NodeId w = target_for(cfg, spec);
  const std::vector<double> times = time_grid(cfg, g->size());

  if (o.gamma_max) {
    CriticalGammaOptions opt;
    opt.guard = cfg.guard;
    const CriticalGamma cg = critical_gamma(g, w, opt);
    const GammaMax gm = find_gamma_max(g, w, cg.gamma, times, cfg.threads, cfg.guard);
    json j{{"graph", spec},           {"target", w.index},           {"gamma_tilde", cg.gamma},
           {"gamma_max", gm.gamma},   {"peak_time", gm.peak_time},   {"peak_value", gm.peak_value},
           {"horizon", gm.horizon}};
    write_output(cfg, out, "gamma_max.json", [&](std::ostream& os) { os << j.dump(2) << '\n'; });
    if (!cfg.gamma) return 0;
  }
  if (!cfg.gamma) throw ConfigError("success needs --gamma (or --gamma-max)", "missing_gamma");
  const std::vector<double> gammas = cfg.gamma->values();

  SuccessGrid grid;
  if (o.krylov) {
    grid.gammas = gammas;
    grid.times = times;
    grid.values.resize(gammas.size() * times.size());
    grid.peak_time.resize(gammas.size());
    grid.peak_value.resize(gammas.size());
    parallel_for(gammas.size(), cfg.threads, [&](std::size_t gi) {
      const auto row = propagate_krylov(*g, w, gammas[gi], times);
      std::copy(row.begin(), row.end(), grid.values.begin() + static_cast<std::ptrdiff_t>(gi * times.size()));
      const auto best = std::max_element(row.begin(), row.end()) - row.begin();
      grid.peak_time[gi] = times[static_cast<std::size_t>(best)];
      grid.peak_value[gi] = row[static_cast<std::size_t>(best)];
    });
  } else {
    grid = success_grid(g, w, gammas, times, cfg.threads, cfg.guard);
  }
  write_output(cfg, out, "success_matrix.csv", [&](std::ostream& os) { write_grid_matrix_csv(os, grid); });
  write_output(cfg, out, "success_long.csv", [&](std::ostream& os) { write_grid_long_csv(os, grid); });
  write_output(cfg, out, "success_peaks.csv", [&](std::ostream& os) {
    os << "gamma,t_star,pi_star,period\n";
    for (std::size_t gi = 0; gi < grid.gammas.size(); ++gi) {
      const auto period = oscillation_period(grid.times, grid.row(gi));
      os << format_real(grid.gammas[gi]) << ',' << format_real(grid.peak_time[gi]) << ','
         << format_real(grid.peak_value[gi]) << ',' << (period ? format_real(*period) : "") << '\n';
    }
  });
  return 0;
}

int cmd_fit(const RunConfig& cfg, const Options& o, std::ostream& out) {
  if (cfg.specs.size() < 3) throw ConfigError("fit needs at least three graphs (e.g. --g 3..6)", "too_few_points");
  const ScalingModel model = o.model.empty()
                                 ? (cfg.specs.front().family == Family::CayleyTree ? ScalingModel::LogLaw
                                                                                    : ScalingModel::PowerLaw)
                                 : scaling_model_from_string(o.model);
  std::vector<NodeId> targets;
  for (const auto& s : cfg.specs) targets.push_back(target_for(cfg, s));
  const auto points = critical_gamma_series(cfg.specs, targets, cfg.threads, cfg.guard);
  ScalingFit fit = fit_scaling(points, model, cfg.specs.front().family);
  if (model == ScalingModel::PowerLaw && cfg.specs.front().spectral_dimension()) {
    fit.alpha = o.alpha ? *o.alpha : fit_alpha(cfg.specs, targets, cfg.guard).alpha;
    fit.prediction = exponent_prediction(cfg.specs.front(), *fit.alpha);
  }
  write_output(cfg, out, "fit.json", [&](std::ostream& os) { write_fit_json(os, fit); });
  out << to_string(fit.model) << " slope=" << format_real(fit.slope) << " intercept=" << format_real(fit.intercept)
      << " residual=" << format_real(fit.residual);
  if (fit.prediction) out << " prediction=" << format_real(*fit.prediction);
  out << '\n';
  return 0;
}

int cmd_verify(const RunConfig& cfg, const Options& o, std::ostream& out, std::ostream& err) {
  const GraphSpec& spec = single_spec(cfg);
  auto g = std::make_shared<const Graph>(build(spec));
  const NodeId w = target_for(cfg, spec);
  const SpectralSums sums = spectral_sums(*g, w, cfg.guard);
  std::vector<double> gammas;
  if (cfg.gamma) gammas = cfg.gamma->values();
  if (!o.gamma_rel.empty()) {
    for (const auto& part : split(o.gamma_rel, ',')) gammas.push_back(parse_real(part) * sums.xi1);
  }
  if (gammas.empty()) gammas = {sums.xi1 / 4.0, sums.xi1 / 2.0, 2.0 * sums.xi1, 4.0 * sums.xi1};
  std::vector<BoundReport> reports(gammas.size());
  parallel_for(gammas.size(), cfg.threads,
               [&](std::size_t i) { reports[i] = verify_bounds(sums, g, w, gammas[i], cfg.guard); });
  bool ok = true;
  write_output(cfg, out, "bounds.json", [&](std::ostream& os) {
    os << "[\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      std::ostringstream one;
      write_bound_report(one, reports[i]);
      std::string text = one.str();
      text.pop_back();
      os << text << (i + 1 < reports.size() ? ",\n" : "\n");
    }
    os << "]\n";
  });
  for (const auto& r : reports) {
    out << (r.all_passed() ? "PASS" : "FAIL") << " gamma=" << format_real(r.gamma)
        << (r.at_transition ? " (at transition)" : "") << '\n';
    ok = ok && r.all_passed();
  }
  if (!ok) {
    err << json{{"error", "bounds_violated"}, {"kind", "numerical"}, {"message", "a bound check failed"}}.dump()
        << '\n';
    return static_cast<int>(ErrorKind::Numerical);
  }
  return 0;
}

struct CheckResult {
  std::string name;
  bool passed;
  double max_error;
  double tolerance;
};

CheckResult check_complete_vs_engine(std::size_t threads) {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> nd(2, 200);
  std::uniform_real_distribution<double> lg(std::log(1e-4), 0.0), u(0.0, 1.0);
  struct Triple {
    std::size_t n;
    double gamma, t;
  };
  std::vector<Triple> triples(100);
  for (auto& tr : triples) {
    tr.n = nd(rng);
    tr.gamma = std::exp(lg(rng));
    tr.t = u(rng) * 4.0 * std::numbers::pi * std::sqrt(static_cast<double>(tr.n));
  }
  std::vector<double> errors(triples.size());
  parallel_for(triples.size(), threads, [&](std::size_t i) {
    const auto& tr = triples[i];
    auto g = std::make_shared<const Graph>(build(GraphSpec::complete(tr.n)));
    const double engine = success_probability(SearchProblem(g, NodeId{tr.n - 1}, tr.gamma), tr.t);
    errors[i] = std::abs(engine - complete_success(complete_params(tr.n, tr.gamma), tr.t));
  });
  const double worst = *std::max_element(errors.begin(), errors.end());
  return {"complete-vs-engine", worst <= 1e-10, worst, 1e-10};
}

CheckResult check_complete_forms() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> nd(2, 5000);
  std::uniform_real_distribution<double> lg(std::log(1e-5), std::log(10.0)), u(0.0, 200.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto p = complete_params(nd(rng), std::exp(lg(rng)));
    const double t = u(rng);
    const double ref = complete_success(p, t);
    worst = std::max({worst, std::abs(ref - complete_success_alt(p, t)),
                      std::abs(ref - complete_success_from_propagator(p, t))});
  }
  return {"complete-forms", worst <= 1e-12, worst, 1e-12};
}

CheckResult check_dsg_spectrum(std::size_t guard) {
  double worst = 0.0;
  for (int g = 1; g <= 6; ++g) {
    const std::vector<double> exact = dsg_exact_spectrum(static_cast<unsigned>(g)).expanded();
    const SpectralDecomposition dec = eigh(build(GraphSpec::dsg(g)).laplacian(), guard);
    if (static_cast<std::size_t>(dec.eigenvalues.size()) != exact.size()) return {"dsg-spectrum", false, INFINITY, 1e-9};
    for (std::size_t k = 0; k < exact.size(); ++k) {
      worst = std::max(worst, std::abs(exact[k] - dec.eigenvalues(static_cast<Eigen::Index>(k))));
    }
  }
  return {"dsg-spectrum", worst <= 1e-9, worst, 1e-9};
}

CheckResult check_zeta(std::size_t guard) {
  double worst = 0.0;
  for (int g = 1; g <= 6; ++g) {
    const ZetaPair closed = zeta_closed(static_cast<unsigned>(g));
    const Graph graph = build(GraphSpec::dsg(g));
    const SpectralSums s = spectral_sums(graph, default_target(GraphSpec::dsg(g)), guard);
    worst = std::max({worst, std::abs(s.zeta1 / closed.zeta1 - 1.0), std::abs(s.zeta2 / closed.zeta2 - 1.0)});
  }
  return {"zeta", worst <= 1e-10, worst, 1e-10};
}

CheckResult check_krylov() {
  const std::size_t n = 64;
  const double gamma = 1.0 / static_cast<double>(n);
  const Graph g = build(GraphSpec::complete(n));
  const std::vector<double> times = linear_grid(0.0, std::numbers::pi * std::sqrt(64.0), 200);
  const auto values = propagate_krylov(g, NodeId{0}, gamma, times);
  const auto p = complete_params(n, gamma);
  double worst = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) worst = std::max(worst, std::abs(values[i] - complete_success(p, times[i])));
  return {"krylov", worst <= 1e-8, worst, 1e-8};
}

int cmd_oracle(const RunConfig& cfg, const Options& o, std::ostream& out, std::ostream& err) {
  const std::string check = o.check.empty() ? "all" : o.check;
  const std::vector<std::string> known{"complete-vs-engine", "complete-forms", "dsg-spectrum", "zeta", "krylov"};
  if (check != "all" && std::find(known.begin(), known.end(), check) == known.end()) {
    throw ConfigError("unknown check '" + check + "'", "invalid_check");
  }
  std::vector<CheckResult> results;
  auto want = [&](const std::string& name) { return check == "all" || check == name; };
  if (want("complete-vs-engine")) results.push_back(check_complete_vs_engine(cfg.threads));
  if (want("complete-forms")) results.push_back(check_complete_forms());
  if (want("dsg-spectrum")) results.push_back(check_dsg_spectrum(cfg.guard));
  if (want("zeta")) results.push_back(check_zeta(cfg.guard));
  if (want("krylov")) results.push_back(check_krylov());

  json report = json::array();
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << " max_error=" << format_real(r.max_error)
        << " tolerance=" << format_real(r.tolerance) << '\n';
    report.push_back({{"check", r.name}, {"passed", r.passed}, {"max_error", r.max_error}, {"tolerance", r.tolerance}});
    ok = ok && r.passed;
  }
  write_output(cfg, out, "oracle.json", [&](std::ostream& os) { os << report.dump(2) << '\n'; });
  if (!ok) {
    err << json{{"error", "oracle_mismatch"}, {"kind", "numerical"}, {"message", "an oracle check failed"}}.dump()
        << '\n';
    return static_cast<int>(ErrorKind::Numerical);
  }
  return 0;
}

std::string kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Guard: return "guard";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

void add_graph_options(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "JSON config file; flags override its values");
  sub->add_option("--graph", o.graph, "compact graph spec, e.g. dsg:g=4 or dsg:g=4*torus:L=8,d=2");
  sub->add_option("--family", o.family, "complete | chain | torus | dsg | tfractal | cayley | product");
  sub->add_option("--n", o.n, "node count of a complete graph (value, a..b or list)");
  sub->add_option("--L", o.length, "linear size of a chain or torus (value, a..b or list)");
  sub->add_option("--d", o.dim, "torus dimension");
  sub->add_option("--g", o.generation, "generation of a fractal or tree (value, a..b or list)");
  sub->add_flag("--open", o.open, "open instead of periodic lattice boundaries");
  sub->add_option("--target", o.target, "target node index");
  sub->add_option("--target-rule", o.target_rule, "peripheral | center-neighbor | peripheral-neighbor");
  sub->add_option("--out", o.out_dir, "output directory");
  sub->add_option("--threads", o.threads, "worker threads (default: all cores)");
  sub->add_option("--dense-guard", o.guard, "largest N for dense eigendecomposition");
}

void add_grid_options(CLI::App* sub, Options& o, bool with_times) {
  sub->add_option("--gamma", o.gamma, "gamma value or grid min:max:count[:lin|log]");
  if (with_times) {
    sub->add_option("--t", o.times, "time grid min:max:count[:lin|log]");
    sub->add_option("--tmax", o.tmax, "time horizon for a linear grid from 0");
    sub->add_option("--tcount", o.tcount, "points of the --tmax grid (default 512)");
  }
}

}  // namespace

std::vector<double> GridSpec::values() const {
  if (count == 0) throw ConfigError("grid needs at least one point", "invalid_grid");
  if (max < min) throw ConfigError("grid maximum below minimum", "invalid_grid");
  return log ? log_grid(min, max, count) : linear_grid(min, max, count);
}

GridSpec parse_grid(const std::string& text) {
  const auto parts = split(text, ':');
  GridSpec g;
  if (parts.size() == 1) {
    g.min = g.max = parse_real(parts[0]);
    g.count = 1;
    return g;
  }
  if (parts.size() < 3 || parts.size() > 4) throw ConfigError("grid must be v or min:max:count[:lin|log]", "invalid_grid");
  g.min = parse_real(parts[0]);
  g.max = parse_real(parts[1]);
  g.count = parse_size(parts[2]);
  if (parts.size() == 4) {
    if (parts[3] == "log") {
      g.log = true;
    } else if (parts[3] != "lin") {
      throw ConfigError("grid scale must be lin or log", "invalid_grid");
    }
  }
  if (g.count == 0 || g.max < g.min || (g.log && g.min <= 0.0)) throw ConfigError("invalid grid '" + text + "'", "invalid_grid");
  return g;
}

std::vector<long long> parse_int_list(const std::string& text) {
  std::vector<long long> out;
  if (const auto pos = text.find(".."); pos != std::string::npos) {
    const long long a = parse_int(text.substr(0, pos));
    const long long b = parse_int(text.substr(pos + 2));
    if (b < a) throw ConfigError("empty range '" + text + "'", "invalid_range");
    if (b - a > 100000) throw ConfigError("range too long '" + text + "'", "invalid_range");
    for (long long v = a; v <= b; ++v) out.push_back(v);
    return out;
  }
  for (const auto& part : split(text, ',')) out.push_back(parse_int(part));
  if (out.empty()) throw ConfigError("empty list", "invalid_range");
  return out;
}

GraphSpec parse_graph(const std::string& text) {
  if (const auto star = text.find('*'); star != std::string::npos) {
    return GraphSpec::product(parse_graph(text.substr(0, star)), parse_graph(text.substr(star + 1)));
  }
  const auto colon = text.find(':');
  GraphSpec s;
  s.family = family_from_string(text.substr(0, colon));
  if (colon == std::string::npos) return s;
  for (const auto& kv : split(text.substr(colon + 1), ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value in '" + kv + "'", "invalid_spec");
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (key == "n") {
      s.n = parse_size(value);
    } else if (key == "L") {
      s.length = parse_size(value);
    } else if (key == "d") {
      s.dim = parse_size(value);
    } else if (key == "g") {
      s.generation = static_cast<int>(parse_int(value));
    } else if (key == "periodic") {
      if (value != "true" && value != "false") throw ConfigError("periodic must be true or false", "invalid_spec");
      s.periodic = value == "true";
    } else {
      throw ConfigError("unknown graph key '" + key + "'", "invalid_spec");
    }
  }
  return s;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Continuous-time quantum walk search on graphs"};
  app.require_subcommand(1);
  Options o;

  auto* generate = app.add_subcommand("generate", "write the edge list of a graph");
  add_graph_options(generate, o);
  auto* spectrum = app.add_subcommand("spectrum", "Laplacian spectrum CSV and spectral sums");
  add_graph_options(spectrum, o);
  spectrum->add_flag("--exact", o.exact, "closed-form DSG spectrum instead of the eigensolver");
  auto* overlaps_cmd = app.add_subcommand("overlaps", "ground/first-excited overlaps over a gamma grid");
  add_graph_options(overlaps_cmd, o);
  add_grid_options(overlaps_cmd, o, false);
  auto* critgamma = app.add_subcommand("critgamma", "critical gamma for one or more graphs");
  add_graph_options(critgamma, o);
  critgamma->add_option("--gamma", o.gamma, "search window min:max (default 1e-6:1e6)");
  auto* success = app.add_subcommand("success", "success probability over a (gamma, t) grid");
  add_graph_options(success, o);
  add_grid_options(success, o, true);
  success->add_flag("--krylov", o.krylov, "Krylov propagation instead of dense diagonalisation");
  success->add_flag("--gamma-max", o.gamma_max, "also locate gamma_max for the time horizon");
  auto* fit = app.add_subcommand("fit", "scaling fit of the critical gamma over a size range");
  add_graph_options(fit, o);
  fit->add_option("--model", o.model, "power | log");
  fit->add_option("--alpha", o.alpha, "alpha used for the exponent prediction");
  auto* verify = app.add_subcommand("verify", "check ground-state bounds and secular identities");
  add_graph_options(verify, o);
  add_grid_options(verify, o, false);
  verify->add_option("--gamma-rel", o.gamma_rel, "comma-separated multiples of xi1");
  auto* oracle = app.add_subcommand("oracle", "closed-form oracle checks");
  oracle->add_option("--check", o.check,
                     "all | complete-vs-engine | complete-forms | dsg-spectrum | zeta | krylov");
  oracle->add_option("--out", o.out_dir, "output directory");
  oracle->add_option("--threads", o.threads, "worker threads");
  oracle->add_option("--dense-guard", o.guard, "largest N for dense eigendecomposition");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 0;
  } catch (const CLI::Success&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "invalid_arguments"}, {"kind", "config"}, {"message", e.what()}}.dump() << '\n';
    return static_cast<int>(ErrorKind::Config);
  }

  try {
    const RunConfig cfg = resolve(o);
    if (generate->parsed()) return cmd_generate(cfg, out);
    if (spectrum->parsed()) return cmd_spectrum(cfg, o, out);
    if (overlaps_cmd->parsed()) return cmd_overlaps(cfg, out);
    if (critgamma->parsed()) return cmd_critgamma(cfg, out);
    if (success->parsed()) return cmd_success(cfg, o, out);
    if (fit->parsed()) return cmd_fit(cfg, o, out);
    if (verify->parsed()) return cmd_verify(cfg, o, out, err);
    if (oracle->parsed()) return cmd_oracle(cfg, o, out, err);
  } catch (const Error& e) {
    err << json{{"error", e.code()}, {"kind", kind_name(e.kind())}, {"message", e.what()}}.dump() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::bad_alloc&) {
    err << json{{"error", "out_of_memory"}, {"kind", "numerical"}, {"message", "allocation failed"}}.dump() << '\n';
    return static_cast<int>(ErrorKind::Numerical);
  }
  return static_cast<int>(ErrorKind::Config);
}

}  // namespace ctqw::cli
