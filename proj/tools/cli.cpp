#include "cli.hpp"

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "acceptance.hpp"
#include "bigraph/branching.hpp"
#include "bigraph/error.hpp"
#include "bigraph/graphgen.hpp"
#include "bigraph/harness.hpp"
#include "bigraph/oracle.hpp"
#include "bigraph/params.hpp"
#include "bigraph/rng.hpp"
#include "bigraph/theory.hpp"

namespace bigraph::cli {

namespace {

using json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string subcommand;
  std::int64_t n1 = 0, n2 = 0;
  std::optional<double> p, p11, p12, p22, rows, ratio, mu21, eps;
  std::optional<std::uint64_t> seed;
  std::int64_t reps = 10;
  int workers = 0;
  std::string out, csv, edges, format = "json";
  std::optional<double> l1, l2;
  int root = 1;
  std::string mode = "simulate";
  std::optional<std::int64_t> threshold;
  std::int64_t max_total = branching::kNoCap;
  std::int64_t max_generations = 1'000'000;
  std::optional<double> width_cap;
  std::string regime;
  std::vector<double> eps_grid;
  std::string stat = "L1";
  std::int64_t vertex = 0;
  int stat_type = 1;
  bool quick = false;
  std::vector<int> only;
  bool timing = false;
};

json mat_json(const Mat2& m) { return json::array({json::array({m[0][0], m[0][1]}), json::array({m[1][0], m[1][1]})}); }

TypeCounts counts(const RunConfig& c) {
  if (c.n1 <= 0 || c.n2 <= 0) throw Error(ErrorCode::InvalidCounts, "--n1 and --n2 must be positive");
  return TypeCounts{c.n1, c.n2};
}

ProbMatrix instance(const RunConfig& c, const TypeCounts& n) {
  if (c.p) return ProbMatrix{{*c.p, *c.p}, {*c.p, *c.p}};
  if (c.p11 || c.p12 || c.p22) {
    if (!(c.p11 && c.p12 && c.p22)) throw UsageError("--p11, --p12 and --p22 must be given together");
    return ProbMatrix{{*c.p11, *c.p12}, {*c.p12, *c.p22}};
  }
  if (c.rows || c.eps) {
    const double rows = c.rows ? *c.rows : 1.0 + *c.eps;
    const double mu21 = c.mu21 ? *c.mu21 : c.ratio.value_or(0.5) * rows;
    return row_sum_instance(n, rows, mu21);
  }
  throw UsageError("an instance needs --p, --p11/--p12/--p22, --rows or --eps");
}

std::uint64_t seed_of(const RunConfig& c, std::ostream& err) {
  if (c.seed) return *c.seed;
  std::random_device rd;
  const std::uint64_t s = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  err << "seed: " << s << '\n';
  return s;
}

void emit(const RunConfig& c, const std::string& text, std::ostream& out) {
  if (c.out.empty()) {
    out << text << '\n';
  } else {
    std::ofstream f(c.out);
    if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + c.out);
    f << text << '\n';
  }
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  fn(f);
}

int cmd_solve(const RunConfig& c, std::ostream& out) {
  const TypeCounts n = counts(c);
  const ProbMatrix p = instance(c, n);
  const ExpectationMatrix m = validate(p, n);
  const RegimeReport d = diagnose(m, n);
  const auto s = theory::solve_survival(m, n);
  const auto dual = theory::dual_matrix(p, s, n);
  json j;
  j["schema_version"] = harness::kReportSchemaVersion;
  j["n"] = n.data();
  j["p"] = mat_json(p.as_mat2());
  j["mu"] = mat_json(m.as_mat2());
  j["lambda"] = d.lambda;
  j["epsilon"] = d.epsilon;
  j["classification"] = std::string(to_string(d.classification));
  j["row_sums"] = d.row_sums;
  j["condition_super"] = d.condition_super;
  j["condition_sub"] = d.condition_sub;
  j["rho"] = s.rho;
  j["residual"] = s.residual;
  j["iterations"] = s.iterations;
  j["pi"] = mat_json(dual.pi);
  j["h"] = mat_json(dual.h);
  j["d"] = dual.d;
  try {
    j["expected_dual_sizes"] = mat_json(theory::expected_dual_sizes(dual).e);
  } catch (const Error&) {
    j["expected_dual_sizes"] = nullptr;
  }
  try {
    j["expected_primal_sizes"] = mat_json(theory::expected_primal_sizes(m).e);
  } catch (const Error&) {
    j["expected_primal_sizes"] = nullptr;
  }
  j["rho_eps"] = d.epsilon > 0 ? json(theory::rho_epsilon(d.epsilon)) : json(nullptr);
  emit(c, j.dump(2), out);
  return kOk;
}

std::optional<std::vector<double>> thresholds(const RunConfig& c) {
  if (c.l1 || c.l2) {
    if (!(c.l1 && c.l2)) throw UsageError("--l1 and --l2 must be given together");
    return std::vector<double>{*c.l1, *c.l2};
  }
  return std::nullopt;
}

int cmd_sample(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const TypeCounts n = counts(c);
  const ProbMatrix p = instance(c, n);
  const std::uint64_t seed = seed_of(c, err);
  const SampledGraph g = sample(n, p, seed);
  const auto th = thresholds(c);
  const ComponentStats s = components(g, th);
  json j;
  j["schema_version"] = harness::kReportSchemaVersion;
  j["n"] = n.data();
  j["seed"] = seed;
  j["edges"] = g.edges().size();
  j["components"] = s.component_count();
  j["L1"] = s.L1;
  j["L2"] = s.L2;
  j["L1_per_type"] = json::array({s.type_count(0, 0), s.type_count(0, 1)});
  j["s_L"] = th ? json(s.s_L) : json(nullptr);
  if (!c.edges.empty()) write_file(c.edges, [&](std::ostream& f) { write_edge_list(f, g); });
  emit(c, j.dump(2), out);
  return kOk;
}

int cmd_branching(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const TypeCounts n = counts(c);
  const ProbMatrix p = instance(c, n);
  if (c.root != 1 && c.root != 2) throw Error(ErrorCode::InvalidArgument, "--root must be 1 or 2");
  const std::size_t root = static_cast<std::size_t>(c.root - 1);
  const std::uint64_t seed = seed_of(c, err);
  json j;
  j["schema_version"] = harness::kReportSchemaVersion;
  j["seed"] = seed;
  j["root"] = c.root;
  if (c.mode == "simulate") {
    branching::StopConfig caps;
    caps.max_total = c.max_total;
    caps.max_generations = c.max_generations;
    if (c.width_cap) caps.width_cap = *c.width_cap;
    if (c.l1) caps.l[0] = *c.l1;
    if (c.l2) caps.l[1] = *c.l2;
    const auto o = branching::simulate(root, n, p, caps, seed);
    j["totals"] = o.totals;
    j["width"] = o.width;
    j["generations"] = o.generations;
    j["stop"] = std::string(branching::to_string(o.stop));
  } else if (c.mode == "survival") {
    const double eps = diagnose(validate(p, n), n).epsilon;
    const std::int64_t thr = c.threshold ? *c.threshold : branching::default_survival_threshold(eps);
    const auto e = branching::estimate_survival(root, n, p, thr, c.reps, seed, c.max_generations);
    j["survive_threshold"] = thr;
    j["reps"] = c.reps;
    j["estimate"] = e.value;
    j["std_error"] = e.std_error;
    j["successes"] = e.successes;
    j["solver_rho"] = theory::solve_survival(p, n).rho[root];
  } else {
    throw UsageError("--mode must be simulate or survival");
  }
  emit(c, j.dump(2), out);
  return kOk;
}

int finish_report(const RunConfig& c, const harness::ExperimentReport& r, std::ostream& out) {
  if (!c.csv.empty()) write_file(c.csv, [&](std::ostream& f) { harness::write_csv(f, r); });
  if (c.format == "csv") {
    std::ostringstream os;
    harness::write_csv(os, r);
    std::string s = os.str();
    if (!s.empty() && s.back() == '\n') s.pop_back();
    emit(c, s, out);
  } else {
    emit(c, harness::to_json(r, c.timing), out);
  }
  return kOk;
}

int cmd_regime(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto regime = harness::parse_regime(c.regime);
  if (!regime) throw UsageError("--regime must be weak_super, weak_sub, const_super or const_sub");
  const TypeCounts n = counts(c);
  const ProbMatrix p = instance(c, n);
  const auto r = harness::run_regime(*regime, n, p, c.reps, seed_of(c, err), {c.workers, thresholds(c)});
  return finish_report(c, r, out);
}

int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const TypeCounts n = counts(c);
  ProbMatrix shape = [&] {
    if (c.p || c.p11) {
      const ProbMatrix p = instance(c, n);
      return p.scaled(1.0 / theory::perron_frobenius(validate(p, n)));
    }
    return row_sum_instance(n, 1.0, c.mu21 ? *c.mu21 : c.ratio.value_or(0.5));
  }();
  const auto rows = harness::sweep_epsilon(c.eps_grid, n, shape, c.reps, seed_of(c, err), c.workers);
  if (!c.csv.empty()) write_file(c.csv, [&](std::ostream& f) { harness::write_sweep_csv(f, rows); });
  if (c.format == "csv") {
    std::ostringstream os;
    harness::write_sweep_csv(os, rows);
    std::string s = os.str();
    if (!s.empty() && s.back() == '\n') s.pop_back();
    emit(c, s, out);
  } else {
    emit(c, harness::sweep_to_json(rows), out);
  }
  return kOk;
}

int cmd_sprinkle(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const TypeCounts n = counts(c);
  const ProbMatrix p = instance(c, n);
  const auto r = harness::two_round_exposure(n, p, seed_of(c, err), c.reps, c.workers);
  return finish_report(c, r, out);
}

int cmd_sl(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const TypeCounts n = counts(c);
  const ProbMatrix p = instance(c, n);
  std::vector<double> l;
  if (auto th = thresholds(c)) l = *th;
  else l = harness::make_sprinkle(n, p).l;
  const auto est = harness::estimate_sL(n, p, l, c.reps, seed_of(c, err), c.workers);
  emit(c, harness::sl_to_json(est), out);
  return kOk;
}

int cmd_oracle(const RunConfig& c, std::ostream& out) {
  const TypeCounts n = counts(c);
  const ProbMatrix p = instance(c, n);
  oracle::Statistic stat;
  if (c.stat == "L1") stat = oracle::Statistic::l1();
  else if (c.stat == "L2") stat = oracle::Statistic::l2();
  else if (c.stat == "count") stat = oracle::Statistic::component_count();
  else if (c.stat == "root") stat = oracle::Statistic::root_component(c.vertex);
  else if (c.stat == "sL") {
    auto th = thresholds(c);
    if (!th) throw UsageError("--stat sL needs --l1 and --l2");
    if (c.stat_type != 1 && c.stat_type != 2) throw Error(ErrorCode::InvalidArgument, "--type must be 1 or 2");
    stat = oracle::Statistic::s_l(*th, static_cast<std::size_t>(c.stat_type - 1));
  } else {
    throw UsageError("--stat must be L1, L2, count, root or sL");
  }
  const auto d = oracle::enumerate_exact(n, p, stat);
  json j;
  j["schema_version"] = harness::kReportSchemaVersion;
  j["statistic"] = c.stat;
  json support = json::array();
  for (const auto& [v, pr] : d.support) support.push_back({{"value", v}, {"probability", pr}});
  j["support"] = support;
  j["mean"] = d.mean;
  j["variance"] = d.variance;
  emit(c, j.dump(2), out);
  return kOk;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  acceptance::Options opts;
  opts.quick = c.quick;
  opts.workers = c.workers;
  opts.only = c.only;
  if (c.seed) opts.master_seed = *c.seed;
  const auto report = acceptance::run(opts, [&](const acceptance::CriterionResult& r) {
    out << acceptance::format_line(r) << std::endl;
  });
  if (!c.out.empty()) {
    write_file(c.out, [&](std::ostream& f) { f << acceptance::to_json(report, c.timing) << '\n'; });
  }
  out << (report.passed() ? "ALL PASS" : "FAILURES") << std::endl;
  return report.passed() ? kOk : kVerifyFailed;
}

void add_instance(CLI::App* s, RunConfig& c) {
  s->add_option("--n1", c.n1, "type-1 vertex count");
  s->add_option("--n2", c.n2, "type-2 vertex count");
  s->add_option("--p", c.p, "same edge probability for every type pair");
  s->add_option("--p11", c.p11, "edge probability within type 1");
  s->add_option("--p12", c.p12, "edge probability across types");
  s->add_option("--p22", c.p22, "edge probability within type 2");
  s->add_option("--rows", c.rows, "common row sum of the expectation matrix");
  s->add_option("--eps", c.eps, "row sums 1 + eps");
  s->add_option("--ratio", c.ratio, "mu21 as a fraction of the row sum (default 0.5)");
  s->add_option("--mu21", c.mu21, "expected type-1 neighbours of a type-2 vertex");
}

void add_seed(CLI::App* s, RunConfig& c) {
  s->add_option("--seed", c.seed, "64-bit seed (drawn and printed when absent)");
}

void add_output(CLI::App* s, RunConfig& c) {
  s->add_option("--out", c.out, "write the main output here instead of stdout");
  s->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

void add_experiment(CLI::App* s, RunConfig& c) {
  s->add_option("--reps", c.reps, "replications")->check(CLI::NonNegativeNumber);
  s->add_option("--workers", c.workers, "worker threads (default: BIGRAPH_WORKERS or hardware)");
  s->add_option("--csv", c.csv, "per-replication CSV path");
  s->add_flag("--timing", c.timing, "include wall time in the JSON summary");
}

void add_thresholds(CLI::App* s, RunConfig& c) {
  s->add_option("--l1", c.l1, "type-1 threshold");
  s->add_option("--l2", c.l2, "type-2 threshold");
}

}  // namespace

std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot read config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(f, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line without '=': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value == "true") {
      tokens.push_back("--" + key);
    } else if (value != "false") {
      tokens.push_back("--" + key);
      tokens.push_back(value);
    }
  }
  return tokens;
}

int dispatch(const std::vector<std::string>& argv_in, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Two-type binomial random graphs and branching processes"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  auto* solve = app.add_subcommand("solve", "survival probabilities, dual process and expectations");
  add_instance(solve, c);
  add_output(solve, c);

  auto* smp = app.add_subcommand("sample", "sample one graph and report its components");
  add_instance(smp, c);
  add_seed(smp, c);
  add_output(smp, c);
  add_thresholds(smp, c);
  smp->add_option("--edges", c.edges, "write the edge list here");

  auto* br = app.add_subcommand("branching", "simulate the branching process or estimate survival");
  add_instance(br, c);
  add_seed(br, c);
  add_output(br, c);
  add_thresholds(br, c);
  br->add_option("--root", c.root, "root type (1 or 2)");
  br->add_option("--mode", c.mode, "simulate or survival");
  br->add_option("--reps", c.reps, "runs for survival mode")->check(CLI::NonNegativeNumber);
  br->add_option("--threshold", c.threshold, "survival proxy: total population reached");
  br->add_option("--max-total", c.max_total, "cap on the total population");
  br->add_option("--max-generations", c.max_generations, "cap on the number of generations");
  br->add_option("--width-cap", c.width_cap, "cap on the generation size");

  auto* reg = app.add_subcommand("regime", "run one regime experiment");
  add_instance(reg, c);
  add_seed(reg, c);
  add_output(reg, c);
  add_experiment(reg, c);
  add_thresholds(reg, c);
  reg->add_option("--regime", c.regime, "weak_super, weak_sub, const_super or const_sub")->required();

  auto* sw = app.add_subcommand("sweep", "mean component sizes along an eps grid");
  add_instance(sw, c);
  add_seed(sw, c);
  add_output(sw, c);
  add_experiment(sw, c);
  sw->add_option("--eps-grid", c.eps_grid, "grid of eps values")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);

  auto* sp = app.add_subcommand("sprinkle", "two-round exposure experiment");
  add_instance(sp, c);
  add_seed(sp, c);
  add_output(sp, c);
  add_experiment(sp, c);

  auto* sl = app.add_subcommand("sL", "large-component membership counts");
  add_instance(sl, c);
  add_seed(sl, c);
  add_output(sl, c);
  add_experiment(sl, c);
  add_thresholds(sl, c);

  auto* orc = app.add_subcommand("oracle", "exact law of a statistic on a tiny instance");
  add_instance(orc, c);
  add_output(orc, c);
  add_thresholds(orc, c);
  orc->add_option("--stat", c.stat, "L1, L2, count, root or sL");
  orc->add_option("--vertex", c.vertex, "root vertex for --stat root");
  orc->add_option("--type", c.stat_type, "type reported by --stat sL (1 or 2)");

  auto* ver = app.add_subcommand("verify", "run the acceptance suite");
  ver->add_flag("--quick", c.quick, "reduced sample sizes");
  ver->add_option("--seed", c.seed, "master seed");
  ver->add_option("--workers", c.workers, "worker threads");
  ver->add_option("--only", c.only, "criteria to run")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  ver->add_option("--out", c.out, "write the JSON report here");
  ver->add_flag("--timing", c.timing, "include timings in the JSON report");

  // Config file: its tokens go right after the subcommand name, so flags on
  // the command line (parsed later, TakeLast) override them.
  std::vector<std::string> args;
  std::string config;
  try {
    for (std::size_t i = 1; i < argv_in.size(); ++i) {
      if (argv_in[i] == "--config") {
        if (i + 1 >= argv_in.size()) throw UsageError("--config needs a path");
        config = argv_in[++i];
      } else if (argv_in[i].rfind("--config=", 0) == 0) {
        config = argv_in[i].substr(9);
      } else {
        args.push_back(argv_in[i]);
      }
    }
    if (!config.empty() && !args.empty()) {
      const auto tokens = config_tokens(config);
      args.insert(args.begin() + 1, tokens.begin(), tokens.end());
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(c, out);
    if (smp->parsed()) return cmd_sample(c, out, err);
    if (br->parsed()) return cmd_branching(c, out, err);
    if (reg->parsed()) return cmd_regime(c, out, err);
    if (sw->parsed()) return cmd_sweep(c, out, err);
    if (sp->parsed()) return cmd_sprinkle(c, out, err);
    if (sl->parsed()) return cmd_sl(c, out, err);
    if (orc->parsed()) return cmd_oracle(c, out);
    if (ver->parsed()) return cmd_verify(c, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  }
  return kUsage;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace bigraph::cli
