#include "did/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"

#include "did/aggregate.hpp"
#include "did/dgp.hpp"
#include "did/error.hpp"
#include "did/gmm.hpp"
#include "did/hetero.hpp"
#include "did/inference.hpp"
#include "did/mc.hpp"
#include "did/report.hpp"
#include "did/twfe.hpp"

namespace did::cli {

namespace {

using report::ordered_json;

struct Config {
  std::string subcommand;
  // io
  std::string input;
  std::string output;
  std::string plot_csv;
  std::string emit_csv;
  bool no_meta = false;
  // columns
  std::string col_unit = "unit", col_time = "time", col_outcome = "outcome",
              col_first_treat = "first_treat", col_weight = "weight", col_cluster = "cluster",
              col_stratum = "stratum";
  std::string never_code = "0";
  bool drop_unbalanced = false;
  double epsilon = kDefaultOverlapEpsilon;
  // estimation
  std::string method = "nyt";
  bool include_pre = false;
  bool freeze_weights = false;
  std::string pta = "not-yet";
  double ridge = 0.0;
  bool allow_big = false;
  bool no_cluster_sigma = false;
  std::string strata_trends = "specific";
  // inference
  std::size_t bootstrap = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  std::string weight_law = "mammen";
  unsigned threads = 0;
  // twfe
  bool dynamic = false;
  int leads = -1;
  int lags = -1;
  std::vector<int> omit;
  bool interact_stratum = false;
  std::string fe = "unit";
  bool drop_collinear = false;
  // simulation
  std::string scenario = "null";
  std::size_t n_units = 2000;
  std::size_t reps = 200;
};

struct Context {
  const Config& cfg;
  std::ostream& err;
  std::vector<std::string> warnings;

  void warn(const std::string& w) {
    warnings.push_back(w);
    err << "warning: " << w << '\n';
  }
  void warn_all(const std::vector<std::string>& ws) {
    for (const auto& w : ws) warn(w);
  }
};

PanelDataset load(const Config& cfg) {
  if (cfg.input.empty()) throw Error(ErrorCode::InvalidArgument, "--input is required");
  CsvColumns cols;
  cols.unit = cfg.col_unit;
  cols.time = cfg.col_time;
  cols.outcome = cfg.col_outcome;
  cols.first_treat = cfg.col_first_treat;
  cols.weight = cfg.col_weight;
  cols.cluster = cfg.col_cluster;
  cols.stratum = cfg.col_stratum;
  const auto records = read_panel_csv_file(cfg.input, cols);
  LoadOptions opts;
  opts.never_code = cfg.never_code;
  opts.drop_unbalanced = cfg.drop_unbalanced;
  return load_panel(records, opts);
}

BootstrapOptions boot_options(const Config& cfg) {
  BootstrapOptions b;
  b.draws = cfg.bootstrap;
  b.alpha = cfg.alpha;
  b.seed = cfg.seed;
  b.law = parse_weight_law(cfg.weight_law);
  b.threads = cfg.threads;
  return b;
}

void check_alpha(const Config& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "--alpha must lie in (0,1)");
  if (cfg.bootstrap != 0 && cfg.bootstrap < 200)
    throw Error(ErrorCode::InvalidArgument, "--bootstrap must be 0 (off) or at least 200");
}

void check_method(const PanelDataset& ds, Method m) {
  if (m == Method::Never && !ds.has_never())
    throw Error(ErrorCode::InvalidArgument,
                "--method never requires a never-treated group in the panel");
}

ordered_json panel_json(const PanelDataset& ds, Context& ctx) {
  const auto v = validate(ds, ctx.cfg.epsilon);
  ctx.warn_all(v.warnings);
  auto j = report::to_json(v);
  j["n_units"] = ds.n_units();
  j["n_periods"] = ds.n_periods();
  j["n_clusters"] = ds.n_clusters();
  ordered_json periods = ordered_json::array();
  for (int t = 1; t <= ds.n_periods(); ++t) periods.push_back(report::period_value(ds, t));
  j["periods"] = std::move(periods);
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  f << text;
}

ordered_json curve_json(EventStudyCurve& curve, const PanelDataset& ds, Context& ctx) {
  if (ctx.cfg.bootstrap > 0) attach_bands(curve, ds, boot_options(ctx.cfg));
  ctx.warn_all(curve.warnings);
  auto j = report::to_json(curve, &ds);
  if (curve.bands_filled) {
    j["bootstrap"] = {{"B", ctx.cfg.bootstrap},
                      {"seed", ctx.cfg.seed},
                      {"weight_law", ctx.cfg.weight_law},
                      {"scale", "iqr"}};
  }
  return j;
}

ordered_json cmd_attgt(Context& ctx) {
  const auto ds = load(ctx.cfg);
  const Method m = parse_method(ctx.cfg.method);
  check_method(ds, m);
  ordered_json j;
  j["panel"] = panel_json(ds, ctx);
  const auto set = att_set(ds, m, ctx.cfg.include_pre);
  ctx.warn_all(set.warnings);
  j["attgt"] = report::to_json(set, ds);
  return j;
}

ordered_json cmd_es(Context& ctx) {
  check_alpha(ctx.cfg);
  const auto ds = load(ctx.cfg);
  const Method m = parse_method(ctx.cfg.method);
  check_method(ds, m);
  ordered_json j;
  j["panel"] = panel_json(ds, ctx);
  const auto set = att_set(ds, m, ctx.cfg.include_pre);
  AggregateOptions agg;
  agg.freeze_weights = ctx.cfg.freeze_weights;
  auto curve = event_study(set, ds, agg);
  j["event_study"] = curve_json(curve, ds, ctx);
  if (!ctx.cfg.plot_csv.empty()) {
    std::ostringstream csv;
    report::write_curve_csv(curve, csv);
    write_text(ctx.cfg.plot_csv, csv.str());
  }
  return j;
}

ordered_json cmd_summary(Context& ctx) {
  const auto ds = load(ctx.cfg);
  const Method m = parse_method(ctx.cfg.method);
  check_method(ds, m);
  AggregateOptions agg;
  agg.freeze_weights = ctx.cfg.freeze_weights;
  ordered_json j;
  j["panel"] = panel_json(ds, ctx);
  const auto set = att_set(ds, m, false);
  ctx.warn_all(set.warnings);
  const auto curve = event_study(set, ds, agg);
  ordered_json s = ordered_json::array();
  s.push_back(report::to_json(att_simple(set, ds, agg)));
  s.push_back(report::to_json(delta_e_avg(curve, ds)));
  try {
    s.push_back(report::to_json(delta_s(ds, agg)));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyComparisonSet) throw;
    ctx.warn(std::string("delta_S unavailable: ") + e.what());
  }
  j["method"] = set.estimator;
  j["summaries"] = std::move(s);
  return j;
}

GmmFit fit_gmm(Context& ctx, const PanelDataset& ds) {
  GmmBuildOptions bo;
  bo.allow_big = ctx.cfg.allow_big;
  if (ctx.cfg.allow_big && !(ctx.cfg.ridge > 0.0))
    throw Error(ErrorCode::InvalidArgument, "--allow-big-gmm requires --ridge > 0");
  const auto model = build_moments(ds, parse_pta(ctx.cfg.pta), bo);
  GmmOptions go;
  go.ridge = ctx.cfg.ridge;
  go.cluster = !ctx.cfg.no_cluster_sigma;
  auto fit = estimate_gmm(model, ds, go);
  ctx.warn_all(fit.model.warnings);
  if (fit.ridge > 0.0) ctx.warn("ridge " + std::to_string(fit.ridge) + " applied to the moment covariance");
  return fit;
}

ordered_json cmd_gmm(Context& ctx) {
  const auto ds = load(ctx.cfg);
  parse_pta(ctx.cfg.pta);
  ordered_json j;
  j["panel"] = panel_json(ds, ctx);
  const auto fit = fit_gmm(ctx, ds);
  j["fit"] = report::to_json(fit, ds);
  const auto set = att_from_gmm(fit);
  j["attgt"] = report::to_json(set, ds);
  auto curve = event_study(set, ds);
  check_alpha(ctx.cfg);
  j["event_study"] = curve_json(curve, ds, ctx);
  return j;
}

ordered_json cmd_jtest(Context& ctx) {
  const auto ds = load(ctx.cfg);
  parse_pta(ctx.cfg.pta);
  ordered_json j;
  j["panel"] = panel_json(ds, ctx);
  const auto fit = fit_gmm(ctx, ds);
  const auto jt = j_test(fit);
  j["pta"] = ctx.cfg.pta;
  j["J"] = jt.J;
  j["df"] = jt.df;
  j["p_value"] = jt.p_value;
  j["m"] = fit.model.m();
  j["p"] = fit.model.p();
  return j;
}

ordered_json cmd_twfe(Context& ctx) {
  const auto ds = load(ctx.cfg);
  TwfeOptions opts;
  opts.interact_stratum = ctx.cfg.interact_stratum;
  opts.drop_collinear = ctx.cfg.drop_collinear;
  if (ctx.cfg.fe == "unit")
    opts.fe = FixedEffects::Unit;
  else if (ctx.cfg.fe == "group")
    opts.fe = FixedEffects::Group;
  else
    throw Error(ErrorCode::InvalidArgument, "--fe must be unit or group");
  if (opts.interact_stratum && !ds.has_stratum())
    throw Error(ErrorCode::MissingStratum, "--interact-stratum needs a stratum column");
  ordered_json j;
  j["panel"] = panel_json(ds, ctx);
  TwfeFit fit = [&] {
    if (!ctx.cfg.dynamic) return twfe_static(ds, opts);
    const auto [k, l] = default_window(ds);
    const int leads = ctx.cfg.leads >= 0 ? ctx.cfg.leads : k;
    const int lags = ctx.cfg.lags >= 0 ? ctx.cfg.lags : l;
    std::optional<std::set<int>> omit;
    if (!ctx.cfg.omit.empty()) omit = std::set<int>(ctx.cfg.omit.begin(), ctx.cfg.omit.end());
    return twfe_dynamic(ds, leads, lags, omit, opts);
  }();
  if (!fit.dropped.empty()) ctx.warn(std::to_string(fit.dropped.size()) + " collinear columns dropped");
  j["twfe"] = report::to_json(fit);
  if (ctx.cfg.dynamic) {
    bool any_pre = false;
    for (std::size_t k = 0; k < fit.names.size(); ++k)
      any_pre = any_pre || (fit.event_time[k] < 0 && !fit.interacted[k]);
    if (any_pre) {
      const auto w = pre_period_test(fit);
      j["twfe"]["pre_period_wald"] = {{"stat", w.stat}, {"df", w.df}, {"p_value", w.p_value}};
    }
  }
  return j;
}

ordered_json cmd_hetero(Context& ctx) {
  check_alpha(ctx.cfg);
  const auto ds = load(ctx.cfg);
  if (!ds.has_stratum())
    throw Error(ErrorCode::MissingStratum, "hetero needs a stratum column (--stratum COLUMN)");
  StrataVariant v;
  v.base = parse_method(ctx.cfg.method);
  if (ctx.cfg.strata_trends == "specific")
    v.specific_trends = true;
  else if (ctx.cfg.strata_trends == "pooled")
    v.specific_trends = false;
  else
    throw Error(ErrorCode::InvalidArgument, "--strata-trends must be specific or pooled");
  check_method(ds, v.base);
  ordered_json j;
  j["panel"] = panel_json(ds, ctx);
  j["variant"] = {{"method", std::string(method_name(v.base))},
                  {"strata_trends", ctx.cfg.strata_trends}};
  auto c1 = event_study_strata(ds, v, 1, ctx.cfg.include_pre);
  auto c0 = event_study_strata(ds, v, 0, ctx.cfg.include_pre);
  auto d = diff_curve(c1, c0, &ds);
  j["curve_stratum_1"] = curve_json(c1, ds, ctx);
  j["curve_stratum_0"] = curve_json(c0, ds, ctx);
  j["curve_difference"] = curve_json(d, ds, ctx);
  const auto s = summaries_strata(ds, v);
  j["summaries"] = ordered_json::array({report::to_json(s.att_simple_1), report::to_json(s.att_simple_0),
                                        report::to_json(s.att_simple_diff),
                                        report::to_json(s.delta_e_avg_1), report::to_json(s.delta_e_avg_0),
                                        report::to_json(s.delta_e_avg_diff)});
  return j;
}

ordered_json cmd_simulate(Context& ctx) {
  const auto cfg = scenario_config(ctx.cfg.scenario, ctx.cfg.n_units, ctx.cfg.seed);
  const auto sim = simulate(cfg);
  if (!ctx.cfg.emit_csv.empty()) {
    std::ostringstream csv;
    write_panel_csv(sim.panel, csv);
    write_text(ctx.cfg.emit_csv, csv.str());
  }
  ordered_json j;
  j["scenario"] = sim.scenario;
  j["n_units"] = sim.panel.n_units();
  j["n_periods"] = sim.panel.n_periods();
  j["seed"] = ctx.cfg.seed;
  j["panel"] = panel_json(sim.panel, ctx);
  ordered_json truth = ordered_json::array();
  for (const auto& [gt, v] : sim.truth) truth.push_back({{"g", gt.first}, {"t", gt.second}, {"att", v}});
  j["truth"] = std::move(truth);
  ordered_json ev = ordered_json::array();
  for (const auto& [e, v] : sim.true_event) ev.push_back({{"e", e}, {"value", v}});
  j["true_event_study"] = std::move(ev);
  j["true_att_simple"] = sim.true_att_simple;
  j["notes"] = sim.notes;
  return j;
}

ordered_json cmd_mc(Context& ctx) {
  McOptions o;
  o.scenario = ctx.cfg.scenario;
  o.n_units = ctx.cfg.n_units;
  o.reps = ctx.cfg.reps;
  o.seed = ctx.cfg.seed;
  o.threads = ctx.cfg.threads;
  o.alpha = ctx.cfg.alpha;
  scenario_config(o.scenario, o.n_units, 0);
  const auto rep = monte_carlo(o);
  ctx.warn_all(rep.warnings);
  return report::to_json(rep);
}

void add_input(CLI::App* sub, Config& cfg) {
  sub->add_option("--input,-i", cfg.input, "Long-format panel CSV")->required();
  sub->add_option("--unit-col", cfg.col_unit, "Unit column name");
  sub->add_option("--time-col", cfg.col_time, "Time column name");
  sub->add_option("--outcome-col", cfg.col_outcome, "Outcome column name");
  sub->add_option("--first-treat-col", cfg.col_first_treat, "First-treatment column name");
  sub->add_option("--weight", cfg.col_weight, "Weight column name");
  sub->add_option("--cluster", cfg.col_cluster, "Cluster column name");
  sub->add_option("--stratum", cfg.col_stratum, "Binary stratum column name");
  sub->add_option("--never-code", cfg.never_code, "first_treat value meaning never treated");
  sub->add_flag("--drop-unbalanced", cfg.drop_unbalanced, "Drop units with missing periods");
  sub->add_option("--epsilon", cfg.epsilon, "Overlap warning threshold");
}

void add_method(CLI::App* sub, Config& cfg) {
  sub->add_option("--method", cfg.method, "never | nyt | nyt-all")
      ->check(CLI::IsMember({"never", "nyt", "nyt-all"}));
  sub->add_flag("--include-pre", cfg.include_pre, "Include pre-treatment cells");
}

void add_inference(CLI::App* sub, Config& cfg) {
  sub->add_option("--bootstrap", cfg.bootstrap, "Bootstrap draws (0 disables)");
  sub->add_option("--alpha", cfg.alpha, "Significance level");
  sub->add_option("--seed", cfg.seed, "Bootstrap seed");
  sub->add_option("--weight-law", cfg.weight_law, "mammen | rademacher")
      ->check(CLI::IsMember({"mammen", "rademacher"}));
  sub->add_flag("--freeze-weights", cfg.freeze_weights, "Ignore weight-estimation uncertainty");
}

void add_gmm(CLI::App* sub, Config& cfg) {
  sub->add_option("--pta", cfg.pta, "all-groups | not-yet")
      ->check(CLI::IsMember({"all-groups", "not-yet"}));
  sub->add_option("--ridge", cfg.ridge, "Ridge added to the moment covariance");
  sub->add_flag("--allow-big-gmm", cfg.allow_big, "Allow more moments than units (needs --ridge)");
  sub->add_flag("--no-cluster-sigma", cfg.no_cluster_sigma, "Unit-level moment covariance");
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App app{"Staggered difference-in-differences estimation"};
  app.require_subcommand(1);
  app.add_option("--output,-o", cfg.output, "Write JSON here instead of stdout");
  app.add_flag("--no-meta", cfg.no_meta, "Omit run metadata (timestamp) from JSON");
  app.add_option("--threads", cfg.threads, "Worker threads (default: DID_THREADS or 1)");
  app.fallthrough();

  auto* attgt = app.add_subcommand("attgt", "Group-time ATT estimates");
  add_input(attgt, cfg);
  add_method(attgt, cfg);

  auto* es = app.add_subcommand("es", "Event-study curve with bootstrap bands");
  add_input(es, cfg);
  add_method(es, cfg);
  add_inference(es, cfg);
  es->add_option("--plot-csv", cfg.plot_csv, "Write e,estimate,lo_pw,hi_pw,lo_sim,hi_sim here");

  auto* summary = app.add_subcommand("summary", "ATT_simple, delta_e_avg and delta_S");
  add_input(summary, cfg);
  add_method(summary, cfg);
  summary->add_flag("--freeze-weights", cfg.freeze_weights, "Ignore weight-estimation uncertainty");

  auto* gmm = app.add_subcommand("gmm", "Efficient GMM under a parallel-trends assumption");
  add_input(gmm, cfg);
  add_gmm(gmm, cfg);
  add_inference(gmm, cfg);

  auto* jtest = app.add_subcommand("jtest", "Overidentification test of a parallel-trends assumption");
  add_input(jtest, cfg);
  add_gmm(jtest, cfg);

  auto* twfe = app.add_subcommand("twfe", "Two-way fixed-effects baseline (descriptive)");
  add_input(twfe, cfg);
  twfe->add_flag("--dynamic", cfg.dynamic, "Event-time dummies instead of a single D");
  twfe->add_option("--leads", cfg.leads, "Number of leads K (default: realized range, at most T-2)");
  twfe->add_option("--lags", cfg.lags, "Number of lags L (default: realized range, at most T-1)");
  twfe->add_option("--omit", cfg.omit, "Omitted event times (must include 0)")->delimiter(',');
  twfe->add_flag("--interact-stratum", cfg.interact_stratum, "Interact with the stratum");
  twfe->add_option("--fe", cfg.fe, "unit | group")->check(CLI::IsMember({"unit", "group"}));
  twfe->add_flag("--drop-collinear", cfg.drop_collinear, "Drop collinear columns instead of failing");

  auto* hetero = app.add_subcommand("hetero", "Stratum-specific event studies and differences");
  add_input(hetero, cfg);
  add_method(hetero, cfg);
  add_inference(hetero, cfg);
  hetero->add_option("--strata-trends", cfg.strata_trends, "specific | pooled")
      ->check(CLI::IsMember({"specific", "pooled"}));

  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic panel");
  simulate_cmd->add_option("--scenario", cfg.scenario, "Scenario preset");
  simulate_cmd->add_option("--n", cfg.n_units, "Number of units");
  simulate_cmd->add_option("--seed", cfg.seed, "Seed");
  simulate_cmd->add_option("--emit-csv", cfg.emit_csv, "Write the panel as CSV");

  auto* mc = app.add_subcommand("mc", "Monte Carlo summary over a scenario");
  mc->add_option("--scenario", cfg.scenario, "Scenario preset");
  mc->add_option("--n", cfg.n_units, "Units per replication");
  mc->add_option("--reps", cfg.reps, "Replications");
  mc->add_option("--seed", cfg.seed, "Base seed");
  mc->add_option("--alpha", cfg.alpha, "Interval level for coverage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  for (auto* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();
  Context ctx{cfg, err, {}};
  ordered_json body;
  try {
    const auto& s = cfg.subcommand;
    if (s == "attgt") body = cmd_attgt(ctx);
    else if (s == "es") body = cmd_es(ctx);
    else if (s == "summary") body = cmd_summary(ctx);
    else if (s == "gmm") body = cmd_gmm(ctx);
    else if (s == "jtest") body = cmd_jtest(ctx);
    else if (s == "twfe") body = cmd_twfe(ctx);
    else if (s == "hetero") body = cmd_hetero(ctx);
    else if (s == "simulate") body = cmd_simulate(ctx);
    else if (s == "mc") body = cmd_mc(ctx);
  } catch (const Error& e) {
    err << "error: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return is_validation_error(e.code()) ? kExitValidation : kExitEstimation;
  } catch (const std::exception& e) {
    err << "error: Internal: " << e.what() << '\n';
    return kExitEstimation;
  }

  ordered_json doc;
  doc["schema_version"] = report::kSchemaVersion;
  doc["command"] = cfg.subcommand;
  if (!cfg.no_meta) doc["meta"] = {{"generated_at", timestamp()}};
  for (auto& [k, v] : body.items()) doc[k] = v;
  doc["warnings"] = ctx.warnings;
  const std::string text = report::dump(doc);
  if (cfg.output.empty()) {
    out << text;
  } else {
    std::ofstream f(cfg.output, std::ios::binary);
    if (!f) {
      err << "error: InvalidArgument: cannot write " << cfg.output << '\n';
      return kExitValidation;
    }
    f << text;
  }
  return kExitOk;
}

}  // namespace did::cli
