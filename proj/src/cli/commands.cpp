#include "lockscale/cli.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "lockscale/errors.hpp"
#include "lockscale/manifest.hpp"
#include "lockscale/model.hpp"
#include "lockscale/rng.hpp"
#include "lockscale/svg.hpp"

namespace lockscale::cli {

namespace {

bool same_value(double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(std::abs(x), std::abs(y)); }

std::vector<std::uint32_t> one_to(std::uint32_t n) {
  std::vector<std::uint32_t> v(n);
  for (std::uint32_t i = 0; i < n; ++i) v[i] = i + 1;
  return v;
}

std::string label_of(const char* prefix, double v) { return std::string(prefix) + format_number(v); }

// Groups rows by a key into plot series of (n, throughput).
std::vector<PlotSeries> series_by(std::span<const CsvRow> rows,
                                  const std::function<std::string(const CsvRow&)>& key,
                                  bool markers) {
  std::vector<PlotSeries> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    if (!r.n || !r.throughput) continue;
    const std::string k = key(r);
    auto [it, inserted] = index.emplace(k, out.size());
    if (inserted) out.push_back(PlotSeries{k, {}, markers});
    out[it->second].points.emplace_back(*r.n, *r.throughput);
  }
  return out;
}

struct Outputs {
  std::string csv;
  std::string svg;
  std::string manifest;
  bool log_x = false;
};

void add_output_options(CLI::App* sc, Outputs& o) {
  sc->add_option("-o,--out", o.csv, "CSV output file (default: stdout)");
  sc->add_option("--svg", o.svg, "Also write a line plot to this SVG file");
  sc->add_option("--manifest", o.manifest,
                 "Manifest path (default: <out>.manifest.json when --out is given)");
  sc->add_flag("--log-x", o.log_x, "Logarithmic x axis in the SVG plot");
}

// Writes the CSV to --out, or to `stdout_csv` when --out is absent and it
// is non-null, plus the optional plot and the manifest.
void emit(const Outputs& o, std::span<const CsvRow> rows, std::span<const PlotSeries> plot,
          const std::string& title, const RunManifest& manifest, std::ostream* stdout_csv) {
  if (o.csv.empty()) {
    if (stdout_csv != nullptr) write_csv(*stdout_csv, rows);
  } else {
    std::ofstream f(o.csv);
    if (!f) throw InvalidParameter("cannot write " + o.csv);
    write_csv(f, rows);
  }
  if (!o.svg.empty()) {
    std::ofstream f(o.svg);
    if (!f) throw InvalidParameter("cannot write " + o.svg);
    PlotOptions po;
    po.title = title;
    po.log_x = o.log_x;
    f << render_svg(plot, po);
  }
  std::string manifest_path = o.manifest;
  if (manifest_path.empty() && !o.csv.empty()) manifest_path = o.csv + ".manifest.json";
  if (!manifest_path.empty()) write_manifest(manifest_path, manifest);
}

RunManifest make_manifest(std::string subcommand, std::span<const std::string> args,
                          nlohmann::json config, std::uint64_t seed) {
  RunManifest m;
  m.subcommand = std::move(subcommand);
  m.args.assign(args.begin(), args.end());
  m.config = std::move(config);
  m.seed = seed;
  m.version = std::string(toolkit_version());
  m.timestamp = utc_timestamp();
  m.hardware_threads = bench::hardware_threads();
  return m;
}

// Replaces output destinations in a recorded argument list.
std::vector<std::string> redirect_outputs(const std::vector<std::string>& args,
                                          const std::string& out) {
  std::vector<std::string> result;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    const bool with_value = a == "-o" || a == "--out" || a == "--svg" || a == "--manifest";
    const bool joined = a.rfind("--out=", 0) == 0 || a.rfind("--svg=", 0) == 0 ||
                        a.rfind("--manifest=", 0) == 0;
    if (with_value) {
      ++i;
      continue;
    }
    if (joined) continue;
    result.push_back(a);
  }
  result.push_back("--out");
  result.push_back(out);
  return result;
}

}  // namespace

std::uint64_t default_seed() {
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr) return 1;
  std::uint64_t v = 0;
  const std::string_view text(env);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return 1;
  return v;
}

std::vector<CsvRow> cmd_model(const ModelOptions& opts) {
  if (!opts.service && !opts.envelope) {
    throw InvalidParameter("model needs a service time or an envelope");
  }
  std::vector<CsvRow> rows;
  auto append = [&](const std::vector<model::CurvePoint>& curve, double s, std::string_view env) {
    for (const auto& p : curve) {
      CsvRow r;
      r.kind = "model";
      r.n = p.cores;
      r.mean_delay_cycles = opts.think;
      r.service_cycles = s;
      r.throughput = p.throughput;
      r.queue_length = p.queue_length;
      if (!env.empty()) r.flag("envelope", env);
      rows.push_back(std::move(r));
    }
  };
  if (opts.service) append(model::predict_curve(*opts.service, opts.think, opts.n_max), *opts.service, {});
  if (opts.envelope) {
    const auto [lo, hi] = *opts.envelope;
    const auto env = model::predict_envelope(lo, hi, opts.think, opts.n_max);
    append(env.upper, lo, "upper");
    append(env.lower, hi, "lower");
  }
  return rows;
}

std::vector<CsvRow> cmd_simulate(const SimulateOptions& opts) {
  const std::vector<std::uint32_t> ns = opts.n_values.empty() ? one_to(28) : opts.n_values;
  if (opts.delays.empty()) throw InvalidParameter("simulate needs at least one think time");
  std::vector<CsvRow> rows;
  for (double a : opts.delays) {
    sim::SimConfig cfg = opts.base;
    cfg.a = a;
    cfg.seed = mix_seed(opts.base.seed, std::bit_cast<std::uint64_t>(a));
    for (const auto& pt : sim::sweep(cfg, ns)) {
      double predicted = 0.0;
      if (cfg.mode == sim::ServerMode::infinite_server) {
        predicted = pt.n / (a + cfg.s);
      } else if (pt.n <= model::kMaxCores) {
        predicted = model::throughput(model::ModelParams{pt.n, cfg.s, a});
      }
      CsvRow r;
      r.kind = "sim";
      r.n = pt.n;
      r.mean_delay_cycles = a;
      r.service_cycles = cfg.s;
      r.throughput = pt.result.throughput;
      r.queue_length = pt.result.mean_queue_length;
      r.ci95 = pt.result.ci95_throughput;
      r.seed = sim::sweep_seed(cfg.seed, pt.n);
      r.flag("mode", sim::to_string(cfg.mode))
          .flag("service_dist", sim::to_string(cfg.service_dist))
          .flag("think_dist", sim::to_string(cfg.think_dist))
          .flag("utilization", format_number(pt.result.utilization));
      if (predicted > 0.0) {
        r.flag("model", format_number(predicted))
            .flag("model_dev", format_number(pt.result.throughput / predicted - 1.0));
      }
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::vector<CsvRow> bench_rows(std::span<const bench::BenchResult> results) {
  std::vector<CsvRow> rows;
  for (const auto& res : results) {
    const auto& c = res.config;
    CsvRow r;
    r.kind = "bench";
    r.n = c.threads;
    r.threads = c.threads;
    r.mean_delay_cycles = c.mean_delay_cycles;
    r.service_cycles = c.section_work_cycles;
    r.throughput = res.ops_per_cycle;
    r.seed = c.seed;
    r.flag("lock", bench::to_string(c.lock_kind));
    if (c.lock_kind == bench::LockKind::elided) {
      r.flag("backend", bench::to_string(c.backend));
      if (c.backend == bench::BackendKind::random_abort) {
        r.flag("abort_p", format_number(c.abort_probability));
      }
    }
    r.flag("ops_per_sec", format_number(res.total_ops_per_second))
        .flag("cycles_per_ns", format_number(res.cycles_per_ns))
        .flag("measured_delay", format_number(res.measured_mean_delay_cycles));
    if (res.oversubscribed) r.flag("oversubscribed");
    if (!res.pinned) r.flag("unpinned");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<fit::Observation> select_observations(std::span<const CsvRow> rows,
                                                  const FitOptions& opts) {
  std::vector<fit::Observation> obs;
  for (const auto& r : rows) {
    if (opts.kind ? r.kind != *opts.kind : r.kind == "fit") continue;
    if (!r.n || !r.throughput) continue;
    if (opts.delay && !(r.mean_delay_cycles && same_value(*r.mean_delay_cycles, *opts.delay))) {
      continue;
    }
    if (opts.service && !(r.service_cycles && same_value(*r.service_cycles, *opts.service))) {
      continue;
    }
    obs.push_back(fit::Observation{*r.n, *r.throughput});
  }
  return obs;
}

fit::FitResult cmd_fit(std::span<const CsvRow> rows, const FitOptions& opts) {
  fit::FitInput in;
  in.points = select_observations(rows, opts);
  in.fit_a = !opts.fixed_a.has_value();
  if (opts.fixed_a) in.fixed_a = *opts.fixed_a;
  in.n_limit = opts.n_limit;
  in.weighting = opts.relative ? fit::Weighting::relative : fit::Weighting::unweighted;
  return fit::fit_model(in);
}

CsvRow fit_row(const fit::FitResult& res) {
  CsvRow r;
  r.kind = "fit";
  r.mean_delay_cycles = res.a_hat;
  r.service_cycles = res.s_hat;
  r.flag("r_squared", format_number(res.r_squared))
      .flag("rss", format_number(res.rss))
      .flag("points", std::to_string(res.points_used))
      .flag("iterations", std::to_string(res.iterations));
  return r;
}

nlohmann::json fit_json(const fit::FitResult& res) {
  return {{"s_hat", res.s_hat},          {"a_hat", res.a_hat},
          {"rss", res.rss},              {"r_squared", res.r_squared},
          {"points_used", res.points_used}, {"iterations", res.iterations}};
}

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lock scalability toolkit: contention model, simulator, benchmark, fitter",
               "lockscale"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(toolkit_version()));

  Outputs outputs;
  const std::uint64_t env_seed = default_seed();

  // model
  ModelOptions mopt;
  double m_service = 0.0;
  std::vector<double> m_envelope;
  auto* model_cmd = app.add_subcommand("model", "Closed-form throughput curve");
  auto* m_service_opt =
      model_cmd->add_option("-s,--service", m_service, "Mean lock service time (cycles)");
  model_cmd->add_option("-a,--think", mopt.think, "Mean think time (cycles)")->capture_default_str();
  model_cmd->add_option("--n-max", mopt.n_max, "Largest core count")->capture_default_str();
  model_cmd->add_option("--envelope", m_envelope, "Service-time bounds S_LOW S_HIGH")
      ->expected(2);
  add_output_options(model_cmd, outputs);

  // simulate
  SimulateOptions sopt;
  sopt.base.seed = env_seed;
  sopt.base.s = 358.0;
  std::string s_service_dist = "exponential", s_think_dist = "exponential", s_mode = "single-server";
  std::uint32_t s_n_max = 28;
  double s_sample = 2e8, s_warmup = 0.0;
  auto* sim_cmd = app.add_subcommand("simulate", "Discrete-event simulation sweep");
  sim_cmd->add_option("-s,--service", sopt.base.s, "Mean service time (cycles)")->capture_default_str();
  sim_cmd->add_option("-a,--think", sopt.delays, "Mean think time(s) (cycles)")->capture_default_str();
  auto* s_n_opt = sim_cmd->add_option("-n,--n", sopt.n_values, "Core counts to simulate");
  sim_cmd->add_option("--n-max", s_n_max, "Simulate 1..N when --n is absent")->capture_default_str();
  sim_cmd->add_option("--service-dist", s_service_dist, "exponential | deterministic")->capture_default_str();
  sim_cmd->add_option("--think-dist", s_think_dist, "exponential | deterministic")->capture_default_str();
  sim_cmd->add_option("--mode", s_mode, "single-server | infinite-server")->capture_default_str();
  sim_cmd->add_option("--sample", s_sample, "Sample window (cycles)")->capture_default_str();
  auto* s_warmup_opt = sim_cmd->add_option("--warmup", s_warmup, "Warm-up (cycles, default 10% of sample)");
  sim_cmd->add_option("--seed", sopt.base.seed, "Base seed (default $LOCKSCALE_SEED or 1)");
  add_output_options(sim_cmd, outputs);

  // bench
  bench::BenchConfig bcfg;
  bcfg.seed = env_seed;
  std::string b_lock = "clh", b_backend = "succeed", b_isolation = "disjoint", b_spin = "pause";
  std::vector<std::uint32_t> b_threads;
  std::vector<double> b_delays{0.0};
  bool b_no_pin = false;
  auto* bench_cmd = app.add_subcommand("bench", "Real-thread lock contention benchmark");
  bench_cmd->add_option("--lock", b_lock, "none | clh | ticket | big-reader | elided")->capture_default_str();
  bench_cmd->add_option("--backend", b_backend, "Elision backend: succeed | abort | random")->capture_default_str();
  bench_cmd->add_option("--abort-p", bcfg.abort_probability, "Abort probability of the random backend")->capture_default_str();
  bench_cmd->add_option("--isolation", b_isolation, "Emulated transactions: disjoint | serialized")->capture_default_str();
  bench_cmd->add_option("--retry", bcfg.retry_threshold, "Transaction attempts before fallback")->capture_default_str();
  bench_cmd->add_option("-t,--threads", b_threads, "Thread counts (default 1..hardware threads)");
  bench_cmd->add_option("-d,--delays", b_delays, "Mean think times (cycles)")->capture_default_str();
  bench_cmd->add_option("--section", bcfg.section_work_cycles, "Critical-section work (cycles)")->capture_default_str();
  bench_cmd->add_option("--warmup", bcfg.warmup_seconds, "Warm-up (seconds)")->capture_default_str();
  bench_cmd->add_option("--sample", bcfg.sample_seconds, "Sample window (seconds)")->capture_default_str();
  bench_cmd->add_option("--seed", bcfg.seed, "Seed (default $LOCKSCALE_SEED or 1)");
  bench_cmd->add_option("--spin", b_spin, "Spin hint: none | pause | yield")->capture_default_str();
  bench_cmd->add_flag("--no-pin", b_no_pin, "Do not pin worker threads");
  add_output_options(bench_cmd, outputs);

  // fit
  FitOptions fopt;
  std::string f_input;
  std::string f_kind;
  double f_delay = 0.0, f_service = 0.0, f_fixed_a = 0.0;
  std::uint32_t f_n_limit = 0;
  bool f_json = false;
  auto* fit_cmd = app.add_subcommand("fit", "Least-squares fit of the model to a CSV curve");
  fit_cmd->add_option("input", f_input, "CSV file in the lockscale schema")->required();
  auto* f_kind_opt = fit_cmd->add_option("--kind", f_kind, "Only rows of this kind");
  auto* f_delay_opt = fit_cmd->add_option("--delay", f_delay, "Only rows with this mean_delay_cycles");
  auto* f_service_opt = fit_cmd->add_option("--service", f_service, "Only rows with this service_cycles");
  auto* f_fixed_opt = fit_cmd->add_option("--fixed-a", f_fixed_a, "Hold think time fixed at this value");
  auto* f_limit_opt = fit_cmd->add_option("--n-limit", f_n_limit, "Use only points with n <= N");
  fit_cmd->add_flag("--relative", fopt.relative, "Weight residuals by 1/observed");
  fit_cmd->add_flag("--json", f_json, "Print the result as JSON instead of CSV");
  add_output_options(fit_cmd, outputs);

  // replay
  std::string r_manifest, r_out;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("manifest", r_manifest, "Manifest JSON file")->required();
  replay_cmd->add_option("-o,--out", r_out, "Write outputs here instead of the recorded paths");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (model_cmd->parsed()) {
      if (m_service_opt->count() > 0) mopt.service = m_service;
      if (!m_envelope.empty()) mopt.envelope = std::make_pair(m_envelope[0], m_envelope[1]);
      const auto rows = cmd_model(mopt);
      nlohmann::json cfg = {{"think", mopt.think}, {"n_max", mopt.n_max}};
      cfg["service"] = mopt.service ? nlohmann::json(*mopt.service) : nlohmann::json(nullptr);
      cfg["envelope"] = m_envelope;
      auto plot = series_by(rows, [](const CsvRow& r) { return label_of("s=", *r.service_cycles); }, false);
      emit(outputs, rows, plot, "model throughput", make_manifest("model", args, cfg, 0), &out);
      return kExitOk;
    }
    if (sim_cmd->parsed()) {
      sopt.base.service_dist = sim::parse_distribution(s_service_dist);
      sopt.base.think_dist = sim::parse_distribution(s_think_dist);
      sopt.base.mode = sim::parse_server_mode(s_mode);
      if (!(s_sample >= 1.0)) throw InvalidParameter("sample window must be positive");
      sopt.base.sample = static_cast<std::uint64_t>(s_sample);
      if (s_warmup_opt->count() > 0) {
        if (!(s_warmup >= 1.0)) throw InvalidParameter("warm-up must be positive");
        sopt.base.warmup = static_cast<std::uint64_t>(s_warmup);
      }
      if (s_n_opt->count() == 0) sopt.n_values = one_to(s_n_max);
      const auto rows = cmd_simulate(sopt);
      nlohmann::json cfg = {{"service", sopt.base.s},
                            {"think", sopt.delays},
                            {"n", sopt.n_values},
                            {"service_dist", s_service_dist},
                            {"think_dist", s_think_dist},
                            {"mode", s_mode},
                            {"sample", sopt.base.sample},
                            {"warmup", sopt.base.effective_warmup()}};
      auto plot = series_by(rows, [](const CsvRow& r) { return label_of("a=", *r.mean_delay_cycles); }, true);
      emit(outputs, rows, plot, "simulated throughput",
           make_manifest("simulate", args, cfg, sopt.base.seed), &out);
      return kExitOk;
    }
    if (bench_cmd->parsed()) {
      bcfg.lock_kind = bench::parse_lock_kind(b_lock);
      bcfg.backend = bench::parse_backend_kind(b_backend);
      if (b_isolation == "disjoint") {
        bcfg.isolation = locks::Isolation::disjoint;
      } else if (b_isolation == "serialized") {
        bcfg.isolation = locks::Isolation::serialized;
      } else {
        throw InvalidParameter("unknown isolation: " + b_isolation);
      }
      bcfg.spin.policy = locks::parse_spin_policy(b_spin);
      bcfg.pin_threads = !b_no_pin;
      if (b_threads.empty()) b_threads = one_to(bench::hardware_threads());
      bcfg.validate();
      const auto& cal = bench::cached_calibration();
      const auto results = bench::sweep_bench(bcfg, b_threads, b_delays, cal);
      const auto rows = bench_rows(results);
      nlohmann::json cfg = {{"lock", b_lock},
                            {"backend", b_backend},
                            {"abort_p", bcfg.abort_probability},
                            {"isolation", b_isolation},
                            {"retry", bcfg.retry_threshold},
                            {"threads", b_threads},
                            {"delays", b_delays},
                            {"section", bcfg.section_work_cycles},
                            {"warmup_seconds", bcfg.warmup_seconds},
                            {"sample_seconds", bcfg.sample_seconds},
                            {"spin", b_spin},
                            {"pin", bcfg.pin_threads}};
      auto m = make_manifest("bench", args, cfg, bcfg.seed);
      m.cycles_per_ns = cal.cycles_per_ns;
      auto plot = series_by(rows, [](const CsvRow& r) { return label_of("delay=", *r.mean_delay_cycles); }, true);
      emit(outputs, rows, plot, "measured throughput", m, &out);
      return kExitOk;
    }
    if (fit_cmd->parsed()) {
      if (f_kind_opt->count() > 0) fopt.kind = f_kind;
      if (f_delay_opt->count() > 0) fopt.delay = f_delay;
      if (f_service_opt->count() > 0) fopt.service = f_service;
      if (f_fixed_opt->count() > 0) fopt.fixed_a = f_fixed_a;
      if (f_limit_opt->count() > 0) fopt.n_limit = f_n_limit;
      const auto input_rows = read_csv_file(f_input);
      const auto result = cmd_fit(input_rows, fopt);
      const std::vector<CsvRow> rows{fit_row(result)};
      nlohmann::json cfg = {{"input", f_input},
                            {"kind", f_kind},
                            {"delay", fopt.delay ? nlohmann::json(*fopt.delay) : nlohmann::json(nullptr)},
                            {"service", fopt.service ? nlohmann::json(*fopt.service) : nlohmann::json(nullptr)},
                            {"fixed_a", fopt.fixed_a ? nlohmann::json(*fopt.fixed_a) : nlohmann::json(nullptr)},
                            {"n_limit", fopt.n_limit ? nlohmann::json(*fopt.n_limit) : nlohmann::json(nullptr)},
                            {"relative", fopt.relative}};
      const auto manifest = make_manifest("fit", args, cfg, 0);
      std::vector<PlotSeries> plot;
      if (!outputs.svg.empty()) {
        PlotSeries measured{"observed", {}, true};
        std::uint32_t n_max = 1;
        for (const auto& o : select_observations(input_rows, fopt)) {
          measured.points.emplace_back(o.n, o.throughput);
          n_max = std::max(n_max, o.n);
        }
        PlotSeries fitted{"fit s=" + format_number(result.s_hat), {}, false};
        for (const auto& p : model::predict_curve(result.s_hat, result.a_hat, n_max)) {
          fitted.points.emplace_back(p.cores, p.throughput);
        }
        plot = {measured, fitted};
      }
      if (f_json) out << fit_json(result).dump() << '\n';
      emit(outputs, rows, plot, "model fit", manifest, f_json ? nullptr : &out);
      return kExitOk;
    }
    if (replay_cmd->parsed()) {
      const RunManifest m = read_manifest(r_manifest);
      const auto replay_args = r_out.empty() ? m.args : redirect_outputs(m.args, r_out);
      return run_cli(replay_args, out, err);
    }
  } catch (const InvalidParameter& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DegenerateInput& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const fit::NonConvergence& e) {
    err << "error: " << e.what() << " (best s=" << e.best().s_hat << ", a=" << e.best().a_hat
        << ")\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace lockscale::cli
