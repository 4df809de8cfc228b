#include "aot/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <ostream>

#include "CLI11.hpp"

#include "aot/io.hpp"
#include "aot/svg.hpp"

namespace aot::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

/// Verification failed; maps to kExitVerifyFail.
struct VerifyFailed {};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string default_out_dir() {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? env : ".";
}

struct Context {
  CLI::App& app;
  std::string command;
  fs::path out_dir;
  std::map<std::string, std::string> artifacts;
  std::ostream& out;

  fs::path artifact(const std::string& key, const std::string& filename) {
    artifacts[key] = filename;
    return out_dir / filename;
  }
};

json option_values(const CLI::App& app) {
  json params = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->get_expected_min() == 0) {
      params[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      params[name] = opt->as<std::string>();
    } else {
      params[name] = opt->get_default_str();
    }
  }
  return params;
}

void write_manifest(Context& ctx, json extra = json::object()) {
  const std::string conf_name = ctx.command + ".conf";
  io::write_text(ctx.out_dir / conf_name, ctx.app.config_to_str(true, false));
  ctx.artifacts["config"] = conf_name;
  json m = io::versioned("aot.manifest", {{"command", ctx.command},
                                          {"params", option_values(ctx.app)},
                                          {"created_utc", utc_timestamp()},
                                          {"artifacts", ctx.artifacts}});
  for (auto& [k, v] : extra.items()) m[k] = v;
  const fs::path path = ctx.out_dir / (ctx.command + ".manifest.json");
  io::write_json(path, m);
  ctx.out << "manifest: " << path.string() << "\n";
}

Phi parse_phi(const std::string& text) {
  if (text == "softmax") return Phi::softmax();
  const std::string prefix = "threshold:";
  if (text.rfind(prefix, 0) == 0) return Phi::threshold(io::parse_double(text.substr(prefix.size())));
  throw ParameterError("--phi must be 'softmax' or 'threshold:<tau>', got '" + text + "'");
}

struct MixtureFlags {
  GaussianMixtureConfig cfg;
  void add(CLI::App& app, std::size_t d, std::size_t K, std::size_t p, std::size_t nk, double delta) {
    cfg.d = d;
    cfg.K = K;
    cfg.p = p;
    cfg.tokens_per_cluster = nk;
    cfg.delta = delta;
    app.add_option("--d", cfg.d, "ambient dimension")->capture_default_str();
    app.add_option("--K", cfg.K, "number of subspaces")->capture_default_str();
    app.add_option("--p", cfg.p, "subspace dimension")->capture_default_str();
    app.add_option("--tokens-per-cluster", cfg.tokens_per_cluster, "tokens per cluster")
        ->capture_default_str();
    app.add_option("--delta", cfg.delta, "noise level")->capture_default_str();
  }
};

void emit_trace(Context& ctx, const DenoiseTrace& trace, bool svg, bool log_y,
                const std::string& trace_name = "trace.json") {
  io::write_json(ctx.artifact("trace", trace_name), io::trace_to_json(trace));
  io::write_text(ctx.artifact("snr_csv", "snr.csv"), io::snr_csv(trace));
  if (svg) {
    svg::ChartOptions o;
    o.title = "SNR per layer (" + trace.params.phi + ")";
    o.log_y = log_y;
    io::write_text(ctx.artifact("svg", "snr.svg"), svg::snr_chart(trace, o));
  }
}

// --- generate -------------------------------------------------------------

void setup_generate(CLI::App& app, std::function<void(Context&)>& run) {
  auto flags = std::make_shared<MixtureFlags>();
  flags->add(app, 128, 4, 32, 256, 0.05);
  auto seed = std::make_shared<std::uint64_t>(0);
  app.add_option("--seed", *seed, "random seed")->required();
  run = [flags, seed](Context& ctx) {
    auto cfg = flags->cfg;
    cfg.seed = *seed;
    cfg.validate();
    const SubspaceModel model = sample_bases(cfg.d, cfg.K, cfg.p, cfg.seed);
    const TokenBatch batch = sample_tokens(model, cfg);
    io::write_matrix_csv(ctx.artifact("tokens", "tokens.csv"), batch.z);
    std::string partition;
    for (std::size_t j = 0; j < batch.labels.size(); ++j)
      partition += std::to_string(j) + "," + std::to_string(batch.labels[j]) + "\n";
    io::write_text(ctx.artifact("partition", "partition.csv"), partition);
    for (std::size_t k = 0; k < cfg.K; ++k) {
      const std::string ks = std::to_string(k);
      io::write_matrix_csv(ctx.artifact("basis_" + ks, "basis_" + ks + ".csv"),
                           model.basis(k).matrix());
      io::write_matrix_csv(ctx.artifact("signal_" + ks, "signal_" + ks + ".csv"),
                           batch.latents->signal[k]);
      for (std::size_t j = 0; j < cfg.K; ++j) {
        if (j == k) continue;
        const std::string name = "noise_" + ks + "_" + std::to_string(j);
        io::write_matrix_csv(ctx.artifact(name, name + ".csv"), batch.latents->noise[k][j]);
      }
    }
    write_manifest(ctx, {{"model",
                          {{"d", cfg.d}, {"K", cfg.K}, {"p", cfg.p}, {"N", cfg.N()},
                           {"tokens_per_cluster", cfg.tokens_per_cluster}, {"delta", cfg.delta},
                           {"seed", cfg.seed}}}});
  };
}

// --- denoise --------------------------------------------------------------

void setup_denoise(CLI::App& app, std::function<void(Context&)>& run) {
  struct Flags {
    std::string manifest;
    std::size_t layers = 8;
    double eta = 0.5;
    std::string phi = "softmax";
    double temperature = 1.0;
    bool causal = false;
    bool prenorm = false;
    std::string trace = "trace.json";
    bool svg = false;
    bool log_y = false;
  };
  auto f = std::make_shared<Flags>();
  app.add_option("--manifest", f->manifest, "generate.manifest.json from `generate`")->required();
  app.add_option("--layers", f->layers, "number of layers L")->capture_default_str();
  app.add_option("--eta", f->eta, "step size")->capture_default_str();
  app.add_option("--phi", f->phi, "softmax or threshold:<tau>")->capture_default_str();
  app.add_option("--temperature", f->temperature, "softmax temperature")->capture_default_str();
  app.add_flag("--causal", f->causal, "causal mask");
  app.add_flag("--prenorm", f->prenorm, "standardize token columns before attention");
  app.add_option("--trace", f->trace, "trace JSON file name, relative to --out")
      ->capture_default_str();
  app.add_flag("--svg", f->svg, "also write an SVG chart");
  app.add_flag("--log-y", f->log_y, "log-scale SNR axis in the chart");
  run = [f](Context& ctx) {
    const json m = io::read_json(f->manifest);
    io::require_schema(m, "aot.manifest");
    const fs::path dir = fs::path(f->manifest).parent_path();
    const json& model_j = m.at("model");
    const auto K = model_j.at("K").get<std::size_t>();
    const auto nk = model_j.at("tokens_per_cluster").get<std::size_t>();
    const auto& art = m.at("artifacts");
    std::vector<OrthonormalBasis> bases;
    for (std::size_t k = 0; k < K; ++k)
      bases.emplace_back(io::read_matrix_csv(dir / art.at("basis_" + std::to_string(k)).get<std::string>()));
    const SubspaceModel model(std::move(bases));
    const Matrix z = io::read_matrix_csv(dir / art.at("tokens").get<std::string>());
    if (z.rows() != model.d() || z.cols() != K * nk) {
      throw DimensionError("denoise: token matrix does not match the manifest");
    }

    AttentionConfig cfg;
    cfg.eta = f->eta;
    cfg.phi = parse_phi(f->phi);
    cfg.temperature = f->temperature;
    cfg.causal = f->causal;
    cfg.prenorm = f->prenorm;
    cfg.validate();

    TraceOptions opts;
    opts.reference = &model;
    for (std::size_t k = 0; k < K; ++k) opts.clusters.push_back({k * nk, nk});
    opts.params = {cfg.eta,     cfg.phi.name(), cfg.phi.tau,  cfg.temperature,
                   cfg.causal,  cfg.prenorm,    model_j.at("delta").get<double>(),
                   model.d(),   K,              model.p(),    K * nk,
                   model_j.at("seed").get<std::uint64_t>()};
    const UnrollResult r = unroll(LayerStack::tied(model, f->layers), z, cfg, opts);
    io::write_matrix_csv(ctx.artifact("state", "state.csv"), r.state);
    emit_trace(ctx, r.trace, f->svg, f->log_y, f->trace);
    write_manifest(ctx);
  };
}

// --- verify ---------------------------------------------------------------

void setup_verify(CLI::App& app, std::function<void(Context&)>& run) {
  struct Flags {
    MixtureFlags mix;
    std::size_t layers = 8;
    double eta = 0.5;
    double tau = 0.8;
    std::uint64_t seed = 0;
    std::size_t seeds = 1;
    bool svg = false;
    bool log_y = false;
  };
  auto f = std::make_shared<Flags>();
  f->mix.add(app, 128, 4, 32, 256, 0.05);
  app.add_option("--layers", f->layers, "number of layers L")->capture_default_str();
  app.add_option("--eta", f->eta, "step size")->capture_default_str();
  app.add_option("--tau", f->tau, "threshold")->capture_default_str();
  app.add_option("--seed", f->seed, "first seed")->required();
  app.add_option("--seeds", f->seeds, "number of consecutive seeds")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_flag("--svg", f->svg, "also write an SVG chart of the first run");
  app.add_flag("--log-y", f->log_y, "log-scale SNR axis in the chart");
  run = [f](Context& ctx) {
    auto cfg = f->mix.cfg;
    cfg.seed = f->seed;
    cfg.validate();
    std::vector<std::uint64_t> seeds(f->seeds);
    std::iota(seeds.begin(), seeds.end(), f->seed);
    const TheoremSweep sweep = verify_theorem_sweep(cfg, f->layers, f->eta, f->tau, seeds);
    json runs = json::array();
    for (const auto& r : sweep.runs) runs.push_back(io::theorem_report_to_json(r));
    const auto interval = theorem_tau_interval(cfg.N(), cfg.p);
    io::write_json(ctx.artifact("report", "verify.json"),
                   io::versioned("aot.verify", {{"pass", sweep.pass},
                                                {"seeds", sweep.seeds},
                                                {"pattern_frequency", sweep.pattern_frequency},
                                                {"seeds_all_held", sweep.seeds_all_held},
                                                {"max_ratio_error", sweep.max_ratio_error},
                                                {"max_prefix_closed_form_error",
                                                 sweep.max_prefix_closed_form_error},
                                                {"tau_interval", {interval.lower, interval.upper}},
                                                {"runs", runs}}));
    emit_trace(ctx, sweep.runs.front().trace, f->svg, f->log_y);
    write_manifest(ctx);
    ctx.out << (sweep.pass ? "PASS" : "FAIL") << " pattern_frequency=" << sweep.pattern_frequency
            << " max_ratio_error=" << sweep.max_ratio_error << "\n";
    if (!sweep.pass) throw VerifyFailed{};
  };
}

// --- lemma-check ----------------------------------------------------------

void setup_lemma(CLI::App& app, std::function<void(Context&)>& run) {
  struct Flags {
    std::string lemma;
    MixtureFlags mix;
    std::size_t trials = 200;
    double t = 3.0;
    double theta = 1.0;
    double tau = 0.8;
    double log_base = std::numbers::e;
    std::uint64_t seed = 0;
    std::size_t seeds = 20;
  };
  auto f = std::make_shared<Flags>();
  app.add_option("--lemma", f->lemma, "a1, a2 or a3")
      ->required()
      ->check(CLI::IsMember({"a1", "a2", "a3"}));
  f->mix.add(app, 128, 4, 64, 256, 0.05);
  app.add_option("--trials", f->trials, "Monte Carlo trials (a1, a2)")->capture_default_str();
  app.add_option("--t", f->t, "deviation t (a1; uses --d and --delta)")->capture_default_str();
  app.add_option("--theta", f->theta, "signal scale (a3)")->capture_default_str();
  app.add_option("--tau", f->tau, "threshold (a3)")->capture_default_str();
  app.add_option("--log-base", f->log_base, "base of log N (a2)")->capture_default_str();
  app.add_option("--seed", f->seed, "random seed (first seed for a3)")->required();
  app.add_option("--seeds", f->seeds, "number of seeds (a3)")->capture_default_str();
  run = [f](Context& ctx) {
    LemmaReport report;
    auto cfg = f->mix.cfg;
    cfg.seed = f->seed;
    if (f->lemma == "a1") {
      report = check_lemma_a1(cfg.d, cfg.delta, f->t, f->trials, f->seed);
    } else if (f->lemma == "a2") {
      report = check_lemma_a2(cfg, f->trials, f->seed, f->log_base);
    } else {
      std::vector<std::uint64_t> seeds(f->seeds);
      std::iota(seeds.begin(), seeds.end(), f->seed);
      report = check_lemma_a3_sweep(cfg, f->theta, f->tau, seeds);
    }
    io::write_json(ctx.artifact("report", "lemma_" + f->lemma + ".json"),
                   io::lemma_report_to_json(report));
    for (const auto& r : report.results) {
      ctx.out << r.name << " frequency=" << r.frequency << " floor=" << r.floor
              << (r.meets_floor ? "" : " (below floor)") << "\n";
    }
    write_manifest(ctx);
  };
}

// --- train ----------------------------------------------------------------

void setup_train(CLI::App& app, std::function<void(Context&)>& run) {
  struct Flags {
    MixtureFlags mix;
    TrainConfig cfg;
    std::string optimizer = "gd";
    std::string loss = "neg_log_snr";
    double init_scale = 1.0;
    std::size_t batches = 1;
  };
  auto f = std::make_shared<Flags>();
  f->mix.add(app, 32, 2, 4, 128, 0.3);
  f->cfg.layers = 4;
  f->cfg.eta = 4.0;
  f->cfg.learning_rate = 0.1;
  app.add_option("--layers", f->cfg.layers, "number of layers L")->capture_default_str();
  app.add_option("--eta", f->cfg.eta, "step size")->capture_default_str();
  app.add_option("--temperature", f->cfg.temperature, "softmax temperature")->capture_default_str();
  app.add_option("--steps", f->cfg.steps, "gradient steps")->capture_default_str();
  app.add_option("--lr", f->cfg.learning_rate, "learning rate")->capture_default_str();
  app.add_option("--lambda", f->cfg.lambda, "orthonormality penalty weight")->capture_default_str();
  app.add_option("--momentum", f->cfg.momentum, "momentum coefficient")->capture_default_str();
  app.add_option("--optimizer", f->optimizer, "gd or momentum")->capture_default_str();
  app.add_option("--loss", f->loss, "mse or neg_log_snr")->capture_default_str();
  app.add_option("--init-scale", f->init_scale, "scale of the random initial bases")
      ->capture_default_str();
  app.add_option("--batches", f->batches, "training batches, cycled")->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", f->cfg.seed, "random seed")->required();
  run = [f](Context& ctx) {
    TrainConfig cfg = f->cfg;
    cfg.optimizer = parse_optimizer(f->optimizer);
    cfg.loss = parse_train_loss(f->loss);
    cfg.validate();
    auto mix = f->mix.cfg;
    mix.seed = cfg.seed;
    mix.validate();
    const SubspaceModel truth = sample_bases(mix.d, mix.K, mix.p, cfg.seed);
    std::vector<TokenBatch> batches;
    for (std::size_t i = 0; i <= f->batches; ++i) {
      mix.seed = cfg.seed + i;
      batches.push_back(sample_tokens(truth, mix));
    }
    const TokenBatch held_out = std::move(batches.back());
    batches.pop_back();
    LayerStack stack = random_stack(mix.d, mix.K, mix.p, cfg.layers, f->init_scale, cfg.seed);
    const TrainLog log = train(stack, truth, batches, cfg);
    const auto profile = mean_snr_profile(stack, truth, held_out, cfg.eta, cfg.temperature);

    json j = io::train_log_to_json(log);
    json prof = json::array();
    for (double v : profile) prof.push_back(io::snr_to_json(v));
    j["held_out_mean_snr"] = prof;
    io::write_json(ctx.artifact("log", "train_log.json"), j);
    for (std::size_t l = 0; l < stack.depth(); ++l) {
      for (std::size_t k = 0; k < stack.heads(); ++k) {
        const std::string name = "basis_l" + std::to_string(l) + "_k" + std::to_string(k);
        io::write_matrix_csv(ctx.artifact(name, name + ".csv"), stack.layer(l)[k]);
      }
    }
    write_manifest(ctx);
    ctx.out << "final/initial mean SNR (train batch) = " << log.final_mean_snr / log.initial_mean_snr
            << "\n";
  };
}

// --- plot -----------------------------------------------------------------

void setup_plot(CLI::App& app, std::function<void(Context&)>& run) {
  struct Flags {
    std::string trace;
    std::string title;
    bool log_y = false;
  };
  auto f = std::make_shared<Flags>();
  app.add_option("--trace", f->trace, "trace.json, or a verify/theorem report")->required();
  app.add_option("--title", f->title, "chart title");
  app.add_flag("--log-y", f->log_y, "log-scale SNR axis");
  run = [f](Context& ctx) {
    json j = io::read_json(f->trace);
    if (j.value("schema", "") == "aot.verify") j = j.at("runs").at(0);
    if (j.value("schema", "") == "aot.theorem_report") j = j.at("trace");
    const DenoiseTrace trace = io::trace_from_json(j);
    svg::ChartOptions o;
    o.title = f->title;
    o.log_y = f->log_y;
    io::write_text(ctx.artifact("svg", "snr.svg"), svg::snr_chart(trace, o));
    write_manifest(ctx);
  };
}

using Setup = void (*)(CLI::App&, std::function<void(Context&)>&);

const std::vector<std::pair<std::string, std::pair<Setup, const char*>>>& commands() {
  static const std::vector<std::pair<std::string, std::pair<Setup, const char*>>> table = {
      {"generate", {setup_generate, "sample bases and tokens"}},
      {"denoise", {setup_denoise, "unroll attention layers over generated tokens"}},
      {"verify", {setup_verify, "check the SNR recursion of thresholded attention"}},
      {"lemma-check", {setup_lemma, "Monte Carlo checks of the supporting lemmas"}},
      {"train", {setup_train, "train layerwise bases by gradient descent"}},
      {"plot", {setup_plot, "SVG chart of an SNR trace"}},
  };
  return table;
}

void top_usage(std::ostream& os) {
  os << "usage: aot <command> [options]\n\ncommands:\n";
  for (const auto& [name, entry] : commands()) os << "  " << name << "  " << entry.second << "\n";
  os << "\nRun `aot <command> --help` for options. Output goes to --out, default $" << kOutputDirEnv
     << " or the current directory.\n";
}

}  // namespace

int run_subcommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    top_usage(err);
    return kExitUsage;
  }
  if (args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
    top_usage(out);
    return kExitOk;
  }
  const auto& table = commands();
  const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == args[0]; });
  if (it == table.end()) {
    err << "unknown command '" << args[0] << "'\n";
    top_usage(err);
    return kExitUsage;
  }

  CLI::App app{it->second.second, "aot " + it->first};
  std::string out_dir = default_out_dir();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  std::function<void(Context&)> body;
  it->second.first(app, body);

  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    fs::create_directories(out_dir);
    Context ctx{app, it->first, fs::path(out_dir), {}, out};
    body(ctx);
  } catch (const VerifyFailed&) {
    return kExitVerifyFail;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace aot::cli
