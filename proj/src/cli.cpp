#include "blr/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "blr/classic.hpp"
#include "blr/corpus.hpp"
#include "blr/export.hpp"
#include "blr/inference.hpp"
#include "blr/modelspec.hpp"
#include "blr/sampler.hpp"

namespace blr::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr const char* kDefaultModel = "default";

struct SamplerFlags {
  std::size_t chains = 4;
  std::size_t draws = 4000;
  std::size_t warmup = 1000;
  std::uint64_t seed = 1;
  std::string sampler = "hmc";
  double rwm_step = 0.1;
  double hmc_step = 0.1;
  std::size_t leapfrog = 20;
  double target_accept = 0.8;
  bool serial = false;
};

fs::path default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env != nullptr && *env != '\0') return env;
  return ".";
}

fs::path prepare_output_dir(const std::string& flag) {
  fs::path dir = flag.empty() ? default_output_dir() : fs::path(flag);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create output directory '" + dir.string() + "'");
  return dir;
}

Dataset load_data(const std::string& path) {
  if (!fs::exists(path)) throw DataError("no such file: '" + path + "'");
  return load_dataset_tsv(fs::path(path));
}

ModelSpec load_model(const std::string& path) {
  if (path.empty() || path == kDefaultModel) return default_model();
  if (!fs::exists(path)) throw DataError("no such file: '" + path + "'");
  try {
    return load_model_spec(path);
  } catch (const SpecParseError& e) {
    throw DataError(path + ":" + e.what());
  }
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  fn(out);
  out.close();
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

void add_sampler_flags(CLI::App* cmd, SamplerFlags& f) {
  cmd->add_option("--chains", f.chains, "Number of independent chains")->capture_default_str();
  cmd->add_option("--draws", f.draws, "Retained draws per chain")->capture_default_str();
  cmd->add_option("--warmup", f.warmup, "Warmup iterations per chain (discarded)")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Random seed; chain k uses mix(seed) XOR k")->capture_default_str();
  cmd->add_option("--sampler", f.sampler, "Sampling algorithm")
      ->check(CLI::IsMember({"hmc", "rwm"}))
      ->capture_default_str();
  cmd->add_option("--rwm-step", f.rwm_step, "Random-walk proposal scale (unconstrained space)")
      ->capture_default_str();
  cmd->add_option("--hmc-step", f.hmc_step, "Initial HMC step size (adapted during warmup)")->capture_default_str();
  cmd->add_option("--leapfrog", f.leapfrog, "Leapfrog steps per HMC iteration")->capture_default_str();
  cmd->add_option("--target-accept", f.target_accept, "Step-size adaptation target")->capture_default_str();
  cmd->add_flag("--serial", f.serial, "Run chains one after another instead of in parallel");
}

SamplerConfig to_config(const SamplerFlags& f) {
  SamplerConfig cfg;
  cfg.n_chains = f.chains;
  cfg.n_draws = f.draws;
  cfg.n_warmup = f.warmup;
  cfg.seed = f.seed;
  cfg.algorithm = f.sampler == "rwm" ? Algorithm::RWM : Algorithm::HMC;
  cfg.rwm_step = f.rwm_step;
  cfg.hmc_step = f.hmc_step;
  cfg.hmc_leapfrog = f.leapfrog;
  cfg.target_accept = f.target_accept;
  try {
    validate(cfg);
  } catch (const DomainError& e) {
    throw CLI::ValidationError("sampler", e.what());
  }
  return cfg;
}

ordered_json sampler_json(const Chains& chains) {
  const SamplerConfig& cfg = chains.config();
  ordered_json j;
  j["algorithm"] = std::string(to_string(cfg.algorithm));
  j["n_chains"] = cfg.n_chains;
  j["n_draws"] = cfg.n_draws;
  j["n_warmup"] = cfg.n_warmup;
  j["seed"] = cfg.seed;
  ordered_json per_chain = ordered_json::array();
  for (const auto& s : chains.stats()) {
    ordered_json c;
    c["rng_stream"] = s.rng_stream;
    c["accept_rate"] = s.accept_rate;
    c["step_size"] = s.step_size;
    c["divergences"] = s.divergences;
    c["warmup_divergences"] = s.warmup_divergences;
    per_chain.push_back(std::move(c));
  }
  j["chains"] = std::move(per_chain);
  j["divergence_warning"] = chains.divergence_warning();
  return j;
}

void write_figures(const Dataset& data, const Chains& chains, std::size_t ensemble, const fs::path& dir) {
  const PlotSpec plot;
  const LineEnsemble lines = draw_line_ensemble(chains, ensemble);
  write_file(dir / "figure2a.svg", [&](std::ostream& o) { render_posterior_svg(chains, plot, o); });
  write_file(dir / "figure2b.svg", [&](std::ostream& o) { render_scatter_svg(data, lines, plot, o); });
}

void print_summary_table(const Summary& s, std::ostream& out) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%10.4g", v);
    return std::string(buf);
  };
  out << "param        mean          sd        2.5%         50%       97.5%       rhat        ess\n";
  for (const auto& p : s.params) {
    char name[16];
    std::snprintf(name, sizeof name, "%-6s", p.name.c_str());
    out << name << ' ' << fmt(p.mean) << "  " << fmt(p.sd) << "  " << fmt(p.q025) << "  " << fmt(p.q50) << "  "
        << fmt(p.q975) << "  " << (p.rhat ? fmt(*p.rhat) : std::string("        na")) << " "
        << (p.ess ? fmt(*p.ess) : std::string("        na")) << '\n';
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian linear regression workbench: word counts, OLS, MCMC, evidence"};
  app.name(args.empty() ? "blr" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);

  // counts
  std::string counts_dir;
  std::size_t top_k_n = 10;
  std::string stopwords_path;
  auto* counts = app.add_subcommand("counts", "Top-k word statistics of a directory of .txt articles, as TSV");
  counts->add_option("dir", counts_dir, "Directory with one .txt file per article")->required();
  counts->add_option("--top-k", top_k_n, "Number of most frequent words to keep")->capture_default_str();
  counts->add_option("--stopwords", stopwords_path, "Newline-delimited stopword file (default: built-in English)");

  // fit-ols
  std::string ols_tsv;
  std::string ols_out;
  auto* fit_ols = app.add_subcommand("fit-ols", "Least-squares line: ols.json and figure1.svg");
  fit_ols->add_option("tsv", ols_tsv, "Dataset TSV (label, x, y)")->required();
  fit_ols->add_option("--out", ols_out, std::string("Output directory (default: $") + kOutputDirEnv + " or .)");

  // fit-bayes
  std::string bayes_tsv;
  std::string bayes_model;
  std::string bayes_out;
  std::size_t ensemble = 500;
  SamplerFlags bayes_flags;
  auto* fit_bayes = app.add_subcommand(
      "fit-bayes", "Posterior sampling: samples.csv, summary.json, figure2a.svg, figure2b.svg");
  fit_bayes->add_option("tsv", bayes_tsv, "Dataset TSV (label, x, y)")->required();
  fit_bayes->add_option("--model", bayes_model, "Model-spec file (default: a~Normal(0,1), b,sigma~HalfNormal(1))");
  fit_bayes->add_option("--ensemble", ensemble, "Number of regression lines drawn in figure2b")->capture_default_str();
  fit_bayes->add_option("--out", bayes_out, std::string("Output directory (default: $") + kOutputDirEnv + " or .)");
  add_sampler_flags(fit_bayes, bayes_flags);

  // evidence
  std::string ev_tsv;
  std::vector<std::string> ev_models;
  std::size_t ev_samples = 100000;
  std::uint64_t ev_seed = 1;
  bool ev_serial = false;
  auto* evidence = app.add_subcommand("evidence", "Prior-sampling log evidence of two models and their Bayes factor");
  evidence->add_option("tsv", ev_tsv, "Dataset TSV (label, x, y)")->required();
  evidence->add_option("--model", ev_models, "Model-spec file, given twice; 'default' names the built-in model")
      ->required()
      ->expected(2);
  evidence->add_option("--samples", ev_samples, "Prior draws per model")->capture_default_str();
  evidence->add_option("--seed", ev_seed, "Random seed")->capture_default_str();
  evidence->add_flag("--serial", ev_serial, "Disable OpenMP for the prior draws");

  // update
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double obs_sd = 1.0;
  std::vector<double> ys;
  auto* update = app.add_subcommand("update", "Exact Normal-Normal posterior for an unknown mean");
  update->add_option("--prior-mean", prior_mean, "Prior mean")->required();
  update->add_option("--prior-var", prior_var, "Prior variance")->required();
  update->add_option("--obs-sd", obs_sd, "Known observation standard deviation")->required();
  update->add_option("observations", ys, "Observed values, applied in order");

  // plot
  std::string plot_tsv;
  std::string plot_samples;
  std::string plot_out;
  std::size_t plot_ensemble = 500;
  auto* plot = app.add_subcommand("plot", "Regenerate figure1/2a/2b SVGs from a dataset and a saved samples.csv");
  plot->add_option("tsv", plot_tsv, "Dataset TSV (label, x, y)")->required();
  plot->add_option("--samples", plot_samples, "samples.csv written by fit-bayes")->required();
  plot->add_option("--ensemble", plot_ensemble, "Number of regression lines drawn in figure2b")
      ->capture_default_str();
  plot->add_option("--out", plot_out, std::string("Output directory (default: $") + kOutputDirEnv + " or .)");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());

  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << "run '" << app.get_name() << " --help' for usage\n";
    return kUsageError;
  }

  try {
    if (*counts) {
      const StopwordList stop =
          stopwords_path.empty() ? StopwordList::default_english() : StopwordList::load(stopwords_path);
      const Corpus corpus = ingest_directory(counts_dir);
      const auto stats = word_stats(corpus, stop);
      write_dataset_tsv(top_k(stats, top_k_n), out);
    } else if (*fit_ols) {
      const Dataset data = load_data(ols_tsv);
      const fs::path dir = prepare_output_dir(ols_out);
      const OlsFit fit = ols_fit(data);
      const std::string json = ols_fit_to_json(fit).dump(2) + "\n";
      write_file(dir / "ols.json", [&](std::ostream& o) { o << json; });
      write_file(dir / "figure1.svg", [&](std::ostream& o) { render_scatter_svg(data, fit, PlotSpec{}, o); });
      out << json;
    } else if (*fit_bayes) {
      const SamplerConfig cfg = to_config(bayes_flags);
      const Dataset data = load_data(bayes_tsv);
      const ModelSpec spec = load_model(bayes_model);
      if (ensemble < 1 || ensemble > cfg.n_chains * cfg.n_draws)
        throw CLI::ValidationError("--ensemble", "must lie in [1, chains * draws]");
      const fs::path dir = prepare_output_dir(bayes_out);
      const Execution exec = bayes_flags.serial ? Execution::Serial : Execution::Parallel;
      const Chains chains = sample(RegressionTarget(spec, data), cfg, exec);
      const Summary summary = summarize(chains);

      write_file(dir / "samples.csv", [&](std::ostream& o) { write_samples_csv(chains, o); });
      ordered_json j = summary_to_json(summary);
      j["sampler"] = sampler_json(chains);
      write_file(dir / "summary.json", [&](std::ostream& o) { o << j.dump(2) << '\n'; });
      write_figures(data, chains, ensemble, dir);

      print_summary_table(summary, out);
      if (chains.divergence_warning()) err << "warning: more than 10% of transitions diverged\n";
    } else if (*evidence) {
      const Dataset data = load_data(ev_tsv);
      const Execution exec = ev_serial ? Execution::Serial : Execution::Parallel;
      ordered_json j;
      ordered_json models = ordered_json::array();
      std::vector<EvidenceEstimate> estimates;
      for (const auto& path : ev_models) {
        const ModelSpec spec = load_model(path);
        estimates.push_back(estimate_evidence(spec, data, ev_samples, ev_seed, exec));
        ordered_json m;
        m["model"] = path;
        m["spec"] = format_model_spec(spec);
        const ordered_json e = evidence_to_json(estimates.back());
        for (const auto& [k, v] : e.items()) m[k] = v;
        models.push_back(std::move(m));
      }
      j["models"] = std::move(models);
      j["log_bayes_factor"] = log_bayes_factor(estimates[0], estimates[1]);
      j["bayes_factor"] = bayes_factor(estimates[0], estimates[1]);
      out << j.dump(2) << '\n';
    } else if (*update) {
      const ConjugateNormalState post = sequential_update({prior_mean, prior_var}, ys, obs_sd);
      ordered_json j;
      j["mean"] = post.mean;
      j["variance"] = post.variance;
      j["n_observations"] = ys.size();
      out << j.dump(2) << '\n';
    } else if (*plot) {
      const Dataset data = load_data(plot_tsv);
      if (!fs::exists(plot_samples)) throw DataError("no such file: '" + plot_samples + "'");
      std::ifstream in(plot_samples);
      if (!in) throw DataError("cannot read '" + plot_samples + "'");
      const Chains chains = read_samples_csv(in);
      const fs::path dir = prepare_output_dir(plot_out);
      if (plot_ensemble < 1 || plot_ensemble > chains.total_draws())
        throw CLI::ValidationError("--ensemble", "must lie in [1, number of draws]");
      if (data.size() >= 2) {
        const OlsFit fit = ols_fit(data);
        write_file(dir / "figure1.svg", [&](std::ostream& o) { render_scatter_svg(data, fit, PlotSpec{}, o); });
      }
      write_figures(data, chains, plot_ensemble, dir);
    }
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}

}  // namespace blr::cli
