#include <gpdyn/evaluate.hpp>
#include <gpdyn/inference.hpp>
#include <gpdyn/io.hpp>
#include <gpdyn/simulate.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

using namespace gpdyn;

constexpr int kUsageError = 2;
constexpr int kDataError = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by `infer` and `diagnose`. Every field is optional so that
// only flags actually given override the config file.
struct InferFlags {
  std::optional<std::string> data, perturbations, out, config, proposal, checkpoint_file;
  std::optional<std::vector<std::string>> inputs;
  std::optional<Index> refinement, chains, burn, samples, thinning, n_pseudo, threads;
  std::optional<std::uint64_t> seed, checkpoint_every;
  std::optional<double> eta, cn_epsilon;
  bool prior_only{false}, no_pseudo{false}, freeze_self{false}, resume{false};

  void attach(CLI::App* app) {
    app->add_option("--data", data, "time-series CSV (long or wide form)");
    app->add_option("--perturbations,--ko", perturbations,
                    "steady-state CSV: perturbed_gene,kind,<columns>");
    app->add_option("--inputs", inputs, "columns to treat as known input signals")->delimiter(',');
    app->add_option("--out", out, "output prefix (writes <out>.edges.csv and <out>.meta.json)");
    app->add_option("--config", config, "JSON configuration file; flags take precedence");
    app->add_option("--refinement", refinement, "latent grid steps per measurement interval");
    app->add_option("--eta", eta, "link prior weight (default 1/n)");
    app->add_option("--chains", chains, "number of independent chains");
    app->add_option("--seed", seed, "base RNG seed");
    app->add_option("--burn", burn, "burn-in sweeps");
    app->add_option("--samples", samples, "collected samples per chain");
    app->add_option("--thinning", thinning, "sweeps between collected samples");
    app->add_option("--proposal", proposal, "trajectory proposal: crank-nicolson or basis");
    app->add_option("--cn-epsilon", cn_epsilon, "Crank-Nicolson step in (0, 1)");
    app->add_option("--pseudo-inputs", n_pseudo, "number of pseudo-inputs (0 = min(20, M))");
    app->add_flag("--no-pseudo-inputs", no_pseudo, "use the exact Gram matrix");
    app->add_flag("--freeze-self-links", freeze_self, "keep self-links switched on");
    app->add_flag("--prior-only", prior_only, "ignore the data likelihood");
    app->add_option("--threads", threads, "worker threads (default $GPDYN_THREADS or all cores)");
    app->add_option("--checkpoint-every", checkpoint_every, "write chain checkpoints every N sweeps");
    app->add_flag("--resume", resume, "continue from existing checkpoints");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (config) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(read_text(*config));
      } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file '" + *config + "': " + e.what());
      }
      try {
        merge_json(j, cfg);
      } catch (const std::exception& e) {
        throw UsageError("config file '" + *config + "': " + e.what());
      }
    }
    if (data) cfg.data = *data;
    if (perturbations) cfg.perturbations = *perturbations;
    if (inputs) cfg.inputs = *inputs;
    if (out) cfg.out = *out;
    if (refinement) cfg.sampler.refinement = *refinement;
    if (eta) cfg.sampler.eta = *eta;
    if (chains) cfg.sampler.n_chains = *chains;
    if (seed) cfg.sampler.seed = *seed;
    if (burn) cfg.sampler.n_burn = *burn;
    if (samples) cfg.sampler.n_samples = *samples;
    if (thinning) cfg.sampler.thinning = *thinning;
    if (proposal) cfg.sampler.proposal = proposal_from_string(*proposal);
    if (cn_epsilon) cfg.sampler.cn_epsilon = *cn_epsilon;
    if (n_pseudo) cfg.sampler.n_pseudo = *n_pseudo;
    if (no_pseudo) cfg.sampler.use_pseudo_inputs = false;
    if (freeze_self) cfg.sampler.freeze_self_links = true;
    if (prior_only) cfg.sampler.prior_only = true;
    if (threads) cfg.threads = *threads;
    if (checkpoint_every) cfg.checkpoint_every = *checkpoint_every;
    cfg.resume = resume;
    if (cfg.data.empty()) throw UsageError("--data is required (flag or config file)");
    try {
      cfg.sampler.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return cfg;
  }
};

void print_summary(const InferenceResult& res, const RunConfig& cfg) {
  std::cout << "wrote " << edges_path(cfg.out).string() << " and " << metadata_path(cfg.out).string() << "\n";
  const auto rep = diagnostics(res.chains);
  for (const auto& [block, rate] : rep.acceptance) {
    std::printf("  acceptance %-14s %.3f\n", block.c_str(), rate);
  }
  if (rep.degenerate_proposals > 0) {
    std::cout << "  numerically degenerate proposals rejected: " << rep.degenerate_proposals << "\n";
  }
}

int cmd_infer(const InferFlags& flags) {
  const RunConfig cfg = flags.resolve();
  const auto res = run_and_save(cfg);
  print_summary(res, cfg);
  return 0;
}

int cmd_diagnose(const InferFlags& flags) {
  const RunConfig cfg = flags.resolve();
  const auto res = run_and_save(cfg);
  print_summary(res, cfg);
  const auto rep = diagnostics(res.chains);
  nlohmann::json j;
  j["acceptance"] = rep.acceptance;
  j["chain_acceptance"] = rep.chain_acceptance;
  j["max_link_disagreement"] = rep.max_link_disagreement;
  j["degenerate_proposals"] = rep.degenerate_proposals;
  nlohmann::json stds = nlohmann::json::array();
  for (Index i = 0; i < rep.link_std.rows(); ++i) {
    for (Index k = 0; k < rep.link_std.cols(); ++k) {
      if (i == k) continue;
      stds.push_back({{"from", res.names[static_cast<std::size_t>(k)]},
                      {"to", res.names[static_cast<std::size_t>(i)]},
                      {"std", rep.link_std(i, k)}});
    }
  }
  j["link_std"] = std::move(stds);
  const std::string base = cfg.out.string();
  write_text(base + ".diagnostics.json", j.dump(2) + "\n");
  write_text(base + ".trace.csv", cumulative_mean_csv(res.chains, res.names));
  std::printf("  max across-chain link disagreement %.4f\n", rep.max_link_disagreement);
  std::cout << "wrote " << base << ".diagnostics.json and " << base << ".trace.csv\n";
  return 0;
}

struct EvaluateFlags {
  std::string pred, truth;
  std::optional<std::string> plot_data;
};

int cmd_evaluate(const EvaluateFlags& f) {
  const EdgeTable pred = load_edges_csv(f.pred);
  const MaskMatrix truth = load_truth_csv(f.truth, pred.names, pred.n_genes);
  const double roc = auroc(pred.scores, truth);
  const double pr = aupr(pred.scores, truth);
  std::printf("AUROC %.6f\nAUPR %.6f\n", roc, pr);
  if (f.plot_data) {
    std::string roc_csv = "threshold,fpr,tpr\n", pr_csv = "threshold,recall,precision\n";
    char buf[128];
    for (const auto& p : roc_curve(pred.scores, truth)) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.x, p.y);
      roc_csv += buf;
    }
    for (const auto& p : pr_curve(pred.scores, truth)) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.x, p.y);
      pr_csv += buf;
    }
    write_text(*f.plot_data + ".roc.csv", roc_csv);
    write_text(*f.plot_data + ".pr.csv", pr_csv);
  }
  return 0;
}

struct SimulateFlags {
  Index genes{5}, links{6}, series{5}, points{21}, fine_steps{20};
  double interval{1.0}, q{1e-3}, r{1e-3}, spread{1.0};
  std::uint64_t seed{1};
  std::string kind{"linear"}, out{"synthetic"};
  std::vector<std::string> knockouts;
};

int cmd_simulate(const SimulateFlags& f) {
  Rng rng(f.seed);
  SyntheticModel model;
  if (f.kind == "linear") {
    model = random_linear_model(f.genes, f.links, rng);
  } else if (f.kind == "saturating") {
    model = random_saturating_model(f.genes, f.links, rng);
  } else {
    throw UsageError("--kind must be linear or saturating");
  }
  model.Q.setConstant(f.q);
  model.R.setConstant(f.r);
  DatasetDesign design;
  design.n_series = f.series;
  design.m_points = f.points;
  design.interval = f.interval;
  design.fine_steps = f.fine_steps;
  design.x0_spread = f.spread;
  SyntheticData sim = make_dataset(model, design, rng);

  for (const auto& name : f.knockouts) {
    const auto g = sim.data.index_of(name);
    if (!g) throw UsageError("--knockouts: unknown gene '" + name + "'");
    sim.data.perturbations.push_back({*g, PerturbationKind::knockout, knockout_steady_state(model, *g)});
  }
  write_text(f.out + ".data.csv", time_series_to_csv(sim.data));
  write_text(f.out + ".truth.csv", truth_to_csv(sim.truth, sim.data.names));
  std::cout << "wrote " << f.out << ".data.csv and " << f.out << ".truth.csv";
  if (!sim.data.perturbations.empty()) {
    write_text(f.out + ".perturbations.csv", perturbations_to_csv(sim.data));
    std::cout << " and " << f.out << ".perturbations.csv";
  }
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gpdyn: gene regulatory network inference with Gaussian process dynamics"};
  app.require_subcommand(1);

  InferFlags infer_flags, diag_flags;
  auto* infer = app.add_subcommand("infer", "sample link probabilities and write a ranked edge list");
  infer_flags.attach(infer);
  auto* diagnose = app.add_subcommand("diagnose", "infer, then write chain diagnostics and convergence traces");
  diag_flags.attach(diagnose);

  EvaluateFlags eval_flags;
  auto* evaluate = app.add_subcommand("evaluate", "score a ranked edge list against ground truth");
  evaluate->add_option("--pred", eval_flags.pred, "edge list written by infer")->required();
  evaluate->add_option("--truth", eval_flags.truth, "ground truth CSV with from,to columns")->required();
  evaluate->add_option("--plot-data", eval_flags.plot_data, "prefix for ROC and PR point lists");

  SimulateFlags sim_flags;
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic network and noisy time series");
  simulate->add_option("--genes", sim_flags.genes, "number of genes")->capture_default_str();
  simulate->add_option("--links", sim_flags.links, "off-diagonal links")->capture_default_str();
  simulate->add_option("--series", sim_flags.series, "number of time series")->capture_default_str();
  simulate->add_option("--points", sim_flags.points, "measurements per series")->capture_default_str();
  simulate->add_option("--interval", sim_flags.interval, "time between measurements")->capture_default_str();
  simulate->add_option("--fine-steps", sim_flags.fine_steps, "Euler steps per interval")->capture_default_str();
  simulate->add_option("--q", sim_flags.q, "process noise variance")->capture_default_str();
  simulate->add_option("--r", sim_flags.r, "measurement noise variance")->capture_default_str();
  simulate->add_option("--spread", sim_flags.spread, "initial-state spread")->capture_default_str();
  simulate->add_option("--kind", sim_flags.kind, "linear or saturating")->capture_default_str();
  simulate->add_option("--knockouts", sim_flags.knockouts, "genes with noise-free knockout steady states")
      ->delimiter(',');
  simulate->add_option("--seed", sim_flags.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--out", sim_flags.out, "output prefix")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*infer) return cmd_infer(infer_flags);
    if (*diagnose) return cmd_diagnose(diag_flags);
    if (*evaluate) return cmd_evaluate(eval_flags);
    if (*simulate) return cmd_simulate(sim_flags);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}
