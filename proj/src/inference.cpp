#include <gpdyn/inference.hpp>

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace gpdyn {

using nlohmann::json;

json RunConfig::to_json() const {
  json j = gpdyn::to_json(sampler);
  j["data"] = data.string();
  j["perturbations"] = perturbations ? json(perturbations->string()) : json(nullptr);
  j["inputs"] = inputs;
  j["out"] = out.string();
  j["threads"] = threads;
  j["checkpoint_every"] = checkpoint_every;
  return j;
}

void merge_json(const json& j, RunConfig& cfg) {
  if (!j.is_object()) throw std::invalid_argument("configuration must be a JSON object");
  json sampler_keys = json::object();
  for (const auto& [key, v] : j.items()) {
    if (key == "data") cfg.data = v.get<std::string>();
    else if (key == "perturbations") {
      cfg.perturbations = v.is_null() ? std::nullopt
                                      : std::optional<std::filesystem::path>(v.get<std::string>());
    } else if (key == "inputs") cfg.inputs = v.get<std::vector<std::string>>();
    else if (key == "out") cfg.out = v.get<std::string>();
    else if (key == "threads") cfg.threads = v.get<Index>();
    else if (key == "checkpoint_every") cfg.checkpoint_every = v.get<std::uint64_t>();
    else sampler_keys[key] = v;
  }
  merge_json(sampler_keys, cfg.sampler);
}

Index default_thread_count() {
  if (const char* env = std::getenv("GPDYN_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<Index>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max<Index>(1, static_cast<Index>(std::thread::hardware_concurrency()));
}

std::filesystem::path edges_path(const std::filesystem::path& out) {
  return std::filesystem::path(out.string() + ".edges.csv");
}

std::filesystem::path metadata_path(const std::filesystem::path& out) {
  return std::filesystem::path(out.string() + ".meta.json");
}

namespace {

std::filesystem::path chain_checkpoint(const CheckpointPolicy& p, Index k) {
  return std::filesystem::path(p.prefix.string() + ".chain" + std::to_string(k) + ".json");
}

ChainOutput run_one(const GibbsSampler& sampler, Index k, const std::optional<CheckpointPolicy>& cp) {
  if (!cp) return ChainRunner(sampler, k).run();

  const auto path = chain_checkpoint(*cp, k);
  auto save = [&](const ChainRunner& r) {
    const std::string tmp = path.string() + ".tmp";
    write_text(tmp, checkpoint_json(r.state(), r.output()).dump());
    std::filesystem::rename(tmp, path);
  };
  if (cp->resume && std::filesystem::exists(path)) {
    ChainState state = sampler.initial_state(sampler.config().seed, k);
    ChainOutput partial;
    restore_checkpoint(json::parse(read_text(path)), state, partial);
    ChainRunner runner(sampler, std::move(state), std::move(partial));
    return runner.run(cp->every, save);
  }
  ChainRunner runner(sampler, k);
  return runner.run(cp->every, save);
}

}  // namespace

InferenceResult run_inference(const Dataset& raw, const SamplerConfig& cfg, Index threads,
                              const std::optional<CheckpointPolicy>& checkpoints) {
  cfg.validate();
  raw.validate();
  auto [scaled, transform] = scale_dataset(raw);
  const GibbsSampler sampler(scaled, cfg);

  InferenceResult res;
  res.names = raw.names;
  res.n_genes = raw.n_genes();
  res.transform = transform;
  res.chains.resize(static_cast<std::size_t>(cfg.n_chains));

  const Index workers = std::clamp<Index>(threads, 1, cfg.n_chains);
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (Index k = next++; k < cfg.n_chains; k = next++) {
      try {
        res.chains[static_cast<std::size_t>(k)] = run_one(sampler, k, checkpoints);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (Index w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  res.confidence = pool_chains(res.chains);
  return res;
}

json run_metadata(const RunConfig& cfg, const InferenceResult& res) {
  json j;
  j["config"] = cfg.to_json();
  j["seed"] = cfg.sampler.seed;
  j["eta"] = cfg.sampler.eta.value_or(1.0 / static_cast<double>(res.n_genes));
  j["names"] = res.names;
  j["n_genes"] = res.n_genes;
  j["scale"] = std::vector<double>(res.transform.scale.data(),
                                   res.transform.scale.data() + res.transform.scale.size());
  std::vector<std::string> constant;
  for (Index c : res.transform.constant_columns) constant.push_back(res.names[static_cast<std::size_t>(c)]);
  j["constant_columns"] = constant;
  json chains = json::array();
  for (const auto& c : res.chains) {
    chains.push_back({{"n_collected", c.n_collected},
                      {"degenerate_proposals", c.degenerate_proposals},
                      {"acceptance", acceptance_json(c.acceptance)}});
  }
  j["chains"] = std::move(chains);
  j["self_loops_scored"] = false;
  return j;
}

InferenceResult run_and_save(const RunConfig& cfg) {
  LoadOptions opts;
  opts.inputs = cfg.inputs;
  Dataset data = load_time_series_csv(cfg.data, opts);
  if (cfg.perturbations) load_perturbations_csv(*cfg.perturbations, data);

  std::optional<CheckpointPolicy> cp;
  if (cfg.checkpoint_every > 0 || cfg.resume) {
    cp = CheckpointPolicy{cfg.out, cfg.checkpoint_every, cfg.resume};
  }
  const Index threads = cfg.threads > 0 ? cfg.threads : default_thread_count();
  InferenceResult res = run_inference(data, cfg.sampler, threads, cp);
  write_text(edges_path(cfg.out), edges_to_csv(res.confidence, res.names));
  write_text(metadata_path(cfg.out), run_metadata(cfg, res).dump(2) + "\n");
  return res;
}

}  // namespace gpdyn
