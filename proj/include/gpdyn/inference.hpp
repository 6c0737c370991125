#pragma once

#include <gpdyn/dataset.hpp>
#include <gpdyn/io.hpp>
#include <gpdyn/sampler.hpp>

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gpdyn {

/// Resolved settings of one `infer` run.
struct RunConfig {
  SamplerConfig sampler;
  std::filesystem::path data;
  std::optional<std::filesystem::path> perturbations;
  std::vector<std::string> inputs;
  std::filesystem::path out{"gpdyn_out"};  // prefix: <out>.edges.csv, <out>.meta.json
  Index threads{0};                         // 0 = hardware concurrency
  std::uint64_t checkpoint_every{0};        // sweeps; 0 disables
  bool resume{false};

  nlohmann::json to_json() const;
};

/// Overlays a RunConfig JSON document (sampler keys at top level plus
/// data, perturbations, inputs, out, threads, checkpoint_every).
void merge_json(const nlohmann::json& j, RunConfig& cfg);

struct InferenceResult {
  std::vector<std::string> names;
  Index n_genes{0};
  MatrixXd confidence;  // n x d pooled link probabilities
  std::vector<ChainOutput> chains;
  ScalingTransform transform;
};

struct CheckpointPolicy {
  std::filesystem::path prefix;  // <prefix>.chain<k>.json
  std::uint64_t every{0};
  bool resume{false};
};

/// Scale, run cfg.n_chains chains on up to `threads` workers and pool.
/// Chain k is seeded with (cfg.seed, k), so the result does not depend on
/// the thread count.
InferenceResult run_inference(const Dataset& raw, const SamplerConfig& cfg, Index threads = 1,
                              const std::optional<CheckpointPolicy>& checkpoints = std::nullopt);

/// Load data as described by `cfg`, run, and write the edge list and
/// metadata. Returns the result for further use.
InferenceResult run_and_save(const RunConfig& cfg);

nlohmann::json run_metadata(const RunConfig& cfg, const InferenceResult& res);

std::filesystem::path edges_path(const std::filesystem::path& out);
std::filesystem::path metadata_path(const std::filesystem::path& out);

/// Worker count from GPDYN_THREADS, falling back to hardware concurrency.
Index default_thread_count();

}  // namespace gpdyn
