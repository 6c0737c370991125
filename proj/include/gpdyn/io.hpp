#pragma once

#include <gpdyn/dataset.hpp>
#include <gpdyn/sampler.hpp>

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace gpdyn {

struct LoadOptions {
  /// Columns to treat as known input signals; moved behind the genes.
  std::vector<std::string> inputs;
};

/// Time-series CSV in long form (`series,time,gene,value`) or wide form
/// (`[series,]time,<column>...`); the layout is detected from the header.
/// Blank cells and absent (series, time, gene) combinations are missing.
Dataset load_time_series_csv(const std::filesystem::path& path, const LoadOptions& opts = {});
Dataset parse_time_series_csv(const std::string& text, const LoadOptions& opts = {},
                              const std::string& source = "<string>");

/// Appends the rows of a `perturbed_gene,kind,<column>...` CSV to `data`.
/// kind is knockout, knockdown, steady_state or multifactorial; the last
/// two leave perturbed_gene blank.
void load_perturbations_csv(const std::filesystem::path& path, Dataset& data);
void parse_perturbations_csv(const std::string& text, Dataset& data,
                             const std::string& source = "<string>");

/// Time series in wide form, one row per observation time.
std::string time_series_to_csv(const Dataset& data);
std::string perturbations_to_csv(const Dataset& data);

/// `from,to` edge list, optionally with a third 0/1 column. Returns the
/// n x d matrix in indicator orientation over `names`.
MaskMatrix load_truth_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                          Index n_genes);
std::string truth_to_csv(const MaskMatrix& truth, const std::vector<std::string>& names);

/// Ranked edge list: `from,to,confidence,self_loop`, descending by
/// confidence with ties broken by (to, from) position.
std::string edges_to_csv(const MatrixXd& confidence, const std::vector<std::string>& names);

struct EdgeTable {
  std::vector<std::string> names;  // genes first, then regulator-only columns
  Index n_genes{0};
  MatrixXd scores;  // n_genes x names.size()
};

/// Inverse of edges_to_csv. With `names` given the matrix is laid out in
/// that order; otherwise targets come first in order of appearance.
EdgeTable parse_edges_csv(const std::string& text, const std::vector<std::string>& names = {},
                          const std::string& source = "<string>");
EdgeTable load_edges_csv(const std::filesystem::path& path,
                         const std::vector<std::string>& names = {});

nlohmann::json to_json(const SamplerConfig& cfg);
/// Overlays the keys present in `j` onto `cfg`; unknown keys are errors.
void merge_json(const nlohmann::json& j, SamplerConfig& cfg);

nlohmann::json to_json(const BlockTally& t);
nlohmann::json acceptance_json(const std::map<std::string, BlockTally>& tallies);

/// Chain state plus partial output, enough to resume bit-identically.
nlohmann::json checkpoint_json(const ChainState& state, const ChainOutput& partial);
void restore_checkpoint(const nlohmann::json& j, ChainState& state, ChainOutput& partial);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace gpdyn
