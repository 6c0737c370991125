#include <gpdyn/io.hpp>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace gpdyn {

using nlohmann::json;

namespace {

struct CsvRow {
  std::size_t line{0};
  std::vector<std::string> cells;
};

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<CsvRow> split_csv(const std::string& text) {
  std::vector<CsvRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line).front() == '#') continue;
    CsvRow row{number, {}};
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) row.cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') row.cells.emplace_back();
    rows.push_back(std::move(row));
  }
  return rows;
}

[[noreturn]] void parse_error(const std::string& source, std::size_t line, std::size_t col,
                              const std::string& msg) {
  throw InvalidData(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
}

double parse_number(const std::string& s, const std::string& source, std::size_t line,
                    std::size_t col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    parse_error(source, line, col, "cannot parse number '" + s + "'");
  }
  return v;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Observations of one series keyed by time, before packing.
struct SeriesBuilder {
  std::vector<double> times;
  std::map<double, std::map<std::size_t, double>> values;  // time -> column -> value
  std::map<double, std::size_t> first_line;
};

Dataset pack(std::vector<std::string> names, const std::vector<std::string>& series_order,
             std::map<std::string, SeriesBuilder>& builders, const LoadOptions& opts,
             const std::string& source) {
  // Column permutation: genes keep their order, inputs move to the back.
  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (std::find(opts.inputs.begin(), opts.inputs.end(), names[c]) == opts.inputs.end()) order.push_back(c);
  }
  for (const auto& in : opts.inputs) {
    const auto it = std::find(names.begin(), names.end(), in);
    if (it == names.end()) throw InvalidData(source + ": input column '" + in + "' not found");
    order.push_back(static_cast<std::size_t>(it - names.begin()));
  }

  Dataset d;
  for (std::size_t c : order) d.names.push_back(names[c]);
  d.n_inputs = static_cast<Index>(opts.inputs.size());
  const Index dim = d.dim();

  for (const auto& sid : series_order) {
    SeriesBuilder& b = builders.at(sid);
    for (std::size_t k = 1; k < b.times.size(); ++k) {
      if (!(b.times[k] > b.times[k - 1])) {
        const double t = b.times[k];
        parse_error(source, b.first_line.at(t), 0,
                    "series '" + sid + "': timestamp " + std::to_string(t) +
                        (t == b.times[k - 1] ? " duplicated" : " not increasing"));
      }
    }
    Series s;
    const Index m = static_cast<Index>(b.times.size());
    s.time.resize(m);
    s.values = MatrixXd::Zero(m, dim);
    s.observed = MaskMatrix::Constant(m, dim, false);
    for (Index k = 0; k < m; ++k) {
      const double t = b.times[static_cast<std::size_t>(k)];
      s.time(k) = t;
      for (Index j = 0; j < dim; ++j) {
        const auto& row = b.values[t];
        const auto it = row.find(order[static_cast<std::size_t>(j)]);
        if (it != row.end()) {
          s.values(k, j) = it->second;
          s.observed(k, j) = true;
        }
      }
    }
    d.series.push_back(std::move(s));
  }
  for (std::size_t sidx = 0; sidx < d.series.size(); ++sidx) {
    const Series& s = d.series[sidx];
    for (Index j = 0; j < d.n_genes(); ++j) {
      if (s.observed.col(j).count() < 2) {
        throw InvalidData(source + ": series '" + series_order[sidx] + "' has fewer than two observed points for '" +
                          d.names[static_cast<std::size_t>(j)] + "'");
      }
    }
  }
  d.validate();
  return d;
}

}  // namespace

Dataset parse_time_series_csv(const std::string& text, const LoadOptions& opts,
                              const std::string& source) {
  const auto rows = split_csv(text);
  if (rows.empty()) throw InvalidData(source + ": empty file");
  std::vector<std::string> header = rows.front().cells;
  for (auto& h : header) h = lower(h);
  std::vector<std::string> raw_header = rows.front().cells;

  std::map<std::string, SeriesBuilder> builders;
  std::vector<std::string> series_order;
  auto builder = [&](const std::string& sid) -> SeriesBuilder& {
    auto [it, inserted] = builders.try_emplace(sid);
    if (inserted) series_order.push_back(sid);
    return it->second;
  };
  auto add_time = [&](SeriesBuilder& b, double t, std::size_t line) {
    if (!b.values.count(t)) {
      b.times.push_back(t);
      b.first_line[t] = line;
      b.values[t];
    }
  };

  const bool long_form = header.size() == 4 && header[0] == "series" && header[1] == "time" &&
                         header[2] == "gene" && header[3] == "value";
  if (long_form) {
    std::vector<std::string> names;
    std::map<std::string, std::size_t> col_of;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const CsvRow& row = rows[r];
      if (row.cells.size() != 4) parse_error(source, row.line, 0, "expected 4 fields");
      const std::string& sid = row.cells[0];
      const double t = parse_number(row.cells[1], source, row.line, 2);
      const std::string& gene = row.cells[2];
      if (gene.empty()) parse_error(source, row.line, 3, "empty gene name");
      auto [cit, fresh] = col_of.try_emplace(gene, names.size());
      if (fresh) names.push_back(gene);
      SeriesBuilder& b = builder(sid);
      const bool new_time = !b.values.count(t);
      if (new_time) {
        b.times.push_back(t);
        b.first_line[t] = row.line;
      }
      auto& slot = b.values[t];
      if (slot.count(cit->second)) {
        parse_error(source, row.line, 2, "duplicated timestamp for gene '" + gene + "'");
      }
      if (!row.cells[3].empty()) slot[cit->second] = parse_number(row.cells[3], source, row.line, 4);
    }
    // Long form need not be time-sorted.
    for (auto& [sid, b] : builders) std::sort(b.times.begin(), b.times.end());
    return pack(names, series_order, builders, opts, source);
  }

  std::size_t first_value = 0;
  bool has_series = false;
  if (!header.empty() && header[0] == "series") {
    has_series = true;
    if (header.size() < 2 || header[1] != "time") parse_error(source, rows.front().line, 2, "expected 'time' column");
    first_value = 2;
  } else if (!header.empty() && header[0] == "time") {
    first_value = 1;
  } else {
    parse_error(source, rows.front().line, 1,
                "header must be 'series,time,gene,value' or '[series,]time,<columns>'");
  }
  std::vector<std::string> names(raw_header.begin() + static_cast<long>(first_value), raw_header.end());
  if (names.empty()) parse_error(source, rows.front().line, first_value + 1, "no value columns");
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (names[c].empty()) parse_error(source, rows.front().line, first_value + c + 1, "empty column name");
    if (std::count(names.begin(), names.end(), names[c]) > 1) {
      parse_error(source, rows.front().line, first_value + c + 1, "duplicated column '" + names[c] + "'");
    }
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.cells.size() != header.size()) {
      parse_error(source, row.line, 0,
                  "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(row.cells.size()));
    }
    const std::string sid = has_series ? row.cells[0] : "1";
    const double t = parse_number(row.cells[first_value - 1], source, row.line, first_value);
    SeriesBuilder& b = builder(sid);
    if (b.values.count(t)) parse_error(source, row.line, first_value, "duplicated timestamp " + row.cells[first_value - 1]);
    add_time(b, t, row.line);
    for (std::size_t c = 0; c < names.size(); ++c) {
      const std::string& cell = row.cells[first_value + c];
      if (!cell.empty()) b.values[t][c] = parse_number(cell, source, row.line, first_value + c + 1);
    }
  }
  return pack(names, series_order, builders, opts, source);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidData("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

Dataset load_time_series_csv(const std::filesystem::path& path, const LoadOptions& opts) {
  return parse_time_series_csv(read_text(path), opts, path.string());
}

void parse_perturbations_csv(const std::string& text, Dataset& data, const std::string& source) {
  const auto rows = split_csv(text);
  if (rows.empty()) throw InvalidData(source + ": empty file");
  const auto& header = rows.front().cells;
  if (header.size() < 3 || lower(header[0]) != "perturbed_gene" || lower(header[1]) != "kind") {
    parse_error(source, rows.front().line, 1, "header must start with 'perturbed_gene,kind'");
  }
  std::vector<Index> col_to_dim(header.size(), -1);
  for (std::size_t c = 2; c < header.size(); ++c) {
    const auto idx = data.index_of(header[c]);
    if (!idx) parse_error(source, rows.front().line, c + 1, "unknown column '" + header[c] + "'");
    col_to_dim[c] = *idx;
  }
  if (static_cast<Index>(header.size()) - 2 != data.dim()) {
    parse_error(source, rows.front().line, 0, "perturbation file must list every dataset column");
  }
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.cells.size() != header.size()) parse_error(source, row.line, 0, "wrong number of fields");
    VectorXd state(data.dim());
    for (std::size_t c = 2; c < header.size(); ++c) {
      if (row.cells[c].empty()) parse_error(source, row.line, c + 1, "missing value in steady-state row");
      state(col_to_dim[c]) = parse_number(row.cells[c], source, row.line, c + 1);
    }
    const std::string kind = lower(row.cells[1]);
    if (kind == "steady_state" || kind == "multifactorial" || kind == "wildtype") {
      data.steady_states.push_back(std::move(state));
      continue;
    }
    PerturbationExperiment p;
    if (kind == "knockout") {
      p.kind = PerturbationKind::knockout;
    } else if (kind == "knockdown") {
      p.kind = PerturbationKind::knockdown;
    } else {
      parse_error(source, row.line, 2, "unknown kind '" + row.cells[1] + "'");
    }
    const auto g = data.index_of(row.cells[0]);
    if (!g || *g >= data.n_genes()) parse_error(source, row.line, 1, "unknown gene '" + row.cells[0] + "'");
    p.gene = *g;
    p.state = std::move(state);
    data.perturbations.push_back(std::move(p));
  }
  data.validate();
}

void load_perturbations_csv(const std::filesystem::path& path, Dataset& data) {
  parse_perturbations_csv(read_text(path), data, path.string());
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string time_series_to_csv(const Dataset& data) {
  std::ostringstream os;
  os << "series,time";
  for (const auto& n : data.names) os << ',' << n;
  os << '\n';
  for (std::size_t s = 0; s < data.series.size(); ++s) {
    const Series& ser = data.series[s];
    for (Index k = 0; k < ser.length(); ++k) {
      os << s + 1 << ',' << fmt_double(ser.time(k));
      for (Index j = 0; j < data.dim(); ++j) {
        os << ',';
        if (ser.observed(k, j)) os << fmt_double(ser.values(k, j));
      }
      os << '\n';
    }
  }
  return os.str();
}

std::string perturbations_to_csv(const Dataset& data) {
  std::ostringstream os;
  os << "perturbed_gene,kind";
  for (const auto& n : data.names) os << ',' << n;
  os << '\n';
  auto row = [&](const std::string& gene, const std::string& kind, const VectorXd& v) {
    os << gene << ',' << kind;
    for (Index j = 0; j < v.size(); ++j) os << ',' << fmt_double(v(j));
    os << '\n';
  };
  for (const auto& p : data.perturbations) {
    row(data.names[static_cast<std::size_t>(p.gene)],
        p.kind == PerturbationKind::knockout ? "knockout" : "knockdown", p.state);
  }
  for (const auto& s : data.steady_states) row("", "steady_state", s);
  return os.str();
}

MaskMatrix load_truth_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                          Index n_genes) {
  const std::string source = path.string();
  const auto rows = split_csv(read_text(path));
  if (rows.empty()) throw InvalidData(source + ": empty file");
  const auto& header = rows.front().cells;
  if (header.size() < 2 || lower(header[0]) != "from" || lower(header[1]) != "to") {
    parse_error(source, rows.front().line, 1, "header must start with 'from,to'");
  }
  MaskMatrix truth = MaskMatrix::Constant(n_genes, static_cast<Index>(names.size()), false);
  auto find = [&](const std::string& name, std::size_t line, std::size_t col) {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) parse_error(source, line, col, "unknown name '" + name + "'");
    return static_cast<Index>(it - names.begin());
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.cells.size() < 2) parse_error(source, row.line, 0, "expected at least 2 fields");
    const Index from = find(row.cells[0], row.line, 1);
    const Index to = find(row.cells[1], row.line, 2);
    if (to >= n_genes) parse_error(source, row.line, 2, "'" + row.cells[1] + "' is not a gene");
    bool present = true;
    if (row.cells.size() >= 3 && !row.cells[2].empty()) {
      present = parse_number(row.cells[2], source, row.line, 3) != 0.0;
    }
    truth(to, from) = present;
  }
  return truth;
}

std::string truth_to_csv(const MaskMatrix& truth, const std::vector<std::string>& names) {
  std::ostringstream os;
  os << "from,to\n";
  for (Index i = 0; i < truth.rows(); ++i) {
    for (Index j = 0; j < truth.cols(); ++j) {
      if (i != j && truth(i, j)) os << names[static_cast<std::size_t>(j)] << ',' << names[static_cast<std::size_t>(i)] << '\n';
    }
  }
  return os.str();
}

std::string edges_to_csv(const MatrixXd& confidence, const std::vector<std::string>& names) {
  if (static_cast<Index>(names.size()) != confidence.cols()) {
    throw std::invalid_argument("edges_to_csv: names do not match matrix columns");
  }
  struct Edge {
    Index to, from;
    double c;
  };
  std::vector<Edge> edges;
  for (Index i = 0; i < confidence.rows(); ++i) {
    for (Index j = 0; j < confidence.cols(); ++j) edges.push_back({i, j, confidence(i, j)});
  }
  std::stable_sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.c > y.c; });
  std::ostringstream os;
  os << "from,to,confidence,self_loop\n";
  for (const auto& e : edges) {
    os << names[static_cast<std::size_t>(e.from)] << ',' << names[static_cast<std::size_t>(e.to)] << ','
       << fmt_double(e.c) << ',' << (e.from == e.to ? 1 : 0) << '\n';
  }
  return os.str();
}

EdgeTable parse_edges_csv(const std::string& text, const std::vector<std::string>& names,
                          const std::string& source) {
  const auto rows = split_csv(text);
  if (rows.empty()) throw InvalidData(source + ": empty file");
  const auto& header = rows.front().cells;
  if (header.size() < 3 || lower(header[0]) != "from" || lower(header[1]) != "to" ||
      lower(header[2]) != "confidence") {
    parse_error(source, rows.front().line, 1, "header must start with 'from,to,confidence'");
  }
  struct Raw {
    std::string from, to;
    double c;
    std::size_t line;
  };
  std::vector<Raw> raw;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    if (row.cells.size() < 3) parse_error(source, row.line, 0, "expected at least 3 fields");
    raw.push_back({row.cells[0], row.cells[1], parse_number(row.cells[2], source, row.line, 3), row.line});
  }

  EdgeTable t;
  if (!names.empty()) {
    t.names = names;
    std::vector<bool> is_target(names.size(), false);
    for (const auto& e : raw) {
      const auto it = std::find(names.begin(), names.end(), e.to);
      if (it != names.end()) is_target[static_cast<std::size_t>(it - names.begin())] = true;
    }
    t.n_genes = static_cast<Index>(std::count(is_target.begin(), is_target.end(), true));
  } else {
    std::vector<std::string> targets, regulators;
    for (const auto& e : raw) {
      if (std::find(targets.begin(), targets.end(), e.to) == targets.end()) targets.push_back(e.to);
    }
    for (const auto& e : raw) {
      if (std::find(targets.begin(), targets.end(), e.from) == targets.end() &&
          std::find(regulators.begin(), regulators.end(), e.from) == regulators.end()) {
        regulators.push_back(e.from);
      }
    }
    t.names = targets;
    t.names.insert(t.names.end(), regulators.begin(), regulators.end());
    t.n_genes = static_cast<Index>(targets.size());
  }
  const Index d = static_cast<Index>(t.names.size());
  t.scores = MatrixXd::Constant(t.n_genes, d, std::numeric_limits<double>::quiet_NaN());
  for (const auto& e : raw) {
    const auto fi = std::find(t.names.begin(), t.names.end(), e.from);
    const auto ti = std::find(t.names.begin(), t.names.end(), e.to);
    if (fi == t.names.end() || ti == t.names.end()) parse_error(source, e.line, 1, "unknown name");
    const Index to = static_cast<Index>(ti - t.names.begin());
    if (to >= t.n_genes) parse_error(source, e.line, 2, "target '" + e.to + "' is not a gene");
    t.scores(to, static_cast<Index>(fi - t.names.begin())) = e.c;
  }
  for (Index i = 0; i < t.n_genes; ++i) {
    for (Index j = 0; j < d; ++j) {
      if (i != j && std::isnan(t.scores(i, j))) {
        throw InvalidData(source + ": no score for link " + t.names[static_cast<std::size_t>(j)] + " -> " +
                          t.names[static_cast<std::size_t>(i)]);
      }
      if (i == j && std::isnan(t.scores(i, j))) t.scores(i, j) = 0.0;
    }
  }
  return t;
}

EdgeTable load_edges_csv(const std::filesystem::path& path, const std::vector<std::string>& names) {
  return parse_edges_csv(read_text(path), names, path.string());
}

// ---------------------------------------------------------------------------

json to_json(const SamplerConfig& c) {
  json j;
  j["n_burn"] = c.n_burn;
  j["n_samples"] = c.n_samples;
  j["thinning"] = c.thinning;
  j["step_hyper"] = c.step_hyper;
  j["step_noise"] = c.step_noise;
  j["step_traj"] = c.step_traj;
  j["cn_epsilon"] = c.cn_epsilon;
  j["step_pseudo"] = c.step_pseudo;
  j["step_steady"] = c.step_steady;
  j["proposal"] = to_string(c.proposal);
  j["refinement"] = c.refinement;
  j["use_pseudo_inputs"] = c.use_pseudo_inputs;
  j["n_pseudo"] = c.n_pseudo;
  j["jitter"] = c.jitter;
  j["eta"] = c.eta ? json(*c.eta) : json(nullptr);
  j["adapt"] = c.adapt;
  j["target_accept"] = c.target_accept;
  j["freeze_self_links"] = c.freeze_self_links;
  j["prior_only"] = c.prior_only;
  j["store_samples"] = c.store_samples;
  j["seed"] = c.seed;
  j["n_chains"] = c.n_chains;
  return j;
}

void merge_json(const json& j, SamplerConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("sampler configuration must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "n_burn") c.n_burn = v.get<Index>();
    else if (key == "n_samples") c.n_samples = v.get<Index>();
    else if (key == "thinning") c.thinning = v.get<Index>();
    else if (key == "step_hyper") c.step_hyper = v.get<double>();
    else if (key == "step_noise") c.step_noise = v.get<double>();
    else if (key == "step_traj") c.step_traj = v.get<double>();
    else if (key == "cn_epsilon") c.cn_epsilon = v.get<double>();
    else if (key == "step_pseudo") c.step_pseudo = v.get<double>();
    else if (key == "step_steady") c.step_steady = v.get<double>();
    else if (key == "proposal") c.proposal = proposal_from_string(v.get<std::string>());
    else if (key == "refinement") c.refinement = v.get<Index>();
    else if (key == "use_pseudo_inputs") c.use_pseudo_inputs = v.get<bool>();
    else if (key == "n_pseudo") c.n_pseudo = v.get<Index>();
    else if (key == "jitter") c.jitter = v.get<double>();
    else if (key == "eta") c.eta = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
    else if (key == "adapt") c.adapt = v.get<bool>();
    else if (key == "target_accept") c.target_accept = v.get<double>();
    else if (key == "freeze_self_links") c.freeze_self_links = v.get<bool>();
    else if (key == "prior_only") c.prior_only = v.get<bool>();
    else if (key == "store_samples") c.store_samples = v.get<bool>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "n_chains") c.n_chains = v.get<Index>();
    else throw std::invalid_argument("unknown sampler configuration key '" + key + "'");
  }
}

json to_json(const BlockTally& t) {
  return {{"proposed", t.proposed}, {"accepted", t.accepted}, {"rate", t.rate()}};
}

json acceptance_json(const std::map<std::string, BlockTally>& tallies) {
  json j = json::object();
  for (const auto& [k, t] : tallies) j[k] = to_json(t);
  return j;
}

namespace {

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

MatrixXd matrix_from_json(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j.at(0).size());
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(j.at(i).size()) != cols) throw std::invalid_argument("ragged matrix in checkpoint");
    for (Index k = 0; k < cols; ++k) m(i, k) = j.at(i).at(k).get<double>();
  }
  return m;
}

json vector_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

json tallies_json(const std::map<std::string, BlockTally>& t) {
  json j = json::object();
  for (const auto& [k, v] : t) j[k] = {v.proposed, v.accepted};
  return j;
}

std::map<std::string, BlockTally> tallies_from_json(const json& j) {
  std::map<std::string, BlockTally> t;
  for (const auto& [k, v] : j.items()) t[k] = {v.at(0).get<std::uint64_t>(), v.at(1).get<std::uint64_t>()};
  return t;
}

}  // namespace

constexpr int kCheckpointVersion = 1;

json checkpoint_json(const ChainState& st, const ChainOutput& partial) {
  const HyperState& h = st.hyper;
  json j;
  j["version"] = kCheckpointVersion;
  j["sweep"] = st.sweep;
  std::ostringstream rng;
  rng << st.rng;
  j["rng"] = rng.str();
  j["hyper"] = {
      {"S", matrix_json(h.S.cast<double>())}, {"H", matrix_json(h.H)},      {"gamma", vector_json(h.gamma)},
      {"q", vector_json(h.q)},                {"r", vector_json(h.r)},      {"a", vector_json(h.a)},
      {"b", vector_json(h.b)},                {"M_ss", vector_json(h.M_ss)}, {"M_ko", vector_json(h.M_ko)},
      {"x_ss", vector_json(h.x_ss)},          {"pseudo", matrix_json(h.pseudo.points)},
      {"jitter", h.pseudo.jitter}};
  j["X"] = matrix_json(st.traj.X);
  j["log_scale"] = {{"hyper", vector_json(st.log_scale_hyper)},
                    {"r", vector_json(st.log_scale_r)},
                    {"q", vector_json(st.log_scale_q)},
                    {"traj", st.log_scale_traj},
                    {"pseudo", st.log_scale_pseudo},
                    {"steady", st.log_scale_steady}};
  j["acceptance"] = tallies_json(st.acceptance);
  j["degenerate"] = st.degenerate;

  json out;
  out["S_sum"] = matrix_json(partial.S_sum);
  out["n_collected"] = partial.n_collected;
  out["seed"] = partial.seed;
  json trace = json::array();
  for (const auto& [count, m] : partial.trace) trace.push_back({{"n", count}, {"S_sum", matrix_json(m)}});
  out["trace"] = std::move(trace);
  j["output"] = std::move(out);
  return j;
}

void restore_checkpoint(const json& j, ChainState& st, ChainOutput& partial) {
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw std::invalid_argument("unsupported checkpoint version");
  }
  const json& h = j.at("hyper");
  const MatrixXd S = matrix_from_json(h.at("S"));
  if (S.rows() != st.hyper.S.rows() || S.cols() != st.hyper.S.cols()) {
    throw std::invalid_argument("checkpoint does not match the dataset dimensions");
  }
  const MatrixXd X = matrix_from_json(j.at("X"));
  if (X.rows() != st.traj.X.rows() || X.cols() != st.traj.X.cols()) {
    throw std::invalid_argument("checkpoint trajectory does not match the grid");
  }
  st.sweep = j.at("sweep").get<std::uint64_t>();
  std::istringstream rng(j.at("rng").get<std::string>());
  rng >> st.rng;
  st.hyper.S = S.array() != 0.0;
  st.hyper.H = matrix_from_json(h.at("H"));
  st.hyper.gamma = vector_from_json(h.at("gamma"));
  st.hyper.q = vector_from_json(h.at("q"));
  st.hyper.r = vector_from_json(h.at("r"));
  st.hyper.a = vector_from_json(h.at("a"));
  st.hyper.b = vector_from_json(h.at("b"));
  st.hyper.M_ss = vector_from_json(h.at("M_ss"));
  st.hyper.M_ko = vector_from_json(h.at("M_ko"));
  st.hyper.x_ss = vector_from_json(h.at("x_ss"));
  st.hyper.pseudo.points = matrix_from_json(h.at("pseudo"));
  st.hyper.pseudo.jitter = h.at("jitter").get<double>();
  st.traj.X = X;
  const json& ls = j.at("log_scale");
  st.log_scale_hyper = vector_from_json(ls.at("hyper"));
  st.log_scale_r = vector_from_json(ls.at("r"));
  st.log_scale_q = vector_from_json(ls.at("q"));
  st.log_scale_traj = ls.at("traj").get<double>();
  st.log_scale_pseudo = ls.at("pseudo").get<double>();
  st.log_scale_steady = ls.at("steady").get<double>();
  st.acceptance = tallies_from_json(j.at("acceptance"));
  st.degenerate = j.at("degenerate").get<std::uint64_t>();

  const json& out = j.at("output");
  partial = ChainOutput{};
  partial.S_sum = matrix_from_json(out.at("S_sum"));
  partial.n_collected = out.at("n_collected").get<Index>();
  partial.seed = out.at("seed").get<std::uint64_t>();
  for (const auto& t : out.at("trace")) {
    partial.trace.emplace_back(t.at("n").get<Index>(), matrix_from_json(t.at("S_sum")));
  }
}

}  // namespace gpdyn
