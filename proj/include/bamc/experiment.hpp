#pragma once

// Experiment harness: JSON config, replicated runs over a policy/budget
// grid, per-run CSV rows, aggregate JSON, and plot-ready curve data.
// Outputs are a pure function of (config, base seed); worker count only
// changes wall time.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bamc/concentration.hpp"
#include "bamc/errors.hpp"
#include "bamc/generator.hpp"
#include "bamc/instance.hpp"
#include "bamc/policy.hpp"

namespace bamc {

struct InlineInstance {
  std::vector<Eigen::MatrixXd> matrices;
  std::vector<Eigen::VectorXd> initial_dists;
};

using InstanceSource = std::variant<std::string, InlineInstance, GeneratorSpec>;

struct OutputConfig {
  std::string dir = "out";
  bool runs_csv = true;
  bool summary_json = true;
  bool curves_csv = false;
  bool radii_csv = false;
};

struct ExperimentConfig {
  InstanceSource instance;
  std::vector<Policy> policies;
  std::vector<std::int64_t> budgets;
  int replications = 100;
  double delta = 0.05;
  double c = 1.1;
  std::optional<double> alpha;
  std::uint64_t base_seed = 1;
  SnapshotMode snapshot_mode = SnapshotMode::Off;
  OutputConfig output;
};

// Full-mode snapshots grow linearly with the budget; cap the memory.
inline constexpr std::int64_t kMaxFullSnapshotBudget = 100'000;

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw SchemaError(where + ": unknown key \"" + key + "\"");
  }
}

inline GeneratorSpec parse_generator(const nlohmann::json& g) {
  reject_unknown_keys(g, {"family", "K", "S", "concentration", "epsilon", "leak"}, "generator");
  if (!g.contains("family") || !g["family"].is_string())
    throw SchemaError("generator: \"family\" must be a string");
  GeneratorSpec spec;
  spec.family = GeneratorSpec::parse_family(g["family"].get<std::string>());
  if (!g.contains("K") || !g["K"].is_number_integer())
    throw SchemaError("generator: \"K\" must be an integer");
  spec.K = g["K"].get<int>();
  if (spec.family == GeneratorSpec::Family::LazyTwoState) {
    spec.S = 2;
    if (g.contains("S") && g["S"].get<int>() != 2)
      throw SchemaError("generator: lazy-two-state is a two-state family");
    if (!g.contains("epsilon")) throw SchemaError("generator: lazy-two-state needs \"epsilon\"");
    if (g["epsilon"].is_number()) {
      spec.epsilon = {g["epsilon"].get<double>()};
    } else if (g["epsilon"].is_array()) {
      for (const auto& e : g["epsilon"]) spec.epsilon.push_back(e.get<double>());
    } else {
      throw SchemaError("generator: \"epsilon\" must be a number or array");
    }
  } else {
    if (!g.contains("S") || !g["S"].is_number_integer())
      throw SchemaError("generator: \"S\" must be an integer");
    spec.S = g["S"].get<int>();
    if (spec.family == GeneratorSpec::Family::DirichletRows && g.contains("concentration"))
      spec.concentration = g["concentration"].get<double>();
    if (spec.family == GeneratorSpec::Family::NearDeterministic && g.contains("leak"))
      spec.leak = g["leak"].get<double>();
  }
  return spec;
}

inline InstanceSource parse_instance_source(const nlohmann::json& inst) {
  if (!inst.is_object()) throw SchemaError("\"instance\" must be an object");
  const bool has_file = inst.contains("file");
  const bool has_matrices = inst.contains("matrices");
  const bool has_generator = inst.contains("generator");
  if (has_file + has_matrices + has_generator != 1)
    throw SchemaError("\"instance\" needs exactly one of \"file\", \"matrices\", \"generator\"");
  if (has_file) {
    reject_unknown_keys(inst, {"file"}, "instance");
    return inst["file"].get<std::string>();
  }
  if (has_generator) {
    reject_unknown_keys(inst, {"generator"}, "instance");
    return parse_generator(inst["generator"]);
  }
  reject_unknown_keys(inst, {"matrices", "initial_dists"}, "instance");
  InlineInstance inline_inst;
  const auto& mats = inst["matrices"];
  if (!mats.is_array() || mats.empty())
    throw SchemaError("instance: \"matrices\" must be a nonempty array");
  for (const auto& m : mats) {
    const int S = static_cast<int>(m.size());
    Eigen::MatrixXd M(S, S);
    for (int x = 0; x < S; ++x) {
      if (static_cast<int>(m[x].size()) != S)
        throw SchemaError("instance: matrices must be square");
      for (int y = 0; y < S; ++y) M(x, y) = m[x][y].get<double>();
    }
    inline_inst.matrices.push_back(std::move(M));
  }
  if (inst.contains("initial_dists")) {
    for (const auto& d : inst["initial_dists"]) {
      Eigen::VectorXd v(static_cast<int>(d.size()));
      for (int x = 0; x < v.size(); ++x) v(x) = d[x].get<double>();
      inline_inst.initial_dists.push_back(std::move(v));
    }
  }
  return inline_inst;
}

inline SnapshotMode parse_snapshot_mode(const std::string& name) {
  if (name == "off") return SnapshotMode::Off;
  if (name == "checkpoints") return SnapshotMode::Checkpoints;
  if (name == "full") return SnapshotMode::Full;
  throw SchemaError("unknown snapshot_mode \"" + name + "\"");
}

}  // namespace detail

inline ExperimentConfig parse_config_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("config: top level must be an object");
  detail::reject_unknown_keys(doc,
                              {"instance", "policies", "budgets", "replications", "delta", "c",
                               "alpha", "base_seed", "snapshot_mode", "output"},
                              "config");

  ExperimentConfig cfg;
  if (!doc.contains("instance")) throw SchemaError("config: missing \"instance\"");
  cfg.instance = detail::parse_instance_source(doc["instance"]);

  if (!doc.contains("policies") || !doc["policies"].is_array() || doc["policies"].empty())
    throw SchemaError("config: \"policies\" must be a nonempty array");
  for (const auto& p : doc["policies"]) cfg.policies.push_back(parse_policy(p.get<std::string>()));

  if (!doc.contains("budgets") || !doc["budgets"].is_array() || doc["budgets"].empty())
    throw SchemaError("config: \"budgets\" must be a nonempty array");
  for (const auto& b : doc["budgets"]) {
    if (!b.is_number_integer() || b.get<std::int64_t>() < 1)
      throw SchemaError("config: budgets must be positive integers");
    cfg.budgets.push_back(b.get<std::int64_t>());
  }

  if (doc.contains("replications")) cfg.replications = doc["replications"].get<int>();
  if (cfg.replications < 1) throw SchemaError("config: replications must be >= 1");
  if (doc.contains("delta")) cfg.delta = doc["delta"].get<double>();
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw SchemaError("config: delta must lie in (0, 1)");
  if (doc.contains("c")) cfg.c = doc["c"].get<double>();
  if (!(cfg.c > 1.0)) throw SchemaError("config: peeling base c must exceed 1");
  if (doc.contains("alpha")) {
    cfg.alpha = doc["alpha"].get<double>();
    if (!(*cfg.alpha > 0.0)) throw SchemaError("config: alpha must be positive");
  }
  if (doc.contains("base_seed")) cfg.base_seed = doc["base_seed"].get<std::uint64_t>();
  if (doc.contains("snapshot_mode"))
    cfg.snapshot_mode = detail::parse_snapshot_mode(doc["snapshot_mode"].get<std::string>());

  if (doc.contains("output")) {
    const auto& out = doc["output"];
    detail::reject_unknown_keys(out, {"dir", "formats"}, "output");
    if (out.contains("dir")) cfg.output.dir = out["dir"].get<std::string>();
    if (out.contains("formats")) {
      cfg.output.runs_csv = cfg.output.summary_json = false;
      for (const auto& f : out["formats"]) {
        const std::string name = f.get<std::string>();
        if (name == "csv") cfg.output.runs_csv = true;
        else if (name == "json") cfg.output.summary_json = true;
        else if (name == "curves") cfg.output.curves_csv = true;
        else if (name == "radii") cfg.output.radii_csv = true;
        else throw SchemaError("output: unknown format \"" + name + "\"");
      }
    }
  }

  if (cfg.snapshot_mode == SnapshotMode::Full)
    for (std::int64_t b : cfg.budgets)
      if (b > kMaxFullSnapshotBudget)
        throw SchemaError("config: full snapshots are capped at budget " +
                          std::to_string(kMaxFullSnapshotBudget));
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str());
}

inline ProblemInstance resolve_instance(const ExperimentConfig& cfg) {
  if (const auto* path = std::get_if<std::string>(&cfg.instance))
    return load_instance_file(*path);
  if (const auto* inline_inst = std::get_if<InlineInstance>(&cfg.instance))
    return build_instance(inline_inst->matrices, inline_inst->initial_dists);
  return generate_instance(std::get<GeneratorSpec>(cfg.instance),
                           derive_seed(cfg.base_seed, 0x696e7374ULL));
}

struct RunRecord {
  std::int64_t run_id = 0;
  Policy policy = Policy::BaMc;
  std::int64_t budget = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  LossReport loss;
  std::optional<bool> confidence_event;
};

struct Stats {
  double mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

// linear-interpolation quantile on a copy
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Stats make_stats(const std::vector<double>& v) {
  Stats s;
  double acc = 0.0;
  for (double x : v) acc += x;
  s.mean = v.empty() ? std::numeric_limits<double>::quiet_NaN() : acc / v.size();
  s.median = quantile(v, 0.5);
  s.q25 = quantile(v, 0.25);
  s.q75 = quantile(v, 0.75);
  return s;
}

struct CellSummary {
  Policy policy = Policy::BaMc;
  std::int64_t budget = 0;
  int replications = 0;
  Stats loss;
  Stats n_loss;
  std::vector<double> alloc_median;
  std::optional<double> confidence_event_rate;
  TheoryBounds theory;
};

struct ExperimentResult {
  int K = 0;
  int S = 0;
  double lambda = 0.0;
  std::vector<double> eta;
  bool fully_analyzed = true;
  std::vector<RunRecord> runs;
  std::vector<CellSummary> cells;
  // first-replication history per cell, kept only when radii output is on
  std::vector<EstimateHistory> cell_histories;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProblemInstance& instance,
                                       int jobs = 1) {
  const int K = instance.num_chains();
  for (std::int64_t b : cfg.budgets)
    if (b < 2 * static_cast<std::int64_t>(K))
      throw SchemaError("config: every budget must be at least 2K");

  ExperimentResult result;
  result.K = K;
  result.S = instance.num_states();
  result.lambda = instance.lambda_total();
  result.eta = instance.eta();
  result.fully_analyzed = instance.fully_analyzed();

  const std::size_t cells = cfg.policies.size() * cfg.budgets.size();
  const std::size_t total = cells * static_cast<std::size_t>(cfg.replications);
  result.runs.resize(total);
  const bool keep_history = cfg.output.radii_csv && cfg.snapshot_mode != SnapshotMode::Off;
  result.cell_histories.resize(keep_history ? cells : 0);

  RunOptions opts;
  opts.snapshot_mode = cfg.snapshot_mode;
  opts.c = cfg.c;
  opts.alpha = cfg.alpha;

  auto execute = [&](std::size_t run_idx) {
    const std::size_t cell = run_idx / cfg.replications;
    const int rep = static_cast<int>(run_idx % cfg.replications);
    const Policy policy = cfg.policies[cell / cfg.budgets.size()];
    const std::int64_t budget = cfg.budgets[cell % cfg.budgets.size()];

    RunRecord& rec = result.runs[run_idx];
    rec.run_id = static_cast<std::int64_t>(run_idx);
    rec.policy = policy;
    rec.budget = budget;
    rec.replication = rep;
    rec.seed = cfg.base_seed + static_cast<std::uint64_t>(rep);

    AllocationResult run = run_policy(instance, policy, budget, cfg.delta, rec.seed, opts);
    rec.loss = std::move(run.loss_report);
    if (cfg.snapshot_mode != SnapshotMode::Off) {
      const ConfidenceConfig conf{budget, cfg.delta, K, result.S, cfg.c};
      rec.confidence_event = confidence_event_holds(run.history, instance, conf);
      if (keep_history && rep == 0) result.cell_histories[cell] = std::move(run.history);
    }
  };

  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  if (workers == 1) {
    for (std::size_t i = 0; i < total; ++i) execute(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) execute(i);
      });
    for (std::thread& th : pool) th.join();
  }

  for (std::size_t cell = 0; cell < cells; ++cell) {
    CellSummary summary;
    summary.policy = cfg.policies[cell / cfg.budgets.size()];
    summary.budget = cfg.budgets[cell % cfg.budgets.size()];
    summary.replications = cfg.replications;

    std::vector<double> losses, n_losses;
    std::vector<std::vector<double>> allocs(K);
    int event_true = 0, event_known = 0;
    for (int rep = 0; rep < cfg.replications; ++rep) {
      const RunRecord& rec = result.runs[cell * cfg.replications + rep];
      losses.push_back(rec.loss.max_weighted);
      n_losses.push_back(static_cast<double>(rec.budget) * rec.loss.max_weighted);
      for (int k = 0; k < K; ++k) allocs[k].push_back(rec.loss.allocation[k]);
      if (rec.confidence_event) {
        ++event_known;
        event_true += *rec.confidence_event ? 1 : 0;
      }
    }
    summary.loss = make_stats(losses);
    summary.n_loss = make_stats(n_losses);
    for (int k = 0; k < K; ++k) summary.alloc_median.push_back(quantile(allocs[k], 0.5));
    if (event_known > 0)
      summary.confidence_event_rate = static_cast<double>(event_true) / event_known;
    summary.theory = theory_bounds(instance, summary.budget, cfg.delta, cfg.c);
    result.cells.push_back(std::move(summary));
  }
  return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1) {
  const ProblemInstance instance = resolve_instance(cfg);
  return run_experiment(cfg, instance, jobs);
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// One row per run: run_id, policy, n, seed, per-chain weighted loss, max
// weighted loss, max unweighted loss, max pseudo loss, per-chain pull
// fraction. Column order is fixed.
inline std::string render_runs_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "run_id,policy,n,seed";
  for (int k = 1; k <= result.K; ++k) out << ",loss_" << k;
  out << ",loss_max,loss_unweighted,loss_pseudo";
  for (int k = 1; k <= result.K; ++k) out << ",alloc_" << k;
  out << "\n";
  for (const RunRecord& rec : result.runs) {
    out << rec.run_id << ',' << to_string(rec.policy) << ',' << rec.budget << ',' << rec.seed;
    for (double v : rec.loss.weighted) out << ',' << detail::fmt_double(v);
    out << ',' << detail::fmt_double(rec.loss.max_weighted);
    out << ',' << detail::fmt_double(rec.loss.max_unweighted);
    out << ',' << detail::fmt_double(rec.loss.max_pseudo);
    for (double v : rec.loss.allocation) out << ',' << detail::fmt_double(v);
    out << "\n";
  }
  return out.str();
}

inline std::string render_summary_json(const ExperimentResult& result) {
  nlohmann::json doc;
  doc["instance"] = {{"chains", result.K},
                     {"states", result.S},
                     {"lambda", result.lambda},
                     {"eta", result.eta},
                     {"analyzed", result.fully_analyzed}};
  doc["cells"] = nlohmann::json::array();
  for (const CellSummary& cell : result.cells) {
    nlohmann::json c;
    c["policy"] = to_string(cell.policy);
    c["n"] = cell.budget;
    c["replications"] = cell.replications;
    c["loss"] = {{"mean", cell.loss.mean},
                 {"median", cell.loss.median},
                 {"q25", cell.loss.q25},
                 {"q75", cell.loss.q75}};
    c["n_loss"] = {{"mean", cell.n_loss.mean},
                   {"median", cell.n_loss.median},
                   {"q25", cell.n_loss.q25},
                   {"q75", cell.n_loss.q75}};
    c["allocation_median"] = cell.alloc_median;
    if (cell.confidence_event_rate)
      c["confidence_event_rate"] = *cell.confidence_event_rate;
    else
      c["confidence_event_rate"] = nullptr;
    c["theory"] = {{"generic_high_prob", cell.theory.generic_high_prob},
                   {"inflated_oracle", cell.theory.inflated_oracle},
                   {"excess_term", cell.theory.excess_term},
                   {"asymptotic_target", cell.theory.asymptotic_target}};
    doc["cells"].push_back(std::move(c));
  }
  return doc.dump(2) + "\n";
}

// long format for n * L_n curves: policy, n, statistic, value
inline std::string render_curves_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "policy,n,statistic,value\n";
  for (const CellSummary& cell : result.cells) {
    auto row = [&](const char* stat, double v) {
      out << to_string(cell.policy) << ',' << cell.budget << ',' << stat << ','
          << detail::fmt_double(v) << "\n";
    };
    row("n_loss_median", cell.n_loss.median);
    row("n_loss_q25", cell.n_loss.q25);
    row("n_loss_q75", cell.n_loss.q75);
    row("n_loss_mean", cell.n_loss.mean);
    row("asymptotic_target", result.lambda);
  }
  return out.str();
}

// per-round deviations and radii for coverage plots
inline std::string render_radius_csv(const EstimateHistory& history,
                                     const ProblemInstance& instance,
                                     const ConfidenceConfig& cfg) {
  const double b = beta(cfg);
  const double zeta_val = zeta(cfg.n, cfg.delta, cfg.S, cfg.c);
  const auto eb = EmpiricalBernsteinConstants::compute(zeta_val, history.alpha, cfg.S);
  std::ostringstream out;
  out << "t,chain,from,to,visits,truth,estimate,abs_dev,radius_event,radius_empirical\n";
  for (const RoundSnapshot& snap : history.snapshots) {
    for (int k = 0; k < instance.num_chains(); ++k) {
      const ChainSnapshot& cs = snap.chains[k];
      const RowMajorMatrix& P = instance.chain(k).matrix.entries();
      for (int x = 0; x < cfg.S; ++x) {
        const std::int64_t tx = cs.visits(x);
        const double denom = static_cast<double>(tx) + history.alpha * cfg.S;
        for (int y = 0; y < cfg.S; ++y) {
          const double var = P(x, y) * (1.0 - P(x, y));
          const double radius_event =
              std::sqrt(2.0 * static_cast<double>(tx) * var * b) / denom + b / (3.0 * denom);
          out << snap.t << ',' << k << ',' << x << ',' << y << ',' << tx << ','
              << detail::fmt_double(P(x, y)) << ',' << detail::fmt_double(cs.phat(x, y)) << ','
              << detail::fmt_double(std::abs(cs.phat(x, y) - P(x, y))) << ','
              << detail::fmt_double(radius_event) << ','
              << detail::fmt_double(
                     empirical_bernstein_radius(cs.phat(x, y), tx, eb, history.alpha, cfg.S))
              << "\n";
        }
      }
    }
  }
  return out.str();
}

inline void emit_report(const ExperimentResult& result, const ExperimentConfig& cfg,
                        const ProblemInstance& instance) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output.dir, ec);
  if (ec) throw IoError("cannot create output directory " + cfg.output.dir);

  auto write_file = [&](const std::string& name, const std::string& body) {
    const fs::path path = fs::path(cfg.output.dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << body;
    if (!out) throw IoError("failed writing " + path.string());
  };

  if (cfg.output.runs_csv) write_file("runs.csv", render_runs_csv(result));
  if (cfg.output.summary_json) write_file("summary.json", render_summary_json(result));
  if (cfg.output.curves_csv) write_file("curves.csv", render_curves_csv(result));
  if (cfg.output.radii_csv && !result.cell_histories.empty()) {
    for (std::size_t cell = 0; cell < result.cells.size(); ++cell) {
      if (result.cell_histories[cell].empty()) continue;
      const CellSummary& summary = result.cells[cell];
      const ConfidenceConfig conf{summary.budget, cfg.delta, result.K, result.S, cfg.c};
      write_file("radii_" + to_string(summary.policy) + "_" + std::to_string(summary.budget) +
                     ".csv",
                 render_radius_csv(result.cell_histories[cell], instance, conf));
    }
  }
}

}  // namespace bamc
