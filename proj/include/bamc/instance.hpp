#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bamc/chain_analysis.hpp"
#include "bamc/errors.hpp"
#include "bamc/transition_matrix.hpp"

namespace bamc {

struct AnalyzedChain {
  TransitionMatrix matrix;
  // absent only for chains admitted under permissive validation
  std::optional<ChainAnalysis> analysis;
};

// K unknown chains over a common state space, plus the derived allocation
// targets: Lambda = sum_k sum_x G_k(x) and eta_k = gini_sum_k / Lambda.
class ProblemInstance {
 public:
  static ProblemInstance build(const std::vector<Eigen::MatrixXd>& matrices,
                               std::vector<Eigen::VectorXd> initial_dists = {},
                               ChainValidation mode = ChainValidation::RequireErgodic) {
    if (matrices.empty()) throw SchemaError("instance needs at least one chain");
    ProblemInstance inst;
    const int S = static_cast<int>(matrices.front().rows());
    for (std::size_t k = 0; k < matrices.size(); ++k) {
      if (matrices[k].rows() != S || matrices[k].cols() != S)
        throw SchemaError("chain " + std::to_string(k) + " has mismatched state count");
      TransitionMatrix tm(matrices[k], mode);
      std::optional<ChainAnalysis> analysis;
      if (tm.ergodic()) analysis = analyze_chain(tm);
      inst.chains_.push_back({std::move(tm), std::move(analysis)});
      inst.gini_sums_.push_back(gini_index(inst.chains_.back().matrix).sum());
    }

    if (initial_dists.empty())
      initial_dists.assign(matrices.size(), Eigen::VectorXd::Constant(S, 1.0 / S));
    if (initial_dists.size() != matrices.size())
      throw SchemaError("initial distribution count does not match chain count");
    for (std::size_t k = 0; k < initial_dists.size(); ++k) {
      const Eigen::VectorXd& p = initial_dists[k];
      if (p.size() != S || (p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > kRowSumTol)
        throw SchemaError("initial distribution " + std::to_string(k) + " is not a distribution");
    }
    inst.initial_dists_ = std::move(initial_dists);

    inst.lambda_ = 0.0;
    for (double g : inst.gini_sums_) inst.lambda_ += g;
    // every transition deterministic: eta is undefined and there is nothing
    // to allocate for (can only happen with non-ergodic chains)
    if (inst.lambda_ <= 0.0) throw DegenerateInstance("instance has zero total Gini index");
    inst.eta_.resize(inst.gini_sums_.size());
    for (std::size_t k = 0; k < inst.gini_sums_.size(); ++k)
      inst.eta_[k] = inst.gini_sums_[k] / inst.lambda_;
    return inst;
  }

  int num_chains() const { return static_cast<int>(chains_.size()); }
  int num_states() const { return chains_.front().matrix.size(); }
  const AnalyzedChain& chain(int k) const { return chains_[k]; }
  const Eigen::VectorXd& initial_dist(int k) const { return initial_dists_[k]; }
  double gini_sum(int k) const { return gini_sums_[k]; }
  double lambda_total() const { return lambda_; }
  double eta(int k) const { return eta_[k]; }
  const std::vector<double>& eta() const { return eta_; }

  bool fully_analyzed() const {
    for (const auto& c : chains_)
      if (!c.analysis) return false;
    return true;
  }

 private:
  ProblemInstance() = default;

  std::vector<AnalyzedChain> chains_;
  std::vector<Eigen::VectorXd> initial_dists_;
  std::vector<double> gini_sums_;
  std::vector<double> eta_;
  double lambda_ = 0.0;
};

inline ProblemInstance build_instance(const std::vector<Eigen::MatrixXd>& matrices,
                                      std::vector<Eigen::VectorXd> initial_dists = {},
                                      ChainValidation mode = ChainValidation::RequireErgodic) {
  return ProblemInstance::build(matrices, std::move(initial_dists), mode);
}

namespace detail {

inline std::string line_of(std::string_view text, std::size_t byte_pos) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte_pos && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return std::to_string(line);
}

}  // namespace detail

// Instance file schema:
//   {"states": S, "chains": [[[row], ...], ...], "initial_dists": [[...], ...]}
// initial_dists is optional and defaults to uniform.
inline ProblemInstance parse_instance_json(std::string_view text,
                                           ChainValidation mode = ChainValidation::RequireErgodic) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("instance JSON: line " + detail::line_of(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw SchemaError("instance JSON: top level must be an object");
  for (const auto& [key, _] : doc.items())
    if (key != "states" && key != "chains" && key != "initial_dists")
      throw SchemaError("instance JSON: unknown key \"" + key + "\"");
  if (!doc.contains("states") || !doc["states"].is_number_integer())
    throw SchemaError("instance JSON: \"states\" must be an integer");
  if (!doc.contains("chains") || !doc["chains"].is_array() || doc["chains"].empty())
    throw SchemaError("instance JSON: \"chains\" must be a nonempty array");

  const int S = doc["states"].get<int>();
  std::vector<Eigen::MatrixXd> matrices;
  for (std::size_t k = 0; k < doc["chains"].size(); ++k) {
    const auto& rows = doc["chains"][k];
    if (!rows.is_array() || static_cast<int>(rows.size()) != S)
      throw SchemaError("instance JSON: chains[" + std::to_string(k) + "] needs " +
                        std::to_string(S) + " rows");
    Eigen::MatrixXd M(S, S);
    for (int x = 0; x < S; ++x) {
      const auto& row = rows[x];
      if (!row.is_array() || static_cast<int>(row.size()) != S)
        throw SchemaError("instance JSON: chains[" + std::to_string(k) + "][" +
                          std::to_string(x) + "] needs " + std::to_string(S) + " entries");
      for (int y = 0; y < S; ++y) {
        if (!row[y].is_number())
          throw SchemaError("instance JSON: chains[" + std::to_string(k) + "][" +
                            std::to_string(x) + "][" + std::to_string(y) + "] is not a number");
        M(x, y) = row[y].get<double>();
      }
    }
    matrices.push_back(std::move(M));
  }

  std::vector<Eigen::VectorXd> initial;
  if (doc.contains("initial_dists")) {
    const auto& dists = doc["initial_dists"];
    if (!dists.is_array())
      throw SchemaError("instance JSON: \"initial_dists\" must be an array");
    for (std::size_t k = 0; k < dists.size(); ++k) {
      const auto& d = dists[k];
      if (!d.is_array() || static_cast<int>(d.size()) != S)
        throw SchemaError("instance JSON: initial_dists[" + std::to_string(k) + "] needs " +
                          std::to_string(S) + " entries");
      Eigen::VectorXd v(S);
      for (int x = 0; x < S; ++x) v(x) = d[x].get<double>();
      initial.push_back(std::move(v));
    }
  }
  return build_instance(matrices, std::move(initial), mode);
}

inline ProblemInstance load_instance_file(const std::string& path,
                                          ChainValidation mode = ChainValidation::RequireErgodic) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open instance file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_instance_json(buf.str(), mode);
}

}  // namespace bamc
