#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fsl/control.hpp"

namespace fsl {

/// Problem-file rejection carrying every violation found, not just the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

struct EdgeSpec {
  Grid1D grid;
  EdgeCoefficients coeffs;
  Mat source;  // (Nt+1) x nodes or empty
  Vec y0;
  Mat target;  // (Nt+1) x nodes or empty
};

struct ChannelSpec {
  bool dirichlet = false;
  AdmissibleSet admissible;
  double weight = 1.0;
  Vec value;  // Nt+1 samples: forward datum and optimizer start
};

struct RunConfig {
  std::filesystem::path source_file;
  double alpha = 1.0;
  TimeGrid time;
  bool graph = false;  // false: single edge with a Neumann control at b
  int m_split = 1;
  std::vector<EdgeSpec> edges;
  std::vector<ChannelSpec> channels;  // single edge: one; graph: n-1 (edges 2..n)
  OptimOptions optimizer;
  double tikhonov = 1.0;

  EdgeOperator edge_operator() const;
  EdgeControlProblem edge_problem() const;
  StarGraphProblem graph_problem() const;
  GraphControlProblem graph_control() const;
  /// (Nt+1) x channels matrix of the configured control values.
  Mat control_values() const;
};

/// Reads and validates a problem file. Sections are `[edge.<i>]`,
/// `[channel.<i>]` and `[optimizer]`; dotted keys such as `edge.1.a` work
/// outside sections too. Data files are resolved relative to the problem file.
RunConfig parse_config(const std::filesystem::path& path);

/// Comma or whitespace separated numeric table; blank, `#` and non-numeric
/// header lines are skipped.
Mat read_csv_matrix(const std::filesystem::path& path);

}  // namespace fsl
