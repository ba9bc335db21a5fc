#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "upgd/fbl.hpp"
#include "upgd/learn.hpp"
#include "upgd/unroll.hpp"

namespace upgd {

inline constexpr int kReportSchemaVersion = 1;

/// Grid search over power splits with MMSE receivers; stand-in for an
/// external convex-programming reference at small K.
struct OracleResult {
  bool feasible = false;
  double wsr = 0.0;  // sum_k alpha_k R(gamma_k) at the best feasible point
  std::vector<double> q;
  Beamformers bf;
  std::size_t evaluated = 0;
};

/// Every q = P * i / grid with nonnegative integer i and sum i <= grid, then a
/// 10x finer local grid around the incumbent. ContractError for K > 3.
OracleResult oracle_wsr(const Realization& real, std::size_t grid);

struct EvalRow {
  std::size_t index = 0;
  double wsr = 0.0;   // objective of the auxiliaries
  double rate = 0.0;  // weighted rate of the SINRs actually achieved
  double vg = 0.0;
  bool feasible = false;  // vg == 0
  std::vector<double> layer_wsr;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::size_t num_feasible = 0;
  double mean_wsr = 0.0;  // over feasible rows; NaN when there are none
  double w2 = 0.0;        // fraction of rows with vg == 0
  std::optional<double> w1;         // percent of the reference WSR
  std::string reference = "none";

  void write_csv(std::ostream& os) const;
  /// JSON document with a schema_version field.
  std::string to_json() const;
};

/// Runs the model on every sample. Violations are measured against the
/// receivers recomputed from the final powers.
EvalReport evaluate(const UsrmNet& model, std::span<const Sample> samples);

/// Same metrics for arbitrary (x, receiver) outputs.
EvalRow evaluate_point(const OptVector& x, const Beamformers& bf, const Realization& real);

/// Aggregates rows into means and ratios.
EvalReport summarize(std::vector<EvalRow> rows);

struct OracleComparison {
  std::size_t compared = 0;      // rows feasible for both model and oracle
  double model_mean = 0.0;
  double oracle_mean = 0.0;
  double ratio = 0.0;            // model_mean / oracle_mean
};

/// Model WSR vs oracle WSR over the samples where the model output has
/// vg == 0 and the oracle finds a feasible point.
OracleComparison compare_with_oracle(const EvalReport& report, std::span<const Sample> samples,
                                     std::size_t grid);

}  // namespace upgd
