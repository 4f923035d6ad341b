#pragma once

#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tradenet/matrix.hpp"
#include "tradenet/panel.hpp"

namespace tradenet::preprocess {

struct PipelineConfig {
  double corr_threshold = 0.9;
  double freq_cut = 100.0;  // most-frequent / second-most-frequent ratio
  int knn_k = 5;
  std::set<std::string> exclude_from_scaling = {"year"};
};

using CellRows = std::vector<const std::vector<panel::Cell>*>;

// Fitted preprocessing pipeline: factor handling, greedy correlation filter,
// near-zero-variance filter, k-NN imputation, standardization, dummy
// encoding. All statistics come from the training rows alone; applying the
// pipeline to held-out rows reads nothing from them.
class FittedPipeline {
 public:
  static FittedPipeline fit(const std::vector<std::string>& feature_names,
                            const std::vector<panel::FeatureKind>& kinds, const CellRows& rows,
                            const PipelineConfig& config = {});

  Matrix apply(const CellRows& rows) const;

  const std::vector<std::string>& output_feature_names() const { return output_names_; }
  const std::vector<std::string>& dropped_by_correlation() const { return dropped_corr_; }
  const std::vector<std::string>& dropped_by_nzv() const { return dropped_nzv_; }
  const std::vector<std::string>& surviving_features() const { return survivor_names_; }

  std::string serialize() const;
  static FittedPipeline deserialize(std::istream& in);

 private:
  FittedPipeline() = default;
  void build_output_names();
  std::vector<std::optional<double>> impute_row(
      const std::vector<std::optional<double>>& numerics) const;

  std::vector<std::string> input_names_;
  std::vector<panel::FeatureKind> input_kinds_;
  std::vector<std::string> dropped_corr_, dropped_nzv_;

  // Survivors, in input order. numeric_slot/nominal_slot index into the
  // numeric-only and nominal-only arrays below (-1 when not of that kind).
  std::vector<int> survivor_inputs_;
  std::vector<std::string> survivor_names_;
  std::vector<int> numeric_slot_, nominal_slot_;

  int knn_k_ = 5;
  std::vector<std::uint8_t> scaled_;            // per numeric slot
  std::vector<double> distance_mean_, distance_sd_;  // observed-only stats
  std::vector<double> scale_mean_, scale_sd_;        // post-imputation stats
  std::vector<std::vector<std::optional<double>>> reference_rows_;  // per numeric slot
  std::vector<std::vector<std::string>> categories_;  // per nominal slot, sorted

  std::vector<std::string> output_names_;
};

}  // namespace tradenet::preprocess
