#include "tradenet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

#include "tradenet/common.hpp"

namespace tradenet::preprocess {

using panel::Cell;
using panel::FeatureKind;

namespace {

// Pearson r over pairwise-complete observations; 0 when fewer than 2
// complete pairs or a degenerate variance.
double pairwise_pearson(const std::vector<std::optional<double>>& a,
                        const std::vector<std::optional<double>>& b) {
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i] || !b[i]) continue;
    const double x = *a[i], y = *b[i];
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double nd = static_cast<double>(n);
  const double vx = sxx - sx * sx / nd;
  const double vy = syy - sy * sy / nd;
  if (vx <= 0.0 || vy <= 0.0) return 0.0;
  return (sxy - sx * sy / nd) / std::sqrt(vx * vy);
}

struct ObservedStats {
  double mean = 0.0;
  double sd = 1.0;
  std::size_t count = 0;
};

ObservedStats observed_stats(const std::vector<std::optional<double>>& column) {
  ObservedStats s;
  double sum = 0.0;
  for (const auto& v : column)
    if (v) {
      sum += *v;
      ++s.count;
    }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<double>(s.count);
  double ss = 0.0;
  for (const auto& v : column)
    if (v) ss += (*v - s.mean) * (*v - s.mean);
  s.sd = s.count > 1 ? std::sqrt(ss / static_cast<double>(s.count - 1)) : 0.0;
  if (s.sd == 0.0) s.sd = 1.0;
  return s;
}

}  // namespace

FittedPipeline FittedPipeline::fit(const std::vector<std::string>& feature_names,
                                   const std::vector<FeatureKind>& kinds, const CellRows& rows,
                                   const PipelineConfig& config) {
  if (rows.size() < 2) throw ConfigError("pipeline fit needs at least 2 training rows");
  const std::size_t p = feature_names.size();

  FittedPipeline pipe;
  pipe.input_names_ = feature_names;
  pipe.input_kinds_ = kinds;
  pipe.knn_k_ = config.knn_k;

  // Columns as optional doubles (numeric) for the filters.
  std::vector<std::vector<std::optional<double>>> numeric_cols(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (kinds[j] != FeatureKind::kNumeric) continue;
    numeric_cols[j].resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Cell& cell = (*rows[i])[j];
      if (!cell.is_missing()) numeric_cols[j][i] = cell.number_value();
    }
  }

  std::vector<bool> alive(p, true);

  // Greedy correlation filter: repeatedly take the worst offending pair and
  // drop the member with the larger mean |r| against everything else.
  {
    std::vector<std::size_t> numeric_idx;
    for (std::size_t j = 0; j < p; ++j)
      if (kinds[j] == FeatureKind::kNumeric) numeric_idx.push_back(j);
    const std::size_t q = numeric_idx.size();
    std::vector<std::vector<double>> absr(q, std::vector<double>(q, 0.0));
    for (std::size_t a = 0; a < q; ++a)
      for (std::size_t b = a + 1; b < q; ++b)
        absr[a][b] = absr[b][a] =
            std::abs(pairwise_pearson(numeric_cols[numeric_idx[a]], numeric_cols[numeric_idx[b]]));

    std::vector<bool> active(q, true);
    for (;;) {
      double worst = config.corr_threshold;
      int wa = -1, wb = -1;
      for (std::size_t a = 0; a < q; ++a) {
        if (!active[a]) continue;
        for (std::size_t b = a + 1; b < q; ++b) {
          if (!active[b]) continue;
          if (absr[a][b] > worst) {
            worst = absr[a][b];
            wa = static_cast<int>(a);
            wb = static_cast<int>(b);
          }
        }
      }
      if (wa < 0) break;
      auto mean_abs = [&](int idx) {
        double total = 0.0;
        std::size_t n = 0;
        for (std::size_t o = 0; o < q; ++o) {
          if (!active[o] || static_cast<int>(o) == idx) continue;
          total += absr[idx][o];
          ++n;
        }
        return n ? total / static_cast<double>(n) : 0.0;
      };
      const int drop = mean_abs(wa) >= mean_abs(wb) ? wa : wb;
      active[drop] = false;
      alive[numeric_idx[drop]] = false;
      pipe.dropped_corr_.push_back(feature_names[numeric_idx[drop]]);
    }
  }

  // Near-zero-variance filter on frequency ratios (numerics binned by exact
  // value). A feature with fewer than two distinct observed values drops.
  for (std::size_t j = 0; j < p; ++j) {
    if (!alive[j]) continue;
    std::map<std::string, std::size_t> freq;
    for (const auto* row : rows) {
      const Cell& cell = (*row)[j];
      if (cell.is_missing()) continue;
      if (cell.is_number()) ++freq[format_double(cell.number_value())];
      else ++freq[cell.label_value()];
    }
    std::size_t first = 0, second = 0;
    for (const auto& [value, count] : freq) {
      if (count >= first) {
        second = first;
        first = count;
      } else if (count > second) {
        second = count;
      }
    }
    const bool degenerate = freq.size() < 2;
    const double ratio = second == 0 ? std::numeric_limits<double>::infinity()
                                     : static_cast<double>(first) / static_cast<double>(second);
    if (degenerate || ratio > config.freq_cut) {
      alive[j] = false;
      pipe.dropped_nzv_.push_back(feature_names[j]);
    }
  }

  pipe.numeric_slot_.assign(p, -1);
  pipe.nominal_slot_.assign(p, -1);
  for (std::size_t j = 0; j < p; ++j) {
    if (!alive[j]) continue;
    pipe.survivor_inputs_.push_back(static_cast<int>(j));
    pipe.survivor_names_.push_back(feature_names[j]);
    if (kinds[j] == FeatureKind::kNumeric) {
      pipe.numeric_slot_[j] = static_cast<int>(pipe.distance_mean_.size());
      const auto stats = observed_stats(numeric_cols[j]);
      pipe.distance_mean_.push_back(stats.mean);
      pipe.distance_sd_.push_back(stats.sd);
      pipe.scaled_.push_back(config.exclude_from_scaling.count(feature_names[j]) ? 0 : 1);
    } else {
      pipe.nominal_slot_[j] = static_cast<int>(pipe.categories_.size());
      std::set<std::string> cats;
      for (const auto* row : rows) {
        const Cell& cell = (*row)[j];
        if (!cell.is_missing()) cats.insert(cell.label_value());
      }
      pipe.categories_.emplace_back(cats.begin(), cats.end());
    }
  }
  if (pipe.survivor_inputs_.empty()) throw RuntimeFailure("pipeline: all features dropped");

  // Imputation reference set: surviving numeric cells of every training row.
  const std::size_t n_numeric = pipe.distance_mean_.size();
  pipe.reference_rows_.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    pipe.reference_rows_[i].resize(n_numeric);
    for (std::size_t j = 0; j < p; ++j) {
      const int slot = pipe.numeric_slot_[j];
      if (slot < 0) continue;
      const Cell& cell = (*rows[i])[j];
      if (!cell.is_missing()) pipe.reference_rows_[i][slot] = cell.number_value();
    }
  }

  // Scaling statistics describe the imputed training matrix: apply() on the
  // training rows must z-score to exactly mean 0, sd 1.
  pipe.scale_mean_.assign(n_numeric, 0.0);
  pipe.scale_sd_.assign(n_numeric, 1.0);
  std::vector<std::vector<double>> imputed(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto filled = pipe.impute_row(pipe.reference_rows_[i]);
    imputed[i].resize(n_numeric);
    for (std::size_t s = 0; s < n_numeric; ++s)
      imputed[i][s] = filled[s] ? *filled[s] : 0.0;
  }
  for (std::size_t s = 0; s < n_numeric; ++s) {
    double sum = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) sum += imputed[i][s];
    const double mean = sum / static_cast<double>(rows.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
      ss += (imputed[i][s] - mean) * (imputed[i][s] - mean);
    double sd = rows.size() > 1 ? std::sqrt(ss / static_cast<double>(rows.size() - 1)) : 0.0;
    if (sd == 0.0) sd = 1.0;
    pipe.scale_mean_[s] = mean;
    pipe.scale_sd_[s] = sd;
  }

  pipe.build_output_names();
  return pipe;
}

std::vector<std::optional<double>> FittedPipeline::impute_row(
    const std::vector<std::optional<double>>& numerics) const {
  const std::size_t n_numeric = numerics.size();
  bool any_observed = false;
  for (const auto& v : numerics)
    if (v) any_observed = true;
  if (!any_observed && n_numeric > 0) throw RuntimeFailure("unimputable row: every numeric missing");

  auto result = numerics;
  for (std::size_t target = 0; target < n_numeric; ++target) {
    if (result[target]) continue;
    // k nearest donors holding the target, by Euclidean distance over the
    // mutually observed standardized numerics. Ties go to the lower index.
    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t r = 0; r < reference_rows_.size(); ++r) {
      const auto& ref = reference_rows_[r];
      if (!ref[target]) continue;
      double dist2 = 0.0;
      bool overlap = false;
      for (std::size_t s = 0; s < n_numeric; ++s) {
        if (!numerics[s] || !ref[s]) continue;
        const double d = (*numerics[s] - *ref[s]) / distance_sd_[s];
        dist2 += d * d;
        overlap = true;
      }
      candidates.emplace_back(overlap ? dist2 : std::numeric_limits<double>::infinity(), r);
    }
    if (candidates.empty()) continue;  // cannot happen for surviving features
    std::sort(candidates.begin(), candidates.end());
    const std::size_t take = std::min<std::size_t>(knn_k_, candidates.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < take; ++t) sum += *reference_rows_[candidates[t].second][target];
    result[target] = sum / static_cast<double>(take);
  }
  return result;
}

Matrix FittedPipeline::apply(const CellRows& rows) const {
  const std::size_t n_numeric = scale_mean_.size();
  Matrix out(rows.size(), output_names_.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = *rows[i];
    if (row.size() != input_names_.size())
      throw RuntimeFailure("pipeline apply: row width does not match panel schema");

    std::vector<std::optional<double>> numerics(n_numeric);
    for (std::size_t j = 0; j < input_names_.size(); ++j) {
      const int slot = numeric_slot_[j];
      if (slot < 0) continue;
      const Cell& cell = row[j];
      if (!cell.is_missing()) numerics[slot] = cell.number_value();
    }
    const auto filled = impute_row(numerics);

    std::size_t col = 0;
    for (const int j : survivor_inputs_) {
      const int nslot = numeric_slot_[j];
      if (nslot >= 0) {
        double v = filled[nslot] ? *filled[nslot] : 0.0;
        if (scaled_[nslot]) v = (v - scale_mean_[nslot]) / scale_sd_[nslot];
        out(i, col++) = v;
      } else {
        const auto& cats = categories_[nominal_slot_[j]];
        const Cell& cell = row[j];
        for (const auto& cat : cats) {
          out(i, col++) =
              (!cell.is_missing() && !cell.is_number() && cell.label_value() == cat) ? 1.0 : 0.0;
        }
      }
    }
  }
  return out;
}

void FittedPipeline::build_output_names() {
  output_names_.clear();
  for (const int j : survivor_inputs_) {
    if (numeric_slot_[j] >= 0) {
      output_names_.push_back(input_names_[j]);
    } else {
      for (const auto& cat : categories_[nominal_slot_[j]])
        output_names_.push_back(input_names_[j] + "=" + cat);
    }
  }
}

std::string FittedPipeline::serialize() const {
  nlohmann::json j;
  j["version"] = 1;
  j["input_names"] = input_names_;
  std::vector<int> kinds;
  for (const auto k : input_kinds_) kinds.push_back(k == FeatureKind::kNumeric ? 0 : 1);
  j["input_kinds"] = kinds;
  j["dropped_correlation"] = dropped_corr_;
  j["dropped_nzv"] = dropped_nzv_;
  j["survivor_inputs"] = survivor_inputs_;
  j["knn_k"] = knn_k_;
  j["scaled"] = scaled_;
  j["distance_mean"] = distance_mean_;
  j["distance_sd"] = distance_sd_;
  j["scale_mean"] = scale_mean_;
  j["scale_sd"] = scale_sd_;
  j["categories"] = categories_;
  nlohmann::json refs = nlohmann::json::array();
  for (const auto& row : reference_rows_) {
    nlohmann::json jrow = nlohmann::json::array();
    for (const auto& v : row) {
      if (v) jrow.push_back(*v);
      else jrow.push_back(nullptr);
    }
    refs.push_back(std::move(jrow));
  }
  j["reference_rows"] = std::move(refs);
  return j.dump(2);
}

FittedPipeline FittedPipeline::deserialize(std::istream& in) {
  nlohmann::json j;
  in >> j;
  if (j.value("version", 0) != 1) throw ConfigError("pipeline file: unsupported version");
  FittedPipeline pipe;
  pipe.input_names_ = j.at("input_names").get<std::vector<std::string>>();
  for (const int k : j.at("input_kinds").get<std::vector<int>>())
    pipe.input_kinds_.push_back(k == 0 ? FeatureKind::kNumeric : FeatureKind::kNominal);
  pipe.dropped_corr_ = j.at("dropped_correlation").get<std::vector<std::string>>();
  pipe.dropped_nzv_ = j.at("dropped_nzv").get<std::vector<std::string>>();
  pipe.survivor_inputs_ = j.at("survivor_inputs").get<std::vector<int>>();
  pipe.knn_k_ = j.at("knn_k").get<int>();
  pipe.scaled_ = j.at("scaled").get<std::vector<std::uint8_t>>();
  pipe.distance_mean_ = j.at("distance_mean").get<std::vector<double>>();
  pipe.distance_sd_ = j.at("distance_sd").get<std::vector<double>>();
  pipe.scale_mean_ = j.at("scale_mean").get<std::vector<double>>();
  pipe.scale_sd_ = j.at("scale_sd").get<std::vector<double>>();
  pipe.categories_ = j.at("categories").get<std::vector<std::vector<std::string>>>();
  for (const auto& jrow : j.at("reference_rows")) {
    std::vector<std::optional<double>> row;
    for (const auto& v : jrow) {
      if (v.is_null()) row.emplace_back();
      else row.emplace_back(v.get<double>());
    }
    pipe.reference_rows_.push_back(std::move(row));
  }

  const std::size_t p = pipe.input_names_.size();
  pipe.numeric_slot_.assign(p, -1);
  pipe.nominal_slot_.assign(p, -1);
  int nnum = 0, nnom = 0;
  for (const int j_in : pipe.survivor_inputs_) {
    pipe.survivor_names_.push_back(pipe.input_names_[j_in]);
    if (pipe.input_kinds_[j_in] == FeatureKind::kNumeric) pipe.numeric_slot_[j_in] = nnum++;
    else pipe.nominal_slot_[j_in] = nnom++;
  }
  pipe.build_output_names();
  return pipe;
}

}  // namespace tradenet::preprocess
