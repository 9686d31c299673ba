#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace glot {

/// Paired predictions and gold values. Classification dumps hold class ids
/// as doubles; regression dumps hold raw scores.
struct PredictionDump {
  std::vector<double> predicted;
  std::vector<double> gold;

  void validate() const;
};

double accuracy(const PredictionDump& dump);
/// F1 of the positive class (label 1); 0 when there are no true positives.
double f1_binary(const PredictionDump& dump);
/// Matthews correlation; 0 when any confusion-matrix marginal is zero.
double mcc(const PredictionDump& dump);
/// Spearman rank correlation with average ranks for ties.
double spearman(const PredictionDump& dump);

/// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

double compute_metric(std::string_view name, const PredictionDump& dump);
bool is_known_metric(std::string_view name);

}  // namespace glot
