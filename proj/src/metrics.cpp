#include "glot/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "glot/error.hpp"

namespace glot {

void PredictionDump::validate() const {
  if (predicted.size() != gold.size()) throw InvalidArgument("PredictionDump: length mismatch");
  if (predicted.empty()) throw InvalidArgument("PredictionDump: empty");
}

namespace {

struct Confusion {
  double tp = 0, tn = 0, fp = 0, fn = 0;
};

Confusion binary_confusion(const PredictionDump& d) {
  d.validate();
  Confusion c;
  for (std::size_t i = 0; i < d.gold.size(); ++i) {
    const double p = d.predicted[i], g = d.gold[i];
    if ((p != 0.0 && p != 1.0) || (g != 0.0 && g != 1.0))
      throw InvalidArgument("binary metric requires labels in {0, 1}");
    if (p == 1.0 && g == 1.0) c.tp += 1;
    else if (p == 0.0 && g == 0.0) c.tn += 1;
    else if (p == 1.0) c.fp += 1;
    else c.fn += 1;
  }
  return c;
}

}  // namespace

double accuracy(const PredictionDump& dump) {
  dump.validate();
  std::size_t hit = 0;
  for (std::size_t i = 0; i < dump.gold.size(); ++i) hit += dump.predicted[i] == dump.gold[i];
  return static_cast<double>(hit) / static_cast<double>(dump.gold.size());
}

double f1_binary(const PredictionDump& dump) {
  const Confusion c = binary_confusion(dump);
  if (c.tp == 0) return 0.0;
  return 2 * c.tp / (2 * c.tp + c.fp + c.fn);
}

double mcc(const PredictionDump& dump) {
  const Confusion c = binary_confusion(dump);
  const double denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn);
  if (denom == 0.0) return 0.0;
  return (c.tp * c.tn - c.fp * c.fn) / std::sqrt(denom);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(const PredictionDump& dump) {
  dump.validate();
  if (dump.gold.size() < 2) throw InvalidArgument("spearman: needs at least 2 items");
  if (std::all_of(dump.gold.begin(), dump.gold.end(), [&](double g) { return g == dump.gold[0]; }))
    throw InvalidArgument("spearman: gold values are constant, correlation undefined");
  const auto rp = average_ranks(dump.predicted);
  const auto rg = average_ranks(dump.gold);
  const double n = static_cast<double>(rp.size());
  const double mp = std::accumulate(rp.begin(), rp.end(), 0.0) / n;
  const double mg = std::accumulate(rg.begin(), rg.end(), 0.0) / n;
  double cov = 0, vp = 0, vg = 0;
  for (std::size_t i = 0; i < rp.size(); ++i) {
    cov += (rp[i] - mp) * (rg[i] - mg);
    vp += (rp[i] - mp) * (rp[i] - mp);
    vg += (rg[i] - mg) * (rg[i] - mg);
  }
  // Constant predictions carry no ranking information.
  if (vp == 0.0) return 0.0;
  return cov / std::sqrt(vp * vg);
}

bool is_known_metric(std::string_view name) {
  return name == "accuracy" || name == "f1" || name == "mcc" || name == "spearman";
}

double compute_metric(std::string_view name, const PredictionDump& dump) {
  if (name == "accuracy") return accuracy(dump);
  if (name == "f1") return f1_binary(dump);
  if (name == "mcc") return mcc(dump);
  if (name == "spearman") return spearman(dump);
  throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

}  // namespace glot
