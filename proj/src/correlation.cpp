#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include "decompeval/errors.hpp"
#include "decompeval/metaeval.hpp"

namespace decompeval {

std::string_view to_string(Coefficient coefficient) {
  switch (coefficient) {
    case Coefficient::pearson: return "pearson";
    case Coefficient::spearman: return "spearman";
    case Coefficient::kendall: return "kendall";
  }
  return "pearson";
}

std::string_view to_string(Granularity granularity) {
  return granularity == Granularity::grouped ? "grouped" : "pooled";
}

Coefficient parse_coefficient(std::string_view name) {
  if (name == "pearson") return Coefficient::pearson;
  if (name == "spearman") return Coefficient::spearman;
  if (name == "kendall" || name == "kendall_tau_b") return Coefficient::kendall;
  throw ConfigError("unknown coefficient '" + std::string(name) + "'");
}

Granularity parse_granularity(std::string_view name) {
  if (name == "pooled" || name == "turn") return Granularity::pooled;
  if (name == "grouped" || name == "summary") return Granularity::grouped;
  throw ConfigError("unknown granularity '" + std::string(name) + "'");
}

namespace {

void check_inputs(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DegenerateInputError("inputs differ in length");
  if (xs.size() < 2) throw DegenerateInputError("need at least two points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw DegenerateInputError("non-finite value in correlation input");
    }
  }
}

bool constant(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); });
}

double clamp_unit(double r) { return std::clamp(r, -1.0, 1.0); }

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
  check_inputs(xs, ys);
  if (constant(xs) || constant(ys)) throw DegenerateInputError("zero variance input");
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  return clamp_unit(sxy / std::sqrt(sxx * syy));
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
    // positions i..j (0-based) share rank mean((i+1)..(j+1))
    const double rank = (static_cast<double>(i + j) / 2.0) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  check_inputs(xs, ys);
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

namespace {

std::int64_t tie_pairs(std::int64_t run) { return run * (run - 1) / 2; }

// Sorts `ys` ascending, returning the number of strict inversions.
std::int64_t merge_count(std::vector<double>& ys, std::vector<double>& scratch, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(ys, scratch, lo, mid) + merge_count(ys, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (ys[i] <= ys[j]) {
      scratch[k++] = ys[i++];
    } else {
      swaps += static_cast<std::int64_t>(mid - i);
      scratch[k++] = ys[j++];
    }
  }
  while (i < mid) scratch[k++] = ys[i++];
  while (j < hi) scratch[k++] = ys[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            ys.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

double kendall_tau_b(std::span<const double> xs, std::span<const double> ys) {
  check_inputs(xs, ys);
  const std::size_t n = xs.size();
  std::vector<std::pair<double, double>> points(n);
  for (std::size_t i = 0; i < n; ++i) points[i] = {xs[i], ys[i]};
  std::sort(points.begin(), points.end());

  const auto total = tie_pairs(static_cast<std::int64_t>(n));
  std::int64_t x_ties = 0, joint_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && points[j].first == points[i].first) ++j;
    x_ties += tie_pairs(static_cast<std::int64_t>(j - i));
    for (std::size_t a = i; a < j;) {
      std::size_t b = a;
      while (b < j && points[b].second == points[a].second) ++b;
      joint_ties += tie_pairs(static_cast<std::int64_t>(b - a));
      a = b;
    }
    i = j;
  }

  std::vector<double> sorted_y(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) sorted_y[i] = points[i].second;
  const std::int64_t swaps = merge_count(sorted_y, scratch, 0, n);

  std::int64_t y_ties = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && sorted_y[j] == sorted_y[i]) ++j;
    y_ties += tie_pairs(static_cast<std::int64_t>(j - i));
    i = j;
  }

  if (total == x_ties || total == y_ties) {
    throw DegenerateInputError("all pairs tied on one variable");
  }
  const auto numerator = static_cast<double>(total - x_ties - y_ties + joint_ties - 2 * swaps);
  // sqrt(a * b) rather than sqrt(a) * sqrt(b): exact when a == b.
  const double denominator =
      std::sqrt(static_cast<double>(total - x_ties) * static_cast<double>(total - y_ties));
  return clamp_unit(numerator / denominator);
}

double correlation(Coefficient coefficient, std::span<const double> xs,
                   std::span<const double> ys) {
  switch (coefficient) {
    case Coefficient::pearson: return pearson(xs, ys);
    case Coefficient::spearman: return spearman(xs, ys);
    case Coefficient::kendall: return kendall_tau_b(xs, ys);
  }
  throw ConfigError("unknown coefficient");
}

GroupedCorrelation grouped_correlation(std::span<const GroupedPair> pairs,
                                       Coefficient coefficient) {
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
  for (const auto& pair : pairs) {
    auto& [metric, human] = groups[pair.group_id];
    metric.push_back(pair.metric);
    human.push_back(pair.human);
  }
  GroupedCorrelation out;
  double sum = 0.0;
  for (const auto& [group, values] : groups) {
    try {
      sum += correlation(coefficient, values.first, values.second);
      ++out.groups_used;
    } catch (const DegenerateInputError&) {
      ++out.groups_skipped;
    }
  }
  if (out.groups_used == 0) {
    throw DegenerateInputError("no group with at least two members and nonzero variance");
  }
  out.value = sum / static_cast<double>(out.groups_used);
  return out;
}

}  // namespace decompeval
