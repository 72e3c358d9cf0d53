#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rd::metrics {

enum class Metric { Anls, RelaxedAccuracy };

std::string_view to_string(Metric m);
Metric metric_from_string(std::string_view s);

struct MetricReport {
    Metric metric = Metric::Anls;
    std::vector<double> per_example;
    double mean = 0.0;
};

/// Levenshtein distance over Unicode code points.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);

/// Normalized Levenshtein similarity with threshold, maxed over golds.
/// Strings are trimmed and lower-cased before comparison.
double anls(std::string_view pred, const std::vector<std::string>& golds, double tau = 0.5);

/// 1 when both sides parse as numbers within 5% of the gold (exact for a zero
/// gold), otherwise case-insensitive equality of the trimmed strings.
int relaxed_accuracy(std::string_view pred, std::string_view gold);

/// Best relaxed accuracy over several gold answers.
int relaxed_accuracy(std::string_view pred, const std::vector<std::string>& golds);

MetricReport evaluate(Metric metric, const std::vector<std::string>& predictions,
                      const std::vector<std::vector<std::string>>& golds);

}  // namespace rd::metrics
