#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dualq/corpus.hpp"

namespace dualq {

/// Rows are gold labels, columns predicted labels, both in `classes` order.
struct ConfusionMatrix {
    std::vector<Label> classes{kAllLabels.begin(), kAllLabels.end()};
    std::vector<std::vector<long>> counts = std::vector<std::vector<long>>(kNumLabels, std::vector<long>(kNumLabels, 0));

    long total() const;
    long trace() const;
    long row_sum(std::size_t i) const;
    long col_sum(std::size_t j) const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long support = 0;
    /// Set when a denominator was zero and the 0 convention was applied.
    bool undefined_precision = false;
    bool undefined_recall = false;

    friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct EvaluationReport {
    ConfusionMatrix cm;
    std::array<ClassMetrics, kNumLabels> per_class{};
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::vector<std::string> warnings;

    const ClassMetrics& of(Label l) const { return per_class[index_of(l)]; }

    friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// Throws ArgumentError when sizes differ or are zero.
EvaluationReport evaluate(std::span<const Label> gold, std::span<const Label> pred);
/// Metrics derived from an existing matrix (used after summing runs).
EvaluationReport report_from_confusion(const ConfusionMatrix& cm);

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;

    friend bool operator==(const MetricSummary&, const MetricSummary&) = default;
};

/// Per-metric mean and sample (n-1) standard deviation; std is 0 when n == 1.
struct RunAggregate {
    std::size_t n = 0;
    std::map<std::string, MetricSummary> metrics;
    ConfusionMatrix summed;

    const MetricSummary& at(const std::string& name) const { return metrics.at(name); }
};

/// Flat metric view: "accuracy", "macro_precision", ..., "dual quality.precision", ...
std::map<std::string, double> flatten_metrics(const EvaluationReport& r);

RunAggregate aggregate_runs(std::span<const EvaluationReport> reports);

/// Element-wise sum; class orders must match.
ConfusionMatrix sum_confusions(std::span<const ConfusionMatrix> cms);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const EvaluationReport& r);
nlohmann::json to_json(const RunAggregate& a);
/// Heat-map friendly CSV: header row of predicted labels, one row per gold label.
std::string to_csv(const ConfusionMatrix& cm);

double sample_std(std::span<const double> xs);

} // namespace dualq
