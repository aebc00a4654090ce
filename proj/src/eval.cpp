#include "dualq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dualq/errors.hpp"

namespace dualq {

long ConfusionMatrix::total() const {
    long t = 0;
    for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
    return t;
}

long ConfusionMatrix::trace() const {
    long t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
}

long ConfusionMatrix::row_sum(std::size_t i) const { return std::accumulate(counts[i].begin(), counts[i].end(), 0L); }

long ConfusionMatrix::col_sum(std::size_t j) const {
    long t = 0;
    for (const auto& row : counts) t += row[j];
    return t;
}

EvaluationReport report_from_confusion(const ConfusionMatrix& cm) {
    EvaluationReport r;
    r.cm = cm;
    const auto k = cm.classes.size();
    const long total = cm.total();
    r.accuracy = total > 0 ? static_cast<double>(cm.trace()) / static_cast<double>(total) : 0.0;
    for (std::size_t i = 0; i < k && i < kNumLabels; ++i) {
        auto& m = r.per_class[index_of(cm.classes[i])];
        const long tp = cm.counts[i][i];
        const long predicted = cm.col_sum(i);
        const long gold = cm.row_sum(i);
        m.support = gold;
        const auto name = std::string(to_string(cm.classes[i]));
        if (predicted > 0) {
            m.precision = static_cast<double>(tp) / static_cast<double>(predicted);
        } else {
            m.undefined_precision = true;
            r.warnings.push_back(name + ": no predictions, precision set to 0");
        }
        if (gold > 0) {
            m.recall = static_cast<double>(tp) / static_cast<double>(gold);
        } else {
            m.undefined_recall = true;
            r.warnings.push_back(name + ": no gold support, recall set to 0");
        }
        m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
    }
    if (k > 0) {
        r.macro_precision /= static_cast<double>(k);
        r.macro_recall /= static_cast<double>(k);
        r.macro_f1 /= static_cast<double>(k);
    }
    return r;
}

EvaluationReport evaluate(std::span<const Label> gold, std::span<const Label> pred) {
    if (gold.size() != pred.size()) {
        throw ArgumentError("gold has " + std::to_string(gold.size()) + " labels but pred has " +
                            std::to_string(pred.size()));
    }
    if (gold.empty()) throw ArgumentError("cannot evaluate an empty set");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < gold.size(); ++i) ++cm.counts[index_of(gold[i])][index_of(pred[i])];
    return report_from_confusion(cm);
}

std::map<std::string, double> flatten_metrics(const EvaluationReport& r) {
    std::map<std::string, double> m = {
        {"accuracy", r.accuracy},
        {"macro_precision", r.macro_precision},
        {"macro_recall", r.macro_recall},
        {"macro_f1", r.macro_f1},
    };
    for (auto l : kAllLabels) {
        const auto prefix = std::string(to_string(l)) + ".";
        m[prefix + "precision"] = r.of(l).precision;
        m[prefix + "recall"] = r.of(l).recall;
        m[prefix + "f1"] = r.of(l).f1;
    }
    return m;
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

RunAggregate aggregate_runs(std::span<const EvaluationReport> reports) {
    if (reports.empty()) throw ArgumentError("aggregate_runs needs at least one report");
    RunAggregate agg;
    agg.n = reports.size();
    std::map<std::string, std::vector<double>> values;
    std::vector<ConfusionMatrix> cms;
    for (const auto& r : reports) {
        for (const auto& [k, v] : flatten_metrics(r)) values[k].push_back(v);
        cms.push_back(r.cm);
    }
    for (const auto& [k, xs] : values) {
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        // identical runs must give exactly 0, not rounding noise
        const bool constant = std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
        agg.metrics[k] = {constant ? xs.front() : mean, constant ? 0.0 : sample_std(xs)};
    }
    agg.summed = sum_confusions(cms);
    return agg;
}

ConfusionMatrix sum_confusions(std::span<const ConfusionMatrix> cms) {
    if (cms.empty()) throw ArgumentError("sum_confusions needs at least one matrix");
    ConfusionMatrix out = cms.front();
    for (std::size_t m = 1; m < cms.size(); ++m) {
        const auto& cm = cms[m];
        if (cm.classes != out.classes) throw ArgumentError("confusion matrices have different class orders");
        for (std::size_t i = 0; i < out.counts.size(); ++i) {
            for (std::size_t j = 0; j < out.counts[i].size(); ++j) out.counts[i][j] += cm.counts[i][j];
        }
    }
    return out;
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
    nlohmann::json classes = nlohmann::json::array();
    for (auto l : cm.classes) classes.push_back(to_string(l));
    return {{"classes", classes}, {"counts", cm.counts}};
}

nlohmann::json to_json(const EvaluationReport& r) {
    nlohmann::json per_class = nlohmann::json::object();
    for (auto l : kAllLabels) {
        const auto& m = r.of(l);
        per_class[std::string(to_string(l))] = {
            {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
    }
    return {{"confusion", to_json(r.cm)},
            {"per_class", per_class},
            {"accuracy", r.accuracy},
            {"macro_precision", r.macro_precision},
            {"macro_recall", r.macro_recall},
            {"macro_f1", r.macro_f1},
            {"warnings", r.warnings}};
}

nlohmann::json to_json(const RunAggregate& a) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [k, s] : a.metrics) metrics[k] = {{"mean", s.mean}, {"std", s.std}};
    return {{"n", a.n}, {"metrics", metrics}, {"summed_confusion", to_json(a.summed)}};
}

std::string to_csv(const ConfusionMatrix& cm) {
    std::string out = "gold\\predicted";
    for (auto l : cm.classes) out += "," + std::string(to_string(l));
    out += '\n';
    for (std::size_t i = 0; i < cm.classes.size(); ++i) {
        out += to_string(cm.classes[i]);
        for (long c : cm.counts[i]) out += "," + std::to_string(c);
        out += '\n';
    }
    return out;
}

} // namespace dualq
