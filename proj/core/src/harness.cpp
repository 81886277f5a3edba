#include "driftlabel/harness.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <ostream>

#include <json.hpp>

namespace driftlabel {

double accuracy(const std::vector<int>& y, const std::vector<int>& y_hat) {
    if (y.size() != y_hat.size()) throw LengthMismatchError(y.size(), y_hat.size());
    if (y.empty()) throw InputError("accuracy of an empty label set is undefined");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hits += y[i] == y_hat[i];
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

std::vector<IndexRange> fold_split(std::size_t n, std::size_t folds) {
    if (folds < 1) throw InputError("fold count must be >= 1");
    if (n < folds) throw TooFewExamplesError(n, folds);
    std::vector<IndexRange> out;
    out.reserve(folds);
    const std::size_t base = n / folds;
    const std::size_t extra = n % folds;  // front-loaded
    std::size_t at = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        out.push_back({at, at + len});
        at += len;
    }
    return out;
}

std::vector<std::size_t> test_sequence(const std::vector<IndexRange>& folds,
                                       std::size_t test_index) {
    const std::size_t F = folds.size();
    if (test_index < 1 || test_index > F) {
        throw InputError("test index " + std::to_string(test_index) + " outside 1.." +
                         std::to_string(F));
    }
    std::vector<std::size_t> seq;
    for (std::size_t step = 0; step + 1 < F; ++step) {
        const auto& fold = folds[(test_index - 1 + step) % F];
        for (std::size_t i = fold.begin; i < fold.end; ++i) seq.push_back(i);
    }
    return seq;
}

std::vector<IndexRange> minibatch_partition(std::size_t n, std::size_t num_batches) {
    if (num_batches < 1) throw InputError("batch count must be >= 1");
    if (n < num_batches) throw TooFewExamplesError(n, num_batches);
    return fold_split(n, num_batches);
}

std::vector<int> truths_of(const SequenceView& sequence) {
    std::vector<int> y;
    y.reserve(sequence.size());
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        const auto& t = sequence.at(i).true_label;
        if (!t) throw InputError("record " + sequence.at(i).id + " lacks true_label");
        y.push_back(*t);
    }
    return y;
}

SequenceView whole_dataset(const Dataset& dataset) {
    SequenceView v{&dataset, {}};
    v.indices.resize(dataset.records.size());
    for (std::size_t i = 0; i < v.indices.size(); ++i) v.indices[i] = i;
    return v;
}

namespace {

IntMatrix votes_of(const SequenceView& sequence, const IndexRange& range) {
    const int m = sequence.dataset->num_sources;
    IntMatrix votes(range.size(), m);
    for (std::size_t r = 0; r < range.size(); ++r) {
        const Record& rec = sequence.at(range.begin + r);
        for (int j = 0; j < m; ++j) votes(r, j) = rec.labels[j];
    }
    return votes;
}

InferenceModel model_from_state(const EstimatorState& state) {
    InferenceModel model;
    model.num_classes = state.num_classes;
    const int m = state.num_sources;
    model.coverage = state.coverage;
    model.accuracy.resize(state.num_classes, m);
    for (int c = 1; c <= state.num_classes; ++c) {
        const int run = state.num_classes == 2 ? 0 : c - 1;
        for (int i = 0; i < m; ++i) {
            model.accuracy(c - 1, i) = state.coverage(i) > 0.0
                ? correlation_to_accuracy(state.mu[run](i), state.coverage(i))
                : 0.5;
        }
    }
    model.prior.resize(state.num_classes);
    if (state.class_prior.empty()) {
        model.prior.setConstant(1.0 / state.num_classes);
    } else {
        for (int c = 0; c < state.num_classes; ++c) model.prior(c) = state.class_prior[c];
    }
    model.weight = state.structure
        ? InferenceModel::component_weights(*state.structure)
        : Vector::Ones(m);
    return model;
}

double label_range(const SequenceView& sequence, const IndexRange& range,
                   const InferenceModel& model, const std::vector<int>& truths) {
    const int m = sequence.dataset->num_sources;
    std::vector<int> y(truths.begin() + range.begin, truths.begin() + range.end);
    std::vector<int> y_hat;
    y_hat.reserve(range.size());
    IntVector votes(m);
    for (std::size_t r = range.begin; r < range.end; ++r) {
        const Record& rec = sequence.at(r);
        for (int j = 0; j < m; ++j) votes(j) = rec.labels[j];
        y_hat.push_back(posterior(votes, model).hard);
    }
    return accuracy(y, y_hat);
}

Vector source_accuracies(const SequenceView& sequence, const std::vector<int>& truths) {
    const int m = sequence.dataset->num_sources;
    Vector correct = Vector::Zero(m);
    Vector voted = Vector::Zero(m);
    for (std::size_t i = 0; i < sequence.size(); ++i) {
        const Record& rec = sequence.at(i);
        for (int j = 0; j < m; ++j) {
            if (rec.labels[j] != kAbstain) {
                voted(j) += 1.0;
                correct(j) += rec.labels[j] == truths[i];
            }
        }
    }
    Vector acc(m);
    for (int j = 0; j < m; ++j) acc(j) = voted(j) > 0.0 ? correct(j) / voted(j) : 0.0;
    return acc;
}

double mean_over_batches(const std::vector<BatchMetric>& metrics) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& b : metrics) {
        if (!b.skipped) {
            sum += b.accuracy;
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace

EvalReport run_incremental(const SequenceView& sequence, const RunConfig& config,
                           std::size_t num_batches) {
    const LabelDomain domain(config.num_classes);
    const auto ranges = minibatch_partition(sequence.size(), num_batches);
    const auto truths = truths_of(sequence);

    EvalReport report;
    report.config = config;
    EstimatorState state =
        EstimatorState::fresh(config.num_classes, config.alpha, config.class_prior);
    const EstimatorConfig est_config = config.estimator_config();

    for (std::size_t b = 0; b < ranges.size(); ++b) {
        BatchMetric metric{0, b, ranges[b].size(), 0.0, false};
        try {
            const LabelBatch batch = validate_batch(votes_of(sequence, ranges[b]), domain, b);
            // prequential: score with the state from before this batch's update;
            // the very first batch has no prior model either way.
            const bool label_before = config.prequential && state.batches_seen > 0;
            if (label_before) {
                metric.accuracy =
                    label_range(sequence, ranges[b], model_from_state(state), truths);
            }
            BatchOutcome outcome = process_batch(state, batch, est_config);
            state = std::move(outcome.state);
            if (!label_before) {
                metric.accuracy =
                    label_range(sequence, ranges[b], model_from_state(state), truths);
            }
        } catch (const Error&) {
            metric.skipped = true;  // state untouched; stream continues
        }
        report.per_batch.push_back(metric);
    }
    report.mean_accuracy = mean_over_batches(report.per_batch);
    report.per_test_mean = {report.mean_accuracy};
    report.per_source_accuracy = source_accuracies(sequence, truths);
    return report;
}

EvalReport run_offline_baseline(const SequenceView& sequence, const RunConfig& config,
                                std::size_t num_batches) {
    const LabelDomain domain(config.num_classes);
    const auto ranges = minibatch_partition(sequence.size(), num_batches);
    const auto truths = truths_of(sequence);

    EvalReport report;
    report.config = config;
    EstimatorState state =
        EstimatorState::fresh(config.num_classes, config.alpha, config.class_prior);

    const IndexRange whole{0, sequence.size()};
    const LabelBatch pooled = validate_batch(votes_of(sequence, whole), domain, 0);
    BatchOutcome outcome = process_batch(state, pooled, config.estimator_config());
    state = std::move(outcome.state);
    const InferenceModel model = model_from_state(state);

    for (std::size_t b = 0; b < ranges.size(); ++b) {
        BatchMetric metric{0, b, ranges[b].size(), 0.0, false};
        metric.accuracy = label_range(sequence, ranges[b], model, truths);
        report.per_batch.push_back(metric);
    }
    report.mean_accuracy = mean_over_batches(report.per_batch);
    report.per_test_mean = {report.mean_accuracy};
    report.per_source_accuracy = source_accuracies(sequence, truths);
    return report;
}

std::vector<std::pair<double, double>> alpha_sweep(const SequenceView& sequence,
                                                   const RunConfig& config,
                                                   std::size_t num_batches,
                                                   const std::vector<double>& alphas) {
    std::vector<double> grid = alphas;
    std::sort(grid.begin(), grid.end());
    std::vector<std::pair<double, double>> table;
    table.reserve(grid.size());
    for (double a : grid) {
        RunConfig c = config;
        c.alpha = a;
        table.emplace_back(a, run_incremental(sequence, c, num_batches).mean_accuracy);
    }
    return table;
}

ProtocolResult evaluate_protocol(const Dataset& dataset, const RunConfig& config,
                                 EvalMode mode) {
    ProtocolResult result;
    const auto folds = fold_split(dataset.records.size(), config.folds);

    if (mode == EvalMode::kSweep) {
        std::vector<double> grid = config.sweep_alphas;
        std::sort(grid.begin(), grid.end());
        for (double a : grid) {
            RunConfig c = config;
            c.alpha = a;
            const ProtocolResult one = evaluate_protocol(dataset, c, EvalMode::kIncremental);
            result.sweep.emplace_back(a, one.mean_accuracy);
        }
        if (!result.sweep.empty()) {
            double best = 0.0;
            for (const auto& [a, acc] : result.sweep) best = std::max(best, acc);
            result.mean_accuracy = best;
        }
        return result;
    }

    double acc_sum = 0.0;
    double base_sum = 0.0;
    for (std::size_t t = 1; t <= folds.size(); ++t) {
        SequenceView seq{&dataset, test_sequence(folds, t)};
        EvalReport report = run_incremental(seq, config, config.num_batches);
        for (auto& b : report.per_batch) b.test = t;
        if (mode == EvalMode::kBaseline) {
            EvalReport base = run_offline_baseline(seq, config, config.num_batches);
            report.baseline_accuracy = base.mean_accuracy;
            base_sum += base.mean_accuracy;
        }
        acc_sum += report.mean_accuracy;
        result.per_test.push_back(std::move(report));
    }
    result.mean_accuracy = acc_sum / static_cast<double>(folds.size());
    if (mode == EvalMode::kBaseline) {
        result.baseline_mean = base_sum / static_cast<double>(folds.size());
    }
    return result;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

}  // namespace

void write_report_csv(std::ostream& out, const ProtocolResult& result) {
    out << "test,batch,size,accuracy,skipped\n";
    for (const auto& report : result.per_test) {
        for (const auto& b : report.per_batch) {
            out << b.test << ',' << b.batch << ',' << b.size << ',' << fmt(b.accuracy)
                << ',' << (b.skipped ? 1 : 0) << '\n';
        }
    }
}

void write_sweep_csv(std::ostream& out, const ProtocolResult& result) {
    out << "alpha";
    for (const auto& [a, _] : result.sweep) out << ',' << fmt(a);
    out << "\naccuracy";
    for (const auto& [_, acc] : result.sweep) out << ',' << fmt(acc);
    out << '\n';
}

std::string report_summary_json(const ProtocolResult& result, const RunConfig& config,
                                EvalMode mode) {
    nlohmann::json j;
    j["mode"] = mode == EvalMode::kIncremental ? "incremental"
                : mode == EvalMode::kBaseline  ? "baseline"
                                               : "sweep";
    j["mean_accuracy"] = result.mean_accuracy;
    if (mode == EvalMode::kSweep) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& [a, acc] : result.sweep) {
            rows.push_back({{"alpha", a}, {"accuracy", acc}});
        }
        j["sweep"] = rows;
    } else {
        nlohmann::json tests = nlohmann::json::array();
        for (const auto& report : result.per_test) {
            nlohmann::json t;
            t["mean_accuracy"] = report.mean_accuracy;
            if (report.baseline_accuracy >= 0.0) {
                t["baseline_accuracy"] = report.baseline_accuracy;
            }
            std::vector<double> src(report.per_source_accuracy.data(),
                                    report.per_source_accuracy.data() +
                                        report.per_source_accuracy.size());
            t["per_source_accuracy"] = src;
            tests.push_back(std::move(t));
        }
        j["tests"] = tests;
        if (result.baseline_mean >= 0.0) j["baseline_mean_accuracy"] = result.baseline_mean;
    }
    nlohmann::json cfg;
    cfg["classes"] = config.num_classes;
    cfg["alpha"] = config.alpha;
    cfg["batch_size"] = config.batch_size;
    cfg["num_batches"] = config.num_batches;
    cfg["folds"] = config.folds;
    cfg["seed"] = config.seed;
    cfg["prequential"] = config.prequential;
    cfg["eps_rel"] = config.eps_rel;
    if (config.gamma) cfg["gamma"] = *config.gamma;
    if (config.threshold) cfg["threshold"] = *config.threshold;
    cfg["threshold_fraction"] = config.threshold_fraction;
    j["config"] = cfg;
    return j.dump(2);
}

}  // namespace driftlabel
