#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "driftlabel/inference.hpp"
#include "driftlabel/io.hpp"

namespace driftlabel {

struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive

    std::size_t size() const { return end - begin; }
};

/// Exact-match accuracy. Throws LengthMismatchError.
double accuracy(const std::vector<int>& y, const std::vector<int>& y_hat);

/// Contiguous ordered folds of near-equal size, remainders front-loaded.
/// Throws TooFewExamplesError when n < folds.
std::vector<IndexRange> fold_split(std::size_t n, std::size_t folds = 5);

/// The t-th rotation (1-based): fold t first, then wrapping around until
/// folds-1 folds are concatenated, preserving within-fold order.
std::vector<std::size_t> test_sequence(const std::vector<IndexRange>& folds,
                                       std::size_t test_index);

/// Contiguous ordered minibatch ranges over a sequence of the given length.
/// Throws TooFewExamplesError when n < num_batches.
std::vector<IndexRange> minibatch_partition(std::size_t n, std::size_t num_batches = 100);

struct BatchMetric {
    std::size_t test = 0;   // fold rotation, 1-based; 0 for single-pass runs
    std::size_t batch = 0;  // 0-based within the test
    std::size_t size = 0;
    double accuracy = 0.0;
    bool skipped = false;
};

struct EvalReport {
    std::vector<BatchMetric> per_batch;
    double mean_accuracy = 0.0;        // mean over non-skipped batches
    std::vector<double> per_test_mean;
    Vector per_source_accuracy;        // fraction correct among non-abstain votes
    double baseline_accuracy = -1.0;   // offline comparison when run; else -1
    RunConfig config;
};

/// A dataset restricted to an ordered index sequence.
struct SequenceView {
    const Dataset* dataset = nullptr;
    std::vector<std::size_t> indices;

    std::size_t size() const { return indices.size(); }
    const Record& at(std::size_t i) const { return dataset->records[indices[i]]; }
};

/// Drives Algorithm 3 over the sequence in minibatches and labels each batch.
/// By default a batch is labeled with the state that already saw it; with
/// config.prequential the state from before the update is used instead.
/// Batches whose estimation fails are skipped and flagged.
EvalReport run_incremental(const SequenceView& sequence, const RunConfig& config,
                           std::size_t num_batches);

/// Offline baseline: one pooled pass (the first-batch pipeline over the whole
/// sequence), then every minibatch is labeled with that single estimate.
EvalReport run_offline_baseline(const SequenceView& sequence, const RunConfig& config,
                                std::size_t num_batches);

/// One run_incremental per alpha, everything else fixed; rows sorted by alpha.
std::vector<std::pair<double, double>> alpha_sweep(const SequenceView& sequence,
                                                   const RunConfig& config,
                                                   std::size_t num_batches,
                                                   const std::vector<double>& alphas);

enum class EvalMode { kIncremental, kBaseline, kSweep };

struct ProtocolResult {
    std::vector<EvalReport> per_test;           // one per fold rotation
    double mean_accuracy = 0.0;                 // across tests
    double baseline_mean = -1.0;                // kBaseline mode only
    std::vector<std::pair<double, double>> sweep;  // kSweep mode only
};

/// The full evaluation protocol: ordered folds, one test per rotation, each
/// partitioned into minibatches. kBaseline also runs the pooled offline pass
/// per test; kSweep repeats the whole protocol per alpha in the grid.
ProtocolResult evaluate_protocol(const Dataset& dataset, const RunConfig& config,
                                 EvalMode mode);

/// Report serialization used by the CLI: one CSV row per batch plus a JSON
/// summary. Deterministic output for identical inputs.
void write_report_csv(std::ostream& out, const ProtocolResult& result);
void write_sweep_csv(std::ostream& out, const ProtocolResult& result);
std::string report_summary_json(const ProtocolResult& result, const RunConfig& config,
                                EvalMode mode);

/// Builds the sequence/labels view used by both runners.
std::vector<int> truths_of(const SequenceView& sequence);

/// Full single-sequence view over a dataset (identity order).
SequenceView whole_dataset(const Dataset& dataset);

}  // namespace driftlabel
