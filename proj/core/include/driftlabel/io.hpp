#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "driftlabel/estimator.hpp"
#include "driftlabel/synthgen.hpp"

namespace driftlabel {

/// Current on-disk state snapshot format. Loading a newer version fails loudly.
constexpr int kStateFormatVersion = 1;

/// One input example: a vote per source plus an optional ground-truth label.
struct Record {
    std::string id;
    std::vector<int> labels;
    std::optional<int> true_label;
};

/// Streamed dataset in memory, all records sharing one source count.
struct Dataset {
    std::vector<Record> records;
    int num_sources = 0;

    bool all_have_truth() const;
};

/// Parses one JSONL record; line_number is 1-based and used in error messages.
Record parse_record(const std::string& line, std::size_t line_number);

/// Reads a whole JSONL stream. Throws InputError (with line number) on the
/// first malformed record or on inconsistent source counts; empty input is an
/// error too.
Dataset read_jsonl(std::istream& in);
Dataset read_jsonl_file(const std::filesystem::path& path);

void write_records(std::ostream& out, const std::vector<Record>& records);

/// Versioned estimator-state snapshot. save_state writes to a temp file in the
/// same directory and renames it over the target, so a crash never leaves a
/// half-written snapshot behind.
void save_state(const EstimatorState& state, const std::filesystem::path& path);
EstimatorState load_state(const std::filesystem::path& path);

/// All free parameters of the pipeline plus stream-level knobs. Values come
/// from a flat dotted-key config file; command-line flags override them.
struct RunConfig {
    int num_classes = 2;
    double alpha = 0.05;
    std::optional<double> gamma;      // pcp l1 weight; unset -> 1/sqrt(m)
    std::optional<double> threshold;  // absolute edge threshold; unset -> auto
    double threshold_fraction = 0.25;
    double pcp_tol = 1e-7;
    std::size_t pcp_max_iter = 1000;
    double pcp_rho = 1.0;
    double fit_tol = 1e-8;
    std::size_t fit_max_iter = 5000;
    double eps_rel = 1e-6;
    std::vector<double> class_prior;  // empty -> uninformative
    std::size_t batch_size = 500;
    std::uint64_t seed = 0;
    bool prequential = false;
    std::size_t folds = 5;
    std::size_t num_batches = 100;
    std::vector<double> sweep_alphas = {0.001, 0.01, 0.025, 0.05, 0.1, 0.25};

    EstimatorConfig estimator_config() const;
    void validate() const;
};

/// Parses `key = value` lines; '#' starts a comment. Unknown keys are errors.
RunConfig parse_config(std::istream& in, RunConfig base = {});
RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base = {});

/// Synthetic-generator spec as a JSON document.
SyntheticSpec parse_synthetic_spec(std::istream& in);
SyntheticSpec parse_synthetic_spec_file(const std::filesystem::path& path);

}  // namespace driftlabel
