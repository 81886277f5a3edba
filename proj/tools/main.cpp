// driftlabel: streaming weak-supervision label model.
//
// Subcommands:
//   simulate    draw a synthetic dataset from a generator spec
//   fit-stream  consume JSONL votes in batches, maintaining a state snapshot
//   label       emit posterior labels for JSONL votes using a state snapshot
//   evaluate    run the folded evaluation protocol over a labeled dataset
//
// Exit codes: 0 success, 2 malformed input, 3 estimator failure,
//             4 missing/incompatible state.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftlabel/harness.hpp"
#include "driftlabel/io.hpp"

namespace dl = driftlabel;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitEstimator = 3;
constexpr int kExitBadState = 4;

enum class LogLevel { kQuiet = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
    const char* env = std::getenv("DRIFTLABEL_LOG");
    if (!env) return LogLevel::kInfo;
    const std::string v(env);
    if (v == "quiet" || v == "0") return LogLevel::kQuiet;
    if (v == "debug" || v == "2") return LogLevel::kDebug;
    return LogLevel::kInfo;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::kInfo) std::cerr << "driftlabel: " << msg << '\n';
}

// Flag values staged before merging over the config file (flags win).
struct FlagOverrides {
    std::optional<double> alpha;
    std::optional<std::string> gamma;
    std::optional<std::string> threshold;
    std::optional<std::size_t> batch_size;
    std::optional<std::uint64_t> seed;
    std::optional<int> classes;
    bool prequential = false;
};

dl::RunConfig resolve_config(const std::optional<std::string>& config_path,
                             const FlagOverrides& flags) {
    dl::RunConfig cfg;
    if (config_path) cfg = dl::parse_config_file(*config_path, cfg);
    if (flags.alpha) cfg.alpha = *flags.alpha;
    if (flags.gamma) {
        cfg.gamma = *flags.gamma == "auto" ? std::nullopt
                                           : std::optional<double>(std::stod(*flags.gamma));
    }
    if (flags.threshold) {
        cfg.threshold = *flags.threshold == "auto"
                            ? std::nullopt
                            : std::optional<double>(std::stod(*flags.threshold));
    }
    if (flags.batch_size) cfg.batch_size = *flags.batch_size;
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.classes) cfg.num_classes = *flags.classes;
    if (flags.prequential) cfg.prequential = true;
    cfg.validate();
    return cfg;
}

// Advisory single-writer lock; released when the fd closes at process exit.
int acquire_state_lock(const fs::path& state_path) {
    const fs::path lock_path = state_path.string() + ".lock";
    const int fd = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
    if (fd < 0) throw dl::InputError("cannot open lock file: " + lock_path.string());
    if (::flock(fd, LOCK_EX | LOCK_NB) != 0) {
        ::close(fd);
        throw dl::InputError("state file is locked by another fit-stream process: " +
                             state_path.string());
    }
    return fd;
}

dl::Dataset read_input(const std::string& input) {
    if (input == "-") return dl::read_jsonl(std::cin);
    return dl::read_jsonl_file(input);
}

int cmd_simulate(const std::string& spec_path, std::size_t n, const std::string& output,
                 std::optional<std::uint64_t> seed_flag,
                 std::optional<std::size_t> batch_size_flag) {
    dl::SyntheticSpec spec = dl::parse_synthetic_spec_file(spec_path);
    if (seed_flag) spec.seed = *seed_flag;
    // drift events are keyed by batch index; the batch size fixes where they land
    const std::size_t batch_size = batch_size_flag.value_or(500);

    std::ofstream out(output);
    if (!out) throw dl::InputError("cannot open output file: " + output);

    std::size_t written = 0;
    std::size_t batch_index = 0;
    while (written < n) {
        const std::size_t take = std::min(batch_size, n - written);
        const dl::GeneratedBatch gen = dl::generate(spec, take, batch_index);
        std::vector<dl::Record> records(take);
        for (std::size_t i = 0; i < take; ++i) {
            records[i].id = std::to_string(written + i);
            records[i].true_label = gen.truth[i];
            records[i].labels.resize(spec.m);
            for (int j = 0; j < spec.m; ++j) {
                records[i].labels[j] = gen.batch.votes()(static_cast<Eigen::Index>(i), j);
            }
        }
        dl::write_records(out, records);
        written += take;
        ++batch_index;
    }
    log_info("wrote " + std::to_string(written) + " records to " + output);
    return kExitOk;
}

int cmd_fit_stream(const std::string& input, const std::string& state_path,
                   const dl::RunConfig& cfg) {
    const int lock_fd = acquire_state_lock(state_path);
    (void)lock_fd;

    dl::EstimatorState state;
    if (fs::exists(state_path)) {
        state = dl::load_state(state_path);
        if (state.num_classes != cfg.num_classes) {
            throw dl::StateIncompatibleError(
                "state has k = " + std::to_string(state.num_classes) +
                ", config asks for k = " + std::to_string(cfg.num_classes));
        }
        log_info("resuming from " + state_path + " at batch " +
                 std::to_string(state.batches_seen));
    } else {
        state = dl::EstimatorState::fresh(cfg.num_classes, cfg.alpha, cfg.class_prior);
    }

    const dl::Dataset ds = read_input(input);
    const dl::LabelDomain domain(cfg.num_classes);
    const dl::EstimatorConfig est = cfg.estimator_config();

    const std::size_t n = ds.records.size();
    std::size_t at = 0;
    while (at < n) {
        const std::size_t take = std::min(cfg.batch_size, n - at);
        dl::IntMatrix votes(take, ds.num_sources);
        for (std::size_t i = 0; i < take; ++i) {
            for (int j = 0; j < ds.num_sources; ++j) {
                votes(static_cast<Eigen::Index>(i), j) = ds.records[at + i].labels[j];
            }
        }
        const dl::LabelBatch batch =
            dl::validate_batch(votes, domain, state.batches_seen);
        const dl::BatchOutcome outcome = dl::process_batch(state, batch, est);
        state = outcome.state;
        dl::save_state(state, state_path);

        nlohmann::json metrics;
        metrics["batch"] = state.batches_seen - 1;
        metrics["size"] = take;
        std::vector<double> mu(state.mu[0].data(), state.mu[0].data() + state.mu[0].size());
        metrics["mu"] = mu;
        metrics["sign_fallback"] = outcome.sign_fallback;
        bool clamped = false;
        for (const auto& e : outcome.estimates) clamped = clamped || e.any_clamped();
        metrics["clamped"] = clamped;
        std::cout << metrics.dump() << '\n';
        at += take;
    }
    log_info("state saved to " + state_path);
    return kExitOk;
}

int cmd_label(const std::string& input, const std::string& state_path,
              const std::string& output) {
    if (!fs::exists(state_path)) {
        throw dl::StateNotFoundError(state_path);
    }
    const dl::EstimatorState state = dl::load_state(state_path);
    if (state.batches_seen < 1) {
        throw dl::InputError("state has seen no batches; fit-stream first");
    }
    const dl::Dataset ds = read_input(input);
    if (ds.num_sources != state.num_sources) {
        throw dl::LengthMismatchError(ds.num_sources, state.num_sources);
    }
    const dl::LabelDomain domain(state.num_classes);
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        for (int v : ds.records[i].labels) {
            if (!domain.contains_vote(v)) {
                throw dl::InputError("record " + ds.records[i].id + ": vote " +
                                     std::to_string(v) + " outside the label domain");
            }
        }
    }

    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (output != "-") {
        file_out.open(output);
        if (!file_out) throw dl::InputError("cannot open output file: " + output);
        out = &file_out;
    }

    dl::InferenceModel model;
    model.num_classes = state.num_classes;
    model.coverage = state.coverage;
    model.accuracy.resize(state.num_classes, state.num_sources);
    for (int c = 1; c <= state.num_classes; ++c) {
        const int run = state.num_classes == 2 ? 0 : c - 1;
        for (int i = 0; i < state.num_sources; ++i) {
            model.accuracy(c - 1, i) =
                state.coverage(i) > 0.0
                    ? dl::correlation_to_accuracy(state.mu[run](i), state.coverage(i))
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
        ? dl::InferenceModel::component_weights(*state.structure)
        : dl::Vector::Ones(state.num_sources);

    dl::IntVector votes(state.num_sources);
    for (const auto& rec : ds.records) {
        for (int j = 0; j < state.num_sources; ++j) votes(j) = rec.labels[j];
        const dl::PosteriorLabel post = dl::posterior(votes, model);
        nlohmann::json j;
        j["id"] = rec.id;
        std::vector<double> probs(post.probs.data(), post.probs.data() + post.probs.size());
        j["probs"] = probs;
        j["hard"] = post.hard;
        j["abstained"] = post.abstained;
        *out << j.dump() << '\n';
    }
    return kExitOk;
}

int cmd_evaluate(const std::string& input, const std::string& mode_name,
                 const std::string& out_prefix, const dl::RunConfig& cfg) {
    const dl::Dataset ds = read_input(input);
    if (!ds.all_have_truth()) {
        throw dl::InputError("evaluate requires true_label on every record");
    }
    dl::EvalMode mode;
    if (mode_name == "incremental") {
        mode = dl::EvalMode::kIncremental;
    } else if (mode_name == "baseline") {
        mode = dl::EvalMode::kBaseline;
    } else if (mode_name == "sweep") {
        mode = dl::EvalMode::kSweep;
    } else {
        throw dl::InputError("unknown mode: " + mode_name);
    }

    const dl::ProtocolResult result = dl::evaluate_protocol(ds, cfg, mode);

    const std::string csv_path = out_prefix + (mode == dl::EvalMode::kSweep
                                                   ? "_sweep.csv"
                                                   : "_batches.csv");
    {
        std::ofstream csv(csv_path);
        if (!csv) throw dl::InputError("cannot open output file: " + csv_path);
        if (mode == dl::EvalMode::kSweep) {
            dl::write_sweep_csv(csv, result);
        } else {
            dl::write_report_csv(csv, result);
        }
    }
    const std::string json_path = out_prefix + "_summary.json";
    {
        std::ofstream js(json_path);
        if (!js) throw dl::InputError("cannot open output file: " + json_path);
        js << dl::report_summary_json(result, cfg, mode) << '\n';
    }
    log_info("mean accuracy " + std::to_string(result.mean_accuracy) + "; wrote " +
             csv_path + " and " + json_path);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming weak-supervision label model"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    FlagOverrides flags;
    app.add_option("--config", config_path, "key = value config file")->expected(1);
    app.add_option("--alpha", flags.alpha, "EWMA mixing parameter");
    app.add_option("--gamma", flags.gamma, "PCP l1 weight or 'auto'");
    app.add_option("--threshold", flags.threshold, "edge threshold or 'auto'");
    app.add_option("--batch-size", flags.batch_size, "examples per stream batch");
    app.add_option("--seed", flags.seed, "PRNG seed");
    app.add_option("--classes", flags.classes, "number of classes k");
    app.add_flag("--prequential", flags.prequential,
                 "score each batch before its update");

    auto* sim = app.add_subcommand("simulate", "draw a synthetic dataset");
    std::string sim_spec, sim_out;
    std::size_t sim_n = 0;
    sim->add_option("--spec", sim_spec, "generator spec (JSON)")->required();
    sim->add_option("-n,--num", sim_n, "number of examples")->required();
    sim->add_option("-o,--output", sim_out, "output JSONL path")->required();

    auto* fit = app.add_subcommand("fit-stream", "update state from a vote stream");
    std::string fit_input = "-", fit_state;
    fit->add_option("--input", fit_input, "JSONL input path or '-'");
    fit->add_option("--state", fit_state, "state snapshot path")->required();

    auto* lab = app.add_subcommand("label", "emit posterior labels");
    std::string lab_input = "-", lab_state, lab_out = "-";
    lab->add_option("--input", lab_input, "JSONL input path or '-'");
    lab->add_option("--state", lab_state, "state snapshot path")->required();
    lab->add_option("-o,--output", lab_out, "output JSONL path or '-'");

    auto* ev = app.add_subcommand("evaluate", "run the folded evaluation protocol");
    std::string ev_input, ev_mode = "incremental", ev_prefix = "report";
    ev->add_option("--input", ev_input, "labeled JSONL dataset")->required();
    ev->add_option("--mode", ev_mode, "incremental | baseline | sweep");
    ev->add_option("--out-prefix", ev_prefix, "output file prefix");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            return cmd_simulate(sim_spec, sim_n, sim_out, flags.seed, flags.batch_size);
        }
        const dl::RunConfig cfg = resolve_config(config_path, flags);
        if (*fit) return cmd_fit_stream(fit_input, fit_state, cfg);
        if (*lab) return cmd_label(lab_input, lab_state, lab_out);
        if (*ev) return cmd_evaluate(ev_input, ev_mode, ev_prefix, cfg);
    } catch (const dl::StateVersionError& e) {
        std::cerr << "driftlabel: " << e.what() << '\n';
        return kExitBadState;
    } catch (const dl::StateNotFoundError& e) {
        std::cerr << "driftlabel: " << e.what() << '\n';
        return kExitBadState;
    } catch (const dl::StateIncompatibleError& e) {
        std::cerr << "driftlabel: " << e.what() << '\n';
        return kExitBadState;
    } catch (const dl::NumericError& e) {
        std::cerr << "driftlabel: " << e.what() << '\n';
        return kExitEstimator;
    } catch (const dl::InputError& e) {
        std::cerr << "driftlabel: " << e.what() << '\n';
        return kExitBadInput;
    } catch (const std::exception& e) {
        std::cerr << "driftlabel: " << e.what() << '\n';
        return kExitBadInput;
    }
    return kExitOk;
}
