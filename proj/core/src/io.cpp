#include "driftlabel/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace driftlabel {

using nlohmann::json;

namespace {

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Vector vector_from_json(const json& arr) {
    Vector v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v(i) = arr[i].get<double>();
    return v;
}

[[noreturn]] void fail_line(std::size_t line_number, const std::string& what) {
    throw InputError("line " + std::to_string(line_number) + ": " + what);
}

}  // namespace

bool Dataset::all_have_truth() const {
    for (const auto& r : records) {
        if (!r.true_label) return false;
    }
    return true;
}

Record parse_record(const std::string& line, std::size_t line_number) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        fail_line(line_number, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail_line(line_number, "record is not an object");
    Record rec;
    try {
        if (j.contains("id")) {
            rec.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        } else {
            rec.id = std::to_string(line_number);
        }
        if (!j.contains("labels") || !j["labels"].is_array()) {
            fail_line(line_number, "missing \"labels\" array");
        }
        for (const auto& v : j["labels"]) rec.labels.push_back(v.get<int>());
        if (j.contains("true_label") && !j["true_label"].is_null()) {
            rec.true_label = j["true_label"].get<int>();
        }
    } catch (const json::exception& e) {
        fail_line(line_number, std::string("bad record field: ") + e.what());
    }
    if (rec.labels.empty()) fail_line(line_number, "empty \"labels\" array");
    return rec;
}

Dataset read_jsonl(std::istream& in) {
    Dataset ds;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Record rec = parse_record(line, line_number);
        if (ds.num_sources == 0) {
            ds.num_sources = static_cast<int>(rec.labels.size());
        } else if (static_cast<int>(rec.labels.size()) != ds.num_sources) {
            fail_line(line_number, "source count changed from " +
                                       std::to_string(ds.num_sources) + " to " +
                                       std::to_string(rec.labels.size()));
        }
        ds.records.push_back(std::move(rec));
    }
    if (ds.records.empty()) throw InputError("no records");
    return ds;
}

Dataset read_jsonl_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open input file: " + path.string());
    return read_jsonl(in);
}

void write_records(std::ostream& out, const std::vector<Record>& records) {
    for (const auto& r : records) {
        json j;
        j["id"] = r.id;
        j["labels"] = r.labels;
        if (r.true_label) j["true_label"] = *r.true_label;
        out << j.dump() << '\n';
    }
}

void save_state(const EstimatorState& state, const std::filesystem::path& path) {
    json j;
    j["format_version"] = kStateFormatVersion;
    j["num_classes"] = state.num_classes;
    j["num_sources"] = state.num_sources;
    j["alpha"] = state.alpha;
    j["class_prior"] = state.class_prior;
    j["batches_seen"] = state.batches_seen;
    j["coverage"] = vector_to_json(state.coverage);
    if (state.structure) {
        json edges = json::array();
        for (const auto& [a, b] : state.structure->edges) edges.push_back({a, b});
        j["structure"] = {{"edges", edges}, {"threshold", state.structure->threshold}};
    }
    json runs = json::array();
    for (std::size_t r = 0; r < state.mu.size(); ++r) {
        runs.push_back({{"mu", vector_to_json(state.mu[r])},
                        {"z", vector_to_json(state.z[r])}});
    }
    j["runs"] = runs;

    const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp);
        if (!out) throw InputError("cannot write state file: " + tmp.string());
        out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

EstimatorState load_state(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open state file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("state file is not valid JSON: " + std::string(e.what()));
    }
    try {
        const int version = j.at("format_version").get<int>();
        if (version > kStateFormatVersion) {
            throw StateVersionError(version, kStateFormatVersion);
        }
        EstimatorState s;
        s.num_classes = j.at("num_classes").get<int>();
        s.num_sources = j.at("num_sources").get<int>();
        s.alpha = j.at("alpha").get<double>();
        s.class_prior = j.at("class_prior").get<std::vector<double>>();
        s.batches_seen = j.at("batches_seen").get<std::size_t>();
        s.coverage = vector_from_json(j.at("coverage"));
        if (j.contains("structure")) {
            DependencyStructure st;
            st.num_sources = s.num_sources;
            st.threshold = j["structure"].at("threshold").get<double>();
            for (const auto& e : j["structure"].at("edges")) {
                st.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
            }
            for (const auto& p : all_source_pairs(s.num_sources)) {
                if (std::find(st.edges.begin(), st.edges.end(), p) == st.edges.end()) {
                    st.mask.push_back(p);
                }
            }
            s.structure = std::move(st);
        }
        for (const auto& run : j.at("runs")) {
            s.mu.push_back(vector_from_json(run.at("mu")));
            s.z.push_back(vector_from_json(run.at("z")));
        }
        return s;
    } catch (const json::exception& e) {
        throw InputError("state file malformed: " + std::string(e.what()));
    }
}

EstimatorConfig RunConfig::estimator_config() const {
    EstimatorConfig c;
    c.alpha = alpha;
    c.eps_rel = eps_rel;
    c.pcp.gamma = gamma;
    c.pcp.rho = pcp_rho;
    c.pcp.tol = pcp_tol;
    c.pcp.max_iter = pcp_max_iter;
    c.fit.tol = fit_tol;
    c.fit.max_iter = fit_max_iter;
    c.fit.seed = seed;
    c.threshold.absolute = threshold;
    c.threshold.auto_fraction = threshold_fraction;
    c.class_prior = class_prior;
    return c;
}

void RunConfig::validate() const {
    if (num_classes < 2) throw InputError("config: classes must be >= 2");
    if (alpha < 0.0 || alpha > 1.0) throw InputError("config: alpha outside [0, 1]");
    if (pcp_tol <= 0.0 || fit_tol <= 0.0 || eps_rel <= 0.0) {
        throw InputError("config: tolerances must be positive");
    }
    if (pcp_max_iter < 1 || fit_max_iter < 1) {
        throw InputError("config: iteration caps must be >= 1");
    }
    if (batch_size < 1) throw InputError("config: batch size must be >= 1");
    if (!class_prior.empty()) {
        if (class_prior.size() != static_cast<std::size_t>(num_classes)) {
            throw InputError("config: prior length does not match classes");
        }
        double sum = 0.0;
        for (double p : class_prior) sum += p;
        if (std::abs(sum - 1.0) > 1e-9) throw InputError("config: prior must sum to 1");
    }
}

namespace {

std::vector<double> parse_double_list(const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

RunConfig parse_config(std::istream& in, RunConfig base) {
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail_line(line_number, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "classes") {
                base.num_classes = std::stoi(value);
            } else if (key == "alpha") {
                base.alpha = std::stod(value);
            } else if (key == "gamma") {
                if (value == "auto") {
                    base.gamma.reset();
                } else {
                    base.gamma = std::stod(value);
                }
            } else if (key == "threshold") {
                if (value == "auto") {
                    base.threshold.reset();
                } else {
                    base.threshold = std::stod(value);
                }
            } else if (key == "threshold.fraction") {
                base.threshold_fraction = std::stod(value);
            } else if (key == "pcp.tol") {
                base.pcp_tol = std::stod(value);
            } else if (key == "pcp.max_iter") {
                base.pcp_max_iter = std::stoul(value);
            } else if (key == "pcp.rho") {
                base.pcp_rho = std::stod(value);
            } else if (key == "fit.tol") {
                base.fit_tol = std::stod(value);
            } else if (key == "fit.max_iter") {
                base.fit_max_iter = std::stoul(value);
            } else if (key == "eps_rel") {
                base.eps_rel = std::stod(value);
            } else if (key == "prior") {
                if (value == "uniform" || value == "uninformative") {
                    base.class_prior.clear();
                } else {
                    base.class_prior = parse_double_list(value);
                }
            } else if (key == "batch_size") {
                base.batch_size = std::stoul(value);
            } else if (key == "seed") {
                base.seed = std::stoull(value);
            } else if (key == "prequential") {
                base.prequential = value == "true" || value == "1" || value == "yes";
            } else if (key == "folds") {
                base.folds = std::stoul(value);
            } else if (key == "num_batches") {
                base.num_batches = std::stoul(value);
            } else if (key == "sweep.alphas") {
                base.sweep_alphas = parse_double_list(value);
            } else {
                fail_line(line_number, "unknown config key: " + key);
            }
        } catch (const std::invalid_argument&) {
            fail_line(line_number, "bad value for " + key + ": " + value);
        } catch (const std::out_of_range&) {
            fail_line(line_number, "value out of range for " + key + ": " + value);
        }
    }
    return base;
}

RunConfig parse_config_file(const std::filesystem::path& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path.string());
    return parse_config(in, std::move(base));
}

SyntheticSpec parse_synthetic_spec(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw InputError("spec file is not valid JSON: " + std::string(e.what()));
    }
    SyntheticSpec spec;
    try {
        spec.m = j.at("m").get<int>();
        spec.k = j.at("k").get<int>();
        spec.accuracy = j.at("accuracy").get<std::vector<double>>();
        spec.coverage = j.at("coverage").get<std::vector<double>>();
        if (j.contains("prior")) {
            spec.prior = j["prior"].get<std::vector<double>>();
        } else {
            spec.prior.assign(spec.k, 1.0 / spec.k);
        }
        if (j.contains("dependencies")) {
            for (const auto& d : j["dependencies"]) {
                spec.dependencies.push_back({d.at("parent").get<int>(),
                                             d.at("child").get<int>(),
                                             d.at("rho").get<double>()});
            }
        }
        if (j.contains("drift")) {
            for (const auto& d : j["drift"]) {
                spec.drift.push_back({d.at("batch").get<std::size_t>(),
                                      d.at("accuracy").get<std::vector<double>>()});
            }
        }
        if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw InputError("spec file malformed: " + std::string(e.what()));
    }
    spec.validate_and_topo_order();
    return spec;
}

SyntheticSpec parse_synthetic_spec_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open spec file: " + path.string());
    return parse_synthetic_spec(in);
}

}  // namespace driftlabel
