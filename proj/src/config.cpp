#include "fslsim/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fslsim {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string unquote(std::string v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\'')))
        return v.substr(1, v.size() - 2);
    return v;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long long n = std::stoll(v, &pos);
        if (pos != v.size() || n < 0) throw std::invalid_argument(v);
        return uint64_t(n);
    } catch (...) {
        throw std::invalid_argument(key + " must be a non-negative integer, got '" +
                                    v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (...) {
        throw std::invalid_argument(key + " must be a number, got '" + v + "'");
    }
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap kv;
    std::istringstream in(text);
    std::string line, section;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        // inline comments: # or ; preceded by whitespace
        for (size_t i = 1; i < s.size(); ++i)
            if ((s[i] == '#' || s[i] == ';') && std::isspace(uint8_t(s[i - 1]))) {
                s = trim(s.substr(0, i));
                break;
            }
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": malformed section header");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = unquote(trim(s.substr(eq + 1)));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": empty key");
        kv[section.empty() ? key : section + "." + key] = value;
    }
    return kv;
}

ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

ScenarioConfig scenario_from_config(const ConfigMap& kv) {
    ScenarioConfig cfg;
    for (const auto& [key, v] : kv) {
        if (key == "scenario.clients") cfg.n_clients = parse_u64(key, v);
        else if (key == "scenario.model") cfg.model_spec = v;
        else if (key == "scenario.partition") {
            if (v == "iid") cfg.partition = PartitionMode::Iid;
            else if (v == "dirichlet") cfg.partition = PartitionMode::Dirichlet;
            else throw std::invalid_argument("partition must be iid or dirichlet");
        }
        else if (key == "scenario.alpha") cfg.alpha = parse_double(key, v);
        else if (key == "scenario.scheduler") {
            if (v == "deterministic") cfg.scheduler = SchedulerMode::Deterministic;
            else if (v == "concurrent") cfg.scheduler = SchedulerMode::Concurrent;
            else throw std::invalid_argument(
                "scheduler must be deterministic or concurrent");
        }
        else if (key == "scenario.consensus_threshold")
            cfg.consensus_threshold_override = parse_u64(key, v);
        else if (key == "scenario.data") cfg.data_source = v;
        else if (key == "scenario.classes") cfg.classes = parse_u64(key, v);
        else if (key == "scenario.dim") cfg.dim = parse_u64(key, v);
        else if (key == "scenario.train_samples") cfg.n_train = parse_u64(key, v);
        else if (key == "scenario.test_samples") cfg.n_test = parse_u64(key, v);
        else if (key == "scenario.mnist_dir") cfg.mnist_dir = v;
        else if (key == "scenario.transient_max_bytes")
            cfg.transient_max_bytes = parse_u64(key, v);
        else if (key == "train.eta_c") cfg.train.eta_c = parse_double(key, v);
        else if (key == "train.eta_s") cfg.train.eta_s = parse_double(key, v);
        else if (key == "train.batch") cfg.train.batch = parse_u64(key, v);
        else if (key == "train.epochs") cfg.train.epochs = parse_u64(key, v);
        else if (key == "train.aggregation_every")
            cfg.train.aggregation_every = parse_u64(key, v);
        else if (key == "train.seed") cfg.train.seed = parse_u64(key, v);
        else throw std::invalid_argument("unknown config key: " + key);
    }

    if (cfg.n_clients == 0) throw std::invalid_argument("clients must be positive");
    if (cfg.partition == PartitionMode::Dirichlet && cfg.alpha <= 0.0)
        throw std::invalid_argument("alpha must be positive");
    if (cfg.train.batch == 0) throw std::invalid_argument("batch must be positive");
    if (cfg.data_source != "synthetic" && cfg.data_source != "mnist")
        throw std::invalid_argument("data must be synthetic or mnist");
    if (cfg.data_source == "mnist" && cfg.mnist_dir.empty())
        throw std::invalid_argument("mnist_dir required when data = mnist");
    return cfg;
}

std::string scenario_to_text(const ScenarioConfig& cfg) {
    std::ostringstream out;
    out << "[scenario]\n"
        << "clients = " << cfg.n_clients << "\n"
        << "model = " << cfg.model_spec << "\n"
        << "partition = "
        << (cfg.partition == PartitionMode::Iid ? "iid" : "dirichlet") << "\n"
        << "alpha = " << cfg.alpha << "\n"
        << "scheduler = "
        << (cfg.scheduler == SchedulerMode::Deterministic ? "deterministic"
                                                          : "concurrent")
        << "\n"
        << "consensus_threshold = " << cfg.consensus_threshold_override << "\n"
        << "data = " << cfg.data_source << "\n"
        << "classes = " << cfg.classes << "\n"
        << "dim = " << cfg.dim << "\n"
        << "train_samples = " << cfg.n_train << "\n"
        << "test_samples = " << cfg.n_test << "\n";
    if (!cfg.mnist_dir.empty()) out << "mnist_dir = " << cfg.mnist_dir << "\n";
    out << "transient_max_bytes = " << cfg.transient_max_bytes << "\n"
        << "\n[train]\n"
        << "eta_c = " << cfg.train.eta_c << "\n"
        << "eta_s = " << cfg.train.eta_s << "\n"
        << "batch = " << cfg.train.batch << "\n"
        << "epochs = " << cfg.train.epochs << "\n"
        << "aggregation_every = " << cfg.train.aggregation_every << "\n"
        << "seed = " << cfg.train.seed << "\n";
    return out.str();
}

}  // namespace fslsim
