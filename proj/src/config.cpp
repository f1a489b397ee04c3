#include "gstpro/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gstpro {

namespace {

int parse_int(const std::string& v) {
    errno = 0;
    char* end = nullptr;
    long x = std::strtol(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE) throw std::invalid_argument("not an integer");
    return static_cast<int>(x);
}

uint64_t parse_u64(const std::string& v) {
    errno = 0;
    char* end = nullptr;
    unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE) throw std::invalid_argument("not an integer");
    return x;
}

double parse_real(const std::string& v) {
    errno = 0;
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (end != v.c_str() + v.size() || v.empty() || errno == ERANGE) throw std::invalid_argument("not a number");
    return x;
}

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "on") return true;
    if (v == "0" || v == "false" || v == "off") return false;
    throw std::invalid_argument("not a boolean (use 0/1)");
}

SolverKind parse_solver(const std::string& v) {
    if (v == "euler") return SolverKind::kEuler;
    if (v == "rk4") return SolverKind::kRk4;
    throw std::invalid_argument("solver must be 'euler' or 'rk4'");
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct KeySpec {
    const char* key;
    const char* default_text;
    const char* doc;
    std::function<void(RunConfig&, const std::string&)> apply;
};

const std::vector<KeySpec>& key_table() {
    static const std::vector<KeySpec> table = {
        {"window", "5", "sliding window length w_s",
         [](RunConfig& c, const std::string& v) { c.model.window = parse_int(v); }},
        {"hidden_dim_h", "32", "spatial hidden state width",
         [](RunConfig& c, const std::string& v) { c.model.hidden_dim_h = parse_int(v); }},
        {"hidden_dim_z", "32", "temporal hidden state width",
         [](RunConfig& c, const std::string& v) { c.model.hidden_dim_z = parse_int(v); }},
        {"fc_hidden", "128", "hidden width of the field stacks",
         [](RunConfig& c, const std::string& v) { c.model.fc_hidden = parse_int(v); }},
        {"fc_layers", "3", "hidden layer count of the field stacks",
         [](RunConfig& c, const std::string& v) { c.model.fc_layers = parse_int(v); }},
        {"node_embed_dim", "16", "node embedding width for the learned adjacency",
         [](RunConfig& c, const std::string& v) { c.model.node_embed_dim = parse_int(v); }},
        {"solver", "rk4", "fixed-step solver: euler or rk4",
         [](RunConfig& c, const std::string& v) { c.model.solver = parse_solver(v); }},
        {"steps_per_unit", "2", "solver steps per unit time",
         [](RunConfig& c, const std::string& v) { c.model.steps_per_unit = parse_int(v); }},
        {"include_time_channel", "1", "append normalized time to the control path",
         [](RunConfig& c, const std::string& v) { c.model.include_time_channel = parse_bool(v); }},
        {"temporal_shared", "0", "share temporal stacks across nodes",
         [](RunConfig& c, const std::string& v) { c.model.temporal_shared = parse_bool(v); }},
        {"epochs", "100", "maximum training epochs",
         [](RunConfig& c, const std::string& v) { c.train.epochs = parse_int(v); }},
        {"patience", "15", "early-stopping patience in epochs",
         [](RunConfig& c, const std::string& v) { c.train.patience = parse_int(v); }},
        {"batch_size", "64", "training batch size",
         [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_int(v); }},
        {"lr", "0.001", "Adam learning rate", [](RunConfig& c, const std::string& v) { c.train.lr = parse_real(v); }},
        {"beta1", "0.9", "Adam beta1", [](RunConfig& c, const std::string& v) { c.train.beta1 = parse_real(v); }},
        {"beta2", "0.999", "Adam beta2", [](RunConfig& c, const std::string& v) { c.train.beta2 = parse_real(v); }},
        {"weight_decay", "0.001", "L2 weight decay",
         [](RunConfig& c, const std::string& v) { c.train.weight_decay = parse_real(v); }},
        {"clip_norm", "5.0", "global gradient norm clip",
         [](RunConfig& c, const std::string& v) { c.train.clip_norm = parse_real(v); }},
        {"val_ratio", "0.1", "fraction of training timestamps held out for validation",
         [](RunConfig& c, const std::string& v) { c.train.val_ratio = parse_real(v); }},
        {"seed", "1", "training seed (init, shuffling)",
         [](RunConfig& c, const std::string& v) { c.train.seed = parse_u64(v); }},
        {"parallel", "1", "use OpenMP batch kernels (results are identical either way)",
         [](RunConfig& c, const std::string& v) { c.train.parallel = parse_bool(v); }},
        {"scorer_window", "50000", "rolling window W of the Gaussian scorer (capped at stream length)",
         [](RunConfig& c, const std::string& v) { c.scorer_window = parse_int(v); }},
        {"sigma_floor", "1e-4", "lower bound on the rolling standard deviation",
         [](RunConfig& c, const std::string& v) { c.sigma_floor = parse_real(v); }},
        {"train_path", "", "default --train", [](RunConfig& c, const std::string& v) { c.train_path = v; }},
        {"test_path", "", "default --test", [](RunConfig& c, const std::string& v) { c.test_path = v; }},
        {"labels_path", "", "default --labels", [](RunConfig& c, const std::string& v) { c.labels_path = v; }},
        {"model_path", "", "default --model / --out of train", [](RunConfig& c, const std::string& v) { c.model_path = v; }},
        {"scores_path", "", "default --out of score", [](RunConfig& c, const std::string& v) { c.scores_path = v; }},
        {"report_path", "", "default --out of eval", [](RunConfig& c, const std::string& v) { c.report_path = v; }},
        {"out_dir", "", "default --out of sweep", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
    };
    return table;
}

}  // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const auto& spec : key_table()) {
        if (key == spec.key) {
            try {
                spec.apply(cfg, value);
            } catch (const std::exception& e) {
                throw std::invalid_argument("config key '" + key + "': " + e.what());
            }
            return;
        }
    }
    throw std::invalid_argument("unknown config key '" + key + "'");
}

RunConfig parse_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    RunConfig cfg;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        try {
            apply_config_entry(cfg, key, value);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

std::string run_config_help() {
    std::ostringstream out;
    out << "Config file keys (one key=value per line, '#' comments):\n";
    for (const auto& spec : key_table()) {
        out << "  " << spec.key;
        if (spec.default_text[0] != '\0') out << " (default " << spec.default_text << ")";
        out << " - " << spec.doc << "\n";
    }
    return out.str();
}

}  // namespace gstpro
