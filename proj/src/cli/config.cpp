#include "cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace omcv::cli {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
    bool escaped = false;
    for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '#' && !escaped) return line.substr(0, i);
        escaped = false;
    }
    return line;
}

bool parse_double(const std::string& s, double& out) {
    try {
        size_t pos = 0;
        out = std::stod(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

bool parse_int(const std::string& s, long long& out) {
    try {
        size_t pos = 0;
        out = std::stoll(s, &pos);
        return pos == s.size();
    } catch (...) {
        return false;
    }
}

}  // namespace

ParseResult parse_config_text(const std::string& text) {
    ParseResult result;
    RawConfig config;
    config.source_text = text;

    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string stripped = trim(strip_comment(line));
        if (stripped.empty()) continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']') {
                result.issues.push_back({line_no, "unterminated section header"});
                continue;
            }
            section = trim(stripped.substr(1, stripped.size() - 2));
            if (section.empty()) result.issues.push_back({line_no, "empty section name"});
            continue;
        }
        size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            result.issues.push_back({line_no, "expected 'key = value': " + stripped});
            continue;
        }
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            result.issues.push_back({line_no, "empty key"});
            continue;
        }
        if (section.empty() && key == "experiment") {
            config.experiment = value;
            continue;
        }
        std::string full = section.empty() ? key : section + "." + key;
        if (config.entries.count(full))
            result.issues.push_back({line_no, "duplicate key: " + full});
        config.entries[full] = value;
    }
    if (config.experiment.empty())
        result.issues.push_back({0, "missing top-level 'experiment = <name>' selector"});
    result.config = std::move(config);
    return result;
}

ParseResult parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        ParseResult r;
        r.issues.push_back({0, "cannot read config file: " + path});
        return r;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

namespace {

std::vector<FieldSpec> common_output() {
    return {{"output.path", FieldType::String, true, "", "CSV output path"}};
}

std::vector<FieldSpec> with(std::vector<FieldSpec> base, std::vector<FieldSpec> extra) {
    base.insert(base.end(), extra.begin(), extra.end());
    return base;
}

const std::map<std::string, std::vector<FieldSpec>>& schemas() {
    static const std::map<std::string, std::vector<FieldSpec>> table = [] {
        std::map<std::string, std::vector<FieldSpec>> m;

        m["cubic-steady"] = with(
            {{"physical.g1", FieldType::Double, false, "1.0", "red-sideband drive scale"},
             {"physical.kappa", FieldType::Double, true, "", "cavity decay"},
             {"physical.r", FieldType::Double, true, "", "blue/red drive ratio"},
             {"physical.gamma", FieldType::Double, true, "", "cubic strength"},
             {"physical.nbar", FieldType::Double, false, "0.0", "bath occupation"},
             {"physical.gamma_m", FieldType::Double, false, "0.0", "mechanical damping"},
             {"numerics.cavity_cutoff", FieldType::Int, false, "4", ""},
             {"numerics.mech_cutoff", FieldType::Int, true, "", ""},
             {"numerics.max_time", FieldType::Double, true, "", "integration budget"},
             {"numerics.checkpoint_interval", FieldType::Double, false, "0", ""},
             {"numerics.rel_tol", FieldType::Double, false, "1e-8", "step error target"}},
            common_output());

        m["cubic-noise-sweep"] = with(
            {{"physical.g1", FieldType::Double, false, "1.0", ""},
             {"physical.kappa", FieldType::Double, true, "", ""},
             {"physical.r", FieldType::Double, true, "", ""},
             {"physical.gamma", FieldType::Double, true, "", ""},
             {"physical.nbar", FieldType::DoubleList, true, "", "bath occupation axis"},
             {"physical.gamma_m", FieldType::DoubleList, true, "", "damping axis"},
             {"numerics.cavity_cutoff", FieldType::Int, false, "4", ""},
             {"numerics.mech_cutoff", FieldType::Int, true, "", ""},
             {"numerics.max_time", FieldType::Double, true, "", ""},
             {"numerics.checkpoint_interval", FieldType::Double, false, "0", ""},
             {"numerics.rel_tol", FieldType::Double, false, "1e-8", ""}},
            common_output());

        m["two-node-cluster"] = with(
            {{"physical.beta", FieldType::Double, false, "1.0", "switching drive scale"},
             {"physical.kappa", FieldType::Double, true, "", ""},
             {"physical.s1", FieldType::Double, true, "", "node-1 squeezing"},
             {"physical.s2", FieldType::Double, true, "", "node-2 squeezing"},
             {"physical.gamma1", FieldType::Double, false, "0.0", "node-1 cubic strength"},
             {"physical.gamma2", FieldType::Double, true, "", "node-2 cubic strength"},
             {"physical.nbar1", FieldType::Double, false, "0.0", ""},
             {"physical.nbar2", FieldType::Double, false, "0.0", ""},
             {"physical.gamma_m", FieldType::Double, false, "0.0", "shared damping rate"},
             {"protocol.tau", FieldType::Double, true, "", "total switching time"},
             {"protocol.precool", FieldType::Bool, false, "false", ""},
             {"protocol.precool_duration", FieldType::Double, false, "0.0", "per mode"},
             {"numerics.cavity_cutoff", FieldType::Int, false, "4", ""},
             {"numerics.mech_cutoff1", FieldType::Int, true, "", ""},
             {"numerics.mech_cutoff2", FieldType::Int, true, "", ""},
             {"numerics.sample_interval", FieldType::Double, false, "0", ""},
             {"numerics.rel_tol", FieldType::Double, false, "1e-8", ""},
             {"numerics.norm_loss_tol", FieldType::Double, false, "1e-3", "target cutoff guard"}},
            common_output());

        m["rwa-check"] = with(
            {{"physical.g1", FieldType::Double, true, "", "in units of Omega"},
             {"physical.kappa", FieldType::Double, true, "", ""},
             {"physical.r", FieldType::Double, true, "", ""},
             {"physical.gamma", FieldType::Double, true, "", ""},
             {"physical.R", FieldType::Double, true, "", "linear/quadratic coupling ratio"},
             {"physical.Omega", FieldType::Double, false, "1.0", "mechanical frequency"},
             {"numerics.cavity_cutoff", FieldType::Int, false, "5", ""},
             {"numerics.mech_cutoff", FieldType::Int, true, "", ""},
             {"numerics.t_final", FieldType::Double, true, "", ""},
             {"numerics.sample_interval", FieldType::Double, false, "0", ""},
             {"numerics.rel_tol", FieldType::Double, false, "1e-8", ""},
             {"numerics.rwa_margin", FieldType::Double, false, "0.1", ""}},
            common_output());

        m["cubic-gate"] = with(
            {{"physical.s", FieldType::Double, true, "", "input squeezing"},
             {"physical.gamma", FieldType::Double, true, "", "gate strength"},
             {"physical.preparation", FieldType::String, false, "direct",
              "direct | switching"},
             {"physical.beta", FieldType::Double, false, "1.0", ""},
             {"physical.kappa", FieldType::Double, false, "10.0", ""},
             {"physical.nbar", FieldType::DoubleList, false, "0.0",
              "bath occupation axis, applied to both oscillators"},
             {"physical.gamma_m", FieldType::DoubleList, false, "0.0", "damping axis"},
             {"protocol.step_duration", FieldType::Double, false, "10.0", ""},
             {"protocol.precool", FieldType::Bool, false, "false", ""},
             {"protocol.precool_duration", FieldType::Double, false, "10.0", ""},
             {"numerics.mech_cutoff1", FieldType::Int, false, "0", "0 = heuristic"},
             {"numerics.mech_cutoff2", FieldType::Int, false, "0", "0 = heuristic"},
             {"numerics.cavity_cutoff", FieldType::Int, false, "4", ""},
             {"numerics.n_samples", FieldType::Int, false, "200", ""},
             {"numerics.seed", FieldType::UInt64, false, "1", ""},
             {"numerics.grid_points", FieldType::Int, false, "1001", ""},
             {"numerics.norm_loss_tol", FieldType::Double, false, "1e-4", ""}},
            common_output());

        m["stability-scan"] = with(
            {{"physical.kappa", FieldType::Double, false, "0.5", ""},
             {"physical.Gamma", FieldType::Double, false, "0.0", "mechanical damping"},
             {"scan.n_samples", FieldType::Int, false, "500", ""},
             {"scan.seed", FieldType::UInt64, false, "1", ""},
             {"scan.max_amplitude", FieldType::Double, false, "2.0", "coupling magnitude"}},
            common_output());

        return m;
    }();
    return table;
}

bool value_parses(const std::string& value, FieldType type) {
    double d;
    long long i;
    switch (type) {
        case FieldType::Double:
            return parse_double(value, d);
        case FieldType::Int:
            return parse_int(value, i);
        case FieldType::UInt64:
            return parse_int(value, i) && i >= 0;
        case FieldType::Bool:
            return value == "true" || value == "false" || value == "0" || value == "1";
        case FieldType::String:
            return !value.empty();
        case FieldType::DoubleList: {
            std::stringstream ss(value);
            std::string item;
            int count = 0;
            while (std::getline(ss, item, ',')) {
                if (!parse_double(trim(item), d)) return false;
                ++count;
            }
            return count > 0;
        }
    }
    return false;
}

}  // namespace

const std::vector<FieldSpec>& schema_for(const std::string& experiment) {
    auto it = schemas().find(experiment);
    if (it == schemas().end())
        throw std::out_of_range("unknown experiment: " + experiment);
    return it->second;
}

std::vector<std::string> known_experiments() {
    std::vector<std::string> names;
    for (const auto& [name, fields] : schemas()) names.push_back(name);
    return names;
}

ValidationReport validate_against_schema(const RawConfig& config) {
    ValidationReport report;
    if (schemas().find(config.experiment) == schemas().end()) {
        std::string known;
        for (const auto& name : known_experiments()) known += " " + name;
        report.errors.push_back("unknown experiment '" + config.experiment + "'; known:" + known);
        return report;
    }
    const auto& fields = schema_for(config.experiment);
    for (const auto& field : fields) {
        auto it = config.entries.find(field.key);
        if (it == config.entries.end()) {
            if (field.required)
                report.errors.push_back("missing required field: " + field.key +
                                        (field.help.empty() ? "" : " (" + field.help + ")"));
            continue;
        }
        if (!value_parses(it->second, field.type))
            report.errors.push_back("field " + field.key + ": cannot parse '" + it->second + "'");
    }
    for (const auto& [key, value] : config.entries) {
        bool known = false;
        for (const auto& field : fields) known = known || (field.key == key);
        if (!known) report.errors.push_back("unknown key: " + key);
    }
    return report;
}

ConfigView::ConfigView(const RawConfig& raw) : raw_(raw) {}

std::string ConfigView::lookup(const std::string& key) const {
    auto it = raw_.entries.find(key);
    if (it != raw_.entries.end()) return it->second;
    for (const auto& field : schema_for(raw_.experiment))
        if (field.key == key) {
            if (field.required)
                throw std::out_of_range("required field missing: " + key);
            return field.default_value;
        }
    throw std::out_of_range("field not in schema: " + key);
}

double ConfigView::number(const std::string& key) const { return std::stod(lookup(key)); }

int ConfigView::integer(const std::string& key) const { return std::stoi(lookup(key)); }

bool ConfigView::boolean(const std::string& key) const {
    const std::string v = lookup(key);
    return v == "true" || v == "1";
}

std::uint64_t ConfigView::uint64(const std::string& key) const {
    return static_cast<std::uint64_t>(std::stoull(lookup(key)));
}

std::string ConfigView::text(const std::string& key) const { return lookup(key); }

std::vector<double> ConfigView::list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(lookup(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
    return out;
}

std::uint64_t config_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace omcv::cli
