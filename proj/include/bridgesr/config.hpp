#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bridgesr/errors.hpp"
#include "bridgesr/objective.hpp"
#include "bridgesr/schedule.hpp"

namespace bridgesr {

struct Config {
    uint64_t seed = 1234;

    ScheduleParams schedule;

    struct Train {
        bool scale_factor = true;
        double t_min = 1e-5;
        int batch_size = 4;
        double lr = 5e-5;
        int window_len = 32768;
        int steps = 2000;
    } train;

    struct Aux {
        double lambda_mag = 4e-6;
        double lambda_phase = 5e-6;
        std::vector<int> resolutions = {512, 1024, 2048};
        bool a_weighting = true;
    } aux;

    struct Sampler {
        std::string kind = "ode1";
        int steps = 8;
        double t_min = 1e-5;
        double t_max = 1.0;
    } sampler;

    struct Paths {
        std::string data_dir = "data";
        std::string out_dir = "out";
    } paths;

    void validate() const {
        schedule.validate();
        if (!(train.t_min > 0.0) || !(train.t_min < 1.0))
            throw ConfigError("train.t_min must lie in (0, 1)");
        if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
        if (!(train.lr > 0.0)) throw ConfigError("train.lr must be positive");
        if (train.window_len < 2) throw ConfigError("train.window_len must be >= 2");
        if (train.steps < 0) throw ConfigError("train.steps must be >= 0");
        if (aux.lambda_mag < 0.0 || aux.lambda_phase < 0.0)
            throw ConfigError("aux lambdas must be >= 0");
        if (aux.resolutions.empty()) throw ConfigError("aux.resolutions must not be empty");
        for (int r : aux.resolutions)
            if (r < 4 || r % 4 != 0) throw ConfigError("aux.resolutions entries must be multiples of 4");
        if (sampler.kind != "ode1" && sampler.kind != "sde1" && sampler.kind != "sde2")
            throw ConfigError("sampler.kind must be one of ode1, sde1, sde2");
        if (sampler.steps < 1) throw ConfigError("sampler.steps must be >= 1");
        if (!(sampler.t_min > 0.0) || !(sampler.t_min < sampler.t_max) || !(sampler.t_max <= 1.0))
            throw ConfigError("sampler grid needs 0 < t_min < t_max <= 1");
    }

    AuxLossConfig aux_loss_config() const {
        AuxLossConfig a;
        a.lambda_mag = aux.lambda_mag;
        a.lambda_phase = aux.lambda_phase;
        a.a_weighting = aux.a_weighting;
        a.resolutions.clear();
        for (int r : aux.resolutions)
            a.resolutions.push_back({r, r / 4});
        return a;
    }
};

namespace configdetail {

inline std::string format_double(double v) {
    // Shortest %g form that parses back to the same bits.
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::stod(buf) == v) break;
    }
    return buf;
}

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    }
}

inline long long parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long long n = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return n;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

inline std::string parse_string(const std::string& key, const std::string& v) {
    if (v.size() < 2 || v.front() != '"' || v.back() != '"')
        throw ConfigError("config: expected quoted string for " + key + ": '" + v + "'");
    return v.substr(1, v.size() - 2);
}

inline std::vector<int> parse_int_array(const std::string& key, const std::string& v) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw ConfigError("config: expected [..] array for " + key + ": '" + v + "'");
    std::vector<int> out;
    std::string body = v.substr(1, v.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("config: empty array element for " + key);
        out.push_back(static_cast<int>(parse_int(key, item)));
    }
    return out;
}

inline std::string kind_name(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::GMax: return "gmax";
        case ScheduleKind::GConst: return "gconst";
        case ScheduleKind::VP: return "vp";
    }
    throw ConfigError("config: unknown schedule kind");
}

inline ScheduleKind kind_from_name(const std::string& s) {
    if (s == "gmax") return ScheduleKind::GMax;
    if (s == "gconst") return ScheduleKind::GConst;
    if (s == "vp") return ScheduleKind::VP;
    throw ConfigError("config: schedule.kind must be one of gmax, gconst, vp: '" + s + "'");
}

}  // namespace configdetail

inline Config parse_config(const std::string& text) {
    using namespace configdetail;
    Config c;
    std::string section;
    std::stringstream ss(text);
    std::string raw;
    int lineno = 0;
    // GConst default collapses beta1 into beta0 so a file that sets only
    // schedule.kind = "gconst" still validates.
    bool beta1_set = false;
    while (std::getline(ss, raw)) {
        ++lineno;
        std::string line = raw;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "schedule" && section != "train" && section != "aux" &&
                section != "sampler" && section != "paths")
                throw ConfigError("config: unknown section [" + section + "]");
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const std::string full = section.empty() ? key : section + "." + key;

        if (full == "seed") c.seed = static_cast<uint64_t>(parse_int(full, val));
        else if (full == "schedule.kind") c.schedule.kind = kind_from_name(parse_string(full, val));
        else if (full == "schedule.beta0") c.schedule.beta0 = parse_double(full, val);
        else if (full == "schedule.beta1") { c.schedule.beta1 = parse_double(full, val); beta1_set = true; }
        else if (full == "train.scale_factor") c.train.scale_factor = parse_bool(full, val);
        else if (full == "train.t_min") c.train.t_min = parse_double(full, val);
        else if (full == "train.batch_size") c.train.batch_size = static_cast<int>(parse_int(full, val));
        else if (full == "train.lr") c.train.lr = parse_double(full, val);
        else if (full == "train.window_len") c.train.window_len = static_cast<int>(parse_int(full, val));
        else if (full == "train.steps") c.train.steps = static_cast<int>(parse_int(full, val));
        else if (full == "aux.lambda_mag") c.aux.lambda_mag = parse_double(full, val);
        else if (full == "aux.lambda_phase") c.aux.lambda_phase = parse_double(full, val);
        else if (full == "aux.resolutions") c.aux.resolutions = parse_int_array(full, val);
        else if (full == "aux.a_weighting") c.aux.a_weighting = parse_bool(full, val);
        else if (full == "sampler.kind") c.sampler.kind = parse_string(full, val);
        else if (full == "sampler.steps") c.sampler.steps = static_cast<int>(parse_int(full, val));
        else if (full == "sampler.t_min") c.sampler.t_min = parse_double(full, val);
        else if (full == "sampler.t_max") c.sampler.t_max = parse_double(full, val);
        else if (full == "paths.data_dir") c.paths.data_dir = parse_string(full, val);
        else if (full == "paths.out_dir") c.paths.out_dir = parse_string(full, val);
        else throw ConfigError("config: unknown key '" + full + "'");
    }
    if (c.schedule.kind == ScheduleKind::GConst && !beta1_set) c.schedule.beta1 = c.schedule.beta0;
    c.validate();
    return c;
}

inline std::string serialize_config(const Config& c) {
    using namespace configdetail;
    std::ostringstream out;
    out << "seed = " << c.seed << "\n\n";
    out << "[schedule]\n";
    out << "kind = \"" << kind_name(c.schedule.kind) << "\"\n";
    out << "beta0 = " << format_double(c.schedule.beta0) << "\n";
    out << "beta1 = " << format_double(c.schedule.beta1) << "\n\n";
    out << "[train]\n";
    out << "scale_factor = " << (c.train.scale_factor ? "true" : "false") << "\n";
    out << "t_min = " << format_double(c.train.t_min) << "\n";
    out << "batch_size = " << c.train.batch_size << "\n";
    out << "lr = " << format_double(c.train.lr) << "\n";
    out << "window_len = " << c.train.window_len << "\n";
    out << "steps = " << c.train.steps << "\n\n";
    out << "[aux]\n";
    out << "lambda_mag = " << format_double(c.aux.lambda_mag) << "\n";
    out << "lambda_phase = " << format_double(c.aux.lambda_phase) << "\n";
    out << "resolutions = [";
    for (size_t i = 0; i < c.aux.resolutions.size(); ++i)
        out << (i ? ", " : "") << c.aux.resolutions[i];
    out << "]\n";
    out << "a_weighting = " << (c.aux.a_weighting ? "true" : "false") << "\n\n";
    out << "[sampler]\n";
    out << "kind = \"" << c.sampler.kind << "\"\n";
    out << "steps = " << c.sampler.steps << "\n";
    out << "t_min = " << format_double(c.sampler.t_min) << "\n";
    out << "t_max = " << format_double(c.sampler.t_max) << "\n\n";
    out << "[paths]\n";
    out << "data_dir = \"" << c.paths.data_dir << "\"\n";
    out << "out_dir = \"" << c.paths.out_dir << "\"\n";
    return out.str();
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace bridgesr
