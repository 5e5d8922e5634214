#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "shuttlekit/constants.hpp"
#include "shuttlekit/errors.hpp"
#include "shuttlekit/excitation.hpp"
#include "shuttlekit/noise.hpp"
#include "shuttlekit/oracle.hpp"
#include "shuttlekit/trajectory.hpp"

namespace shuttlekit {

struct SweepSpec {
    enum class Variable { Duration, Tau, Tau2, Lambda, OmegaEval };
    Variable variable;
    double start, stop;
    int points;
    bool log_spacing = false;

    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
            const double f = static_cast<double>(i) / (points - 1);
            v[static_cast<std::size_t>(i)] =
                log_spacing ? start * std::pow(stop / start, f) : start + (stop - start) * f;
        }
        return v;
    }
};

struct OracleSpec {
    enum class Mode { None, Moments, Mc };
    Mode mode = Mode::None;
    int members = 10000;
    std::uint64_t seed = 1;
    double dt = 0.0;  // 0: auto
};

struct OutputSpec {
    enum class Format { Csv, Json };
    std::string path;
    Format format = Format::Csv;
    int points = 1001;  // trajectory dump grid
};

/// One batch run: physics + protocol + optional noise + optional sweep.
struct RunConfig {
    PhysicalParams physical{};
    ProtocolKind protocol = ProtocolKind::Quintic;
    int bangbang_k = 0;
    std::optional<NoiseModel> noise;
    NoiseCoupling coupling = NoiseCoupling::Spring;
    double position_coupling = 0.0;  // K (N)
    std::optional<SweepSpec> sweep;
    OracleSpec oracle;
    OutputSpec output;
};

namespace detail {

class KeyValueFile {
public:
    explicit KeyValueFile(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": expected key=value");
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t\r");
                const auto b = s.find_last_not_of(" \t\r");
                return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": empty key or value");
            if (entries_.count(key))
                throw ConfigError("config: duplicate key '" + key + "'");
            entries_[key] = value;
        }
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    std::string str(const std::string& key) const {
        used_.insert(key);
        return entries_.at(key);
    }

    double number(const std::string& key) const {
        const std::string v = str(key);
        std::size_t pos = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &pos);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' is not a number: " + v);
        }
        if (pos != v.size())
            throw ConfigError("config: key '" + key + "' has trailing junk: " + v);
        return x;
    }

    long long integer(const std::string& key) const {
        const std::string v = str(key);
        std::size_t pos = 0;
        long long x = 0;
        try {
            x = std::stoll(v, &pos);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' is not an integer: " + v);
        }
        if (pos != v.size())
            throw ConfigError("config: key '" + key + "' has trailing junk: " + v);
        return x;
    }

    std::uint64_t unsigned64(const std::string& key) const {
        const std::string v = str(key);
        try {
            return std::stoull(v);
        } catch (const std::exception&) {
            throw ConfigError("config: key '" + key + "' is not a seed value: " + v);
        }
    }

    void reject_unknown() const {
        std::vector<std::string> unknown;
        for (const auto& [k, _] : entries_)
            if (!used_.count(k)) unknown.push_back(k);
        if (!unknown.empty()) {
            std::string msg = "config: unknown keys:";
            for (const auto& k : unknown) msg += " " + k;
            throw ConfigError(msg);
        }
    }

private:
    std::map<std::string, std::string> entries_;
    mutable std::set<std::string> used_;
};

} // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
    detail::KeyValueFile kv(text);
    RunConfig cfg;

    // physical block
    if (kv.has("physical.mass") && kv.str("physical.mass") == "ca40")
        cfg.physical.mass = constants::ca40_ion_mass;
    else
        cfg.physical.mass = kv.number("physical.mass");
    cfg.physical.omega = kv.number("physical.omega");
    cfg.physical.distance = kv.number("physical.distance");
    cfg.physical.duration = kv.number("physical.duration");
    if (kv.has("physical.mode_n"))
        cfg.physical.mode_n = static_cast<int>(kv.integer("physical.mode_n"));
    if (kv.has("physical.delta")) cfg.physical.displacement_bound = kv.number("physical.delta");
    cfg.physical.validate();

    // protocol
    const std::string kind = kv.str("protocol.kind");
    if (kind == "quintic") cfg.protocol = ProtocolKind::Quintic;
    else if (kind == "unbounded") cfg.protocol = ProtocolKind::UnboundedOptimal;
    else if (kind == "bounded") cfg.protocol = ProtocolKind::BoundedOptimal;
    else if (kind == "bangbang") cfg.protocol = ProtocolKind::BangBang;
    else if (kind == "septic") cfg.protocol = ProtocolKind::RobustSeptic;
    else throw ConfigError("config: unknown protocol.kind '" + kind + "'");
    if (kv.has("protocol.k")) cfg.bangbang_k = static_cast<int>(kv.integer("protocol.k"));

    // noise block (optional)
    if (kv.has("noise.kind")) {
        const std::string nk = kv.str("noise.kind");
        if (nk == "white") {
            cfg.noise = WhiteNoise{kv.number("noise.gamma")};
        } else if (nk == "ou") {
            cfg.noise = OrnsteinUhlenbeckNoise{kv.number("noise.D"), kv.number("noise.tau")};
        } else if (nk == "flicker") {
            cfg.noise = FlickerNoise{kv.number("noise.C"), kv.number("noise.tau1"),
                                     kv.number("noise.tau2")};
        } else {
            throw ConfigError("config: unknown noise.kind '" + nk + "'");
        }
        validate(*cfg.noise);
        if (kv.has("noise.coupling")) {
            const std::string c = kv.str("noise.coupling");
            if (c == "spring") cfg.coupling = NoiseCoupling::Spring;
            else if (c == "position") cfg.coupling = NoiseCoupling::Position;
            else throw ConfigError("config: unknown noise.coupling '" + c + "'");
        }
        if (kv.has("noise.K")) cfg.position_coupling = kv.number("noise.K");
        if (cfg.coupling == NoiseCoupling::Position && !(cfg.position_coupling > 0.0))
            throw ConfigError("config: position coupling requires noise.K > 0");
    }

    // sweep block (optional)
    if (kv.has("sweep.variable")) {
        SweepSpec sweep{};
        const std::string var = kv.str("sweep.variable");
        if (var == "T") sweep.variable = SweepSpec::Variable::Duration;
        else if (var == "tau") sweep.variable = SweepSpec::Variable::Tau;
        else if (var == "tau2") sweep.variable = SweepSpec::Variable::Tau2;
        else if (var == "lambda") sweep.variable = SweepSpec::Variable::Lambda;
        else if (var == "omega_eval") sweep.variable = SweepSpec::Variable::OmegaEval;
        else throw ConfigError("config: unknown sweep.variable '" + var + "'");
        sweep.start = kv.number("sweep.start");
        sweep.stop = kv.number("sweep.stop");
        sweep.points = static_cast<int>(kv.integer("sweep.points"));
        if (kv.has("sweep.spacing")) {
            const std::string sp = kv.str("sweep.spacing");
            if (sp == "log") sweep.log_spacing = true;
            else if (sp != "linear")
                throw ConfigError("config: sweep.spacing must be linear or log");
        }
        if (sweep.points < 2) throw ConfigError("config: sweep.points must be >= 2");
        if (sweep.log_spacing && !(sweep.start > 0.0 && sweep.stop > 0.0))
            throw ConfigError("config: log spacing requires positive bounds");
        const bool needs_positive = sweep.variable != SweepSpec::Variable::Lambda;
        if (needs_positive && !(sweep.start > 0.0 || sweep.variable == SweepSpec::Variable::OmegaEval))
            throw ConfigError("config: sweep bounds must be positive for this variable");
        cfg.sweep = sweep;
    }

    // oracle block
    if (kv.has("oracle.mode")) {
        const std::string m = kv.str("oracle.mode");
        if (m == "none") cfg.oracle.mode = OracleSpec::Mode::None;
        else if (m == "moments") cfg.oracle.mode = OracleSpec::Mode::Moments;
        else if (m == "mc") cfg.oracle.mode = OracleSpec::Mode::Mc;
        else throw ConfigError("config: unknown oracle.mode '" + m + "'");
    }
    if (kv.has("oracle.members"))
        cfg.oracle.members = static_cast<int>(kv.integer("oracle.members"));
    if (kv.has("oracle.seed")) cfg.oracle.seed = kv.unsigned64("oracle.seed");
    if (kv.has("oracle.dt")) cfg.oracle.dt = kv.number("oracle.dt");

    // output block
    cfg.output.path = kv.str("output.path");
    if (kv.has("output.format")) {
        const std::string f = kv.str("output.format");
        if (f == "csv") cfg.output.format = OutputSpec::Format::Csv;
        else if (f == "json") cfg.output.format = OutputSpec::Format::Json;
        else throw ConfigError("config: output.format must be csv or json");
    }
    if (kv.has("output.points")) {
        cfg.output.points = static_cast<int>(kv.integer("output.points"));
        if (cfg.output.points < 2) throw ConfigError("config: output.points must be >= 2");
    }

    kv.reject_unknown();
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str());
}

} // namespace shuttlekit
