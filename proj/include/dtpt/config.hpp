#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtpt/errors.hpp"
#include "dtpt/model.hpp"
#include "dtpt/sweep.hpp"

namespace dtpt {

// Optional time-evolution block of a config file.
struct DynamicsSpec {
    std::string initial = "edge";        // "edge", "site:<k>", or explicit amplitudes
    std::vector<double> amplitudes;      // used when initial == "amplitudes"
    bool oracle = false;                 // integrate the full master equation instead
};

struct SweepBlock {
    std::optional<AxisSpec> axis1;
    std::optional<AxisSpec> axis2;
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
};

struct FullConfig {
    ModelConfig model;
    SweepBlock sweep;
    DynamicsSpec dynamics;
    std::string canonical;   // sorted-key dump of the raw document, for hashing
};

namespace detail {

// Best-effort line anchor: first occurrence of the quoted key in the raw text.
inline int key_line(const std::string& raw, const std::string& key) {
    const std::string needle = "\"" + key + "\"";
    const auto pos = raw.find(needle);
    if (pos == std::string::npos) return 0;
    int line = 1;
    for (size_t i = 0; i < pos; ++i)
        if (raw[i] == '\n') ++line;
    return line;
}

inline int offset_line(const std::string& raw, size_t byte) {
    int line = 1;
    for (size_t i = 0; i < byte && i < raw.size(); ++i)
        if (raw[i] == '\n') ++line;
    return line;
}

[[noreturn]] inline void fail(const std::string& file, int line, const std::string& msg) {
    if (line > 0)
        throw config_error(file + ":" + std::to_string(line) + ": " + msg);
    throw config_error(file + ": " + msg);
}

inline double as_number(const std::string& file, const std::string& raw,
                        const nlohmann::json& j, const std::string& key) {
    if (!j.is_number())
        fail(file, key_line(raw, key), "'" + key + "' must be a number");
    return j.get<double>();
}

inline AxisSpec parse_axis(const std::string& file, const std::string& raw,
                           const nlohmann::json& j, const std::string& which) {
    if (!j.is_object())
        fail(file, key_line(raw, which), "'" + which + "' must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k != "name" && k != "min" && k != "max" && k != "count" && k != "values")
            fail(file, key_line(raw, k), "unknown key '" + k + "' in '" + which + "'");
    }
    if (!j.contains("name") || !j["name"].is_string())
        fail(file, key_line(raw, which), "'" + which + "' needs a string 'name'");
    AxisSpec a;
    a.name = j["name"].get<std::string>();
    if (j.contains("values")) {
        if (!j["values"].is_array())
            fail(file, key_line(raw, "values"), "'values' must be an array");
        for (const auto& v : j["values"]) {
            if (!v.is_number())
                fail(file, key_line(raw, "values"), "'values' must contain numbers only");
            a.values.push_back(v.get<double>());
        }
    } else {
        if (!j.contains("min") || !j.contains("max") || !j.contains("count"))
            fail(file, key_line(raw, which),
                 "'" + which + "' needs either 'values' or 'min'/'max'/'count'");
        const double lo = as_number(file, raw, j["min"], "min");
        const double hi = as_number(file, raw, j["max"], "max");
        if (!j["count"].is_number_integer())
            fail(file, key_line(raw, "count"), "'count' must be an integer");
        a = AxisSpec::uniform(a.name, lo, hi, j["count"].get<int>());
    }
    return a;
}

}

inline FullConfig parse_config_text(const std::string& raw, const std::string& file) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
        detail::fail(file, detail::offset_line(raw, e.byte), "invalid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object())
        detail::fail(file, 1, "top level must be a JSON object");

    static const char* model_keys[] = {"n_emitters", "j0", "phi", "gamma0", "spacing", "offsets"};
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& k = it.key();
        bool known = k == "sweep" || k == "dynamics";
        for (const char* mk : model_keys) known = known || k == mk;
        if (!known)
            detail::fail(file, detail::key_line(raw, k), "unknown key '" + k + "'");
    }
    for (const char* mk : {"n_emitters", "j0", "phi", "gamma0", "spacing"})
        if (!doc.contains(mk))
            detail::fail(file, 0, "missing required key '" + std::string(mk) + "'");

    FullConfig fc;
    if (!doc["n_emitters"].is_number_integer())
        detail::fail(file, detail::key_line(raw, "n_emitters"), "'n_emitters' must be an integer");
    fc.model.n_emitters = doc["n_emitters"].get<int>();
    fc.model.j0 = detail::as_number(file, raw, doc["j0"], "j0");
    fc.model.phi = detail::as_number(file, raw, doc["phi"], "phi");
    fc.model.gamma0 = detail::as_number(file, raw, doc["gamma0"], "gamma0");
    fc.model.spacing = detail::as_number(file, raw, doc["spacing"], "spacing");
    if (doc.contains("offsets")) {
        if (!doc["offsets"].is_array())
            detail::fail(file, detail::key_line(raw, "offsets"), "'offsets' must be an array");
        for (const auto& v : doc["offsets"]) {
            if (!v.is_number())
                detail::fail(file, detail::key_line(raw, "offsets"),
                             "'offsets' must contain numbers only");
            fc.model.offsets.push_back(v.get<double>());
        }
    }
    try {
        fc.model.validate();
    } catch (const config_error& e) {
        // re-anchor the field message onto the file
        std::string msg = e.what();
        std::string key;
        for (const char* mk : model_keys)
            if (msg.find(mk) != std::string::npos) { key = mk; break; }
        detail::fail(file, key.empty() ? 0 : detail::key_line(raw, key), msg);
    }

    if (doc.contains("sweep")) {
        const auto& sw = doc["sweep"];
        if (!sw.is_object())
            detail::fail(file, detail::key_line(raw, "sweep"), "'sweep' must be an object");
        for (auto it = sw.begin(); it != sw.end(); ++it) {
            const std::string& k = it.key();
            if (k != "axis1" && k != "axis2" && k != "seed" && k != "samples")
                detail::fail(file, detail::key_line(raw, k), "unknown key '" + k + "' in 'sweep'");
        }
        if (sw.contains("axis1"))
            fc.sweep.axis1 = detail::parse_axis(file, raw, sw["axis1"], "axis1");
        if (sw.contains("axis2"))
            fc.sweep.axis2 = detail::parse_axis(file, raw, sw["axis2"], "axis2");
        if (sw.contains("seed")) {
            if (!sw["seed"].is_number_unsigned() && !sw["seed"].is_number_integer())
                detail::fail(file, detail::key_line(raw, "seed"), "'seed' must be an unsigned integer");
            const auto s = sw["seed"].get<long long>();
            if (s < 0)
                detail::fail(file, detail::key_line(raw, "seed"), "'seed' must be >= 0");
            fc.sweep.seed = static_cast<std::uint64_t>(s);
        }
        if (sw.contains("samples")) {
            if (!sw["samples"].is_number_integer())
                detail::fail(file, detail::key_line(raw, "samples"), "'samples' must be an integer");
            fc.sweep.samples = sw["samples"].get<int>();
        }
    }

    if (doc.contains("dynamics")) {
        const auto& dy = doc["dynamics"];
        if (!dy.is_object())
            detail::fail(file, detail::key_line(raw, "dynamics"), "'dynamics' must be an object");
        for (auto it = dy.begin(); it != dy.end(); ++it) {
            const std::string& k = it.key();
            if (k != "initial" && k != "oracle")
                detail::fail(file, detail::key_line(raw, k), "unknown key '" + k + "' in 'dynamics'");
        }
        if (dy.contains("initial")) {
            if (dy["initial"].is_string()) {
                fc.dynamics.initial = dy["initial"].get<std::string>();
            } else if (dy["initial"].is_array()) {
                fc.dynamics.initial = "amplitudes";
                for (const auto& v : dy["initial"]) {
                    if (!v.is_number())
                        detail::fail(file, detail::key_line(raw, "initial"),
                                     "'initial' amplitudes must be numbers");
                    fc.dynamics.amplitudes.push_back(v.get<double>());
                }
            } else {
                detail::fail(file, detail::key_line(raw, "initial"),
                             "'initial' must be a string or an array of amplitudes");
            }
        }
        if (dy.contains("oracle")) {
            if (!dy["oracle"].is_boolean())
                detail::fail(file, detail::key_line(raw, "oracle"), "'oracle' must be a boolean");
            fc.dynamics.oracle = dy["oracle"].get<bool>();
        }
    }

    fc.canonical = doc.dump();   // nlohmann objects iterate sorted by key
    return fc;
}

inline FullConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw config_error(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

}
