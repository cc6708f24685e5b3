#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "dtpt/errors.hpp"
#include "dtpt/rng.hpp"
#include "dtpt/version.hpp"

namespace dtpt::io {

// 17 significant digits: round-trip exact for binary64, so identical runs
// serialize to identical bytes.
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& s) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
    return buf;
}

// Provenance line for every output file. Deliberately free of timestamps and
// absolute paths; reruns must be byte-identical.
struct Meta {
    std::string command;       // canonicalized invocation, output dir omitted
    std::uint64_t seed = 1;
    std::string config_hash;   // fnv1a over the canonical config dump

    std::string line() const {
        return "# meta: tool=dtpt version=" + std::string(dtpt::version) +
               " command=\"" + command + "\" seed=" + std::to_string(seed) +
               " rng=" + rng_id + " config=fnv1a:" + config_hash;
    }
};

class CsvFile {
public:
    CsvFile(const std::string& path, const Meta& meta, const std::string& header) {
        out_.open(path, std::ios::binary);
        if (!out_)
            throw validation_error("cannot open output file " + path);
        out_ << meta.line() << "\n" << header << "\n";
    }

    void row(const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i)
            out_ << (i ? "," : "") << fields[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw validation_error("cannot open output file " + path);
    out << content;
}

}
