#pragma once

// Internal CSV helpers shared by the batch, trace and report writers. All
// floats are written with %.17g so a read-back reproduces the exact double.

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace zsirl::csv {

inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) {
        return "";
    }
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) {
            throw std::invalid_argument("trailing characters");
        }
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(context + ": cannot parse number '" + s + "'");
    }
}

// Leading metadata line of the form "# name k1=v1 k2=v2 ...".
inline std::map<std::string, std::string> parse_meta(const std::string& line,
                                                     const std::string& expected_name) {
    std::istringstream is(line);
    std::string hash, name;
    is >> hash >> name;
    if (hash != "#" || name != expected_name) {
        throw std::runtime_error("unexpected file header, wanted '# " + expected_name + "'");
    }
    std::map<std::string, std::string> meta;
    std::string tok;
    while (is >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("malformed metadata token '" + tok + "'");
        }
        meta[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return meta;
}

inline std::string meta_value(const std::map<std::string, std::string>& meta,
                              const std::string& key) {
    const auto it = meta.find(key);
    if (it == meta.end()) {
        throw std::runtime_error("missing metadata key '" + key + "'");
    }
    return it->second;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "' for reading");
    }
    return in;
}

}  // namespace zsirl::csv
