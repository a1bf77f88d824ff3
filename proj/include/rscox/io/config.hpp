#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rscox/core/error.hpp"
#include "rscox/io/csv.hpp"

namespace rscox::io {

/// Flat `key = value` run configuration; `#` starts a comment.
class RunConfig {
public:
    RunConfig() = default;

    static RunConfig parse(std::istream& is, const std::string& source)
    {
        RunConfig cfg;
        cfg.source_ = source;
        std::string line;
        int lineNo = 0;
        while (std::getline(is, line)) {
            ++lineNo;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string t = trim(line);
            if (t.empty()) continue;
            const auto eq = t.find('=');
            if (eq == std::string::npos) {
                throw InputError(source + ":" + std::to_string(lineNo) + ": expected 'key = value'");
            }
            const std::string key = trim(t.substr(0, eq));
            if (key.empty()) throw InputError(source + ":" + std::to_string(lineNo) + ": empty key");
            if (cfg.values_.count(key) != 0) {
                throw InputError(source + ":" + std::to_string(lineNo) + ": duplicate key '" + key + "'");
            }
            cfg.values_[key] = trim(t.substr(eq + 1));
            cfg.lines_[key] = lineNo;
        }
        return cfg;
    }

    static RunConfig load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open config '" + path + "'");
        return parse(in, path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    std::string str(const std::string& key) const
    {
        const auto it = values_.find(key);
        if (it == values_.end()) throw InputError(source_ + ": missing required key '" + key + "'");
        return it->second;
    }

    std::string str(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? str(key) : fallback;
    }

    double num(const std::string& key) const
    {
        const std::string s = str(key);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) fail(key, "not a number: '" + s + "'");
        return v;
    }

    double num(const std::string& key, double fallback) const { return has(key) ? num(key) : fallback; }

    long integer(const std::string& key) const
    {
        const double v = num(key);
        if (v != static_cast<double>(static_cast<long>(v))) fail(key, "not an integer");
        return static_cast<long>(v);
    }

    long integer(const std::string& key, long fallback) const { return has(key) ? integer(key) : fallback; }

    bool flag(const std::string& key, bool fallback) const
    {
        if (!has(key)) return fallback;
        const std::string s = str(key);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        fail(key, "expected true/false, got '" + s + "'");
    }

    const std::map<std::string, std::string>& values() const { return values_; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const
    {
        const auto it = lines_.find(key);
        const std::string where = it == lines_.end() ? source_ : source_ + ":" + std::to_string(it->second);
        throw InputError(where + ": key '" + key + "': " + what);
    }

private:
    std::string source_ = "<config>";
    std::map<std::string, std::string> values_;
    std::map<std::string, int> lines_;
};

}  // namespace rscox::io
