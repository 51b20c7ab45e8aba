#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace duplex {

// Minimal key/value + tables configuration format:
//   [section]
//   key = 3.5            # number
//   other = "text"       # quoted string
//   flag = true
//   list = [1, 2, 3]
// Keys are addressed as "section.key". Unknown keys are rejected by callers
// via consumed-key tracking.
class ConfigFile {
public:
    ConfigFile() = default;

    static ConfigFile parse_file(const std::filesystem::path& path);
    static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;

    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;
    std::vector<std::int64_t> get_int_list(const std::string& key,
                                           const std::vector<std::int64_t>& fallback) const;
    std::vector<std::string> get_string_list(const std::string& key,
                                             const std::vector<std::string>& fallback) const;

    // Keys present in the file but never read by any getter; used to reject
    // typos after a consumer has pulled everything it understands.
    std::vector<std::string> unconsumed_keys() const;

private:
    struct Entry {
        std::vector<std::string> tokens;  // scalar = 1 token, list = n tokens
        bool is_list = false;
        bool is_string = false;
        mutable bool consumed = false;
    };

    const Entry* find(const std::string& key) const;

    std::map<std::string, Entry> entries_;
    std::string origin_;
};

}  // namespace duplex
