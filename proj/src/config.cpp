#include "duplex/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "duplex/errors.hpp"

namespace duplex {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Strips an unquoted trailing comment.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

double parse_number(const std::string& token, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size()) throw std::invalid_argument(token);
        return v;
    } catch (const std::exception&) {
        throw DataError("config: '" + token + "' is not a number (" + context + ")");
    }
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("config: cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path.string());
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);

        if (line.front() == '[') {
            if (line.back() != ']') throw DataError("config: unterminated section at " + where);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw DataError("config: empty section name at " + where);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config: expected 'key = value' at " + where);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw DataError("config: empty key or value at " + where);
        const std::string full_key = section.empty() ? key : section + "." + key;
        if (cfg.entries_.count(full_key))
            throw DataError("config: duplicate key '" + full_key + "' at " + where);

        Entry entry;
        if (value.front() == '[') {
            if (value.back() != ']') throw DataError("config: unterminated list at " + where);
            entry.is_list = true;
            std::string body = value.substr(1, value.size() - 2);
            std::string token;
            bool in_string = false;
            for (char c : body) {
                if (c == '"') in_string = !in_string;
                if (c == ',' && !in_string) {
                    const std::string t = trim(token);
                    if (!t.empty()) entry.tokens.push_back(t);
                    token.clear();
                } else {
                    token += c;
                }
            }
            const std::string t = trim(token);
            if (!t.empty()) entry.tokens.push_back(t);
        } else {
            entry.tokens.push_back(value);
        }
        for (std::string& token : entry.tokens) {
            if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
                token = token.substr(1, token.size() - 2);
                entry.is_string = true;
            }
        }
        cfg.entries_.emplace(full_key, std::move(entry));
    }
    return cfg;
}

const ConfigFile::Entry* ConfigFile::find(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.consumed = true;
    return &it->second;
}

bool ConfigFile::has(const std::string& key) const { return entries_.count(key) > 0; }

double ConfigFile::get_double(const std::string& key, double fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    if (e->is_list) throw DataError("config: '" + key + "' is a list, expected a scalar");
    return parse_number(e->tokens.front(), key);
}

std::int64_t ConfigFile::get_int(const std::string& key, std::int64_t fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    if (e->is_list) throw DataError("config: '" + key + "' is a list, expected a scalar");
    const double v = parse_number(e->tokens.front(), key);
    const auto i = static_cast<std::int64_t>(v);
    if (static_cast<double>(i) != v)
        throw DataError("config: '" + key + "' must be an integer");
    return i;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    const std::string& t = e->tokens.front();
    if (t == "true") return true;
    if (t == "false") return false;
    throw DataError("config: '" + key + "' must be true or false");
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    return e->tokens.front();
}

std::vector<double> ConfigFile::get_double_list(const std::string& key,
                                                const std::vector<double>& fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::vector<double> out;
    for (const std::string& token : e->tokens) out.push_back(parse_number(token, key));
    return out;
}

std::vector<std::int64_t> ConfigFile::get_int_list(
    const std::string& key, const std::vector<std::int64_t>& fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::vector<std::int64_t> out;
    for (const std::string& token : e->tokens) {
        const double v = parse_number(token, key);
        const auto i = static_cast<std::int64_t>(v);
        if (static_cast<double>(i) != v)
            throw DataError("config: '" + key + "' must hold integers");
        out.push_back(i);
    }
    return out;
}

std::vector<std::string> ConfigFile::get_string_list(
    const std::string& key, const std::vector<std::string>& fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    return e->tokens;
}

std::vector<std::string> ConfigFile::unconsumed_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, entry] : entries_)
        if (!entry.consumed) out.push_back(key);
    return out;
}

}  // namespace duplex
