#include "pipeline/config.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pairloc {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

RunConfig::RunConfig(std::string command, std::vector<KeySpec> schema)
    : command_(std::move(command)), schema_(std::move(schema)) {}

const KeySpec& RunConfig::spec_for(const std::string& key) const {
    for (const KeySpec& s : schema_)
        if (s.key == key) return s;
    throw config_error(command_ + ": unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error(command_ + ": cannot open config file '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw config_error(command_ + ": " + path + ":" + std::to_string(line_no) +
                               ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw config_error(command_ + ": " + path + ":" + std::to_string(line_no) +
                               ": empty key");
        set(key, value);
    }
}

void RunConfig::set(const std::string& key, const std::string& value) {
    values_[spec_for(key).key] = value;
}

bool RunConfig::is_set(const std::string& key) const {
    spec_for(key);
    return values_.count(key) != 0;
}

std::string RunConfig::get_string(const std::string& key) const {
    const KeySpec& spec = spec_for(key);
    const auto it = values_.find(key);
    if (it != values_.end()) return it->second;
    if (spec.required)
        throw config_error(command_ + ": required key '" + key + "' is not set");
    return spec.default_value;
}

double RunConfig::get_double(const std::string& key) const {
    const std::string raw = get_string(key);
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw config_error(command_ + ": key '" + key + "' expects a number, got '" + raw + "'");
    }
}

int RunConfig::get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    try {
        std::size_t used = 0;
        const long v = std::stol(raw, &used);
        if (used != raw.size() || v < INT_MIN || v > INT_MAX) throw std::invalid_argument(raw);
        return static_cast<int>(v);
    } catch (const std::exception&) {
        throw config_error(command_ + ": key '" + key + "' expects an integer, got '" + raw +
                           "'");
    }
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string raw = get_string(key);
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(raw, &used);
        if (used != raw.size() || raw.find('-') != std::string::npos)
            throw std::invalid_argument(raw);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw config_error(command_ + ": key '" + key + "' expects a non-negative integer, got '" +
                           raw + "'");
    }
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string raw = lower(get_string(key));
    if (raw == "on" || raw == "true" || raw == "yes" || raw == "1") return true;
    if (raw == "off" || raw == "false" || raw == "no" || raw == "0") return false;
    throw config_error(command_ + ": key '" + key + "' expects on/off, got '" + raw + "'");
}

std::string RunConfig::help_text() const {
    std::ostringstream out;
    std::size_t width = 0;
    for (const KeySpec& s : schema_) width = std::max(width, s.key.size());
    for (const KeySpec& s : schema_) {
        out << "  --" << s.key << std::string(width - s.key.size() + 2, ' ');
        if (s.required)
            out << "(required)  ";
        else
            out << "[" << (s.default_value.empty() ? "none" : s.default_value) << "]  ";
        out << s.help << "\n";
    }
    return out.str();
}

}  // namespace pairloc
