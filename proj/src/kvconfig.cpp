#include "tristage/kvconfig.hpp"

#include "tristage/csv.hpp"
#include "tristage/error.hpp"

#include <fstream>
#include <sstream>

namespace tristage {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

} // namespace

KeyValues KeyValues::parse(std::string_view text, std::string_view origin) {
    KeyValues kv;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto eol = text.find('\n');
        std::string line = trim(text.substr(0, eol));
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Config, std::string(origin) + ":" + std::to_string(line_no) +
                                               ": expected 'key = value'");
        }
        auto key = trim(std::string_view(line).substr(0, eq));
        if (key.empty()) {
            throw Error(ErrorKind::Config, std::string(origin) + ":" + std::to_string(line_no) + ": empty key");
        }
        kv.values_[key] = trim(std::string_view(line).substr(eq + 1));
    }
    return kv;
}

KeyValues KeyValues::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.string());
}

void KeyValues::set_assignment(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || trim(assignment.substr(0, eq)).empty()) {
        throw Error(ErrorKind::Usage, "override '" + std::string(assignment) + "' is not key=value");
    }
    values_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    auto parsed = csv::parse_double(*v);
    if (!parsed) throw Error(ErrorKind::Config, "config key '" + key + "': '" + *v + "' is not a number");
    return *parsed;
}

std::int64_t KeyValues::get_int(const std::string& key, std::int64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    auto parsed = csv::parse_int(*v);
    if (!parsed) throw Error(ErrorKind::Config, "config key '" + key + "': '" + *v + "' is not an integer");
    return *parsed;
}

void KeyValues::reject_unknown(const std::set<std::string>& known, std::string_view what) const {
    for (const auto& [key, value] : values_) {
        if (!known.count(key)) {
            throw Error(ErrorKind::Config, "unknown " + std::string(what) + " key '" + key + "'");
        }
    }
}

std::string KeyValues::to_string() const {
    std::string out;
    for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
    return out;
}

} // namespace tristage
