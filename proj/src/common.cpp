#include "dosekit/taxonomy.hpp"
#include "dosekit/error.hpp"
#include "dosekit/text.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dosekit {

std::string_view error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::empty_input: return "empty_input";
        case ErrorKind::infeasible: return "infeasible";
        case ErrorKind::parse: return "parse";
        case ErrorKind::duplicate_key: return "duplicate_key";
        case ErrorKind::truncated: return "truncated";
        case ErrorKind::undefined: return "undefined";
        case ErrorKind::not_converged: return "not_converged";
        case ErrorKind::missing_key: return "missing_key";
        case ErrorKind::io: return "io";
        case ErrorKind::config: return "config";
    }
    return "unknown";
}

std::string category_name(Category c) {
    return "O" + std::to_string(static_cast<int>(c));
}

std::optional<Category> parse_category(std::string_view s) {
    if (s.size() != 2 || s[0] != 'O' || s[1] < '1' || s[1] > '9') return std::nullopt;
    return static_cast<Category>(s[1] - '0');
}

Category category_from_index(std::size_t i) {
    return static_cast<Category>(1 + i % 9);
}

std::string_view stratum_name(Stratum s) {
    return s == Stratum::safe ? "safe" : "adversarial";
}

std::optional<Stratum> parse_stratum(std::string_view s) {
    if (s == "safe") return Stratum::safe;
    if (s == "adversarial") return Stratum::adversarial;
    return std::nullopt;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), ptr);
}

std::string format_double(double x, int significant) {
    if (std::isnan(x)) return "nan";
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x,
                                   std::chars_format::general, significant);
    return std::string(buf.data(), ptr);
}

double parse_double(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw Error(ErrorKind::parse, "cannot parse " + std::string(what) + " from '" + t + "'");
    }
    return value;
}

long long parse_int(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    long long value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        throw Error(ErrorKind::parse, "cannot parse integer " + std::string(what) + " from '" + t + "'");
    }
    return value;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error(ErrorKind::io, "write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        throw Error(ErrorKind::io, "cannot rename " + tmp + " to " + path);
    }
}

}  // namespace dosekit
