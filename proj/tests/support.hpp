#pragma once

// Shared helpers for the unit and acceptance binaries.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dosekit/error.hpp"
#include "dosekit/rng.hpp"
#include "dosekit/text.hpp"

namespace testsupport {

inline std::string data_path(const std::string& name) {
    return std::string(DOSEKIT_DATA_DIR) + "/" + name;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::uint64_t counter = 0;
        const auto base = std::filesystem::temp_directory_path();
        const auto salt = dosekit::splitmix64(reinterpret_cast<std::uintptr_t>(this) ^ ++counter);
        path_ = base / ("dosekit_" + tag + "_" + std::to_string(salt % 1000000007ULL));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

// Every regular file under `dir` (relative path -> bytes), for tree comparison.
inline std::vector<std::pair<std::string, std::string>> snapshot(const std::string& dir) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        out.emplace_back(std::filesystem::relative(e.path(), dir).string(), dosekit::read_file(e.path().string()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Small seeded generators for property tests.
struct Gen {
    dosekit::Rng rng;
    explicit Gen(std::uint64_t seed) : rng(seed) {}

    std::uint64_t integer(std::uint64_t lo, std::uint64_t hi) { return lo + rng.below(hi - lo + 1); }
    double real(double lo, double hi) { return lo + (hi - lo) * rng.uniform01(); }
    bool coin(double p = 0.5) { return rng.uniform01() < p; }
};

}  // namespace testsupport
