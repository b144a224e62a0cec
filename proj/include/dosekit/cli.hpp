#pragma once

// Subcommands over a single INI config. Each command writes its outputs
// atomically into the output directory together with a run manifest.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dosekit/simworld.hpp"
#include "dosekit/taxonomy.hpp"

namespace dosekit::cli {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr std::uint64_t kDefaultSeed = 20251016;

enum class OutputFormat { csv, json };

struct ToolConfig {
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    unsigned jobs = 1;
    OutputFormat format = OutputFormat::csv;

    // Inputs; empty means "use the default location or skip".
    std::string base_manifest;
    std::string targets;
    std::string verdicts;
    std::string conditions;
    std::string points;
    std::vector<std::string> seed_matrices;

    std::uint64_t scale = 80;  // divisor applied to the reference family

    simworld::WorldConfig world;
    bool world_seed_set = false;
    std::uint64_t samples_per_prompt = 250;

    double ci_level = 0.95;
    double alpha = 0.05;
    std::uint64_t exact_max_total = 100;

    std::string dose_stratum = "all";  // all | safe | adversarial
    std::string dose_judge;            // empty: first judge

    bool fit_weighted = false;
    std::vector<double> predict_doses;

    std::optional<Stratum> agree_stratum;
    std::string reference_judge;
    std::vector<std::vector<std::string>> subsets;
};

// Built-in defaults, including the root seed, so commands run without a file.
ToolConfig default_config();
// Relative paths in the file resolve against `base_dir`. Unknown keys are
// rejected; a file without a root seed is rejected.
ToolConfig parse_config(std::string_view ini_text, const std::string& base_dir = ".");
ToolConfig load_config(const std::string& path);

// Stable text form of everything that affects outputs (paths by basename,
// output dir and jobs excluded); its hash goes into run manifests.
std::string canonical_config(const ToolConfig& cfg);
std::string sha256_hex(std::string_view data);

// Each command returns the output file names it wrote (relative to out_dir).
std::vector<std::string> cmd_plan(const ToolConfig& cfg);
std::vector<std::string> cmd_mix(const ToolConfig& cfg);
std::vector<std::string> cmd_simulate(const ToolConfig& cfg);
std::vector<std::string> cmd_analyze(const ToolConfig& cfg, std::span<const std::string> inputs = {});
std::vector<std::string> cmd_fit(const ToolConfig& cfg, std::span<const std::string> inputs = {});
std::vector<std::string> cmd_decompose(const ToolConfig& cfg, std::span<const std::string> inputs = {});
std::vector<std::string> cmd_agree(const ToolConfig& cfg, std::span<const std::string> inputs = {});

// Full command line handling. Errors are reported as one JSON object on
// `err` and a nonzero return value.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dosekit::cli
