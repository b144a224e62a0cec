#pragma once

// Labeled corpora and the dose-controlled mixture constructions.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dosekit/taxonomy.hpp"

namespace dosekit::corpus {

struct CorpusItem {
    std::string id;
    bool unsafe = false;
    std::optional<Category> category;  // only on unsafe items
    std::optional<std::string> source;

    bool operator==(const CorpusItem&) const = default;
};

// Ordered, with multiplicity: oversampling repeats items by id.
struct CorpusManifest {
    std::vector<CorpusItem> items;

    bool operator==(const CorpusManifest&) const = default;
};

struct LabelSummary {
    std::uint64_t n = 0;
    std::uint64_t u = 0;
    double p = 0.0;
};

enum class MixMode { filter_all_unsafe, oversample_to_p, proportional_subsample, fixed_unsafe_count };

std::string mode_name(MixMode m);
MixMode parse_mode(std::string_view s);

struct ConditionSpec {
    std::string name;
    double target_p = 0.0;
    std::optional<std::uint64_t> target_n;  // nullopt = derived from the mode
    MixMode mode = MixMode::proportional_subsample;
    std::optional<std::uint64_t> fixed_u;
    std::uint64_t seed = 0;
};

// Achieved size of a condition, computable from base counts alone.
struct ConditionCounts {
    std::uint64_t n = 0;
    std::uint64_t u = 0;
    double p = 0.0;
};

LabelSummary label_summary(const CorpusManifest& manifest);

// Structural checks on a spec alone (mode/field consistency).
void validate_spec(const ConditionSpec& spec);

// Counting-only realization: what build_condition would produce from a base
// with `base_n` items of which `base_u` are unsafe. Throws Error{infeasible}.
ConditionCounts condition_counts(std::uint64_t base_n, std::uint64_t base_u, const ConditionSpec& spec);

CorpusManifest build_condition(const CorpusManifest& base, const ConditionSpec& spec);

struct VerificationReport {
    std::string name;
    std::string mode;
    std::uint64_t n = 0;
    std::uint64_t u = 0;
    double p = 0.0;
    double target_p = 0.0;
    double deviation = 0.0;
    bool pass = false;
};

VerificationReport verify_condition(const CorpusManifest& manifest, const ConditionSpec& spec, double tol);
std::string to_json(const VerificationReport& report);

// CSV with header `id,unsafe,category,source`.
CorpusManifest read_manifest(const std::string& path);
CorpusManifest parse_manifest(std::string_view text);
std::string format_manifest(const CorpusManifest& manifest);
void write_manifest(const std::string& path, const CorpusManifest& manifest);

// Deterministic base corpus with the given safe/unsafe counts (ids s*/u*).
CorpusManifest make_base(std::uint64_t n_safe, std::uint64_t n_unsafe);

}  // namespace dosekit::corpus
