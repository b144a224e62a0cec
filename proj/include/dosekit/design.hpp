#pragma once

// Factorial condition planning and the contrasts that separate the
// contamination proportion from the absolute unsafe count.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dosekit/corpus.hpp"

namespace dosekit::design {

struct BaseStats {
    std::uint64_t n = 0;
    std::uint64_t u = 0;
};

// One requested condition. Which of p / u / n are required depends on mode:
// proportional_subsample needs n, oversample_to_p needs p, fixed_unsafe_count
// needs u and n, filter_all_unsafe needs nothing.
struct Target {
    std::string name;
    corpus::MixMode mode = corpus::MixMode::proportional_subsample;
    std::optional<double> p;
    std::optional<std::uint64_t> u;
    std::optional<std::uint64_t> n;
};

struct PlannedCondition {
    corpus::ConditionSpec spec;
    corpus::ConditionCounts counts;
};

std::vector<PlannedCondition> plan_factorial(const BaseStats& base, std::span<const Target> targets,
                                             std::uint64_t root_seed);

enum class ContrastKind { matched_proportion_varying_scale, matched_count_varying_proportion };

std::string contrast_kind_name(ContrastKind k);

struct DesignContrast {
    ContrastKind kind = ContrastKind::matched_proportion_varying_scale;
    std::vector<std::string> members;  // sorted by name
    std::string controlled_variable;   // "p" or "U"
    std::string varied_variable;       // "N" or "p"
    double shared_p = 0.0;
    std::uint64_t shared_u = 0;

    bool operator==(const DesignContrast&) const = default;
};

std::vector<DesignContrast> contrasts(std::span<const PlannedCondition> planned);

// The seven-condition reference family at full published scale.
BaseStats reference_base();
std::vector<Target> reference_targets();
// CSV `name,mode,p,U,N` with empty cells for unused fields.
std::vector<Target> parse_targets_csv(std::string_view text);
// Divides every absolute size (n, u) by `divisor`, rounding to nearest.
std::vector<Target> scale_targets(std::span<const Target> targets, std::uint64_t divisor);

// CSV `name,N,p,U,mode,target_p,target_N,fixed_U,seed`; round-trips through parse_plan_csv.
std::string format_plan_csv(std::span<const PlannedCondition> planned);
std::vector<PlannedCondition> parse_plan_csv(std::string_view text);
std::string format_contrasts_json(std::span<const DesignContrast> cs);

}  // namespace dosekit::design
