#pragma once

// Rates, significance tests, rank correlation, rater agreement and the
// seed-matrix variance decomposition.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dosekit/verdicts.hpp"

namespace dosekit::stats {

struct RateEstimate {
    std::uint64_t unsafe_count = 0;
    std::uint64_t total = 0;
    double rate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double ci_level = 0.95;
};

// Wilson score interval.
RateEstimate rate(std::uint64_t unsafe_count, std::uint64_t total, double ci_level = 0.95);

// q / p; throws Error{undefined} when p = 0.
double amplification(double q, double p);

struct Proportion {
    std::uint64_t unsafe = 0;
    std::uint64_t total = 0;
};

struct TestOptions {
    // Totals at or below this use exact enumeration instead of the normal tail.
    std::uint64_t exact_max_total = 100;
};

struct TestResult {
    double z = 0.0;  // pooled z, (a - b) / se; 0 when se = 0
    double p_value = 1.0;
    std::string method;  // pooled_z | exact_unconditional | degenerate
};

// Two-sided test of equal proportions. With small totals the p-value is the
// probability, under independent binomials at the pooled rate, of a |z| at
// least as large as observed. A pooled rate of 0 or 1 gives p = 1, flagged.
TestResult two_proportion_test(Proportion a, Proportion b, const TestOptions& opts = {});

// Holm step-down adjustment; output aligned with input.
std::vector<double> holm_adjust(std::span<const double> p_values);

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;
    std::string method;  // exact_permutation | t_approximation
};

// Average ranks for ties. Throws Error{undefined} on a constant input.
SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys);
std::vector<double> average_ranks(std::span<const double> xs);

struct KappaResult {
    std::uint64_t n = 0;
    double agreement = 0.0;
    double chance = 0.0;
    std::optional<double> kappa;  // empty when chance agreement is 1
};

KappaResult kappa(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
// From the 2x2 table: both flag, only a, only b, neither.
KappaResult kappa_from_table(std::uint64_t both, std::uint64_t only_a, std::uint64_t only_b, std::uint64_t neither);

// Verdicts of two judges on the same outputs, matched on
// (condition, prompt_id, train_seed, gen_seed). Unmatched records are dropped.
struct PairedVerdicts {
    std::vector<std::uint8_t> a;
    std::vector<std::uint8_t> b;
};
PairedVerdicts pair_judges(const verdicts::VerdictStore& store, const std::string& judge_a,
                           const std::string& judge_b);

struct SeedMatrix {
    std::vector<std::string> row_labels;  // training seeds
    std::vector<std::string> col_labels;  // generation seeds
    std::vector<std::vector<double>> cells;

    std::size_t rows() const { return cells.size(); }
    std::size_t cols() const { return cells.empty() ? 0 : cells.front().size(); }
};

// Shape and finiteness only; any real-valued layout can be decomposed.
void validate_matrix(const SeedMatrix& m);

// CSV: header `train_seed,<col labels>`, one row per training seed. A
// `# scale: percent` comment means cells are percentages. Cells are stored
// as fractions and must lie in [0, 1].
SeedMatrix parse_seed_matrix(std::string_view text);
SeedMatrix read_seed_matrix(const std::string& path);
std::string format_seed_matrix(const SeedMatrix& m);

// Builds a matrix from a (train_seed, gen_seed) stratification; every cell
// must be present.
SeedMatrix seed_matrix_from_table(const verdicts::StratifiedTable& table);

enum class DecompositionMethod {
    sum_of_squares,     // SS_x / SS_total of the crossed two-way layout
    marginal_variance,  // var(row means) / var(cells), same for columns, residual by complement
};

std::string method_name(DecompositionMethod m);
DecompositionMethod parse_decomposition_method(std::string_view s);

struct VarianceDecomposition {
    DecompositionMethod method = DecompositionMethod::sum_of_squares;
    double grand_mean = 0.0;
    double total_std = 0.0;  // sample std over cells
    double frac_rows = 0.0;
    double frac_cols = 0.0;
    double frac_residual = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double ci_level = 0.95;
    bool degenerate = false;  // constant matrix: fractions all 0
};

VarianceDecomposition variance_decomposition(const SeedMatrix& m, double ci_level = 0.95,
                                             DecompositionMethod method = DecompositionMethod::sum_of_squares);

struct JudgeConcordance {
    std::string judge_a;
    std::string judge_b;
    std::optional<double> rho;  // empty if either profile is constant
};

struct SubsetOrdering {
    std::vector<std::string> subset;
    std::map<std::string, std::vector<std::string>> ordering;  // judge -> subset sorted by rate
    std::vector<std::string> flagged;                         // judges that differ from the reference
};

struct CrossJudgeProfile {
    std::vector<std::string> judges;
    std::vector<std::string> conditions;
    std::vector<std::vector<RateEstimate>> rates;  // [judge][condition]
    std::vector<JudgeConcordance> concordance;
    std::string reference_judge;
    std::vector<SubsetOrdering> subsets;
};

struct ProfileOptions {
    std::optional<Stratum> stratum;
    std::optional<std::string> reference_judge;  // default: first judge
    std::vector<std::vector<std::string>> subsets;
};

CrossJudgeProfile cross_judge_profile(const verdicts::VerdictStore& store, const ProfileOptions& opts = {});

// Quantiles shared with other modules.
double normal_quantile(double prob);
double normal_two_sided_p(double z);
double student_t_quantile(double prob, double df);
double student_t_two_sided_p(double t, double df);

}  // namespace dosekit::stats
