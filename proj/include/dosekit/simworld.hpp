#pragma once

// Toy generative world: corpus synthesis, a smoothed count model and an
// exact oracle for its unsafe generation rate.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dosekit/corpus.hpp"
#include "dosekit/taxonomy.hpp"
#include "dosekit/verdicts.hpp"

namespace dosekit::simworld {

enum class Smoothing {
    absolute,  // alpha used as given
    scaled,    // alpha = prior_share * corpus size
};

std::string smoothing_name(Smoothing s);
Smoothing parse_smoothing(std::string_view s);

struct WorldConfig {
    std::size_t n_concepts = 64;
    std::size_t n_unsafe_concepts = 16;
    std::size_t n_tokens = 256;
    std::size_t n_adversarial_tokens = 32;
    double prior_unsafe = 0.166;
    std::size_t emission_sparsity = 4;  // nonzero concepts per token row
    Smoothing smoothing = Smoothing::scaled;
    double alpha = 1.0;
    double prior_share = 0.000375;
    std::size_t n_safe_prompts = 8;
    std::uint64_t seed = 1;
};

void validate_config(const WorldConfig& cfg);

struct World {
    std::vector<bool> unsafe_concept;
    std::vector<Stratum> token_stratum;
    std::vector<std::optional<Category>> token_category;  // adversarial tokens only
    std::vector<double> token_weight;                     // share of items emitted under each token
    std::vector<std::vector<double>> emission;            // [token][concept]
    std::vector<double> prior;                            // [concept]

    std::size_t n_concepts() const { return unsafe_concept.size(); }
    std::size_t n_tokens() const { return token_stratum.size(); }
    double prior_unsafe() const;
};

// Checks shapes, row sums (1 +- 1e-12) and that safe tokens emit only safe
// concepts and adversarial tokens only unsafe ones.
void validate_world(const World& w);

// Adversarial tokens come first; token j < n_adversarial gets category O(j%9+1).
World make_world(const WorldConfig& cfg);

double effective_alpha(const WorldConfig& cfg, std::uint64_t corpus_size);

// Item source tags record the emitting token and concept: "t<token>/c<concept>".
std::string source_tag(std::size_t token, std::size_t concept_id);
std::pair<std::size_t, std::size_t> parse_source_tag(std::string_view tag);

// Exactly round(N*p) unsafe items. Counts per token follow the token
// weights by largest remainder; concepts are drawn from emission rows.
corpus::CorpusManifest synth_corpus(const World& world, double p, std::uint64_t n, std::uint64_t seed);

class TrainedToyModel {
public:
    TrainedToyModel(std::vector<std::vector<std::uint64_t>> counts, double alpha, std::vector<double> prior,
                    std::vector<bool> unsafe_concept);

    const std::vector<std::vector<std::uint64_t>>& counts() const { return counts_; }
    std::uint64_t token_total(std::size_t token) const { return totals_.at(token); }
    double alpha() const { return alpha_; }
    const std::vector<double>& prior() const { return prior_; }
    const std::vector<bool>& unsafe_concept() const { return unsafe_concept_; }
    std::size_t n_tokens() const { return counts_.size(); }

    // (count + alpha*prior) / (total + alpha); throws Error{undefined} for an
    // unseen token when alpha is 0.
    std::vector<double> conditional(std::size_t token) const;
    double p_unsafe(std::size_t token) const;
    bool defined(std::size_t token) const { return alpha_ > 0.0 || totals_.at(token) > 0; }

private:
    std::vector<std::vector<std::uint64_t>> counts_;
    std::vector<std::uint64_t> totals_;
    std::vector<std::uint64_t> unsafe_totals_;
    double alpha_;
    std::vector<double> prior_;
    std::vector<bool> unsafe_concept_;
};

TrainedToyModel train_toy(const corpus::CorpusManifest& manifest, double alpha, const World& world);

struct Prompt {
    std::string id;
    std::size_t token = 0;
    Stratum stratum = Stratum::safe;
    std::optional<Category> category;
};

struct PromptSet {
    std::vector<Prompt> prompts;
};

void validate_prompts(const PromptSet& prompts);

// Every adversarial token once, plus n_safe_prompts safe tokens spread
// evenly over the safe range.
PromptSet make_prompts(const World& world, std::size_t n_safe_prompts);

double oracle_rate(const TrainedToyModel& model, const PromptSet& prompts,
                   std::optional<Stratum> stratum = std::nullopt);

struct GenerateOptions {
    std::string condition = "sim";
    std::string judge = "ground_truth";
    std::optional<std::int64_t> train_seed;
    std::optional<std::int64_t> gen_seed;
    unsigned jobs = 1;
};

// k records per prompt, prompt ids "<prompt>.<sample>". Each prompt draws from
// its own substream, so the output does not depend on jobs.
std::vector<verdicts::VerdictRecord> generate(const TrainedToyModel& model, const PromptSet& prompts,
                                              std::uint64_t k, std::uint64_t seed,
                                              const GenerateOptions& opts = {});

}  // namespace dosekit::simworld
