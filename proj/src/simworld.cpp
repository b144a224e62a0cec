#include "dosekit/simworld.hpp"

#include "dosekit/error.hpp"
#include "dosekit/rng.hpp"
#include "dosekit/text.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

namespace dosekit::simworld {

namespace {

// Largest-remainder split of `total` in proportion to `weights`; ties go to
// the lower index.
std::vector<std::uint64_t> apportion(std::uint64_t total, std::span<const double> weights) {
    std::vector<std::uint64_t> out(weights.size(), 0);
    if (weights.empty() || total == 0) return out;
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<double> remainder(weights.size());
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double quota = static_cast<double>(total) * weights[i] / sum;
        out[i] = static_cast<std::uint64_t>(std::floor(quota));
        remainder[i] = quota - std::floor(quota);
        assigned += out[i];
    }
    // Floating error can overshoot by one in pathological cases.
    while (assigned > total) {
        auto it = std::max_element(out.begin(), out.end());
        --*it;
        --assigned;
    }
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
        ++out[order[i]];
        ++assigned;
    }
    return out;
}

std::vector<double> cumulative(std::span<const double> row) {
    std::vector<double> c(row.size());
    std::partial_sum(row.begin(), row.end(), c.begin());
    return c;
}

bool close_to_one(double s) { return std::abs(s - 1.0) <= 1e-12; }

std::string pad3(std::size_t v) {
    std::string s = std::to_string(v);
    return s.size() >= 3 ? s : std::string(3 - s.size(), '0') + s;
}

}  // namespace

std::string smoothing_name(Smoothing s) {
    return s == Smoothing::absolute ? "absolute" : "scaled";
}

Smoothing parse_smoothing(std::string_view s) {
    if (s == "absolute") return Smoothing::absolute;
    if (s == "scaled") return Smoothing::scaled;
    throw Error(ErrorKind::config, "unknown smoothing '" + std::string(s) + "' (expected absolute or scaled)");
}

void validate_config(const WorldConfig& c) {
    const auto bad = [](const std::string& m) { throw Error(ErrorKind::config, m); };
    if (c.n_concepts < 2) bad("world needs at least 2 concepts");
    if (c.n_unsafe_concepts == 0 || c.n_unsafe_concepts >= c.n_concepts) {
        bad("unsafe concepts must be a nonempty proper subset");
    }
    if (c.n_adversarial_tokens == 0 || c.n_adversarial_tokens >= c.n_tokens) {
        bad("adversarial tokens must be a nonempty proper subset");
    }
    if (!(c.prior_unsafe > 0.0 && c.prior_unsafe < 1.0)) bad("prior_unsafe must lie in (0, 1)");
    if (c.emission_sparsity == 0) bad("emission_sparsity must be positive");
    if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha)) bad("alpha must be finite and >= 0");
    if (!(c.prior_share >= 0.0) || !std::isfinite(c.prior_share)) bad("prior_share must be finite and >= 0");
    if (c.n_safe_prompts > c.n_tokens - c.n_adversarial_tokens) bad("more safe prompts than safe tokens");
}

double World::prior_unsafe() const {
    double s = 0.0;
    for (std::size_t c = 0; c < prior.size(); ++c) {
        if (unsafe_concept[c]) s += prior[c];
    }
    return s;
}

void validate_world(const World& w) {
    const auto bad = [](const std::string& m) { throw Error(ErrorKind::invalid_argument, m); };
    const std::size_t nc = w.n_concepts(), nt = w.n_tokens();
    if (nc == 0 || nt == 0) bad("world has no concepts or no tokens");
    if (w.prior.size() != nc) bad("prior length differs from concept count");
    if (w.emission.size() != nt || w.token_category.size() != nt || w.token_weight.size() != nt) {
        bad("per-token tables differ in length");
    }
    double prior_sum = 0.0;
    for (double v : w.prior) {
        if (!(v >= 0.0)) bad("prior has a negative entry");
        prior_sum += v;
    }
    if (!close_to_one(prior_sum)) bad("prior does not sum to 1");
    for (std::size_t t = 0; t < nt; ++t) {
        const auto& row = w.emission[t];
        if (row.size() != nc) bad("emission row " + std::to_string(t) + " has wrong length");
        double s = 0.0;
        for (std::size_t c = 0; c < nc; ++c) {
            if (!(row[c] >= 0.0)) bad("emission row " + std::to_string(t) + " has a negative entry");
            const bool adversarial = w.token_stratum[t] == Stratum::adversarial;
            if (row[c] > 0.0 && w.unsafe_concept[c] != adversarial) {
                bad("token " + std::to_string(t) + " emits a concept outside its stratum");
            }
            s += row[c];
        }
        if (!close_to_one(s)) bad("emission row " + std::to_string(t) + " does not sum to 1");
        if (w.token_category[t] && w.token_stratum[t] != Stratum::adversarial) {
            bad("safe token " + std::to_string(t) + " carries a category");
        }
        if (!(w.token_weight[t] >= 0.0)) bad("negative token weight");
    }
}

World make_world(const WorldConfig& cfg) {
    validate_config(cfg);
    World w;
    w.unsafe_concept.assign(cfg.n_concepts, false);
    for (std::size_t c = 0; c < cfg.n_unsafe_concepts; ++c) w.unsafe_concept[c] = true;

    const std::size_t n_safe_concepts = cfg.n_concepts - cfg.n_unsafe_concepts;
    w.prior.resize(cfg.n_concepts);
    for (std::size_t c = 0; c < cfg.n_concepts; ++c) {
        w.prior[c] = w.unsafe_concept[c] ? cfg.prior_unsafe / static_cast<double>(cfg.n_unsafe_concepts)
                                         : (1.0 - cfg.prior_unsafe) / static_cast<double>(n_safe_concepts);
    }

    Rng weight_rng(derive_seed(cfg.seed, "token_weight"));
    Rng emission_rng(derive_seed(cfg.seed, "emission"));
    for (std::size_t t = 0; t < cfg.n_tokens; ++t) {
        const bool adversarial = t < cfg.n_adversarial_tokens;
        w.token_stratum.push_back(adversarial ? Stratum::adversarial : Stratum::safe);
        w.token_category.push_back(adversarial ? std::optional(category_from_index(t)) : std::nullopt);
        w.token_weight.push_back(0.5 + weight_rng.uniform01());

        const std::size_t offset = adversarial ? 0 : cfg.n_unsafe_concepts;
        const std::size_t pool = adversarial ? cfg.n_unsafe_concepts : n_safe_concepts;
        const std::size_t k = std::min(cfg.emission_sparsity, pool);
        std::vector<double> row(cfg.n_concepts, 0.0);
        double sum = 0.0;
        for (std::size_t idx : emission_rng.sample_indices(pool, k)) {
            const double v = 0.5 + emission_rng.uniform01();
            row[offset + idx] = v;
            sum += v;
        }
        for (double& v : row) v /= sum;
        w.emission.push_back(std::move(row));
    }
    return w;
}

double effective_alpha(const WorldConfig& cfg, std::uint64_t corpus_size) {
    return cfg.smoothing == Smoothing::absolute ? cfg.alpha : cfg.prior_share * static_cast<double>(corpus_size);
}

std::string source_tag(std::size_t token, std::size_t concept_id) {
    return "t" + pad3(token) + "/c" + pad3(concept_id);
}

std::pair<std::size_t, std::size_t> parse_source_tag(std::string_view tag) {
    const auto slash = tag.find('/');
    if (tag.size() < 4 || tag.front() != 't' || slash == std::string_view::npos || slash + 1 >= tag.size() ||
        tag[slash + 1] != 'c') {
        throw Error(ErrorKind::parse, "malformed source tag '" + std::string(tag) + "'");
    }
    const auto token = parse_int(tag.substr(1, slash - 1), "source token");
    const auto concept_id = parse_int(tag.substr(slash + 2), "source concept");
    if (token < 0 || concept_id < 0) throw Error(ErrorKind::parse, "negative index in source tag");
    return {static_cast<std::size_t>(token), static_cast<std::size_t>(concept_id)};
}

corpus::CorpusManifest synth_corpus(const World& world, double p, std::uint64_t n, std::uint64_t seed) {
    if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorKind::invalid_argument, "p must lie in [0, 1)");
    if (n == 0) throw Error(ErrorKind::invalid_argument, "N must be positive");
    const auto u = static_cast<std::uint64_t>(std::floor(static_cast<double>(n) * p + 0.5));
    const std::uint64_t s = n - u;

    std::vector<std::size_t> adv_tokens, safe_tokens;
    std::vector<double> adv_weights, safe_weights;
    for (std::size_t t = 0; t < world.n_tokens(); ++t) {
        if (world.token_stratum[t] == Stratum::adversarial) {
            adv_tokens.push_back(t);
            adv_weights.push_back(world.token_weight[t]);
        } else {
            safe_tokens.push_back(t);
            safe_weights.push_back(world.token_weight[t]);
        }
    }
    const auto positive = [](const std::vector<double>& ws) {
        return std::any_of(ws.begin(), ws.end(), [](double v) { return v > 0.0; });
    };
    if (u > 0 && !positive(adv_weights)) {
        throw Error(ErrorKind::infeasible, "no adversarial token can emit the requested unsafe items");
    }
    if (s > 0 && !positive(safe_weights)) {
        throw Error(ErrorKind::infeasible, "p too high: no safe concepts are reachable under emission");
    }

    const auto adv_counts = apportion(u, adv_weights);
    const auto safe_counts = apportion(s, safe_weights);

    corpus::CorpusManifest m;
    m.items.reserve(n);
    Rng rng(derive_seed(seed, "concepts"));
    const auto emit = [&](std::size_t token, std::uint64_t count) {
        const auto cum = cumulative(world.emission[token]);
        for (std::uint64_t i = 0; i < count; ++i) {
            const std::size_t c = rng.categorical(cum);
            corpus::CorpusItem item;
            item.id = "x" + std::to_string(m.items.size());
            item.unsafe = world.unsafe_concept[c];
            if (item.unsafe) item.category = world.token_category[token];
            item.source = source_tag(token, c);
            m.items.push_back(std::move(item));
        }
    };
    for (std::size_t i = 0; i < adv_tokens.size(); ++i) emit(adv_tokens[i], adv_counts[i]);
    for (std::size_t i = 0; i < safe_tokens.size(); ++i) emit(safe_tokens[i], safe_counts[i]);

    Rng order(derive_seed(seed, "order"));
    order.shuffle(std::span(m.items));
    return m;
}

TrainedToyModel::TrainedToyModel(std::vector<std::vector<std::uint64_t>> counts, double alpha,
                                 std::vector<double> prior, std::vector<bool> unsafe_concept)
    : counts_(std::move(counts)), alpha_(alpha), prior_(std::move(prior)), unsafe_concept_(std::move(unsafe_concept)) {
    if (!(alpha_ >= 0.0) || !std::isfinite(alpha_)) throw Error(ErrorKind::invalid_argument, "alpha must be >= 0");
    if (prior_.size() != unsafe_concept_.size()) throw Error(ErrorKind::invalid_argument, "prior/concept mismatch");
    for (const auto& row : counts_) {
        if (row.size() != prior_.size()) throw Error(ErrorKind::invalid_argument, "count row has wrong length");
        std::uint64_t total = 0, unsafe = 0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            total += row[c];
            if (unsafe_concept_[c]) unsafe += row[c];
        }
        totals_.push_back(total);
        unsafe_totals_.push_back(unsafe);
    }
}

std::vector<double> TrainedToyModel::conditional(std::size_t token) const {
    if (token >= counts_.size()) throw Error(ErrorKind::invalid_argument, "token out of range");
    if (!defined(token)) {
        throw Error(ErrorKind::undefined,
                    "conditional for token " + std::to_string(token) + " is undefined (no counts and alpha = 0)");
    }
    const double denom = static_cast<double>(totals_[token]) + alpha_;
    std::vector<double> out(prior_.size());
    for (std::size_t c = 0; c < prior_.size(); ++c) {
        out[c] = (static_cast<double>(counts_[token][c]) + alpha_ * prior_[c]) / denom;
    }
    return out;
}

double TrainedToyModel::p_unsafe(std::size_t token) const {
    if (token >= counts_.size()) throw Error(ErrorKind::invalid_argument, "token out of range");
    if (!defined(token)) {
        throw Error(ErrorKind::undefined,
                    "conditional for token " + std::to_string(token) + " is undefined (no counts and alpha = 0)");
    }
    double prior_u = 0.0;
    for (std::size_t c = 0; c < prior_.size(); ++c) {
        if (unsafe_concept_[c]) prior_u += prior_[c];
    }
    return (static_cast<double>(unsafe_totals_[token]) + alpha_ * prior_u) /
           (static_cast<double>(totals_[token]) + alpha_);
}

TrainedToyModel train_toy(const corpus::CorpusManifest& manifest, double alpha, const World& world) {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::invalid_argument, "alpha must be >= 0");
    std::vector<std::vector<std::uint64_t>> counts(world.n_tokens(), std::vector<std::uint64_t>(world.n_concepts(), 0));
    for (std::size_t i = 0; i < manifest.items.size(); ++i) {
        const auto& item = manifest.items[i];
        if (!item.source) {
            throw Error(ErrorKind::invalid_argument, "item '" + item.id + "' has no source tag", i + 1);
        }
        const auto [t, c] = parse_source_tag(*item.source);
        if (t >= world.n_tokens() || c >= world.n_concepts()) {
            throw Error(ErrorKind::invalid_argument, "item '" + item.id + "' refers outside the world", i + 1);
        }
        if (item.unsafe != world.unsafe_concept[c]) {
            throw Error(ErrorKind::invalid_argument, "item '" + item.id + "' label disagrees with its concept", i + 1);
        }
        ++counts[t][c];
    }
    return TrainedToyModel(std::move(counts), alpha, world.prior, world.unsafe_concept);
}

void validate_prompts(const PromptSet& ps) {
    for (const auto& p : ps.prompts) {
        if (p.stratum == Stratum::adversarial && !p.category) {
            throw Error(ErrorKind::invalid_argument, "adversarial prompt '" + p.id + "' lacks a category");
        }
        if (p.stratum == Stratum::safe && p.category) {
            throw Error(ErrorKind::invalid_argument, "safe prompt '" + p.id + "' carries a category");
        }
    }
}

PromptSet make_prompts(const World& world, std::size_t n_safe_prompts) {
    PromptSet ps;
    std::vector<std::size_t> safe_tokens;
    for (std::size_t t = 0; t < world.n_tokens(); ++t) {
        if (world.token_stratum[t] == Stratum::adversarial) {
            ps.prompts.push_back({"a" + pad3(t), t, Stratum::adversarial,
                                  world.token_category[t] ? world.token_category[t] : category_from_index(t)});
        } else {
            safe_tokens.push_back(t);
        }
    }
    if (n_safe_prompts > safe_tokens.size()) {
        throw Error(ErrorKind::invalid_argument, "more safe prompts requested than safe tokens exist");
    }
    for (std::size_t i = 0; i < n_safe_prompts; ++i) {
        const std::size_t t = safe_tokens[i * safe_tokens.size() / n_safe_prompts];
        ps.prompts.push_back({"s" + pad3(t), t, Stratum::safe, std::nullopt});
    }
    return ps;
}

double oracle_rate(const TrainedToyModel& model, const PromptSet& prompts, std::optional<Stratum> stratum) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& p : prompts.prompts) {
        if (stratum && p.stratum != *stratum) continue;
        sum += model.p_unsafe(p.token);
        ++count;
    }
    if (count == 0) throw Error(ErrorKind::empty_input, "no prompts in the requested stratum");
    return sum / static_cast<double>(count);
}

std::vector<verdicts::VerdictRecord> generate(const TrainedToyModel& model, const PromptSet& prompts,
                                              std::uint64_t k, std::uint64_t seed, const GenerateOptions& opts) {
    if (k == 0) throw Error(ErrorKind::invalid_argument, "k must be at least 1");
    validate_prompts(prompts);
    const std::size_t np = prompts.prompts.size();
    std::vector<std::vector<verdicts::VerdictRecord>> per_prompt(np);

    const auto run_prompt = [&](std::size_t i) {
        const auto& prompt = prompts.prompts[i];
        const auto cum = cumulative(model.conditional(prompt.token));
        Rng rng(derive_seed(seed, i));
        auto& out = per_prompt[i];
        out.reserve(k);
        for (std::uint64_t j = 0; j < k; ++j) {
            const std::size_t c = rng.categorical(cum);
            verdicts::VerdictRecord r;
            r.condition = opts.condition;
            r.judge = opts.judge;
            r.prompt_id = prompt.id + "." + std::to_string(j);
            r.stratum = prompt.stratum;
            r.category = prompt.category;
            r.unsafe = model.unsafe_concept()[c];
            r.train_seed = opts.train_seed;
            r.gen_seed = opts.gen_seed;
            out.push_back(std::move(r));
        }
    };

    const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(std::max<std::size_t>(np, 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < np; ++i) run_prompt(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(jobs);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = next++; i < np; i = next++) run_prompt(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    std::vector<verdicts::VerdictRecord> out;
    out.reserve(np * k);
    for (auto& v : per_prompt) std::move(v.begin(), v.end(), std::back_inserter(out));
    return out;
}

}  // namespace dosekit::simworld
