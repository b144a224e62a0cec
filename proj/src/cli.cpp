#include "dosekit/cli.hpp"

#include "dosekit/corpus.hpp"
#include "dosekit/design.hpp"
#include "dosekit/doseresponse.hpp"
#include "dosekit/error.hpp"
#include "dosekit/rng.hpp"
#include "dosekit/stats.hpp"
#include "dosekit/text.hpp"
#include "dosekit/verdicts.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace dosekit::cli {

namespace {

// ---------------------------------------------------------------- config

const std::map<std::string, std::set<std::string>> kSchema = {
    {"run", {"seed", "out", "jobs", "format"}},
    {"paths", {"base_manifest", "targets", "verdicts", "conditions", "points", "seed_matrices"}},
    {"design", {"scale"}},
    {"world",
     {"concepts", "unsafe_concepts", "tokens", "adversarial_tokens", "prior_unsafe", "emission_sparsity", "smoothing",
      "alpha", "prior_share", "safe_prompts", "samples_per_prompt", "seed"}},
    {"stats", {"ci_level", "alpha", "exact_max_total"}},
    {"analyze", {"dose_stratum", "judge"}},
    {"fit", {"weighted", "predict"}},
    {"agree", {"stratum", "reference_judge", "subsets"}},
};

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
        throw Error(ErrorKind::config, std::string(what) + ": expected a nonnegative integer, got '" + t + "'");
    }
    return v;
}

bool parse_bool(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw Error(ErrorKind::config, std::string(what) + ": expected true or false, got '" + t + "'");
}

double config_double(std::string_view s, std::string_view what) {
    try {
        return parse_double(trim(s), what);
    } catch (const Error& e) {
        throw Error(ErrorKind::config, e.what());
    }
}

OutputFormat parse_format(std::string_view s) {
    if (s == "csv") return OutputFormat::csv;
    if (s == "json") return OutputFormat::json;
    throw Error(ErrorKind::config, "format must be csv or json, got '" + std::string(s) + "'");
}

std::string resolve(const std::string& base_dir, const std::string& value) {
    if (value.empty()) return value;
    const fs::path p(value);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (fs::path(base_dir) / p).lexically_normal().string();
}

std::vector<std::string> split_list(std::string_view s, char sep) {
    std::vector<std::string> out;
    for (auto& part : split(s, sep)) {
        auto t = trim(part);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

std::string basename_of(const std::string& path) {
    return path.empty() ? std::string() : fs::path(path).filename().string();
}

// ---------------------------------------------------------------- tables

using Cell = std::variant<std::monostate, std::string, std::int64_t, std::uint64_t, double, bool>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string cell_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "";
            else if constexpr (std::is_same_v<T, std::string>) return v;
            else if constexpr (std::is_same_v<T, double>) return format_double(v);
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else return std::to_string(v);
        },
        c);
}

ojson cell_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> ojson {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return nullptr;
            else return v;
        },
        c);
}

ojson table_json(const Table& t) {
    ojson arr = ojson::array();
    for (const auto& row : t.rows) {
        ojson obj = ojson::object();
        for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
        arr.push_back(std::move(obj));
    }
    return arr;
}

std::string render(const Table& t, OutputFormat fmt) {
    if (fmt == OutputFormat::json) return table_json(t).dump(2) + "\n";
    std::string out = join(t.columns, ",") + "\n";
    for (const auto& row : t.rows) {
        std::vector<std::string> cells;
        for (const auto& c : row) cells.push_back(cell_text(c));
        out += join(cells, ",") + "\n";
    }
    return out;
}

std::string table_file(const std::string& stem, OutputFormat fmt) {
    return stem + (fmt == OutputFormat::json ? ".json" : ".csv");
}

Cell opt_cell(const std::optional<double>& v) {
    return v ? Cell(*v) : Cell(std::monostate{});
}

// ---------------------------------------------------------------- outputs

class OutputSet {
public:
    OutputSet(const ToolConfig& cfg, std::string command) : cfg_(cfg), command_(std::move(command)) {}

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

    std::string read_input(const std::string& path) {
        std::string content = read_file(path);
        inputs_.emplace_back(basename_of(path), sha256_hex(content));
        return content;
    }

    std::vector<std::string> commit() {
        const fs::path dir(cfg_.out_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error(ErrorKind::io, "cannot create output directory '" + dir.string() + "': " + ec.message());

        ojson manifest;
        manifest["command"] = command_;
        manifest["tool_version"] = kToolVersion;
        manifest["seed"] = *cfg_.seed;
        manifest["config_sha256"] = sha256_hex(canonical_config(cfg_));
        ojson inputs = ojson::array();
        for (const auto& [name, hash] : inputs_) inputs.push_back({{"file", name}, {"sha256", hash}});
        manifest["inputs"] = inputs;
        ojson outputs = ojson::array();
        std::vector<std::string> names;
        for (const auto& [name, content] : files_) {
            const fs::path target = dir / name;
            fs::create_directories(target.parent_path(), ec);
            if (ec) throw Error(ErrorKind::io, "cannot create directory '" + target.parent_path().string() + "'");
            write_file(target.string(), content);
            outputs.push_back({{"file", name}, {"sha256", sha256_hex(content)}});
            names.push_back(name);
        }
        manifest["outputs"] = outputs;
        const std::string manifest_name = command_ + ".run.json";
        write_file((dir / manifest_name).string(), manifest.dump(2) + "\n");
        names.push_back(manifest_name);
        return names;
    }

private:
    const ToolConfig& cfg_;
    std::string command_;
    std::vector<std::pair<std::string, std::string>> files_;
    std::vector<std::pair<std::string, std::string>> inputs_;
};

// ---------------------------------------------------------------- shared steps

std::uint64_t root_seed(const ToolConfig& cfg) {
    if (!cfg.seed) throw Error(ErrorKind::config, "a root seed is required ([run] seed or --seed)");
    return *cfg.seed;
}

unsigned effective_jobs(const ToolConfig& cfg) {
    if (cfg.jobs > 0) return cfg.jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

design::BaseStats scaled_reference_base(const ToolConfig& cfg) {
    if (cfg.scale == 0) throw Error(ErrorKind::config, "design scale must be positive");
    const auto ref = design::reference_base();
    const auto scale = [&](std::uint64_t v) { return (2 * v + cfg.scale) / (2 * cfg.scale); };
    return {scale(ref.n), scale(ref.u)};
}

std::vector<design::Target> load_targets(const ToolConfig& cfg, OutputSet& outs) {
    if (!cfg.targets.empty()) return design::parse_targets_csv(outs.read_input(cfg.targets));
    const auto ref = design::reference_targets();
    return design::scale_targets(ref, cfg.scale);
}

std::string default_input(const ToolConfig& cfg, std::span<const std::string> inputs, const std::string& configured,
                          const std::string& fallback_name) {
    if (!inputs.empty()) return inputs.front();
    if (!configured.empty()) return configured;
    return (fs::path(cfg.out_dir) / fallback_name).string();
}

bool has_suffix(const std::string& s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

verdicts::VerdictStore load_store(const std::string& path, OutputSet& outs) {
    const std::string text = outs.read_input(path);
    if (has_suffix(path, ".csv")) {
        const auto rows = verdicts::parse_count_table(text);
        return verdicts::VerdictStore::from_records(verdicts::expand_counts(rows));
    }
    return verdicts::parse_jsonl(text);
}

std::optional<Stratum> parse_dose_stratum(const std::string& s) {
    if (s == "all") return std::nullopt;
    const auto st = parse_stratum(s);
    if (!st) throw Error(ErrorKind::config, "dose_stratum must be all, safe or adversarial");
    return st;
}

}  // namespace

// ---------------------------------------------------------------- config API

ToolConfig default_config() {
    ToolConfig cfg;
    cfg.seed = kDefaultSeed;
    return cfg;
}

ToolConfig parse_config(std::string_view ini_text, const std::string& base_dir) {
    boost::property_tree::ptree tree;
    std::istringstream in{std::string(ini_text)};
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw Error(ErrorKind::config, "config: " + e.message(), e.line());
    }

    ToolConfig cfg;
    for (const auto& [section, body] : tree) {
        const auto known = kSchema.find(section);
        if (known == kSchema.end()) {
            if (!body.data().empty()) throw Error(ErrorKind::config, "config key '" + section + "' outside any section");
            throw Error(ErrorKind::config, "unknown config section [" + section + "]");
        }
        for (const auto& [key, node] : body) {
            if (!known->second.count(key)) {
                throw Error(ErrorKind::config, "unknown config key '" + key + "' in [" + section + "]");
            }
            const std::string v = trim(node.data());
            const std::string what = section + "." + key;
            if (section == "run") {
                if (key == "seed") cfg.seed = parse_u64(v, what);
                else if (key == "out") cfg.out_dir = resolve(base_dir, v);
                else if (key == "jobs") cfg.jobs = static_cast<unsigned>(parse_u64(v, what));
                else if (key == "format") cfg.format = parse_format(v);
            } else if (section == "paths") {
                if (key == "base_manifest") cfg.base_manifest = resolve(base_dir, v);
                else if (key == "targets") cfg.targets = resolve(base_dir, v);
                else if (key == "verdicts") cfg.verdicts = resolve(base_dir, v);
                else if (key == "conditions") cfg.conditions = resolve(base_dir, v);
                else if (key == "points") cfg.points = resolve(base_dir, v);
                else if (key == "seed_matrices") {
                    for (const auto& p : split_list(v, ',')) cfg.seed_matrices.push_back(resolve(base_dir, p));
                }
            } else if (section == "design") {
                cfg.scale = parse_u64(v, what);
            } else if (section == "world") {
                auto& w = cfg.world;
                if (key == "concepts") w.n_concepts = parse_u64(v, what);
                else if (key == "unsafe_concepts") w.n_unsafe_concepts = parse_u64(v, what);
                else if (key == "tokens") w.n_tokens = parse_u64(v, what);
                else if (key == "adversarial_tokens") w.n_adversarial_tokens = parse_u64(v, what);
                else if (key == "prior_unsafe") w.prior_unsafe = config_double(v, what);
                else if (key == "emission_sparsity") w.emission_sparsity = parse_u64(v, what);
                else if (key == "smoothing") w.smoothing = simworld::parse_smoothing(v);
                else if (key == "alpha") w.alpha = config_double(v, what);
                else if (key == "prior_share") w.prior_share = config_double(v, what);
                else if (key == "safe_prompts") w.n_safe_prompts = parse_u64(v, what);
                else if (key == "samples_per_prompt") cfg.samples_per_prompt = parse_u64(v, what);
                else if (key == "seed") {
                    w.seed = parse_u64(v, what);
                    cfg.world_seed_set = true;
                }
            } else if (section == "stats") {
                if (key == "ci_level") cfg.ci_level = config_double(v, what);
                else if (key == "alpha") cfg.alpha = config_double(v, what);
                else if (key == "exact_max_total") cfg.exact_max_total = parse_u64(v, what);
            } else if (section == "analyze") {
                if (key == "dose_stratum") {
                    cfg.dose_stratum = v;
                    parse_dose_stratum(v);
                } else if (key == "judge") {
                    cfg.dose_judge = v;
                }
            } else if (section == "fit") {
                if (key == "weighted") cfg.fit_weighted = parse_bool(v, what);
                else if (key == "predict") {
                    for (const auto& d : split_list(v, ',')) cfg.predict_doses.push_back(config_double(d, what));
                }
            } else if (section == "agree") {
                if (key == "stratum") {
                    if (v != "all") {
                        cfg.agree_stratum = parse_stratum(v);
                        if (!cfg.agree_stratum) throw Error(ErrorKind::config, what + ": unknown stratum '" + v + "'");
                    }
                } else if (key == "reference_judge") {
                    cfg.reference_judge = v;
                } else if (key == "subsets") {
                    for (const auto& group : split_list(v, ';')) cfg.subsets.push_back(split_list(group, '|'));
                }
            }
        }
    }
    if (!cfg.seed) throw Error(ErrorKind::config, "config has no root seed ([run] seed)");
    if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0)) throw Error(ErrorKind::config, "stats.ci_level must lie in (0, 1)");
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error(ErrorKind::config, "stats.alpha must lie in (0, 1)");
    if (cfg.samples_per_prompt == 0) throw Error(ErrorKind::config, "world.samples_per_prompt must be positive");
    simworld::validate_config(cfg.world);
    return cfg;
}

ToolConfig load_config(const std::string& path) {
    const std::string text = read_file(path);
    const auto dir = fs::path(path).parent_path();
    return parse_config(text, dir.empty() ? "." : dir.string());
}

std::string canonical_config(const ToolConfig& cfg) {
    ojson j;
    j["seed"] = cfg.seed ? ojson(*cfg.seed) : ojson(nullptr);
    j["format"] = cfg.format == OutputFormat::json ? "json" : "csv";
    j["paths"] = {{"base_manifest", basename_of(cfg.base_manifest)}, {"targets", basename_of(cfg.targets)},
                  {"verdicts", basename_of(cfg.verdicts)},           {"conditions", basename_of(cfg.conditions)},
                  {"points", basename_of(cfg.points)}};
    ojson matrices = ojson::array();
    for (const auto& m : cfg.seed_matrices) matrices.push_back(basename_of(m));
    j["paths"]["seed_matrices"] = matrices;
    j["scale"] = cfg.scale;
    const auto& w = cfg.world;
    j["world"] = {{"concepts", w.n_concepts},
                  {"unsafe_concepts", w.n_unsafe_concepts},
                  {"tokens", w.n_tokens},
                  {"adversarial_tokens", w.n_adversarial_tokens},
                  {"prior_unsafe", w.prior_unsafe},
                  {"emission_sparsity", w.emission_sparsity},
                  {"smoothing", simworld::smoothing_name(w.smoothing)},
                  {"alpha", w.alpha},
                  {"prior_share", w.prior_share},
                  {"safe_prompts", w.n_safe_prompts},
                  {"samples_per_prompt", cfg.samples_per_prompt},
                  {"seed", cfg.world_seed_set ? ojson(w.seed) : ojson(nullptr)}};
    j["stats"] = {{"ci_level", cfg.ci_level}, {"alpha", cfg.alpha}, {"exact_max_total", cfg.exact_max_total}};
    j["analyze"] = {{"dose_stratum", cfg.dose_stratum}, {"judge", cfg.dose_judge}};
    j["fit"] = {{"weighted", cfg.fit_weighted}, {"predict", cfg.predict_doses}};
    j["agree"] = {{"stratum", cfg.agree_stratum ? std::string(stratum_name(*cfg.agree_stratum)) : "all"},
                  {"reference_judge", cfg.reference_judge},
                  {"subsets", cfg.subsets}};
    return j.dump();
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw Error(ErrorKind::io, "sha256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

// ---------------------------------------------------------------- commands

std::vector<std::string> cmd_plan(const ToolConfig& cfg) {
    OutputSet outs(cfg, "plan");
    const auto seed = root_seed(cfg);
    design::BaseStats base = scaled_reference_base(cfg);
    if (!cfg.base_manifest.empty()) {
        const auto s = corpus::label_summary(corpus::parse_manifest(outs.read_input(cfg.base_manifest)));
        base = {s.n, s.u};
    }
    const auto targets = load_targets(cfg, outs);
    const auto planned = design::plan_factorial(base, targets, seed);
    outs.add("plan.csv", design::format_plan_csv(planned));
    outs.add("contrasts.json", design::format_contrasts_json(design::contrasts(planned)));
    return outs.commit();
}

std::vector<std::string> cmd_mix(const ToolConfig& cfg) {
    OutputSet outs(cfg, "mix");
    const auto seed = root_seed(cfg);
    corpus::CorpusManifest base;
    if (!cfg.base_manifest.empty()) {
        base = corpus::parse_manifest(outs.read_input(cfg.base_manifest));
    } else {
        const auto b = scaled_reference_base(cfg);
        base = corpus::make_base(b.n - b.u, b.u);
    }
    const auto summary = corpus::label_summary(base);
    const auto targets = load_targets(cfg, outs);
    const auto planned = design::plan_factorial({summary.n, summary.u}, targets, seed);

    Table t{{"name", "mode", "N", "U", "p", "target_p", "deviation", "tolerance", "pass"}, {}};
    ojson reports = ojson::array();
    std::vector<std::string> failed;
    for (const auto& pc : planned) {
        const auto m = corpus::build_condition(base, pc.spec);
        const double tol = 1.0 / static_cast<double>(m.items.size());
        const auto rep = corpus::verify_condition(m, pc.spec, tol);
        reports.push_back(ojson::parse(corpus::to_json(rep)));
        t.rows.push_back({rep.name, rep.mode, rep.n, rep.u, rep.p, rep.target_p, rep.deviation, tol, rep.pass});
        if (!rep.pass) failed.push_back(rep.name);
        outs.add("mix/" + pc.spec.name + ".csv", corpus::format_manifest(m));
    }
    outs.add("plan.csv", design::format_plan_csv(planned));
    outs.add("verification.json", reports.dump(2) + "\n");
    outs.add(table_file("mix_summary", cfg.format), render(t, cfg.format));
    auto written = outs.commit();
    if (!failed.empty()) {
        throw Error(ErrorKind::infeasible, "verification failed for: " + join(failed, ", "));
    }
    return written;
}

std::vector<std::string> cmd_simulate(const ToolConfig& cfg) {
    OutputSet outs(cfg, "simulate");
    const auto seed = root_seed(cfg);
    simworld::WorldConfig wc = cfg.world;
    if (!cfg.world_seed_set) wc.seed = derive_seed(seed, "world");
    const auto world = simworld::make_world(wc);
    const auto prompts = simworld::make_prompts(world, wc.n_safe_prompts);

    const auto b = scaled_reference_base(cfg);
    const double base_p = static_cast<double>(b.u) / static_cast<double>(b.n);
    const auto base = simworld::synth_corpus(world, base_p, b.n, derive_seed(seed, "base_corpus"));
    const auto summary = corpus::label_summary(base);
    const auto targets = load_targets(cfg, outs);
    const auto planned = design::plan_factorial({summary.n, summary.u}, targets, seed);

    Table oracle{{"condition", "N", "U", "p", "alpha", "oracle_adversarial", "oracle_safe", "oracle_all"}, {}};
    std::vector<verdicts::VerdictRecord> records;
    for (const auto& pc : planned) {
        const auto m = corpus::build_condition(base, pc.spec);
        const auto s = corpus::label_summary(m);
        const double alpha = simworld::effective_alpha(wc, s.n);
        const auto model = simworld::train_toy(m, alpha, world);
        oracle.rows.push_back({pc.spec.name, s.n, s.u, s.p, alpha,
                               simworld::oracle_rate(model, prompts, Stratum::adversarial),
                               simworld::oracle_rate(model, prompts, Stratum::safe),
                               simworld::oracle_rate(model, prompts)});
        simworld::GenerateOptions go;
        go.condition = pc.spec.name;
        go.jobs = effective_jobs(cfg);
        auto recs = simworld::generate(model, prompts, cfg.samples_per_prompt, derive_seed(seed, "generate/" + pc.spec.name), go);
        std::move(recs.begin(), recs.end(), std::back_inserter(records));
    }
    outs.add("plan.csv", design::format_plan_csv(planned));
    outs.add("verdicts.jsonl", verdicts::export_jsonl(records));
    outs.add(table_file("oracle", cfg.format), render(oracle, cfg.format));
    return outs.commit();
}

std::vector<std::string> cmd_analyze(const ToolConfig& cfg, std::span<const std::string> inputs) {
    using verdicts::GroupKey;
    OutputSet outs(cfg, "analyze");
    root_seed(cfg);
    const auto path = default_input(cfg, inputs, cfg.verdicts, "verdicts.jsonl");
    const auto store = load_store(path, outs);
    if (store.empty()) throw Error(ErrorKind::empty_input, "verdict file '" + basename_of(path) + "' has no records");

    // (condition, judge, stratum-or-"all") -> counts
    using Key = std::tuple<std::string, std::string, std::string>;
    std::map<Key, std::pair<std::uint64_t, std::uint64_t>> counts;
    for (const auto& row : verdicts::stratify(store, {GroupKey::condition, GroupKey::judge, GroupKey::stratum}).rows) {
        const auto c = verdicts::format_group_value(row.group[0]);
        const auto j = verdicts::format_group_value(row.group[1]);
        counts[{c, j, verdicts::format_group_value(row.group[2])}] = {row.unsafe, row.total};
        auto& all = counts[{c, j, "all"}];
        all.first += row.unsafe;
        all.second += row.total;
    }

    Table rates{{"condition", "judge", "stratum", "unsafe", "total", "rate", "ci_low", "ci_high"}, {}};
    for (const auto& [k, v] : counts) {
        const auto r = stats::rate(v.first, v.second, cfg.ci_level);
        rates.rows.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v.first, v.second, r.rate, r.ci_low, r.ci_high});
    }
    outs.add(table_file("rates", cfg.format), render(rates, cfg.format));

    const stats::TestOptions topts{cfg.exact_max_total};
    const auto judges = store.judges();
    Table tests{{"judge", "stratum", "condition_a", "condition_b", "rate_a", "rate_b", "z", "p_value", "p_holm", "method",
                 "significant", "significant_holm"},
                {}};
    for (const auto& judge : judges) {
        for (const std::string stratum : {"adversarial", "safe", "all"}) {
            std::vector<std::string> conds;
            for (const auto& [k, v] : counts) {
                if (std::get<1>(k) == judge && std::get<2>(k) == stratum) conds.push_back(std::get<0>(k));
            }
            std::vector<std::tuple<std::string, std::string, stats::TestResult, double, double>> fam;
            for (std::size_t a = 0; a < conds.size(); ++a) {
                for (std::size_t b = a + 1; b < conds.size(); ++b) {
                    const auto& ca = counts.at({conds[a], judge, stratum});
                    const auto& cb = counts.at({conds[b], judge, stratum});
                    fam.emplace_back(conds[a], conds[b],
                                     stats::two_proportion_test({ca.first, ca.second}, {cb.first, cb.second}, topts),
                                     static_cast<double>(ca.first) / static_cast<double>(ca.second),
                                     static_cast<double>(cb.first) / static_cast<double>(cb.second));
                }
            }
            std::vector<double> ps;
            for (const auto& f : fam) ps.push_back(std::get<2>(f).p_value);
            const auto holm = stats::holm_adjust(ps);
            for (std::size_t i = 0; i < fam.size(); ++i) {
                const auto& [a, b, res, ra, rb] = fam[i];
                tests.rows.push_back({judge, stratum, a, b, ra, rb, res.z, res.p_value, holm[i], res.method,
                                      res.p_value < cfg.alpha, holm[i] < cfg.alpha});
            }
        }
    }
    outs.add(table_file("tests", cfg.format), render(tests, cfg.format));

    // Dose-aware outputs need the condition plan.
    std::string plan_path = cfg.conditions;
    if (plan_path.empty()) {
        const auto fallback = fs::path(cfg.out_dir) / "plan.csv";
        if (fs::exists(fallback)) plan_path = fallback.string();
    }
    if (!plan_path.empty()) {
        const auto planned = design::parse_plan_csv(outs.read_input(plan_path));
        const std::string dose_stratum = cfg.dose_stratum;
        parse_dose_stratum(dose_stratum);
        std::string dose_judge = cfg.dose_judge.empty() ? judges.front() : cfg.dose_judge;
        if (std::find(judges.begin(), judges.end(), dose_judge) == judges.end()) {
            throw Error(ErrorKind::missing_key, "judge '" + dose_judge + "' not present in the verdicts");
        }

        Table contrast_tests{{"kind", "members", "judge", "stratum", "condition_a", "condition_b", "z", "p_value",
                              "method", "significant"},
                             {}};
        for (const auto& c : design::contrasts(planned)) {
            for (const auto& judge : judges) {
                for (std::size_t a = 0; a < c.members.size(); ++a) {
                    for (std::size_t b = a + 1; b < c.members.size(); ++b) {
                        const auto ia = counts.find({c.members[a], judge, dose_stratum});
                        const auto ib = counts.find({c.members[b], judge, dose_stratum});
                        if (ia == counts.end() || ib == counts.end()) continue;
                        const auto res = stats::two_proportion_test({ia->second.first, ia->second.second},
                                                                    {ib->second.first, ib->second.second}, topts);
                        contrast_tests.rows.push_back({design::contrast_kind_name(c.kind), join(c.members, "|"), judge,
                                                       dose_stratum, c.members[a], c.members[b], res.z, res.p_value,
                                                       res.method, res.p_value < cfg.alpha});
                    }
                }
            }
        }
        outs.add(table_file("contrast_tests", cfg.format), render(contrast_tests, cfg.format));

        Table amp{{"condition", "judge", "stratum", "p", "q", "amplification"}, {}};
        doseresponse::PointSet points;
        points.scale = doseresponse::DoseScale::fraction;
        for (const auto& pc : planned) {
            for (const auto& judge : judges) {
                const auto it = counts.find({pc.spec.name, judge, dose_stratum});
                if (it == counts.end()) continue;
                const double q = static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
                amp.rows.push_back({pc.spec.name, judge, dose_stratum, pc.counts.p, q,
                                    pc.counts.p > 0.0 ? Cell(stats::amplification(q, pc.counts.p)) : Cell()});
                if (judge == dose_judge) points.points.push_back({pc.counts.p, q, it->second.second, pc.spec.name});
            }
        }
        outs.add(table_file("amplification", cfg.format), render(amp, cfg.format));
        if (!points.points.empty()) outs.add("points.csv", doseresponse::format_points(points));
    }
    return outs.commit();
}

std::vector<std::string> cmd_fit(const ToolConfig& cfg, std::span<const std::string> inputs) {
    OutputSet outs(cfg, "fit");
    root_seed(cfg);
    const auto path = default_input(cfg, inputs, cfg.points, "points.csv");
    const auto ps = doseresponse::parse_points(outs.read_input(path));
    doseresponse::HillOptions hopts;
    hopts.weighted = cfg.fit_weighted;
    const auto hill = doseresponse::fit_hill(ps, hopts);
    const auto baselines = doseresponse::fit_baselines(ps);
    const auto cmp = doseresponse::compare_models(hill, baselines);

    auto report = ojson::parse(doseresponse::fit_report_json(ps, hill, baselines, cmp));
    if (!cfg.predict_doses.empty()) {
        ojson preds = ojson::array();
        for (double p : cfg.predict_doses) preds.push_back({{"p", p}, {"q", doseresponse::predict(hill, p)}});
        report["predictions"] = preds;
    }
    outs.add("fit_report.json", report.dump(2) + "\n");
    outs.add("fit_plot.svg", doseresponse::plot_svg(ps, hill, baselines));
    outs.add("fit_data.csv", doseresponse::plot_data(ps, hill, baselines));
    return outs.commit();
}

std::vector<std::string> cmd_decompose(const ToolConfig& cfg, std::span<const std::string> inputs) {
    OutputSet outs(cfg, "decompose");
    root_seed(cfg);
    std::vector<std::string> paths(inputs.begin(), inputs.end());
    if (paths.empty()) paths = cfg.seed_matrices;
    if (paths.empty()) throw Error(ErrorKind::config, "no seed matrix given ([paths] seed_matrices or an argument)");

    Table t{{"source", "method", "rows", "cols", "grand_mean", "total_std", "frac_rows", "frac_cols", "frac_residual",
             "ci_low", "ci_high", "ci_level", "degenerate"},
            {}};
    for (const auto& path : paths) {
        stats::SeedMatrix m;
        if (has_suffix(path, ".jsonl")) {
            const auto store = verdicts::parse_jsonl(outs.read_input(path));
            m = stats::seed_matrix_from_table(
                verdicts::stratify(store, {verdicts::GroupKey::train_seed, verdicts::GroupKey::gen_seed}));
        } else {
            m = stats::parse_seed_matrix(outs.read_input(path));
        }
        for (auto method : {stats::DecompositionMethod::sum_of_squares, stats::DecompositionMethod::marginal_variance}) {
            const auto d = stats::variance_decomposition(m, cfg.ci_level, method);
            t.rows.push_back({basename_of(path), stats::method_name(method), static_cast<std::uint64_t>(m.rows()),
                              static_cast<std::uint64_t>(m.cols()), d.grand_mean, d.total_std, d.frac_rows,
                              d.frac_cols, d.frac_residual, d.ci_low, d.ci_high, d.ci_level, d.degenerate});
        }
    }
    outs.add(table_file("decomposition", cfg.format), render(t, cfg.format));
    return outs.commit();
}

std::vector<std::string> cmd_agree(const ToolConfig& cfg, std::span<const std::string> inputs) {
    OutputSet outs(cfg, "agree");
    root_seed(cfg);
    const auto path = default_input(cfg, inputs, cfg.verdicts, "verdicts.jsonl");
    const auto store = load_store(path, outs);
    if (store.empty()) throw Error(ErrorKind::empty_input, "verdict file '" + basename_of(path) + "' has no records");
    const auto judges = store.judges();

    Table agreement{{"judge_a", "judge_b", "n_pairs", "agreement", "chance", "kappa"}, {}};
    for (std::size_t a = 0; a < judges.size(); ++a) {
        for (std::size_t b = a + 1; b < judges.size(); ++b) {
            const auto paired = stats::pair_judges(store, judges[a], judges[b]);
            if (paired.a.empty()) {
                agreement.rows.push_back({judges[a], judges[b], std::uint64_t{0}, Cell(), Cell(), Cell()});
                continue;
            }
            const auto k = stats::kappa(paired.a, paired.b);
            agreement.rows.push_back({judges[a], judges[b], k.n, k.agreement, k.chance, opt_cell(k.kappa)});
        }
    }
    outs.add(table_file("agreement", cfg.format), render(agreement, cfg.format));

    stats::ProfileOptions popts;
    popts.stratum = cfg.agree_stratum;
    if (!cfg.reference_judge.empty()) popts.reference_judge = cfg.reference_judge;
    popts.subsets = cfg.subsets;
    const auto prof = stats::cross_judge_profile(store, popts);

    Table rates{{"judge", "condition", "unsafe", "total", "rate", "ci_low", "ci_high"}, {}};
    for (std::size_t j = 0; j < prof.judges.size(); ++j) {
        for (std::size_t c = 0; c < prof.conditions.size(); ++c) {
            const auto& r = prof.rates[j][c];
            rates.rows.push_back({prof.judges[j], prof.conditions[c], r.unsafe_count, r.total, r.rate, r.ci_low, r.ci_high});
        }
    }
    outs.add(table_file("profile_rates", cfg.format), render(rates, cfg.format));

    Table conc{{"judge_a", "judge_b", "rho"}, {}};
    for (const auto& c : prof.concordance) conc.rows.push_back({c.judge_a, c.judge_b, opt_cell(c.rho)});
    outs.add(table_file("concordance", cfg.format), render(conc, cfg.format));

    ojson orderings = ojson::array();
    for (const auto& s : prof.subsets) {
        ojson o;
        o["subset"] = s.subset;
        ojson by_judge = ojson::object();
        for (const auto& j : prof.judges) by_judge[j] = s.ordering.at(j);
        o["ordering"] = by_judge;
        o["flagged"] = s.flagged;
        orderings.push_back(std::move(o));
    }
    ojson summary;
    summary["reference_judge"] = prof.reference_judge;
    summary["judges"] = prof.judges;
    summary["conditions"] = prof.conditions;
    summary["subsets"] = orderings;
    outs.add("profile.json", summary.dump(2) + "\n");
    return outs.commit();
}

// ---------------------------------------------------------------- entry point

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"dosekit: dose-controlled contamination experiments and their statistics"};
    app.set_version_flag("--version", kToolVersion);
    std::string config_path, out_dir, format;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "root seed");
    app.add_option("--jobs", jobs, "worker threads (0 = all cores)");
    app.add_option("--format", format, "table format")->check(CLI::IsMember({"csv", "json"}));
    app.require_subcommand(1, 1);

    std::vector<std::string> inputs;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"plan", "plan the condition family and its contrasts"},
        {"mix", "build and verify condition manifests"},
        {"simulate", "run the toy world over the planned conditions"},
        {"analyze", "stratified rates, significance tests and amplification"},
        {"fit", "Hill and baseline dose-response fits"},
        {"decompose", "seed-matrix variance decomposition"},
        {"agree", "inter-judge agreement and cross-judge profile"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        if (name == "analyze" || name == "fit" || name == "decompose" || name == "agree") {
            sub->add_option("inputs", inputs, "input files");
        }
    }

    const auto report_error = [&](const std::string& command, const std::string& kind, const std::string& message,
                                  std::size_t line) {
        ojson e;
        e["command"] = command;
        e["kind"] = kind;
        e["message"] = message;
        if (line) e["line"] = line;
        err << ojson{{"error", e}}.dump() << "\n";
    };

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        report_error("", "usage", e.what(), 0);
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        ToolConfig cfg = config_path.empty() ? default_config() : load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (seed) cfg.seed = *seed;
        if (jobs) cfg.jobs = *jobs;
        if (!format.empty()) cfg.format = parse_format(format);

        std::vector<std::string> written;
        if (command == "plan") written = cmd_plan(cfg);
        else if (command == "mix") written = cmd_mix(cfg);
        else if (command == "simulate") written = cmd_simulate(cfg);
        else if (command == "analyze") written = cmd_analyze(cfg, inputs);
        else if (command == "fit") written = cmd_fit(cfg, inputs);
        else if (command == "decompose") written = cmd_decompose(cfg, inputs);
        else if (command == "agree") written = cmd_agree(cfg, inputs);

        ojson summary;
        summary["command"] = command;
        summary["out"] = cfg.out_dir;
        summary["outputs"] = written;
        out << summary.dump() << "\n";
        return 0;
    } catch (const Error& e) {
        report_error(command, std::string(error_kind_name(e.kind())), e.what(), e.line());
    } catch (const std::exception& e) {
        report_error(command, "internal", e.what(), 0);
    }
    return 1;
}

}  // namespace dosekit::cli
