#include "dosekit/corpus.hpp"

#include "dosekit/error.hpp"
#include "dosekit/rng.hpp"
#include "dosekit/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace dosekit::corpus {

namespace {

std::uint64_t round_ratio(std::uint64_t num_a, std::uint64_t num_b, std::uint64_t den) {
    // round(num_a * num_b / den), half up, without overflow.
    const auto prod = static_cast<unsigned __int128>(num_a) * num_b;
    return static_cast<std::uint64_t>((2 * prod + den) / (2 * static_cast<unsigned __int128>(den)));
}

// ceil(s * p / (1 - p)), treating values within 1e-9 of an integer as exact so
// that decimal targets such as p = 0.05 do not pick up a spurious extra item.
std::uint64_t oversample_count(std::uint64_t n_safe, double p) {
    if (p <= 0.0) return 0;
    const double x = static_cast<double>(n_safe) * p / (1.0 - p);
    const double r = std::round(x);
    if (std::abs(x - r) <= 1e-9 * std::max(1.0, x)) return static_cast<std::uint64_t>(r);
    return static_cast<std::uint64_t>(std::ceil(x));
}

double fixed_count_slack(std::uint64_t target_n) {
    return std::max(1.0 / static_cast<double>(target_n), 5e-5);
}

struct Partition {
    std::vector<std::size_t> safe;
    std::vector<std::size_t> unsafe;
};

Partition partition(const CorpusManifest& base) {
    Partition out;
    for (std::size_t i = 0; i < base.items.size(); ++i) {
        (base.items[i].unsafe ? out.unsafe : out.safe).push_back(i);
    }
    return out;
}

void take(std::vector<CorpusItem>& out, const CorpusManifest& base,
          const std::vector<std::size_t>& pool, std::size_t k, Rng& rng) {
    if (k == pool.size()) {
        for (auto idx : pool) out.push_back(base.items[idx]);
        return;
    }
    for (auto pick : rng.sample_indices(pool.size(), k)) out.push_back(base.items[pool[pick]]);
}

}  // namespace

std::string mode_name(MixMode m) {
    switch (m) {
        case MixMode::filter_all_unsafe: return "filter_all_unsafe";
        case MixMode::oversample_to_p: return "oversample_to_p";
        case MixMode::proportional_subsample: return "proportional_subsample";
        case MixMode::fixed_unsafe_count: return "fixed_unsafe_count";
    }
    return "?";
}

MixMode parse_mode(std::string_view s) {
    for (auto m : {MixMode::filter_all_unsafe, MixMode::oversample_to_p,
                   MixMode::proportional_subsample, MixMode::fixed_unsafe_count}) {
        if (mode_name(m) == s) return m;
    }
    throw Error(ErrorKind::parse, "unknown mix mode '" + std::string(s) + "'");
}

LabelSummary label_summary(const CorpusManifest& manifest) {
    if (manifest.items.empty()) throw Error(ErrorKind::empty_input, "empty corpus");
    LabelSummary s;
    s.n = manifest.items.size();
    s.u = static_cast<std::uint64_t>(
        std::count_if(manifest.items.begin(), manifest.items.end(), [](const CorpusItem& it) { return it.unsafe; }));
    s.p = static_cast<double>(s.u) / static_cast<double>(s.n);
    return s;
}

void validate_spec(const ConditionSpec& spec) {
    const auto bad = [&](const std::string& why) {
        throw Error(ErrorKind::invalid_argument, "condition '" + spec.name + "': " + why);
    };
    if (spec.name.empty()) bad("empty name");
    if (!(spec.target_p >= 0.0 && spec.target_p <= 1.0)) bad("target_p outside [0,1]");
    if (spec.target_n && *spec.target_n == 0) bad("target_N must be positive");
    switch (spec.mode) {
        case MixMode::filter_all_unsafe:
            if (spec.target_p != 0.0) bad("filter_all_unsafe forces target_p = 0");
            break;
        case MixMode::oversample_to_p:
            if (spec.target_p >= 1.0) bad("oversample_to_p needs target_p < 1");
            break;
        case MixMode::proportional_subsample:
            if (!spec.target_n) bad("proportional_subsample needs target_N");
            break;
        case MixMode::fixed_unsafe_count: {
            if (!spec.fixed_u || *spec.fixed_u == 0) bad("fixed_unsafe_count needs a positive fixed_U");
            if (!spec.target_n) bad("fixed_unsafe_count needs target_N");
            if (*spec.fixed_u > *spec.target_n) bad("fixed_U exceeds target_N");
            const double implied = static_cast<double>(*spec.fixed_u) / static_cast<double>(*spec.target_n);
            if (std::abs(implied - spec.target_p) > fixed_count_slack(*spec.target_n)) {
                bad("fixed_U/target_N = " + format_double(implied) + " disagrees with target_p");
            }
            break;
        }
    }
}

ConditionCounts condition_counts(std::uint64_t base_n, std::uint64_t base_u, const ConditionSpec& spec) {
    validate_spec(spec);
    if (base_u > base_n) throw Error(ErrorKind::invalid_argument, "base U exceeds base N");
    const std::uint64_t base_s = base_n - base_u;
    const auto infeasible = [&](const std::string& why) {
        throw Error(ErrorKind::infeasible, "condition '" + spec.name + "': " + why);
    };
    ConditionCounts c;
    switch (spec.mode) {
        case MixMode::filter_all_unsafe:
            c.n = base_s;
            c.u = 0;
            break;
        case MixMode::oversample_to_p:
            c.u = oversample_count(base_s, spec.target_p);
            if (c.u > 0 && base_u == 0) infeasible("no unsafe items to oversample");
            c.n = base_s + c.u;
            break;
        case MixMode::proportional_subsample:
            if (*spec.target_n > base_n) infeasible("target_N exceeds available items");
            c.n = *spec.target_n;
            c.u = base_n == 0 ? 0 : round_ratio(c.n, base_u, base_n);
            if (c.n - c.u > base_s) infeasible("not enough safe items");
            break;
        case MixMode::fixed_unsafe_count:
            if (*spec.fixed_u > base_u) infeasible("fixed_U exceeds available unsafe items");
            if (*spec.target_n - *spec.fixed_u > base_s) infeasible("target_N exceeds available items");
            c.n = *spec.target_n;
            c.u = *spec.fixed_u;
            break;
    }
    if (c.n == 0) infeasible("condition would be empty");
    c.p = static_cast<double>(c.u) / static_cast<double>(c.n);
    return c;
}

CorpusManifest build_condition(const CorpusManifest& base, const ConditionSpec& spec) {
    const auto summary = label_summary(base);
    const auto counts = condition_counts(summary.n, summary.u, spec);
    const auto parts = partition(base);

    CorpusManifest out;
    if (spec.mode == MixMode::filter_all_unsafe) {
        out.items.reserve(parts.safe.size());
        for (auto idx : parts.safe) out.items.push_back(base.items[idx]);
        return out;
    }

    out.items.reserve(counts.n);
    const std::uint64_t safe_needed = counts.n - counts.u;
    Rng safe_rng(derive_seed(spec.seed, "safe"));
    Rng unsafe_rng(derive_seed(spec.seed, "unsafe"));

    if (spec.mode == MixMode::oversample_to_p) {
        for (auto idx : parts.safe) out.items.push_back(base.items[idx]);
        // Balanced cycling: whole passes over the unsafe pool, then a partial
        // pass without replacement.
        const std::uint64_t pool = parts.unsafe.size();
        const std::uint64_t passes = pool ? counts.u / pool : 0;
        for (std::uint64_t r = 0; r < passes; ++r) {
            for (auto idx : parts.unsafe) out.items.push_back(base.items[idx]);
        }
        if (pool) take(out.items, base, parts.unsafe, counts.u % pool, unsafe_rng);
    } else {
        take(out.items, base, parts.safe, safe_needed, safe_rng);
        take(out.items, base, parts.unsafe, counts.u, unsafe_rng);
    }

    Rng order_rng(derive_seed(spec.seed, "order"));
    order_rng.shuffle(std::span<CorpusItem>(out.items));
    return out;
}

VerificationReport verify_condition(const CorpusManifest& manifest, const ConditionSpec& spec, double tol) {
    VerificationReport r;
    r.name = spec.name;
    r.mode = mode_name(spec.mode);
    r.n = manifest.items.size();
    for (const auto& it : manifest.items) r.u += it.unsafe ? 1 : 0;
    r.p = r.n ? static_cast<double>(r.u) / static_cast<double>(r.n) : 0.0;
    r.target_p = spec.target_p;
    r.deviation = std::abs(r.p - r.target_p);
    r.pass = r.n > 0 && r.deviation <= tol;
    if (spec.target_n && spec.mode != MixMode::oversample_to_p && r.n != *spec.target_n) r.pass = false;
    if (spec.fixed_u && spec.mode == MixMode::fixed_unsafe_count && r.u != *spec.fixed_u) r.pass = false;
    return r;
}

std::string to_json(const VerificationReport& r) {
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["mode"] = r.mode;
    j["N"] = r.n;
    j["U"] = r.u;
    j["p"] = r.p;
    j["target_p"] = r.target_p;
    j["deviation"] = r.deviation;
    j["pass"] = r.pass;
    return j.dump();
}

CorpusManifest parse_manifest(std::string_view text) {
    CorpusManifest m;
    std::unordered_map<std::string, std::size_t> first_seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != "id,unsafe,category,source") {
                throw Error(ErrorKind::parse, "manifest header must be 'id,unsafe,category,source'", line_no);
            }
            header_seen = true;
            continue;
        }
        const auto f = split(line);
        if (f.size() != 4) throw Error(ErrorKind::parse, "expected 4 fields", line_no);
        CorpusItem item;
        item.id = f[0];
        if (item.id.empty()) throw Error(ErrorKind::parse, "empty id", line_no);
        if (f[1] == "1") item.unsafe = true;
        else if (f[1] != "0") throw Error(ErrorKind::parse, "unsafe must be 0 or 1", line_no);
        if (!f[2].empty()) {
            item.category = parse_category(f[2]);
            if (!item.category) throw Error(ErrorKind::parse, "unknown category '" + f[2] + "'", line_no);
            if (!item.unsafe) throw Error(ErrorKind::parse, "category on a safe item", line_no);
        }
        if (!f[3].empty()) item.source = f[3];
        auto [it, inserted] = first_seen.emplace(item.id, m.items.size());
        if (!inserted && !(m.items[it->second] == item)) {
            throw Error(ErrorKind::parse, "id '" + item.id + "' repeated with different fields", line_no);
        }
        m.items.push_back(std::move(item));
    }
    if (!header_seen) throw Error(ErrorKind::parse, "missing manifest header");
    return m;
}

CorpusManifest read_manifest(const std::string& path) {
    return parse_manifest(read_file(path));
}

std::string format_manifest(const CorpusManifest& manifest) {
    std::string out = "id,unsafe,category,source\n";
    for (const auto& it : manifest.items) {
        const auto clean = [](const std::string& s) {
            if (s.find_first_of(",\n\r\"") != std::string::npos) {
                throw Error(ErrorKind::invalid_argument, "manifest field contains a separator: '" + s + "'");
            }
            return s;
        };
        out += clean(it.id);
        out += it.unsafe ? ",1," : ",0,";
        if (it.category) out += category_name(*it.category);
        out += ',';
        if (it.source) out += clean(*it.source);
        out += '\n';
    }
    return out;
}

void write_manifest(const std::string& path, const CorpusManifest& manifest) {
    write_file(path, format_manifest(manifest));
}

CorpusManifest make_base(std::uint64_t n_safe, std::uint64_t n_unsafe) {
    const std::uint64_t n = n_safe + n_unsafe;
    CorpusManifest m;
    m.items.reserve(n);
    std::uint64_t s = 0, u = 0;
    for (std::uint64_t i = 0; i < n; ++i) {
        // Spread unsafe items evenly through the ordering.
        const bool unsafe = n_unsafe && ((i + 1) * n_unsafe / n) > (i * n_unsafe / n);
        CorpusItem item;
        item.unsafe = unsafe;
        if (unsafe) {
            item.id = "u" + std::to_string(u);
            item.category = category_from_index(u);
            ++u;
        } else {
            item.id = "s" + std::to_string(s);
            ++s;
        }
        m.items.push_back(std::move(item));
    }
    return m;
}

}  // namespace dosekit::corpus
