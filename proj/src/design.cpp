#include "dosekit/design.hpp"

#include "dosekit/error.hpp"
#include "dosekit/rng.hpp"
#include "dosekit/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>
#include <set>

namespace dosekit::design {

using corpus::MixMode;

std::vector<PlannedCondition> plan_factorial(const BaseStats& base, std::span<const Target> targets,
                                             std::uint64_t root_seed) {
    if (base.n == 0 || base.u > base.n) throw Error(ErrorKind::invalid_argument, "invalid base statistics");
    const double base_p = static_cast<double>(base.u) / static_cast<double>(base.n);

    std::vector<PlannedCondition> out;
    std::set<std::string> names;
    for (const auto& t : targets) {
        if (!names.insert(t.name).second) {
            throw Error(ErrorKind::invalid_argument, "duplicate condition name '" + t.name + "'");
        }
        const auto missing = [&](const char* field) {
            throw Error(ErrorKind::invalid_argument,
                        "condition '" + t.name + "' (" + corpus::mode_name(t.mode) + ") needs " + field);
        };
        corpus::ConditionSpec spec;
        spec.name = t.name;
        spec.mode = t.mode;
        spec.seed = derive_seed(root_seed, t.name);
        switch (t.mode) {
            case MixMode::filter_all_unsafe:
                spec.target_p = 0.0;
                break;
            case MixMode::oversample_to_p:
                if (!t.p) missing("p");
                if (!(*t.p >= 0.0 && *t.p < 1.0)) {
                    throw Error(ErrorKind::infeasible, "condition '" + t.name + "': p must lie in [0, 1)");
                }
                spec.target_p = *t.p;
                break;
            case MixMode::proportional_subsample:
                if (!t.n) missing("n");
                spec.target_n = t.n;
                spec.target_p = base_p;
                break;
            case MixMode::fixed_unsafe_count:
                if (!t.u) missing("u");
                if (!t.n) missing("n");
                if (*t.u > base.u) {
                    throw Error(ErrorKind::infeasible, "condition '" + t.name + "': fixed U exceeds base unsafe count");
                }
                spec.fixed_u = t.u;
                spec.target_n = t.n;
                spec.target_p = static_cast<double>(*t.u) / static_cast<double>(*t.n);
                break;
        }
        auto counts = corpus::condition_counts(base.n, base.u, spec);
        out.push_back({std::move(spec), counts});
    }
    return out;
}

std::string contrast_kind_name(ContrastKind k) {
    return k == ContrastKind::matched_proportion_varying_scale ? "matched_proportion_varying_scale"
                                                               : "matched_count_varying_proportion";
}

std::vector<DesignContrast> contrasts(std::span<const PlannedCondition> planned) {
    std::vector<DesignContrast> out;

    std::map<double, std::vector<const PlannedCondition*>> by_p;
    for (const auto& pc : planned) by_p[pc.spec.target_p].push_back(&pc);
    for (const auto& [p, group] : by_p) {
        std::set<std::uint64_t> sizes;
        for (const auto* pc : group) sizes.insert(pc->counts.n);
        if (sizes.size() < 2) continue;
        DesignContrast c;
        c.kind = ContrastKind::matched_proportion_varying_scale;
        c.controlled_variable = "p";
        c.varied_variable = "N";
        c.shared_p = p;
        for (const auto* pc : group) c.members.push_back(pc->spec.name);
        std::sort(c.members.begin(), c.members.end());
        out.push_back(std::move(c));
    }

    for (std::size_t i = 0; i < planned.size(); ++i) {
        for (std::size_t j = i + 1; j < planned.size(); ++j) {
            const auto& a = planned[i];
            const auto& b = planned[j];
            if (a.counts.u != b.counts.u || a.counts.u == 0 || a.counts.n == b.counts.n) continue;
            DesignContrast c;
            c.kind = ContrastKind::matched_count_varying_proportion;
            c.controlled_variable = "U";
            c.varied_variable = "p";
            c.shared_u = a.counts.u;
            c.members = {a.spec.name, b.spec.name};
            std::sort(c.members.begin(), c.members.end());
            out.push_back(std::move(c));
        }
    }

    std::sort(out.begin(), out.end(), [](const DesignContrast& x, const DesignContrast& y) {
        if (x.kind != y.kind) return x.kind < y.kind;
        return x.members < y.members;
    });
    return out;
}

BaseStats reference_base() {
    return {7'940'000, 96'000};
}

std::vector<Target> reference_targets() {
    return {
        {"C0", MixMode::proportional_subsample, std::nullopt, std::nullopt, 7'940'000},
        {"C1", MixMode::filter_all_unsafe, std::nullopt, std::nullopt, std::nullopt},
        {"C2", MixMode::oversample_to_p, 0.05, std::nullopt, std::nullopt},
        {"C3", MixMode::oversample_to_p, 0.096, std::nullopt, std::nullopt},
        {"C4", MixMode::proportional_subsample, std::nullopt, std::nullopt, 1'000'000},
        {"C5", MixMode::proportional_subsample, std::nullopt, std::nullopt, 100'000},
        {"C6", MixMode::fixed_unsafe_count, std::nullopt, 96'000, 1'000'000},
    };
}

std::vector<Target> scale_targets(std::span<const Target> targets, std::uint64_t divisor) {
    if (divisor == 0) throw Error(ErrorKind::invalid_argument, "scale divisor must be positive");
    const auto scale = [&](std::uint64_t v) { return (2 * v + divisor) / (2 * divisor); };
    std::vector<Target> out(targets.begin(), targets.end());
    for (auto& t : out) {
        if (t.n) t.n = scale(*t.n);
        if (t.u) t.u = scale(*t.u);
    }
    return out;
}

std::string format_plan_csv(std::span<const PlannedCondition> planned) {
    std::string out = "name,N,p,U,mode,target_p,target_N,fixed_U,seed\n";
    const auto opt = [](const std::optional<std::uint64_t>& v) { return v ? std::to_string(*v) : std::string(); };
    for (const auto& pc : planned) {
        out += pc.spec.name + ',' + std::to_string(pc.counts.n) + ',' + format_double(pc.counts.p) + ',' +
               std::to_string(pc.counts.u) + ',' + corpus::mode_name(pc.spec.mode) + ',' +
               format_double(pc.spec.target_p) + ',' + opt(pc.spec.target_n) + ',' + opt(pc.spec.fixed_u) + ',' +
               std::to_string(pc.spec.seed) + '\n';
    }
    return out;
}

std::vector<PlannedCondition> parse_plan_csv(std::string_view text) {
    std::vector<PlannedCondition> out;
    std::size_t pos = 0, line_no = 0;
    bool header = false;
    const auto unsigned_field = [](const std::string& s, std::string_view what) {
        const auto v = parse_int(s, what);
        if (v < 0) throw Error(ErrorKind::parse, std::string(what) + " must be nonnegative");
        return static_cast<std::uint64_t>(v);
    };
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != "name,N,p,U,mode,target_p,target_N,fixed_U,seed") {
                throw Error(ErrorKind::parse, "unexpected plan header", line_no);
            }
            header = true;
            continue;
        }
        const auto f = split(line);
        if (f.size() != 9) throw Error(ErrorKind::parse, "expected 9 fields", line_no);
        try {
            PlannedCondition pc;
            pc.spec.name = f[0];
            pc.counts.n = unsigned_field(f[1], "N");
            pc.counts.p = parse_double(f[2], "p");
            pc.counts.u = unsigned_field(f[3], "U");
            pc.spec.mode = corpus::parse_mode(f[4]);
            pc.spec.target_p = parse_double(f[5], "target_p");
            if (!f[6].empty()) pc.spec.target_n = unsigned_field(f[6], "target_N");
            if (!f[7].empty()) pc.spec.fixed_u = unsigned_field(f[7], "fixed_U");
            pc.spec.seed = std::stoull(f[8]);
            out.push_back(std::move(pc));
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, e.what(), line_no);
        } catch (const std::exception&) {
            throw Error(ErrorKind::parse, "invalid seed", line_no);
        }
    }
    if (!header) throw Error(ErrorKind::parse, "plan file has no header");
    return out;
}

std::vector<Target> parse_targets_csv(std::string_view text) {
    std::vector<Target> out;
    std::size_t pos = 0, line_no = 0;
    bool header = false;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        if (!header) {
            if (line != "name,mode,p,U,N") throw Error(ErrorKind::parse, "expected header name,mode,p,U,N", line_no);
            header = true;
            continue;
        }
        const auto f = split(line);
        if (f.size() != 5) throw Error(ErrorKind::parse, "expected 5 fields", line_no);
        try {
            Target t;
            t.name = trim(f[0]);
            if (t.name.empty()) throw Error(ErrorKind::parse, "empty condition name");
            t.mode = corpus::parse_mode(trim(f[1]));
            if (!trim(f[2]).empty()) t.p = parse_double(trim(f[2]), "p");
            const auto count = [](const std::string& s, std::string_view what) -> std::optional<std::uint64_t> {
                if (s.empty()) return std::nullopt;
                const auto v = parse_int(s, what);
                if (v <= 0) throw Error(ErrorKind::parse, std::string(what) + " must be positive");
                return static_cast<std::uint64_t>(v);
            };
            t.u = count(trim(f[3]), "U");
            t.n = count(trim(f[4]), "N");
            out.push_back(std::move(t));
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, e.what(), line_no);
        }
    }
    if (out.empty()) throw Error(ErrorKind::empty_input, "targets file lists no conditions");
    return out;
}

std::string format_contrasts_json(std::span<const DesignContrast> cs) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : cs) {
        nlohmann::ordered_json j;
        j["kind"] = contrast_kind_name(c.kind);
        j["members"] = c.members;
        j["controlled_variable"] = c.controlled_variable;
        j["varied_variable"] = c.varied_variable;
        if (c.controlled_variable == "p") j["p"] = c.shared_p;
        else j["U"] = c.shared_u;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

}  // namespace dosekit::design
