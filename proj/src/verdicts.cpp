#include "dosekit/verdicts.hpp"

#include "dosekit/error.hpp"
#include "dosekit/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace dosekit::verdicts {

namespace {

const std::vector<std::size_t> kNoIndices;

template <typename Map, typename Key>
std::span<const std::size_t> lookup(const Map& m, const Key& k) {
    const auto it = m.find(k);
    return it == m.end() ? std::span<const std::size_t>(kNoIndices) : std::span<const std::size_t>(it->second);
}

const std::set<std::string> kKnownFields = {"condition", "judge",      "prompt_id", "stratum",
                                            "category",  "unsafe",     "train_seed", "gen_seed"};

VerdictRecord record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorKind::parse, "record is not a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kKnownFields.count(key)) throw Error(ErrorKind::parse, "unknown field '" + key + "'");
        if (value.is_null()) throw Error(ErrorKind::parse, "field '" + key + "' is null; omit optional fields");
    }
    const auto need_string = [&](const char* name) {
        if (!j.contains(name)) throw Error(ErrorKind::parse, std::string("missing field '") + name + "'");
        if (!j[name].is_string()) throw Error(ErrorKind::parse, std::string("field '") + name + "' must be a string");
        return j[name].get<std::string>();
    };
    VerdictRecord r;
    r.condition = need_string("condition");
    r.judge = need_string("judge");
    r.prompt_id = need_string("prompt_id");
    const auto stratum = parse_stratum(need_string("stratum"));
    if (!stratum) throw Error(ErrorKind::parse, "unknown stratum '" + j["stratum"].get<std::string>() + "'");
    r.stratum = *stratum;
    if (j.contains("category")) {
        if (!j["category"].is_string()) throw Error(ErrorKind::parse, "field 'category' must be a string");
        r.category = parse_category(j["category"].get<std::string>());
        if (!r.category) throw Error(ErrorKind::parse, "unknown category '" + j["category"].get<std::string>() + "'");
    }
    if (!j.contains("unsafe") || !j["unsafe"].is_boolean()) {
        throw Error(ErrorKind::parse, "field 'unsafe' must be true or false");
    }
    r.unsafe = j["unsafe"].get<bool>();
    for (const char* seed_field : {"train_seed", "gen_seed"}) {
        if (!j.contains(seed_field)) continue;
        if (!j[seed_field].is_number_integer()) {
            throw Error(ErrorKind::parse, std::string("field '") + seed_field + "' must be an integer");
        }
        (std::string(seed_field) == "train_seed" ? r.train_seed : r.gen_seed) = j[seed_field].get<std::int64_t>();
    }
    if (r.category && r.stratum != Stratum::adversarial) {
        throw Error(ErrorKind::parse, "category given on a safe-stratum record");
    }
    return r;
}

GroupValue value_of(const VerdictRecord& r, GroupKey k) {
    switch (k) {
        case GroupKey::condition: return r.condition;
        case GroupKey::judge: return r.judge;
        case GroupKey::stratum: return std::string(stratum_name(r.stratum));
        case GroupKey::category:
            return r.category ? GroupValue(category_name(*r.category)) : GroupValue(std::monostate{});
        case GroupKey::train_seed:
            return r.train_seed ? GroupValue(*r.train_seed) : GroupValue(std::monostate{});
        case GroupKey::gen_seed: return r.gen_seed ? GroupValue(*r.gen_seed) : GroupValue(std::monostate{});
    }
    return std::monostate{};
}

}  // namespace

RecordKey record_key(const VerdictRecord& r) {
    return {r.condition, r.judge, r.prompt_id, r.train_seed, r.gen_seed};
}

VerdictStore VerdictStore::from_records(std::vector<VerdictRecord> records) {
    VerdictStore s;
    std::map<RecordKey, std::size_t> seen;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.category && r.stratum != Stratum::adversarial) {
            throw Error(ErrorKind::invalid_argument, "record " + std::to_string(i + 1) + ": category on safe stratum",
                        i + 1);
        }
        auto [it, inserted] = seen.emplace(record_key(r), i);
        if (!inserted) {
            throw Error(ErrorKind::duplicate_key,
                        "record " + std::to_string(i + 1) + " duplicates the key of record " +
                            std::to_string(it->second + 1) + " (condition=" + r.condition + ", judge=" + r.judge +
                            ", prompt_id=" + r.prompt_id + ")",
                        i + 1);
        }
        s.condition_index_[r.condition].push_back(i);
        s.judge_index_[r.judge].push_back(i);
        s.stratum_index_[r.stratum].push_back(i);
        if (r.category) s.category_index_[*r.category].push_back(i);
        if (r.train_seed && r.gen_seed) s.seed_index_[{*r.train_seed, *r.gen_seed}].push_back(i);
    }
    s.records_ = std::move(records);
    return s;
}

std::span<const std::size_t> VerdictStore::by_condition(const std::string& c) const { return lookup(condition_index_, c); }
std::span<const std::size_t> VerdictStore::by_judge(const std::string& j) const { return lookup(judge_index_, j); }
std::span<const std::size_t> VerdictStore::by_stratum(Stratum s) const { return lookup(stratum_index_, s); }
std::span<const std::size_t> VerdictStore::by_category(Category c) const { return lookup(category_index_, c); }
std::span<const std::size_t> VerdictStore::by_seed_pair(std::int64_t t, std::int64_t g) const {
    return lookup(seed_index_, std::pair{t, g});
}

std::vector<std::string> VerdictStore::conditions() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : condition_index_) out.push_back(k);
    return out;
}

std::vector<std::string> VerdictStore::judges() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : judge_index_) out.push_back(k);
    return out;
}

VerdictStore parse_jsonl(std::string_view text) {
    std::vector<VerdictRecord> records;
    std::vector<std::size_t> record_lines;
    std::vector<std::string> issues;
    std::size_t first_issue_line = 0;
    ErrorKind issue_kind = ErrorKind::parse;

    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        const bool terminated = end != std::string_view::npos;
        if (!terminated) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            records.push_back(record_from_json(j));
            record_lines.push_back(line_no);
        } catch (const nlohmann::json::exception& e) {
            if (!terminated) {
                if (issues.empty()) issue_kind = ErrorKind::truncated;
                issues.push_back("line " + std::to_string(line_no) + ": truncated final record");
            } else {
                issues.push_back("line " + std::to_string(line_no) + ": invalid JSON");
            }
            if (!first_issue_line) first_issue_line = line_no;
        } catch (const Error& e) {
            issues.push_back("line " + std::to_string(line_no) + ": " + e.what());
            if (!first_issue_line) first_issue_line = line_no;
        }
    }
    if (!issues.empty()) {
        throw Error(issue_kind, "malformed verdict file: " + join(issues, "; "), first_issue_line);
    }
    try {
        return VerdictStore::from_records(std::move(records));
    } catch (const Error& e) {
        // Re-express record positions as file lines.
        const std::size_t line = e.line() ? record_lines[e.line() - 1] : 0;
        throw Error(e.kind(), "line " + std::to_string(line) + ": " + e.what(), line);
    }
}

VerdictStore ingest(const std::string& path) {
    return parse_jsonl(read_file(path));
}

std::string to_json_line(const VerdictRecord& r) {
    nlohmann::json j;  // std::map-backed: keys come out sorted
    j["condition"] = r.condition;
    j["judge"] = r.judge;
    j["prompt_id"] = r.prompt_id;
    j["stratum"] = std::string(stratum_name(r.stratum));
    if (r.category) j["category"] = category_name(*r.category);
    j["unsafe"] = r.unsafe;
    if (r.train_seed) j["train_seed"] = *r.train_seed;
    if (r.gen_seed) j["gen_seed"] = *r.gen_seed;
    return j.dump();
}

std::string export_jsonl(std::span<const VerdictRecord> records) {
    std::vector<const VerdictRecord*> order;
    order.reserve(records.size());
    for (const auto& r : records) order.push_back(&r);
    std::sort(order.begin(), order.end(),
              [](const VerdictRecord* a, const VerdictRecord* b) { return record_key(*a) < record_key(*b); });
    std::string out;
    for (const auto* r : order) {
        out += to_json_line(*r);
        out += '\n';
    }
    return out;
}

std::string export_jsonl(const VerdictStore& store) {
    return export_jsonl(std::span<const VerdictRecord>(store.records()));
}

std::string group_key_name(GroupKey k) {
    switch (k) {
        case GroupKey::condition: return "condition";
        case GroupKey::judge: return "judge";
        case GroupKey::stratum: return "stratum";
        case GroupKey::category: return "category";
        case GroupKey::train_seed: return "train_seed";
        case GroupKey::gen_seed: return "gen_seed";
    }
    return "?";
}

GroupKey parse_group_key(std::string_view s) {
    for (auto k : {GroupKey::condition, GroupKey::judge, GroupKey::stratum, GroupKey::category,
                   GroupKey::train_seed, GroupKey::gen_seed}) {
        if (group_key_name(k) == s) return k;
    }
    throw Error(ErrorKind::parse, "unknown grouping key '" + std::string(s) + "'");
}

std::string format_group_value(const GroupValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    return {};
}

StratifiedTable stratify(const VerdictStore& store, std::span<const GroupKey> group_by) {
    if (store.empty()) throw Error(ErrorKind::empty_input, "cannot stratify an empty verdict store");
    for (auto k : group_by) {
        const bool present = std::any_of(store.records().begin(), store.records().end(), [&](const VerdictRecord& r) {
            return !std::holds_alternative<std::monostate>(value_of(r, k));
        });
        if (!present) {
            throw Error(ErrorKind::missing_key, "grouping key '" + group_key_name(k) + "' is absent from all records");
        }
    }
    std::map<std::vector<GroupValue>, std::pair<std::uint64_t, std::uint64_t>> acc;
    for (const auto& r : store.records()) {
        std::vector<GroupValue> g;
        g.reserve(group_by.size());
        for (auto k : group_by) g.push_back(value_of(r, k));
        auto& cell = acc[std::move(g)];
        cell.first += r.unsafe ? 1 : 0;
        cell.second += 1;
    }
    StratifiedTable t;
    t.keys.assign(group_by.begin(), group_by.end());
    for (auto& [g, c] : acc) t.rows.push_back({g, c.first, c.second});
    return t;
}

StratifiedTable stratify(const VerdictStore& store, std::initializer_list<GroupKey> group_by) {
    return stratify(store, std::span<const GroupKey>(group_by.begin(), group_by.size()));
}

std::vector<CountRow> parse_count_table(std::string_view text) {
    std::vector<CountRow> rows;
    bool header_seen = false;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != "condition,judge,stratum,category,train_seed,gen_seed,unsafe,total") {
                throw Error(ErrorKind::parse, "unexpected count table header", line_no);
            }
            header_seen = true;
            continue;
        }
        const auto f = split(line);
        if (f.size() != 8) throw Error(ErrorKind::parse, "expected 8 fields", line_no);
        try {
            CountRow r;
            r.condition = f[0];
            r.judge = f[1];
            const auto s = parse_stratum(f[2]);
            if (!s) throw Error(ErrorKind::parse, "unknown stratum '" + f[2] + "'");
            r.stratum = *s;
            if (!f[3].empty()) {
                r.category = parse_category(f[3]);
                if (!r.category) throw Error(ErrorKind::parse, "unknown category '" + f[3] + "'");
            }
            if (!f[4].empty()) r.train_seed = parse_int(f[4], "train_seed");
            if (!f[5].empty()) r.gen_seed = parse_int(f[5], "gen_seed");
            const auto unsafe = parse_int(f[6], "unsafe");
            const auto total = parse_int(f[7], "total");
            if (unsafe < 0 || total < 0 || unsafe > total) throw Error(ErrorKind::parse, "need 0 <= unsafe <= total");
            r.unsafe = static_cast<std::uint64_t>(unsafe);
            r.total = static_cast<std::uint64_t>(total);
            rows.push_back(std::move(r));
        } catch (const Error& e) {
            throw Error(e.kind(), e.what(), line_no);
        }
    }
    return rows;
}

std::vector<CountRow> read_count_table(const std::string& path) {
    return parse_count_table(read_file(path));
}

std::vector<VerdictRecord> expand_counts(std::span<const CountRow> rows) {
    std::vector<VerdictRecord> out;
    std::uint64_t total = 0;
    for (const auto& r : rows) total += r.total;
    out.reserve(total);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::string prefix = (r.stratum == Stratum::safe ? "s" : "a") + std::to_string(i) + "-";
        for (std::uint64_t k = 0; k < r.total; ++k) {
            VerdictRecord v;
            v.condition = r.condition;
            v.judge = r.judge;
            v.prompt_id = prefix + std::to_string(k);
            v.stratum = r.stratum;
            v.category = r.category;
            v.unsafe = k < r.unsafe;
            v.train_seed = r.train_seed;
            v.gen_seed = r.gen_seed;
            out.push_back(std::move(v));
        }
    }
    return out;
}

}  // namespace dosekit::verdicts
