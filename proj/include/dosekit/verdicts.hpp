#pragma once

// Judge verdicts: one record per generated output, ingested from
// line-delimited JSON and stratified into count tables.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include "dosekit/taxonomy.hpp"

namespace dosekit::verdicts {

struct VerdictRecord {
    std::string condition;
    std::string judge;
    std::string prompt_id;
    Stratum stratum = Stratum::safe;
    std::optional<Category> category;  // adversarial records only
    bool unsafe = false;
    std::optional<std::int64_t> train_seed;
    std::optional<std::int64_t> gen_seed;

    bool operator==(const VerdictRecord&) const = default;
};

using RecordKey = std::tuple<std::string, std::string, std::string, std::optional<std::int64_t>,
                             std::optional<std::int64_t>>;

RecordKey record_key(const VerdictRecord& r);

// Immutable after construction; indices hold positions into records().
class VerdictStore {
public:
    VerdictStore() = default;

    // Validates invariants; throws Error{duplicate_key | invalid_argument}.
    static VerdictStore from_records(std::vector<VerdictRecord> records);

    const std::vector<VerdictRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    std::span<const std::size_t> by_condition(const std::string& condition) const;
    std::span<const std::size_t> by_judge(const std::string& judge) const;
    std::span<const std::size_t> by_stratum(Stratum s) const;
    std::span<const std::size_t> by_category(Category c) const;
    std::span<const std::size_t> by_seed_pair(std::int64_t train_seed, std::int64_t gen_seed) const;

    std::vector<std::string> conditions() const;
    std::vector<std::string> judges() const;

private:
    std::vector<VerdictRecord> records_;
    std::map<std::string, std::vector<std::size_t>> condition_index_;
    std::map<std::string, std::vector<std::size_t>> judge_index_;
    std::map<Stratum, std::vector<std::size_t>> stratum_index_;
    std::map<Category, std::vector<std::size_t>> category_index_;
    std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> seed_index_;
};

VerdictStore parse_jsonl(std::string_view text);
VerdictStore ingest(const std::string& path);

std::string to_json_line(const VerdictRecord& r);
// Records sorted by key, one key-sorted JSON object per line.
std::string export_jsonl(const VerdictStore& store);
std::string export_jsonl(std::span<const VerdictRecord> records);

enum class GroupKey { condition, judge, stratum, category, train_seed, gen_seed };

std::string group_key_name(GroupKey k);
GroupKey parse_group_key(std::string_view s);

// Missing optional values sort first and print as an empty cell.
using GroupValue = std::variant<std::monostate, std::string, std::int64_t>;
std::string format_group_value(const GroupValue& v);

struct StratumRow {
    std::vector<GroupValue> group;
    std::uint64_t unsafe = 0;
    std::uint64_t total = 0;
};

struct StratifiedTable {
    std::vector<GroupKey> keys;
    std::vector<StratumRow> rows;  // sorted by group
};

StratifiedTable stratify(const VerdictStore& store, std::span<const GroupKey> group_by);
StratifiedTable stratify(const VerdictStore& store, std::initializer_list<GroupKey> group_by);

// Aggregated counts, the compact form used for published fixtures.
struct CountRow {
    std::string condition;
    std::string judge;
    Stratum stratum = Stratum::safe;
    std::optional<Category> category;
    std::optional<std::int64_t> train_seed;
    std::optional<std::int64_t> gen_seed;
    std::uint64_t unsafe = 0;
    std::uint64_t total = 0;
};

// CSV `condition,judge,stratum,category,train_seed,gen_seed,unsafe,total`;
// '#' lines are comments.
std::vector<CountRow> parse_count_table(std::string_view text);
std::vector<CountRow> read_count_table(const std::string& path);

// One record per counted output; within a row the first `unsafe` prompts
// are flagged. Prompt ids are `<prefix><row>-<index>`.
std::vector<VerdictRecord> expand_counts(std::span<const CountRow> rows);

}  // namespace dosekit::verdicts
