#include <doctest.h>

#include "dosekit/error.hpp"
#include "dosekit/stats.hpp"
#include "dosekit/verdicts.hpp"
#include "support.hpp"

#include <cmath>

using namespace dosekit;
using namespace dosekit::verdicts;

namespace {

VerdictRecord rec(const std::string& cond, const std::string& judge, const std::string& id, Stratum s, bool unsafe) {
    VerdictRecord r;
    r.condition = cond;
    r.judge = judge;
    r.prompt_id = id;
    r.stratum = s;
    if (s == Stratum::adversarial) r.category = Category::O2;
    r.unsafe = unsafe;
    return r;
}

// Random valid store for property tests.
std::vector<VerdictRecord> random_records(testsupport::Gen& g, std::size_t n) {
    std::vector<VerdictRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        VerdictRecord r;
        r.condition = "C" + std::to_string(g.integer(0, 3));
        r.judge = g.coin() ? "ja" : "jb";
        r.prompt_id = "p" + std::to_string(i);
        r.stratum = g.coin(0.3) ? Stratum::safe : Stratum::adversarial;
        if (r.stratum == Stratum::adversarial) r.category = category_from_index(g.integer(0, 8));
        r.unsafe = g.coin(0.2);
        if (g.coin()) r.train_seed = static_cast<std::int64_t>(g.integer(1, 3));
        if (g.coin()) r.gen_seed = static_cast<std::int64_t>(g.integer(1, 3));
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

TEST_SUITE("verdicts") {

TEST_CASE("count fixture expands to exact marginals") {
    const auto rows = read_count_table(testsupport::data_path("stratified_counts.csv"));
    const auto store = VerdictStore::from_records(expand_counts(rows));
    const auto t = stratify(store, {GroupKey::condition, GroupKey::stratum});
    REQUIRE(t.rows.size() == 14);
    bool found_c0 = false;
    for (const auto& row : t.rows) {
        const auto cond = std::get<std::string>(row.group[0]);
        const auto st = std::get<std::string>(row.group[1]);
        if (st == "safe") {
            CHECK(row.total == 1000);
            CHECK(row.unsafe >= 5);
            CHECK(row.unsafe <= 15);
        } else {
            CHECK(row.total == 9000);
            CHECK(row.unsafe >= 1644);
            CHECK(row.unsafe <= 2631);
        }
        if (cond == "C0" && st == "safe") CHECK(row.unsafe == 9);
        if (cond == "C0" && st == "adversarial") {
            CHECK(row.unsafe == 2053);
            found_c0 = true;
        }
    }
    CHECK(found_c0);
}

TEST_CASE("empty file gives an empty store") {
    const auto store = parse_jsonl("");
    CHECK(store.empty());
    CHECK(store.conditions().empty());
    CHECK(parse_jsonl("\n\n").empty());
    try {
        (void)stratify(store, {});
        FAIL("expected empty-input error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::empty_input);
    }
}

TEST_CASE("duplicate key is rejected with its line") {
    const std::string a = to_json_line(rec("C0", "j", "p1", Stratum::safe, false));
    const std::string b = to_json_line(rec("C0", "j", "p2", Stratum::safe, true));
    const std::string text = a + "\n" + b + "\n\n" + a + "\n";
    try {
        (void)parse_jsonl(text);
        FAIL("expected duplicate error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::duplicate_key);
        CHECK(e.line() == 4);
    }
}

TEST_CASE("malformed records") {
    const auto kind_of = [](const std::string& text) {
        try {
            (void)parse_jsonl(text);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::io;  // sentinel: no error
    };
    const std::string good = to_json_line(rec("C0", "j", "p1", Stratum::adversarial, true));
    CHECK(kind_of(good + "\n") == ErrorKind::io);
    CHECK(kind_of(good + "\n{\"condition\":\"C0\",\"judge\"") == ErrorKind::truncated);
    CHECK(kind_of("{not json}\n") == ErrorKind::parse);
    CHECK(kind_of(R"({"condition":"C0","judge":"j","prompt_id":"p","stratum":"safe","unsafe":false,"extra":1})" "\n") ==
          ErrorKind::parse);
    CHECK(kind_of(R"({"condition":"C0","judge":"j","prompt_id":"p","stratum":"adversarial","category":"O10","unsafe":true})" "\n") ==
          ErrorKind::parse);
    CHECK(kind_of(R"({"condition":"C0","judge":"j","prompt_id":"p","stratum":"safe","category":"O1","unsafe":true})" "\n") ==
          ErrorKind::parse);
    CHECK(kind_of(R"({"condition":"C0","judge":"j","prompt_id":"p","stratum":"safe","unsafe":1})" "\n") ==
          ErrorKind::parse);
    CHECK(kind_of(R"({"condition":"C0","judge":"j","prompt_id":"p","stratum":"safe","unsafe":false,"train_seed":null})" "\n") ==
          ErrorKind::parse);
}

TEST_CASE("group by nothing gives grand totals") {
    std::vector<VerdictRecord> v = {rec("A", "j", "1", Stratum::safe, true), rec("A", "j", "2", Stratum::safe, false),
                                    rec("B", "j", "1", Stratum::adversarial, true)};
    const auto store = VerdictStore::from_records(v);
    const auto t = stratify(store, {});
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].unsafe == 2);
    CHECK(t.rows[0].total == 3);
    CHECK_THROWS_AS(stratify(store, {GroupKey::train_seed}), Error);
    CHECK(store.by_condition("A").size() == 2);
    CHECK(store.by_stratum(Stratum::adversarial).size() == 1);
    CHECK(store.by_category(Category::O2).size() == 1);
    CHECK(store.by_judge("nobody").empty());
}

TEST_CASE("seed-pair stratification rebuilds the seed matrix") {
    const auto rows = read_count_table(testsupport::data_path("seed_counts.csv"));
    const auto store = VerdictStore::from_records(expand_counts(rows));
    const auto sub_rows = [&] {
        std::vector<VerdictRecord> v;
        for (auto i : store.by_condition("C0")) v.push_back(store.records()[i]);
        return VerdictStore::from_records(std::move(v));
    }();
    const auto table = stratify(sub_rows, {GroupKey::train_seed, GroupKey::gen_seed});
    CHECK(table.rows.size() == 25);
    const auto m = stats::seed_matrix_from_table(table);
    const auto ref = stats::read_seed_matrix(testsupport::data_path("seed_matrix_c0.csv"));
    REQUIRE(m.rows() == 5);
    REQUIRE(m.cols() == 5);
    CHECK(m.row_labels == ref.row_labels);
    CHECK(m.col_labels == ref.col_labels);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            CHECK(m.cells[i][j] == doctest::Approx(ref.cells[i][j]).epsilon(1e-12));
        }
    }
    CHECK(store.by_seed_pair(42, 137).size() == 20'000);
}

TEST_CASE("property: stratification partitions the grand counts") {
    testsupport::Gen g(31);
    const std::vector<GroupKey> all = {GroupKey::condition, GroupKey::judge,      GroupKey::stratum,
                                       GroupKey::category,  GroupKey::train_seed, GroupKey::gen_seed};
    for (int trial = 0; trial < 40; ++trial) {
        const auto store = VerdictStore::from_records(random_records(g, g.integer(1, 300)));
        std::uint64_t grand_u = 0;
        for (const auto& r : store.records()) grand_u += r.unsafe;
        for (unsigned mask = 0; mask < 64; mask += 1 + static_cast<unsigned>(g.integer(0, 6))) {
            std::vector<GroupKey> keys;
            for (std::size_t b = 0; b < all.size(); ++b) if (mask & (1u << b)) keys.push_back(all[b]);
            StratifiedTable t;
            try {
                t = stratify(store, keys);
            } catch (const Error& e) {
                CHECK(e.kind() == ErrorKind::missing_key);
                continue;
            }
            std::uint64_t u = 0, n = 0;
            for (const auto& row : t.rows) {
                u += row.unsafe;
                n += row.total;
                CHECK(row.unsafe <= row.total);
            }
            CHECK(u == grand_u);
            CHECK(n == store.size());
        }
    }
}

TEST_CASE("property: ingest and export round trip") {
    testsupport::Gen g(32);
    for (int trial = 0; trial < 30; ++trial) {
        auto recs = random_records(g, g.integer(0, 200));
        const auto exported = export_jsonl(recs);
        const auto store = parse_jsonl(exported);
        CHECK(export_jsonl(store) == exported);
        g.rng.shuffle(std::span<VerdictRecord>(recs));
        CHECK(export_jsonl(recs) == exported);
    }
}

TEST_CASE("ingest from disk") {
    testsupport::TempDir dir("verdicts");
    std::vector<VerdictRecord> v = {rec("A", "j", "1", Stratum::safe, true)};
    write_file(dir.file("v.jsonl"), export_jsonl(v));
    CHECK(ingest(dir.file("v.jsonl")).records() == v);
    CHECK_THROWS_AS(ingest(dir.file("absent.jsonl")), Error);
}

TEST_CASE("count table parsing") {
    CHECK_THROWS_AS(parse_count_table("condition,judge\n"), Error);
    try {
        (void)parse_count_table("condition,judge,stratum,category,train_seed,gen_seed,unsafe,total\nC0,j,safe,,,,5,3\n");
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.line() == 2);
    }
    const auto rows =
        parse_count_table("condition,judge,stratum,category,train_seed,gen_seed,unsafe,total\nC0,j,adversarial,O4,1,2,2,3\n");
    const auto recs = expand_counts(rows);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].unsafe);
    CHECK(recs[1].unsafe);
    CHECK_FALSE(recs[2].unsafe);
    CHECK(recs[0].category == Category::O4);
    CHECK(recs[0].train_seed == 1);
}

}
