#include <doctest.h>

#include "dosekit/error.hpp"
#include "dosekit/stats.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <cmath>

using namespace dosekit;
using namespace dosekit::stats;

namespace {

SeedMatrix random_matrix(testsupport::Gen& g) {
    SeedMatrix m;
    const auto r = g.integer(2, 7), c = g.integer(2, 7);
    for (std::uint64_t i = 0; i < r; ++i) {
        std::vector<double> row;
        for (std::uint64_t j = 0; j < c; ++j) row.push_back(g.real(0.0, 1.0));
        m.cells.push_back(std::move(row));
    }
    return m;
}

verdicts::VerdictRecord verdict(const std::string& cond, const std::string& judge, std::size_t i, bool unsafe) {
    verdicts::VerdictRecord r;
    r.condition = cond;
    r.judge = judge;
    r.prompt_id = "p" + std::to_string(i);
    r.stratum = Stratum::adversarial;
    r.category = Category::O1;
    r.unsafe = unsafe;
    return r;
}

// Judge scores condition c with `rates[c]` unsafe out of 100.
void add_judge(std::vector<verdicts::VerdictRecord>& out, const std::string& judge,
               const std::vector<std::pair<std::string, int>>& rates) {
    for (const auto& [cond, k] : rates) {
        for (int i = 0; i < 100; ++i) out.push_back(verdict(cond, judge, static_cast<std::size_t>(i), i < k));
    }
}

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("rate examples") {
    auto r = rate(96'000, 7'940'000);
    CHECK(r.rate == doctest::Approx(0.0121).epsilon(0.001));
    r = rate(2'053, 9'000);
    CHECK(r.rate == doctest::Approx(0.2281).epsilon(1e-4));
    r = rate(0, 100);
    CHECK(r.rate == 0.0);
    CHECK(r.ci_low == 0.0);
    CHECK(r.ci_high > 0.0);
    CHECK_THROWS_AS(rate(1, 0), Error);
    CHECK_THROWS_AS(rate(5, 3), Error);
}

TEST_CASE("property: Wilson interval contains the rate and shrinks like 1/sqrt(n)") {
    testsupport::Gen g(1);
    for (int i = 0; i < 2000; ++i) {
        const auto n = g.integer(1, 100'000);
        const auto u = g.integer(0, n);
        const auto r = rate(u, n, g.real(0.5, 0.999));
        CHECK(r.ci_low <= r.rate);
        CHECK(r.rate <= r.ci_high);
        CHECK(r.ci_low >= 0.0);
        CHECK(r.ci_high <= 1.0);
        CHECK(r.rate == static_cast<double>(u) / static_cast<double>(n));
    }
    const auto w1 = rate(300, 1000), w4 = rate(1200, 4000);
    const double ratio = (w1.ci_high - w1.ci_low) / (w4.ci_high - w4.ci_low);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("amplification") {
    CHECK(amplification(0.206, 0.0121) == doctest::Approx(17.02).epsilon(0.001));
    CHECK(amplification(0.3, 0.3) == 1.0);
    CHECK(amplification(0.255, 0.05) == doctest::Approx(5.1).epsilon(1e-12));
    try {
        (void)amplification(0.2, 0.0);
        FAIL("expected undefined");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::undefined);
    }
}

TEST_CASE("two-proportion test examples") {
    auto t = two_proportion_test({2350, 10000}, {2060, 10000});
    CHECK(t.method == "pooled_z");
    CHECK(t.p_value == doctest::Approx(7.6e-7).epsilon(0.02));
    t = two_proportion_test({20, 100}, {20, 100});
    CHECK(t.z == 0.0);
    CHECK(t.p_value == 1.0);
    t = two_proportion_test({3, 10}, {7, 10});
    CHECK(t.method == "exact_unconditional");
    CHECK(t.p_value == doctest::Approx(oracles::enumerated_p(3, 10, 7, 10)).epsilon(1e-9));
    t = two_proportion_test({0, 10}, {0, 12});
    CHECK(t.method == "degenerate");
    CHECK(t.p_value == 1.0);
}

TEST_CASE("property: test symmetry") {
    testsupport::Gen g(2);
    for (int i = 0; i < 500; ++i) {
        const auto n = g.integer(1, 400), m = g.integer(1, 400);
        const Proportion a{g.integer(0, n), n}, b{g.integer(0, m), m};
        const auto ab = two_proportion_test(a, b), ba = two_proportion_test(b, a);
        CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
        CHECK(ab.z == doctest::Approx(-ba.z).epsilon(1e-12));
        CHECK(ab.p_value >= 0.0);
        CHECK(ab.p_value <= 1.0);
    }
}

TEST_CASE("exact test against enumeration for small tables") {
    double worst = 0.0;
    for (unsigned n = 1; n <= 12; ++n) {
        for (unsigned m = 1; m <= 12; ++m) {
            for (unsigned x = 0; x <= n; ++x) {
                for (unsigned y = 0; y <= m; ++y) {
                    const auto t = two_proportion_test({x, n}, {y, m});
                    worst = std::max(worst, std::abs(t.p_value - oracles::enumerated_p(x, n, y, m)));
                }
            }
        }
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("Holm adjustment") {
    std::vector<double> p = {0.01, 0.04, 0.03, 0.005};
    const auto adj = holm_adjust(p);
    CHECK(adj[3] == doctest::Approx(0.02));
    CHECK(adj[0] == doctest::Approx(0.03));
    CHECK(adj[2] == doctest::Approx(0.06));
    CHECK(adj[1] == doctest::Approx(0.06));
    CHECK(holm_adjust(std::vector<double>{}).empty());
}

TEST_CASE("Spearman examples") {
    std::vector<double> x = {1, 2, 3, 4, 5}, y = {1, 3, 2, 5, 4};
    const auto r = spearman(x, y);
    CHECK(std::abs(r.rho - 0.8) < 1e-12);
    CHECK(std::abs(r.rho - oracles::spearman_untied(x, y)) < 1e-12);
    CHECK(r.method == "exact_permutation");
    // Two-sided permutation p over all 120 orderings.
    std::vector<int> perm = {0, 1, 2, 3, 4};
    int hits = 0, total = 0;
    do {
        std::vector<double> py;
        for (int k : perm) py.push_back(y[static_cast<std::size_t>(k)]);
        if (std::abs(oracles::spearman_untied(x, average_ranks(py))) >= 0.8 - 1e-12) ++hits;
        ++total;
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(r.p_value == doctest::Approx(static_cast<double>(hits) / total).epsilon(1e-12));

    std::vector<double> inc = {0.1, 0.5, 0.9, 3, 10};
    CHECK(spearman(x, inc).rho == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<double> rev = {5, 4, 3, 2, 1};
    CHECK(spearman(x, rev).rho == doctest::Approx(-1.0).epsilon(1e-15));
    std::vector<double> flat = {2, 2, 2, 2, 2};
    CHECK_THROWS_AS(spearman(x, flat), Error);
    CHECK(average_ranks(std::vector<double>{3, 1, 3}) == std::vector<double>{2.5, 1, 2.5});
}

TEST_CASE("property: Spearman is invariant under monotone transforms") {
    testsupport::Gen g(3);
    for (int i = 0; i < 200; ++i) {
        const auto n = g.integer(3, 25);
        std::vector<double> x, y;
        for (std::uint64_t k = 0; k < n; ++k) {
            x.push_back(static_cast<double>(g.integer(0, 12)));
            y.push_back(g.real(-2, 2));
        }
        x[0] = -1;  // never constant
        std::vector<double> fx, fy;
        for (double v : x) fx.push_back(std::exp(v / 3.0));
        for (double v : y) fy.push_back(-std::pow(v, 3.0));
        const auto a = spearman(x, y), b = spearman(fx, fy);
        CHECK(b.rho == doctest::Approx(-a.rho).epsilon(1e-12));
        CHECK(b.p_value == doctest::Approx(a.p_value).epsilon(1e-9));
        CHECK(spearman(fx, y).rho == doctest::Approx(a.rho).epsilon(1e-12));
    }
}

TEST_CASE("kappa examples") {
    std::vector<std::uint8_t> a = {1, 0, 1, 1, 0, 0};
    auto k = kappa(a, a);
    CHECK(k.agreement == 1.0);
    CHECK(*k.kappa == 1.0);
    k = kappa_from_table(40, 10, 10, 40);
    CHECK(std::abs(k.agreement - 0.8) < 1e-12);
    CHECK(std::abs(k.chance - 0.5) < 1e-12);
    CHECK(std::abs(*k.kappa - 0.6) < 1e-12);
    CHECK(std::abs(*k.kappa - oracles::cohen_kappa(40, 10, 10, 40)) < 1e-12);
    // Exact-chance construction: cell counts equal the product of marginals.
    k = kappa_from_table(30 * 30, 30 * 70, 70 * 30, 70 * 70);
    CHECK(std::abs(*k.kappa) < 1e-12);
    std::vector<std::uint8_t> ones = {1, 1, 1};
    k = kappa(ones, ones);
    CHECK_FALSE(k.kappa.has_value());
    std::vector<std::uint8_t> shorter = {1};
    CHECK_THROWS_AS(kappa(ones, shorter), Error);
}

TEST_CASE("property: kappa bounded by agreement") {
    testsupport::Gen g(4);
    for (int i = 0; i < 1000; ++i) {
        const auto n = g.integer(1, 60);
        std::vector<std::uint8_t> a, b;
        const double pa = g.real(0, 1), flip = g.real(0, 1);
        for (std::uint64_t k = 0; k < n; ++k) {
            a.push_back(g.coin(pa));
            b.push_back(g.coin(flip) ? !a.back() : a.back());
        }
        const auto r = kappa(a, b);
        CHECK(r.agreement <= 1.0);
        if (r.kappa) {
            CHECK(*r.kappa <= r.agreement + 1e-12);
            const bool identical = a == b;
            CHECK((std::abs(*r.kappa - 1.0) < 1e-12) == identical);
        }
    }
}

TEST_CASE("variance decomposition examples") {
    SeedMatrix m;
    m.cells = {{1, 1}, {3, 3}};
    const auto ss = variance_decomposition(m);
    CHECK(ss.frac_rows == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ss.frac_cols) < 1e-12);
    CHECK(std::abs(ss.frac_residual) < 1e-12);
    CHECK(ss.grand_mean == 2.0);
    // The marginal form overstates a pure row effect on tiny layouts: (rc-1)/(c(r-1)) = 1.5 here.
    const auto mv = variance_decomposition(m, 0.95, DecompositionMethod::marginal_variance);
    CHECK(mv.frac_rows == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(mv.frac_residual == doctest::Approx(-0.5).epsilon(1e-12));
    SeedMatrix flat;
    flat.cells = {{2, 2}, {2, 2}};
    const auto d = variance_decomposition(flat);
    CHECK(d.degenerate);
    CHECK(d.frac_rows == 0.0);
    SeedMatrix ragged;
    ragged.cells = {{1, 2}, {3}};
    CHECK_THROWS_AS(variance_decomposition(ragged), Error);
    SeedMatrix tiny;
    tiny.cells = {{1, 2}};
    CHECK_THROWS_AS(variance_decomposition(tiny), Error);
}

TEST_CASE("published seed matrices") {
    const auto c0 = read_seed_matrix(testsupport::data_path("seed_matrix_c0.csv"));
    const auto ss = variance_decomposition(c0);
    CHECK(ss.grand_mean * 100 == doctest::Approx(21.804).epsilon(1e-4));
    CHECK(ss.frac_rows == doctest::Approx(0.056).epsilon(0.02));
    const auto mv = variance_decomposition(c0, 0.95, DecompositionMethod::marginal_variance);
    CHECK(mv.frac_rows == doctest::Approx(1.2 * ss.frac_rows).epsilon(1e-9));
    CHECK(mv.frac_cols == doctest::Approx(1.2 * ss.frac_cols).epsilon(1e-9));
    CHECK(parse_decomposition_method(method_name(DecompositionMethod::marginal_variance)) ==
          DecompositionMethod::marginal_variance);
    CHECK(parse_seed_matrix(format_seed_matrix(c0)).cells == c0.cells);
}

TEST_CASE("property: fractions sum to one and ignore a constant shift") {
    testsupport::Gen g(5);
    for (int i = 0; i < 300; ++i) {
        auto m = random_matrix(g);
        for (auto method : {DecompositionMethod::sum_of_squares, DecompositionMethod::marginal_variance}) {
            const auto d = variance_decomposition(m, 0.95, method);
            CHECK(std::abs(d.frac_rows + d.frac_cols + d.frac_residual - 1.0) <= 1e-9);
            auto shifted = m;
            const double c = g.real(-5, 5);
            for (auto& row : shifted.cells) for (auto& v : row) v += c;
            const auto s = variance_decomposition(shifted, 0.95, method);
            CHECK(s.frac_rows == doctest::Approx(d.frac_rows).epsilon(1e-8));
            CHECK(s.frac_cols == doctest::Approx(d.frac_cols).epsilon(1e-8));
            CHECK(s.grand_mean == doctest::Approx(d.grand_mean + c).epsilon(1e-12));
            CHECK(s.total_std == doctest::Approx(d.total_std).epsilon(1e-8));
        }
    }
}

TEST_CASE("cross-judge profile on the encoder fixture") {
    const auto rows = verdicts::read_count_table(testsupport::data_path("cross_judge_encoders.csv"));
    const auto store = verdicts::VerdictStore::from_records(verdicts::expand_counts(rows));
    ProfileOptions opts;
    opts.reference_judge = "llavaguard";
    for (const std::string enc : {"clip", "safeclip", "t5gemma"}) opts.subsets.push_back({enc + "_filtered", enc + "_original"});
    const auto prof = cross_judge_profile(store, opts);
    CHECK(prof.judges.size() == 4);
    for (const auto& s : opts.subsets) CHECK(s.size() == 2);
    for (const auto& so : prof.subsets) {
        CHECK(so.flagged.empty());
        for (const auto& [judge, order] : so.ordering) CHECK(order.front().find("_filtered") != std::string::npos);
    }
    for (const auto& c : prof.concordance) {
        REQUIRE(c.rho.has_value());
        CHECK(*c.rho > 0.9);
    }
}

TEST_CASE("cross-judge concordance extremes") {
    std::vector<verdicts::VerdictRecord> v;
    const std::vector<std::pair<std::string, int>> up = {{"A", 10}, {"B", 20}, {"C", 30}, {"D", 40}};
    const std::vector<std::pair<std::string, int>> down = {{"A", 40}, {"B", 30}, {"C", 20}, {"D", 10}};
    add_judge(v, "j1", up);
    add_judge(v, "j2", up);
    add_judge(v, "j3", down);
    const auto prof = cross_judge_profile(verdicts::VerdictStore::from_records(v));
    REQUIRE(prof.concordance.size() == 3);
    for (const auto& c : prof.concordance) {
        if (c.judge_a == "j1" && c.judge_b == "j2") CHECK(*c.rho == doctest::Approx(1.0));
        else CHECK(*c.rho == doctest::Approx(-1.0));
    }
    std::vector<verdicts::VerdictRecord> one;
    add_judge(one, "j1", up);
    CHECK_THROWS_AS(cross_judge_profile(verdicts::VerdictStore::from_records(one)), Error);
}

TEST_CASE("pair_judges matches on prompt") {
    std::vector<verdicts::VerdictRecord> v;
    add_judge(v, "a", {{"X", 40}});
    add_judge(v, "b", {{"X", 50}});
    const auto store = verdicts::VerdictStore::from_records(v);
    const auto paired = pair_judges(store, "a", "b");
    REQUIRE(paired.a.size() == 100);
    const auto k = kappa(paired.a, paired.b);
    CHECK(k.agreement == doctest::Approx(0.9));
}

TEST_CASE("distribution helpers") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_two_sided_p(1.959964) == doctest::Approx(0.05).epsilon(1e-5));
    CHECK(student_t_quantile(0.975, 24) == doctest::Approx(2.063899).epsilon(1e-6));
    CHECK(student_t_two_sided_p(2.063899, 24) == doctest::Approx(0.05).epsilon(1e-5));
}

}
