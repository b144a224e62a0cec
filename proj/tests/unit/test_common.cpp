#include <doctest.h>

#include "dosekit/error.hpp"
#include "dosekit/rng.hpp"
#include "dosekit/taxonomy.hpp"
#include "dosekit/text.hpp"
#include "support.hpp"

#include <cmath>
#include <numeric>
#include <set>

using namespace dosekit;

TEST_SUITE("common") {

TEST_CASE("format_double round-trips and trims") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(0.25) == "0.25");
    CHECK(format_double(1e-7) == "1e-07");
    testsupport::Gen g(11);
    for (int i = 0; i < 500; ++i) {
        const double x = g.real(-1e6, 1e6) * std::pow(10.0, g.real(-12, 0));
        CHECK(parse_double(format_double(x), "x") == x);
    }
    CHECK(format_double(0.123456, 3) == "0.123");
}

TEST_CASE("parse helpers reject junk") {
    CHECK_THROWS_AS(parse_double("abc", "x"), Error);
    CHECK_THROWS_AS(parse_double("1.5x", "x"), Error);
    CHECK_THROWS_AS(parse_int("4.5", "n"), Error);
    CHECK(parse_int("-12", "n") == -12);
    CHECK(split("a,,b") == std::vector<std::string>{"a", "", "b"});
    CHECK(trim("  x \r") == "x");
}

TEST_CASE("derive_seed is order independent and spreads streams") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(42, s));
    CHECK(seen.size() == 1000);
    CHECK(derive_seed(42, "C0") == derive_seed(42, "C0"));
    CHECK(derive_seed(42, "C0") != derive_seed(43, "C0"));
}

TEST_CASE("Rng helpers stay in range and are reproducible") {
    Rng a(5), b(5);
    for (int i = 0; i < 200; ++i) {
        const auto x = a.below(17);
        CHECK(x < 17);
        CHECK(x == b.below(17));
    }
    Rng r(9);
    auto idx = r.sample_indices(50, 20);
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    CHECK(uniq.size() == 20);
    CHECK(*uniq.rbegin() < 50);

    std::vector<int> v(30);
    std::iota(v.begin(), v.end(), 0);
    r.shuffle(std::span<int>(v));
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 30; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("taxonomy codes") {
    CHECK(category_name(Category::O1) == "O1");
    CHECK(parse_category("O9") == Category::O9);
    CHECK_FALSE(parse_category("O10"));
    CHECK_FALSE(parse_category("o1"));
    CHECK(category_from_index(9) == Category::O1);
    CHECK(parse_stratum("adversarial") == Stratum::adversarial);
    CHECK_FALSE(parse_stratum("other"));
}

TEST_CASE("write_file replaces atomically") {
    testsupport::TempDir dir("common");
    const auto path = dir.file("x.txt");
    write_file(path, "one");
    write_file(path, "two");
    CHECK(read_file(path) == "two");
    CHECK_THROWS_AS(read_file(dir.file("missing")), Error);
}

}
