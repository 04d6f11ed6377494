#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "perftx/config_space.hpp"
#include "perftx/rng.hpp"

using namespace perftx;

namespace {

ParameterSpec numeric(const std::string& name, double min, double max, std::vector<double> grid,
                      ParamScale scale = ParamScale::Linear) {
    ParameterSpec p;
    p.name = name;
    p.kind = ParamKind::NumericRange;
    p.min = min;
    p.max = max;
    p.grid = std::move(grid);
    p.scale = scale;
    return p;
}

ParameterSpec binary(const std::string& name) {
    ParameterSpec p;
    p.name = name;
    p.kind = ParamKind::Binary;
    p.labels = {"off", "on"};
    return p;
}

std::vector<double> iota_grid(int count) {
    std::vector<double> g(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = i;
    return g;
}

} // namespace

TEST_CASE("cardinality of the case-study grid is 25 x 27 = 675") {
    auto space = build_space({numeric("a", 0, 24, iota_grid(25)), numeric("b", 0, 26, iota_grid(27))});
    CHECK(space.cardinality() == 675);
}

TEST_CASE("one binary parameter has cardinality 2") {
    CHECK(build_space({binary("flag")}).cardinality() == 2);
}

TEST_CASE("twenty binary parameters make about a million configurations") {
    std::vector<ParameterSpec> specs;
    for (int i = 0; i < 20; ++i) specs.push_back(binary("flag" + std::to_string(i)));
    CHECK(build_space(specs).cardinality() == 1048576);
}

TEST_CASE("invalid parameter definitions are rejected") {
    CHECK_THROWS_AS(build_space({binary("x"), binary("x")}), ValidationError);
    CHECK_THROWS_AS(build_space({numeric("e", 0, 1, {})}), ValidationError);
    CHECK_THROWS_AS(build_space({numeric("l", 0, 10, {0, 1, 2}, ParamScale::Log)}),
                    ValidationError);
    CHECK_THROWS_AS(build_space({numeric("unsorted", 0, 10, {3, 1, 2})}), ValidationError);
    ParameterSpec bad = binary("b");
    bad.labels = {"only"};
    CHECK_THROWS_AS(build_space({bad}), ValidationError);
}

TEST_CASE("enumeration is lexicographic in the parameter grids") {
    auto space = build_space({numeric("a", 0, 1, iota_grid(2)), numeric("b", 0, 2, iota_grid(3))});
    auto configs = enumerate_space(space);
    REQUIRE(configs.size() == 6);
    const std::vector<std::vector<std::uint32_t>> expected = {
        {0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}};
    for (std::size_t i = 0; i < 6; ++i) CHECK(configs[i].indices == expected[i]);
}

TEST_CASE("enumeration cap is enforced") {
    auto space = build_space({numeric("a", 0, 24, iota_grid(25)), numeric("b", 0, 26, iota_grid(27))});
    CHECK(enumerate_space(space).size() == 675);
    CHECK_THROWS_AS(enumerate_space(space, 100), ValidationError);
}

TEST_CASE("random_sample basics") {
    auto space = build_space({numeric("a", 0, 24, iota_grid(25)), numeric("b", 0, 26, iota_grid(27))});
    CHECK(random_sample(space, 0, 7).empty());
    CHECK_THROWS_AS(random_sample(space, 676, 7), ValidationError);

    SUBCASE("sampling everything is a permutation of the enumeration") {
        auto all = random_sample(space, 675, 3);
        std::set<std::uint64_t> seen;
        for (const auto& c : all) seen.insert(space.ordinal_of(c));
        CHECK(seen.size() == 675);
    }

    SUBCASE("identical seeds give identical draws") {
        auto a = random_sample(space, 9, 42);
        auto b = random_sample(space, 9, 42);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].indices == b[i].indices);
    }

    SUBCASE("draws are distinct and valid") {
        for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
            auto sample = random_sample(space, 50, seed);
            std::set<std::uint64_t> seen;
            for (const auto& c : sample) {
                CHECK(space.contains(c));
                seen.insert(space.ordinal_of(c));
            }
            CHECK(seen.size() == 50);
        }
    }
}

TEST_CASE("the documented PRNG stream is platform-stable") {
    // frozen first draw of mt19937_64 seeded with 0 (value fixed by the standard)
    Rng rng(0);
    CHECK(rng.next_u64() == 0xc96d191cf6f6aea6ULL);
}

TEST_CASE("binary encoding maps the label order onto {0, 1}") {
    auto space = build_space({binary("flag")});
    CHECK(encode(space, Configuration{{0}})[0] == 0.0);
    CHECK(encode(space, Configuration{{1}})[0] == 1.0);
}

TEST_CASE("log-scale encoding endpoints and geometric midpoint") {
    const double mid = std::sqrt(5.0 * 10000.0); // 223.606...
    auto space = build_space({numeric("p", 5, 10000, {5.0, mid, 10000.0}, ParamScale::Log)});
    CHECK(encode(space, Configuration{{0}})[0] == 0.0);
    CHECK(encode(space, Configuration{{2}})[0] == 1.0);
    const double expected = (std::log(mid) - std::log(5.0)) / (std::log(10000.0) - std::log(5.0));
    CHECK(std::abs(encode(space, Configuration{{1}})[0] - expected) < 1e-15);
    CHECK(std::abs(encode(space, Configuration{{1}})[0] - 0.5) < 1e-12);
}

TEST_CASE("encoding is monotone and injective on each grid") {
    auto space = build_space(
        {numeric("lin", 0, 100, {0, 10, 30, 70, 100}),
         numeric("log", 1, 1000, {1, 10, 100, 1000}, ParamScale::Log)});
    ParameterSpec cat;
    cat.name = "c";
    cat.kind = ParamKind::Categorical;
    cat.labels = {"a", "b", "c", "d"};
    auto space2 = build_space({cat});
    for (std::size_t pi = 0; pi < 2; ++pi) {
        double prev = -1.0;
        for (std::uint32_t i = 0; i < space.parameters()[pi].domain_size(); ++i) {
            Configuration c{{0, 0}};
            c.indices[pi] = i;
            const double v = encode(space, c)[static_cast<Eigen::Index>(pi)];
            CHECK(v > prev);
            prev = v;
        }
    }
    // ordinal categorical encoding: index / (k - 1)
    CHECK(encode(space2, Configuration{{1}})[0] == doctest::Approx(1.0 / 3.0));
    CHECK(encode(space2, Configuration{{3}})[0] == 1.0);
}

TEST_CASE("encode rejects invalid configurations") {
    auto space = build_space({binary("flag")});
    CHECK_THROWS_AS(encode(space, Configuration{{2}}), ValidationError);
    CHECK_THROWS_AS(encode(space, Configuration{{0, 0}}), ValidationError);
}

TEST_CASE("space JSON round-trips, including grid shorthand") {
    const std::string text = R"({
      "parameters": [
        {"name": "particles", "kind": "integer-range", "min": 5, "max": 10000,
         "grid": {"from": 5, "to": 10000, "count": 25, "spacing": "log"}, "scale": "log"},
        {"name": "cache", "kind": "binary", "labels": ["off", "on"]},
        {"name": "mode", "kind": "categorical", "labels": ["slow", "medium", "fast"]}
      ]})";
    auto space = load_space_json(text);
    CHECK(space.cardinality() == 25 * 2 * 3);
    CHECK(space.parameters()[0].grid.front() == 5.0);
    CHECK(space.parameters()[0].grid.back() == 10000.0);
    // deterministic expansion: strictly increasing, geometric
    for (std::size_t i = 1; i < 25; ++i)
        CHECK(space.parameters()[0].grid[i] > space.parameters()[0].grid[i - 1]);

    auto space2 = load_space_json(space_to_json(space));
    CHECK(space2.cardinality() == space.cardinality());
    for (std::size_t i = 0; i < 25; ++i)
        CHECK(space2.parameters()[0].grid[i] == space.parameters()[0].grid[i]);
}

TEST_CASE("domain_index snaps text round-trips back onto the grid") {
    auto space = build_space({numeric("p", 1, 1000, {1, 10, 100, 1000}, ParamScale::Log)});
    const auto& p = space.parameters()[0];
    for (std::uint32_t i = 0; i < 4; ++i)
        CHECK(space.domain_index(0, p.value_text(i)) == i);
    CHECK_THROWS_AS(space.domain_index(0, std::string("7")), ValidationError);
}
