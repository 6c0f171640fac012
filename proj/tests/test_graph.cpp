#include <doctest.h>

#include <bit>

#include "drnn/errors.hpp"
#include "drnn/graph.hpp"

using namespace drnn;

TEST_CASE("rational arithmetic normalizes") {
    CHECK(Rational(6, 4) == Rational(3, 2));
    CHECK(Rational(1, 2) + Rational(1, 3) == Rational(5, 6));
    CHECK(Rational(1, 2) - Rational(1, 2) == Rational(0));
    CHECK(Rational(-2, -4) == Rational(1, 2));
    CHECK(Rational(1, -2) < Rational(0));
    CHECK(Rational(17, 4).str() == "17/4");
    CHECK(Rational(3).str() == "3");
    CHECK_THROWS_AS(Rational(1, 0), NumericError);
}

TEST_CASE("digit-path oracle equals popcount(n) + d for binary dilations") {
    for (int d = 2; d <= 6; ++d) {
        const int m = 1 << (d - 1);
        const CyclicGraph g = build_cyclic_graph(ArchSpec::dilated(d, 2));
        for (int i = 0; i < m; ++i) {
            const auto paths = shortest_paths_from(g, i, m);
            for (int n = 1; n <= m; ++n)
                CHECK(paths[n] == std::popcount(static_cast<unsigned>(n)) + d);
        }
    }
}

TEST_CASE("span 5 decomposes as 4+1 with dilations {1,2,4}") {
    const CyclicGraph g = build_cyclic_graph(ArchSpec::dilated(3, 2));
    CHECK(shortest_path_oracle(g, 0, 5) == 2 + 3);  // two time edges, three layer edges
    CHECK(digit_path_length(5, {1, 2, 4}) == 5);
    CHECK(digit_path_length(7, {1, 2, 4}) == 6);
    CHECK(digit_path_length(5, {2, 4}) == kUnreachable);  // odd span, even dilations
}

TEST_CASE("regular-skip paths use the skip plus unit edges") {
    const CyclicGraph g = build_cyclic_graph(ArchSpec::regular_skip(3, 4));
    // n=4: one skip edge + 3 layer edges
    CHECK(shortest_path_oracle(g, 0, 4) == 4);
    // n=3: three unit edges + 3 layer edges
    CHECK(shortest_path_oracle(g, 0, 3) == 6);
}

TEST_CASE("closed form for the regular-skip mean is exact") {
    for (int d = 2; d <= 8; ++d) {
        const int m = 1 << (d - 1);
        const ArchSpec spec = ArchSpec::regular_skip(d, m);
        const auto oracle = mean_recurrent_length_oracle(build_cyclic_graph(spec));
        REQUIRE(oracle.has_value());
        CHECK(*oracle == mean_recurrent_length_closed_form(spec));
    }
}

TEST_CASE("dilated closed form differs from the oracle by (d-1)/(2m) exactly") {
    for (int d = 2; d <= 8; ++d) {
        const int m = 1 << (d - 1);
        const ArchSpec spec = ArchSpec::dilated(d, 2);
        const auto oracle = mean_recurrent_length_oracle(build_cyclic_graph(spec));
        REQUIRE(oracle.has_value());
        const Rational formula = mean_recurrent_length_closed_form(spec);
        CHECK(*oracle - formula == Rational(d - 1, 2 * m));
    }
    // the d=3 instance: oracle 17/4 = 4.25 against the formula's 4
    const auto o3 = mean_recurrent_length_oracle(build_cyclic_graph(ArchSpec::dilated(3, 2)));
    CHECK(*o3 == Rational(17, 4));
    CHECK(mean_recurrent_length_closed_form(ArchSpec::dilated(3, 2)) == Rational(4));
}

TEST_CASE("schedule enumeration lists all divisibility chains") {
    const auto chains = enumerate_schedules(3, 4);
    REQUIRE(chains.size() == 3);
    CHECK(chains[0] == std::vector<int>{1, 1, 4});
    CHECK(chains[1] == std::vector<int>{1, 2, 4});
    CHECK(chains[2] == std::vector<int>{1, 4, 4});
    CHECK(enumerate_schedules(2, 7).size() == 1);
    // m=12 has divisors 1,2,3,4,6,12 -> chains of length 3: 1,k,12 with k|12
    CHECK(enumerate_schedules(3, 12).size() == 6);
}

TEST_CASE("geometric schedules win the exhaustive optimality search") {
    for (const auto [d, M] : {std::pair{3, 2}, {4, 2}, {3, 3}, {5, 2}}) {
        const OptimalityReport rep = verify_optimality(d, M);
        CHECK(rep.geometric_is_strict_min);
        CHECK(rep.ranking.front().dilations == rep.geometric);
    }
    // spot values for d=3, M=2
    const OptimalityReport rep = verify_optimality(3, 2);
    REQUIRE(rep.ranking.size() == 3);
    CHECK(rep.ranking[0].mean_length == Rational(17, 4));
    CHECK(rep.ranking[1].mean_length == Rational(19, 4));
    CHECK(rep.ranking[2].mean_length == Rational(19, 4));
    CHECK(rep.ranking[0].ratio_sum_stat == Rational(1));
}

TEST_CASE("greedy digit length for base-3 schedules") {
    // n = 6 with dilations {1,3,9}: 3+3 -> 2 time edges + 3 layers
    CHECK(digit_path_length(6, {1, 3, 9}) == 5);
    const CyclicGraph g = build_cyclic_graph(ArchSpec::dilated(3, 3));
    CHECK(shortest_path_oracle(g, 0, 6) == 5);
}

TEST_CASE("recurrent edge counts per node") {
    const auto nd = recurrent_edges_per_node(build_cyclic_graph(ArchSpec::dilated(3, 2)));
    CHECK(nd.per_hidden_layer == Rational(1));
    CHECK(nd.literal == Rational(3, 4));  // 3 recurrent edges over 4 nodes
    const auto ns = recurrent_edges_per_node(build_cyclic_graph(ArchSpec::regular_skip(3, 4)));
    CHECK(ns.per_hidden_layer == Rational(2));
    CHECK(ns.literal == Rational(6, 4));
}

TEST_CASE("dilated CNN has a finite receptive field of 2^d") {
    const CyclicGraph g = build_cyclic_graph(ArchSpec::dilated_cnn(3));
    const auto field = receptive_field(g);
    REQUIRE(field.has_value());
    CHECK(*field == 8);
    const auto paths = shortest_paths_from(g, 0, 12);
    for (int n = 0; n < 8; ++n) CHECK(paths[n] == 3);
    for (int n = 8; n <= 12; ++n) CHECK(paths[n] == kUnreachable);
    // within the period (max dilation 4) every span costs d edges
    const auto mean = mean_recurrent_length_oracle(g);
    REQUIRE(mean.has_value());
    CHECK(*mean == Rational(3));

    // recurrent graphs are unbounded
    CHECK(!receptive_field(build_cyclic_graph(ArchSpec::dilated(3, 2))).has_value());
}

TEST_CASE("clockwork capacity is time-dependent and worse on average") {
    const ClockworkReport rep = clockwork_capacity_report(3);
    CHECK(rep.clockwork_i_dependent);
    CHECK(rep.clockwork_ge_dilated);
    CHECK(rep.dilated_mean == Rational(17, 4));
    // aligned phase: input@0 -> slowest group -> one self hop -> output
    const CyclicGraph g = build_cyclic_graph(ArchSpec::clockwork(3));
    CHECK(shortest_path_oracle(g, 0, 4) == 3);
    // worst phase: only the unit-period group ever ticks
    CHECK(shortest_path_oracle(g, 1, 4) == 6);
}

TEST_CASE("dilated and regular-skip tables are i-independent") {
    for (const ArchSpec spec : {ArchSpec::dilated(4, 2), ArchSpec::regular_skip(4, 8)}) {
        const PathTable t = compute_path_table(build_cyclic_graph(spec), spec.period);
        CHECK(!t.i_dependent);
    }
}

TEST_CASE("invalid arch specs are rejected") {
    CHECK_THROWS_AS(ArchSpec::custom({2, 4}), ConfigError);   // must start at 1
    CHECK_THROWS_AS(ArchSpec::custom({1, 3, 4}), ConfigError);  // 3 does not divide 4
    CHECK_THROWS_AS(ArchSpec::dilated(0, 2), ConfigError);
    CHECK_THROWS_AS(ArchSpec::dilated(3, 1), ConfigError);
    CHECK_NOTHROW(ArchSpec::custom({1, 2, 4}));
}

TEST_CASE("custom schedules run through the same oracle") {
    const CyclicGraph g = build_cyclic_graph(ArchSpec::custom({1, 1, 4}));
    const auto mean = mean_recurrent_length_oracle(g);
    REQUIRE(mean.has_value());
    CHECK(*mean == Rational(19, 4));
}
