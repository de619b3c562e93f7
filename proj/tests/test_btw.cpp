#include <doctest.h>

#include <set>

#include "oracles.hpp"
#include "sandpile/btw.hpp"
#include "sandpile/errors.hpp"
#include "sandpile/recurrent.hpp"
#include "sandpile/reference.hpp"
#include "sandpile/rng.hpp"

using namespace sandpile;

namespace {

IntConfig cfg(std::initializer_list<std::int64_t> h) { return IntConfig{std::vector<std::int64_t>(h)}; }

std::vector<std::vector<std::size_t>> adjacency(const Lattice& lat) {
    std::vector<std::vector<std::size_t>> adj(lat.size());
    for (Site x = 0; x < lat.size(); ++x) adj[x].assign(lat.neighbours(x).begin(), lat.neighbours(x).end());
    return adj;
}

IntConfig random_config(const Lattice& lat, Rng& rng, std::int64_t max_height) {
    IntConfig xi{std::vector<std::int64_t>(lat.size())};
    for (auto& h : xi.heights) h = static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(max_height + 1)));
    return xi;
}

}  // namespace

TEST_CASE("btw_topple examples") {
    const Lattice path2 = build_lattice({2});
    CHECK(btw_topple(path2, cfg({2, 0}), 0).config == cfg({0, 1}));
    auto once = btw_topple(path2, cfg({2, 2}), 0).config;
    CHECK(btw_topple(path2, once, 1).config == cfg({1, 1}));
    const Lattice single = build_lattice({1});
    CHECK(btw_topple(single, cfg({2}), 0).config == cfg({0}));
}

TEST_CASE("illegal toppling is rejected unless flagged") {
    const Lattice lat = build_lattice({2});
    CHECK_THROWS_AS(btw_topple(lat, cfg({1, 0}), 0), DomainError);
    const auto r = btw_topple(lat, cfg({1, 0}), 0, ToppleMode::allow_illegal);
    CHECK_FALSE(r.legal);
    CHECK(r.config == cfg({-1, 1}));
}

TEST_CASE("btw_stabilize examples") {
    const Lattice lat = build_lattice({2});
    const auto s = btw_stabilize(lat, cfg({2, 2}));
    CHECK(s.config == cfg({1, 1}));
    CHECK(s.odometer.counts == std::vector<std::int64_t>{1, 1});

    const auto stable = btw_stabilize(lat, cfg({1, 0}));
    CHECK(stable.config == cfg({1, 0}));
    CHECK(stable.odometer.counts == std::vector<std::int64_t>{0, 0});

    std::vector<std::int64_t> odo;
    const auto expected = oracle::stabilize(oracle::path_adjacency(2), 2, {4, 0}, &odo);
    const auto got = btw_stabilize(lat, cfg({4, 0}));
    CHECK(got.config.heights == expected);
    CHECK(got.odometer.counts == odo);
    Rng rng(11, 0);
    for (int i = 0; i < 20; ++i) {
        const auto r = reference::btw_stabilize(lat, cfg({4, 0}), reference::Schedule::random, &rng);
        CHECK(r.config == got.config);
        CHECK(r.odometer == got.odometer);
    }
}

TEST_CASE("stabilization matches the naive oracle and conserves mass") {
    Rng rng(5, 1);
    for (auto dims : {std::vector<std::size_t>{4}, {3, 3}, {2, 2, 2}}) {
        const Lattice lat = build_lattice(dims);
        const auto adj = adjacency(lat);
        const auto delta = toppling_matrix(lat, TopplingVariant::integer);
        for (int trial = 0; trial < 200; ++trial) {
            const IntConfig xi = random_config(lat, rng, 2 * lat.two_d());
            std::vector<std::int64_t> odo;
            const auto expected = oracle::stabilize(adj, lat.two_d(), xi.heights, &odo);
            const auto got = btw_stabilize(lat, xi);
            REQUIRE(got.config.heights == expected);
            REQUIRE(got.odometer.counts == odo);
            for (Site x = 0; x < lat.size(); ++x) {
                Rational flow = 0;
                for (Site y = 0; y < lat.size(); ++y) flow += delta(x, y) * odo[y];
                REQUIRE(Rational(xi[x] - got.config[x]) == flow);
            }
        }
    }
}

TEST_CASE("abelian property across schedules") {
    const Lattice lat = build_lattice({3, 3});
    Rng rng(17, 2);
    for (int trial = 0; trial < 200; ++trial) {
        const IntConfig xi = random_config(lat, rng, 2 * lat.two_d());
        const auto fast = btw_stabilize(lat, xi);
        for (auto schedule : {reference::Schedule::fifo, reference::Schedule::lifo, reference::Schedule::random}) {
            const auto r = reference::btw_stabilize(lat, xi, schedule, &rng);
            REQUIRE(r.config == fast.config);
            REQUIRE(r.odometer == fast.odometer);
        }
    }
}

TEST_CASE("negative heights are rejected") {
    CHECK_THROWS_AS(btw_stabilize(build_lattice({2}), cfg({-1, 0})), DomainError);
}

TEST_CASE("btw_add examples") {
    const Lattice lat = build_lattice({2});
    CHECK(btw_add(lat, cfg({0, 1}), 0) == cfg({1, 1}));
    CHECK(btw_add(lat, cfg({1, 1}), 0) == cfg({1, 0}));
    CHECK(btw_add(lat, cfg({1, 0}), 0) == cfg({0, 1}));
}

TEST_CASE("brute-force FSC oracle examples") {
    CHECK_FALSE(is_allowed_bruteforce(build_lattice({2}), cfg({0, 0})));
    CHECK(is_allowed_bruteforce(build_lattice({2}), cfg({1, 0})));
    CHECK_FALSE(is_allowed_bruteforce(build_lattice({3}), cfg({0, 1, 0})));
    CHECK_THROWS_AS(is_allowed_bruteforce(build_lattice({5, 5}), zero_config(build_lattice({5, 5}))),
                    CapacityError);
}

TEST_CASE("burning test examples") {
    const Lattice path3 = build_lattice({3});
    std::set<IntConfig> accepted;
    for (std::int64_t a = 0; a < 2; ++a)
        for (std::int64_t b = 0; b < 2; ++b)
            for (std::int64_t c = 0; c < 2; ++c)
                if (is_recurrent_burning(path3, cfg({a, b, c}))) accepted.insert(cfg({a, b, c}));
    CHECK(accepted == std::set<IntConfig>{cfg({1, 1, 1}), cfg({0, 1, 1}), cfg({1, 1, 0}), cfg({1, 0, 1})});

    for (auto dims : {std::vector<std::size_t>{4}, {3, 3}, {2, 2, 2}}) {
        const Lattice lat = build_lattice(dims);
        CHECK(is_recurrent_burning(lat, max_stable(lat)));
    }
    const Lattice single = build_lattice({1});
    CHECK(is_recurrent_burning(single, cfg({0})));
    CHECK(is_recurrent_burning(single, cfg({1})));
}

TEST_CASE("burning agrees with both subset scans") {
    for (auto dims : {std::vector<std::size_t>{1}, {2}, {3}, {4}, {2, 2}, {5}}) {
        const Lattice lat = build_lattice(dims);
        const auto adj = adjacency(lat);
        const std::uint64_t total = stable_config_count(lat);
        for (std::uint64_t code = 0; code < total; ++code) {
            IntConfig xi{std::vector<std::int64_t>(lat.size())};
            std::uint64_t c = code;
            for (Site x = lat.size(); x-- > 0;) {
                xi[x] = static_cast<std::int64_t>(c % lat.two_d());
                c /= lat.two_d();
            }
            const bool burning = is_recurrent_burning(lat, xi);
            REQUIRE(burning == is_allowed_bruteforce(lat, xi));
            REQUIRE(burning == oracle::allowed(adj, xi.heights));
        }
    }
}

TEST_CASE("enumerate_recurrent examples") {
    CHECK(enumerate_recurrent(build_lattice({2})) == std::vector<IntConfig>{cfg({0, 1}), cfg({1, 0}), cfg({1, 1})});
    CHECK(enumerate_recurrent(build_lattice({1})) == std::vector<IntConfig>{cfg({0}), cfg({1})});
    CHECK(enumerate_recurrent(build_lattice({3})).size() == 4);
    CHECK_THROWS_AS(enumerate_recurrent(build_lattice({4, 4})), CapacityError);
}

TEST_CASE("recurrent count equals det of the integer matrix") {
    for (auto dims : {std::vector<std::size_t>{1}, {4}, {7}, {2, 2}, {2, 3}, {3, 3}}) {
        const Lattice lat = build_lattice(dims);
        const auto m = toppling_matrix(lat, TopplingVariant::integer);
        CHECK(Rational(enumerate_recurrent(lat).size()) == oracle::determinant(m.entries, m.n));
    }
}

TEST_CASE("addition orders") {
    CHECK(addition_order(build_lattice({2}), 0) == 3);
    CHECK(addition_order(build_lattice({2}), 1) == 3);
    CHECK(addition_order(build_lattice({1}), 0) == 2);
}

TEST_CASE("addition operators permute the recurrent set") {
    for (auto dims : {std::vector<std::size_t>{4}, {2, 3}, {3, 3}}) {
        const Lattice lat = build_lattice(dims);
        const RecurrentSet set(lat);
        for (Site x = 0; x < lat.size(); ++x) {
            std::vector<bool> hit(set.size(), false);
            for (std::size_t i = 0; i < set.size(); ++i) {
                const std::size_t j = set.add(i, x);
                REQUIRE(set[j] == btw_add(lat, set[i], x));
                REQUIRE_FALSE(hit[j]);
                hit[j] = true;
                REQUIRE(set.inverse_add(j, x) == i);
                // a_x^{n_x} returns to the start
                std::size_t k = i;
                for (std::uint64_t s = 0; s < set.addition_order(x); ++s) k = set.add(k, x);
                REQUIRE(k == i);
            }
        }
    }
}

TEST_CASE("btw_inverse_add") {
    const Lattice path2 = build_lattice({2});
    CHECK(btw_inverse_add(path2, cfg({1, 1}), 0) == cfg({0, 1}));
    CHECK(btw_inverse_add(build_lattice({1}), cfg({0}), 0) == cfg({1}));
    CHECK_THROWS_AS(btw_inverse_add(path2, cfg({0, 0}), 0), DomainError);

    const Lattice lat = build_lattice({2, 3});
    const RecurrentSet set(lat);
    for (const IntConfig& xi : set.configs())
        for (Site x = 0; x < lat.size(); ++x) REQUIRE(btw_add(lat, btw_inverse_add(set, xi, x), x) == xi);
}
