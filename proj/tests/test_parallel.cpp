#include <doctest.h>

#include <omp.h>

#include "sandpile/experiments.hpp"
#include "sandpile/fourier.hpp"
#include "sandpile/reference.hpp"

using namespace sandpile;

// ctest runs this binary with several OpenMP threads; every parallel kernel
// must reproduce its serial reference exactly.

TEST_CASE("thread count") { MESSAGE("omp max threads: " << omp_get_max_threads()); }

TEST_CASE("enumeration and addition tables") {
    const Lattice lat = build_lattice({3, 3});
    CHECK(enumerate_recurrent(lat, Execution::serial) == enumerate_recurrent(lat, Execution::parallel));
    const RecurrentSet s(lat, Execution::serial), p(lat, Execution::parallel);
    for (Site x = 0; x < lat.size(); ++x) {
        CHECK(s.addition_order(x) == p.addition_order(x));
        for (std::size_t i = 0; i < s.size(); i += 97) CHECK(s.add(i, x) == p.add(i, x));
    }
}

TEST_CASE("histogram experiments") {
    const Lattice lat = build_lattice({2});
    const RecurrentSet set(lat);
    const Binning b{8};
    CHECK(mu_histogram(set, b, 20000, 3, 0, Execution::serial).counts() ==
          mu_histogram(set, b, 20000, 3, 0, Execution::parallel).counts());
    const auto is = invariance_step(set, {0.2, 0.8, false}, b, 20000, 4, Execution::serial);
    const auto ip = invariance_step(set, {0.2, 0.8, false}, b, 20000, 4, Execution::parallel);
    CHECK(is.tv == ip.tv);
    CHECK(is.noise_floor == ip.noise_floor);
    const CbtwConfig zero = cbtw_from_quanta(zero_config(lat));
    const auto ts = tv_decay(set, zero, {0.2, 0.8, false}, {1, 4, 16}, 5000, b, 5, Execution::serial);
    const auto tp = tv_decay(set, zero, {0.2, 0.8, false}, {1, 4, 16}, 5000, b, 5, Execution::parallel);
    CHECK(ts.tv == tp.tv);
    const auto rs = rational_limit_test(set, zero, 1, 100, 5000, b, 6, Execution::serial);
    const auto rp = rational_limit_test(set, zero, 1, 100, 5000, b, 6, Execution::parallel);
    CHECK(rs.tv == rp.tv);
    CHECK(mu_cell_masses(set, 5000, 7, Execution::serial) == mu_cell_masses(set, 5000, 7, Execution::parallel));
}

TEST_CASE("fourier Monte Carlo") {
    const FourierCase c{0.41421356, {1, -1}, {0.2, 0.3}, 50, 1.0};
    const auto s = fourier_mu_N_mc(c, 30000, 9, Execution::serial);
    const auto p = fourier_mu_N_mc(c, 30000, 9, Execution::parallel);
    CHECK(s.mean == p.mean);
    CHECK(s.std_error == p.std_error);
}

TEST_CASE("batch kernel matches the single-toppling reference") {
    const Lattice lat = build_lattice({4, 4});
    Rng rng(10, 0);
    for (int trial = 0; trial < 100; ++trial) {
        IntConfig xi{std::vector<std::int64_t>(lat.size())};
        for (auto& h : xi.heights) h = static_cast<std::int64_t>(rng.index(20));
        const auto fast = btw_stabilize(lat, xi);
        const auto slow = reference::btw_stabilize(lat, xi, reference::Schedule::fifo);
        REQUIRE(fast.config == slow.config);
        REQUIRE(fast.odometer == slow.odometer);
    }
}
