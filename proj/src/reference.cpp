#include "sandpile/reference.hpp"

#include <deque>

#include "sandpile/errors.hpp"

namespace sandpile::reference {

namespace {

// Drives `topple(x)` over unstable sites; `height(x)` reads the current value.
template <class Height, class Topple>
Odometer run_schedule(const Lattice& lat, Schedule schedule, Rng* rng, Height height, Topple topple) {
    if (schedule == Schedule::random && rng == nullptr)
        throw DomainError("random schedule needs an rng");
    const std::int64_t threshold = lat.two_d();
    Odometer odo{std::vector<std::int64_t>(lat.size(), 0)};
    std::deque<Site> pending;
    std::vector<char> listed(lat.size(), 0);
    auto consider = [&](Site y) {
        if (!listed[y] && height(y) >= threshold) {
            listed[y] = 1;
            pending.push_back(y);
        }
    };
    for (Site x = 0; x < lat.size(); ++x) consider(x);

    while (!pending.empty()) {
        Site x;
        if (schedule == Schedule::fifo) {
            x = pending.front();
            pending.pop_front();
        } else if (schedule == Schedule::lifo) {
            x = pending.back();
            pending.pop_back();
        } else {
            const std::size_t i = rng->index(pending.size());
            x = pending[i];
            pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(i));
        }
        listed[x] = 0;
        topple(x);
        ++odo.counts[x];
        consider(x);
        for (Site y : lat.neighbours(x)) consider(y);
    }
    return odo;
}

}  // namespace

Stabilized btw_stabilize(const Lattice& lat, IntConfig xi, Schedule schedule, Rng* rng) {
    Odometer odo = run_schedule(
        lat, schedule, rng, [&](Site y) { return xi[y]; },
        [&](Site x) { xi = sandpile::btw_topple(lat, std::move(xi), x).config; });
    return {std::move(xi), std::move(odo)};
}

CbtwStabilized cbtw_stabilize(const Lattice& lat, CbtwConfig eta, Schedule schedule, Rng* rng) {
    Odometer odo = run_schedule(
        lat, schedule, rng, [&](Site y) { return eta.quanta[y]; },
        [&](Site x) { eta = sandpile::cbtw_topple(lat, std::move(eta), x).config; });
    return {std::move(eta), std::move(odo)};
}

}  // namespace sandpile::reference
