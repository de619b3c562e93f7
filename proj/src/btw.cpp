#include "sandpile/btw.hpp"

#include <bit>
#include <string>

#include "sandpile/errors.hpp"

namespace sandpile {

namespace {

void check_size(const Lattice& lat, const IntConfig& xi) {
    if (xi.size() != lat.size())
        throw DomainError("configuration has " + std::to_string(xi.size()) + " sites, lattice has " +
                          std::to_string(lat.size()));
}

// Ring buffer of pending sites plus an "enqueued" flag per site. Each site is
// queued at most once at a time, so capacity |Lambda| suffices.
struct Workspace {
    std::vector<Site> ring;
    std::vector<char> queued;

    void reset(std::size_t n) {
        if (ring.size() != n) {
            ring.assign(n, 0);
            queued.assign(n, 0);
        }
    }
};

Workspace& workspace(std::size_t n) {
    thread_local Workspace ws;
    ws.reset(n);
    return ws;
}

std::uint64_t drain(const Lattice& lat, std::span<std::int64_t> h, std::span<std::int64_t> odo,
                    Workspace& ws, std::size_t head, std::size_t count) {
    const std::int64_t threshold = lat.two_d();
    const std::size_t n = lat.size();
    std::uint64_t total = 0;
    while (count > 0) {
        const Site x = ws.ring[head];
        head = head + 1 == n ? 0 : head + 1;
        --count;
        ws.queued[x] = 0;

        if (h[x] < threshold) continue;
        const std::int64_t k = h[x] < 2 * threshold ? 1 : h[x] / threshold;
        h[x] -= k * threshold;
        if (!odo.empty()) odo[x] += k;
        total += static_cast<std::uint64_t>(k);
        for (Site y : lat.neighbours(x)) {
            h[y] += k;
            if (h[y] >= threshold && !ws.queued[y]) {
                ws.queued[y] = 1;
                std::size_t tail = head + count;
                if (tail >= n) tail -= n;
                ws.ring[tail] = y;
                ++count;
            }
        }
    }
    return total;
}

}  // namespace

namespace kernel {

std::uint64_t stabilize(const Lattice& lat, std::span<std::int64_t> heights,
                        std::span<std::int64_t> odometer) {
    Workspace& ws = workspace(lat.size());
    std::size_t count = 0;
    for (Site x = 0; x < lat.size(); ++x) {
        if (heights[x] >= lat.two_d()) {
            ws.queued[x] = 1;
            ws.ring[count++] = x;
        }
    }
    return drain(lat, heights, odometer, ws, 0, count);
}

std::uint64_t stabilize_from(const Lattice& lat, std::span<std::int64_t> heights,
                             std::span<std::int64_t> odometer, Site seed) {
    if (heights[seed] < lat.two_d()) return 0;
    Workspace& ws = workspace(lat.size());
    ws.queued[seed] = 1;
    ws.ring[0] = seed;
    return drain(lat, heights, odometer, ws, 0, 1);
}

}  // namespace kernel

IntConfig zero_config(const Lattice& lat) { return IntConfig{std::vector<std::int64_t>(lat.size(), 0)}; }

IntConfig max_stable(const Lattice& lat) {
    return IntConfig{std::vector<std::int64_t>(lat.size(), lat.two_d() - 1)};
}

bool is_stable(const Lattice& lat, const IntConfig& xi) {
    check_size(lat, xi);
    for (std::int64_t h : xi.heights)
        if (h < 0 || h >= lat.two_d()) return false;
    return true;
}

ToppleResult btw_topple(const Lattice& lat, IntConfig xi, Site x, ToppleMode mode) {
    check_size(lat, xi);
    if (x >= lat.size()) throw DomainError("site out of range");
    const bool legal = xi[x] >= lat.two_d();
    if (!legal && mode == ToppleMode::legal_only)
        throw DomainError("illegal toppling at site " + std::to_string(x));
    xi[x] -= lat.two_d();
    for (Site y : lat.neighbours(x)) xi[y] += 1;
    return {std::move(xi), legal};
}

Stabilized btw_stabilize(const Lattice& lat, IntConfig xi) {
    check_size(lat, xi);
    for (std::int64_t h : xi.heights)
        if (h < 0) throw DomainError("negative height");
    Odometer odo{std::vector<std::int64_t>(lat.size(), 0)};
    kernel::stabilize(lat, xi.heights, odo.counts);
    return {std::move(xi), std::move(odo)};
}

IntConfig btw_add(const Lattice& lat, IntConfig xi, Site x, std::int64_t k) {
    check_size(lat, xi);
    if (x >= lat.size()) throw DomainError("site out of range");
    if (k < 0) throw DomainError("addition count must be non-negative");
    xi[x] += k;
    kernel::stabilize(lat, xi.heights, {});
    return xi;
}

bool is_allowed_bruteforce(const Lattice& lat, const IntConfig& xi) {
    check_size(lat, xi);
    const std::size_t n = lat.size();
    if (n > kBruteforceMaxSites)
        throw CapacityError("subset-scan oracle supports at most 24 sites, got " + std::to_string(n));

    std::vector<std::uint32_t> nbr_mask(n, 0);
    for (Site x = 0; x < n; ++x)
        for (Site y : lat.neighbours(x)) nbr_mask[x] |= std::uint32_t{1} << y;

    const std::uint32_t full = n == 32 ? ~0u : (std::uint32_t{1} << n) - 1;
    for (std::uint32_t w = 1; w <= full && w != 0; ++w) {
        bool forbidden = true;
        for (std::uint32_t rest = w; rest != 0 && forbidden; rest &= rest - 1) {
            const Site x = static_cast<Site>(std::countr_zero(rest));
            forbidden = xi[x] < std::popcount(nbr_mask[x] & w);
        }
        if (forbidden) return false;
    }
    return true;
}

bool is_recurrent_burning(const Lattice& lat, const IntConfig& xi) {
    check_size(lat, xi);
    const std::size_t n = lat.size();
    std::vector<std::int64_t> remaining(n);
    for (Site x = 0; x < n; ++x) remaining[x] = static_cast<std::int64_t>(lat.degree(x));
    std::vector<char> burnt(n, 0);
    std::vector<Site> round;
    std::size_t burnt_count = 0;

    for (;;) {
        round.clear();
        for (Site x = 0; x < n; ++x)
            if (!burnt[x] && xi[x] >= remaining[x]) round.push_back(x);
        if (round.empty()) break;
        for (Site x : round) burnt[x] = 1;
        for (Site x : round)
            for (Site y : lat.neighbours(x)) --remaining[y];
        burnt_count += round.size();
    }
    return burnt_count == n;
}

}  // namespace sandpile
