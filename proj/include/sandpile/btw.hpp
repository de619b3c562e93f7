#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "sandpile/lattice.hpp"

namespace sandpile {

/// Integer (BTW) height configuration, one entry per site in lattice order.
/// Heights are signed only so that flagged illegal topplings in test mode can
/// be represented; every legal operation keeps them non-negative.
struct IntConfig {
    std::vector<std::int64_t> heights;

    std::size_t size() const { return heights.size(); }
    std::int64_t operator[](Site x) const { return heights[x]; }
    std::int64_t& operator[](Site x) { return heights[x]; }

    friend bool operator==(const IntConfig&, const IntConfig&) = default;
    friend auto operator<=>(const IntConfig&, const IntConfig&) = default;
};

/// Legal toppling counts accumulated during one stabilization.
struct Odometer {
    std::vector<std::int64_t> counts;

    friend bool operator==(const Odometer&, const Odometer&) = default;
};

IntConfig zero_config(const Lattice& lat);
/// xi^max: every site at 2d - 1.
IntConfig max_stable(const Lattice& lat);
bool is_stable(const Lattice& lat, const IntConfig& xi);

enum class ToppleMode {
    legal_only,     // throws DomainError when xi(x) < 2d
    allow_illegal,  // oracle/test mode: performs it and reports legal == false
};

struct ToppleResult {
    IntConfig config;
    bool legal;
};

/// One toppling at x: x loses 2d grains, each in-lattice neighbour gains one.
ToppleResult btw_topple(const Lattice& lat, IntConfig xi, Site x,
                        ToppleMode mode = ToppleMode::legal_only);

struct Stabilized {
    IntConfig config;
    Odometer odometer;
};

/// Unique stabilization and its odometer.
Stabilized btw_stabilize(const Lattice& lat, IntConfig xi);

/// S^o(xi + k delta_x).
IntConfig btw_add(const Lattice& lat, IntConfig xi, Site x, std::int64_t k = 1);

/// Subset-scan FSC oracle: true iff no nonempty W has xi(x) < #nbrs of x in W
/// for all x in W. Limited to 24 sites.
bool is_allowed_bruteforce(const Lattice& lat, const IntConfig& xi);
inline constexpr std::size_t kBruteforceMaxSites = 24;

/// Burning test for stable configurations.
bool is_recurrent_burning(const Lattice& lat, const IntConfig& xi);

namespace kernel {

/// FIFO batch-toppling stabilizer, in place. Every site is scanned for
/// instability. Topplings are added into `odometer` when it is non-empty.
/// Returns the total number of topplings.
std::uint64_t stabilize(const Lattice& lat, std::span<std::int64_t> heights,
                        std::span<std::int64_t> odometer);

/// Same, but assumes only `seed` may be unstable (the state right after an addition).
std::uint64_t stabilize_from(const Lattice& lat, std::span<std::int64_t> heights,
                             std::span<std::int64_t> odometer, Site seed);

}  // namespace kernel

}  // namespace sandpile
