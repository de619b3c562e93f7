#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sandpile/btw.hpp"
#include "sandpile/lattice.hpp"
#include "sandpile/parallel.hpp"

namespace sandpile {

/// Upper bound on (2d)^|Lambda| for exhaustive enumeration of stable configurations.
inline constexpr std::uint64_t kEnumerationCapacity = 1'000'000;

/// Number of stable configurations (2d)^|Lambda|; throws CapacityError above the limit.
std::uint64_t stable_config_count(const Lattice& lat);

/// All recurrent (allowed stable) configurations in lexicographic order.
std::vector<IntConfig> enumerate_recurrent(const Lattice& lat,
                                           Execution exec = Execution::parallel);

/// The enumerated recurrent set with the addition operators a_x tabulated as
/// permutations. Immutable after construction.
class RecurrentSet {
public:
    explicit RecurrentSet(const Lattice& lat, Execution exec = Execution::parallel);

    const Lattice& lattice() const { return lattice_; }
    std::size_t size() const { return configs_.size(); }
    const std::vector<IntConfig>& configs() const { return configs_; }
    const IntConfig& operator[](std::size_t i) const { return configs_[i]; }

    std::optional<std::size_t> index_of(const IntConfig& xi) const;

    /// Index of a_x applied to config i.
    std::size_t add(std::size_t i, Site x) const { return add_[x][i]; }
    /// Index of a_x^{-1} applied to config i.
    std::size_t inverse_add(std::size_t i, Site x) const { return inverse_[x][i]; }

    /// Smallest n >= 1 with a_x^n = id on the whole set.
    std::uint64_t addition_order(Site x) const { return orders_[x]; }

private:
    Lattice lattice_;
    std::vector<IntConfig> configs_;
    std::vector<std::uint64_t> codes_;
    std::vector<std::vector<std::size_t>> add_;
    std::vector<std::vector<std::size_t>> inverse_;
    std::vector<std::uint64_t> orders_;
};

/// n_x for a single site (enumerates R^o).
std::uint64_t addition_order(const Lattice& lat, Site x);

/// The unique recurrent zeta with a_x zeta = xi, computed as a_x^{n_x - 1} xi.
/// Throws DomainError when xi is not recurrent.
IntConfig btw_inverse_add(const Lattice& lat, const IntConfig& xi, Site x);
IntConfig btw_inverse_add(const RecurrentSet& set, const IntConfig& xi, Site x);

}  // namespace sandpile
