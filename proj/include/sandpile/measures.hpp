#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <omp.h>

#include "sandpile/cbtw.hpp"
#include "sandpile/parallel.hpp"
#include "sandpile/recurrent.hpp"
#include "sandpile/rng.hpp"

namespace sandpile {

/// Splits each site's fractional cell [0, 1/2d) into B equal bins.
struct Binning {
    std::uint32_t bins_per_site = 8;

    std::uint32_t bin(double frac, int two_d) const;
    friend bool operator==(const Binning&, const Binning&) = default;
};

/// Empirical distribution over (integer part, per-site fractional bin).
/// Keys are the quanta followed by the bin indices.
class Histogram {
public:
    using Key = std::vector<std::int64_t>;

    Histogram(std::size_t sites, int two_d, Binning binning);

    std::size_t sites() const { return sites_; }
    int two_d() const { return two_d_; }
    const Binning& binning() const { return binning_; }
    std::uint64_t total() const { return total_; }
    const std::map<Key, std::uint64_t>& counts() const { return counts_; }

    Key key_of(const CbtwConfig& eta) const;

    /// Throws DomainError for unstable or mis-sized configurations.
    void add(const CbtwConfig& eta);
    /// Associative and commutative. Throws DomainError on shape mismatch.
    void merge(const Histogram& other);
    /// Empty histogram of the same shape.
    Histogram empty_like() const { return Histogram(sites_, two_d_, binning_); }

    bool compatible(const Histogram& other) const {
        return sites_ == other.sites_ && two_d_ == other.two_d_ && binning_ == other.binning_;
    }

private:
    std::size_t sites_;
    int two_d_;
    Binning binning_;
    std::uint64_t total_ = 0;
    std::map<Key, std::uint64_t> counts_;
};

Histogram accumulate(Histogram hist, const CbtwConfig& eta);

/// Half the L1 distance between the empirical laws. Throws DomainError on mismatch.
double estimate_tv(const Histogram& h1, const Histogram& h2);

/// mu: integer part uniform over the recurrent set, fractional parts i.i.d. uniform on [0, 1/2d).
CbtwConfig sample_mu(const RecurrentSet& set, Rng& rng);

/// l when a == l/2d for an integer 1 <= l <= 2d-1 (within 1e-12), otherwise nullopt.
std::optional<int> cell_multiple(double a, int two_d);

/// S(eta + a xi) with xi uniform on the recurrent set; a must be l/2d, 1 <= l <= 2d-1.
CbtwConfig sample_nu_a_eta(const RecurrentSet& set, const CbtwConfig& eta, double a, Rng& rng);

/// Runs `body(i, rng, hists)` for replicas i = 0..n-1, each with its own
/// Rng(seed, stream_base + i), accumulating into copies of `prototypes`.
/// The parallel path merges per-thread histograms; both paths give identical counts.
template <class Body>
std::vector<Histogram> replicate(std::size_t replicas, const std::vector<Histogram>& prototypes,
                                 std::uint64_t seed, std::uint64_t stream_base, Body&& body,
                                 Execution exec = Execution::parallel) {
    std::vector<Histogram> result;
    for (const Histogram& p : prototypes) result.push_back(p.empty_like());

    if (exec == Execution::serial) {
        for (std::size_t i = 0; i < replicas; ++i) {
            Rng rng(seed, stream_base + i);
            body(i, rng, std::span<Histogram>(result));
        }
        return result;
    }

    std::vector<std::vector<Histogram>> partial;
#pragma omp parallel
    {
#pragma omp single
        partial.resize(static_cast<std::size_t>(omp_get_num_threads()), result);
        std::vector<Histogram>& mine = partial[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(replicas); ++i) {
            Rng rng(seed, stream_base + static_cast<std::uint64_t>(i));
            body(static_cast<std::size_t>(i), rng, std::span<Histogram>(mine));
        }
    }
    for (const auto& part : partial)
        for (std::size_t h = 0; h < result.size(); ++h) result[h].merge(part[h]);
    return result;
}

/// Histogram of n draws from mu.
Histogram mu_histogram(const RecurrentSet& set, const Binning& binning, std::size_t samples,
                       std::uint64_t seed, std::uint64_t stream_base,
                       Execution exec = Execution::parallel);

/// Monte Carlo noise floor: TV between two independent n-sample mu histograms.
double noise_floor(const RecurrentSet& set, const Binning& binning, std::size_t samples,
                   std::uint64_t seed, Execution exec = Execution::parallel);

/// Metadata header lines ("# key=value"), then one row per key: `quanta...;bins...;count`.
void write_histogram_csv(std::ostream& out, const Histogram& hist,
                         const std::vector<std::pair<std::string, std::string>>& metadata);

}  // namespace sandpile
