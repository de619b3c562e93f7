#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sandpile/cbtw.hpp"
#include "sandpile/errors.hpp"
#include "sandpile/measures.hpp"
#include "sandpile/parallel.hpp"
#include "sandpile/recurrent.hpp"
#include "sandpile/rng.hpp"

namespace sandpile {

/// One CBTW chain eta_t = A_{X_t}^{U_t} eta_{t-1}.
struct ChainState {
    std::uint64_t t = 0;
    CbtwConfig config;
    AdditionParams params;
    Rng rng;
    /// Total mass added per site so far.
    std::vector<double> added_mass;
    /// Sum of the initial fractional parts, for the fixed-amount conservation check.
    double initial_frac_sum = 0.0;
};

/// Validates params and that `initial` is stable; in fixed mode enables the ledger.
ChainState make_chain(const Lattice& lat, CbtwConfig initial, AdditionParams params, Rng rng);

struct StepRecord {
    Site site;
    double amount;
};

/// X uniform on the lattice, U uniform on [a, b] (exactly a in fixed mode).
StepRecord chain_step(const Lattice& lat, ChainState& chain);

/// Called with t = 0 (no site) for the initial state, then after every
/// `thin`-th step and after the last step.
using TrajectorySink =
    std::function<void(std::uint64_t t, std::optional<Site> site, double amount, const CbtwConfig&)>;

/// thin == 0 selects the default of recording every |Lambda|-th step.
ChainState run_chain(const Lattice& lat, CbtwConfig initial, AdditionParams params,
                     std::uint64_t steps, Rng rng, const TrajectorySink& sink = {},
                     std::uint64_t thin = 0);

/// Circular distance between sum_x frac_t(x) mod 1/2d and
/// (sum_x frac_0(x) + t a) mod 1/2d. Only meaningful in fixed mode.
double fractional_sum_defect(const Lattice& lat, const ChainState& chain);

/// g(eta) = exp(4 d pi i sum_x eta(x)), evaluated from the fractional parts
/// only; the quanta contribute exp(2 pi i * integer) = 1.
std::complex<double> g_observable(const Lattice& lat, const CbtwConfig& eta);
/// Same quantity evaluated from the recomposed real heights.
std::complex<double> g_observable_from_heights(const Lattice& lat, const CbtwConfig& eta);

/// Wrapped difference arg g_t - arg g_0 - 4 d pi t a, in (-pi, pi].
double rotation_defect(std::complex<double> g_t, std::complex<double> g_0, int two_d,
                       std::uint64_t t, double a);

/// (1/T) sum_{t=1..T} observable(eta_t) along a fixed-amount chain.
template <class Observable>
auto ergodic_average(const Lattice& lat, CbtwConfig initial, double a, std::uint64_t steps,
                     Observable&& observable, Rng rng) {
    if (steps == 0) throw DomainError("ergodic average needs at least one step");
    ChainState chain = make_chain(lat, std::move(initial), AdditionParams{a, a, false}, std::move(rng));
    using Value = decltype(observable(chain.config));
    Value sum{};
    for (std::uint64_t t = 0; t < steps; ++t) {
        chain_step(lat, chain);
        sum += observable(chain.config);
    }
    return sum / static_cast<double>(steps);
}

struct CellOccupation {
    /// Time fraction spent in each cell C(xi), indexed like the recurrent set.
    std::vector<double> fractions;
    /// Time fraction with a non-recurrent integer part.
    double outside = 0.0;
};

CellOccupation cell_occupation(const RecurrentSet& set, CbtwConfig initial, double a,
                               std::uint64_t steps, Rng rng);

/// mu(C(xi)) estimated from n draws of sample_mu.
std::vector<double> mu_cell_masses(const RecurrentSet& set, std::size_t samples, std::uint64_t seed,
                                   Execution exec = Execution::parallel);

struct InvarianceReport {
    double tv = 0.0;
    double noise_floor = 0.0;
};

/// TV between mu samples and A_x^u images of fresh mu samples.
InvarianceReport invariance_single(const RecurrentSet& set, Site x, double u, const Binning& binning,
                                   std::size_t samples, std::uint64_t seed,
                                   Execution exec = Execution::parallel);

/// TV between mu samples and one random chain step applied to fresh mu samples.
InvarianceReport invariance_step(const RecurrentSet& set, const AdditionParams& params,
                                 const Binning& binning, std::size_t samples, std::uint64_t seed,
                                 Execution exec = Execution::parallel);

struct RationalLimitReport {
    double tv = 0.0;
    double noise_floor = 0.0;
    /// Every final fractional part equals the initial one (a is a multiple of 1/2d).
    bool frac_consistent = true;
    bool all_allowed = true;
};

/// n independent fixed-amount chains with a = l/2d run for t_chain steps from
/// eta, compared against n draws of sample_nu_a_eta.
RationalLimitReport rational_limit_test(const RecurrentSet& set, const CbtwConfig& eta, int l,
                                        std::uint64_t t_chain, std::size_t samples,
                                        const Binning& binning, std::uint64_t seed,
                                        Execution exec = Execution::parallel);

struct TvDecayReport {
    std::vector<std::uint64_t> times;
    std::vector<double> tv;
    double noise_floor = 0.0;
    /// Least-squares slope of log TV against t, over all times.
    double slope = 0.0;
    /// Same fit restricted to the times up to and including the first one where
    /// TV <= 2 * noise_floor (the plateau after that is pure sampling noise).
    double decay_slope = 0.0;
};

/// TV(nu_t, mu) at each requested time (ascending) from `replicas` chains started at `initial`.
TvDecayReport tv_decay(const RecurrentSet& set, const CbtwConfig& initial,
                       const AdditionParams& params, const std::vector<std::uint64_t>& times,
                       std::size_t replicas, const Binning& binning, std::uint64_t seed,
                       Execution exec = Execution::parallel);

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace sandpile
