#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

#include "sandpile/cbtw.hpp"
#include "sandpile/rng.hpp"

namespace sandpile {

/// ceil(4 / (b - a)): how often each site must be hit in a successful epoch.
std::uint64_t coupling_block(double a, double b);

/// |Lambda| * ceil(4 / (b - a)).
std::uint64_t coupling_epoch_length(std::size_t sites, double a, double b);

/// [u + shift - a] mod (b - a) + a. Measure preserving on [a, b] for any shift.
double coupled_amount(double u, double shift, double a, double b);

/// Probability of a successful epoch: every site drawn exactly ceil(4/(b-a))
/// times, and every amount inside [(3a+b)/4, (a+3b)/4].
double coupling_success_probability(std::size_t sites, double a, double b);

struct CouplingOptions {
    std::uint64_t max_epochs = 100000;
    /// When false, keep running merged chains after coalescence so that the
    /// per-epoch success frequency can be measured over a fixed number of epochs.
    bool stop_at_coalescence = true;
    /// When set, a coalesced pair is split again by replacing zeta with a fresh
    /// draw, so later success events are checked on distinct chains too.
    std::function<CbtwConfig(Rng&)> renew_partner;
};

struct EpochRecord {
    std::uint64_t epoch;
    bool o_occurred;
    bool coalesced;
};

struct CouplingResult {
    bool coalesced = false;
    /// Epoch index (1-based) of the first coalescence, or epochs run.
    std::uint64_t epochs_used = 0;
    /// Step count at the first coalescence.
    std::uint64_t coupling_time = 0;
    std::uint64_t o_count = 0;
    /// Successful epochs whose chains nevertheless differed at the epoch end.
    std::uint64_t o_violations = 0;
    /// Successful epochs that started from two different configurations.
    std::uint64_t o_checked = 0;
    /// Number of coalescences (more than one only with renew_partner).
    std::uint64_t coalescences = 0;
    std::vector<EpochRecord> log;
    CbtwConfig eta;
    CbtwConfig zeta;
};

/// Epoch-restart coupling of two chains sharing addition sites. Within an
/// epoch the zeta amounts are shifted by the difference frozen at the epoch start.
/// Throws DomainError unless a < b.
CouplingResult run_coupling(const Lattice& lat, CbtwConfig eta0, CbtwConfig zeta0,
                            double a, double b, Rng& rng, const CouplingOptions& options = {});

/// One coupled epoch with explicit sites and eta amounts: zeta receives
/// coupled_amount(u, D(x)) where D is computed from the configurations on entry.
/// Returns true when the epoch is a success event (balanced hits, middle amounts).
bool coupled_epoch(const Lattice& lat, CbtwConfig& eta, CbtwConfig& zeta, double a, double b,
                   std::span<const Site> sites, std::span<const double> amounts);

/// Quanta identical and fractional parts within `tolerance`.
bool configs_match(const CbtwConfig& lhs, const CbtwConfig& rhs, double tolerance = 1e-10);

/// `epoch,O_occurred,coalesced` rows.
void write_coupling_log_csv(std::ostream& out, const std::vector<EpochRecord>& log);

}  // namespace sandpile
