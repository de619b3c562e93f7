#include "sandpile/coupling.hpp"

#include <algorithm>
#include <cmath>

#include "sandpile/errors.hpp"

namespace sandpile {

namespace {

void check_interval(double a, double b) {
    if (!(a < b)) throw DomainError("coupling requires a < b");
    AdditionParams{a, b, false}.validate();
}

}  // namespace

std::uint64_t coupling_block(double a, double b) {
    check_interval(a, b);
    return static_cast<std::uint64_t>(std::ceil(4.0 / (b - a)));
}

std::uint64_t coupling_epoch_length(std::size_t sites, double a, double b) {
    return static_cast<std::uint64_t>(sites) * coupling_block(a, b);
}

double coupled_amount(double u, double shift, double a, double b) {
    const double width = b - a;
    double r = std::fmod(u + shift - a, width);
    if (r < 0.0) r += width;
    if (r >= width) r = 0.0;
    return r + a;
}

double coupling_success_probability(std::size_t sites, double a, double b) {
    const double m = static_cast<double>(coupling_block(a, b));
    const double n = static_cast<double>(sites);
    const double len = n * m;
    // Multinomial(len; m, ..., m) / n^len, times 1/2^len for the middle-half amounts.
    const double log_p = std::lgamma(len + 1.0) - n * std::lgamma(m + 1.0) - len * std::log(n) -
                         len * std::log(2.0);
    return std::exp(log_p);
}

bool configs_match(const CbtwConfig& lhs, const CbtwConfig& rhs, double tolerance) {
    if (lhs.quanta != rhs.quanta || lhs.frac.size() != rhs.frac.size()) return false;
    for (std::size_t i = 0; i < lhs.frac.size(); ++i)
        if (std::abs(lhs.frac[i] - rhs.frac[i]) > tolerance) return false;
    return true;
}

namespace {

struct EpochShape {
    std::uint64_t block;
    double lo;
    double hi;
};

EpochShape epoch_shape(double a, double b) {
    return {coupling_block(a, b), (3.0 * a + b) / 4.0, (a + 3.0 * b) / 4.0};
}

void frozen_shift(const Lattice& lat, const CbtwConfig& eta, const CbtwConfig& zeta, std::uint64_t block,
                  std::vector<double>& shift) {
    const double inv_2d = 1.0 / lat.two_d();
    shift.resize(lat.size());
    for (Site x = 0; x < lat.size(); ++x) {
        const double diff =
            static_cast<double>(eta.quanta[x] - zeta.quanta[x]) * inv_2d + (eta.frac[x] - zeta.frac[x]);
        shift[x] = diff / static_cast<double>(block);
    }
}

bool success_event(const std::vector<std::uint64_t>& hits, std::uint64_t block, bool middle) {
    return middle && std::all_of(hits.begin(), hits.end(), [&](std::uint64_t h) { return h == block; });
}

}  // namespace

bool coupled_epoch(const Lattice& lat, CbtwConfig& eta, CbtwConfig& zeta, double a, double b,
                   std::span<const Site> sites, std::span<const double> amounts) {
    const EpochShape shape = epoch_shape(a, b);
    if (sites.size() != amounts.size()) throw DomainError("sites and amounts differ in length");
    std::vector<double> shift;
    frozen_shift(lat, eta, zeta, shape.block, shift);
    std::vector<std::uint64_t> hits(lat.size(), 0);
    bool middle = sites.size() == lat.size() * shape.block;
    for (std::size_t s = 0; s < sites.size(); ++s) {
        const Site x = sites[s];
        const double u = amounts[s];
        ++hits.at(x);
        middle = middle && u >= shape.lo && u <= shape.hi;
        cbtw_add_inplace(lat, eta, x, u);
        cbtw_add_inplace(lat, zeta, x, coupled_amount(u, shift[x], a, b));
    }
    return success_event(hits, shape.block, middle);
}

CouplingResult run_coupling(const Lattice& lat, CbtwConfig eta0, CbtwConfig zeta0, double a, double b,
                            Rng& rng, const CouplingOptions& options) {
    check_interval(a, b);
    if (!is_stable(lat, eta0) || !is_stable(lat, zeta0))
        throw DomainError("coupling starts from stable configurations");

    const std::size_t n = lat.size();
    const EpochShape shape = epoch_shape(a, b);
    const std::uint64_t length = n * shape.block;

    CouplingResult result;
    result.eta = std::move(eta0);
    result.zeta = std::move(zeta0);
    result.eta.ledger.reset();
    result.zeta.ledger.reset();
    CbtwConfig& eta = result.eta;
    CbtwConfig& zeta = result.zeta;

    bool merged = false;
    std::vector<double> shift(n);
    std::vector<std::uint64_t> hits(n);
    std::uint64_t epoch = 0;
    for (epoch = 1; epoch <= options.max_epochs; ++epoch) {
        const bool distinct = !merged;
        // D frozen at the epoch start.
        frozen_shift(lat, eta, zeta, shape.block, shift);
        std::fill(hits.begin(), hits.end(), 0);
        bool middle = true;

        for (std::uint64_t s = 0; s < length; ++s) {
            const Site x = rng.index(n);
            const double u = rng.uniform(a, b);
            ++hits[x];
            middle = middle && u >= shape.lo && u <= shape.hi;
            cbtw_add_inplace(lat, eta, x, u);
            if (!merged) cbtw_add_inplace(lat, zeta, x, coupled_amount(u, shift[x], a, b));
        }

        const bool o_occurred = success_event(hits, shape.block, middle);
        const bool equal = merged || configs_match(eta, zeta);
        if (o_occurred) {
            ++result.o_count;
            if (distinct) ++result.o_checked;
            if (!equal) ++result.o_violations;
        }
        result.log.push_back({epoch, o_occurred, equal});

        if (equal && distinct) {
            ++result.coalescences;
            if (!result.coalesced) {
                result.coalesced = true;
                result.epochs_used = epoch;
                result.coupling_time = epoch * length;
            }
            merged = true;
            if (options.stop_at_coalescence) break;
        }
        if (merged && options.renew_partner) {
            zeta = options.renew_partner(rng);
            zeta.ledger.reset();
            merged = false;
        }
    }
    if (!result.coalesced) result.epochs_used = std::min(epoch, options.max_epochs);
    if (merged) zeta = eta;
    return result;
}

void write_coupling_log_csv(std::ostream& out, const std::vector<EpochRecord>& log) {
    out << "epoch,O_occurred,coalesced\n";
    for (const EpochRecord& r : log)
        out << r.epoch << ',' << (r.o_occurred ? 1 : 0) << ',' << (r.coalesced ? 1 : 0) << '\n';
}

}  // namespace sandpile
