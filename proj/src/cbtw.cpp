#include "sandpile/cbtw.hpp"

#include <cmath>
#include <string>

#include "sandpile/errors.hpp"

namespace sandpile {

namespace {

void check_size(const Lattice& lat, const CbtwConfig& eta) {
    if (eta.quanta.size() != lat.size() || eta.frac.size() != lat.size())
        throw DomainError("configuration size does not match lattice size " +
                          std::to_string(lat.size()));
}

void check_site(const Lattice& lat, Site x) {
    if (x >= lat.size()) throw DomainError("site " + std::to_string(x) + " out of range");
}

void check_amount(double u) {
    if (!(u >= 0.0 && u < 1.0)) throw DomainError("addition amount must lie in [0, 1)");
}

}  // namespace

void AdditionParams::validate() const {
    if (!(a >= 0.0 && a <= b && b < 1.0))
        throw DomainError("addition interval must satisfy 0 <= a <= b < 1");
}

QuantaSplit split_height(double s, int two_d) {
    const double cell = 1.0 / two_d;
    double q = std::floor(s * two_d);
    double r = s - q / two_d;
    if (r < 0.0) {
        q -= 1.0;
        r = s - q / two_d;
    }
    if (r >= cell - kSnapEpsilon) {
        q += 1.0;
        r = 0.0;
    }
    if (r < 0.0) r = 0.0;
    return {static_cast<std::int64_t>(q), r};
}

CbtwConfig decompose(const Lattice& lat, std::span<const double> heights) {
    if (heights.size() != lat.size()) throw DomainError("height vector size does not match lattice");
    CbtwConfig eta;
    eta.quanta.reserve(heights.size());
    eta.frac.reserve(heights.size());
    for (double h : heights) {
        if (!std::isfinite(h) || h < 0.0) throw DomainError("heights must be finite and non-negative");
        const QuantaSplit s = split_height(h, lat.two_d());
        eta.quanta.push_back(s.quanta);
        eta.frac.push_back(s.frac);
    }
    return eta;
}

std::vector<double> recompose(const Lattice& lat, const CbtwConfig& eta) {
    check_size(lat, eta);
    std::vector<double> out(lat.size());
    for (Site x = 0; x < lat.size(); ++x)
        out[x] = static_cast<double>(eta.quanta[x]) / lat.two_d() + eta.frac[x];
    return out;
}

CbtwConfig cbtw_from_quanta(const IntConfig& quanta) {
    return CbtwConfig{quanta.heights, std::vector<double>(quanta.size(), 0.0), std::nullopt};
}

IntConfig integer_part(const CbtwConfig& eta) { return IntConfig{eta.quanta}; }

bool is_stable(const Lattice& lat, const CbtwConfig& eta) {
    check_size(lat, eta);
    for (std::int64_t k : eta.quanta)
        if (k < 0 || k >= lat.two_d()) return false;
    return true;
}

CbtwToppleResult cbtw_topple(const Lattice& lat, CbtwConfig eta, Site x, ToppleMode mode) {
    check_size(lat, eta);
    check_site(lat, x);
    const bool legal = eta.quanta[x] >= lat.two_d();
    if (!legal && mode == ToppleMode::legal_only)
        throw DomainError("illegal toppling at site " + std::to_string(x));
    eta.quanta[x] -= lat.two_d();
    for (Site y : lat.neighbours(x)) eta.quanta[y] += 1;
    return {std::move(eta), legal};
}

CbtwStabilized cbtw_stabilize(const Lattice& lat, CbtwConfig eta) {
    check_size(lat, eta);
    for (std::int64_t k : eta.quanta)
        if (k < 0) throw DomainError("negative height");
    Odometer odo{std::vector<std::int64_t>(lat.size(), 0)};
    kernel::stabilize(lat, eta.quanta, odo.counts);
    return {std::move(eta), std::move(odo)};
}

void enable_fixed_amount(CbtwConfig& eta, double amount) {
    check_amount(amount);
    eta.ledger = FixedAmountLedger{amount, eta.frac, std::vector<std::int64_t>(eta.size(), 0)};
}

void cbtw_add_inplace(const Lattice& lat, CbtwConfig& eta, Site x, double u) {
    check_site(lat, x);
    check_amount(u);
    const int two_d = lat.two_d();

    if (eta.ledger) {
        FixedAmountLedger& book = *eta.ledger;
        if (u != book.amount) throw DomainError("fixed-amount configuration received a different amount");
        const std::int64_t c = book.add_counts[x];
        const QuantaSplit before =
            split_height(book.base_frac[x] + static_cast<double>(c) * book.amount, two_d);
        const QuantaSplit after =
            split_height(book.base_frac[x] + static_cast<double>(c + 1) * book.amount, two_d);
        book.add_counts[x] = c + 1;
        eta.quanta[x] += after.quanta - before.quanta;
        eta.frac[x] = after.frac;
    } else {
        const QuantaSplit s = split_height(eta.frac[x] + u, two_d);
        eta.quanta[x] += s.quanta;
        eta.frac[x] = s.frac;
    }
    kernel::stabilize_from(lat, eta.quanta, {}, x);
}

CbtwConfig cbtw_add(const Lattice& lat, CbtwConfig eta, Site x, double u) {
    check_size(lat, eta);
    check_site(lat, x);
    if (is_stable(lat, eta)) {
        cbtw_add_inplace(lat, eta, x, u);
        return eta;
    }
    // Unstable input: stabilize first. By abelianness this equals S(eta + u delta_x).
    CbtwConfig stable = cbtw_stabilize(lat, std::move(eta)).config;
    cbtw_add_inplace(lat, stable, x, u);
    return stable;
}

CbtwConfig cbtw_inverse_add(const RecurrentSet& set, const CbtwConfig& zeta, Site x, double u) {
    const Lattice& lat = set.lattice();
    check_size(lat, zeta);
    check_site(lat, x);
    check_amount(u);
    if (!is_stable(lat, zeta)) throw DomainError("inverse addition requires a stable configuration");
    const auto index = set.index_of(integer_part(zeta));
    if (!index) throw DomainError("inverse addition requires an allowed configuration");

    const int two_d = lat.two_d();
    const QuantaSplit shift = split_height(u, two_d);
    CbtwConfig eta{zeta.quanta, zeta.frac, std::nullopt};

    std::int64_t steps = shift.quanta;
    if (zeta.frac[x] >= shift.frac) {
        eta.frac[x] = zeta.frac[x] - shift.frac;
    } else {
        eta.frac[x] = zeta.frac[x] - shift.frac + 1.0 / two_d;
        if (eta.frac[x] >= 1.0 / two_d - kSnapEpsilon)
            eta.frac[x] = 0.0;
        else
            ++steps;
    }

    std::size_t i = *index;
    for (std::int64_t s = 0; s < steps; ++s) i = set.inverse_add(i, x);
    eta.quanta = set[i].heights;
    return eta;
}

bool is_allowed_cbtw(const Lattice& lat, const CbtwConfig& eta) {
    if (!is_stable(lat, eta)) throw DomainError("allowed test requires a stable configuration");
    return is_recurrent_burning(lat, integer_part(eta));
}

}  // namespace sandpile
