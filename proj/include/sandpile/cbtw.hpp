#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sandpile/btw.hpp"
#include "sandpile/lattice.hpp"
#include "sandpile/recurrent.hpp"

namespace sandpile {

/// Bookkeeping for fixed-amount additions: the fractional part at x is always
/// (base_frac(x) + add_counts(x) * amount) mod 1/2d, recomputed from scratch.
struct FixedAmountLedger {
    double amount = 0.0;
    std::vector<double> base_frac;
    std::vector<std::int64_t> add_counts;

    friend bool operator==(const FixedAmountLedger&, const FixedAmountLedger&) = default;
};

/// Continuous height configuration in decomposed form:
/// eta(x) = quanta(x) / 2d + frac(x), with 0 <= frac(x) < 1/2d.
/// Topplings only move quanta; frac changes only through additions.
struct CbtwConfig {
    std::vector<std::int64_t> quanta;
    std::vector<double> frac;
    std::optional<FixedAmountLedger> ledger;

    std::size_t size() const { return quanta.size(); }

    /// Same quanta and bitwise-identical frac. The ledger is not compared.
    bool same_state(const CbtwConfig& other) const {
        return quanta == other.quanta && frac == other.frac;
    }
};

/// Addition amounts uniform on [a, b] with 0 <= a <= b < 1; a == b is the fixed-amount mode.
struct AdditionParams {
    double a = 0.0;
    double b = 0.0;
    /// Modelling label only (e.g. for a = sqrt(2) - 1); doubles are always rational.
    bool irrational = false;

    bool fixed() const { return a == b; }
    void validate() const;
};

/// Fractional values within this distance below 1/2d are snapped to 0 with a carry.
inline constexpr double kSnapEpsilon = 1e-15;

struct QuantaSplit {
    std::int64_t quanta;
    double frac;
};

/// floor(2d * s) and s mod 1/2d, with the snapping policy applied. s >= 0.
QuantaSplit split_height(double s, int two_d);

/// Throws DomainError on negative or non-finite heights.
CbtwConfig decompose(const Lattice& lat, std::span<const double> heights);
std::vector<double> recompose(const Lattice& lat, const CbtwConfig& eta);

CbtwConfig cbtw_from_quanta(const IntConfig& quanta);
IntConfig integer_part(const CbtwConfig& eta);

bool is_stable(const Lattice& lat, const CbtwConfig& eta);

struct CbtwToppleResult {
    CbtwConfig config;
    bool legal;
};

/// T_x: moves 2d quanta out of x and one into each in-lattice neighbour.
CbtwToppleResult cbtw_topple(const Lattice& lat, CbtwConfig eta, Site x,
                             ToppleMode mode = ToppleMode::legal_only);

struct CbtwStabilized {
    CbtwConfig config;
    Odometer odometer;
};

CbtwStabilized cbtw_stabilize(const Lattice& lat, CbtwConfig eta);

/// Starts fixed-amount bookkeeping: current frac becomes the base, counts reset.
void enable_fixed_amount(CbtwConfig& eta, double amount);

/// A_x^u in place. With a ledger present, u must equal the ledger amount.
void cbtw_add_inplace(const Lattice& lat, CbtwConfig& eta, Site x, double u);

/// A_x^u eta = S(eta + u delta_x).
CbtwConfig cbtw_add(const Lattice& lat, CbtwConfig eta, Site x, double u);

/// The unique allowed eta with A_x^u eta = zeta. The result carries no ledger.
CbtwConfig cbtw_inverse_add(const RecurrentSet& set, const CbtwConfig& zeta, Site x, double u);

/// Allowed iff the integer part passes the burning test. Requires a stable configuration.
bool is_allowed_cbtw(const Lattice& lat, const CbtwConfig& eta);

}  // namespace sandpile
