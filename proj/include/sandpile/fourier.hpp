#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "sandpile/parallel.hpp"

namespace sandpile {

/// Random translation process on the torus [0, period)^m: pick n uniform in
/// {0..N-1}, then n times translate a uniformly chosen coordinate by a.
struct FourierCase {
    double a = 0.0;
    std::vector<int> k;
    std::vector<double> x;
    std::uint64_t N = 1;
    /// 1 for the unit torus, 1/2d for fractional parts of a sandpile.
    double period = 1.0;
};

/// f_k(y) = exp(2 pi i k.y / period).
std::complex<double> fourier_character(const std::vector<int>& k, const std::vector<double>& y,
                                       double period);

/// alpha_k = (1/m) sum_j exp(2 pi i a k_j / period).
std::complex<double> fourier_alpha(const FourierCase& c);

/// Closed form f_k(x) (1/N) (1 - alpha^N) / (1 - alpha); f_k(x) when alpha == 1.
std::complex<double> fourier_mu_N(const FourierCase& c);

struct MonteCarloEstimate {
    std::complex<double> mean;
    /// sqrt((Var Re + Var Im) / samples).
    double std_error = 0.0;
};

MonteCarloEstimate fourier_mu_N_mc(const FourierCase& c, std::size_t samples, std::uint64_t seed,
                                   Execution exec = Execution::parallel);

}  // namespace sandpile
