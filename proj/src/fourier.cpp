#include "sandpile/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <vector>
#include <numbers>

#include "sandpile/errors.hpp"
#include "sandpile/rng.hpp"

namespace sandpile {

namespace {

// Samples per RNG stream in the Monte Carlo estimator. Fixed so the estimate
// does not depend on the thread count.
constexpr std::size_t kChunk = 4096;

void validate(const FourierCase& c) {
    if (c.k.empty() || c.k.size() != c.x.size()) throw DomainError("k and x must have the same nonzero length");
    if (c.N < 1) throw DomainError("N must be at least 1");
    if (!(c.period > 0.0)) throw DomainError("period must be positive");
}

}  // namespace

std::complex<double> fourier_character(const std::vector<int>& k, const std::vector<double>& y,
                                       double period) {
    double phase = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) phase += k[j] * (y[j] / period);
    return std::polar(1.0, 2.0 * std::numbers::pi * (phase - std::floor(phase)));
}

std::complex<double> fourier_alpha(const FourierCase& c) {
    validate(c);
    std::complex<double> sum = 0.0;
    for (int kj : c.k) {
        const double turns = kj * (c.a / c.period);
        sum += std::polar(1.0, 2.0 * std::numbers::pi * (turns - std::floor(turns)));
    }
    return sum / static_cast<double>(c.k.size());
}

std::complex<double> fourier_mu_N(const FourierCase& c) {
    const std::complex<double> fx = fourier_character(c.k, c.x, c.period);
    const std::complex<double> alpha = fourier_alpha(c);
    // alpha == 1 (k = 0, or a k_j/period all integers): the geometric sum is N.
    if (std::abs(1.0 - alpha) < 1e-14) return fx;
    const double n = static_cast<double>(c.N);
    return fx * (1.0 - std::pow(alpha, n)) / (n * (1.0 - alpha));
}

MonteCarloEstimate fourier_mu_N_mc(const FourierCase& c, std::size_t samples, std::uint64_t seed,
                                   Execution exec) {
    validate(c);
    if (samples < 2) throw DomainError("Monte Carlo estimate needs at least two samples");
    const std::size_t m = c.k.size();
    const std::size_t chunks = (samples + kChunk - 1) / kChunk;

    // Per-chunk partial sums, combined in chunk order so the result is bitwise
    // independent of scheduling.
    struct Partial {
        double re = 0.0, im = 0.0, re2 = 0.0, im2 = 0.0;
    };
    std::vector<Partial> partial(chunks);
#pragma omp parallel for schedule(static) if (exec == Execution::parallel)
    for (std::int64_t chunk = 0; chunk < static_cast<std::int64_t>(chunks); ++chunk) {
        Rng rng(seed, static_cast<std::uint64_t>(chunk));
        const std::size_t begin = static_cast<std::size_t>(chunk) * kChunk;
        const std::size_t end = std::min(samples, begin + kChunk);
        std::vector<double> y(m);
        Partial& p = partial[static_cast<std::size_t>(chunk)];
        for (std::size_t s = begin; s < end; ++s) {
            y = c.x;
            const std::size_t steps = rng.index(c.N);
            for (std::size_t t = 0; t < steps; ++t) {
                double& coord = y[rng.index(m)];
                coord = std::fmod(coord + c.a, c.period);
            }
            const std::complex<double> f = fourier_character(c.k, y, c.period);
            p.re += f.real();
            p.im += f.imag();
            p.re2 += f.real() * f.real();
            p.im2 += f.imag() * f.imag();
        }
    }
    double sum_re = 0.0, sum_im = 0.0, sum_re2 = 0.0, sum_im2 = 0.0;
    for (const Partial& p : partial) {
        sum_re += p.re;
        sum_im += p.im;
        sum_re2 += p.re2;
        sum_im2 += p.im2;
    }

    const double n = static_cast<double>(samples);
    const double mean_re = sum_re / n;
    const double mean_im = sum_im / n;
    const double var_re = (sum_re2 / n - mean_re * mean_re) * n / (n - 1.0);
    const double var_im = (sum_im2 / n - mean_im * mean_im) * n / (n - 1.0);
    return {{mean_re, mean_im}, std::sqrt(std::max(0.0, var_re + var_im) / n)};
}

}  // namespace sandpile
