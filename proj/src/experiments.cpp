#include "sandpile/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "sandpile/errors.hpp"

namespace sandpile {

namespace {

constexpr std::uint64_t kReferenceStream = std::uint64_t{0x01} << 40;
constexpr std::uint64_t kImageStream = std::uint64_t{0x02} << 40;
constexpr std::uint64_t kChainStream = std::uint64_t{0x03} << 40;
constexpr std::uint64_t kOracleStream = std::uint64_t{0x04} << 40;
constexpr std::uint64_t kOracleNoiseStream = std::uint64_t{0x05} << 40;
constexpr std::uint64_t kCellStream = std::uint64_t{0x06} << 40;

double frac_sum(const CbtwConfig& eta) { return std::accumulate(eta.frac.begin(), eta.frac.end(), 0.0); }

double wrap_phase(double phase) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    phase = std::fmod(phase, two_pi);
    if (phase > std::numbers::pi) phase -= two_pi;
    if (phase <= -std::numbers::pi) phase += two_pi;
    return phase;
}

}  // namespace

ChainState make_chain(const Lattice& lat, CbtwConfig initial, AdditionParams params, Rng rng) {
    params.validate();
    if (!is_stable(lat, initial)) throw DomainError("chains start from a stable configuration");
    ChainState chain{0, std::move(initial), params, std::move(rng), std::vector<double>(lat.size(), 0.0), 0.0};
    chain.initial_frac_sum = frac_sum(chain.config);
    if (params.fixed() && (!chain.config.ledger || chain.config.ledger->amount != params.a))
        enable_fixed_amount(chain.config, params.a);
    if (!params.fixed()) chain.config.ledger.reset();
    return chain;
}

StepRecord chain_step(const Lattice& lat, ChainState& chain) {
    const Site x = chain.rng.index(lat.size());
    const double u = chain.params.fixed() ? chain.params.a : chain.rng.uniform(chain.params.a, chain.params.b);
    cbtw_add_inplace(lat, chain.config, x, u);
    chain.added_mass[x] += u;
    ++chain.t;
    return {x, u};
}

ChainState run_chain(const Lattice& lat, CbtwConfig initial, AdditionParams params,
                     std::uint64_t steps, Rng rng, const TrajectorySink& sink, std::uint64_t thin) {
    ChainState chain = make_chain(lat, std::move(initial), params, std::move(rng));
    if (thin == 0) thin = lat.size();
    if (sink) sink(0, std::nullopt, 0.0, chain.config);
    for (std::uint64_t s = 1; s <= steps; ++s) {
        const StepRecord step = chain_step(lat, chain);
        if (sink && (s % thin == 0 || s == steps)) sink(s, step.site, step.amount, chain.config);
    }
    return chain;
}

double fractional_sum_defect(const Lattice& lat, const ChainState& chain) {
    const double cell = 1.0 / lat.two_d();
    const double expected = std::fmod(chain.initial_frac_sum + static_cast<double>(chain.t) * chain.params.a, cell);
    const double actual = std::fmod(frac_sum(chain.config), cell);
    const double diff = std::abs(actual - expected);
    return std::min(diff, cell - diff);
}

std::complex<double> g_observable(const Lattice& lat, const CbtwConfig& eta) {
    const double turns = static_cast<double>(lat.two_d()) * frac_sum(eta);
    return std::polar(1.0, 2.0 * std::numbers::pi * (turns - std::floor(turns)));
}

std::complex<double> g_observable_from_heights(const Lattice& lat, const CbtwConfig& eta) {
    const std::vector<double> heights = recompose(lat, eta);
    const double total = std::accumulate(heights.begin(), heights.end(), 0.0);
    return std::polar(1.0, 4.0 * lat.dim() * std::numbers::pi * total);
}

double rotation_defect(std::complex<double> g_t, std::complex<double> g_0, int two_d, std::uint64_t t,
                       double a) {
    // 4 d pi t a = 2 pi * (2d t a); reduce the turn count before scaling.
    const double turns = std::fmod(static_cast<double>(two_d) * static_cast<double>(t) * a, 1.0);
    return wrap_phase(std::arg(g_t) - std::arg(g_0) - 2.0 * std::numbers::pi * turns);
}

CellOccupation cell_occupation(const RecurrentSet& set, CbtwConfig initial, double a,
                               std::uint64_t steps, Rng rng) {
    if (steps == 0) throw DomainError("cell occupation needs at least one step");
    const Lattice& lat = set.lattice();
    ChainState chain = make_chain(lat, std::move(initial), AdditionParams{a, a, false}, std::move(rng));
    std::vector<std::uint64_t> visits(set.size(), 0);
    std::uint64_t outside = 0;
    IntConfig quanta;
    for (std::uint64_t t = 0; t < steps; ++t) {
        chain_step(lat, chain);
        quanta.heights = chain.config.quanta;
        if (auto i = set.index_of(quanta))
            ++visits[*i];
        else
            ++outside;
    }
    CellOccupation out;
    out.fractions.reserve(set.size());
    for (std::uint64_t v : visits) out.fractions.push_back(static_cast<double>(v) / static_cast<double>(steps));
    out.outside = static_cast<double>(outside) / static_cast<double>(steps);
    return out;
}

std::vector<double> mu_cell_masses(const RecurrentSet& set, std::size_t samples, std::uint64_t seed,
                                   Execution exec) {
    // One bin per site collapses the fractional part; only the integer part is kept.
    const Histogram hist = mu_histogram(set, Binning{1}, samples, seed, kCellStream, exec);
    std::vector<double> masses(set.size(), 0.0);
    for (const auto& [key, count] : hist.counts()) {
        IntConfig xi{std::vector<std::int64_t>(key.begin(), key.begin() + static_cast<std::ptrdiff_t>(hist.sites()))};
        masses[*set.index_of(xi)] += static_cast<double>(count) / static_cast<double>(hist.total());
    }
    return masses;
}

namespace {

InvarianceReport invariance_impl(const RecurrentSet& set, const Binning& binning, std::size_t samples,
                                 std::uint64_t seed, Execution exec,
                                 const std::function<void(CbtwConfig&, Rng&)>& step) {
    const Lattice& lat = set.lattice();
    const Histogram reference = mu_histogram(set, binning, samples, seed, kReferenceStream, exec);
    const Histogram proto(lat.size(), lat.two_d(), binning);
    auto images = replicate(
        samples, {proto}, seed, kImageStream,
        [&](std::size_t, Rng& rng, std::span<Histogram> h) {
            CbtwConfig eta = sample_mu(set, rng);
            step(eta, rng);
            h[0].add(eta);
        },
        exec);
    return {estimate_tv(reference, images[0]), noise_floor(set, binning, samples, seed, exec)};
}

}  // namespace

InvarianceReport invariance_single(const RecurrentSet& set, Site x, double u, const Binning& binning,
                                   std::size_t samples, std::uint64_t seed, Execution exec) {
    const Lattice& lat = set.lattice();
    if (x >= lat.size()) throw DomainError("site out of range");
    if (!(u >= 0.0 && u < 1.0)) throw DomainError("addition amount must lie in [0, 1)");
    return invariance_impl(set, binning, samples, seed, exec,
                           [&](CbtwConfig& eta, Rng&) { cbtw_add_inplace(lat, eta, x, u); });
}

InvarianceReport invariance_step(const RecurrentSet& set, const AdditionParams& params,
                                 const Binning& binning, std::size_t samples, std::uint64_t seed,
                                 Execution exec) {
    params.validate();
    const Lattice& lat = set.lattice();
    return invariance_impl(set, binning, samples, seed, exec, [&](CbtwConfig& eta, Rng& rng) {
        const Site x = rng.index(lat.size());
        const double u = params.fixed() ? params.a : rng.uniform(params.a, params.b);
        cbtw_add_inplace(lat, eta, x, u);
    });
}

RationalLimitReport rational_limit_test(const RecurrentSet& set, const CbtwConfig& eta, int l,
                                        std::uint64_t t_chain, std::size_t samples,
                                        const Binning& binning, std::uint64_t seed, Execution exec) {
    const Lattice& lat = set.lattice();
    if (l < 1 || l > lat.two_d() - 1) throw DomainError("l must satisfy 1 <= l <= 2d-1");
    if (!is_stable(lat, eta)) throw DomainError("rational limit test starts from a stable configuration");
    const double a = static_cast<double>(l) / lat.two_d();
    const Histogram proto(lat.size(), lat.two_d(), binning);

    std::vector<char> frac_ok(samples, 1);
    std::vector<char> allowed(samples, 1);
    auto chains = replicate(
        samples, {proto}, seed, kChainStream,
        [&](std::size_t i, Rng& rng, std::span<Histogram> h) {
            CbtwConfig start{eta.quanta, eta.frac, std::nullopt};
            ChainState chain = make_chain(lat, std::move(start), AdditionParams{a, a, false}, std::move(rng));
            for (std::uint64_t t = 0; t < t_chain; ++t) chain_step(lat, chain);
            for (Site x = 0; x < lat.size(); ++x)
                if (std::abs(chain.config.frac[x] - eta.frac[x]) > 1e-12) frac_ok[i] = 0;
            allowed[i] = is_allowed_cbtw(lat, chain.config) ? 1 : 0;
            h[0].add(chain.config);
        },
        exec);

    auto oracle_draws = [&](std::uint64_t stream) {
        return replicate(
            samples, {proto}, seed, stream,
            [&](std::size_t, Rng& rng, std::span<Histogram> h) { h[0].add(sample_nu_a_eta(set, eta, a, rng)); },
            exec)[0];
    };
    const Histogram oracle = oracle_draws(kOracleStream);
    const Histogram oracle_again = oracle_draws(kOracleNoiseStream);

    RationalLimitReport report;
    report.tv = estimate_tv(chains[0], oracle);
    report.noise_floor = estimate_tv(oracle, oracle_again);
    for (std::size_t i = 0; i < samples; ++i) {
        report.frac_consistent = report.frac_consistent && frac_ok[i];
        report.all_allowed = report.all_allowed && allowed[i];
    }
    return report;
}

double least_squares_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw DomainError("slope needs at least two points");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxy / sxx;
}

TvDecayReport tv_decay(const RecurrentSet& set, const CbtwConfig& initial, const AdditionParams& params,
                       const std::vector<std::uint64_t>& times, std::size_t replicas,
                       const Binning& binning, std::uint64_t seed, Execution exec) {
    params.validate();
    const Lattice& lat = set.lattice();
    if (times.empty()) throw DomainError("tv_decay needs at least one time");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1]) throw DomainError("times must be strictly increasing");
    if (!is_stable(lat, initial)) throw DomainError("tv_decay starts from a stable configuration");

    const Histogram proto(lat.size(), lat.two_d(), binning);
    const std::vector<Histogram> protos(times.size(), proto);
    auto snapshots = replicate(
        replicas, protos, seed, kChainStream,
        [&](std::size_t, Rng& rng, std::span<Histogram> h) {
            CbtwConfig start{initial.quanta, initial.frac, std::nullopt};
            ChainState chain = make_chain(lat, std::move(start), params, std::move(rng));
            std::size_t next = 0;
            while (next < times.size() && times[next] == 0) h[next++].add(chain.config);
            while (next < times.size()) {
                chain_step(lat, chain);
                while (next < times.size() && chain.t == times[next]) h[next++].add(chain.config);
            }
        },
        exec);

    const Histogram reference = mu_histogram(set, binning, replicas, seed, kReferenceStream, exec);
    TvDecayReport report;
    report.times = times;
    std::vector<double> xs;
    std::vector<double> logs;
    for (std::size_t i = 0; i < times.size(); ++i) {
        report.tv.push_back(estimate_tv(snapshots[i], reference));
        xs.push_back(static_cast<double>(times[i]));
        logs.push_back(std::log(std::max(report.tv.back(), 1e-300)));
    }
    report.noise_floor = noise_floor(set, binning, replicas, seed, exec);
    report.slope = times.size() >= 2 ? least_squares_slope(xs, logs) : 0.0;
    std::size_t cut = 0;
    while (cut < times.size() && report.tv[cut] > 2.0 * report.noise_floor) ++cut;
    cut = std::clamp<std::size_t>(cut + 1, 2, times.size());
    report.decay_slope =
        times.size() >= 2 ? least_squares_slope({xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(cut)},
                                                {logs.begin(), logs.begin() + static_cast<std::ptrdiff_t>(cut)})
                          : 0.0;
    return report;
}

}  // namespace sandpile
