#include "sandpile/measures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sandpile/errors.hpp"

namespace sandpile {

namespace {

constexpr std::uint64_t kNoiseStreamA = std::uint64_t{0xA1} << 40;
constexpr std::uint64_t kNoiseStreamB = std::uint64_t{0xB2} << 40;

}  // namespace

std::uint32_t Binning::bin(double frac, int two_d) const {
    const double scaled = std::floor(frac * two_d * bins_per_site);
    if (scaled <= 0.0) return 0;
    return std::min(static_cast<std::uint32_t>(scaled), bins_per_site - 1);
}

Histogram::Histogram(std::size_t sites, int two_d, Binning binning)
    : sites_(sites), two_d_(two_d), binning_(binning) {
    if (binning_.bins_per_site < 1) throw DomainError("bins per site must be at least 1");
}

Histogram::Key Histogram::key_of(const CbtwConfig& eta) const {
    if (eta.quanta.size() != sites_ || eta.frac.size() != sites_)
        throw DomainError("configuration size does not match histogram");
    Key key;
    key.reserve(2 * sites_);
    for (std::int64_t k : eta.quanta) {
        if (k < 0 || k >= two_d_) throw DomainError("histograms only accept stable configurations");
        key.push_back(k);
    }
    for (double f : eta.frac) key.push_back(binning_.bin(f, two_d_));
    return key;
}

void Histogram::add(const CbtwConfig& eta) {
    ++counts_[key_of(eta)];
    ++total_;
}

void Histogram::merge(const Histogram& other) {
    if (!compatible(other)) throw DomainError("cannot merge histograms with different shapes");
    for (const auto& [key, count] : other.counts_) counts_[key] += count;
    total_ += other.total_;
}

Histogram accumulate(Histogram hist, const CbtwConfig& eta) {
    hist.add(eta);
    return hist;
}

double estimate_tv(const Histogram& h1, const Histogram& h2) {
    if (!h1.compatible(h2)) throw DomainError("TV requires histograms with the same lattice and binning");
    if (h1.total() == 0 || h2.total() == 0) throw DomainError("TV requires non-empty histograms");
    const double n1 = static_cast<double>(h1.total());
    const double n2 = static_cast<double>(h2.total());

    double sum = 0.0;
    auto it1 = h1.counts().begin();
    auto it2 = h2.counts().begin();
    const auto end1 = h1.counts().end();
    const auto end2 = h2.counts().end();
    while (it1 != end1 || it2 != end2) {
        if (it2 == end2 || (it1 != end1 && it1->first < it2->first)) {
            sum += static_cast<double>(it1->second) / n1;
            ++it1;
        } else if (it1 == end1 || it2->first < it1->first) {
            sum += static_cast<double>(it2->second) / n2;
            ++it2;
        } else {
            sum += std::abs(static_cast<double>(it1->second) / n1 - static_cast<double>(it2->second) / n2);
            ++it1;
            ++it2;
        }
    }
    return std::clamp(0.5 * sum, 0.0, 1.0);
}

CbtwConfig sample_mu(const RecurrentSet& set, Rng& rng) {
    const Lattice& lat = set.lattice();
    const double cell = 1.0 / lat.two_d();
    CbtwConfig eta{set[rng.index(set.size())].heights, std::vector<double>(lat.size()), std::nullopt};
    for (double& f : eta.frac) f = rng.uniform(0.0, cell);
    return eta;
}

std::optional<int> cell_multiple(double a, int two_d) {
    const double scaled = a * two_d;
    const double l = std::round(scaled);
    if (std::abs(scaled - l) > 1e-12 || l < 1 || l > two_d - 1) return std::nullopt;
    return static_cast<int>(l);
}

CbtwConfig sample_nu_a_eta(const RecurrentSet& set, const CbtwConfig& eta, double a, Rng& rng) {
    const Lattice& lat = set.lattice();
    const auto l = cell_multiple(a, lat.two_d());
    if (!l) throw DomainError("a must be l/2d for an integer 1 <= l <= 2d-1");
    if (!is_stable(lat, eta)) throw DomainError("sample_nu_a_eta requires a stable configuration");

    // a * xi(x) = l * xi(x) / 2d is a whole number of quanta.
    const IntConfig& xi = set[rng.index(set.size())];
    CbtwConfig out{eta.quanta, eta.frac, std::nullopt};
    for (Site x = 0; x < lat.size(); ++x) out.quanta[x] += *l * xi[x];
    kernel::stabilize(lat, out.quanta, {});
    return out;
}

Histogram mu_histogram(const RecurrentSet& set, const Binning& binning, std::size_t samples,
                       std::uint64_t seed, std::uint64_t stream_base, Execution exec) {
    const Histogram proto(set.lattice().size(), set.lattice().two_d(), binning);
    auto hists = replicate(
        samples, {proto}, seed, stream_base,
        [&set](std::size_t, Rng& rng, std::span<Histogram> h) { h[0].add(sample_mu(set, rng)); }, exec);
    return std::move(hists[0]);
}

double noise_floor(const RecurrentSet& set, const Binning& binning, std::size_t samples,
                   std::uint64_t seed, Execution exec) {
    return estimate_tv(mu_histogram(set, binning, samples, seed, kNoiseStreamA, exec),
                       mu_histogram(set, binning, samples, seed, kNoiseStreamB, exec));
}

void write_histogram_csv(std::ostream& out, const Histogram& hist,
                         const std::vector<std::pair<std::string, std::string>>& metadata) {
    for (const auto& [key, value] : metadata) out << "# " << key << '=' << value << '\n';
    out << "# bins=" << hist.binning().bins_per_site << '\n';
    out << "# total=" << hist.total() << '\n';
    out << "quanta;bins;count\n";
    for (const auto& [key, count] : hist.counts()) {
        for (std::size_t i = 0; i < hist.sites(); ++i) out << (i ? "," : "") << key[i];
        out << ';';
        for (std::size_t i = 0; i < hist.sites(); ++i) out << (i ? "," : "") << key[hist.sites() + i];
        out << ';' << count << '\n';
    }
}

}  // namespace sandpile
