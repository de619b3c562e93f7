#include "sandpile/lattice.hpp"

#include <map>
#include <numeric>
#include <string>

#include "sandpile/errors.hpp"

namespace sandpile {

Lattice::Lattice(int dim, std::vector<Point> sites) : dim_(dim), sites_(std::move(sites)) {
    if (dim_ < 1) throw GeometryError("lattice dimension must be positive");
    if (sites_.empty()) throw GeometryError("lattice must contain at least one site");

    std::map<Point, Site> index;
    for (Site x = 0; x < sites_.size(); ++x) {
        if (sites_[x].size() != static_cast<std::size_t>(dim_))
            throw GeometryError("site " + std::to_string(x) + " has wrong number of coordinates");
        if (!index.emplace(sites_[x], x).second)
            throw GeometryError("duplicate site " + std::to_string(x));
    }

    offsets_.reserve(sites_.size() + 1);
    offsets_.push_back(0);
    for (Site x = 0; x < sites_.size(); ++x) {
        Point probe = sites_[x];
        for (int axis = 0; axis < dim_; ++axis) {
            for (int step : {-1, 1}) {
                probe[axis] += step;
                if (auto it = index.find(probe); it != index.end()) adjacency_.push_back(it->second);
                probe[axis] -= step;
            }
        }
        offsets_.push_back(adjacency_.size());
    }
}

Lattice build_lattice(std::span<const std::size_t> dims) {
    if (dims.empty()) throw GeometryError("dims must be nonempty");
    for (std::size_t n : dims)
        if (n == 0) throw GeometryError("every box extent must be positive");

    const std::size_t total =
        std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
    std::vector<Point> sites;
    sites.reserve(total);
    Point p(dims.size(), 0);
    for (std::size_t i = 0; i < total; ++i) {
        sites.push_back(p);
        for (std::size_t axis = dims.size(); axis-- > 0;) {
            if (++p[axis] < static_cast<std::int64_t>(dims[axis])) break;
            p[axis] = 0;
        }
    }
    Lattice lat(static_cast<int>(dims.size()), std::move(sites));
    lat.box_dims_.assign(dims.begin(), dims.end());
    return lat;
}

TopplingMatrix toppling_matrix(const Lattice& lat, TopplingVariant variant) {
    const std::size_t n = lat.size();
    const Rational diag = variant == TopplingVariant::integer ? Rational(lat.two_d()) : Rational(1);
    const Rational off =
        variant == TopplingVariant::integer ? Rational(-1) : Rational(-1) / Rational(lat.two_d());

    TopplingMatrix m{variant, n, std::vector<Rational>(n * n)};
    for (Site x = 0; x < n; ++x) {
        m.entries[x * n + x] = diag;
        for (Site y : lat.neighbours(x)) m.entries[x * n + y] = off;
    }
    return m;
}

BigInt bareiss_determinant(std::vector<BigInt> a, std::size_t n) {
    if (n == 0) return 1;
    int sign = 1;
    BigInt prev = 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        if (a[k * n + k] == 0) {
            std::size_t pivot = k + 1;
            while (pivot < n && a[pivot * n + k] == 0) ++pivot;
            if (pivot == n) return 0;
            for (std::size_t j = 0; j < n; ++j) std::swap(a[k * n + j], a[pivot * n + j]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                // Exact division: Sylvester's identity.
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
            }
            a[i * n + k] = 0;
        }
        prev = a[k * n + k];
    }
    return sign * a[(n - 1) * n + (n - 1)];
}

Rational determinant_exact(const TopplingMatrix& m) {
    const std::size_t n = m.n;
    BigInt scale = 1;
    for (const Rational& e : m.entries) {
        const BigInt den = boost::multiprecision::denominator(e);
        scale = scale / boost::multiprecision::gcd(scale, den) * den;
    }
    std::vector<BigInt> ints;
    ints.reserve(n * n);
    for (const Rational& e : m.entries)
        ints.push_back(boost::multiprecision::numerator(e) * (scale / boost::multiprecision::denominator(e)));

    const BigInt det = bareiss_determinant(std::move(ints), n);
    BigInt scale_pow = 1;
    for (std::size_t i = 0; i < n; ++i) scale_pow *= scale;
    return Rational(det, scale_pow);
}

}  // namespace sandpile
