#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace sandpile {

using Site = std::size_t;
using Point = std::vector<std::int64_t>;
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Finite subset of Z^d with nearest-neighbour adjacency restricted to the subset.
///
/// Sites keep the order they were given in; box lattices are generated in
/// row-major order (last coordinate fastest). Every matrix, configuration and
/// output file indexes sites in this order. Immutable after construction.
class Lattice {
public:
    Lattice(int dim, std::vector<Point> sites);

    int dim() const { return dim_; }
    /// 2d: the toppling threshold of the integer model.
    int two_d() const { return 2 * dim_; }
    std::size_t size() const { return sites_.size(); }

    const Point& point(Site x) const { return sites_[x]; }
    const std::vector<Point>& points() const { return sites_; }

    std::span<const Site> neighbours(Site x) const {
        return {adjacency_.data() + offsets_[x], offsets_[x + 1] - offsets_[x]};
    }
    std::size_t degree(Site x) const { return offsets_[x + 1] - offsets_[x]; }
    /// 2d minus the number of in-lattice neighbours: grains lost per toppling at x.
    int boundary_degree(Site x) const { return two_d() - static_cast<int>(degree(x)); }

    /// Box extents when built by build_lattice, empty for explicit site lists.
    const std::vector<std::size_t>& box_dims() const { return box_dims_; }

private:
    friend Lattice build_lattice(std::span<const std::size_t> dims);

    int dim_;
    std::vector<Point> sites_;
    std::vector<std::size_t> offsets_;
    std::vector<Site> adjacency_;
    std::vector<std::size_t> box_dims_;
};

/// Box {0..n_1-1} x ... x {0..n_d-1}. Throws GeometryError on empty dims or a zero extent.
Lattice build_lattice(std::span<const std::size_t> dims);
inline Lattice build_lattice(std::initializer_list<std::size_t> dims) {
    return build_lattice(std::span<const std::size_t>(dims.begin(), dims.size()));
}

enum class TopplingVariant { continuous, integer };

/// Square matrix of exact rationals, row-major.
struct TopplingMatrix {
    TopplingVariant variant;
    std::size_t n;
    std::vector<Rational> entries;

    const Rational& operator()(std::size_t i, std::size_t j) const { return entries[i * n + j]; }
};

/// Continuous: 1 on the diagonal, -1/2d between in-lattice neighbours.
/// Integer: 2d times the continuous matrix.
TopplingMatrix toppling_matrix(const Lattice& lat, TopplingVariant variant);

/// Exact determinant of a rational matrix. The matrix is scaled to integers by
/// the lcm of its denominators and reduced with Bareiss fraction-free elimination.
Rational determinant_exact(const TopplingMatrix& m);

/// Bareiss elimination on an integer matrix (row-major, n x n).
BigInt bareiss_determinant(std::vector<BigInt> a, std::size_t n);

}  // namespace sandpile
