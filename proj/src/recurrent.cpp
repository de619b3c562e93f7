#include "sandpile/recurrent.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "sandpile/errors.hpp"

namespace sandpile {

namespace {

// Base-2d code with site 0 most significant, so code order is lexicographic order.
std::uint64_t encode(const IntConfig& xi, std::uint64_t base) {
    std::uint64_t code = 0;
    for (std::int64_t h : xi.heights) code = code * base + static_cast<std::uint64_t>(h);
    return code;
}

void decode(std::uint64_t code, std::uint64_t base, std::vector<std::int64_t>& out) {
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = static_cast<std::int64_t>(code % base);
        code /= base;
    }
}

}  // namespace

std::uint64_t stable_config_count(const Lattice& lat) {
    const std::uint64_t base = static_cast<std::uint64_t>(lat.two_d());
    std::uint64_t total = 1;
    for (std::size_t i = 0; i < lat.size(); ++i) {
        total *= base;
        if (total > kEnumerationCapacity)
            throw CapacityError("(2d)^|Lambda| exceeds the enumeration capacity of " +
                                std::to_string(kEnumerationCapacity));
    }
    return total;
}

std::vector<IntConfig> enumerate_recurrent(const Lattice& lat, Execution exec) {
    const std::uint64_t total = stable_config_count(lat);
    const std::uint64_t base = static_cast<std::uint64_t>(lat.two_d());
    const std::size_t n = lat.size();
    std::vector<char> recurrent(total, 0);

    if (exec == Execution::parallel) {
#pragma omp parallel
        {
            IntConfig xi{std::vector<std::int64_t>(n)};
#pragma omp for schedule(static)
            for (std::int64_t code = 0; code < static_cast<std::int64_t>(total); ++code) {
                decode(static_cast<std::uint64_t>(code), base, xi.heights);
                recurrent[code] = is_recurrent_burning(lat, xi) ? 1 : 0;
            }
        }
    } else {
        IntConfig xi{std::vector<std::int64_t>(n)};
        for (std::uint64_t code = 0; code < total; ++code) {
            decode(code, base, xi.heights);
            recurrent[code] = is_recurrent_burning(lat, xi) ? 1 : 0;
        }
    }

    std::vector<IntConfig> out;
    for (std::uint64_t code = 0; code < total; ++code) {
        if (!recurrent[code]) continue;
        IntConfig xi{std::vector<std::int64_t>(n)};
        decode(code, base, xi.heights);
        out.push_back(std::move(xi));
    }
    return out;
}

RecurrentSet::RecurrentSet(const Lattice& lat, Execution exec)
    : lattice_(lat), configs_(enumerate_recurrent(lat, exec)) {
    const std::uint64_t base = static_cast<std::uint64_t>(lat.two_d());
    codes_.reserve(configs_.size());
    for (const IntConfig& xi : configs_) codes_.push_back(encode(xi, base));

    const std::size_t n = lat.size();
    const std::size_t count = configs_.size();
    add_.assign(n, std::vector<std::size_t>(count));
    inverse_.assign(n, std::vector<std::size_t>(count));
    orders_.assign(n, 1);

    std::vector<char> bad(n, 0);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::parallel)
    for (std::int64_t xs = 0; xs < static_cast<std::int64_t>(n); ++xs) {
        const Site x = static_cast<Site>(xs);
        IntConfig work{std::vector<std::int64_t>(n)};
        for (std::size_t i = 0; i < count; ++i) {
            work = configs_[i];
            work[x] += 1;
            kernel::stabilize_from(lattice_, work.heights, {}, x);
            const auto it = std::lower_bound(codes_.begin(), codes_.end(), encode(work, base));
            if (it == codes_.end() || *it != encode(work, base)) {
                bad[x] = 1;  // a_x left the recurrent set: cannot happen for a correct burning test
                break;
            }
            const std::size_t j = static_cast<std::size_t>(it - codes_.begin());
            add_[x][i] = j;
            inverse_[x][j] = i;
        }

        // Order of the permutation: lcm of its cycle lengths.
        std::vector<char> seen(count, 0);
        std::uint64_t order = 1;
        for (std::size_t i = 0; i < count && !bad[x]; ++i) {
            if (seen[i]) continue;
            std::uint64_t len = 0;
            for (std::size_t j = i; !seen[j]; j = add_[x][j]) {
                seen[j] = 1;
                ++len;
            }
            order = std::lcm(order, len);
        }
        orders_[x] = order;
    }
    if (std::find(bad.begin(), bad.end(), 1) != bad.end())
        throw std::logic_error("addition operator does not preserve the recurrent set");
}

std::optional<std::size_t> RecurrentSet::index_of(const IntConfig& xi) const {
    if (!is_stable(lattice_, xi)) return std::nullopt;
    const std::uint64_t code = encode(xi, static_cast<std::uint64_t>(lattice_.two_d()));
    const auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
    if (it == codes_.end() || *it != code) return std::nullopt;
    return static_cast<std::size_t>(it - codes_.begin());
}

std::uint64_t addition_order(const Lattice& lat, Site x) {
    if (x >= lat.size()) throw DomainError("site out of range");
    return RecurrentSet(lat).addition_order(x);
}

IntConfig btw_inverse_add(const RecurrentSet& set, const IntConfig& xi, Site x) {
    const Lattice& lat = set.lattice();
    if (x >= lat.size()) throw DomainError("site out of range");
    if (!is_stable(lat, xi) || !is_recurrent_burning(lat, xi))
        throw DomainError("inverse addition is only defined on recurrent configurations");
    IntConfig out = xi;
    const std::uint64_t steps = set.addition_order(x) - 1;
    for (std::uint64_t s = 0; s < steps; ++s) {
        out[x] += 1;
        kernel::stabilize_from(lat, out.heights, {}, x);
    }
    return out;
}

IntConfig btw_inverse_add(const Lattice& lat, const IntConfig& xi, Site x) {
    if (x >= lat.size()) throw DomainError("site out of range");
    if (!is_stable(lat, xi) || !is_recurrent_burning(lat, xi))
        throw DomainError("inverse addition is only defined on recurrent configurations");
    return btw_inverse_add(RecurrentSet(lat), xi, x);
}

}  // namespace sandpile
