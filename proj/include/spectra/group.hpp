#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "spectra/errors.hpp"

namespace spectra {

using cplx = std::complex<double>;

enum class GroupKind { padic, vilenkin_product };

/// Exact rational in [0,1) with positive denominator, always in lowest terms.
/// Used for character phases; all arithmetic stays in integers.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational reduced(std::int64_t n, std::int64_t d) {
        n %= d;
        if (n < 0) n += d;
        std::int64_t g = std::gcd(n, d);
        if (g == 0) g = 1;
        return Rational{n / g, d / g};
    }

    friend bool operator==(const Rational&, const Rational&) = default;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

/// e^{2*pi*i*num/den} for a reduced phase. Denominators 1, 2 and 4 produce the
/// exact unit values; denominators 3 and 6 get an exact real part. Everything
/// the transform tables and the public character share goes through here, so
/// phases agree bit-for-bit across the library.
inline cplx unit_phase(const Rational& r) {
    switch (r.den) {
        case 1: return {1.0, 0.0};
        case 2: return {-1.0, 0.0};  // num == 1
        case 4: return r.num == 1 ? cplx{0.0, 1.0} : cplx{0.0, -1.0};
        case 3: {
            const double s = std::sqrt(3.0) / 2.0;
            return {-0.5, r.num == 1 ? s : -s};
        }
        case 6: {
            const double s = std::sqrt(3.0) / 2.0;
            return {0.5, r.num == 1 ? s : -s};
        }
        default: {
            const double theta = 2.0 * M_PI * r.value();
            return {std::cos(theta), std::sin(theta)};
        }
    }
}

/**
 * Static description of the group: the p-adic integers Z_p^d, or a compact
 * product-of-cyclic-groups Vilenkin model with factor sequence m_0,...,m_{K-1}
 * (quotient orders of the subgroup chain). Factors bound the available levels.
 */
struct GroupDescriptor {
    GroupKind kind = GroupKind::padic;
    std::int64_t p = 2;                 // padic only, prime
    int d = 1;                          // padic only, dimension >= 1
    std::vector<std::int64_t> factors;  // vilenkin_product only, each >= 2

    static GroupDescriptor padic(std::int64_t p, int d) {
        GroupDescriptor g;
        g.kind = GroupKind::padic;
        g.p = p;
        g.d = d;
        return g;
    }

    static GroupDescriptor vilenkin(std::vector<std::int64_t> factors) {
        GroupDescriptor g;
        g.kind = GroupKind::vilenkin_product;
        g.factors = std::move(factors);
        return g;
    }

    friend bool operator==(const GroupDescriptor&, const GroupDescriptor&) = default;
};

namespace detail {

inline bool is_prime(std::int64_t n) {
    if (n < 2) return false;
    for (std::int64_t q = 2; q * q <= n; ++q)
        if (n % q == 0) return false;
    return true;
}

inline void validate(const GroupDescriptor& g) {
    if (g.kind == GroupKind::padic) {
        if (!is_prime(g.p))
            throw InvalidDescriptor("p = " + std::to_string(g.p) + " is not prime");
        if (g.d < 1) throw InvalidDescriptor("dimension d must be >= 1");
    } else {
        if (g.factors.empty())
            throw InvalidDescriptor("vilenkin_product needs at least one factor");
        for (std::int64_t m : g.factors)
            if (m < 2)
                throw InvalidDescriptor("factor " + std::to_string(m) + " < 2");
    }
}

struct LevelData;

}  // namespace detail

inline constexpr std::int64_t kMaxQuotientSize = std::int64_t{1} << 20;

/**
 * An element of the truncated dual group, stored exactly.
 *
 * padic: one reduced rational a/p^k per coordinate (num[i] = a, kexp[i] = k,
 * with a = 0 iff k = 0, otherwise p does not divide a).
 * vilenkin_product: the digit sequence b_0,...,b_{N-1}, b_j in Z/m_j.
 *
 * norm/bracket are cached from the exact data: ||xi|| = max_i p^{k_i} for the
 * padic kind (0 for xi = 0) and prod_{j<k} m_j with k the annihilator level
 * for the product kind.
 */
struct DualIndex {
    GroupDescriptor group;
    std::vector<std::int64_t> num;  // padic numerators / vilenkin digits
    std::vector<int> kexp;          // padic denominator exponents; empty for vilenkin
    double norm = 0.0;
    double bracket = 1.0;

    bool is_zero() const {
        return std::all_of(num.begin(), num.end(), [](std::int64_t v) { return v == 0; });
    }
};

/// A point of the level-N quotient grid, as per-axis digits
/// (padic: d residues mod p^N; vilenkin: N digits x_j in Z/m_j).
struct PointIndex {
    std::vector<std::int64_t> digits;
};

namespace detail {

inline std::int64_t ipow(std::int64_t b, int e) {
    std::int64_t r = 1;
    while (e-- > 0) r *= b;
    return r;
}

struct LevelData {
    GroupDescriptor desc;
    int n = 0;           // level
    std::int64_t m = 1;  // quotient size

    // Point/dual grids factor into axes: d cyclic axes of size p^N (padic) or
    // one axis per factor m_j (vilenkin). Row-major, axis 0 most significant.
    std::vector<std::int64_t> axis_size;
    std::vector<std::int64_t> axis_stride;

    // Canonical dual order: norm ascending, DFT index ascending. Norms are
    // exact integers (0 for the trivial character).
    std::vector<std::uint32_t> canon_to_dft;
    std::vector<std::uint32_t> dft_to_canon;
    std::vector<std::uint64_t> norm_int;  // by canonical index
    std::vector<std::int32_t> shell;      // annihilator level, 0..N
    std::vector<std::int64_t> shell_begin_;  // size n+2, canonical offsets

    // Twiddle tables per axis: tw[t] = e^{-2*pi*i*t/size} with exact conjugate
    // symmetry; itw is the exact conjugate table.
    std::vector<std::vector<cplx>> tw, itw;

    std::uint64_t dual_norm_of_dft(std::uint64_t dft) const {
        std::uint64_t best = 0;
        if (desc.kind == GroupKind::padic) {
            const std::int64_t s = axis_size.empty() ? 1 : axis_size[0];
            for (std::size_t a = 0; a < axis_size.size(); ++a) {
                std::int64_t mi = static_cast<std::int64_t>(dft / axis_stride[a]) % s;
                if (mi == 0) continue;
                // m = a * p^{N-k}; ||xi_i|| = p^k = p^N / p^{v_p(m)}
                std::int64_t v = s;
                while (mi % desc.p == 0) {
                    mi /= desc.p;
                    v /= desc.p;
                }
                best = std::max<std::uint64_t>(best, static_cast<std::uint64_t>(v));
            }
        } else {
            std::uint64_t acc = 1;
            for (std::size_t a = 0; a < axis_size.size(); ++a) {
                acc *= static_cast<std::uint64_t>(axis_size[a]);
                std::int64_t digit = static_cast<std::int64_t>(dft / axis_stride[a]) % axis_size[a];
                if (digit != 0) best = acc;
            }
        }
        return best;
    }

    std::int32_t shell_of_norm(std::uint64_t nrm) const {
        if (nrm == 0) return 0;
        if (desc.kind == GroupKind::padic) {
            std::int32_t j = 0;
            std::uint64_t v = 1;
            while (v < nrm) {
                v *= static_cast<std::uint64_t>(desc.p);
                ++j;
            }
            return j;
        }
        std::uint64_t acc = 1;
        for (std::int32_t j = 0; j < n; ++j) {
            acc *= static_cast<std::uint64_t>(desc.factors[static_cast<std::size_t>(j)]);
            if (acc == nrm) return j + 1;
        }
        return n;
    }
};

inline std::vector<cplx> make_twiddles(std::int64_t size) {
    std::vector<cplx> tw(static_cast<std::size_t>(size));
    tw[0] = {1.0, 0.0};
    for (std::int64_t t = 1; t <= size / 2; ++t)
        tw[static_cast<std::size_t>(t)] = std::conj(unit_phase(Rational::reduced(t, size)));
    for (std::int64_t t = size / 2 + 1; t < size; ++t)
        tw[static_cast<std::size_t>(t)] = std::conj(tw[static_cast<std::size_t>(size - t)]);
    return tw;
}

}  // namespace detail

/**
 * A validated group truncated at level N, carrying the finite quotient of
 * size M, the canonical dual enumeration and the transform tables. Immutable
 * and cheap to copy; safe to share across threads.
 */
class Level {
public:
    Level() = default;

    const GroupDescriptor& descriptor() const { return d_->desc; }
    int n() const { return d_->n; }
    std::int64_t m() const { return d_->m; }

    std::size_t axis_count() const { return d_->axis_size.size(); }
    std::int64_t axis_size(std::size_t a) const { return d_->axis_size[a]; }
    std::int64_t axis_stride(std::size_t a) const { return d_->axis_stride[a]; }

    bool same_level(const Level& o) const {
        return d_ == o.d_ || (d_->desc == o.d_->desc && d_->n == o.d_->n);
    }

    // --- canonical dual enumeration -------------------------------------

    std::uint32_t dft_index(std::int64_t canonical) const {
        return d_->canon_to_dft[static_cast<std::size_t>(canonical)];
    }
    std::int64_t canonical_of_dft(std::uint64_t dft) const {
        return d_->dft_to_canon[static_cast<std::size_t>(dft)];
    }
    double dual_norm(std::int64_t canonical) const {
        return static_cast<double>(d_->norm_int[static_cast<std::size_t>(canonical)]);
    }
    std::uint64_t dual_norm_int(std::int64_t canonical) const {
        return d_->norm_int[static_cast<std::size_t>(canonical)];
    }
    double dual_bracket(std::int64_t canonical) const {
        return std::max(1.0, dual_norm(canonical));
    }
    /// Annihilator level: 0 for the trivial character, else j with ||xi|| the
    /// order of the j-th dual subgroup (p^j for the padic kind).
    int dual_shell(std::int64_t canonical) const {
        return d_->shell[static_cast<std::size_t>(canonical)];
    }
    int max_shell() const { return d_->n; }

    /// Canonical index range [begin, end) of shell j; shells are contiguous.
    std::int64_t shell_begin(int j) const { return d_->shell_begin_[static_cast<std::size_t>(j)]; }
    std::int64_t shell_end(int j) const {
        return d_->shell_begin_[static_cast<std::size_t>(j) + 1];
    }

    /// Canonical index of xi + eta, exact (digit-wise addition on DFT indices).
    std::int64_t dual_add(std::int64_t c1, std::int64_t c2) const {
        const auto& D = *d_;
        std::uint64_t a = dft_index(c1), b = dft_index(c2), out = 0;
        for (std::size_t ax = 0; ax < D.axis_size.size(); ++ax) {
            const std::uint64_t s = static_cast<std::uint64_t>(D.axis_size[ax]);
            const std::uint64_t w = static_cast<std::uint64_t>(D.axis_stride[ax]);
            out += (((a / w) % s + (b / w) % s) % s) * w;
        }
        return canonical_of_dft(out);
    }

    std::int64_t dual_negate(std::int64_t c) const {
        const auto& D = *d_;
        std::uint64_t a = dft_index(c), out = 0;
        for (std::size_t ax = 0; ax < D.axis_size.size(); ++ax) {
            const std::uint64_t s = static_cast<std::uint64_t>(D.axis_size[ax]);
            const std::uint64_t w = static_cast<std::uint64_t>(D.axis_stride[ax]);
            const std::uint64_t digit = (a / w) % s;
            out += (digit == 0 ? 0 : s - digit) * w;
        }
        return canonical_of_dft(out);
    }

    // --- points ----------------------------------------------------------

    std::int64_t point_digit(std::int64_t flat, std::size_t axis) const {
        return (flat / d_->axis_stride[axis]) % d_->axis_size[axis];
    }

    PointIndex point_at(std::int64_t flat) const {
        PointIndex x;
        x.digits.reserve(axis_count());
        for (std::size_t a = 0; a < axis_count(); ++a) x.digits.push_back(point_digit(flat, a));
        return x;
    }

    std::int64_t flat_of_point(const PointIndex& x) const {
        if (x.digits.size() != axis_count())
            throw GroupMismatch("point has wrong number of coordinates");
        std::int64_t flat = 0;
        for (std::size_t a = 0; a < axis_count(); ++a) {
            if (x.digits[a] < 0 || x.digits[a] >= d_->axis_size[a])
                throw GroupMismatch("point coordinate out of range");
            flat += x.digits[a] * d_->axis_stride[a];
        }
        return flat;
    }

    /// ||x|| of the level-N representative. The zero residue reports the
    /// truncation floor p^{-N} (resp. 1/M) -- the true order is not knowable
    /// at finite level.
    double point_norm(std::int64_t flat) const {
        const auto& D = *d_;
        if (D.desc.kind == GroupKind::padic) {
            double best = 0.0;
            for (std::size_t a = 0; a < D.axis_size.size(); ++a) {
                std::int64_t xi = point_digit(flat, a);
                int v = 0;
                if (xi == 0) {
                    v = D.n;
                } else {
                    while (xi % D.desc.p == 0) {
                        xi /= D.desc.p;
                        ++v;
                    }
                }
                best = std::max(best, 1.0 / static_cast<double>(detail::ipow(D.desc.p, v)));
            }
            return best;
        }
        std::int64_t denom = 1;
        for (std::size_t a = 0; a < D.axis_size.size(); ++a) {
            if (point_digit(flat, a) != 0) break;
            denom *= D.axis_size[a];
        }
        return 1.0 / static_cast<double>(denom);
    }

    const std::vector<cplx>& twiddles(std::size_t axis) const { return d_->tw[axis]; }
    const std::vector<cplx>& inverse_twiddles(std::size_t axis) const { return d_->itw[axis]; }

    explicit Level(std::shared_ptr<const detail::LevelData> d) : d_(std::move(d)) {}

private:
    std::shared_ptr<const detail::LevelData> d_;
};

/// Builds a validated level. Throws InvalidDescriptor for a bad group and
/// LevelTooLarge when M would exceed 2^20 (or N outruns the factor sequence).
inline Level make_level(const GroupDescriptor& g, int n) {
    detail::validate(g);
    if (n < 0) throw LevelTooLarge("level must be >= 0");

    auto data = std::make_shared<detail::LevelData>();
    data->desc = g;
    data->n = n;

    if (g.kind == GroupKind::padic) {
        // M = p^{N*d}, checked multiplication against the cap
        std::int64_t axis = 1;
        for (int i = 0; i < n; ++i) {
            if (axis > kMaxQuotientSize / g.p)
                throw LevelTooLarge("quotient size p^(N*d) exceeds 2^20");
            axis *= g.p;
        }
        std::int64_t total = 1;
        for (int i = 0; i < g.d; ++i) {
            if (axis != 0 && total > kMaxQuotientSize / axis)
                throw LevelTooLarge("quotient size p^(N*d) exceeds 2^20");
            total *= axis;
        }
        data->m = total;
        data->axis_size.assign(static_cast<std::size_t>(g.d), axis);
    } else {
        if (static_cast<std::size_t>(n) > g.factors.size())
            throw LevelTooLarge("level " + std::to_string(n) + " exceeds the declared factor sequence (" +
                                std::to_string(g.factors.size()) + " factors)");
        std::int64_t total = 1;
        for (int j = 0; j < n; ++j) {
            if (total > kMaxQuotientSize / g.factors[static_cast<std::size_t>(j)])
                throw LevelTooLarge("quotient size exceeds 2^20");
            total *= g.factors[static_cast<std::size_t>(j)];
        }
        data->m = total;
        data->axis_size.assign(g.factors.begin(), g.factors.begin() + n);
    }

    // Row-major strides, axis 0 most significant.
    data->axis_stride.assign(data->axis_size.size(), 1);
    for (std::size_t a = data->axis_size.size(); a-- > 1;)
        data->axis_stride[a - 1] = data->axis_stride[a] * data->axis_size[a];

    const std::int64_t m = data->m;
    data->canon_to_dft.resize(static_cast<std::size_t>(m));
    data->dft_to_canon.resize(static_cast<std::size_t>(m));
    data->norm_int.resize(static_cast<std::size_t>(m));
    data->shell.resize(static_cast<std::size_t>(m));

    std::vector<std::uint32_t> order(static_cast<std::size_t>(m));
    std::vector<std::uint64_t> norm_by_dft(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
        order[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i);
        norm_by_dft[static_cast<std::size_t>(i)] =
            data->dual_norm_of_dft(static_cast<std::uint64_t>(i));
    }
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (norm_by_dft[a] != norm_by_dft[b]) return norm_by_dft[a] < norm_by_dft[b];
        return a < b;
    });
    for (std::int64_t c = 0; c < m; ++c) {
        const std::uint32_t dft = order[static_cast<std::size_t>(c)];
        data->canon_to_dft[static_cast<std::size_t>(c)] = dft;
        data->dft_to_canon[dft] = static_cast<std::uint32_t>(c);
        data->norm_int[static_cast<std::size_t>(c)] = norm_by_dft[dft];
        data->shell[static_cast<std::size_t>(c)] = data->shell_of_norm(norm_by_dft[dft]);
    }

    data->shell_begin_.assign(static_cast<std::size_t>(n) + 2, m);
    for (std::int64_t c = m; c-- > 0;)
        data->shell_begin_[static_cast<std::size_t>(data->shell[static_cast<std::size_t>(c)])] = c;
    // empty shells (possible only at n = 0) inherit the next offset
    for (std::size_t j = data->shell_begin_.size() - 1; j-- > 0;)
        data->shell_begin_[j] = std::min(data->shell_begin_[j], data->shell_begin_[j + 1]);

    data->tw.reserve(data->axis_size.size());
    data->itw.reserve(data->axis_size.size());
    for (std::int64_t s : data->axis_size) {
        data->tw.push_back(detail::make_twiddles(s));
        auto inv = data->tw.back();
        for (auto& z : inv) z = std::conj(z);
        data->itw.push_back(std::move(inv));
    }

    return Level(std::move(data));
}

// --- exact dual arithmetic -----------------------------------------------

/// The canonical enumeration as exact DualIndex values (norm ascending,
/// DFT index ascending). Element i corresponds to canonical index i.
inline DualIndex dual_at(const Level& lv, std::int64_t canonical) {
    DualIndex xi;
    xi.group = lv.descriptor();
    const std::uint64_t dft = lv.dft_index(canonical);
    if (lv.descriptor().kind == GroupKind::padic) {
        const int d = lv.descriptor().d;
        const std::int64_t p = lv.descriptor().p;
        xi.num.assign(static_cast<std::size_t>(d), 0);
        xi.kexp.assign(static_cast<std::size_t>(d), 0);
        for (std::size_t a = 0; a < lv.axis_count(); ++a) {
            std::int64_t mi =
                static_cast<std::int64_t>(dft / lv.axis_stride(a)) % lv.axis_size(a);
            if (mi == 0) continue;
            int k = lv.n();
            while (mi % p == 0) {
                mi /= p;
                --k;
            }
            xi.num[a] = mi;
            xi.kexp[a] = k;
        }
    } else {
        xi.num.assign(lv.axis_count(), 0);
        for (std::size_t a = 0; a < lv.axis_count(); ++a)
            xi.num[a] = static_cast<std::int64_t>(dft / lv.axis_stride(a)) % lv.axis_size(a);
    }
    xi.norm = lv.dual_norm(canonical);
    xi.bracket = lv.dual_bracket(canonical);
    return xi;
}

inline std::vector<DualIndex> dual_enumerate(const Level& lv) {
    std::vector<DualIndex> out;
    out.reserve(static_cast<std::size_t>(lv.m()));
    for (std::int64_t c = 0; c < lv.m(); ++c) out.push_back(dual_at(lv, c));
    return out;
}

/// Canonical index of an exact dual element at this level.
/// Throws LevelTooCoarse when xi needs a finer level, GroupMismatch otherwise.
inline std::int64_t canonical_index(const Level& lv, const DualIndex& xi) {
    if (!(xi.group == lv.descriptor())) throw GroupMismatch("dual index from a different group");
    std::uint64_t dft = 0;
    if (lv.descriptor().kind == GroupKind::padic) {
        for (std::size_t a = 0; a < static_cast<std::size_t>(lv.descriptor().d); ++a) {
            if (xi.kexp[a] > lv.n())
                throw LevelTooCoarse("dual index finer than level " + std::to_string(lv.n()));
            if (xi.num[a] == 0) continue;
            dft += static_cast<std::uint64_t>(
                       xi.num[a] * detail::ipow(lv.descriptor().p, lv.n() - xi.kexp[a])) *
                   static_cast<std::uint64_t>(lv.axis_stride(a));
        }
    } else {
        for (std::size_t j = 0; j < xi.num.size(); ++j) {
            if (xi.num[j] == 0) continue;
            if (j >= lv.axis_count())
                throw LevelTooCoarse("dual index finer than level " + std::to_string(lv.n()));
            dft += static_cast<std::uint64_t>(xi.num[j]) *
                   static_cast<std::uint64_t>(lv.axis_stride(j));
        }
    }
    return lv.canonical_of_dft(dft);
}

namespace detail {

inline void refresh_norm(DualIndex& xi) {
    if (xi.group.kind == GroupKind::padic) {
        std::int64_t best = 0;
        for (std::size_t a = 0; a < xi.num.size(); ++a)
            if (xi.num[a] != 0) best = std::max(best, ipow(xi.group.p, xi.kexp[a]));
        xi.norm = static_cast<double>(best);
    } else {
        std::int64_t acc = 1, best = 0;
        for (std::size_t j = 0; j < xi.num.size(); ++j) {
            acc *= xi.group.factors[j];
            if (xi.num[j] != 0) best = acc;
        }
        xi.norm = static_cast<double>(best);
    }
    xi.bracket = std::max(1.0, xi.norm);
}

}  // namespace detail

/// Coordinate-wise addition in the Pruefer dual (rationals mod 1), exact.
inline DualIndex prufer_add(const DualIndex& xi, const DualIndex& eta) {
    if (!(xi.group == eta.group)) throw GroupMismatch("dual indices from different groups");
    DualIndex out = xi;
    if (xi.group.kind == GroupKind::padic) {
        for (std::size_t a = 0; a < xi.num.size(); ++a) {
            const std::int64_t p = xi.group.p;
            const int k = std::max(xi.kexp[a], eta.kexp[a]);
            const std::int64_t den = detail::ipow(p, k);
            std::int64_t n = xi.num[a] * detail::ipow(p, k - xi.kexp[a]) +
                             eta.num[a] * detail::ipow(p, k - eta.kexp[a]);
            Rational r = Rational::reduced(n, den);
            // reduced denominator is a power of p again
            int kk = 0;
            for (std::int64_t d = r.den; d > 1; d /= p) ++kk;
            out.num[a] = r.num;
            out.kexp[a] = kk;
        }
    } else {
        // digit vectors may come from different truncations; missing digits are 0
        out.num.resize(std::max(xi.num.size(), eta.num.size()), 0);
        for (std::size_t j = 0; j < out.num.size(); ++j) {
            const std::int64_t a = j < xi.num.size() ? xi.num[j] : 0;
            const std::int64_t b = j < eta.num.size() ? eta.num[j] : 0;
            out.num[j] = (a + b) % xi.group.factors[j];
        }
    }
    detail::refresh_norm(out);
    return out;
}

/// Exact fractional pairing {xi . x} as a reduced rational in [0,1).
inline Rational pairing(const DualIndex& xi, const PointIndex& x, const Level& lv) {
    if (!(xi.group == lv.descriptor())) throw GroupMismatch("dual index from a different group");
    if (x.digits.size() != lv.axis_count())
        throw GroupMismatch("point has wrong number of coordinates");
    if (lv.descriptor().kind == GroupKind::padic) {
        const std::int64_t p = lv.descriptor().p;
        int kmax = 0;
        for (std::size_t a = 0; a < xi.kexp.size(); ++a) {
            if (xi.kexp[a] > lv.n())
                throw LevelTooCoarse("dual index finer than level " + std::to_string(lv.n()));
            kmax = std::max(kmax, xi.kexp[a]);
        }
        const std::int64_t den = detail::ipow(p, kmax);
        std::int64_t num = 0;
        for (std::size_t a = 0; a < xi.num.size(); ++a) {
            if (xi.num[a] == 0) continue;
            const std::int64_t pk = detail::ipow(p, xi.kexp[a]);
            const std::int64_t t = (xi.num[a] * (x.digits[a] % pk)) % pk;
            num = (num + t * (den / pk)) % den;
        }
        return Rational::reduced(num, den);
    }
    std::int64_t den = 1;
    for (std::size_t j = 0; j < xi.num.size(); ++j) {
        if (j >= lv.axis_count()) {
            if (xi.num[j] != 0)
                throw LevelTooCoarse("dual index finer than level " + std::to_string(lv.n()));
            continue;
        }
        if (xi.num[j] != 0) den = std::lcm(den, lv.descriptor().factors[j]);
    }
    std::int64_t num = 0;
    for (std::size_t j = 0; j < std::min(xi.num.size(), lv.axis_count()); ++j) {
        if (xi.num[j] == 0) continue;
        const std::int64_t mj = lv.descriptor().factors[j];
        num = (num + (xi.num[j] * x.digits[j]) % mj * (den / mj)) % den;
    }
    return Rational::reduced(num, den);
}

/// chi(xi . x) = e^{2*pi*i*{xi . x}}; the phase is computed exactly first.
inline cplx character(const DualIndex& xi, const PointIndex& x, const Level& lv) {
    return unit_phase(pairing(xi, x, lv));
}

}  // namespace spectra
