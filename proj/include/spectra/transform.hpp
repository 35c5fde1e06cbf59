#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "spectra/group.hpp"

namespace spectra {

/// Complex function on the level-N point grid, Haar weight 1/M per point.
struct GridFunction {
    Level level;
    std::vector<cplx> v;  // indexed by flat point index

    static GridFunction zeros(const Level& lv) {
        return GridFunction{lv, std::vector<cplx>(static_cast<std::size_t>(lv.m()))};
    }
};

/// Complex function on the truncated dual, in canonical order.
struct SpectrumFunction {
    Level level;
    std::vector<cplx> v;  // indexed by canonical dual index

    static SpectrumFunction zeros(const Level& lv) {
        return SpectrumFunction{lv, std::vector<cplx>(static_cast<std::size_t>(lv.m()))};
    }
};

namespace detail {

inline std::int64_t smallest_prime_factor(std::int64_t n) {
    for (std::int64_t q = 2; q * q <= n; ++q)
        if (n % q == 0) return q;
    return n;
}

/// Decimation-in-time transform of length n with kernel tw[(j*k mod n)*step],
/// where tw is the root table of the axis (step = axis_size / n). `out` and
/// `scratch` are disjoint length-n buffers; `out` doubles as the scratch of
/// the sub-transforms.
inline void dft_rec(const cplx* in, std::int64_t stride, cplx* out, cplx* scratch,
                    std::int64_t n, const cplx* tw, std::int64_t step) {
    if (n == 1) {
        out[0] = in[0];
        return;
    }
    const std::int64_t q = smallest_prime_factor(n);
    if (q == n) {
        for (std::int64_t k = 0; k < n; ++k) {
            cplx acc = in[0];
            std::int64_t idx = 0;
            for (std::int64_t j = 1; j < n; ++j) {
                idx += k;
                if (idx >= n) idx -= n;
                acc += in[j * stride] * tw[idx * step];
            }
            out[k] = acc;
        }
        return;
    }
    const std::int64_t r = n / q;
    for (std::int64_t t = 0; t < q; ++t)
        dft_rec(in + t * stride, stride * q, scratch + t * r, out + t * r, r, tw, step * q);
    if (q == 2) {
        // one twiddle product per pair: X[k] = E[k] + w^k O[k], X[k+r] = E[k] - w^k O[k]
        for (std::int64_t k0 = 0; k0 < r; ++k0) {
            const cplx wo = tw[k0 * step] * scratch[r + k0];
            out[k0] = scratch[k0] + wo;
            out[k0 + r] = scratch[k0] - wo;
        }
        return;
    }
    for (std::int64_t k0 = 0; k0 < r; ++k0) {
        for (std::int64_t c = 0; c < q; ++c) {
            const std::int64_t k = k0 + c * r;
            cplx acc = scratch[k0];
            for (std::int64_t t = 1; t < q; ++t)
                acc += tw[((t * k) % n) * step] * scratch[t * r + k0];
            out[k] = acc;
        }
    }
}

/// In-place multidimensional transform over all axes of the level.
/// `inverse` selects the conjugate tables (no scaling either way).
inline void transform_all_axes(const Level& lv, std::vector<cplx>& a, bool inverse) {
    const std::int64_t m = lv.m();
    std::vector<cplx> line, out, scratch;
    for (std::size_t ax = 0; ax < lv.axis_count(); ++ax) {
        const std::int64_t s = lv.axis_size(ax);
        if (s == 1) continue;
        const std::int64_t stride = lv.axis_stride(ax);
        const auto& tw = inverse ? lv.inverse_twiddles(ax) : lv.twiddles(ax);
        line.resize(static_cast<std::size_t>(s));
        out.resize(static_cast<std::size_t>(s));
        scratch.resize(static_cast<std::size_t>(s));
        const std::int64_t block = s * stride;
        for (std::int64_t base = 0; base < m; base += block) {
            for (std::int64_t off = 0; off < stride; ++off) {
                cplx* start = a.data() + base + off;
                for (std::int64_t t = 0; t < s; ++t) line[static_cast<std::size_t>(t)] = start[t * stride];
                dft_rec(line.data(), 1, out.data(), scratch.data(), s, tw.data(), 1);
                for (std::int64_t t = 0; t < s; ++t) start[t * stride] = out[static_cast<std::size_t>(t)];
            }
        }
    }
}

}  // namespace detail

/**
 * Fourier coefficients f^(xi) = (1/M) sum_x f(x) conj chi_xi(x) for all xi in
 * the truncated dual, returned in canonical order. Radix-p (mixed-radix)
 * decimation on the DFT-index side, then the Pruefer reindexing permutation.
 */
inline SpectrumFunction forward(const GridFunction& f) {
    const Level& lv = f.level;
    const std::int64_t m = lv.m();
    std::vector<cplx> buf = f.v;
    detail::transform_all_axes(lv, buf, /*inverse=*/false);
    const double w = 1.0 / static_cast<double>(m);
    SpectrumFunction out{lv, std::vector<cplx>(static_cast<std::size_t>(m))};
    for (std::int64_t c = 0; c < m; ++c)
        out.v[static_cast<std::size_t>(c)] = buf[lv.dft_index(c)] * w;
    return out;
}

/// f(x) = sum_xi phi(xi) chi_xi(x); the conjugate fast transform, no 1/M weight.
inline GridFunction inverse(const SpectrumFunction& phi) {
    const Level& lv = phi.level;
    const std::int64_t m = lv.m();
    std::vector<cplx> buf(static_cast<std::size_t>(m));
    for (std::int64_t c = 0; c < m; ++c)
        buf[lv.dft_index(c)] = phi.v[static_cast<std::size_t>(c)];
    detail::transform_all_axes(lv, buf, /*inverse=*/true);
    return GridFunction{lv, std::move(buf)};
}

/**
 * Direct O(M^2) double sum with the same contract as forward(); the reference
 * implementation for correctness tests and the benchmark baseline. The phase
 * index is walked incrementally through the point odometer, so the inner loop
 * is one table lookup and one multiply-add.
 */
inline SpectrumFunction naive_forward(const GridFunction& f) {
    const Level& lv = f.level;
    const std::int64_t m = lv.m();
    const std::size_t axes = lv.axis_count();

    // Common root table of size L = lcm of axis sizes; tw_L[t] = e^{-2pi i t/L}.
    std::int64_t L = 1;
    for (std::size_t a = 0; a < axes; ++a) L = std::lcm(L, lv.axis_size(a));
    std::vector<cplx> tw(static_cast<std::size_t>(L));
    for (std::int64_t t = 0; t < L; ++t)
        tw[static_cast<std::size_t>(t)] = std::conj(unit_phase(Rational::reduced(t, L)));

    SpectrumFunction out{lv, std::vector<cplx>(static_cast<std::size_t>(m))};
    const double w = 1.0 / static_cast<double>(m);

    // split layout keeps the hot loop in plain double arithmetic
    std::vector<double> fr(static_cast<std::size_t>(m)), fi(static_cast<std::size_t>(m));
    std::vector<double> tr(static_cast<std::size_t>(L)), ti(static_cast<std::size_t>(L));
    for (std::int64_t j = 0; j < m; ++j) {
        fr[static_cast<std::size_t>(j)] = f.v[static_cast<std::size_t>(j)].real();
        fi[static_cast<std::size_t>(j)] = f.v[static_cast<std::size_t>(j)].imag();
    }
    for (std::int64_t t = 0; t < L; ++t) {
        tr[static_cast<std::size_t>(t)] = tw[static_cast<std::size_t>(t)].real();
        ti[static_cast<std::size_t>(t)] = tw[static_cast<std::size_t>(t)].imag();
    }

    std::vector<std::int64_t> delta(axes), digit(axes);
    for (std::int64_t c = 0; c < m; ++c) {
        const std::uint64_t dft = lv.dft_index(c);
        for (std::size_t a = 0; a < axes; ++a) {
            const std::int64_t ma =
                static_cast<std::int64_t>(dft / lv.axis_stride(a)) % lv.axis_size(a);
            delta[a] = (ma * (L / lv.axis_size(a))) % L;
            digit[a] = 0;
        }
        double ar = fr[0], ai = fi[0];
        std::int64_t t = 0;
        if (axes == 1) {
            const std::int64_t d0 = delta[0];
            for (std::int64_t j = 1; j < m; ++j) {
                t += d0;
                if (t >= L) t -= L;
                const double xr = fr[static_cast<std::size_t>(j)];
                const double xi = fi[static_cast<std::size_t>(j)];
                const double wr = tr[static_cast<std::size_t>(t)];
                const double wi = ti[static_cast<std::size_t>(t)];
                ar += xr * wr - xi * wi;
                ai += xr * wi + xi * wr;
            }
        } else {
            for (std::int64_t j = 1; j < m; ++j) {
                // advance the odometer; every touched axis adds its delta mod L
                for (std::size_t a = axes; a-- > 0;) {
                    t += delta[a];
                    if (t >= L) t -= L;
                    if (++digit[a] < lv.axis_size(a)) break;
                    digit[a] = 0;
                }
                const double xr = fr[static_cast<std::size_t>(j)];
                const double xi = fi[static_cast<std::size_t>(j)];
                const double wr = tr[static_cast<std::size_t>(t)];
                const double wi = ti[static_cast<std::size_t>(t)];
                ar += xr * wr - xi * wi;
                ai += xr * wi + xi * wr;
            }
        }
        out.v[static_cast<std::size_t>(c)] = cplx(ar * w, ai * w);
    }
    return out;
}

/// L^r norm with Haar weight 1/M; r = inf gives the max modulus.
inline double lr_norm(const GridFunction& f, double r) {
    if (std::isinf(r) && r > 0) {
        double mx = 0.0;
        for (const cplx& z : f.v) mx = std::max(mx, std::abs(z));
        return mx;
    }
    if (!(r >= 1.0)) throw BadExponent("L^r norm needs r >= 1 or r = inf");
    const double w = 1.0 / static_cast<double>(f.level.m());
    double acc = 0.0;
    if (r == 2.0) {
        for (const cplx& z : f.v) acc += std::norm(z);
        return std::sqrt(acc * w);
    }
    for (const cplx& z : f.v) acc += std::pow(std::abs(z), r);
    return std::pow(acc * w, 1.0 / r);
}

enum class FrequencyScale {
    bracket,    // <xi>^s, the Bessel-type scale J_s
    vladimirov  // ||xi||^s with 0^s := 0 for s != 0 (D^s kills constants)
};

inline double frequency_weight(const Level& lv, std::int64_t canonical, double s,
                               FrequencyScale scale) {
    if (scale == FrequencyScale::bracket)
        return std::pow(lv.dual_bracket(canonical), s);
    const double nrm = lv.dual_norm(canonical);
    if (nrm == 0.0) return s == 0.0 ? 1.0 : 0.0;
    return std::pow(nrm, s);
}

/// Fourier multiplier <xi>^s (bracket) or ||xi||^s (vladimirov) in frequency.
inline GridFunction sobolev_apply(const GridFunction& f, double s,
                                  FrequencyScale scale = FrequencyScale::bracket) {
    SpectrumFunction phi = forward(f);
    for (std::int64_t c = 0; c < f.level.m(); ++c)
        phi.v[static_cast<std::size_t>(c)] *= frequency_weight(f.level, c, s, scale);
    return inverse(phi);
}

/// || J_s f ||_{L^r}.
inline double sobolev_norm(const GridFunction& f, double s, double r) {
    return lr_norm(sobolev_apply(f, s, FrequencyScale::bracket), r);
}

/**
 * Littlewood-Paley square function: pointwise l^2 aggregation of the shell
 * projections, the trivial character counted as its own shell. Parseval over
 * the disjoint shells gives ||Sf||_{L^2} = ||f||_{L^2}.
 */
inline GridFunction square_function(const GridFunction& f) {
    const Level& lv = f.level;
    const std::int64_t m = lv.m();
    SpectrumFunction phi = forward(f);
    std::vector<double> acc(static_cast<std::size_t>(m), 0.0);
    for (int j = 0; j <= lv.max_shell(); ++j) {
        SpectrumFunction part = SpectrumFunction::zeros(lv);
        bool any = false;
        for (std::int64_t c = lv.shell_begin(j); c < lv.shell_end(j); ++c) {
            part.v[static_cast<std::size_t>(c)] = phi.v[static_cast<std::size_t>(c)];
            any = true;
        }
        if (!any) continue;
        GridFunction proj = inverse(part);
        for (std::int64_t x = 0; x < m; ++x)
            acc[static_cast<std::size_t>(x)] += std::norm(proj.v[static_cast<std::size_t>(x)]);
    }
    GridFunction out = GridFunction::zeros(lv);
    for (std::int64_t x = 0; x < m; ++x)
        out.v[static_cast<std::size_t>(x)] = std::sqrt(acc[static_cast<std::size_t>(x)]);
    return out;
}

/**
 * Finite-level embedding constant (sum_{<xi> <= p^N} <xi>^{-s r})^{1/r}; with
 * s > d/r this is the H^s_r -> L^inf inclusion constant of the level.
 */
inline double embedding_constant(const Level& lv, double s, double r) {
    if (!(r >= 1.0) || std::isinf(r)) throw BadExponent("embedding constant needs finite r >= 1");
    const int d = lv.descriptor().kind == GroupKind::padic ? lv.descriptor().d : 1;
    if (!(s > static_cast<double>(d) / r))
        throw BadExponent("embedding constant diverges for s <= d/r");
    double acc = 0.0;
    for (std::int64_t c = 0; c < lv.m(); ++c)
        acc += std::pow(lv.dual_bracket(c), -s * r);
    return std::pow(acc, 1.0 / r);
}

}  // namespace spectra
