#pragma once

#include <algorithm>
#include <random>
#include <span>
#include <vector>

#include "spectra/calculus.hpp"

namespace spectra {

/// Singular values s_0 >= s_1 >= ... >= s_{M-1} >= 0 of an operator matrix.
struct SingularSpectrum {
    Level level;
    std::vector<double> s;
};

/// Complex spectrum sorted by modulus, descending.
struct EigenSpectrum {
    Level level;
    std::vector<cplx> lambda;
};

inline SingularSpectrum singular_values(const OperatorMatrix& A) {
    return {A.level, detail::dense_singular_values(A.a, A.level.m())};
}

inline EigenSpectrum eigenvalues(const OperatorMatrix& A) {
    return {A.level, detail::dense_eigenvalues(A.a, A.level.m())};
}

/// Sorted moduli of multiplier values: the exact singular spectrum of the
/// diagonal operator T_m, no decomposition involved.
inline SingularSpectrum multiplier_singular_spectrum(const Level& lv,
                                                     std::span<const cplx> values) {
    SingularSpectrum out{lv, {}};
    out.s.reserve(values.size());
    for (const cplx& z : values) out.s.push_back(std::abs(z));
    std::sort(out.s.begin(), out.s.end(), std::greater<>());
    return out;
}

// --- summability functionals ------------------------------------------------

/// (sum_k s_k^gamma)^{1/gamma}.
inline double schatten_norm(const SingularSpectrum& sp, double gamma) {
    if (!(gamma >= 1.0)) throw BadExponent("Schatten exponent needs gamma >= 1");
    double acc = 0.0;
    for (double s : sp.s) acc += std::pow(s, gamma);
    return std::pow(acc, 1.0 / gamma);
}

/// Symbol-side Schatten functional (sum_xi ||sigma(., xi)||_{L^gamma}^gamma)^{1/gamma}.
inline double symbol_schatten_functional(const SymbolGrid& sigma, double gamma) {
    if (!(gamma >= 1.0)) throw BadExponent("Schatten exponent needs gamma >= 1");
    const Level& lv = sigma.level;
    const double w = 1.0 / static_cast<double>(lv.m());
    double acc = 0.0;
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        double col = 0.0;
        for (std::int64_t x = 0; x < lv.m(); ++x)
            col += std::pow(std::abs(sigma.at(x, xi)), gamma);
        acc += col * w;  // = ||sigma(., xi)||_{L^gamma}^gamma
    }
    return std::pow(acc, 1.0 / gamma);
}

/// Hilbert-Schmidt identity: Frobenius^2 of the assembled operator against
/// sum_xi ||sigma(., xi)||_{L^2}^2. Exact at finite level up to roundoff.
struct HsIdentity {
    double lhs = 0.0;   // ||T_sigma||_HS^2
    double rhs = 0.0;   // sum of squared column L^2 norms
    double delta = 0.0;
};

inline HsIdentity hs_identity_check(const SymbolGrid& sigma,
                                    std::int64_t max_m = kDefaultMatrixCap) {
    HsIdentity r;
    r.lhs = assemble(sigma, max_m).frobenius_sq();
    const Level& lv = sigma.level;
    const double w = 1.0 / static_cast<double>(lv.m());
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        double col = 0.0;
        for (std::int64_t x = 0; x < lv.m(); ++x) col += std::norm(sigma.at(x, xi));
        r.rhs += col * w;
    }
    r.delta = std::abs(r.lhs - r.rhs);
    return r;
}

/// Dixmier functional sup_N (1/log(1+N)) sum_{k<=N} s_k with the partial-sum
/// table; the sup over N in [1, M] is the finite-level value.
struct DixmierResult {
    struct Row {
        std::int64_t n;
        double partial_sum;
        double ratio;
    };
    double value = 0.0;
    std::vector<Row> table;
};

inline DixmierResult dixmier_functional(const SingularSpectrum& sp) {
    DixmierResult out;
    const std::int64_t m = static_cast<std::int64_t>(sp.s.size());
    double partial = m > 0 ? sp.s[0] : 0.0;
    for (std::int64_t n = 1; n <= m; ++n) {
        if (n < m) partial += sp.s[static_cast<std::size_t>(n)];
        const double ratio = partial / std::log(1.0 + static_cast<double>(n));
        out.table.push_back({n, partial, ratio});
        out.value = std::max(out.value, ratio);
    }
    return out;
}

/// Lorentz (r,w)-type functional (sum_k [k^{1/r-1/w} s_k]^w)^{1/w}, the sum
/// shifted to k = 1, 2, ... (k^{1/r-1/w} is undefined at k = 0).
inline double lorentz_norm(const SingularSpectrum& sp, double r, double w) {
    if (!(r > 0.0) || !(w > 0.0) || std::isinf(w))
        throw BadExponent("Lorentz exponents need finite r, w > 0");
    const double e = 1.0 / r - 1.0 / w;
    double acc = 0.0;
    for (std::size_t k = 0; k < sp.s.size(); ++k)
        acc += std::pow(std::pow(static_cast<double>(k + 1), e) * sp.s[k], w);
    return std::pow(acc, 1.0 / w);
}

/// gamma-nuclear certificate sum_xi ||sigma(., xi)||_{L^{r2}}^gamma; the rank-M
/// representation f |-> sum_xi f^(xi) sigma(., xi) chi_xi realizes it.
inline double nuclear_bound(const SymbolGrid& sigma, double gamma, double r2) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw BadExponent("nuclear exponent needs 0 < gamma <= 1");
    if (!(r2 >= 1.0)) throw BadExponent("target norm needs r2 >= 1");
    const Level& lv = sigma.level;
    GridFunction col = GridFunction::zeros(lv);
    double acc = 0.0;
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        for (std::int64_t x = 0; x < lv.m(); ++x) col.v[static_cast<std::size_t>(x)] = sigma.at(x, xi);
        acc += std::pow(lr_norm(col, r2), gamma);
    }
    return acc;
}

// --- compactness: the distance bound to finite-rank operators ---------------

/// Per-shell sup table j -> max_{||xi|| = p^j} ||sigma(., xi)||_{L^inf}; the
/// outermost-shell value is the finite-level distance estimate.
struct GohbergTable {
    std::vector<double> shell_sup;  // indexed by shell 0..N
    double d_estimate = 0.0;
};

inline GohbergTable gohberg_dsigma(const SymbolGrid& sigma) {
    const Level& lv = sigma.level;
    GohbergTable t;
    t.shell_sup.assign(static_cast<std::size_t>(lv.max_shell()) + 1, 0.0);
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        double sup = 0.0;
        for (std::int64_t x = 0; x < lv.m(); ++x)
            sup = std::max(sup, std::abs(sigma.at(x, xi)));
        auto& cell = t.shell_sup[static_cast<std::size_t>(lv.dual_shell(xi))];
        cell = std::max(cell, sup);
    }
    t.d_estimate = t.shell_sup.back();
    return t;
}

/**
 * Probes the compactness distance bound: any K that annihilates the
 * outermost-shell characters satisfies ||(A - K) chi_xi|| = ||sigma(., xi)||,
 * hence opnorm(A - K) >= the largest outer-shell column norm. Draws `trials`
 * random such finite-rank K and reports the worst slack (negative = violated).
 */
struct GohbergProbeReport {
    double bound = 0.0;         // max outer-shell column L^2 norm
    double min_slack = 0.0;     // min over trials of opnorm(A-K) - bound
    double probe_dev = 0.0;     // max | ||(A-K)chi_xi|| - column norm |
    int trials = 0;
};

inline GohbergProbeReport gohberg_bound_check(const SymbolGrid& sigma, int trials,
                                              std::uint64_t seed = 20240801,
                                              std::int64_t max_m = kDefaultMatrixCap) {
    const Level& lv = sigma.level;
    const std::int64_t m = lv.m();
    OperatorMatrix A = assemble(sigma, max_m);

    const std::int64_t outer_begin = lv.shell_begin(lv.max_shell());
    const std::int64_t outer_size = m - outer_begin;

    GohbergProbeReport rep;
    rep.trials = trials;
    for (std::int64_t xi = outer_begin; xi < m; ++xi)
        rep.bound = std::max(rep.bound, A.column_norm(xi));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    rep.min_slack = std::numeric_limits<double>::infinity();
    std::vector<cplx> diff(A.a.size());

    for (int t = 0; t < trials; ++t) {
        // trial 0 probes K = 0; the rest draw K = sum u v^* with v supported
        // off the outer shell, so the outer columns vanish and
        // rank K < M - |outer shell|
        const std::int64_t max_rank = std::max<std::int64_t>(1, m - outer_size - 1);
        std::uniform_int_distribution<std::int64_t> rank_dist(1, max_rank);
        const std::int64_t rank = t == 0 ? 0 : rank_dist(rng);

        diff = A.a;
        for (std::int64_t k = 0; k < rank; ++k) {
            std::vector<cplx> u(static_cast<std::size_t>(m)), v(static_cast<std::size_t>(m));
            for (auto& z : u) z = {g(rng), g(rng)};
            for (std::int64_t i = 0; i < outer_begin; ++i)
                v[static_cast<std::size_t>(i)] = {g(rng), g(rng)};
            for (std::int64_t c = 0; c < outer_begin; ++c) {
                const cplx vc = std::conj(v[static_cast<std::size_t>(c)]);
                if (vc == cplx(0.0, 0.0)) continue;
                cplx* col = diff.data() + c * m;
                for (std::int64_t r = 0; r < m; ++r)
                    col[r] -= u[static_cast<std::size_t>(r)] * vc;
            }
        }

        // probe equality on the outer shell: columns of A-K equal columns of A
        for (std::int64_t xi = outer_begin; xi < m; ++xi) {
            double nrm = 0.0;
            const cplx* col = diff.data() + xi * m;
            for (std::int64_t r = 0; r < m; ++r) nrm += std::norm(col[r]);
            rep.probe_dev =
                std::max(rep.probe_dev, std::abs(std::sqrt(nrm) - A.column_norm(xi)));
        }

        const double opn = detail::dense_operator_norm(diff, m);
        rep.min_slack = std::min(rep.min_slack, opn - rep.bound);
    }
    return rep;
}

// --- s-number sandwich -------------------------------------------------------

/**
 * Comparison of singular values against the non-increasing column L^2 norms
 * c_k of the symbol. Reports the per-index gaps s_k - c_k, the count of
 * indices violating s_k >= c_k - tol, and the largest ratio s_k / c_k (the
 * finite-level stand-in for the equivalence constant). For multipliers also
 * checks s_k = c_k.
 */
struct SandwichReport {
    std::vector<double> s;  // singular values, descending
    std::vector<double> c;  // column norms, descending
    double min_gap = 0.0;   // min_k (s_k - c_k)
    std::int64_t violations = 0;
    double max_ratio = 0.0;
    bool is_multiplier = false;
    double multiplier_dev = 0.0;  // max |s_k - c_k| when diagonal
};

inline SandwichReport sandwich_check(const OperatorMatrix& A, const SymbolGrid& sigma,
                                     double tol = 1e-10) {
    if (!A.level.same_level(sigma.level))
        throw LevelMismatch("operator and symbol live on different levels");
    const Level& lv = A.level;
    const std::int64_t m = lv.m();

    SandwichReport rep;
    rep.s = detail::dense_singular_values(A.a, m);
    const double w = 1.0 / static_cast<double>(m);
    rep.c.reserve(static_cast<std::size_t>(m));
    bool multiplier = true;
    for (std::int64_t xi = 0; xi < m; ++xi) {
        double col = 0.0;
        for (std::int64_t x = 0; x < m; ++x) col += std::norm(sigma.at(x, xi));
        rep.c.push_back(std::sqrt(col * w));
        for (std::int64_t x = 1; x < m && multiplier; ++x)
            if (std::abs(sigma.at(x, xi) - sigma.at(0, xi)) > 1e-14) multiplier = false;
    }
    std::sort(rep.c.begin(), rep.c.end(), std::greater<>());

    rep.min_gap = std::numeric_limits<double>::infinity();
    for (std::int64_t k = 0; k < m; ++k) {
        const double gap = rep.s[static_cast<std::size_t>(k)] - rep.c[static_cast<std::size_t>(k)];
        rep.min_gap = std::min(rep.min_gap, gap);
        if (gap < -tol) ++rep.violations;
        if (rep.c[static_cast<std::size_t>(k)] > 1e-300)
            rep.max_ratio = std::max(
                rep.max_ratio, rep.s[static_cast<std::size_t>(k)] / rep.c[static_cast<std::size_t>(k)]);
    }
    rep.is_multiplier = multiplier;
    if (multiplier) {
        for (std::int64_t k = 0; k < m; ++k)
            rep.multiplier_dev = std::max(
                rep.multiplier_dev,
                std::abs(rep.s[static_cast<std::size_t>(k)] - rep.c[static_cast<std::size_t>(k)]));
    }
    return rep;
}

// --- Fredholm spectrum clouds -------------------------------------------------

/**
 * Nested symbol-range clouds A_n = {sigma(x, xi) : shell(xi) >= n}; for n >= 1
 * this is the ||xi|| >= p^n tail, n = 0 includes the whole grid. The sample
 * sets are deduplicated; successive Hausdorff distances measure stabilization
 * toward the Fredholm spectrum.
 */
struct FredholmCloud {
    Level level;
    std::vector<int> cutoffs;
    std::vector<std::vector<cplx>> clouds;          // deduplicated samples per cutoff
    std::vector<double> successive_hausdorff;       // d(A_{n_i}, A_{n_{i+1}})
};

inline double hausdorff_distance(std::span<const cplx> a, std::span<const cplx> b) {
    if (a.empty() || b.empty())
        return a.empty() && b.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    auto one_sided = [](std::span<const cplx> from, std::span<const cplx> to) {
        double worst = 0.0;
        for (const cplx& z : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const cplx& w : to) best = std::min(best, std::abs(z - w));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_sided(a, b), one_sided(b, a));
}

inline FredholmCloud fredholm_cloud(const SymbolGrid& sigma, std::span<const int> n_list) {
    const Level& lv = sigma.level;
    FredholmCloud out{lv, {n_list.begin(), n_list.end()}, {}, {}};
    for (int n : n_list) {
        std::vector<cplx> cloud;
        for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
            if (lv.dual_shell(xi) < n) continue;
            for (std::int64_t x = 0; x < lv.m(); ++x) cloud.push_back(sigma.at(x, xi));
        }
        std::sort(cloud.begin(), cloud.end(), [](const cplx& a, const cplx& b) {
            return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
        });
        cloud.erase(std::unique(cloud.begin(), cloud.end()), cloud.end());
        out.clouds.push_back(std::move(cloud));
    }
    for (std::size_t i = 0; i + 1 < out.clouds.size(); ++i)
        out.successive_hausdorff.push_back(hausdorff_distance(out.clouds[i], out.clouds[i + 1]));
    return out;
}

// --- eigenvalue counting -------------------------------------------------------

/// N(t) table over a threshold grid and the log-log least-squares slope.
/// Counting uses a pinned relative slack (1e-9) so shell-aligned thresholds
/// absorb eigensolver roundoff.
struct WeylResult {
    struct Row {
        double t;
        std::int64_t count;
    };
    std::vector<Row> table;
    double slope = 0.0;
    bool slope_valid = false;
};

inline WeylResult weyl_count(const EigenSpectrum& spec, std::span<const double> t_grid,
                             double rel_tol = 1e-9) {
    if (t_grid.empty()) throw EmptyGrid("weyl_count needs a non-empty threshold grid");
    WeylResult out;
    for (double t : t_grid) {
        std::int64_t count = 0;
        for (const cplx& z : spec.lambda)
            if (std::abs(z) <= t * (1.0 + rel_tol)) ++count;
        out.table.push_back({t, count});
    }
    // least squares of log N against log t over rows with t > 0, N > 0
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::int64_t n = 0;
    for (const auto& row : out.table) {
        if (row.t <= 0.0 || row.count <= 0) continue;
        const double x = std::log(row.t), y = std::log(static_cast<double>(row.count));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    const double det = static_cast<double>(n) * sxx - sx * sx;
    if (n >= 2 && std::abs(det) > 1e-12) {
        out.slope = (static_cast<double>(n) * sxy - sx * sy) / det;
        out.slope_valid = true;
    }
    return out;
}

/// Shell-aligned thresholds t_j = (shell norm)^s, j = 0..N.
inline std::vector<double> shell_aligned_grid(const Level& lv, double s) {
    std::vector<double> t;
    for (int j = 0; j <= lv.max_shell(); ++j) {
        const std::int64_t c = lv.shell_begin(j);
        if (c >= lv.m()) break;
        t.push_back(std::pow(lv.dual_bracket(c), s));
    }
    return t;
}

// --- sectoriality ----------------------------------------------------------------

/// Minimal covering arc of the arguments of sigma(x, xi) over shells >=
/// shell_min, zeros excluded and counted separately. Sectorial iff the arc
/// width is strictly below pi/2.
struct SectorialResult {
    bool sectorial = false;
    double theta1 = 0.0;  // arc start in [0, 2 pi)
    double theta2 = 0.0;  // arc end, theta2 >= theta1
    double width = 0.0;
    std::int64_t zeros = 0;
    std::int64_t samples = 0;
};

inline SectorialResult sectorial_check(const SymbolGrid& sigma, int shell_min) {
    const Level& lv = sigma.level;
    std::vector<double> args;
    SectorialResult out;
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        if (lv.dual_shell(xi) < shell_min) continue;
        for (std::int64_t x = 0; x < lv.m(); ++x) {
            const cplx z = sigma.at(x, xi);
            if (z == cplx(0.0, 0.0)) {
                ++out.zeros;
                continue;
            }
            double a = std::arg(z);
            if (a < 0) a += 2.0 * M_PI;
            args.push_back(a);
            ++out.samples;
        }
    }
    if (args.empty()) return out;

    std::sort(args.begin(), args.end());
    args.erase(std::unique(args.begin(), args.end()), args.end());
    if (args.size() == 1) {
        out.theta1 = out.theta2 = args[0];
        out.width = 0.0;
        out.sectorial = true;
        return out;
    }
    // widest gap on the circle; its complement is the minimal covering arc
    double best_gap = 2.0 * M_PI - args.back() + args.front();
    std::size_t best_at = args.size() - 1;  // gap wraps after the last angle
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        const double gap = args[i + 1] - args[i];
        if (gap > best_gap) {
            best_gap = gap;
            best_at = i;
        }
    }
    out.width = 2.0 * M_PI - best_gap;
    out.theta1 = best_at + 1 < args.size() ? args[best_at + 1] : args.front();
    out.theta2 = out.theta1 + out.width;
    out.sectorial = out.width < M_PI / 2.0;
    return out;
}

// --- resolvent residual ------------------------------------------------------------

/// R = (T_sigma - lambda)^{-1} - T_{1/(sigma - lambda)} with the smoothing-style
/// norm table; SingularMatrix / SymbolZero when either inverse is unavailable.
inline std::pair<OperatorMatrix, OperatorNormTable> inverse_residual(
    const SymbolGrid& sigma, cplx lambda, std::span<const double> s_list = kDefaultResidualS,
    std::int64_t max_m = kDefaultMatrixCap) {
    const Level& lv = sigma.level;
    const std::int64_t m = lv.m();

    OperatorMatrix A = assemble(sigma, max_m);
    for (std::int64_t i = 0; i < m; ++i) A.at(i, i) -= lambda;
    std::vector<cplx> inv = detail::dense_inverse(A.a, m);

    SymbolGrid recip = SymbolGrid::zeros(lv, "1/(sigma - lambda)");
    for (std::size_t i = 0; i < sigma.a.size(); ++i) {
        const cplx d = sigma.a[i] - lambda;
        if (std::abs(d) < 1e-300)
            throw SymbolZero("sigma - lambda vanishes at a grid node");
        recip.a[i] = 1.0 / d;
    }

    OperatorMatrix R = OperatorMatrix::zeros(lv, "inverse_residual");
    OperatorMatrix B = assemble(recip, max_m);
    for (std::size_t i = 0; i < R.a.size(); ++i) R.a[i] = inv[i] - B.a[i];
    OperatorNormTable tbl = residual_norm_table(R, s_list);
    return {std::move(R), std::move(tbl)};
}

// --- L^r lower bound probing ---------------------------------------------------------

/// Certified lower bound for the L^r operator norm: the best ratio
/// ||Af||_r / ||f||_r over all character probes plus `trials` random probes.
inline double op_norm_lr_probe(const OperatorMatrix& A, double r, int trials,
                               std::uint64_t seed = 20240802) {
    if (!(r >= 1.0) && !std::isinf(r)) throw BadExponent("operator norm probe needs r >= 1");
    const Level& lv = A.level;
    const std::int64_t m = lv.m();
    double best = 0.0;

    SpectrumFunction delta = SpectrumFunction::zeros(lv);
    for (std::int64_t xi = 0; xi < m; ++xi) {
        delta.v.assign(static_cast<std::size_t>(m), cplx(0, 0));
        delta.v[static_cast<std::size_t>(xi)] = 1.0;
        GridFunction chi = inverse(delta);
        const double denom = lr_norm(chi, r);
        if (denom > 0) best = std::max(best, lr_norm(apply(A, chi), r) / denom);
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (int t = 0; t < trials; ++t) {
        GridFunction f = GridFunction::zeros(lv);
        for (auto& z : f.v) z = {g(rng), g(rng)};
        const double denom = lr_norm(f, r);
        if (denom > 0) best = std::max(best, lr_norm(apply(A, f), r) / denom);
    }
    return best;
}

}  // namespace spectra
