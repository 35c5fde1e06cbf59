#pragma once

#include <span>
#include <string>
#include <vector>

#include "spectra/linalg.hpp"
#include "spectra/symbol.hpp"

namespace spectra {

/**
 * The operator T_sigma in the character basis: A[eta, xi] = sigma^_x(eta - xi; xi),
 * the x-transform of the xi-column scattered along the shifted row. Rows and
 * columns are indexed in canonical dual order; storage is column-major.
 */
struct OperatorMatrix {
    Level level;
    std::vector<cplx> a;  // a[xi * M + eta]
    std::string provenance;

    cplx& at(std::int64_t row, std::int64_t col) {
        return a[static_cast<std::size_t>(col * level.m() + row)];
    }
    const cplx& at(std::int64_t row, std::int64_t col) const {
        return a[static_cast<std::size_t>(col * level.m() + row)];
    }

    static OperatorMatrix zeros(const Level& lv, std::string prov = {}) {
        return OperatorMatrix{lv,
                              std::vector<cplx>(static_cast<std::size_t>(lv.m() * lv.m())),
                              std::move(prov)};
    }

    static OperatorMatrix identity(const Level& lv) {
        OperatorMatrix out = zeros(lv, "identity");
        for (std::int64_t i = 0; i < lv.m(); ++i) out.at(i, i) = 1.0;
        return out;
    }

    double frobenius_sq() const {
        double acc = 0.0;
        for (const cplx& z : a) acc += std::norm(z);
        return acc;
    }

    /// l^2 norm of column xi; equals ||sigma(., xi)||_{L^2} by Parseval.
    double column_norm(std::int64_t xi) const {
        double acc = 0.0;
        const cplx* col = a.data() + xi * level.m();
        for (std::int64_t r = 0; r < level.m(); ++r) acc += std::norm(col[r]);
        return std::sqrt(acc);
    }
};

/// Quantizes a sampled symbol: per-column fast transform in x, rows scattered
/// at eta = zeta + xi. A pure multiplier assembles to an exact diagonal.
inline OperatorMatrix assemble(const SymbolGrid& sigma,
                               std::int64_t max_m = kDefaultMatrixCap) {
    const Level& lv = sigma.level;
    detail::check_grid_cap(lv, max_m);
    const std::int64_t m = lv.m();
    OperatorMatrix out = OperatorMatrix::zeros(lv, "assemble(" + sigma.provenance + ")");
    GridFunction col = GridFunction::zeros(lv);
    for (std::int64_t xi = 0; xi < m; ++xi) {
        std::copy_n(sigma.a.data() + xi * m, static_cast<std::size_t>(m), col.v.data());
        SpectrumFunction hat = forward(col);
        cplx* dst = out.a.data() + xi * m;
        for (std::int64_t zeta = 0; zeta < m; ++zeta)
            dst[lv.dual_add(zeta, xi)] = hat.v[static_cast<std::size_t>(zeta)];
    }
    return out;
}

/// T f = inverse(A . forward(f)).
inline GridFunction apply(const OperatorMatrix& A, const GridFunction& f) {
    if (!A.level.same_level(f.level))
        throw LevelMismatch("operator and function live on different levels");
    const std::int64_t m = A.level.m();
    SpectrumFunction phi = forward(f);
    SpectrumFunction out = SpectrumFunction::zeros(A.level);
    for (std::int64_t xi = 0; xi < m; ++xi) {
        const cplx w = phi.v[static_cast<std::size_t>(xi)];
        if (w == cplx(0.0, 0.0)) continue;
        const cplx* col = A.a.data() + xi * m;
        for (std::int64_t eta = 0; eta < m; ++eta)
            out.v[static_cast<std::size_t>(eta)] += col[eta] * w;
    }
    return inverse(out);
}

/// sigma_T(x, xi) = conj chi_xi(x) (T chi_xi)(x): the xi-column re-centred and
/// inverse-transformed. Exact inverse of assemble at finite level.
inline SymbolGrid extract_symbol(const OperatorMatrix& A) {
    const Level& lv = A.level;
    const std::int64_t m = lv.m();
    SymbolGrid out = SymbolGrid::zeros(lv, "extract(" + A.provenance + ")");
    SpectrumFunction hat = SpectrumFunction::zeros(lv);
    for (std::int64_t xi = 0; xi < m; ++xi) {
        const cplx* col = A.a.data() + xi * m;
        for (std::int64_t zeta = 0; zeta < m; ++zeta)
            hat.v[static_cast<std::size_t>(zeta)] = col[lv.dual_add(zeta, xi)];
        GridFunction g = inverse(hat);
        std::copy_n(g.v.data(), static_cast<std::size_t>(m), out.a.data() + xi * m);
    }
    return out;
}

/// Largest singular value of J_{s_to} A J_{-s_from} (bracket-scale diagonals):
/// the H^{s_from} -> H^{s_to} operator norm at this level.
inline double sobolev_opnorm(const OperatorMatrix& A, double s_from, double s_to) {
    const Level& lv = A.level;
    const std::int64_t m = lv.m();
    std::vector<cplx> scaled(A.a.size());
    std::vector<double> row_w(static_cast<std::size_t>(m));
    for (std::int64_t r = 0; r < m; ++r)
        row_w[static_cast<std::size_t>(r)] = std::pow(lv.dual_bracket(r), s_to);
    for (std::int64_t c = 0; c < m; ++c) {
        const double cw = std::pow(lv.dual_bracket(c), -s_from);
        const cplx* src = A.a.data() + c * m;
        cplx* dst = scaled.data() + c * m;
        for (std::int64_t r = 0; r < m; ++r) dst[r] = src[r] * row_w[static_cast<std::size_t>(r)] * cw;
    }
    return detail::dense_operator_norm(scaled, m);
}

/// L^2 -> H^s operator norms of a residual, one row per s.
struct OperatorNormTable {
    std::vector<double> s_values;
    std::vector<double> norms;
};

inline OperatorNormTable residual_norm_table(const OperatorMatrix& R,
                                             std::span<const double> s_list) {
    OperatorNormTable t;
    for (double s : s_list) {
        t.s_values.push_back(s);
        t.norms.push_back(sobolev_opnorm(R, 0.0, s));
    }
    return t;
}

inline const double kDefaultResidualS[] = {0.0, 1.0, 2.0};

/// R = T_{sigma1} T_{sigma2} - T_{sigma1 sigma2}; the composition defect.
/// Zero exactly when sigma2 is a multiplier or either symbol is constant.
inline std::pair<OperatorMatrix, OperatorNormTable> compose_residual(
    const SymbolGrid& s1, const SymbolGrid& s2,
    std::span<const double> s_list = kDefaultResidualS,
    std::int64_t max_m = kDefaultMatrixCap) {
    if (!s1.level.same_level(s2.level))
        throw LevelMismatch("symbols live on different levels");
    const Level& lv = s1.level;
    const std::int64_t m = lv.m();

    OperatorMatrix A = assemble(s1, max_m), B = assemble(s2, max_m);
    SymbolGrid prod = SymbolGrid::zeros(lv, "(" + s1.provenance + ")*(" + s2.provenance + ")");
    for (std::size_t i = 0; i < prod.a.size(); ++i) prod.a[i] = s1.a[i] * s2.a[i];
    OperatorMatrix AB = assemble(prod, max_m);

    OperatorMatrix R = OperatorMatrix::zeros(lv, "compose_residual");
    {
        detail::EMap Am = detail::matrix_view(A.a, m), Bm = detail::matrix_view(B.a, m);
        Eigen::MatrixXcd prodm = Am * Bm;
        for (std::int64_t i = 0; i < m * m; ++i)
            R.a[static_cast<std::size_t>(i)] = prodm.data()[i] - AB.a[static_cast<std::size_t>(i)];
    }
    OperatorNormTable tbl = residual_norm_table(R, s_list);
    return {std::move(R), std::move(tbl)};
}

/// R = (T_sigma)^* - T_{conj sigma}; zero exactly for multipliers and for
/// real x-only symbols.
inline std::pair<OperatorMatrix, OperatorNormTable> adjoint_residual(
    const SymbolGrid& s, std::span<const double> s_list = kDefaultResidualS,
    std::int64_t max_m = kDefaultMatrixCap) {
    const Level& lv = s.level;
    const std::int64_t m = lv.m();
    OperatorMatrix A = assemble(s, max_m);
    SymbolGrid conj_s = SymbolGrid::zeros(lv, "conj(" + s.provenance + ")");
    for (std::size_t i = 0; i < s.a.size(); ++i) conj_s.a[i] = std::conj(s.a[i]);
    OperatorMatrix B = assemble(conj_s, max_m);

    OperatorMatrix R = OperatorMatrix::zeros(lv, "adjoint_residual");
    for (std::int64_t c = 0; c < m; ++c)
        for (std::int64_t r = 0; r < m; ++r)
            R.at(r, c) = std::conj(A.at(c, r)) - B.at(r, c);
    OperatorNormTable tbl = residual_norm_table(R, s_list);
    return {std::move(R), std::move(tbl)};
}

}  // namespace spectra
