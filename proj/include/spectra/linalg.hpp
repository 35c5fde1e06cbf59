#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spectra/errors.hpp"
#include "spectra/group.hpp"

namespace spectra::detail {

using EMat = Eigen::MatrixXcd;
using EMap = Eigen::Map<const EMat>;

/// Column-major M x M view over flat storage.
inline EMap matrix_view(const std::vector<cplx>& a, std::int64_t m) {
    return EMap(a.data(), m, m);
}

/// Singular values, descending. BDC for big blocks, Jacobi for small.
inline std::vector<double> dense_singular_values(const std::vector<cplx>& a, std::int64_t m) {
    EMap A = matrix_view(a, m);
    Eigen::VectorXd sv;
    if (m <= 32) {
        Eigen::JacobiSVD<EMat> svd(A);
        if (svd.info() != Eigen::Success)
            throw NumericalFailure("SVD did not converge");
        sv = svd.singularValues();
    } else {
        Eigen::BDCSVD<EMat> svd(A);
        if (svd.info() != Eigen::Success)
            throw NumericalFailure("SVD did not converge");
        sv = svd.singularValues();
    }
    return {sv.data(), sv.data() + sv.size()};
}

inline double dense_operator_norm(const std::vector<cplx>& a, std::int64_t m) {
    if (m == 0) return 0.0;
    return dense_singular_values(a, m).front();
}

/// Full complex spectrum, modulus-descending.
inline std::vector<cplx> dense_eigenvalues(const std::vector<cplx>& a, std::int64_t m) {
    EMap A = matrix_view(a, m);
    Eigen::ComplexEigenSolver<EMat> es(A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("eigenvalue iteration did not converge");
    std::vector<cplx> out(es.eigenvalues().data(), es.eigenvalues().data() + m);
    std::sort(out.begin(), out.end(),
              [](const cplx& x, const cplx& y) { return std::abs(x) > std::abs(y); });
    return out;
}

/// Dense inverse via full-pivot LU; throws SingularMatrix when rank-deficient.
inline std::vector<cplx> dense_inverse(const std::vector<cplx>& a, std::int64_t m) {
    EMap A = matrix_view(a, m);
    Eigen::FullPivLU<EMat> lu(A);
    if (!lu.isInvertible())
        throw SingularMatrix("matrix is singular at this level");
    EMat inv = lu.inverse();
    return {inv.data(), inv.data() + m * m};
}

}  // namespace spectra::detail
