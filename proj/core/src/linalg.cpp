#include "dscat/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace dscat {

RVec singular_values(const Mat& a) {
    if (a.size() == 0) return RVec();
    if (std::min(a.rows(), a.cols()) <= 48) {
        Eigen::JacobiSVD<Mat> svd(a);
        return svd.singularValues();
    }
    Eigen::BDCSVD<Mat> svd(a);
    return svd.singularValues();
}

double op_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    return singular_values(a)(0);
}

double trace_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    return singular_values(a).sum();
}

Mat hermitian_part(const Mat& a) { return (a + a.adjoint()) / 2.0; }

Mat orth(const Mat& a, double rel_tol) {
    if (a.cols() == 0 || a.rows() == 0) return Mat(a.rows(), 0);
    Eigen::BDCSVD<Mat> svd(a, Eigen::ComputeThinU);
    const RVec& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return Mat(a.rows(), 0);
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > rel_tol * s(0)) ++r;
    return svd.matrixU().leftCols(r);
}

Mat orth_union(const Mat& a, const Mat& b, double rel_tol) {
    Mat ab(a.rows(), a.cols() + b.cols());
    ab << a, b;
    return orth(ab, rel_tol);
}

RVec principal_angle_sines(const Mat& qa, const Mat& qb) {
    if (qa.cols() != qb.cols()) {
        RVec out = RVec::Ones(std::max(qa.cols(), qb.cols()));
        return out;
    }
    if (qa.cols() == 0) return RVec();
    // (I - Qb Qb*) Qa, and the symmetric counterpart, for accuracy at small angles
    Mat ra = qa - qb * (qb.adjoint() * qa);
    Mat rb = qb - qa * (qa.adjoint() * qb);
    RVec sa = singular_values(ra);
    RVec sb = singular_values(rb);
    RVec out = sa.cwiseMax(sb);
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = std::min(out(i), 1.0);
    return out;
}

double max_principal_angle(const Mat& qa, const Mat& qb) {
    RVec s = principal_angle_sines(qa, qb);
    if (s.size() == 0) return 0.0;
    return std::asin(std::min(1.0, s.maxCoeff()));
}

RVec hermitian_eigenvalues(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

Mat tridiagonal_solve(const Vec& sub, const Vec& diag, const Vec& sup, const Mat& rhs) {
    const Eigen::Index n = diag.size();
    Vec c(n);
    Mat d = rhs;
    cplx beta = diag(0);
    if (beta == 0.0) throw NumericalError("tridiagonal_solve: zero pivot");
    c(0) = 0.0;
    d.row(0) /= beta;
    for (Eigen::Index i = 1; i < n; ++i) {
        c(i - 1) = sup(i - 1) / beta;
        beta = diag(i) - sub(i - 1) * c(i - 1);
        if (std::abs(beta) < 1e-300) throw NumericalError("tridiagonal_solve: zero pivot");
        d.row(i) = (d.row(i) - sub(i - 1) * d.row(i - 1)) / beta;
    }
    for (Eigen::Index i = n - 2; i >= 0; --i) d.row(i) -= c(i) * d.row(i + 1);
    return d;
}

}  // namespace dscat
