#pragma once

#include <vector>

#include "dscat/types.hpp"

namespace dscat {

// Largest singular value.
double op_norm(const Mat& a);
RVec singular_values(const Mat& a);
double trace_norm(const Mat& a);

Mat hermitian_part(const Mat& a);

// Orthonormal basis of the column span; columns with singular value below
// rel_tol * s_max are dropped.
Mat orth(const Mat& a, double rel_tol = 1e-10);

// Orthonormal basis of span(a) ∪ span(b).
Mat orth_union(const Mat& a, const Mat& b, double rel_tol = 1e-10);

// Sines of the principal angles between the spans of two orthonormal frames,
// largest first. Frames of different width report a right angle.
RVec principal_angle_sines(const Mat& qa, const Mat& qb);
double max_principal_angle(const Mat& qa, const Mat& qb);

// Hermitian eigenvalues, ascending.
RVec hermitian_eigenvalues(const Mat& a);

// Solves a tridiagonal system (sub, diag, super) for several right-hand sides.
// sub/sup have length n-1. No pivoting: intended for shifted lattice operators.
Mat tridiagonal_solve(const Vec& sub, const Vec& diag, const Vec& sup, const Mat& rhs);

}  // namespace dscat
