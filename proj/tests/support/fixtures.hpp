#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "dscat/models.hpp"
#include "dscat/resonances.hpp"

namespace dscat::testing {

using Rng = std::mt19937_64;

inline Mat random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = cplx(nd(rng), nd(rng));
    return m;
}

inline Mat random_hermitian(int d, Rng& rng, double scale = 1.0) {
    const Mat a = random_matrix(d, d, rng, scale);
    return 0.5 * (a + a.adjoint());
}

inline Vec random_unit(int d, Rng& rng) {
    Vec u = random_matrix(d, 1, rng).col(0);
    return u / u.norm();
}

inline int uniform_int(int lo, int hi, Rng& rng) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Generic dissipative system: H0, V Hermitian, C of random rank in [1, d].
inline DissipativeSystem random_system(int d, Rng& rng) {
    const Mat h0 = random_hermitian(d, rng, 1.0 / std::sqrt(static_cast<double>(d)));
    const Mat v = random_hermitian(d, rng, 0.3 / std::sqrt(static_cast<double>(d)));
    const int r = uniform_int(1, d, rng);
    const Mat c = random_matrix(r, d, rng, 0.6 / std::sqrt(static_cast<double>(d)));
    Mat cc = Mat::Zero(d, d);
    cc.topRows(r) = c;
    return build_matrix_system(h0, v, cc);
}

// Dissipative system with k eigenvectors of H_V planted in ker C, so H has
// k real eigenvalues (bound states) and d − k decaying modes.
inline DissipativeSystem system_with_bound_states(int d, int k, Rng& rng) {
    const Mat hv = random_hermitian(d, rng, 1.0 / std::sqrt(static_cast<double>(d)));
    Eigen::SelfAdjointEigenSolver<Mat> es(hv);
    std::vector<int> idx(d);
    for (int i = 0; i < d; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    Mat q(d, k);
    for (int j = 0; j < k; ++j) q.col(j) = es.eigenvectors().col(idx[j]);
    const Mat proj = Mat::Identity(d, d) - q * q.adjoint();
    const Mat c = random_matrix(d, d, rng, 0.6 / std::sqrt(static_cast<double>(d))) * proj;
    const Mat h0 = random_hermitian(d, rng, 1.0 / std::sqrt(static_cast<double>(d)));
    return build_matrix_system(h0, hv - h0, c);
}

// Either kind, roughly half with bound states.
inline DissipativeSystem mixed_system(int d, Rng& rng) {
    if (d >= 2 && uniform_int(0, 1, rng) == 1) return system_with_bound_states(d, uniform_int(1, d / 2, rng), rng);
    return random_system(d, rng);
}

// diag(1, 2 − i): one bound state, one decaying mode with rate 1.
inline DissipativeSystem two_level_system() {
    Mat h0 = Mat::Zero(2, 2);
    h0(0, 0) = 1.0;
    h0(1, 1) = 2.0;
    Mat c = Mat::Zero(2, 2);
    c(1, 1) = 1.0;
    return build_matrix_system(h0, Mat::Zero(2, 2), c);
}

inline RVec site_profile(int n, int from, int to, double value) {
    RVec x = RVec::Zero(n);
    x.segment(from, to - from + 1).setConstant(value);
    return x;
}

// Well −0.6 on 13 sites with absorption 0.3 on the central 7: no real eigenvalues,
// used for the complete-scattering scenario.
inline DissipativeSystem complete_lattice(int n = 512) {
    const int c = n / 2 - 6;
    return build_lattice_system(n, 1.0, site_profile(n, c, c + 12, -0.6), site_profile(n, c + 3, c + 9, 0.3));
}

// Same geometry with weak absorption (0.02 on 6 sites): singularity free.
inline DissipativeSystem weak_absorber_lattice(int n = 256) {
    const int c = n / 2 - 6;
    return build_lattice_system(n, 1.0, site_profile(n, c, c + 11, -0.6), site_profile(n, c + 3, c + 8, 0.02));
}

// Potential-free lattice with absorption w on 6 central sites.
inline DissipativeSystem absorbing_free_lattice(int n, double w) {
    return build_lattice_system(n, 1.0, RVec::Zero(n), site_profile(n, n / 2 - 3, n / 2 + 2, w));
}

// Pure absorber square well tuned (and dilated) to a real Jost zero at z₀ = −1.2,
// i.e. a spectral singularity at λ = 1.44.
inline TuneResult tuned_absorber() {
    return tune_real_resonance([](double w) { return square_well(0.0, w, 1.0); }, -1.2, {2.0, 4.0});
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace dscat::testing
