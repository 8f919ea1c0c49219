#include "dscat/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "dscat/linalg.hpp"
#include "dscat/quadrature.hpp"

namespace dscat {

std::string to_string(ModelTag tag) {
    switch (tag) {
        case ModelTag::matrix: return "matrix";
        case ModelTag::lattice: return "lattice";
        case ModelTag::radial_discretized: return "radial-discretized";
    }
    return "unknown";
}

namespace {

bool all_finite(const Mat& m) { return m.allFinite(); }

// power iteration on A*A; adequate for tolerance scaling
double norm_estimate(const Mat& a) {
    if (a.rows() <= 64) return op_norm(a);
    Vec x = Vec::Ones(a.cols()) / std::sqrt(static_cast<double>(a.cols()));
    double s = 0.0;
    for (int it = 0; it < 200; ++it) {
        Vec y = a.adjoint() * (a * x);
        const double ny = y.norm();
        if (ny == 0.0) return 0.0;
        const double s_new = std::sqrt(ny);
        x = y / ny;
        if (std::abs(s_new - s) <= 1e-10 * s_new) return s_new;
        s = s_new;
    }
    return s;
}

}  // namespace

struct DissipativeSystem::Dense {
    std::once_flag once;
    Mat h0, v, c, cc, hv, h, h_adj;

    void finish() {
        cc = c.adjoint() * c;
        hv = h0 + v;
        h = hv - I * cc;
        h_adj = h.adjoint();
    }
};

DissipativeSystem::DissipativeSystem(Mat h0, Mat v, Mat c, double sym_defect)
    : n_(static_cast<int>(h0.rows())), dense_(std::make_shared<Dense>()), tag_(ModelTag::matrix),
      sym_defect_(sym_defect) {
    std::call_once(dense_->once, [&] {
        dense_->h0 = std::move(h0);
        dense_->v = std::move(v);
        dense_->c = std::move(c);
        dense_->finish();
    });
    c_norm_ = dense_->c.isZero(0.0) ? 0.0 : norm_estimate(dense_->c);
    h_norm_ = norm_estimate(dense_->h);
}

DissipativeSystem::DissipativeSystem(LatticeInfo lat, ModelTag tag)
    : n_(static_cast<int>(lat.v.size())), dense_(std::make_shared<Dense>()), tag_(tag), lattice_(std::move(lat)) {
    c_norm_ = std::sqrt(lattice_->w.maxCoeff());
    // power iteration with the banded product
    Vec x = Vec::Ones(n_) / std::sqrt(static_cast<double>(n_));
    for (int i = 0; i < n_; i += 2) x(i) = -x(i);
    double s = 0.0;
    for (int it = 0; it < 500; ++it) {
        Vec y = apply_h(x);
        Vec sub, diag, sup;
        bands(sub, diag, sup);
        // H* y from the conjugated bands
        Vec z = diag.conjugate().cwiseProduct(y);
        for (int i = 0; i + 1 < n_; ++i) {
            z(i) += std::conj(sub(i)) * y(i + 1);
            z(i + 1) += std::conj(sup(i)) * y(i);
        }
        const double nz = z.norm();
        if (nz == 0.0) break;
        const double s_new = std::sqrt(nz);
        x = z / nz;
        if (std::abs(s_new - s) <= 1e-9 * s_new) {
            s = s_new;
            break;
        }
        s = s_new;
    }
    h_norm_ = s;
}

const DissipativeSystem::Dense& DissipativeSystem::dense() const {
    std::call_once(dense_->once, [this] {
        const auto& lat = *lattice_;
        const double s = 1.0 / (lat.dx * lat.dx);
        Dense& d = *dense_;
        d.h0 = Mat::Zero(n_, n_);
        for (int i = 0; i < n_; ++i) {
            d.h0(i, i) = 2.0 * s;
            if (i + 1 < n_) d.h0(i, i + 1) = d.h0(i + 1, i) = -s;
        }
        d.v = Mat::Zero(n_, n_);
        d.c = Mat::Zero(n_, n_);
        d.v.diagonal() = lat.v.cast<cplx>();
        d.c.diagonal() = lat.w.cwiseSqrt().cast<cplx>();
        d.finish();
    });
    return *dense_;
}

const Mat& DissipativeSystem::h0() const { return dense().h0; }
const Mat& DissipativeSystem::v() const { return dense().v; }
const Mat& DissipativeSystem::c() const { return dense().c; }
const Mat& DissipativeSystem::h() const { return dense().h; }
const Mat& DissipativeSystem::h_adj() const { return dense().h_adj; }
const Mat& DissipativeSystem::hv() const { return dense().hv; }
const Mat& DissipativeSystem::cstar_c() const { return dense().cc; }

Vec DissipativeSystem::apply_h(const Vec& u) const {
    if (!lattice_) return dense().h * u;
    Vec sub, diag, sup;
    bands(sub, diag, sup);
    Vec y = diag.cwiseProduct(u);
    for (int i = 0; i + 1 < n_; ++i) {
        y(i) += sup(i) * u(i + 1);
        y(i + 1) += sub(i) * u(i);
    }
    return y;
}

void DissipativeSystem::bands(Vec& sub, Vec& diag, Vec& sup) const {
    if (!lattice_) throw ValidationError("bands: not a lattice model");
    const double s = 1.0 / (lattice_->dx * lattice_->dx);
    diag = (2.0 * s + lattice_->v.array()).cast<cplx>() - I * lattice_->w.cast<cplx>().array();
    sub = Vec::Constant(n_ - 1, -s);
    sup = sub;
}

DissipativeSystem DissipativeSystem::without_absorption() const {
    if (lattice_) return make_lattice_variant(*this, lattice_->v, RVec::Zero(lattice_->v.size()), tag_);
    return build_matrix_system(h0(), v(), Mat::Zero(c().rows(), c().cols()));
}

DissipativeSystem DissipativeSystem::kinetic() const {
    if (lattice_) {
        const auto n = lattice_->v.size();
        return make_lattice_variant(*this, RVec::Zero(n), RVec::Zero(n), tag_);
    }
    return build_matrix_system(h0(), Mat::Zero(dim(), dim()), Mat::Zero(c().rows(), c().cols()));
}

DissipativeSystem DissipativeSystem::with_scaled_absorption(double s) const {
    if (lattice_) return make_lattice_variant(*this, lattice_->v, lattice_->w * (s * s), tag_);
    return build_matrix_system(h0(), v(), c() * s);
}

DissipativeSystem build_matrix_system(const Mat& h0, const Mat& v, const Mat& c) {
    if (h0.rows() != h0.cols() || v.rows() != v.cols())
        throw ValidationError("build_matrix_system: h0 and v must be square");
    if (h0.rows() != v.rows() || c.cols() != h0.rows())
        throw ValidationError("build_matrix_system: dimension mismatch");
    if (h0.rows() == 0) throw ValidationError("build_matrix_system: empty system");
    if (!all_finite(h0) || !all_finite(v) || !all_finite(c))
        throw ValidationError("build_matrix_system: non-finite entries");
    const double defect = (h0 - h0.adjoint()).norm() / 2.0 + (v - v.adjoint()).norm() / 2.0;
    return DissipativeSystem(hermitian_part(h0), hermitian_part(v), c, defect);
}

DissipativeSystem build_lattice_system(int n, double dx, const RVec& v_samples, const RVec& w_samples,
                                       BoundaryCondition) {
    if (n < 16) throw ValidationError("build_lattice_system: n must be at least 16");
    if (!(dx > 0.0)) throw ValidationError("build_lattice_system: dx must be positive");
    if (v_samples.size() != n || w_samples.size() != n)
        throw ValidationError("build_lattice_system: sample sequences must have length n");
    if (!v_samples.allFinite() || !w_samples.allFinite())
        throw ValidationError("build_lattice_system: non-finite samples");
    if ((w_samples.array() < 0.0).any()) throw ValidationError("build_lattice_system: negative w sample");

    LatticeInfo info;
    info.dx = dx;
    info.v = v_samples;
    info.w = w_samples;
    for (int i = 0; i < n; ++i) {
        if (v_samples(i) != 0.0 || w_samples(i) != 0.0) {
            if (info.support_lo < 0) info.support_lo = i;
            info.support_hi = i;
        }
    }
    return DissipativeSystem(std::move(info), ModelTag::lattice);
}

DissipativeSystem make_lattice_variant(const DissipativeSystem& base, const RVec& v_samples, const RVec& w_samples,
                                       ModelTag tag) {
    if (!base.lattice()) throw ValidationError("make_lattice_variant: base is not a lattice model");
    DissipativeSystem s = build_lattice_system(base.dim(), base.lattice()->dx, v_samples, w_samples);
    s.tag_ = tag;
    return s;
}

Mat absorption_factor(const Mat& w) {
    if (w.rows() != w.cols()) throw ValidationError("absorption_factor: W must be square");
    Mat off = w;
    off.diagonal().setZero();
    if (off.isZero(0.0)) {
        Mat c = Mat::Zero(w.rows(), w.cols());
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            const double d = w(i, i).real();
            if (d < 0.0 || std::abs(w(i, i).imag()) > 0.0)
                throw ValidationError("absorption_factor: W has a negative diagonal entry");
            c(i, i) = std::sqrt(d);
        }
        return c;
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(w));
    const RVec& ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-12 * scale) throw ValidationError("absorption_factor: W is not positive semidefinite");
    RVec root = ev.cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

double dissipativity_defect(const DissipativeSystem& system, const Mat& samples) {
    double worst = 0.0;
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
        const Vec u = samples.col(j);
        const double n2 = u.squaredNorm();
        if (n2 == 0.0) continue;
        const double im = u.dot(system.h() * u).imag();  // dot conjugates the first argument
        const double cu = (system.c() * u).squaredNorm();
        worst = std::max(worst, std::abs(im + cu) / n2);
    }
    return worst;
}

HypothesisReport check_hypotheses(const DissipativeSystem& system, unsigned seed) {
    HypothesisReport rep;
    std::ostringstream notes;
    const int n = system.dim();

    if (system.lattice()) {
        rep.w_nonneg = (system.lattice()->w.array() >= 0.0).all();
    } else {
        const RVec ev = hermitian_eigenvalues(system.cstar_c());
        rep.w_nonneg = ev.size() == 0 || ev.minCoeff() >= -1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    }

    const RVec hv = hermitian_eigenvalues(system.hv());
    for (Eigen::Index i = 0; i < hv.size(); ++i) {
        if (hv(i) < 0.0)
            rep.hv_eigs_below_zero.push_back(hv(i));
        else
            ++rep.hv_nonneg_count;
    }
    rep.hv_neg_count = static_cast<int>(rep.hv_eigs_below_zero.size());

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Mat samples(n, 100 + n);
    for (int j = 0; j < 100; ++j) {
        for (int i = 0; i < n; ++i) samples(i, j) = cplx(nd(rng), nd(rng));
        samples.col(j).normalize();
    }
    samples.rightCols(n) = Mat::Identity(n, n);
    rep.dissipativity_defect = dissipativity_defect(system, samples);

    if (!rep.w_nonneg) notes << "W = C*C is not positive semidefinite; ";
    if (system.model_tag() == ModelTag::matrix) {
        if (rep.hv_nonneg_count > 0)
            notes << rep.hv_nonneg_count
                  << " eigenvalue(s) of H_V are >= 0: a finite matrix model has no continuum, so the "
                     "'strictly negative eigenvalues' hypothesis is not met; ";
    } else {
        notes << "eigenvalues of H_V >= 0 (" << rep.hv_nonneg_count
              << ") are read as the discretized continuum; ";
    }
    if (system.self_adjoint()) notes << "C = 0: self-adjoint system; ";
    if (system.symmetrization_defect() > 0.0)
        notes << "inputs symmetrized, defect " << system.symmetrization_defect() << "; ";
    rep.notes = notes.str();
    return rep;
}

// ---------------------------------------------------------------- radial models

RadialPotential free_potential(double R) {
    RadialPotential p = piecewise_potential({{0.0, R, 0.0, 0.0}});
    p.kind = "free";
    return p;
}

RadialPotential square_well(double v0, double w0, double R) {
    RadialPotential p = piecewise_potential({{0.0, R, v0, w0}});
    p.kind = "square-well";
    p.params = {{"v0", v0}, {"w0", w0}, {"R", R}};
    return p;
}

RadialPotential piecewise_potential(std::vector<RadialPiece> pieces) {
    if (pieces.empty()) throw ValidationError("piecewise_potential: no pieces");
    std::sort(pieces.begin(), pieces.end(), [](const auto& a, const auto& b) { return a.r0 < b.r0; });
    if (pieces.front().r0 != 0.0) throw ValidationError("piecewise_potential: pieces must start at r = 0");
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        if (!(pieces[i].r1 > pieces[i].r0)) throw ValidationError("piecewise_potential: empty piece");
        if (i + 1 < pieces.size() && std::abs(pieces[i].r1 - pieces[i + 1].r0) > 1e-14)
            throw ValidationError("piecewise_potential: pieces must be contiguous");
        if (pieces[i].w < 0.0) throw ValidationError("piecewise_potential: negative absorption");
    }
    RadialPotential p;
    p.pieces = pieces;
    p.support_radius = pieces.back().r1;
    for (std::size_t i = 0; i + 1 < pieces.size(); ++i) p.breakpoints.push_back(pieces[i].r1);
    auto lookup = [pieces](double r, bool want_v) {
        if (r < 0.0 || r > pieces.back().r1) return 0.0;
        for (const auto& pc : pieces)
            if (r <= pc.r1) return want_v ? pc.v : pc.w;
        return 0.0;
    };
    p.v_profile = [lookup](double r) { return lookup(r, true); };
    p.w_profile = [lookup](double r) { return lookup(r, false); };
    p.kind = "piecewise";
    return p;
}

RadialPotential dilate(const RadialPotential& pot, double s) {
    if (!(s > 0.0)) throw ValidationError("dilate: scale must be positive");
    RadialPotential out = pot;
    out.support_radius = pot.support_radius / s;
    for (double& b : out.breakpoints) b /= s;
    for (auto& pc : out.pieces) {
        pc.r0 /= s;
        pc.r1 /= s;
        pc.v *= s * s;
        pc.w *= s * s;
    }
    auto v = pot.v_profile, w = pot.w_profile;
    out.v_profile = [v, s](double r) { return s * s * v(s * r); };
    out.w_profile = [w, s](double r) { return s * s * w(s * r); };
    out.params["dilation"] = s * (pot.params.count("dilation") ? pot.params.at("dilation") : 1.0);
    return out;
}

RadialSystem build_radial_model(const RadialPotential& pot, const RadialGridSpec& grid, const RadialOdeSettings& ode) {
    const double R = pot.support_radius;
    if (!(R > 0.0)) throw ValidationError("build_radial_model: support radius must be positive");
    if (!pot.v_profile || !pot.w_profile) throw ValidationError("build_radial_model: missing profiles");

    std::vector<double> edges{0.0};
    for (double b : pot.breakpoints)
        if (b > 0.0 && b < R) edges.push_back(b);
    edges.push_back(R);
    std::sort(edges.begin(), edges.end());

    const auto& g = gauss_legendre(grid.nodes_per_panel);
    const int segs = static_cast<int>(edges.size()) - 1;
    int per_seg = std::max(1, (grid.min_nodes + segs * grid.nodes_per_panel - 1) / (segs * grid.nodes_per_panel));

    RadialSystem sys;
    sys.potential = pot;
    sys.ode = ode;
    for (int s = 0; s < segs; ++s) {
        const double a = edges[s], b = edges[s + 1];
        const double h = (b - a) / per_seg;
        for (int p = 0; p < per_seg; ++p) {
            const double c = a + (p + 0.5) * h;
            for (std::size_t i = 0; i < g.x.size(); ++i) {
                sys.nodes.push_back(c + 0.5 * h * g.x[i]);
                sys.weights.push_back(0.5 * h * g.w[i]);
            }
        }
    }
    bool is_free = true;
    for (double r : sys.nodes) {
        const double w = pot.w_profile(r);
        if (w < 0.0) throw ValidationError("build_radial_model: w_profile < 0 at r = " + std::to_string(r));
        if (w != 0.0 || pot.v_profile(r) != 0.0) is_free = false;
    }
    sys.is_free = is_free;
    return sys;
}

DissipativeSystem radial_to_lattice(const RadialSystem& radial, double dx, double box_length) {
    const int n = static_cast<int>(std::lround(box_length / dx));
    if (n < 16) throw ValidationError("radial_to_lattice: box too small for the spacing");
    RVec v(n), w(n);
    for (int j = 0; j < n; ++j) {
        const double r = (j + 1) * dx;
        v(j) = r <= radial.R() ? radial.potential.v_profile(r) : 0.0;
        w(j) = r <= radial.R() ? radial.potential.w_profile(r) : 0.0;
    }
    DissipativeSystem base = build_lattice_system(n, dx, v, w);
    return make_lattice_variant(base, v, w, ModelTag::radial_discretized);
}

}  // namespace dscat
