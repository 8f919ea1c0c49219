#include "dscat/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "dscat/linalg.hpp"

namespace dscat {

std::string to_string(ModeKind k) {
    switch (k) {
        case ModeKind::real: return "real";
        case ModeKind::decaying: return "decaying";
        case ModeKind::continuum: return "continuum";
    }
    return "unknown";
}

SpectralData eigendecompose_matrix(const Mat& a, double scale) {
    const Eigen::Index n = a.rows();
    if (scale < 0.0) scale = op_norm(a);
    Eigen::ComplexEigenSolver<Mat> es(a, true);
    if (es.info() != Eigen::Success) {
        std::ostringstream os;
        os << "eigendecompose: eigensolver did not converge (dimension " << n << ")";
        throw NumericalError(os.str());
    }
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    const Vec& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) {
        if (ev(i).real() != ev(j).real()) return ev(i).real() < ev(j).real();
        return ev(i).imag() < ev(j).imag();
    });

    SpectralData sd;
    sd.scale = scale;
    sd.eigenvalues.resize(n);
    sd.right_vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        sd.eigenvalues(k) = ev(order[k]);
        sd.right_vectors.col(k) = es.eigenvectors().col(order[k]).normalized();
    }
    sd.residuals.resize(n);
    const double denom = scale > 0.0 ? scale : 1.0;
    for (Eigen::Index k = 0; k < n; ++k)
        sd.residuals(k) =
            (a * sd.right_vectors.col(k) - sd.eigenvalues(k) * sd.right_vectors.col(k)).norm() / denom;

    const RVec sv = singular_values(sd.right_vectors);
    sd.vector_condition = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
    sd.condition_numbers = RVec::Constant(n, std::numeric_limits<double>::infinity());
    if (sd.vector_condition < 1e12) {
        sd.left_rows = sd.right_vectors.partialPivLu().inverse();
        for (Eigen::Index k = 0; k < n; ++k) sd.condition_numbers(k) = sd.left_rows.row(k).norm();
    }

    const double worst = sd.residuals.size() ? sd.residuals.maxCoeff() : 0.0;
    if (worst > 1e-8) {
        Eigen::Index at;
        sd.residuals.maxCoeff(&at);
        std::ostringstream os;
        os << "eigendecompose: residual " << worst << " exceeds 1e-8 near eigenvalue " << sd.eigenvalues(at);
        throw NumericalError(os.str());
    }
    return sd;
}

SpectralData eigendecompose(const DissipativeSystem& system, int max_dim) {
    if (system.dim() > max_dim) throw ValidationError("eigendecompose: dimension above configured maximum");
    SpectralData sd = eigendecompose_matrix(system.h(), system.h_norm());
    const double tol = 1e-8 * std::max(system.h_norm(), 1e-300);
    for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k) {
        if (sd.eigenvalues(k).imag() > 10.0 * tol + 1e-14) {
            std::ostringstream os;
            os << "eigendecompose: eigenvalue " << sd.eigenvalues(k) << " in the upper half-plane (not dissipative)";
            throw ValidationError(os.str());
        }
    }
    return sd;
}

Projector make_projector(Mat p, const Mat& h, std::string label) {
    Projector pr;
    pr.idempotency_defect = op_norm(p * p - p);
    pr.commutation_defect = op_norm(p * h - h * p);
    pr.trace = p.trace();
    pr.matrix = std::move(p);
    pr.label = std::move(label);
    return pr;
}

double default_riesz_radius(const SpectralData& sd, cplx lambda, double cluster_tol) {
    double nearest = std::numeric_limits<double>::infinity();
    double diam = 0.0;
    const auto& ev = sd.eigenvalues;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const double d = std::abs(ev(i) - lambda);
        if (d > cluster_tol) nearest = std::min(nearest, d);
        for (Eigen::Index j = i + 1; j < ev.size(); ++j) diam = std::max(diam, std::abs(ev(i) - ev(j)));
    }
    double r = std::isfinite(nearest) ? 0.5 * nearest : 0.5 * std::max(1.0, sd.scale);
    if (diam > 0.0) r = std::min(r, 0.25 * diam);
    return std::max(r, 10.0 * cluster_tol);
}

Projector riesz_projection(const Mat& h, const SpectralData& sd, cplx lambda, double radius, const RieszOptions& opt) {
    if (!(radius > 0.0)) throw ValidationError("riesz_projection: radius must be positive");
    const auto& ev = sd.eigenvalues;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (std::abs(std::abs(ev(i) - lambda) - radius) < 2.0 * radius * 1e-3) {
            std::ostringstream os;
            os << "riesz_projection: circle of radius " << radius << " around " << lambda
               << " passes too close to eigenvalue " << ev(i);
            throw ValidationError(os.str());
        }
    }
    const Eigen::Index n = h.rows();
    const Mat id = Mat::Identity(n, n);
    // sum over nodes of r e^{iθ} (z − H)^{-1}; the trapezoid weight is 1/N
    auto node_sum = [&](int count, int stride, int offset, int total) {
        Mat acc = Mat::Zero(n, n);
        for (int k = offset; k < total; k += stride) {
            const cplx w = radius * std::exp(I * (2.0 * PI * k / total));
            const Mat res = (lambda * id + w * id - h).partialPivLu().inverse();
            acc += w * res;
        }
        (void)count;
        return acc;
    };
    int nodes = opt.initial_nodes;
    Mat sum = node_sum(nodes, 1, 0, nodes);
    Mat p = sum / static_cast<double>(nodes);
    while (true) {
        const int next = 2 * nodes;
        sum += node_sum(nodes, 2, 1, next);
        Mat p2 = sum / static_cast<double>(next);
        const double delta = op_norm(p2 - p);
        p = std::move(p2);
        nodes = next;
        if (delta <= opt.tol) break;
        if (nodes >= opt.max_nodes) {
            std::ostringstream os;
            os << "riesz_projection: no convergence with " << nodes << " nodes (last change " << delta << ")";
            throw NumericalError(os.str());
        }
    }
    std::ostringstream label;
    label << "riesz(" << lambda.real() << (lambda.imag() < 0 ? "" : "+") << lambda.imag() << "i, r=" << radius
          << ", nodes=" << nodes << ")";
    Projector pr = make_projector(std::move(p), h, label.str());
    const double tr = pr.trace.real();
    if (std::abs(tr - std::round(tr)) > 1e-6 || std::abs(pr.trace.imag()) > 1e-6) {
        std::ostringstream os;
        os << "riesz_projection: trace " << pr.trace << " is not an integer multiplicity";
        throw NumericalError(os.str());
    }
    return pr;
}

Projector riesz_projection(const DissipativeSystem& system, cplx lambda, double radius, const RieszOptions& opt) {
    const SpectralData sd = eigendecompose(system);
    return riesz_projection(system.h(), sd, lambda, radius, opt);
}

namespace {

// rank with the gap test of jordan_order; returns -1 when ambiguous
int judged_rank(const RVec& s, double thr) {
    int r = 0;
    while (r < s.size() && s(r) >= thr) ++r;
    const double above = r > 0 ? s(r - 1) : std::numeric_limits<double>::infinity();
    const double below = r < s.size() ? s(r) : 0.0;
    if (above < 10.0 * below) return -1;
    return r;
}

double default_cluster_tol(double hnorm) { return 1e-6 * std::max(1.0, hnorm); }

}  // namespace

int jordan_order(const DissipativeSystem& system, cplx lambda) {
    const SpectralData sd = eigendecompose(system);
    const double ctol = std::max(default_cluster_tol(system.h_norm()), 1e-4 * std::max(1.0, system.h_norm()));
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < sd.eigenvalues.size(); ++i) dmin = std::min(dmin, std::abs(sd.eigenvalues(i) - lambda));
    if (dmin > ctol) throw ValidationError("jordan_order: lambda is not an eigenvalue");
    const double radius = default_riesz_radius(sd, lambda, ctol);
    const Projector p = riesz_projection(system.h(), sd, lambda, radius);
    const int mult = static_cast<int>(std::lround(p.trace.real()));
    const cplx center = (system.h() * p.matrix).trace() / static_cast<double>(mult);
    const int n = system.dim();
    const Mat shifted = system.h() - center * Mat::Identity(n, n);
    const double thr = 1e-7 * std::max(system.h_norm(), 1e-300);
    Mat m = p.matrix;
    for (int k = 1; k <= mult + 1; ++k) {
        m = shifted * m;
        const int r = judged_rank(singular_values(m), thr);
        if (r < 0) throw NumericalError("jordan_order: indeterminate rank");
        if (r == 0) return k;
    }
    throw NumericalError("jordan_order: nilpotent part did not vanish within the algebraic multiplicity");
}

Mat projector_range(const Mat& p) {
    if (p.size() == 0) return Mat(p.rows(), 0);
    Eigen::BDCSVD<Mat> svd(p, Eigen::ComputeThinU);
    const RVec& s = svd.singularValues();
    // nonzero singular values of a projector are >= 1
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > 0.5) ++r;
    return svd.matrixU().leftCols(r);
}

double extended_mode_rate_bound(const DissipativeSystem& system) {
    const double n = static_cast<double>(std::max<Eigen::Index>(system.dim(), 1));
    return 4.0 * system.cstar_c().trace().real() / n;
}

double auto_continuum_cut(const SpectralData& sd, double tol, double gap_ratio, std::string* note,
                          double extended_bound) {
    std::vector<double> b;
    for (Eigen::Index k = 0; k < sd.eigenvalues.size(); ++k)
        if (sd.eigenvalues(k).real() >= 0.0) b.push_back(std::max(0.0, -sd.eigenvalues(k).imag()));
    std::sort(b.begin(), b.end());
    if (b.empty() || b.back() <= tol) return tol;
    auto largest_gap = [&](double bound, std::size_t& at) {
        double best = 0.0;
        for (std::size_t i = b.size() / 2; i + 1 < b.size(); ++i) {
            if (bound > 0.0 && b[i] > bound) break;
            const double ratio = b[i + 1] / std::max(b[i], 1e-300);
            if (ratio > best) {
                best = ratio;
                at = i;
            }
        }
        return best;
    };
    std::ostringstream os;
    std::size_t at = 0;
    double cut;
    if (largest_gap(-1.0, at) >= gap_ratio) {
        cut = std::sqrt(std::max(b[at], 1e-300) * b[at + 1]);
        os << "continuum cut " << cut << " at decay-rate gap " << b[at] << " -> " << b[at + 1] << "; ";
    } else if (extended_bound > 0.0 && largest_gap(extended_bound, at) >= 2.0) {
        cut = std::sqrt(std::max(b[at], 1e-300) * b[at + 1]);
        os << "continuum cut " << cut << " at decay-rate gap " << b[at] << " -> " << b[at + 1]
           << " below the extended-mode bound " << extended_bound << "; ";
    } else {
        cut = b.back() * (1.0 + 1e-12);
        os << "no decay-rate gap above ratio " << gap_ratio << ": every mode with Re >= 0 treated as continuum; ";
    }
    if (note) *note = os.str();
    return std::max(cut, tol);
}

SubspaceDecomposition classify_subspaces(const DissipativeSystem& system, double tol_real) {
    ClassifyOptions opt;
    opt.tol_real = tol_real;
    return classify_subspaces(system, opt);
}

SubspaceDecomposition classify_subspaces(const DissipativeSystem& system, const ClassifyOptions& opt) {
    SubspaceDecomposition out;
    out.spectral = eigendecompose(system);
    const SpectralData& sd = out.spectral;
    const Eigen::Index n = system.dim();
    const double hn = std::max(system.h_norm(), 1e-300);
    const double tol = opt.tol_real > 0.0 ? opt.tol_real : 1e-8 * hn;
    const double ctol = opt.cluster_tol > 0.0 ? opt.cluster_tol : default_cluster_tol(hn);
    out.tol_real = tol;
    std::ostringstream notes;

    const bool lattice_like = system.model_tag() != ModelTag::matrix;
    double cut = 0.0;
    if (lattice_like && opt.continuum_cut != 0.0) {
        if (opt.continuum_cut > 0.0) {
            cut = opt.continuum_cut;
        } else {
            std::string note;
            cut = auto_continuum_cut(sd, tol, opt.gap_ratio, &note, extended_mode_rate_bound(system));
            notes << note;
        }
    }
    out.continuum_cut = cut;

    // kinds
    std::vector<ModeKind> kind(n, ModeKind::decaying);
    for (Eigen::Index k = 0; k < n; ++k) {
        const cplx z = sd.eigenvalues(k);
        const double b = -z.imag();
        if (lattice_like && cut > 0.0 && z.real() >= 0.0 && std::abs(b) <= cut) {
            kind[k] = ModeKind::continuum;
            out.continuum_indices.push_back(static_cast<int>(k));
            continue;
        }
        if (std::abs(b) <= tol) {
            kind[k] = ModeKind::real;
        } else if (std::abs(b) < 10.0 * tol) {
            std::ostringstream os;
            os << "classify_subspaces: ambiguous classification of eigenvalue " << z << " (tol_real " << tol << ")";
            throw NumericalError(os.str());
        }
    }

    // clusters among the discrete modes: close eigenvalues or nearly parallel eigenvectors
    std::vector<int> owner(n, -1);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (kind[k] == ModeKind::continuum || owner[k] >= 0) continue;
        EigenCluster cl;
        cl.indices.push_back(static_cast<int>(k));
        owner[k] = static_cast<int>(out.clusters.size());
        for (std::size_t q = 0; q < cl.indices.size(); ++q) {
            const int a = cl.indices[q];
            for (Eigen::Index j = 0; j < n; ++j) {
                if (owner[j] >= 0 || kind[j] == ModeKind::continuum) continue;
                const bool close = std::abs(sd.eigenvalues(a) - sd.eigenvalues(j)) <= ctol;
                const bool parallel =
                    std::abs(sd.right_vectors.col(a).dot(sd.right_vectors.col(j))) > 1.0 - 1e-6 &&
                    std::abs(sd.eigenvalues(a) - sd.eigenvalues(j)) <= 1e-3 * std::max(1.0, hn);
                if (close || parallel) {
                    owner[j] = owner[k];
                    cl.indices.push_back(static_cast<int>(j));
                }
            }
        }
        cplx c = 0.0;
        bool any_real = false, any_decay = false;
        for (int i : cl.indices) {
            c += sd.eigenvalues(i);
            (kind[i] == ModeKind::real ? any_real : any_decay) = true;
        }
        cl.center = c / static_cast<double>(cl.indices.size());
        if (any_real && any_decay)
            throw NumericalError("classify_subspaces: ambiguous classification (cluster mixes real and decaying modes)");
        cl.kind = any_real ? ModeKind::real : ModeKind::decaying;
        out.clusters.push_back(std::move(cl));
    }

    // cluster projections
    const bool eig_route = sd.diagonalizable(1e8);
    Mat pb = Mat::Zero(n, n), pp = Mat::Zero(n, n);
    for (const auto& cl : out.clusters) {
        Mat pc;
        if (eig_route) {
            pc = Mat::Zero(n, n);
            for (int i : cl.indices) pc += sd.right_vectors.col(i) * sd.left_rows.row(i);
        } else {
            const double r = default_riesz_radius(sd, cl.center, ctol + [&] {
                double spread = 0.0;
                for (int i : cl.indices) spread = std::max(spread, std::abs(sd.eigenvalues(i) - cl.center));
                return 2.0 * spread;
            }());
            pc = riesz_projection(system.h(), sd, cl.center, r).matrix;
        }
        (cl.kind == ModeKind::real ? pb : pp) += pc;
    }
    notes << (eig_route ? "cluster projections from the eigenvector basis; "
                        : "cluster projections by contour quadrature; ");

    const Mat& h = system.h();
    const Mat id = Mat::Identity(n, n);
    out.pi_b = make_projector(pb, h, "pi_b");
    out.pi_p = make_projector(pp, h, "pi_p");
    out.pi_pp = make_projector(pb + pp, h, "pi_pp");
    out.pi_pp_perp = make_projector(id - (pb + pp), h, "pi_pp_perp");
    out.basis_Hb = projector_range(pb);
    out.basis_Hp = projector_range(pp);
    out.basis_Hp_star = projector_range(pp.adjoint());
    const Mat q = orth_union(out.basis_Hb, out.basis_Hp);
    out.pi_perp_orth = id - q * q.adjoint();

    // Lemma checks on H_b, cluster by cluster
    const double hvn = std::max(op_norm(system.hv()), 1e-300);
    for (const auto& cl : out.clusters) {
        if (cl.kind != ModeKind::real) continue;
        Mat pc = Mat::Zero(n, n);
        if (eig_route) {
            for (int i : cl.indices) pc += sd.right_vectors.col(i) * sd.left_rows.row(i);
        }
        const Mat qc = eig_route ? projector_range(pc) : [&] {
            Mat cols(n, cl.indices.size());
            for (std::size_t j = 0; j < cl.indices.size(); ++j) cols.col(j) = sd.right_vectors.col(cl.indices[j]);
            return orth(cols, 1e-8);
        }();
        if (qc.cols() == 0) continue;
        out.lemma_c_defect = std::max(out.lemma_c_defect, op_norm(system.c() * qc));
        const double lam = cl.center.real();
        out.lemma_hv_defect = std::max(out.lemma_hv_defect, op_norm(system.hv() * qc - lam * qc) / hvn);
    }
    if (!out.continuum_indices.empty())
        notes << out.continuum_indices.size() << " box modes (continuum class); ";
    out.notes = notes.str();
    return out;
}

}  // namespace dscat
