#include "dscat/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace dscat {

namespace {

template <unsigned N>
QuadratureRule expand_gauss() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    QuadratureRule r;
    // boost stores the non-negative half; zero appears first for odd N
    for (std::size_t i = x.size(); i-- > 0;) {
        if (x[i] == 0.0) continue;
        r.x.push_back(-x[i]);
        r.w.push_back(w[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        r.x.push_back(x[i]);
        r.w.push_back(w[i]);
    }
    return r;
}

}  // namespace

const QuadratureRule& gauss_legendre(int n) {
    static const QuadratureRule g8 = expand_gauss<8>();
    static const QuadratureRule g16 = expand_gauss<16>();
    static const QuadratureRule g20 = expand_gauss<20>();
    static const QuadratureRule g32 = expand_gauss<32>();
    switch (n) {
        case 8: return g8;
        case 16: return g16;
        case 20: return g20;
        case 32: return g32;
        default: throw ValidationError("gauss_legendre: unsupported order " + std::to_string(n));
    }
}

const QuadratureRule& kronrod15() {
    static const QuadratureRule r = [] {
        using K = boost::math::quadrature::gauss_kronrod<double, 15>;
        QuadratureRule q;
        q.x.assign(K::abscissa().begin(), K::abscissa().end());
        q.w.assign(K::weights().begin(), K::weights().end());
        return q;
    }();
    return r;
}

const std::vector<double>& gauss7_embedded() {
    static const std::vector<double> w = [] {
        using G = boost::math::quadrature::gauss<double, 7>;
        std::vector<double> out(8, 0.0);
        for (std::size_t i = 0; i < 4; ++i) out[2 * i] = G::weights()[i];
        return out;
    }();
    return w;
}

QuadratureRule composite_gauss(double a, double b, int panels, int order) {
    const auto& g = gauss_legendre(order);
    QuadratureRule r;
    r.x.reserve(static_cast<std::size_t>(panels) * g.x.size());
    r.w.reserve(r.x.capacity());
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h, c = lo + 0.5 * h;
        for (std::size_t i = 0; i < g.x.size(); ++i) {
            r.x.push_back(c + 0.5 * h * g.x[i]);
            r.w.push_back(0.5 * h * g.w[i]);
        }
    }
    return r;
}

}  // namespace dscat
