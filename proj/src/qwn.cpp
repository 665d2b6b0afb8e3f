#include "wickforge/qwn.hpp"

#include "wickforge/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace wickforge::qwn {

namespace {

// Per-sample quantities of the translated path at time s.
struct Slice {
    Eigen::VectorXd Y;   // z'^T M z' - tr M
    Eigen::VectorXd u;   // a^T M z'
    Eigen::VectorXd w;   // a^T z, the untranslated W_s^p
    double aMa = 0.0;
    double delta_sq = 0.0;
    double f = 0.0;
};

Slice slice(const gram::GramCache& cache, double p, double s, const TestFunction& f,
            const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Zp) {
    const auto& basis = cache.basis();
    const Eigen::MatrixXd M = smoothed_gram(cache.matrix_at(s), basis, p);
    const Eigen::VectorXd a = basis.powers(-p).cwiseProduct(basis.evaluate(s));
    const Eigen::VectorXd Ma = M * a;
    const double tr = M.trace();
    const int N = static_cast<int>(Z.cols());
    Slice out;
    out.Y.resize(N);
    out.u = Zp.transpose() * Ma;
    out.w = Z.transpose() * a;
    out.aMa = a.dot(Ma);
    out.delta_sq = a.squaredNorm();
    out.f = f(s);
    mc::parallel_for(N, [&](int begin, int end) {
        const auto block = Zp.middleCols(begin, end - begin);
        const Eigen::MatrixXd MZ = M * block;
        out.Y.segment(begin, end - begin) =
            block.cwiseProduct(MZ).colwise().sum().transpose().array() - tr;
    });
    return out;
}

// A + B + C per sample
Eigen::VectorXd ito_integrand(const ScalarFunction& phi, const Slice& sl) {
    Eigen::VectorXd out(sl.Y.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) {
        const double y = sl.Y[i];
        const double d1 = phi.derivative(1, y);
        const double d2 = phi.derivative(2, y);
        const double d3 = phi.derivative(3, y);
        const double two_u = 2.0 * sl.u[i];
        out[i] = d3 * two_u * two_u + 2.0 * sl.aMa * d2 + 2.0 * sl.f * d2 * two_u + sl.f * sl.f * d1;
    }
    return out;
}

double mean(const Eigen::VectorXd& v) {
    return mc::estimate(std::span<const double>(v.data(), static_cast<std::size_t>(v.size()))).mean;
}

mc::Estimate estimate(const Eigen::VectorXd& v) {
    return mc::estimate(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

}  // namespace

Eigen::MatrixXd smoothed_gram(const Eigen::MatrixXd& G, const basis::SpectralBasis& basis, double p) {
    const Eigen::VectorXd s = basis.powers(-p);
    return s.asDiagonal() * G * s.asDiagonal();
}

QwnProcess::QwnProcess(const gram::GramCache& cache, double t_, double p_)
    : t(t_), p(p_), G(cache.matrix_at(t_)), M(smoothed_gram(G, cache.basis(), p_)) {}

chaos::ChaosExpansion white_noise(const basis::SpectralBasis& basis, double t, int max_degree) {
    const Eigen::VectorXd xi = basis.evaluate(t);
    return chaos::ChaosExpansion::first_chaos(std::span<const double>(xi.data(), static_cast<std::size_t>(xi.size())),
                                              max_degree);
}

chaos::ChaosExpansion wick_square_wn(const basis::SpectralBasis& basis, double t, int max_degree) {
    const auto W = white_noise(basis, t, max_degree);
    return chaos::wick(W, W);
}

chaos::ChaosExpansion x_process(const gram::GramCache& cache, double t, int max_degree) {
    return chaos::ChaosExpansion::second_chaos(cache.matrix_at(t), max_degree).prune();
}

SquareCheck ito_square_check(const gram::GramCache& cache, double t, double p, int max_degree) {
    if (max_degree < 4) throw std::invalid_argument("the square check needs a degree cap of at least 4");
    const auto& basis = cache.basis();
    const QwnProcess proc(cache, t, p);
    const auto X = chaos::ChaosExpansion::second_chaos(proc.G, max_degree).prune();

    SquareCheck out{t, p, 0.0, 0.0, 0.0, 0.0, chaos::ChaosExpansion(basis.size(), max_degree),
                    chaos::ChaosExpansion(basis.size(), max_degree)};
    out.lhs = chaos::star_p(X, X, p) - chaos::wick(X, X);

    const Eigen::MatrixXd M2 = proc.M * proc.M;
    const Eigen::VectorXd up = basis.powers(p);
    const Eigen::MatrixXd B = 4.0 * (up.asDiagonal() * M2 * up.asDiagonal());
    out.rhs = chaos::ChaosExpansion::second_chaos(B, max_degree);
    out.rhs.add(chaos::MultiIndex{}, 2.0 * M2.trace());
    out.rhs.prune();

    out.constant_lhs = chaos::expectation(out.lhs);
    out.constant_rhs = chaos::expectation(out.rhs);
    out.discrepancy = chaos::max_abs_difference(out.lhs, out.rhs);
    for (const auto& term : out.rhs.terms()) out.rhs_scale = std::max(out.rhs_scale, std::abs(term.second));
    return out;
}

NormBound norm_integral_bound(const gram::GramCache& cache, double t, double p, int panels) {
    const auto& basis = cache.basis();
    auto integrand = [&](double s) { return chaos::norm(wick_square_wn(basis, s, 2), -p); };
    NormBound out;
    out.t = t;
    out.p = p;
    if (t > 0.0) {
        out.integral = quadrature::integrate(integrand, 0.0, t, 2 * panels);
        out.quad_error = std::abs(out.integral - quadrature::integrate(integrand, 0.0, t, panels));
    }
    out.trace_form = std::sqrt(2.0) * QwnProcess(cache, t, p).M.trace();
    out.bound = std::sqrt(2.0) * basis.spectral_sum(p);
    return out;
}

ItoReport ito_formula_check(const ScalarFunction& phi, const gram::GramCache& cache, double p,
                            double t, const TestFunction& f, const mc::PathEnsemble& ensemble,
                            const ItoSettings& settings) {
    if (!(p > 1.0)) throw std::invalid_argument("the Ito-type formula is checked for p > 1 only");
    if (!(t > 0.0)) throw std::invalid_argument("the Ito-type formula check needs t > 0");
    const auto& basis = cache.basis();
    const int K = basis.size();
    if (f.size() != K || ensemble.dimension() != K) {
        throw std::invalid_argument("test function, ensemble and basis must share K");
    }
    const Eigen::MatrixXd& Z = ensemble.matrix();
    const Eigen::MatrixXd Zp = Z.colwise() + basis.powers(p).cwiseProduct(f.coeffs());
    const int N = ensemble.samples();

    ItoReport out;
    out.t = t;
    out.p = p;

    auto time_integral = [&](int n) {
        const auto& rule = quadrature::gauss_legendre(n);
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(N);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const double s = 0.5 * t * (1.0 + rule.nodes[i]);
            acc += (0.5 * t * rule.weights[i]) * ito_integrand(phi, slice(cache, p, s, f, Z, Zp));
        }
        return acc;
    };
    const Eigen::VectorXd fine = time_integral(settings.nodes);
    const Eigen::VectorXd coarse = time_integral(std::max(1, settings.nodes / 2));

    const Slice end = slice(cache, p, t, f, Z, Zp);
    Eigen::VectorXd lhs(N);
    for (int i = 0; i < N; ++i) lhs[i] = phi(end.Y[i]);

    const double phi0 = phi(0.0);
    const auto paired = estimate((lhs.array() - phi0 - fine.array()).matrix());
    out.lhs = mean(lhs);
    out.rhs = phi0 + mean(fine);
    out.diff = out.lhs - out.rhs;
    out.mc_stderr = paired.std_error;
    out.quad_bound = std::abs(mean(fine) - mean(coarse)) + cache.error_bound();
    out.pass = std::abs(out.diff) <= 3.0 * (out.mc_stderr + out.quad_bound);

    const double h = settings.fd_step * t;
    for (int k = 1; k <= settings.fd_points; ++k) {
        FdPoint pt;
        pt.s = t * k / (settings.fd_points + 1);
        const Slice mid = slice(cache, p, pt.s, f, Z, Zp);
        auto values = [&](double s) {
            const Slice sl = slice(cache, p, s, f, Z, Zp);
            Eigen::VectorXd v(N);
            for (int i = 0; i < N; ++i) v[i] = phi(sl.Y[i]);
            return v;
        };
        const Eigen::VectorXd d1 = (values(pt.s + h) - values(pt.s - h)) / (2.0 * h);
        const Eigen::VectorXd d2 = (values(pt.s + 0.5 * h) - values(pt.s - 0.5 * h)) / h;
        const Eigen::VectorXd rich = (4.0 * d2 - d1) / 3.0;

        const Eigen::VectorXd integrand = ito_integrand(phi, mid);
        Eigen::VectorXd a(N), b(N), c(N), direct(N);
        for (int i = 0; i < N; ++i) {
            const double y = mid.Y[i];
            const double two_u = 2.0 * mid.u[i];
            a[i] = phi.derivative(3, y) * two_u * two_u + 2.0 * mid.aMa * phi.derivative(2, y);
            b[i] = 2.0 * mid.f * phi.derivative(2, y) * two_u;
            c[i] = mid.f * mid.f * phi.derivative(1, y);
            const double wf = mid.w[i] + mid.f;
            direct[i] = phi.derivative(1, y) * (wf * wf - mid.delta_sq);
        }
        pt.a = mean(a);
        pt.b = mean(b);
        pt.c = mean(c);
        pt.derivative = mean(integrand);
        pt.direct = mean(direct);
        pt.fd = mean(rich);
        pt.fd_bound = std::abs(mean(rich) - mean(d2));
        pt.sigma = estimate(integrand - rich).std_error;
        pt.pass = std::abs(pt.derivative - pt.fd) <= 3.0 * (pt.sigma + pt.fd_bound);
        out.fd.push_back(pt);
    }
    return out;
}

}  // namespace wickforge::qwn
