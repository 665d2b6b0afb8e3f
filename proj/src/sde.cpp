#include "wickforge/sde.hpp"

#include "wickforge/qwn.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>

namespace wickforge::sde {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 2>;  // (V, zeta)

namespace {

constexpr int kChunk = 1024;

void validate(const basis::SpectralBasis& basis, const Problem& problem, int ensemble_dim) {
    if (!(problem.p > 0.5)) throw std::invalid_argument("the SDE needs p > 1/2");
    if (!(problem.p > 1.0) && !problem.allow_low_p) {
        throw std::invalid_argument("p <= 1 is outside the path-continuity regime; set allow_low_p to override");
    }
    if (!(problem.t >= 0.0) || !std::isfinite(problem.t)) throw std::invalid_argument("t must be finite and >= 0");
    if (ensemble_dim != basis.size()) throw std::invalid_argument("ensemble dimension differs from K");
    if (problem.f && problem.f->size() != basis.size()) throw std::invalid_argument("test function size differs from K");
    if (!problem.drift.b) throw std::invalid_argument("drift has no evaluator");
    const double T = lifetime(basis, problem.p);
    if (problem.t >= T && !problem.allow_beyond_T) {
        std::ostringstream os;
        os << "t = " << problem.t << " is not below the life time T = " << T
           << "; set allow_beyond_T to integrate anyway";
        throw BeyondLifetime(os.str());
    }
}

Eigen::MatrixXd translated(const basis::SpectralBasis& basis, const Problem& problem,
                           const mc::PathEnsemble& ensemble) {
    if (!problem.f) return ensemble.matrix();
    return ensemble.matrix().colwise() + basis.powers(problem.p).cwiseProduct(problem.f->coeffs());
}

void check_finite(const State& x, int sample, double s) {
    if (!std::isfinite(x[0]) || !std::isfinite(x[1])) {
        std::ostringstream os;
        os << "non-finite ODE state for sample " << sample << " at s = " << s;
        throw std::runtime_error(os.str());
    }
}

int even_steps(double t, double step) {
    int n = std::max(2, static_cast<int>(std::ceil(t / step - 1e-9)));
    return n + (n % 2);
}

// RK4 on a uniform grid with the noise tabulated at half steps.
void solve_rk4(const gram::GramCache& cache, const Problem& problem, const Eigen::MatrixXd& Zp,
               const SolverConfig& config, Solution& out) {
    const auto& basis = cache.basis();
    const int K = basis.size();
    const int N = static_cast<int>(Zp.cols());
    const double t = problem.t;
    const int S = t > 0.0 ? even_steps(t, config.step) : 0;
    const double h = S > 0 ? t / S : 0.0;
    const int every = config.output_points > 0 ? std::max(1, S / config.output_points) : 1;

    Eigen::MatrixXd A(K, 2 * S + 1);
    Eigen::VectorXd dsq(2 * S + 1);
    const Eigen::VectorXd pw = basis.powers(-problem.p);
    for (int j = 0; j <= 2 * S; ++j) {
        A.col(j) = pw.cwiseProduct(basis.evaluate(0.5 * h * j));
        dsq[j] = A.col(j).squaredNorm();
    }
    out.grid.clear();
    for (int n = 0; n <= S; n += every) out.grid.push_back(n == S ? t : n * h);
    if (S % every != 0) out.grid.push_back(t);
    const int G = static_cast<int>(out.grid.size());
    const int R = std::min(config.record, N);
    out.V_paths.resize(R, G);
    out.zeta_paths.resize(R, G);
    out.samples.assign(static_cast<std::size_t>(N), {});
    out.mean_steps = S;

    const auto& drift = problem.drift;
    const double x0 = problem.x0;
    const double C = drift.C;

    mc::parallel_for(N, [&](int begin, int end) {
        const Eigen::MatrixXd W = Zp.middleCols(begin, end - begin).transpose() * A;
        odeint::runge_kutta4<State> stepper;
        for (int i = begin; i < end; ++i) {
            const int row = i - begin;
            auto sys = [&](const State& x, State& dx, double s) {
                const auto j = static_cast<Eigen::Index>(std::llround(2.0 * s / h));
                const double w = W(row, j);
                const double e = std::exp(x[1]);
                dx[0] = drift.b(x[0] * e) / e;
                dx[1] = w * w - dsq[j];
            };
            State x{x0, 0.0};
            SampleResult r;
            double drift_int = 0.0, noise_int = 0.0;
            double exp_int = 0.0;  // int e^{-zeta}
            double hJ = 0.0;       // int h(s) e^{-Cs}
            double prev_expm = 1.0, prev_hexp = std::abs(x0);
            double margin = std::numeric_limits<double>::infinity();
            int g = 0;
            for (int n = 0; n <= S; ++n) {
                const double s = n * h;
                if (n > 0) {
                    stepper.do_step(sys, x, (n - 1) * h, h);
                    check_finite(x, i, s);
                }
                const auto j = static_cast<Eigen::Index>(2 * n);
                const double w = W(row, j);
                const double U = x[0] * std::exp(x[1]);
                const double simpson = (n == 0 || n == S) ? 1.0 : (n % 2 ? 4.0 : 2.0);
                drift_int += simpson * drift.b(U);
                noise_int += simpson * U * (w * w - dsq[j]);
                // running Gronwall envelope, trapezoid in time
                const double expm = std::exp(-x[1]);
                if (n > 0) exp_int += 0.5 * h * (prev_expm + expm);
                const double hs = std::abs(x0) + C * exp_int;
                const double hexp = hs * std::exp(-C * s);
                if (n > 0) hJ += 0.5 * h * (prev_hexp + hexp);
                prev_expm = expm;
                prev_hexp = hexp;
                const double envelope = hs + C * std::exp(C * s) * hJ;
                margin = std::min(margin, envelope - std::abs(x[0]) + 1e-10 * std::max(1.0, envelope));
                if (g < G && (n % every == 0 || n == S) && std::abs(out.grid[static_cast<std::size_t>(g)] - s) < 0.5 * h) {
                    if (i < R) {
                        out.V_paths(i, g) = x[0];
                        out.zeta_paths(i, g) = x[1];
                    }
                    ++g;
                }
            }
            r.V = x[0];
            r.zeta = x[1];
            r.U = x[0] * std::exp(x[1]);
            r.drift_integral = drift_int * h / 3.0;
            r.noise_integral = noise_int * h / 3.0;
            r.residual = r.U - x0 - r.drift_integral - r.noise_integral;
            r.gronwall_margin = margin;
            out.samples[static_cast<std::size_t>(i)] = r;
        }
    }, kChunk);
}

// Adaptive Dormand-Prince.  The two integrals of the identity are carried as
// extra components so they share the step-size control.
void solve_rk45(const gram::GramCache& cache, const Problem& problem, const Eigen::MatrixXd& Zp,
                const SolverConfig& config, Solution& out) {
    using State4 = std::array<double, 4>;  // (V, zeta, int b, int U noise)
    const auto& basis = cache.basis();
    const int K = basis.size();
    const int N = static_cast<int>(Zp.cols());
    const double t = problem.t;
    const int points = config.output_points > 0 ? config.output_points : 100;
    out.grid.resize(static_cast<std::size_t>(points) + 1);
    for (int g = 0; g <= points; ++g) out.grid[static_cast<std::size_t>(g)] = g == points ? t : t * g / points;
    const int G = points + 1;
    const int R = std::min(config.record, N);
    out.V_paths.resize(R, G);
    out.zeta_paths.resize(R, G);
    out.samples.assign(static_cast<std::size_t>(N), {});

    const Eigen::VectorXd pw = basis.powers(-problem.p);
    const auto& drift = problem.drift;
    const double x0 = problem.x0;
    std::vector<double> steps(static_cast<std::size_t>(N), 0.0);

    mc::parallel_for(N, [&](int begin, int end) {
        Eigen::VectorXd xi(K);
        for (int i = begin; i < end; ++i) {
            const double* z = Zp.col(i).data();
            auto sys = [&](const State4& x, State4& dx, double s) {
                basis.evaluate(s, std::span<double>(xi.data(), static_cast<std::size_t>(K)));
                xi.array() *= pw.array();
                double w = 0.0;
                for (int k = 0; k < K; ++k) w += xi[k] * z[k];
                const double e = std::exp(x[1]);
                const double U = x[0] * e;
                const double bU = drift.b(U);
                const double noise = w * w - xi.squaredNorm();
                dx[0] = bU / e;
                dx[1] = noise;
                dx[2] = bU;
                dx[3] = U * noise;
            };
            SampleResult r;
            if (t == 0.0) {
                r.V = r.U = x0;
                for (int g = 0; g < G && i < R; ++g) out.V_paths(i, g) = x0, out.zeta_paths(i, g) = 0.0;
                out.samples[static_cast<std::size_t>(i)] = r;
                continue;
            }
            State4 x{x0, 0.0, 0.0, 0.0};
            State4 xs{};
            auto observer = [&](const State4& state, double s) {
                const auto g = static_cast<int>(std::lower_bound(out.grid.begin(), out.grid.end(), s) - out.grid.begin());
                check_finite({state[0], state[1]}, i, s);
                if (i < R) {
                    out.V_paths(i, g) = state[0];
                    out.zeta_paths(i, g) = state[1];
                }
                xs = state;
            };
            // controlled steps clipped to land on every output time, no interpolation
            const auto count = odeint::integrate_times(
                odeint::make_controlled(config.atol, config.rtol, odeint::runge_kutta_dopri5<State4>()), sys, x,
                out.grid.begin(), out.grid.end(), std::min(1e-3, t), observer);
            r.V = xs[0];
            r.zeta = xs[1];
            r.U = xs[0] * std::exp(xs[1]);
            r.drift_integral = xs[2];
            r.noise_integral = xs[3];
            r.residual = r.U - x0 - r.drift_integral - r.noise_integral;
            r.gronwall_margin = std::numeric_limits<double>::quiet_NaN();
            out.samples[static_cast<std::size_t>(i)] = r;
            steps[static_cast<std::size_t>(i)] = count;
        }
    }, 64);
    double total = 0.0;
    for (double s : steps) total += s;
    out.mean_steps = total / N;
}

std::vector<double> column(const std::vector<SampleResult>& samples, double SampleResult::*field) {
    std::vector<double> v;
    v.reserve(samples.size());
    for (const auto& s : samples) v.push_back(s.*field);
    return v;
}

double lambda_max(const Eigen::MatrixXd& M) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigenvalue solver failed");
    return eig.eigenvalues().maxCoeff();
}

// log det(I - c M) for symmetric M, or nullopt when I - c M is not positive definite
std::optional<double> log_det_shift(const Eigen::MatrixXd& M, double c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigenvalue solver failed");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < eig.eigenvalues().size(); ++k) {
        const double v = 1.0 - c * eig.eigenvalues()[k];
        if (!(v > 0.0)) return std::nullopt;
        acc += std::log(v);
    }
    return acc;
}

}  // namespace

DriftSpec DriftSpec::parse(const std::string& spec) {
    DriftSpec d;
    d.name = spec;
    if (spec == "zero" || spec == "0") {
        d.b = [](double) { return 0.0; };
        d.C = 0.0;
        d.linear = 0.0;
    } else if (spec == "id") {
        d.b = [](double y) { return y; };
        d.C = 1.0;
        d.linear = 1.0;
    } else if (spec == "tanh" || spec.starts_with("tanh:")) {
        double s = 1.0;
        if (spec.size() > 5) {
            try {
                s = std::stod(spec.substr(5));
            } catch (const std::exception&) {
                throw std::invalid_argument("bad drift scale in '" + spec + "'");
            }
        }
        if (!(s > 0.0)) throw std::invalid_argument("tanh drift scale must be positive");
        d.b = [s](double y) { return s * std::tanh(y); };
        d.C = s;
    } else {
        throw std::invalid_argument("unknown drift '" + spec + "' (expected zero, id, tanh or tanh:<s>)");
    }
    return d;
}

bool check_drift(const DriftSpec& drift, int pairs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 10.0);
    for (int i = 0; i < pairs; ++i) {
        const double x = normal(rng);
        const double y = normal(rng);
        const double slack = 1e-12 * (1.0 + std::abs(x) + std::abs(y));
        if (std::abs(drift.b(x) - drift.b(y)) > drift.C * std::abs(x - y) + slack) return false;
        if (std::abs(drift.b(x)) > drift.C * (1.0 + std::abs(x)) + slack) return false;
    }
    return true;
}

double lifetime(const basis::SpectralBasis& basis, double p) {
    return basis::lifetime_bound(basis.spectral_sum(p));
}

Solution solve_paths(const gram::GramCache& cache, const Problem& problem,
                     const mc::PathEnsemble& ensemble, const SolverConfig& config) {
    const auto& basis = cache.basis();
    validate(basis, problem, ensemble.dimension());
    const Eigen::MatrixXd Zp = translated(basis, problem, ensemble);
    Solution out;
    out.lifetime_T = lifetime(basis, problem.p);
    out.beyond_T = problem.t >= out.lifetime_T;
    if (config.method == Method::RK4) {
        solve_rk4(cache, problem, Zp, config, out);
    } else {
        solve_rk45(cache, problem, Zp, config, out);
    }
    // zeta_t against the quadratic form
    const Eigen::MatrixXd M = qwn::smoothed_gram(cache.matrix_at(problem.t), basis, problem.p);
    const double tr = M.trace();
    double worst = 0.0;
    for (int i = 0; i < ensemble.samples(); ++i) {
        const auto z = Zp.col(i);
        const double q = z.dot(M * z) - tr;
        worst = std::max(worst, std::abs(q - out.samples[static_cast<std::size_t>(i)].zeta));
        if (out.samples[static_cast<std::size_t>(i)].gronwall_margin < 0.0) ++out.gronwall_violations;
    }
    out.zeta_crosscheck = worst;
    return out;
}

STransform s_transform_solution(const gram::GramCache& cache, const Problem& problem,
                                const mc::PathEnsemble& ensemble, const SolverConfig& config) {
    const Solution sol = solve_paths(cache, problem, ensemble, config);
    const auto U = column(sol.samples, &SampleResult::U);
    const auto e = mc::estimate(U);
    STransform out;
    out.value = e.mean;
    out.std_error = e.std_error;
    const double sd = e.std_error * std::sqrt(static_cast<double>(e.samples));
    out.cv = e.mean != 0.0 ? sd / std::abs(e.mean) : (sd > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    out.variance_flag = out.cv > kVarianceFlagCV;
    return out;
}

IdentityReport verify_integral_identity(const gram::GramCache& cache, const Problem& problem,
                                        const mc::PathEnsemble& ensemble, int pathwise_samples,
                                        const SolverConfig& rk4, const SolverConfig& rk45) {
    IdentityReport out;
    SolverConfig c4 = rk4;
    c4.method = Method::RK4;
    const Solution sol = solve_paths(cache, problem, ensemble, c4);
    const auto eU = mc::estimate(column(sol.samples, &SampleResult::U));
    const auto eB = mc::estimate(column(sol.samples, &SampleResult::drift_integral));
    const auto eN = mc::estimate(column(sol.samples, &SampleResult::noise_integral));
    const auto eR = mc::estimate(column(sol.samples, &SampleResult::residual));
    out.s_transform = eU.mean;
    out.drift_term = eB.mean;
    out.noise_term = eN.mean;
    out.residual = eU.mean - problem.x0 - eB.mean - eN.mean;
    out.sigma = std::sqrt(eU.std_error * eU.std_error + eB.std_error * eB.std_error +
                          eN.std_error * eN.std_error);
    out.sigma_paired = eR.std_error;
    out.expectation_pass = std::abs(out.residual) <= 3.0 * out.sigma;
    out.gronwall_violations = sol.gronwall_violations;

    out.pathwise_samples = std::min(pathwise_samples, ensemble.samples());
    if (out.pathwise_samples > 0) {
        SolverConfig c45 = rk45;
        c45.method = Method::RK45;
        const Solution fine = solve_paths(cache, problem, ensemble.head(out.pathwise_samples), c45);
        for (const auto& s : fine.samples) out.pathwise_max = std::max(out.pathwise_max, std::abs(s.residual));
        out.pathwise_pass = out.pathwise_max <= 1e-8;
    }
    return out;
}

Agreement integrator_agreement(const gram::GramCache& cache, const Problem& problem,
                               const mc::PathEnsemble& ensemble, double tolerance, double rk4_step) {
    const double t = problem.t;
    const int S = even_steps(t, rk4_step);
    int points = 50;
    while (S % points != 0) --points;
    SolverConfig c4{Method::RK4, rk4_step};
    c4.record = ensemble.samples();
    c4.output_points = points;
    SolverConfig c45{Method::RK45};
    c45.record = ensemble.samples();
    c45.output_points = points;
    const Solution a = solve_paths(cache, problem, ensemble, c4);
    const Solution b = solve_paths(cache, problem, ensemble, c45);
    if (a.grid.size() != b.grid.size()) throw std::logic_error("output grids differ between integrators");
    Agreement out;
    out.samples = ensemble.samples();
    out.t_end = t;
    out.max_diff = (a.V_paths - b.V_paths).cwiseAbs().maxCoeff();
    out.pass = out.max_diff <= tolerance;
    return out;
}

ConvergenceStudy rk4_convergence(const gram::GramCache& cache, const Problem& problem,
                                 const mc::PathEnsemble& ensemble, std::vector<double> steps) {
    ConvergenceStudy out;
    out.steps = std::move(steps);
    for (double h : out.steps) {
        const Solution sol = solve_paths(cache, problem, ensemble, {Method::RK4, h});
        double worst = 0.0;
        for (const auto& s : sol.samples) worst = std::max(worst, std::abs(s.residual));
        out.residuals.push_back(worst);
    }
    for (std::size_t i = 1; i < out.residuals.size(); ++i) {
        out.orders.push_back(std::log2(out.residuals[i - 1] / out.residuals[i]) /
                             std::log2(out.steps[i - 1] / out.steps[i]));
    }
    return out;
}

AdaptednessReport adaptedness_check(const gram::GramCache& cache, const Problem& problem,
                                    const TestFunction& g, const mc::PathEnsemble& ensemble,
                                    const SolverConfig& config) {
    const auto& basis = cache.basis();
    const int K = basis.size();
    const TestFunction f = problem.f ? *problem.f : TestFunction(Eigen::VectorXd::Zero(K));
    if (g.size() != K) throw std::invalid_argument("g has the wrong number of coefficients");

    Problem base = problem;
    base.f = f;
    Problem shifted = problem;
    shifted.f = f + g;
    SolverConfig cfg = config;
    cfg.method = Method::RK4;
    cfg.record = ensemble.samples();
    const Solution s1 = solve_paths(cache, base, ensemble, cfg);
    const Solution s2 = solve_paths(cache, shifted, ensemble, cfg);

    const int N = ensemble.samples();
    std::vector<double> diff(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        diff[static_cast<std::size_t>(i)] = s2.samples[static_cast<std::size_t>(i)].U - s1.samples[static_cast<std::size_t>(i)].U;
    }
    const auto e = mc::estimate(diff);

    // zeta^{f+g}_s - zeta^f_s = int_0^s 2 (W^p + f) g_K + g_K^2, bounded for every
    // s <= t by c = 2 |W^p + f|_{L2[0,t]} |g_K|_{L2[0,t]} + |g_K|^2_{L2[0,t]}.
    const Eigen::MatrixXd Gt = cache.matrix_at(problem.t);
    const Eigen::MatrixXd M = qwn::smoothed_gram(Gt, basis, problem.p);
    const double g_mass = g.coeffs().dot(Gt * g.coeffs());
    const Eigen::MatrixXd Zp = ensemble.matrix().colwise() + basis.powers(problem.p).cwiseProduct(f.coeffs());
    const double C = problem.drift.C;
    const auto& grid = s1.grid;
    std::vector<double> leak(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        const auto z = Zp.col(i);
        const double wf = std::sqrt(std::max(0.0, z.dot(M * z)));
        const double c = 2.0 * wf * std::sqrt(g_mass) + g_mass;
        // |dV|' <= C(1+2c)|dV| + c C (2|V| + e^{-zeta + c}), Gronwall by trapezoid on the path grid
        double dV = 0.0;
        if (C > 0.0) {
            const double rate = C * (1.0 + 2.0 * c);
            auto source = [&](int gidx) {
                return c * C * (2.0 * std::abs(s1.V_paths(i, gidx)) + std::exp(-s1.zeta_paths(i, gidx) + c)) *
                       std::exp(rate * (problem.t - grid[static_cast<std::size_t>(gidx)]));
            };
            for (std::size_t gidx = 1; gidx < grid.size(); ++gidx) {
                dV += 0.5 * (grid[gidx] - grid[gidx - 1]) *
                      (source(static_cast<int>(gidx) - 1) + source(static_cast<int>(gidx)));
            }
        }
        const auto& r = s1.samples[static_cast<std::size_t>(i)];
        leak[static_cast<std::size_t>(i)] = dV * std::exp(r.zeta + c) + std::abs(r.U) * std::expm1(c);
    }
    AdaptednessReport out;
    out.difference = e.mean;
    out.sigma = e.std_error;
    out.leakage = mc::estimate(leak).mean;
    out.g_mass_on_window = g_mass;
    out.pass = std::abs(out.difference) <= 3.0 * out.sigma + out.leakage;
    out.exceeds_3sigma = std::abs(out.difference) > 3.0 * out.sigma;
    return out;
}

LifetimeReport lifetime_threshold(const gram::GramCache& cache, double p) {
    const auto& basis = cache.basis();
    if (!(p > 0.5)) throw std::invalid_argument("the life time needs p > 1/2");
    LifetimeReport out;
    out.p = p;
    const auto sup = basis::sup_delta_norm(basis, p);
    out.sup = sup.value;
    out.sup_with_tail = sup.with_tail();
    out.T = basis::lifetime_bound(sup.value);
    out.T_untruncated = basis::lifetime_bound(sup.with_tail());
    out.lambda_max_limit = std::exp(-2.0 * p * std::log(1.5));
    // M_p(t) increases to Lambda^{-2p}, so the threshold is never reached when its top eigenvalue is below 1/4
    if (out.lambda_max_limit < 0.25) {
        out.t_star = std::numeric_limits<double>::infinity();
    } else {
        auto top = [&](double t) { return lambda_max(qwn::smoothed_gram(cache.matrix_at(t), basis, p)); };
        double lo = 0.0;
        double hi = std::max(out.T, 1e-3);
        while (top(hi) < 0.25) {
            lo = hi;
            hi *= 2.0;
            if (hi > 1e4) throw std::runtime_error("life-time threshold search did not bracket");
        }
        for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (top(mid) < 0.25 ? lo : hi) = mid;
        }
        out.t_star = hi;
    }
    out.pass = out.T <= out.t_star;
    return out;
}

std::optional<double> second_moment_closed_form(const gram::GramCache& cache, double p, double t) {
    const Eigen::MatrixXd M = qwn::smoothed_gram(cache.matrix_at(t), cache.basis(), p);
    const auto ld = log_det_shift(M, 4.0);
    if (!ld) return std::nullopt;
    return std::exp(-0.5 * *ld - 2.0 * M.trace());
}

MomentStudy moment_study(const gram::GramCache& cache, double p, double t, const mc::PathEnsemble& ensemble) {
    MomentStudy out;
    out.t = t;
    const Eigen::MatrixXd M = qwn::smoothed_gram(cache.matrix_at(t), cache.basis(), p);
    out.closed_form = second_moment_closed_form(cache, p, t);
    out.lambda_max = lambda_max(M);
    out.tail_index = 1.0 / (4.0 * out.lambda_max);

    const int N = ensemble.samples();
    const double tr = M.trace();
    std::vector<double> values(static_cast<std::size_t>(N));
    mc::parallel_for(N, [&](int begin, int end) {
        const auto Z = ensemble.matrix().middleCols(begin, end - begin);
        const Eigen::MatrixXd MZ = M * Z;
        for (int i = begin; i < end; ++i) {
            const double zeta = Z.col(i - begin).dot(MZ.col(i - begin)) - tr;
            values[static_cast<std::size_t>(i)] = std::exp(2.0 * zeta);
        }
    }, kChunk);
    for (int n = std::max(1, N / 64); n <= N; n *= 4) {
        const auto e = mc::estimate(std::span<const double>(values.data(), static_cast<std::size_t>(n)));
        out.sizes.push_back(n);
        out.means.push_back(e.mean);
        out.errors.push_back(e.std_error);
        if (n == N) break;
        if (n * 4 > N) n = N / 4;  // finish on N itself
    }
    // Hill estimator on the top k order statistics
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const int k = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(N))));
    if (k < N) {
        double acc = 0.0;
        const double base = std::log(sorted[static_cast<std::size_t>(k)]);
        for (int i = 0; i < k; ++i) acc += std::log(sorted[static_cast<std::size_t>(i)]) - base;
        out.hill_index = k / acc;
        out.hill_error = out.hill_index / std::sqrt(static_cast<double>(k));
    }
    out.finite_mean = out.hill_index - 2.0 * out.hill_error > 1.0;
    out.infinite_mean = out.hill_index + 2.0 * out.hill_error < 1.0;
    return out;
}

std::complex<double> closed_form_linear(const gram::GramCache& cache, double x0, double p, double t,
                                        const TestFunction& f, std::complex<double> scale, double beta) {
    using Complex = std::complex<double>;
    const auto& basis = cache.basis();
    if (f.size() != basis.size()) throw std::invalid_argument("test function size differs from K");
    const Eigen::MatrixXd M = qwn::smoothed_gram(cache.matrix_at(t), basis, p);
    const int K = basis.size();
    const Eigen::MatrixXd I2M = Eigen::MatrixXd::Identity(K, K) - 2.0 * M;
    const auto ld = log_det_shift(M, 2.0);
    if (!ld) {
        std::ostringstream os;
        os << "I - 2 M_p(t) is not positive definite at t = " << t << ": beyond the life time";
        throw BeyondLifetime(os.str());
    }
    // z' = z + a, zeta = z^T M z + 2 a^T M z + a^T M a - tr M
    const Eigen::VectorXcd a = scale * basis.powers(p).cwiseProduct(f.coeffs()).cast<Complex>();
    const Eigen::VectorXcd lin = 2.0 * (M.cast<Complex>() * a);
    const Eigen::LLT<Eigen::MatrixXd> chol(I2M);
    const Eigen::VectorXcd sol = chol.solve(lin.real()).cast<Complex>() +
                                 Complex(0.0, 1.0) * chol.solve(lin.imag()).cast<Complex>();
    const Complex quad = (a.transpose() * (M.cast<Complex>() * a))(0, 0);
    const Complex gauss = 0.5 * (lin.transpose() * sol)(0, 0);
    return x0 * std::exp(Complex(beta * t - M.trace() - 0.5 * *ld) + quad + gauss);
}

PositivityReport positivity_certificate(const gram::GramCache& cache, double x0, double p, double t,
                                        const std::vector<TestFunction>& family, double beta) {
    const int n = static_cast<int>(family.size());
    if (n < 1 || n > 16) throw std::invalid_argument("positivity family needs 1..16 test functions");
    PositivityReport out;
    out.F.resize(n, n);
    for (int j = 0; j < n; ++j) {
        for (int l = 0; l < n; ++l) {
            const TestFunction d = family[static_cast<std::size_t>(j)] - family[static_cast<std::size_t>(l)];
            const auto v = closed_form_linear(cache, x0, p, t, d, {0.0, 1.0}, beta) * std::exp(-0.5 * d.norm_sq());
            out.F(j, l) = v.real();
            out.max_imag = std::max(out.max_imag, std::abs(v.imag()));
        }
    }
    const Eigen::MatrixXd sym = 0.5 * (out.F + out.F.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw std::runtime_error("eigenvalue solver failed");
    out.min_eigenvalue = eig.eigenvalues().minCoeff();
    out.norm = eig.eigenvalues().cwiseAbs().maxCoeff();
    out.pass = out.min_eigenvalue >= -1e-8 * out.norm;
    return out;
}

}  // namespace wickforge::sde
