#include "crossdiff/models.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace crossdiff {

namespace {

constexpr double kExpClamp = 700.0; // largest exponent fed to std::exp

double safe_exp(double x) { return std::exp(std::min(x, kExpClamp)); }

// Softmax-style map rho_i = e^{w_i}/(1 + sum_k e^{w_k}) onto the open
// simplex, shifted so no intermediate overflows for |w| up to ~700.
void simplex_u(const double* w, double* rho, int N) {
    double m = 0.0;
    for (int k = 0; k < N; ++k) m = std::max(m, w[k]);
    double denom = std::exp(-m);
    for (int k = 0; k < N; ++k) denom += std::exp(w[k] - m);
    for (int i = 0; i < N; ++i) rho[i] = std::exp(w[i] - m) / denom;
}

void simplex_u_prime(const double* w, double* J, int N) {
    std::vector<double> rho(N);
    simplex_u(w, rho.data(), N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            J[i * N + j] = (i == j ? rho[i] : 0.0) - rho[i] * rho[j];
}

double simplex_entropy(const double* rho, int N) {
    double rho0 = 1.0;
    double v = N + 1.0;
    for (int i = 0; i < N; ++i) {
        rho0 -= rho[i];
        v += rho[i] * (std::log(rho[i]) - 1.0);
    }
    v += rho0 * (std::log(rho0) - 1.0);
    return v;
}

void simplex_s_prime(const double* rho, double* w, int N) {
    double rho0 = 1.0;
    for (int i = 0; i < N; ++i) rho0 -= rho[i];
    for (int i = 0; i < N; ++i) w[i] = std::log(rho[i]) - std::log(rho0);
}

void simplex_s_second(const double* rho, double* H, int N) {
    double rho0 = 1.0;
    for (int i = 0; i < N; ++i) rho0 -= rho[i];
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) H[i * N + j] = (i == j ? 1.0 / rho[i] : 0.0) + 1.0 / rho0;
}

DomainDesc simplex_domain(int N) {
    DomainDesc d;
    d.kind = DomainKind::simplex;
    d.lower.assign(N, 0.0);
    d.upper.assign(N, 1.0);
    return d;
}

// Minimum eigenvalue of the symmetric part of s''(rho)A(rho).
double h2a_eigmin(const ModelSpec& model, const double* rho) {
    const int N = model.N;
    std::vector<double> a(N * N), h(N * N);
    model.A(rho, a.data());
    model.s_second(rho, h.data());
    Eigen::MatrixXd P(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            double v = 0.0;
            for (int k = 0; k < N; ++k) v += h[i * N + k] * a[k * N + j];
            P(i, j) = v;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (P + P.transpose()));
    return es.eigenvalues().minCoeff();
}

} // namespace

bool DomainDesc::contains(const double* rho, int N) const {
    if (kind == DomainKind::simplex) {
        double sum = 0.0;
        for (int i = 0; i < N; ++i) {
            if (!(rho[i] > 0.0)) return false;
            sum += rho[i];
        }
        return sum < 1.0;
    }
    for (int i = 0; i < N; ++i)
        if (!(rho[i] > lower[i] && rho[i] < upper[i])) return false;
    return true;
}

ModelSpec porous_medium(double m) {
    if (!(m > 1.0 && m <= 2.0))
        throw std::invalid_argument("porous_medium: exponent m must lie in (1,2]");

    ModelSpec spec;
    spec.name = "porous_medium";
    spec.N = 1;
    spec.domain.kind = DomainKind::box;
    spec.domain.lower = {0.0};
    spec.domain.upper = {1.0};
    spec.A = [m](const double* rho, double* a) { a[0] = m * std::pow(rho[0], m - 1.0); };
    spec.f = [](const double*, double* f) { f[0] = 0.0; };
    spec.f_prime = [](const double*, double* j) { j[0] = 0.0; };
    spec.s = [](const double* rho) {
        return rho[0] * std::log(rho[0]) + (1.0 - rho[0]) * std::log(1.0 - rho[0]) + std::log(2.0);
    };
    spec.s_prime = [](const double* rho, double* w) {
        w[0] = std::log(rho[0]) - std::log(1.0 - rho[0]);
    };
    spec.s_second = [](const double* rho, double* h) { h[0] = 1.0 / (rho[0] * (1.0 - rho[0])); };
    spec.u = [](const double* w, double* rho) {
        rho[0] = w[0] >= 0.0 ? 1.0 / (1.0 + std::exp(-w[0])) : safe_exp(w[0]) / (1.0 + safe_exp(w[0]));
    };
    spec.u_prime = [](const double* w, double* j) {
        const double rho =
            w[0] >= 0.0 ? 1.0 / (1.0 + std::exp(-w[0])) : safe_exp(w[0]) / (1.0 + safe_exp(w[0]));
        j[0] = rho * (1.0 - rho);
    };
    spec.gamma = m;
    spec.C_f = 0.0;
    spec.A_sup = m;
    spec.ssA_continuous_on_closure = false; // s''A = m rho^{m-2}/(1-rho) blows up on the boundary
    return spec;
}

ModelSpec skt(const std::array<std::array<double, 3>, 2>& a,
              const std::array<std::array<double, 3>, 2>& b,
              std::optional<std::array<double, 2>> box_cap) {
    for (int i = 0; i < 2; ++i) {
        if (!(a[i][i + 1] > 0.0)) throw std::invalid_argument("skt: need a_ii > 0");
        for (int j = 0; j < 3; ++j) {
            if (a[i][j] < 0.0) throw std::invalid_argument("skt: need a_ij >= 0");
            if (b[i][j] < 0.0) throw std::invalid_argument("skt: need b_ij >= 0");
        }
    }
    const double pi1 = a[1][1]; // a_21
    const double pi2 = a[0][2]; // a_12
    if (!(pi1 > 0.0 && pi2 > 0.0))
        throw std::invalid_argument("skt: need a_12, a_21 > 0 (they weight the entropy)");
    if (!box_cap)
        throw std::invalid_argument(
            "skt: box_cap is required; the admissible set (0,inf)^2 is unbounded, so the "
            "stabilization scale sup|A| must be taken over an explicit density box");
    if (!((*box_cap)[0] > 0.0 && (*box_cap)[1] > 0.0))
        throw std::invalid_argument("skt: box_cap entries must be positive");

    ModelSpec spec;
    spec.name = "skt";
    spec.N = 2;
    spec.domain.kind = DomainKind::box;
    spec.domain.lower = {0.0, 0.0};
    spec.domain.upper = {std::numeric_limits<double>::infinity(),
                         std::numeric_limits<double>::infinity()};
    spec.box_cap = {(*box_cap)[0], (*box_cap)[1]};
    const std::array<double, 2> pi{pi1, pi2};
    spec.A = [a](const double* rho, double* m) {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double v = a[i][j + 1] * rho[i];
                if (i == j) v += a[i][0] + a[i][1] * rho[0] + a[i][2] * rho[1];
                m[i * 2 + j] = v;
            }
    };
    spec.f = [b](const double* rho, double* f) {
        for (int i = 0; i < 2; ++i)
            f[i] = rho[i] * (b[i][0] - b[i][1] * rho[0] - b[i][2] * rho[1]);
    };
    spec.f_prime = [b](const double* rho, double* j) {
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) {
                double v = -rho[i] * b[i][k + 1];
                if (i == k) v += b[i][0] - b[i][1] * rho[0] - b[i][2] * rho[1];
                j[i * 2 + k] = v;
            }
    };
    spec.s = [pi](const double* rho) {
        return pi[0] * (rho[0] * (std::log(rho[0]) - 1.0) + 1.0) +
               pi[1] * (rho[1] * (std::log(rho[1]) - 1.0) + 1.0);
    };
    spec.s_prime = [pi](const double* rho, double* w) {
        w[0] = pi[0] * std::log(rho[0]);
        w[1] = pi[1] * std::log(rho[1]);
    };
    spec.s_second = [pi](const double* rho, double* h) {
        h[0] = pi[0] / rho[0];
        h[1] = h[2] = 0.0;
        h[3] = pi[1] / rho[1];
    };
    spec.u = [pi](const double* w, double* rho) {
        rho[0] = safe_exp(w[0] / pi[0]);
        rho[1] = safe_exp(w[1] / pi[1]);
    };
    spec.u_prime = [pi](const double* w, double* j) {
        j[0] = safe_exp(w[0] / pi[0]) / pi[0];
        j[1] = j[2] = 0.0;
        j[3] = safe_exp(w[1] / pi[1]) / pi[1];
    };
    spec.gamma = std::min(pi1 * a[0][1], pi2 * a[1][2]);
    spec.C_f = 2.0 / std::log(2.0) *
               std::max(b[0][0] + (pi[0] * b[0][1] + pi[1] * b[1][1]) / (std::exp(1.0) * pi[0]),
                        b[1][0] + (pi[0] * b[0][2] + pi[1] * b[1][2]) / (std::exp(1.0) * pi[1]));
    spec.reaction_bound_kind = ReactionBound::relative;
    spec.has_reaction = b[0][0] != 0.0 || b[0][1] != 0.0 || b[0][2] != 0.0 || b[1][0] != 0.0 ||
                        b[1][1] != 0.0 || b[1][2] != 0.0;
    // All A entries increase in rho, so the sup over the box sits at its corner.
    {
        std::array<double, 4> corner;
        spec.A(spec.box_cap.data(), corner.data());
        spec.A_sup = 0.0;
        for (double v : corner) spec.A_sup = std::max(spec.A_sup, std::abs(v));
    }
    spec.ssA_continuous_on_closure = false; // s'' is singular at rho_i = 0
    return spec;
}

ModelSpec volume_filling_mixture(const std::vector<double>& p) {
    if (p.empty()) throw std::invalid_argument("volume_filling_mixture: need at least one species");
    for (double pi : p)
        if (!(pi > 0.0))
            throw std::invalid_argument("volume_filling_mixture: pressure coefficients must be positive");

    const int N = static_cast<int>(p.size());
    ModelSpec spec;
    spec.name = "volume_filling_mixture";
    spec.N = N;
    spec.domain = simplex_domain(N);
    spec.A = [p, N](const double* rho, double* m) {
        for (int j = 0; j < N; ++j)
            for (int i = 0; i < N; ++i)
                m[j * N + i] = i == j ? p[i] * rho[i] * (1.0 - rho[i]) : -p[i] * rho[i] * rho[j];
    };
    spec.f = [N](const double*, double* f) { std::fill(f, f + N, 0.0); };
    spec.f_prime = [N](const double*, double* j) { std::fill(j, j + N * N, 0.0); };
    spec.s = [N](const double* rho) { return simplex_entropy(rho, N); };
    spec.s_prime = [N](const double* rho, double* w) { simplex_s_prime(rho, w, N); };
    spec.s_second = [N](const double* rho, double* h) { simplex_s_second(rho, h, N); };
    spec.u = [N](const double* w, double* rho) { simplex_u(w, rho, N); };
    spec.u_prime = [N](const double* w, double* j) { simplex_u_prime(w, j, N); };
    spec.gamma = *std::min_element(p.begin(), p.end());
    spec.A_sup = *std::max_element(p.begin(), p.end()) / 4.0;
    spec.ssA_continuous_on_closure = true; // A^T s'' = diag(p) everywhere
    return spec;
}

ModelSpec tumor_growth(double beta, double theta) {
    if (!(beta > 0.0)) throw std::invalid_argument("tumor_growth: need beta > 0");
    if (!(theta > 0.0 && theta < 4.0 / std::sqrt(beta)))
        throw std::invalid_argument("tumor_growth: need 0 < theta < 4/sqrt(beta)");

    ModelSpec spec;
    spec.name = "tumor_growth";
    spec.N = 2;
    spec.domain = simplex_domain(2);
    spec.A = [beta, theta](const double* rho, double* m) {
        const double r1 = rho[0], r2 = rho[1];
        m[0] = 2.0 * r1 * (1.0 - r1) - beta * theta * r1 * r2 * r2;
        m[1] = -2.0 * beta * r1 * r2 * (1.0 + theta * r1);
        m[2] = -2.0 * r1 * r2 + beta * theta * (1.0 - r2) * r2 * r2;
        m[3] = 2.0 * beta * r2 * (1.0 - r2) * (1.0 + theta * r1);
    };
    spec.f = [](const double*, double* f) { f[0] = f[1] = 0.0; };
    spec.f_prime = [](const double*, double* j) { std::fill(j, j + 4, 0.0); };
    spec.s = [](const double* rho) { return simplex_entropy(rho, 2); };
    spec.s_prime = [](const double* rho, double* w) { simplex_s_prime(rho, w, 2); };
    spec.s_second = [](const double* rho, double* h) { simplex_s_second(rho, h, 2); };
    spec.u = [](const double* w, double* rho) { simplex_u(w, rho, 2); };
    spec.u_prime = [](const double* w, double* j) { simplex_u_prime(w, j, 2); };
    spec.ssA_continuous_on_closure = true;

    // gamma has no closed form here; take the minimum eigenvalue of the
    // symmetrized s''A over a simplex grid, refine until stable to 1%, and
    // keep a 1% safety margin since the true minimizer may fall off-grid.
    const auto grid_scan = [&](int n, double& eig_min, double& a_max) {
        eig_min = std::numeric_limits<double>::infinity();
        a_max = 0.0;
        std::array<double, 4> a;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n - i; ++j) {
                const double rho[2] = {static_cast<double>(i) / n, static_cast<double>(j) / n};
                const double sym[3] = {2.0, 0.5 * beta * theta * rho[1],
                                       2.0 * beta * (theta * rho[0] + 1.0)};
                const double mid = 0.5 * (sym[0] + sym[2]);
                const double rad = std::sqrt(0.25 * (sym[0] - sym[2]) * (sym[0] - sym[2]) +
                                             sym[1] * sym[1]);
                eig_min = std::min(eig_min, mid - rad);
                spec.A(rho, a.data());
                for (double v : a) a_max = std::max(a_max, std::abs(v));
            }
    };
    double eig = 0.0, amax = 0.0;
    grid_scan(40, eig, amax);
    for (int n = 80; n <= 1280; n *= 2) {
        double eig2 = 0.0, amax2 = 0.0;
        grid_scan(n, eig2, amax2);
        const bool stable =
            std::abs(eig2 - eig) <= 0.01 * std::abs(eig2) && std::abs(amax2 - amax) <= 0.01 * amax2;
        eig = eig2;
        amax = amax2;
        if (stable) break;
    }
    spec.gamma = 0.99 * eig;
    spec.A_sup = amax;
    if (!(spec.gamma > 0.0)) throw std::invalid_argument("tumor_growth: computed gamma not positive");
    return spec;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    os << "validation over " << samples << " samples: "
       << "H2a margin " << h2a_margin << (h2a_ok ? " (ok)" : " (VIOLATED)") << ", H2b slack "
       << h2b_slack << (h2b_ok ? " (ok)" : " (VIOLATED)") << ", round trips "
       << std::max(max_roundtrip_rho, max_roundtrip_w) << (roundtrip_ok ? " (ok)" : " (VIOLATED)")
       << ", |u' s'' - I| " << max_uprime_err;
    return os.str();
}

ValidationReport validate_model(const ModelSpec& model, int samples, std::uint64_t seed) {
    ValidationReport rep;
    rep.samples = std::max(samples, 1);
    const int N = model.N;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto sample_rho = [&](double* rho) {
        if (model.domain.kind == DomainKind::simplex) {
            // Dirichlet(1,...,1): exponentials normalized across N+1 fractions.
            double sum = 0.0;
            std::vector<double> e(N + 1);
            for (double& v : e) {
                v = -std::log(1.0 - unit(rng));
                sum += v;
            }
            for (int i = 0; i < N; ++i) rho[i] = e[i] / sum;
            return;
        }
        for (int i = 0; i < N; ++i) {
            const double lo = model.domain.lower[i];
            const double hi = std::isfinite(model.domain.upper[i]) ? model.domain.upper[i]
                                                                   : model.box_cap[i];
            rho[i] = lo + (hi - lo) * (1e-9 + (1.0 - 2e-9) * unit(rng));
        }
    };

    rep.h2a_margin = std::numeric_limits<double>::infinity();
    rep.h2b_slack = std::numeric_limits<double>::infinity();
    std::vector<double> rho(N), w(N), back(N), f(N), jac(N * N), hess(N * N);
    for (int k = 0; k < rep.samples; ++k) {
        sample_rho(rho.data());
        rep.h2a_margin = std::min(rep.h2a_margin, h2a_eigmin(model, rho.data()) - model.gamma);

        model.f(rho.data(), f.data());
        model.s_prime(rho.data(), w.data());
        double fs = 0.0;
        for (int i = 0; i < N; ++i) fs += f[i] * w[i];
        const double bound = model.reaction_bound_kind == ReactionBound::absolute
                                 ? model.C_f
                                 : model.C_f * (1.0 + model.s(rho.data()));
        rep.h2b_slack = std::min(rep.h2b_slack, bound - fs);

        model.u(w.data(), back.data());
        for (int i = 0; i < N; ++i)
            rep.max_roundtrip_rho = std::max(rep.max_roundtrip_rho, std::abs(back[i] - rho[i]));

        // Second round trip from a moderate random entropy state.
        for (int i = 0; i < N; ++i) w[i] = 10.0 * (2.0 * unit(rng) - 1.0);
        model.u(w.data(), rho.data());
        model.s_prime(rho.data(), back.data());
        for (int i = 0; i < N; ++i)
            rep.max_roundtrip_w = std::max(rep.max_roundtrip_w, std::abs(back[i] - w[i]));

        model.u_prime(w.data(), jac.data());
        model.s_second(rho.data(), hess.data());
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
                double v = 0.0;
                for (int l = 0; l < N; ++l) v += jac[i * N + l] * hess[l * N + j];
                rep.max_uprime_err = std::max(rep.max_uprime_err, std::abs(v - (i == j ? 1.0 : 0.0)));
            }
    }
    rep.h2a_ok = rep.h2a_margin >= -1e-8;
    rep.h2b_ok = rep.h2b_slack >= -1e-8;
    rep.roundtrip_ok = std::max(rep.max_roundtrip_rho, rep.max_roundtrip_w) <= 1e-9;
    return rep;
}

} // namespace crossdiff
