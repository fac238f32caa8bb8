#pragma once
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace crossdiff {

enum class DomainKind { box, simplex };

// Admissible density set D: a coordinate box, or the open unit simplex
// {rho_i > 0, sum rho_i < 1}.
struct DomainDesc {
    DomainKind kind = DomainKind::box;
    std::vector<double> lower; // box bounds, per species
    std::vector<double> upper; // may be +inf

    bool contains(const double* rho, int N) const;
};

enum class ReactionBound : std::uint8_t { absolute, relative };

// Cross-diffusion model: diffusion matrix A, reaction f, entropy density s
// with derivatives, and the inverse map u = (s')^{-1} onto D. Matrix-valued
// callbacks fill row-major N*N buffers supplied by the caller.
struct ModelSpec {
    std::string name;
    int N = 1;
    DomainDesc domain;
    std::function<void(const double*, double*)> A;
    std::function<void(const double*, double*)> f;
    std::function<void(const double*, double*)> f_prime; // df_i/drho_j
    std::function<double(const double*)> s;
    std::function<void(const double*, double*)> s_prime;
    std::function<void(const double*, double*)> s_second;
    std::function<void(const double*, double*)> u;
    std::function<void(const double*, double*)> u_prime;
    double gamma = 0.0;
    double C_f = 0.0;
    double A_sup = 0.0;
    ReactionBound reaction_bound_kind = ReactionBound::absolute;
    bool has_reaction = false;
    // Whether s''A extends continuously to the closure of D; decides the
    // default regularization kind in 2D.
    bool ssA_continuous_on_closure = false;
    // Bounded surrogate used for A_sup and validation sampling when D is
    // unbounded; empty otherwise.
    std::vector<double> box_cap;
};

ModelSpec porous_medium(double m);
ModelSpec skt(const std::array<std::array<double, 3>, 2>& a,
              const std::array<std::array<double, 3>, 2>& b,
              std::optional<std::array<double, 2>> box_cap);
ModelSpec volume_filling_mixture(const std::vector<double>& p);
ModelSpec tumor_growth(double beta, double theta);

struct ValidationReport {
    int samples = 0;
    double h2a_margin = 0.0;     // min over samples of lambda_min(sym(s''A)) - gamma
    double h2b_slack = 0.0;      // min over samples of bound - f·s'
    double max_roundtrip_rho = 0.0; // |u(s'(rho)) - rho|
    double max_roundtrip_w = 0.0;   // |s'(u(w)) - w|
    double max_uprime_err = 0.0;    // |u'(w)·s''(u(w)) - I|
    bool h2a_ok = false;
    bool h2b_ok = false;
    bool roundtrip_ok = false;

    std::string summary() const;
};

ValidationReport validate_model(const ModelSpec& model, int samples, std::uint64_t seed);

} // namespace crossdiff
