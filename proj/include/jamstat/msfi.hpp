#pragma once

#include <array>
#include <ostream>
#include <vector>

#include "jamstat/coupling.hpp"
#include "jamstat/fields.hpp"
#include "jamstat/ppp.hpp"

namespace jamstat {

enum class WeightKind { Compact, Algebraic, Exponential, StretchedExp };

// pi(l) = coefficient * f(l):
//   Compact       1[l <= range]
//   Algebraic     (l + 1)^-p
//   Exponential   exp(-rate l)
//   StretchedExp  exp(-rate l^power)
struct WeightSpec {
    WeightKind kind = WeightKind::Algebraic;
    double coefficient = 1.0;
    double range = 0.0;
    double p = 2.0;
    double rate = 1.0;
    double power = 1.0;

    static WeightSpec compact(double range, double c = 1.0);
    static WeightSpec algebraic(double p, double c = 1.0);
    static WeightSpec exponential(double rate, double c = 1.0);
    static WeightSpec stretched_exp(double power, double rate, double c = 1.0);

    double pi(double ell) const;
    bool integrable() const;
    void validate() const;  // throws on a non-integrable or malformed weight
    // sum_{l >= l0} pi(l) and sum_{l >= l0} l pi(l) over integers
    double tail_sum(long l0) const;
    double tail_first_moment(long l0) const;
};

// inclusion model: pi(t, l) <= 2 nu([t - 1/2, t + 1/2)) 1[l - 1 <= t < l]
double inclusion_class_weight(const RadiusLaw& law, double intensity, int t, int ell);

// Z_L = L^gamma (avg_{Q_L} A - E A), with |d_B Z_L| = amplitude L^(gamma - d) |B cap Q_L|
struct LinearFunctionalSpec {
    int dim = 1;
    double L = 8.0;
    double gamma = 0.5;
    double amplitude = 1.0;
};

// |B_r(z) cap Q_L| for the cube Q_L = [-L/2, L/2]^d
double ball_cube_volume(int d, double r, const Point& z, double L);
// int_{R^d} |B_r(z) cap Q_L|^2 dz
double squared_overlap_integral(int d, double r, double L);

// int_0^inf int |d_{B_{l+1}(z)} Z|^2 dz (l + 1)^-d pi(l) dl
double wsg_rhs(const LinearFunctionalSpec& f, const WeightSpec& w, double rel_tol = 1e-6);

struct WsgReport {
    std::size_t n = 0;
    double lhs = 0.0;        // ensemble variance
    double lhs_se = 0.0;
    double lhs_upper = 0.0;  // one-sided 97.5% upper bound
    double rhs = 0.0;
    bool satisfied = false;
};

WsgReport wsg_verify(const std::vector<double>& z_samples, double rhs);

struct SecondOrderTerms {
    double I1 = 0.0, I2 = 0.0, I3 = 0.0, I4 = 0.0;
    std::size_t groups = 0;  // distinct clipped intervals
};

// weighted sums with gamma(l) = pi(l), deterministic envelopes, d = 1
SecondOrderTerms second_order_terms(const LinearFunctionalSpec& f, const WeightSpec& w);

struct GaussianNorms {
    double p_norm = 0.0;       // ||dZ||_p
    double triple = 0.0;       // |||dZ|||_beta
    double triple_second = 0.0;  // |||d^2 Z|||_{beta,beta}
    double triple_bound = 0.0;   // two-regime upper bound on |||dZ|||_beta
};

double max_admissible_p(int d, double beta);  // d / (d - beta)_+, inf when beta >= d
GaussianNorms gaussian_norms(const LinearFunctionalSpec& f, double beta, double p);

// certified calibrations of pi = C f through the Efron-Stein bound
WeightSpec calibrate_inclusion_weight(const RadiusLaw& law, double intensity, int d, double beta);
// exponential (kind Exponential) or stretched-exponential weight fitted to an
// empirical radius table; C taken over the observed bins at their upper CI
WeightSpec calibrate_empirical_weight(const WeightTable& table, WeightKind kind, int d, double safety = 0.5);
WeightSpec calibrate_gaussian_weight(const KernelTable& table, double lipschitz, double beta);

struct TermRow {
    double L = 0.0;
    SecondOrderTerms terms;
    double rhs = 0.0;
    WsgReport wsg;
};

void write_term_csv(std::ostream& os, const std::vector<TermRow>& rows);

}  // namespace jamstat
