#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <ostream>
#include <vector>

#include "jamstat/fields.hpp"
#include "jamstat/ppp.hpp"
#include "jamstat/rsa.hpp"

namespace jamstat {

enum class CoupledModel { Inclusion, Voronoi, Parking };

struct CouplingSpec {
    CoupledModel model = CoupledModel::Inclusion;
    TorusBox box{1, 32.0};
    double intensity = 1.0;
    RadiusLaw law = RadiusLaw::dirac(0.5);  // radii (inclusion) or values (voronoi)
    Solid solid = Solid::ball(0.5);         // parking
    double a0 = 0.0, a1 = 1.0;
    bool mark_classes = false;  // split cells by radius class (inclusion)
    PackOptions pack;
};

DrivingProcess driving_process(const CouplingSpec& spec, const StreamKey& key, double intensity_factor = 1.0);
std::unique_ptr<FieldSample> realize(const CouplingSpec& spec, const DrivingProcess& proc);

// where two realizations differ, measured from the unit cell Q(x) centered at x
struct Disagreement {
    bool differ = false;
    double cheb = 0.0;     // sup |y - x|_inf over the disagreement set
    double from_cell = 0.0;  // sup dist(y, Q(x))
};

// exact in d = 1; for d >= 2 the set is enclosed by the changed inclusions or
// the Voronoi cells of changed generators
Disagreement disagreement(const FieldSample& a, const FieldSample& b, const Point& x);

inline constexpr double kRadiusSentinel = std::numeric_limits<double>::infinity();

// smallest integer rho (dyadic search, then bisection) with agreement outside Q(x) + B_rho
double action_radius(const Disagreement& dis, const TorusBox& box);
double action_radius(const FieldSample& a, const FieldSample& b, const Point& x);

using Functional = std::function<double(const FieldSample&)>;

bool agree_outside_cube(const FieldSample& a, const FieldSample& b, const Point& x, int ell);

double discrete_derivative(const Functional& z, const FieldSample& a, const FieldSample& ax, const Point& x, int ell);
// a = A(X), ax = A(X^x), axp = A(X^x'), axxp = A(X^{x;x'})
double discrete_second_derivative(const Functional& z, const FieldSample& a, const FieldSample& ax,
                                  const FieldSample& axp, const FieldSample& axxp, const Point& x, int ell,
                                  const Point& xp, int ellp);

struct CoupledSample {
    std::unique_ptr<FieldSample> original;
    std::unique_ptr<FieldSample> perturbed;
    bool input_changed = false;  // X != X^{x,t} on the resampled cell
    Disagreement dis;
    double rho = 0.0;
    Point center;
};

CoupledSample couple(const CouplingSpec& spec, const StreamKey& key, std::size_t cell, int mark_class = -1,
                     double intensity_factor = 1.0);

enum class RadiusMode {
    Measured,  // certified radius from the realized disagreement
    Class      // rho = t 1[X != X^{0,t}] for radius-class cells
};

struct WeightRow {
    int t = -1;
    int ell = 1;
    std::size_t count = 0;
    double pi_hat = 0.0, ci_lo = 0.0, ci_hi = 0.0;
    std::size_t n = 0;
};

struct WeightTable {
    std::vector<WeightRow> rows;
    std::vector<double> radii;  // per replicate, 0 when the input did not change
    std::vector<char> changed;
    std::size_t sentinels = 0;
    std::size_t n = 0;
};

struct WeightOptions {
    int t = -1;
    int max_ell = 32;
    std::size_t n = 1000;
    RadiusMode mode = RadiusMode::Measured;
    bool doubled_intensity = false;  // dominating radius for parking
    int threads = 1;
};

WeightTable weight_estimate(const CouplingSpec& spec, const StreamKey& key, const WeightOptions& opt);

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054);

// empirical Pr[rho >= ell] jointly with a changed input
std::vector<double> radius_survival(const WeightTable& w, int max_ell);

void write_weight_csv(std::ostream& os, const std::vector<WeightTable>& tables);

}  // namespace jamstat
