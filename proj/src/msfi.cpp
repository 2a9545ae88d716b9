#include "jamstat/msfi.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_zeta.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "jamstat/stats.hpp"

namespace jamstat {

namespace {

const struct GslQuiet {
    GslQuiet() { gsl_set_error_handler_off(); }
} gsl_quiet;

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
double call_gsl(double x, void* p) {
    return (*static_cast<F*>(p))(x);
}

// adaptive quadrature on [a, b], b may be +inf
template <class F>
double quad(F f, double a, double b, double rel, double abs_tol = 0.0) {
    if (!(b > a)) return 0.0;
    gsl_integration_workspace* w = gsl_integration_workspace_alloc(4000);
    gsl_function gf{&call_gsl<F>, &f};
    double r = 0.0, err = 0.0;
    if (std::isinf(b))
        gsl_integration_qagiu(&gf, a, abs_tol, rel, 4000, w, &r, &err);
    else
        gsl_integration_qags(&gf, a, b, abs_tol, rel, 4000, w, &r, &err);
    gsl_integration_workspace_free(w);
    return r;
}

// integrate over [0, end) split at the given interior break points
template <class F>
double quad_pieces(F f, std::vector<double> cuts, double end, double rel) {
    cuts.push_back(0.0);
    cuts.push_back(end);
    std::sort(cuts.begin(), cuts.end());
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double a = std::max(0.0, cuts[i]), b = std::min(end, cuts[i + 1]);
        if (b > a) s += quad(f, a, b, rel);
    }
    return s;
}

double ball_volume(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return std::numbers::pi;
        default: return 4.0 / 3.0 * std::numbers::pi;
    }
}

void check_dim(int d) {
    if (d != 1 && d != 2) throw std::invalid_argument("only d = 1 and d = 2 are supported here");
}

// area of {|y| <= r, y1 <= a, y2 <= b}
double disk_quadrant(double r, double a, double b) {
    if (a <= -r || b <= -r) return 0.0;
    a = std::min(a, r);
    auto F = [r](double x) {
        x = std::clamp(x, -r, r);
        return 0.5 * (x * std::sqrt(std::max(0.0, r * r - x * x)) + r * r * std::asin(x / r));
    };
    if (b >= r) return 2.0 * (F(a) - F(-r));
    double c = std::sqrt(r * r - b * b);
    if (b >= 0.0) {
        // chord |x| < c contributes s + b, the rest the full 2 s
        auto P = [&](double u) {
            if (u <= -c) return 2.0 * (F(u) - F(-r));
            double s = 2.0 * (F(-c) - F(-r));
            if (u <= c) return s + F(u) - F(-c) + b * (u + c);
            return s + F(c) - F(-c) + 2.0 * b * c + 2.0 * (F(u) - F(c));
        };
        return P(a);
    }
    if (a <= -c) return 0.0;
    double u = std::min(a, c);
    return F(u) - F(-c) + b * (u + c);
}

}  // namespace

WeightSpec WeightSpec::compact(double range, double c) {
    WeightSpec w;
    w.kind = WeightKind::Compact;
    w.range = range;
    w.coefficient = c;
    return w;
}

WeightSpec WeightSpec::algebraic(double p, double c) {
    WeightSpec w;
    w.kind = WeightKind::Algebraic;
    w.p = p;
    w.coefficient = c;
    return w;
}

WeightSpec WeightSpec::exponential(double rate, double c) {
    WeightSpec w;
    w.kind = WeightKind::Exponential;
    w.rate = rate;
    w.coefficient = c;
    return w;
}

WeightSpec WeightSpec::stretched_exp(double power, double rate, double c) {
    WeightSpec w;
    w.kind = WeightKind::StretchedExp;
    w.power = power;
    w.rate = rate;
    w.coefficient = c;
    return w;
}

double WeightSpec::pi(double ell) const {
    if (ell < 0.0) return 0.0;
    switch (kind) {
        case WeightKind::Compact: return ell <= range ? coefficient : 0.0;
        case WeightKind::Algebraic: return coefficient * std::pow(ell + 1.0, -p);
        case WeightKind::Exponential: return coefficient * std::exp(-rate * ell);
        case WeightKind::StretchedExp: return coefficient * std::exp(-rate * std::pow(ell, power));
    }
    return 0.0;
}

bool WeightSpec::integrable() const {
    if (!(coefficient >= 0.0) || !std::isfinite(coefficient)) return false;
    switch (kind) {
        case WeightKind::Compact: return range >= 0.0 && std::isfinite(range);
        case WeightKind::Algebraic: return p > 1.0;
        case WeightKind::Exponential: return rate > 0.0;
        case WeightKind::StretchedExp: return rate > 0.0 && power > 0.0;
    }
    return false;
}

void WeightSpec::validate() const {
    if (!integrable()) throw std::invalid_argument("weight is not integrable");
}

double WeightSpec::tail_sum(long l0) const {
    l0 = std::max(0L, l0);
    switch (kind) {
        case WeightKind::Compact: {
            long top = static_cast<long>(std::floor(range));
            return top < l0 ? 0.0 : coefficient * static_cast<double>(top - l0 + 1);
        }
        case WeightKind::Algebraic: return coefficient * gsl_sf_hzeta(p, static_cast<double>(l0) + 1.0);
        case WeightKind::Exponential: {
            double q = std::exp(-rate);
            return coefficient * std::exp(-rate * static_cast<double>(l0)) / (1.0 - q);
        }
        case WeightKind::StretchedExp: {
            double s = 0.0;
            for (long l = l0;; ++l) {
                double t = pi(static_cast<double>(l));
                s += t;
                if (t <= 1e-18 * s || (t == 0.0 && l > l0)) break;
            }
            return s;
        }
    }
    return 0.0;
}

double WeightSpec::tail_first_moment(long l0) const {
    l0 = std::max(0L, l0);
    switch (kind) {
        case WeightKind::Compact: {
            long top = static_cast<long>(std::floor(range));
            if (top < l0) return 0.0;
            return coefficient * 0.5 * static_cast<double>(top + l0) * static_cast<double>(top - l0 + 1);
        }
        case WeightKind::Algebraic: {
            if (!(p > 2.0)) return kInf;
            double q = static_cast<double>(l0) + 1.0;
            return coefficient * (gsl_sf_hzeta(p - 1.0, q) - gsl_sf_hzeta(p, q));
        }
        case WeightKind::Exponential: {
            double q = std::exp(-rate), l = static_cast<double>(l0);
            return coefficient * std::exp(-rate * l) * (l / (1.0 - q) + q / ((1.0 - q) * (1.0 - q)));
        }
        case WeightKind::StretchedExp: {
            double s = 0.0;
            for (long l = l0;; ++l) {
                double t = static_cast<double>(l) * pi(static_cast<double>(l));
                s += t;
                if ((t <= 1e-18 * s && l > 2 * l0 + 4) || (t == 0.0 && l > l0)) break;
            }
            return s;
        }
    }
    return 0.0;
}

double inclusion_class_weight(const RadiusLaw& law, double intensity, int t, int ell) {
    if (!(ell - 1 <= t && t < ell)) return 0.0;
    return 2.0 * intensity * law.mass(std::max(0.0, t - 0.5), t + 0.5);
}

double ball_cube_volume(int d, double r, const Point& z, double L) {
    check_dim(d);
    const double h = 0.5 * L;
    if (d == 1) return std::max(0.0, std::min(z[0] + r, h) - std::max(z[0] - r, -h));
    double x0 = -h - z[0], x1 = h - z[0], y0 = -h - z[1], y1 = h - z[1];
    double v = disk_quadrant(r, x1, y1) - disk_quadrant(r, x0, y1) - disk_quadrant(r, x1, y0) + disk_quadrant(r, x0, y0);
    return std::max(0.0, v);
}

double squared_overlap_integral(int d, double r, double L) {
    check_dim(d);
    if (d == 1) {
        double s = std::min(2.0 * r, L), b = std::max(2.0 * r, L);
        return (b - s) * s * s + 2.0 * s * s * s / 3.0;
    }
    // int g_B(u) g_Q(u) du with g the covariograms of the disk and the square
    auto lens = [r](double t) {
        if (t >= 2.0 * r) return 0.0;
        return 2.0 * r * r * std::acos(t / (2.0 * r)) - 0.5 * t * std::sqrt(4.0 * r * r - t * t);
    };
    auto K = [L](double t, double th) {
        double s = std::sin(th);
        return L * L * th - L * t * s + L * t * std::cos(th) + 0.5 * t * t * s * s;
    };
    auto angular = [&](double t) {
        if (t <= L) return 4.0 * (K(t, 0.5 * std::numbers::pi) - K(t, 0.0));
        if (t >= L * std::numbers::sqrt2) return 0.0;
        return 4.0 * (K(t, std::asin(L / t)) - K(t, std::acos(L / t)));
    };
    auto f = [&](double t) { return lens(t) * t * angular(t); };
    return quad_pieces(f, {L}, std::min(2.0 * r, L * std::numbers::sqrt2), 1e-11);
}

double wsg_rhs(const LinearFunctionalSpec& f, const WeightSpec& w, double rel_tol) {
    w.validate();
    check_dim(f.dim);
    if (!(f.L > 0.0)) throw std::invalid_argument("L must be positive");
    if (f.amplitude == 0.0 || w.coefficient == 0.0) return 0.0;
    const int d = f.dim;
    const double pre = f.amplitude * f.amplitude * std::pow(f.L, 2.0 * (f.gamma - d));
    auto g = [&](double ell) {
        double r = ell + 1.0;
        return squared_overlap_integral(d, r, f.L) * std::pow(r, -d) * w.pi(ell);
    };
    std::vector<double> cuts{0.5 * f.L - 1.0};
    if (d == 2) cuts.push_back(0.5 * f.L * std::numbers::sqrt2 - 1.0);
    double end = w.kind == WeightKind::Compact ? w.range : kInf;
    if (std::isinf(end)) {
        // finite pieces, then the infinite tail
        double last = std::max(0.0, *std::max_element(cuts.begin(), cuts.end()));
        return pre * (quad_pieces(g, cuts, last, rel_tol) + quad(g, last, kInf, rel_tol));
    }
    return pre * quad_pieces(g, cuts, end, rel_tol);
}

WsgReport wsg_verify(const std::vector<double>& z_samples, double rhs) {
    WsgReport r;
    Moments m = ensemble_moments(z_samples);
    r.n = m.n;
    r.lhs = m.var;
    r.lhs_se = std::isfinite(m.se_var) ? m.se_var : 0.0;
    r.lhs_upper = m.var + 1.959963984540054 * r.lhs_se;
    r.rhs = rhs;
    r.satisfied = r.lhs_upper <= rhs;
    return r;
}

SecondOrderTerms second_order_terms(const LinearFunctionalSpec& f, const WeightSpec& w) {
    w.validate();
    if (f.dim != 1) throw std::invalid_argument("second-order terms are implemented for d = 1");
    if (!(f.L > 0.0) || f.L > 8192.0) throw std::invalid_argument("L must lie in (0, 8192]");
    const double L = f.L, h = 0.5 * L;
    // breakpoints -h < m0 < ... < m1 < h; every clipped interval K = [x - l - 1, x + l + 1] cap Q_L
    // runs between two of them
    const long m0 = static_cast<long>(std::floor(-h)) + 1, m1 = static_cast<long>(std::ceil(h)) - 1;
    std::vector<double> bp{-h};
    for (long m = m0; m <= m1; ++m) bp.push_back(static_cast<double>(m));
    bp.push_back(h);
    const std::size_t nb = bp.size(), ns = nb - 1;
    auto index = [&](double e) -> std::size_t {
        if (e <= -h) return 0;
        if (e >= h) return nb - 1;
        return static_cast<std::size_t>(static_cast<long>(e) - m0 + 1);
    };
    std::vector<double> W(nb * nb, 0.0);
    const long cut = static_cast<long>(std::ceil(L)) + 2;
    long last = cut - 1;
    if (w.kind == WeightKind::Compact) last = std::min(last, static_cast<long>(std::floor(w.range)));
    for (long l = 0; l <= last; ++l) {
        double g = w.pi(static_cast<double>(l));
        if (g == 0.0) continue;
        long x0 = static_cast<long>(std::floor(-h)) - l - 1, x1 = static_cast<long>(std::ceil(h)) + l + 1;
        for (long x = x0; x <= x1; ++x) {
            double a = std::max(double(x - l - 1), -h), b = std::min(double(x + l + 1), h);
            if (b > a) W[index(a) * nb + index(b)] += g;
        }
    }
    // for l >= cut every interval is clipped on at least one side
    double t0 = w.tail_sum(cut);
    if (t0 > 0.0) {
        for (std::size_t k = 1; k + 1 < nb; ++k) {
            W[k] += t0;
            W[k * nb + nb - 1] += t0;
        }
        double c0 = 2.0 * std::floor(1.0 - h) + 1.0;
        W[nb - 1] += 2.0 * w.tail_first_moment(cut) + c0 * t0;
    }

    const double s = f.amplitude * std::pow(L, f.gamma - 1.0);
    SecondOrderTerms t;
    double i3 = 0.0, i4 = 0.0;
    // phi(i) = sum over K' containing segment i of W' D'; M collects W' D'^2
    std::vector<double> diff(nb + 1, 0.0), M(nb * nb, 0.0);
    for (std::size_t a = 0; a < nb; ++a)
        for (std::size_t b = a + 1; b < nb; ++b) {
            double g = W[a * nb + b];
            if (g == 0.0) continue;
            ++t.groups;
            double D = s * (bp[b] - bp[a]);
            i3 += g * D * D * D * D;
            i4 += g * D * D * D;
            diff[a] += g * D;
            diff[b] -= g * D;
            M[a * nb + b] = g * D * D;
        }
    std::vector<double> pphi(nb, 0.0);
    double phi = 0.0;
    for (std::size_t i = 0; i < ns; ++i) {
        phi += diff[i];
        pphi[i + 1] = pphi[i] + phi * (bp[i + 1] - bp[i]);
    }
    // psi(i, j), i <= j: sum of M over a <= i, b >= j + 1
    std::vector<double> C(nb * nb, 0.0);
    for (std::size_t a = 0; a < nb; ++a)
        for (std::size_t b = nb; b-- > 0;) {
            double v = M[a * nb + b];
            if (b + 1 < nb) v += C[a * nb + b + 1];
            if (a > 0) v += C[(a - 1) * nb + b];
            if (a > 0 && b + 1 < nb) v -= C[(a - 1) * nb + b + 1];
            C[a * nb + b] = v;
        }
    // prefix sums of psi(i, j) len_i len_j over segment pairs
    std::vector<double> P((ns + 1) * (ns + 1), 0.0);
    for (std::size_t i = 0; i < ns; ++i)
        for (std::size_t j = 0; j < ns; ++j) {
            std::size_t lo = std::min(i, j), hi = std::max(i, j);
            double v = C[lo * nb + hi + 1] * (bp[i + 1] - bp[i]) * (bp[j + 1] - bp[j]);
            P[(i + 1) * (ns + 1) + j + 1] = v + P[i * (ns + 1) + j + 1] + P[(i + 1) * (ns + 1) + j] - P[i * (ns + 1) + j];
        }
    double i1 = 0.0, i2 = 0.0;
    for (std::size_t a = 0; a < nb; ++a)
        for (std::size_t b = a + 1; b < nb; ++b) {
            double g = W[a * nb + b];
            if (g == 0.0) continue;
            double inner = s * (pphi[b] - pphi[a]);
            i1 += g * inner * inner;
            double rect = P[b * (ns + 1) + b] - P[a * (ns + 1) + b] - P[b * (ns + 1) + a] + P[a * (ns + 1) + a];
            i2 += g * s * s * rect;
        }
    t.I1 = std::sqrt(i1);
    t.I2 = std::sqrt(std::max(0.0, i2));
    t.I3 = std::sqrt(i3);
    t.I4 = i4;
    return t;
}

double max_admissible_p(int d, double beta) {
    if (beta >= d) return kInf;
    return d / (d - beta);
}

GaussianNorms gaussian_norms(const LinearFunctionalSpec& f, double beta, double p) {
    check_dim(f.dim);
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    const int d = f.dim;
    if (!(p >= 1.0) || p > max_admissible_p(d, beta) * (1.0 + 1e-12))
        throw std::invalid_argument("p outside the admissible range [1, d/(d - beta)_+]");
    GaussianNorms g;
    const double L = f.L, s = std::abs(f.amplitude) * std::pow(L, f.gamma - d);
    if (std::isinf(p)) {
        g.p_norm = s * ball_cube_volume(d, 1.0, Point{}, L);
    } else if (d == 1) {
        double m = std::min(2.0, L), b = std::max(2.0, L);
        g.p_norm = s * std::pow((b - m) * std::pow(m, p) + 2.0 * std::pow(m, p + 1.0) / (p + 1.0), 1.0 / p);
    } else {
        const double e = 0.5 * L + 1.0;
        auto outer = [&](double x) {
            auto inner = [&](double y) { return std::pow(ball_cube_volume(2, 1.0, Point{x, y}, L), p); };
            return quad_pieces(inner, {0.5 * L - 1.0}, e, 1e-10);
        };
        g.p_norm = s * std::pow(4.0 * quad_pieces(outer, {0.5 * L - 1.0}, e, 1e-8), 1.0 / p);
    }
    g.triple = std::sqrt(wsg_rhs(f, WeightSpec::algebraic(beta + 1.0), 1e-8));
    g.triple_second = 0.0;  // linear functional
    const double vd = ball_volume(d);
    auto bound = [&](double ell) {
        double r = ell + 1.0;
        double a = std::min(vd * std::pow(r, d), std::pow(L, d));
        return a * a * std::pow(L + 2.0 * r, d) * std::pow(r, -d - beta - 1.0);
    };
    double knee = std::pow(std::pow(L, d) / vd, 1.0 / d) - 1.0;
    double last = std::max(0.0, knee);
    double b = quad_pieces(bound, {knee}, last, 1e-8) + quad(bound, last, kInf, 1e-8);
    g.triple_bound = s * std::sqrt(b);
    return g;
}

namespace {

// int_a^{a+1} (l + 1)^-d f(l) dl for the unit-coefficient weight
double bin_mass(const WeightSpec& unit, int d, double a) {
    if (unit.kind == WeightKind::Algebraic) {
        double e = d + unit.p - 1.0;
        return (std::pow(a + 1.0, -e) - std::pow(a + 2.0, -e)) / e;
    }
    return quad([&](double l) { return std::pow(l + 1.0, -d) * unit.pi(l); }, a, a + 1.0, 1e-10);
}

}  // namespace

WeightSpec calibrate_inclusion_weight(const RadiusLaw& law, double intensity, int d, double beta) {
    if (!(intensity > 0.0) || !(beta > 0.0)) throw std::invalid_argument("intensity and beta must be positive");
    WeightSpec unit = WeightSpec::algebraic(2.0 * d + beta + 1.0);
    const double sd = std::sqrt(static_cast<double>(d));
    double c = 0.0;
    const double top = law.upper();
    const int tmax = std::isfinite(top) ? static_cast<int>(std::floor(top + 0.5)) : 5000;
    for (int t = 0; t <= tmax; ++t) {
        double nu = law.mass(std::max(0.0, t - 0.5), t + 0.5);
        if (t == tmax && std::isfinite(top)) nu = law.survival(std::max(0.0, t - 0.5));
        double pt = -std::expm1(-2.0 * intensity * nu);
        if (pt <= 0.0) continue;
        // resampling class t changes the field within Q(x) + B_{t+1/2}
        c = std::max(c, 0.5 * pt / bin_mass(unit, d, t - 0.5 + sd));
    }
    if (law.kind == LawKind::ParetoTail) {
        double kappa = law.a, need = d + unit.p;
        if (kappa < need - 1e-9) throw std::invalid_argument("radius tail too heavy for the algebraic weight");
        if (kappa < need + 1e-9) c = std::max(c, intensity * (kappa - 1.0) * std::pow(law.b, kappa - 1.0));
    }
    unit.coefficient = c;
    return unit;
}

WeightSpec calibrate_empirical_weight(const WeightTable& table, WeightKind kind, int d, double safety) {
    if (kind != WeightKind::Exponential && kind != WeightKind::StretchedExp)
        throw std::invalid_argument("empirical calibration fits exponential or stretched-exponential weights");
    if (table.n == 0) throw std::invalid_argument("empty weight table");
    if (table.sentinels > 0) throw std::runtime_error("unbounded action radius observed; weight cannot be calibrated");
    if (!(safety > 0.0 && safety <= 1.0)) throw std::invalid_argument("safety must lie in (0, 1]");
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < table.n; ++i) {
        if (!table.changed[i]) continue;
        auto b = static_cast<std::size_t>(std::ceil(table.radii[i]));
        if (counts.size() <= b) counts.resize(b + 1, 0);
        ++counts[b];
    }
    const double n = static_cast<double>(table.n);
    // log survival against l (or l^d), bins with at least five exceedances
    std::vector<double> xs, ys;
    std::size_t above = 0;
    for (std::size_t b = counts.size(); b-- > 1;) {
        above += counts[b];
        if (above >= 5) {
            double x = static_cast<double>(b);
            xs.push_back(kind == WeightKind::Exponential ? x : std::pow(x, d));
            ys.push_back(std::log(static_cast<double>(above) / n));
        }
    }
    double rate = 1.0;
    if (xs.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= xs.size();
        my /= xs.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) sxx += (xs[i] - mx) * (xs[i] - mx), sxy += (xs[i] - mx) * (ys[i] - my);
        if (!(sxy < 0.0)) throw std::runtime_error("radius survival does not decay");
        rate = -sxy / sxx;
    }
    rate *= safety;
    WeightSpec unit = kind == WeightKind::Exponential ? WeightSpec::exponential(rate) : WeightSpec::stretched_exp(d, rate);
    const double sd = std::sqrt(static_cast<double>(d));
    double c = 0.0;
    for (std::size_t b = 0; b < counts.size(); ++b) {
        if (counts[b] == 0) continue;
        double up = wilson_interval(counts[b], table.n).second;
        c = std::max(c, 0.5 * up / bin_mass(unit, d, static_cast<double>(b) + sd - 1.0));
    }
    unit.coefficient = c;
    return unit;
}

WeightSpec calibrate_gaussian_weight(const KernelTable& table, double lipschitz, double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    const int d = table.dim;
    if (table.step * std::sqrt(static_cast<double>(d)) > 1.0)
        throw std::invalid_argument("grid step too coarse for the Gaussian calibration");
    const int w = 2 * table.half + 1;
    std::vector<double> bucket;
    const double norm = std::pow(table.step, 0.5 * d);
    for (std::size_t k = 0; k < table.weights.size(); ++k) {
        std::size_t m = k;
        double r2 = 0.0;
        for (int i = d - 1; i >= 0; --i) {
            int o = static_cast<int>(m % w) - table.half;
            m /= w;
            r2 += double(o) * o;
        }
        auto b = static_cast<std::size_t>(std::floor(std::sqrt(r2) * table.step));
        if (bucket.size() <= b) bucket.resize(b + 1, 0.0);
        bucket[b] = std::max(bucket[b], std::abs(table.weights[k]) / norm);
    }
    // decreasing majorant, then its unit-scale decrements
    for (std::size_t b = bucket.size(); b-- > 1;) bucket[b - 1] = std::max(bucket[b - 1], bucket[b]);
    bucket.push_back(0.0);
    double sum = 0.0;
    const double e = d + beta;
    for (std::size_t b = 0; b + 1 < bucket.size(); ++b) {
        double delta = bucket[b] - bucket[b + 1];
        double m = (std::pow(b + 2.0, -e) - std::pow(b + 3.0, -e)) / e;
        sum += delta * delta / m;
    }
    return WeightSpec::algebraic(beta + 1.0, lipschitz * lipschitz * sum);
}

void write_term_csv(std::ostream& os, const std::vector<TermRow>& rows) {
    auto num = [](double v) {
        if (std::isnan(v)) return std::string();
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    os << "L,I1,I2,I3,I4,rhs,lhs,satisfied\n";
    for (const auto& r : rows)
        os << num(r.L) << ',' << num(r.terms.I1) << ',' << num(r.terms.I2) << ',' << num(r.terms.I3) << ','
           << num(r.terms.I4) << ',' << num(r.rhs) << ',' << num(r.wsg.lhs) << ','
           << (r.wsg.satisfied ? "true" : "false") << '\n';
}

}  // namespace jamstat
