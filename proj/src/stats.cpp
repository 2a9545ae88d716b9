#include "jamstat/stats.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace jamstat {

Moments ensemble_moments(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 2) throw std::invalid_argument("ensemble moments need at least two values");
    Moments m;
    m.n = n;
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / static_cast<double>(n);
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; })) m.mean = v[0];
    double q = 0.0;
    for (double x : v) q += (x - m.mean) * (x - m.mean);
    const double nn = static_cast<double>(n);
    m.var = q / (nn - 1.0);
    // the jackknife error of the mean coincides with sd / sqrt(n)
    m.se_mean = std::sqrt(m.var / nn);
    if (n < 3) {
        m.se_var = std::numeric_limits<double>::quiet_NaN();
        return m;
    }
    std::vector<double> loo(n);
    double lbar = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double y = v[i] - m.mean;
        double mi = -y / (nn - 1.0);  // leave-one-out mean, centered
        loo[i] = (q - y * y - (nn - 1.0) * mi * mi) / (nn - 2.0);
        lbar += loo[i];
    }
    lbar /= nn;
    double ss = 0.0;
    for (double l : loo) ss += (l - lbar) * (l - lbar);
    m.se_var = std::sqrt((nn - 1.0) / nn * ss);
    return m;
}

Moments ensemble_moments(const ReplicateEnsemble& e) {
    if (!e.seeds.empty() && e.seeds.size() != e.values.size())
        throw std::invalid_argument("ensemble values and seeds differ in length");
    return ensemble_moments(e.values);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

namespace {

void check_finite(const std::vector<double>& s) {
    if (s.empty()) throw std::invalid_argument("distance needs at least one sample");
    for (double x : s)
        if (!std::isfinite(x)) throw std::invalid_argument("non-finite sample");
}

// Psi(x) = int_{-inf}^x Phi
double psi(double x) { return x * normal_cdf(x) + normal_pdf(x); }

// int_a^b |c - Phi(x)| dx
double staircase_gap(double a, double b, double c) {
    auto lower = [&](double s, double e) {  // int (c - Phi), Phi <= c on [s, e]
        return c <= 0.5 ? c * (e - s) - (psi(e) - psi(s)) : (psi(-s) - psi(-e)) - (1.0 - c) * (e - s);
    };
    auto upper = [&](double s, double e) {  // int (Phi - c), Phi >= c on [s, e]
        return c <= 0.5 ? (psi(e) - psi(s)) - c * (e - s) : (1.0 - c) * (e - s) - (psi(-s) - psi(-e));
    };
    if (c <= 0.0) return psi(b) - psi(a);
    if (c >= 1.0) return psi(-a) - psi(-b);
    double q = gsl_cdf_ugaussian_Pinv(c);
    if (q <= a) return upper(a, b);
    if (q >= b) return lower(a, b);
    return lower(a, q) + upper(q, b);
}

std::vector<double> standardized(std::vector<double> s, double mu, double sd) {
    if (!(sd > 0.0)) throw std::invalid_argument("reference standard deviation must be positive");
    for (auto& x : s) x = (x - mu) / sd;
    std::sort(s.begin(), s.end());
    return s;
}

std::pair<double, double> fitted(const std::vector<double>& s) {
    if (s.size() < 2) return {s.empty() ? 0.0 : s[0], 1.0};
    Moments m = ensemble_moments(s);
    return {m.mean, m.var > 0.0 ? std::sqrt(m.var) : 1.0};
}

}  // namespace

double kolmogorov_distance(std::vector<double> samples, double mu, double sd) {
    check_finite(samples);
    auto s = standardized(std::move(samples), mu, sd);
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double f = normal_cdf(s[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return std::min(1.0, d);
}

double wasserstein1_distance(std::vector<double> samples, double mu, double sd) {
    check_finite(samples);
    auto s = standardized(std::move(samples), mu, sd);
    const std::size_t n = s.size();
    double w = psi(s.front()) + psi(-s.back());
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (s[i + 1] > s[i]) w += staircase_gap(s[i], s[i + 1], static_cast<double>(i + 1) / static_cast<double>(n));
    return w * sd;
}

double kolmogorov_distance_fitted(const std::vector<double>& samples) {
    check_finite(samples);
    auto [m, sd] = fitted(samples);
    return kolmogorov_distance(samples, m, sd);
}

double wasserstein1_distance_fitted(const std::vector<double>& samples) {
    check_finite(samples);
    auto [m, sd] = fitted(samples);
    return wasserstein1_distance(samples, m, sd) / sd;
}

RateFit rate_fit(const std::vector<std::pair<double, double>>& points, FitMode mode) {
    if (points.size() < 4) throw std::invalid_argument("rate fit needs at least four scales");
    RateFit f;
    f.mode = mode;
    f.points = points;
    std::vector<double> xs, ys;
    for (auto& [r, v] : points) {
        if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("rate fit needs positive values");
        if (mode == FitMode::Power && !(r > 0.0)) throw std::invalid_argument("power fit needs positive scales");
        xs.push_back(mode == FitMode::Power ? std::log(r) : r);
        ys.push_back(std::log(v));
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("rate fit needs distinct scales");
    f.exponent = sxy / sxx;
    f.intercept = my - f.exponent * mx;
    double res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double e = ys[i] - f.intercept - f.exponent * xs[i];
        res += e * e;
    }
    f.r_squared = syy > 0.0 ? std::clamp(1.0 - res / syy, 0.0, 1.0) : 1.0;
    return f;
}

CovarianceIntegral covariance_integral(const std::vector<std::vector<double>>& cell_counts, int dim, int cells_per_axis,
                                       int cutoff) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("dimension must be 1, 2 or 3");
    if (cutoff < 0 || 2 * cutoff > cells_per_axis) throw std::invalid_argument("cutoff must be at most R/2");
    if (cell_counts.size() < 2) throw std::invalid_argument("covariance integral needs at least two replicates");
    const int n = cells_per_axis;
    std::size_t total = 1;
    for (int i = 0; i < dim; ++i) total *= static_cast<std::size_t>(n);
    double mean = 0.0;
    for (const auto& c : cell_counts) {
        if (c.size() != total) throw std::invalid_argument("cell count vector has the wrong size");
        for (double v : c) mean += v;
    }
    mean /= static_cast<double>(total * cell_counts.size());

    // lattice shifts within the cutoff, tagged by outer shell membership
    std::vector<std::pair<std::array<int, 3>, bool>> shifts;
    for (int a = -cutoff; a <= cutoff; ++a)
        for (int b = dim > 1 ? -cutoff : 0; b <= (dim > 1 ? cutoff : 0); ++b)
            for (int c = dim > 2 ? -cutoff : 0; c <= (dim > 2 ? cutoff : 0); ++c) {
                double r = std::sqrt(double(a * a + b * b + c * c));
                if (r > cutoff) continue;
                shifts.push_back({{a, b, c}, r > cutoff - 1});
            }

    std::vector<double> est(cell_counts.size()), shell(cell_counts.size());
    std::vector<double> y(total);
    for (std::size_t r = 0; r < cell_counts.size(); ++r) {
        for (std::size_t k = 0; k < total; ++k) y[k] = cell_counts[r][k] - mean;
        double s = 0.0, o = 0.0;
        for (const auto& [h, outer] : shifts) {
            double acc = 0.0;
            for (std::size_t k = 0; k < total; ++k) {
                std::size_t m = k, j = 0;
                std::array<int, 3> c{0, 0, 0};
                for (int i = dim - 1; i >= 0; --i) {
                    c[i] = static_cast<int>(m % n);
                    m /= n;
                }
                for (int i = 0; i < dim; ++i) j = j * n + static_cast<std::size_t>(((c[i] + h[i]) % n + n) % n);
                acc += y[k] * y[j];
            }
            acc /= static_cast<double>(total);
            s += acc;
            if (outer) o += acc;
        }
        est[r] = s;
        shell[r] = o;
    }
    CovarianceIntegral out;
    out.cutoff = cutoff;
    out.n = cell_counts.size();
    Moments m = ensemble_moments(est);
    out.sigma2 = m.mean;
    out.std_error = m.se_mean;
    out.ci_lo = m.mean - 1.959963984540054 * m.se_mean;
    out.ci_hi = m.mean + 1.959963984540054 * m.se_mean;
    double o = 0.0;
    for (double v : shell) o += v;
    out.outer_shell = o / static_cast<double>(shell.size());
    out.truncation_warning = std::abs(out.outer_shell) > 0.1 * std::abs(out.sigma2);
    return out;
}

}  // namespace jamstat
