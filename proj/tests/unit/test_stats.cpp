#include "doctest.h"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "jamstat/ppp.hpp"
#include "jamstat/stats.hpp"

using namespace jamstat;

namespace {

std::vector<double> normals(std::uint64_t seed, std::size_t n, double mu = 0.0) {
    Stream s(StreamKey{seed, {}});
    std::vector<double> v(n);
    for (auto& x : v) x = mu + s.normal();
    return v;
}

std::vector<double> quantile_samples(int n, double shift = 0.0) {
    std::vector<double> v;
    for (int i = 1; i <= n; ++i) v.push_back(gsl_cdf_ugaussian_Pinv((i - 0.5) / n) + shift);
    return v;
}

}  // namespace

TEST_CASE("moments") {
    auto c = ensemble_moments(std::vector<double>{3.0, 3.0, 3.0, 3.0});
    CHECK(c.mean == 3.0);
    CHECK(c.var == 0.0);
    auto h = ensemble_moments(std::vector<double>{0.0, 2.0});
    CHECK(h.mean == 1.0);
    CHECK(h.var == 2.0);
    CHECK_THROWS(ensemble_moments(std::vector<double>{1.0}));
    auto v = normals(1, 10000);
    auto m = ensemble_moments(v);
    CHECK(std::abs(m.mean) < 4.0 / 100.0);
    // Var(s^2) = 2 / (n - 1) for unit normals
    CHECK(m.se_var == doctest::Approx(std::sqrt(2.0 / 9999.0)).epsilon(0.1));
}

TEST_CASE("jackknife against brute-force leave-one-out") {
    auto v = normals(2, 57);
    for (auto& x : v) x = std::exp(x);
    auto m = ensemble_moments(v);
    std::vector<double> loo;
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::vector<double> w = v;
        w.erase(w.begin() + static_cast<std::ptrdiff_t>(i));
        double s = 0, q = 0;
        for (double x : w) s += x;
        s /= w.size();
        for (double x : w) q += (x - s) * (x - s);
        loo.push_back(q / (w.size() - 1));
    }
    double lb = 0;
    for (double l : loo) lb += l;
    lb /= loo.size();
    double ss = 0;
    for (double l : loo) ss += (l - lb) * (l - lb);
    CHECK(m.se_var == doctest::Approx(std::sqrt((v.size() - 1.0) / v.size() * ss)).epsilon(1e-10));
}

TEST_CASE("kolmogorov distance") {
    CHECK(kolmogorov_distance({0.0}) == doctest::Approx(0.5));
    for (int n : {10, 100, 1000}) CHECK(kolmogorov_distance(quantile_samples(n)) == doctest::Approx(0.5 / n).epsilon(1e-9));
    CHECK_THROWS(kolmogorov_distance({1.0, std::nan("")}));

    // dense-grid brute force, including left limits at the jumps
    Stream s(StreamKey{3, {}});
    for (int rep = 0; rep < 100; ++rep) {
        std::size_t n = 1 + s.below(30);
        std::vector<double> v(n);
        for (auto& x : v) x = 1.5 * s.normal() + 0.3;
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        auto ecdf = [&](double x, bool left) {
            auto it = left ? std::lower_bound(sorted.begin(), sorted.end(), x) : std::upper_bound(sorted.begin(), sorted.end(), x);
            return double(it - sorted.begin()) / n;
        };
        double brute = 0;
        for (double x = -8; x <= 8; x += 1e-3) brute = std::max(brute, std::abs(ecdf(x, false) - normal_cdf(x)));
        for (double x : sorted) {
            brute = std::max(brute, std::abs(ecdf(x, false) - normal_cdf(x)));
            brute = std::max(brute, std::abs(ecdf(x, true) - normal_cdf(x)));
        }
        double d = kolmogorov_distance(v);
        CHECK(d == doctest::Approx(brute).epsilon(1e-10));
        // invariant under reordering
        std::reverse(v.begin(), v.end());
        CHECK(kolmogorov_distance(v) == d);
    }
}

TEST_CASE("kolmogorov distance of true normals respects the DKW level most of the time") {
    int ok = 0;
    for (int r = 0; r < 100; ++r)
        if (kolmogorov_distance(normals(100 + r, 2000)) <= 1.36 / std::sqrt(2000.0)) ++ok;
    CHECK(ok >= 88);
}

TEST_CASE("wasserstein distance") {
    CHECK(wasserstein1_distance({0.0}) == doctest::Approx(2.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-12));
    double prev = 1e9;
    for (int n : {10, 100, 1000}) {
        double w = wasserstein1_distance(quantile_samples(n));
        CHECK(w < prev);
        prev = w;
    }
    CHECK(wasserstein1_distance(quantile_samples(20000, 0.3)) == doctest::Approx(0.3).epsilon(0.02));
    CHECK(wasserstein1_distance(quantile_samples(20000, -0.7)) == doctest::Approx(0.7).epsilon(0.02));

    // quadrature oracle
    auto v = normals(4, 25, 0.2);
    std::sort(v.begin(), v.end());
    double q = 0, h = 1e-4;
    for (double x = -12; x < 12; x += h) {
        double m = x + 0.5 * h;
        double f = double(std::upper_bound(v.begin(), v.end(), m) - v.begin()) / v.size();
        q += std::abs(f - normal_cdf(m)) * h;
    }
    CHECK(wasserstein1_distance(v) == doctest::Approx(q).epsilon(1e-5));
    // scale equivariance of the fitted version
    auto w = v;
    for (auto& x : w) x = 3.0 * x + 1.0;
    CHECK(wasserstein1_distance_fitted(w) == doctest::Approx(wasserstein1_distance_fitted(v)).epsilon(1e-10));
    CHECK(kolmogorov_distance_fitted(w) == doctest::Approx(kolmogorov_distance_fitted(v)).epsilon(1e-10));
}

TEST_CASE("rate fit") {
    std::vector<std::pair<double, double>> p;
    for (double r : {8.0, 16.0, 32.0, 64.0, 128.0}) p.push_back({r, 3.0 * std::pow(r, -0.5)});
    auto f = rate_fit(p);
    CHECK(f.exponent == doctest::Approx(-0.5));
    CHECK(f.r_squared == doctest::Approx(1.0));
    CHECK(std::exp(f.intercept) == doctest::Approx(3.0));

    std::vector<std::pair<double, double>> e;
    for (double r : {1.0, 2.0, 3.0, 4.0, 5.0}) e.push_back({r, std::exp(-r / 4)});
    auto g = rate_fit(e, FitMode::Exponential);
    CHECK(g.exponent == doctest::Approx(-0.25));
    CHECK(g.r_squared == doctest::Approx(1.0));

    Stream s(StreamKey{5, {}});
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<std::pair<double, double>> n;
        for (double r : {16.0, 32.0, 64.0, 128.0, 256.0}) n.push_back({r, std::pow(r, -0.5) * (1 + 0.05 * s.normal())});
        CHECK(std::abs(rate_fit(n).exponent + 0.5) < 0.1);
    }
    CHECK_THROWS(rate_fit({{1, 1}, {2, 1}, {3, 1}}));
    CHECK_THROWS(rate_fit({{1, 1}, {2, 1}, {3, 0}, {4, 1}}));
}

TEST_CASE("covariance integral") {
    // deterministic lattice measure
    std::vector<std::vector<double>> lattice(50, std::vector<double>(32, 1.0));
    auto z = covariance_integral(lattice, 1, 32, 4);
    CHECK(z.sigma2 == doctest::Approx(0.0));

    // unit Poisson: sigma^2 = intensity
    const int n = 10000;
    std::vector<std::vector<double>> counts(n, std::vector<double>(32, 0.0));
    TorusBox box(1, 32.0);
    CellGrid grid = CellGrid::unit(box);
    for (int r = 0; r < n; ++r) {
        auto pts = sample_ppp(StreamKey{6, {std::uint64_t(r)}}, box, 1.0, 1.0);
        for (auto& p : pts.points) counts[r][grid.cell_of(p.loc)] += 1;
    }
    auto c = covariance_integral(counts, 1, 32, 4);
    CHECK(std::abs(c.sigma2 - 1.0) < 0.05);
    CHECK(c.ci_lo < c.sigma2);
    CHECK_THROWS(covariance_integral(counts, 1, 32, 17));

    // two dimensions, Poisson again
    std::vector<std::vector<double>> c2(400, std::vector<double>(64, 0.0));
    TorusBox b2(2, 8.0);
    CellGrid g2 = CellGrid::unit(b2);
    for (int r = 0; r < 400; ++r) {
        auto pts = sample_ppp(StreamKey{7, {std::uint64_t(r)}}, b2, 2.0, 1.0);
        for (auto& p : pts.points) c2[r][g2.cell_of(p.loc)] += 1;
    }
    auto d = covariance_integral(c2, 2, 8, 2);
    CHECK(std::abs(d.sigma2 - 2.0) < 4.0 * d.std_error + 0.05);
}
