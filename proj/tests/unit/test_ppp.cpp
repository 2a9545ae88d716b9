#include "doctest.h"

#include <cmath>
#include <vector>

#include "jamstat/ppp.hpp"

using namespace jamstat;

TEST_CASE("sample_ppp counts are Poisson") {
    TorusBox box(1, 10.0);
    StreamKey root{2024, {}};
    const int n = 10000;
    double m1 = 0, m2 = 0;
    for (int i = 0; i < n; ++i) {
        auto s = sample_ppp(derive_stream(root, i), box, 1.0, 1.0);
        double k = static_cast<double>(s.size());
        m1 += k;
        m2 += k * k;
        for (auto& p : s.points) {
            CHECK_MESSAGE((p.loc[0] >= -5.0 && p.loc[0] < 5.0), "location outside box");
            CHECK_MESSAGE((p.time >= 0.0 && p.time <= 1.0), "time outside horizon");
        }
    }
    double mean = m1 / n, var = (m2 - n * mean * mean) / (n - 1);
    CHECK(std::abs(mean - 10.0) < 4.0 * std::sqrt(10.0 / n));
    CHECK(std::abs(var / mean - 1.0) < 0.05);
}

TEST_CASE("tiny horizon gives empty sets") {
    TorusBox box(2, 3.0);
    int empty = 0;
    for (int i = 0; i < 200; ++i)
        if (sample_ppp(StreamKey{1, {std::uint64_t(i)}}, box, 1.0, 1e-9).size() == 0) ++empty;
    CHECK(empty == 200);
}

TEST_CASE("same key gives identical sets") {
    TorusBox box(2, 5.0);
    auto a = sample_ppp(StreamKey{9, {1, 2}}, box, 2.0, 3.0);
    auto b = sample_ppp(StreamKey{9, {1, 2}}, box, 2.0, 3.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.points[i].loc == b.points[i].loc);
        CHECK(a.points[i].time == b.points[i].time);
    }
}

TEST_CASE("restriction to sub-boxes: chi-square over a partition") {
    TorusBox box(2, 4.0);
    const int n = 10000;
    std::vector<double> counts(4, 0.0);
    double total = 0;
    for (int i = 0; i < n; ++i) {
        auto s = sample_ppp(StreamKey{55, {std::uint64_t(i)}}, box, 0.5, 1.0);
        for (auto& p : s.points) {
            int q = (p.loc[0] >= 0) + 2 * (p.loc[1] >= 0);
            counts[q] += 1;
            total += 1;
        }
    }
    double chi2 = 0;
    for (double c : counts) chi2 += (c - total / 4) * (c - total / 4) / (total / 4);
    CHECK(chi2 < 11.34);  // 3 dof, p = 0.01
}

TEST_CASE("superposition of two unit samples behaves like intensity two") {
    TorusBox box(1, 8.0);
    const int n = 10000;
    double a1 = 0, a2 = 0, b1 = 0, b2 = 0;
    for (int i = 0; i < n; ++i) {
        double k = double(sample_ppp(StreamKey{1, {std::uint64_t(i), 0}}, box, 1.0, 1.0).size() +
                          sample_ppp(StreamKey{1, {std::uint64_t(i), 1}}, box, 1.0, 1.0).size());
        double m = double(sample_ppp(StreamKey{2, {std::uint64_t(i)}}, box, 2.0, 1.0).size());
        a1 += k;
        a2 += k * k;
        b1 += m;
        b2 += m * m;
    }
    double ma = a1 / n, mb = b1 / n;
    double va = a2 / n - ma * ma, vb = b2 / n - mb * mb;
    CHECK(std::abs(ma - mb) < 4.0 * std::sqrt(2 * 16.0 / n));
    CHECK(std::abs(va / vb - 1.0) < 0.06);
}

TEST_CASE("radius marks") {
    TorusBox box(1, 20.0);
    auto pts = sample_ppp(StreamKey{8, {}}, box, 1.0, 1.0);
    auto d = attach_radius_marks(pts, StreamKey{8, {1}}, RadiusLaw::dirac(1.0));
    for (auto& p : d.points) CHECK(p.mark == 1.0);
    MarkedPointSet empty;
    empty.box = box;
    CHECK(attach_radius_marks(empty, StreamKey{1, {}}, RadiusLaw::dirac(1.0)).size() == 0);

    // Pareto tail with kappa = 3d + beta + 1: empirical survival against the closed form
    const double kappa = 3 * 1 + 0.5 + 1;
    RadiusLaw law = RadiusLaw::pareto_tail(kappa, 0.5);
    MarkedPointSet big = sample_ppp(StreamKey{10, {}}, TorusBox(1, 50000.0), 1.0, 1.0);
    big = attach_radius_marks(big, StreamKey{10, {2}}, law);
    double n = double(big.size());
    for (double l : {0.1, 0.5, 1.0, 2.0, 4.0}) {
        double emp = 0;
        for (auto& p : big.points) emp += p.mark >= l;
        emp /= n;
        double nu = law.survival(l);
        CHECK(std::abs(emp - nu) < 3.0 * std::sqrt(nu * (1 - nu) / n) + 1e-12);
    }
}

TEST_CASE("radius law moments by quadrature") {
    RadiusLaw law = RadiusLaw::pareto_tail(5.5, 0.7);
    for (int d = 1; d <= 3; ++d) {
        // E r^d = int d l^{d-1} S(l) dl, trapezoid on a substituted grid
        double s = 0, h = 1e-3;
        for (double u = h / 2; u < 1.0; u += h) {
            double l = u / (1 - u), jac = 1 / ((1 - u) * (1 - u));
            s += d * std::pow(l, d - 1) * law.survival(l) * jac * h;
        }
        CHECK(law.moment(d) == doctest::Approx(s).epsilon(1e-3));
    }
    RadiusLaw u = RadiusLaw::uniform(1.0, 3.0);
    CHECK(u.moment(2) == doctest::Approx(13.0 / 3.0));
    CHECK(u.survival(2.0) == doctest::Approx(0.5));
    CHECK(law.quantile(1.0 - law.survival(1.3)) == doctest::Approx(1.3));
}

TEST_CASE("driving process cells and resampling") {
    TorusBox box(2, 6.0);
    DrivingProcess x(StreamKey{4, {}}, box, 1.5);
    CHECK(x.grid.count() == 36);
    auto a = x.materialize();
    auto b = x.materialize();
    REQUIRE(a.size() == b.size());
    for (auto& p : a.points) CHECK(x.grid.cell_of(p.loc) < 36);

    auto same = resample_cells(x, {}, StreamKey{99, {}});
    CHECK(same.perturbed.materialize().size() == a.size());

    auto pair = resample_cells(x, {{7, -1}}, StreamKey{99, {}});
    auto pa = pair.perturbed.materialize();
    std::vector<MarkedPoint> out_a, out_b;
    for (auto& p : a.points)
        if (x.grid.cell_of(p.loc) != 7) out_a.push_back(p);
    for (auto& p : pa.points)
        if (x.grid.cell_of(p.loc) != 7) out_b.push_back(p);
    REQUIRE(out_a.size() == out_b.size());
    for (std::size_t i = 0; i < out_a.size(); ++i) CHECK(out_a[i].loc == out_b[i].loc);
}

TEST_CASE("mark-class resampling touches one class only") {
    TorusBox box(1, 10.0);
    DrivingProcess x(StreamKey{6, {}}, box, 3.0);
    x.marks = RadiusLaw::uniform(0.0, 2.4);
    x.mark_classes = true;
    auto pair = resample_cells(x, {{3, 1}}, StreamKey{7, {}});
    std::vector<MarkedPoint> a, b;
    x.cell_points(3, a);
    pair.perturbed.cell_points(3, b);
    auto filt = [](const std::vector<MarkedPoint>& v, bool keep1) {
        std::vector<double> r;
        for (auto& p : v)
            if ((DrivingProcess::mark_class_of(p.mark) == 1) == keep1) r.push_back(p.loc[0]);
        return r;
    };
    CHECK(filt(a, false) == filt(b, false));
}
