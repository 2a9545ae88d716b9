#include "doctest.h"

#include <cmath>
#include <sstream>

#include "jamstat/coupling.hpp"

using namespace jamstat;

namespace {

Functional average_functional(double L, double gamma) {
    return [L, gamma](const FieldSample& f) { return std::pow(L, gamma) * f.average(L); };
}

// the outputs agree outside Q(x) + B_rho on a dense probe set
bool agrees_beyond(const FieldSample& a, const FieldSample& b, const Point& x, double rho, int probes) {
    const TorusBox& box = a.box();
    Stream s(StreamKey{777, {}});
    for (int i = 0; i < probes; ++i) {
        Point y(box.dim);
        double d2 = 0;
        for (int k = 0; k < box.dim; ++k) {
            y.x[k] = box.lo() + box.side * s.uniform();
            double e = std::max(0.0, std::abs(axis_delta(box, x.x[k], y.x[k])) - 0.5);
            d2 += e * e;
        }
        if (std::sqrt(d2) > rho && a.value(y) != b.value(y)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("identical realizations") {
    TorusBox box(1, 20.0);
    InclusionField f(box, {Point{0.0}, Point{3.0}}, {0.5, 0.5}, 0.0, 1.0, 1.0);
    auto d = disagreement(f, f, Point{0.0});
    CHECK_FALSE(d.differ);
    CHECK(action_radius(f, f, Point{0.0}) == 0.0);
    CHECK(discrete_derivative(average_functional(4.0, 0.5), f, f, Point{0.0}, 1) == 0.0);
}

TEST_CASE("hand-computed 1D inclusion disagreement") {
    TorusBox box(1, 20.0);
    InclusionField a(box, {Point{0.0}, Point{3.0}}, {0.5, 0.5}, 0.0, 1.0, 1.0);
    InclusionField b(box, {Point{3.0}}, {0.5}, 0.0, 1.0, 1.0);
    auto d = disagreement(a, b, Point{0.0});
    CHECK(d.differ);
    CHECK(d.cheb == doctest::Approx(0.5));
    CHECK(d.from_cell == doctest::Approx(0.0));
    CHECK(action_radius(d, box) == 0.0);

    InclusionField big(box, {Point{0.0}, Point{3.0}}, {2.3, 0.5}, 0.0, 1.0, 1.0);
    auto e = disagreement(big, b, Point{0.0});
    CHECK(e.cheb == doctest::Approx(2.3));
    CHECK(action_radius(e, box) == 2.0);

    // a changed ball hidden under a common one changes nothing
    InclusionField hid(box, {Point{0.0}, Point{0.1}}, {0.5, 1.0}, 0.0, 1.0, 1.0);
    InclusionField cover(box, {Point{0.1}}, {1.0}, 0.0, 1.0, 1.0);
    CHECK_FALSE(disagreement(hid, cover, Point{0.0}).differ);

    // wrap-around: a ball near the edge seen from the other side
    InclusionField w(box, {Point{9.8}}, {0.5}, 0.0, 1.0, 1.0);
    InclusionField none(box, {}, {}, 0.0, 1.0, 1.0);
    auto g = disagreement(w, none, Point{-9.5});
    CHECK(g.cheb == doctest::Approx(1.2));  // [9.3, 10.3] wraps to [-1.2, -0.2] around x
}

TEST_CASE("action radius dyadic search returns the integer ceiling") {
    TorusBox box(1, 100.0);
    for (double e : {0.3, 1.0, 1.2, 2.0, 5.5, 17.0, 31.9}) {
        Disagreement d{true, e + 0.5, e};
        CHECK(action_radius(d, box) == std::ceil(e));
    }
    Disagreement inf{true, kRadiusSentinel, kRadiusSentinel};
    CHECK(action_radius(inf, box) == kRadiusSentinel);
}

TEST_CASE("inclusion: radius bounded by the largest changed radius") {
    CouplingSpec spec;
    spec.model = CoupledModel::Inclusion;
    spec.box = TorusBox(2, 16.0);
    spec.law = RadiusLaw::uniform(0.1, 1.7);
    for (int i = 0; i < 200; ++i) {
        auto s = couple(spec, StreamKey{70, {std::uint64_t(i)}}, 5);
        // centers lie in Q(x), radii <= 1.7, so the change stays within r_max + cell diameter
        CHECK(s.rho <= 1.7 + std::sqrt(2.0) + 1e-12);
        CHECK(agrees_beyond(*s.original, *s.perturbed, s.center, s.rho, 2000));
        if (!s.input_changed) CHECK(s.rho == 0.0);
    }
}

TEST_CASE("action radius is certified and tight in one dimension") {
    for (auto model : {CoupledModel::Inclusion, CoupledModel::Voronoi, CoupledModel::Parking}) {
        CouplingSpec spec;
        spec.model = model;
        spec.box = TorusBox(1, 40.0);
        spec.law = model == CoupledModel::Voronoi ? RadiusLaw::uniform(0.0, 1.0) : RadiusLaw::uniform(0.2, 2.0);
        int tight = 0, changed = 0;
        for (int i = 0; i < 100; ++i) {
            auto s = couple(spec, StreamKey{71, {std::uint64_t(model), std::uint64_t(i)}}, 20);
            REQUIRE(std::isfinite(s.rho));
            CHECK(agrees_beyond(*s.original, *s.perturbed, s.center, s.rho, 4000));
            if (s.dis.differ && s.rho >= 1) {
                ++changed;
                if (!agrees_beyond(*s.original, *s.perturbed, s.center, s.rho - 1.0, 4000)) ++tight;
            }
        }
        CHECK(tight >= changed * 9 / 10);  // probes miss thin slivers only rarely
    }
}

TEST_CASE("voronoi action radius in two dimensions") {
    CouplingSpec spec;
    spec.model = CoupledModel::Voronoi;
    spec.box = TorusBox(2, 16.0);
    spec.law = RadiusLaw::uniform(0.0, 1.0);
    for (int i = 0; i < 60; ++i) {
        auto s = couple(spec, StreamKey{72, {std::uint64_t(i)}}, 100);
        CHECK(agrees_beyond(*s.original, *s.perturbed, s.center, s.rho, 3000));
    }
}

TEST_CASE("voronoi cell of a two-point tessellation") {
    TorusBox box(2, 20.0, Boundary::Free);
    VoronoiField a(box, {Point{-1.0, 0.0}, Point{1.0, 0.0}}, {0.0, 1.0}, 1.0, 1.0);
    VoronoiField b(box, {Point{-1.0, 0.0}}, {0.0}, 1.0, 1.0);
    auto d = disagreement(a, b, Point{0.0, 0.0});
    // the removed generator owned the half plane x > 0 of the box
    CHECK(d.cheb == doctest::Approx(10.0));
    CHECK(d.from_cell == doctest::Approx(std::hypot(9.5, 9.5)));
}

TEST_CASE("discrete derivative indicator") {
    TorusBox box(1, 40.0);
    InclusionField a(box, {Point{0.0}, Point{6.0}}, {1.4, 0.5}, 0.0, 1.0, 1.0);
    InclusionField b(box, {Point{6.0}}, {0.5}, 0.0, 1.0, 1.0);
    auto z = average_functional(8.0, 0.5);
    Point x{0.0};
    // disagreement reaches |y| = 1.4, inside Q_{2l+1} iff l + 1/2 >= 1.4
    CHECK(discrete_derivative(z, a, b, x, 0) == 0.0);
    double raw = z(a) - z(b);
    CHECK(raw == doctest::Approx(std::sqrt(8.0) * 2.8 / 8.0));
    CHECK(discrete_derivative(z, a, b, x, 1) == raw);
    CHECK(discrete_derivative(z, a, b, x, 5) == raw);
    // bound |d Z_L| <= |A1 - A0| L^{-d/2} |B_{l+1}(x) cap Q_L|
    for (int ell = 0; ell < 6; ++ell) {
        double v = discrete_derivative(z, a, b, x, ell);
        double cap = std::min(2.0 * (ell + 1), 8.0);
        CHECK(std::abs(v) <= std::pow(8.0, -0.5) * cap + 1e-12);
    }
}

TEST_CASE("derivative equals the raw difference above the action radius") {
    CouplingSpec spec;
    spec.model = CoupledModel::Parking;
    spec.box = TorusBox(1, 64.0);
    auto z = average_functional(16.0, 0.5);
    for (int i = 0; i < 50; ++i) {
        auto s = couple(spec, StreamKey{73, {std::uint64_t(i)}}, 32);
        int ell = static_cast<int>(std::ceil(s.dis.cheb));
        CHECK(discrete_derivative(z, *s.original, *s.perturbed, s.center, ell) == z(*s.original) - z(*s.perturbed));
        if (s.dis.cheb > 1.0)
            CHECK(discrete_derivative(z, *s.original, *s.perturbed, s.center,
                                      static_cast<int>(std::floor(s.dis.cheb - 0.5 - 1e-9))) == 0.0);
    }
}

TEST_CASE("second derivative") {
    CouplingSpec spec;
    spec.model = CoupledModel::Inclusion;
    spec.box = TorusBox(1, 64.0);
    spec.law = RadiusLaw::uniform(0.2, 0.8);
    auto z = average_functional(32.0, 0.5);
    for (int i = 0; i < 30; ++i) {
        StreamKey k{74, {std::uint64_t(i)}};
        DrivingProcess x = driving_process(spec, k);
        StreamKey k2{75, {std::uint64_t(i)}};
        std::size_t c1 = 30, c2 = 40;  // farther apart than twice the largest radius
        DrivingProcess x1 = with_resampled(x, {{c1, -1}}, k2);
        DrivingProcess x2 = with_resampled(x, {{c2, -1}}, k2);
        DrivingProcess x12 = with_resampled(x1, {{c2, -1}}, k2);
        auto a = realize(spec, x), a1 = realize(spec, x1), a2 = realize(spec, x2), a12 = realize(spec, x12);
        Point p1 = x.grid.cell_center(c1), p2 = x.grid.cell_center(c2);
        double v = discrete_second_derivative(z, *a, *a1, *a2, *a12, p1, 3, p2, 3);
        CHECK(std::abs(v) < 1e-12);
        // symmetric in the two cells
        double w = discrete_second_derivative(z, *a, *a2, *a1, *a12, p2, 3, p1, 3);
        CHECK(std::abs(v + 0.0 - w) < 1e-12);
        // X^{x} = X gives zero
        CHECK(discrete_second_derivative(z, *a, *a, *a2, *a2, p1, 3, p2, 3) == 0.0);
    }
    // overlapping influence: second difference of the union is nonzero
    TorusBox box(1, 40.0);
    InclusionField base(box, {}, {}, 0.0, 1.0, 1.0);
    InclusionField one(box, {Point{0.0}}, {1.0}, 0.0, 1.0, 1.0);
    InclusionField two(box, {Point{1.0}}, {1.0}, 0.0, 1.0, 1.0);
    InclusionField both(box, {Point{0.0}, Point{1.0}}, {1.0, 1.0}, 0.0, 1.0, 1.0);
    double v = discrete_second_derivative(z, base, one, two, both, Point{0.0}, 3, Point{1.0}, 3);
    CHECK(v == doctest::Approx(std::sqrt(32.0) * (-1.0) / 32.0));
}

TEST_CASE("weights") {
    auto [lo, hi] = wilson_interval(0, 100);
    CHECK(lo == 0.0);
    CHECK(hi == doctest::Approx(3.8414588 / 103.8414588).epsilon(1e-6));
    auto [l2, h2] = wilson_interval(50, 100);
    CHECK(l2 < 0.5);
    CHECK(h2 > 0.5);
    CHECK(l2 + h2 == doctest::Approx(1.0));

    CouplingSpec empty;
    empty.model = CoupledModel::Inclusion;
    empty.box = TorusBox(1, 16.0);
    empty.intensity = 1e-12;
    auto w = weight_estimate(empty, StreamKey{76, {}}, {.max_ell = 8, .n = 100});
    for (auto& r : w.rows) CHECK(r.pi_hat == 0.0);
    CHECK_THROWS(weight_estimate(empty, StreamKey{76, {}}, {.n = 10}));

    CouplingSpec inc;
    inc.model = CoupledModel::Inclusion;
    inc.box = TorusBox(1, 32.0);
    inc.law = RadiusLaw::pareto_tail(5.5, 1.0);
    inc.mark_classes = true;
    for (int t = 0; t <= 2; ++t) {
        auto wt = weight_estimate(inc, StreamKey{77, {std::uint64_t(t)}},
                                  {.t = t, .max_ell = 6, .n = 2000, .mode = RadiusMode::Class});
        double nu = inc.law.survival(std::max(0.0, t - 0.5)) - inc.law.survival(t + 0.5);
        for (auto& r : wt.rows) {
            double bound = (r.ell - 1 <= t && t < r.ell) ? 2.0 * nu : 0.0;
            CHECK(r.ci_lo <= bound);
        }
    }
    std::ostringstream os;
    write_weight_csv(os, {w});
    CHECK(os.str().rfind("t,ell,pi_hat,ci_lo,ci_hi,n\n", 0) == 0);
}

TEST_CASE("resampling preserves the law of window counts") {
    CouplingSpec spec;
    spec.model = CoupledModel::Inclusion;
    spec.box = TorusBox(1, 16.0);
    const int n = 4000;
    double a1 = 0, a2 = 0, b1 = 0, b2 = 0;
    for (int i = 0; i < n; ++i) {
        StreamKey k{78, {std::uint64_t(i)}};
        auto pair = resample_cells(driving_process(spec, k), {{8, -1}, {9, -1}}, StreamKey{79, {std::uint64_t(i)}});
        double x = double(pair.original.materialize().size()), y = double(pair.perturbed.materialize().size());
        a1 += x;
        a2 += x * x;
        b1 += y;
        b2 += y * y;
    }
    double ma = a1 / n, mb = b1 / n, va = a2 / n - ma * ma, vb = b2 / n - mb * mb;
    CHECK(std::abs(ma - mb) < 4.0 * std::sqrt(2.0 * 16.0 / n));
    CHECK(std::abs(va / vb - 1.0) < 0.1);
}
