#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "jamstat/fields.hpp"

using namespace jamstat;

TEST_CASE("inclusion void probability") {
    // P(x uncovered) = exp(-lambda v_d E r^d)
    for (int d = 1; d <= 2; ++d) {
        TorusBox box(d, 12.0);
        RadiusLaw law = RadiusLaw::uniform(0.2, 0.8);
        const double lam = 0.7;
        const int n = 3000;
        int uncovered = 0;
        for (int i = 0; i < n; ++i) {
            auto f = inclusion_field(StreamKey{11, {std::uint64_t(d), std::uint64_t(i)}}, box, lam, law, 0.0, 1.0);
            if (!f->covered(Point(d))) ++uncovered;
        }
        double p = std::exp(-lam * unit_ball_volume(d) * law.moment(d));
        CHECK(std::abs(uncovered / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
        CHECK(inclusion_mean(lam, law, d, 0.0, 1.0) == doctest::Approx(1.0 - p));
    }
}

TEST_CASE("inclusion 1D exact average against a fine grid") {
    TorusBox box(1, 30.0);
    auto f = inclusion_field(StreamKey{12, {}}, box, 0.4, RadiusLaw::pareto_tail(5.0, 0.5), -1.0, 2.0);
    for (double L : {1.0, 7.3, 20.0}) {
        double exact = f->average(L);
        double fine = grid_average(*f, L, 1e-4);
        CHECK(exact == doctest::Approx(fine).epsilon(1e-3));
    }
}

TEST_CASE("large balls are found") {
    TorusBox box(2, 20.0);
    std::vector<Point> c{Point{0.0, 0.0}, Point{5.0, 5.0}, Point{-8.0, 3.0}};
    std::vector<double> r{0.1, 0.1, 6.0};
    InclusionField f(box, c, r, 0.0, 1.0, 1.0);
    CHECK(f.covered(Point{-9.0 + 20.0 - 15.0, 3.0}));  // wraps across the left edge region
    CHECK(f.covered(Point{-8.0 + 5.9, 3.0}));
    CHECK_FALSE(f.covered(Point{-8.0 + 6.1, 3.0}));
    CHECK(f.covered(Point{5.05, 5.0}));
}

TEST_CASE("voronoi bisector and ties") {
    TorusBox box(1, 10.0, Boundary::Free);
    VoronoiField f(box, {Point{-1.0}, Point{1.0}}, {3.0, 7.0}, 4.0, 1.0);
    CHECK(f.value(Point{-0.01}) == 3.0);
    CHECK(f.value(Point{0.01}) == 7.0);
    CHECK(f.value(Point{0.0}) == 3.0);  // tie goes to the lexicographically smaller generator
    CHECK(f.average(2.0) == doctest::Approx(5.0));
    CHECK(f.average(4.0) == doctest::Approx(5.0));

    TorusBox t(1, 10.0);
    VoronoiField g(t, {Point{-4.0}, Point{4.0}}, {1.0, 2.0}, 1.0, 1.0);
    CHECK(g.value(Point{4.9}) == 2.0);
    CHECK(g.value(Point{-4.9}) == 1.0);  // periodic midpoint sits at +-5
    CHECK(g.average(10.0) == doctest::Approx(1.5));

    TorusBox b2(2, 10.0);
    VoronoiField h(b2, {Point{0.0, 0.0}, Point{2.0, 0.0}}, {0.0, 1.0}, 1.0, 1.0);
    CHECK(h.value(Point{0.9, 3.0}) == 0.0);
    CHECK(h.value(Point{1.1, -3.0}) == 1.0);
}

TEST_CASE("voronoi 1D exact average against a fine grid") {
    TorusBox box(1, 40.0);
    auto f = voronoi_field(StreamKey{13, {}}, box, 0.8, RadiusLaw::uniform(0.0, 1.0));
    for (double L : {2.5, 13.0, 30.0}) CHECK(f->average(L) == doctest::Approx(grid_average(*f, L, 1e-4)).epsilon(1e-3));
}

TEST_CASE("voronoi conditioning on nonempty") {
    TorusBox box(1, 2.0);
    int conditioned = 0;
    for (int i = 0; i < 200; ++i) {
        auto f = voronoi_field(StreamKey{14, {std::uint64_t(i)}}, box, 0.5, RadiusLaw::uniform(0.0, 1.0));
        CHECK(f->generators().size() > 0);
        conditioned += f->conditioning_attempts > 0;
    }
    CHECK(conditioned > 0);
}

TEST_CASE("kernel table normalization and truncation") {
    auto t = make_kernel_table(Kernel{KernelKind::CompactBump, 2.0}, 1, 0.25);
    double ss = 0;
    for (double w : t.weights) ss += w * w;
    CHECK(ss == doctest::Approx(1.0));
    CHECK(t.half == 8);
    CHECK(t.weights.front() == 0.0);

    auto p = make_kernel_table(Kernel{KernelKind::PowerDecay, 3.0}, 1, 0.25);
    CHECK(p.truncation == doctest::Approx(1.25 * p.taper_start));
    CHECK(p.tail_fraction == doctest::Approx(1e-6).epsilon(1e-3));
    // (1+r)^-4 tail share is (1+B)^-3 in d = 1
    CHECK(std::pow(1 + p.taper_start, -3.0) == doctest::Approx(1e-6).epsilon(1e-4));

    auto capped = make_kernel_table(Kernel{KernelKind::PowerDecay, 0.5}, 1, 0.25, 64.0);
    CHECK(capped.truncation == doctest::Approx(64.0));
    CHECK(capped.tail_fraction > 0.1);

    CHECK_THROWS(make_kernel_table(Kernel{KernelKind::CompactBump, 0.5}, 1, 0.25));
    CHECK_THROWS(make_kernel_table(Kernel{KernelKind::PowerDecay, 1.0}, 1, 0.25));
}

TEST_CASE("gaussian white noise for the discrete delta") {
    TorusBox box(1, 4096.0);
    auto f = gaussian_field(StreamKey{15, {}}, box, Kernel{KernelKind::DiscreteDelta, 0.0}, Nonlinearity::Identity, 1.0);
    const std::size_t n = f->size();
    double m = 0, v = 0, c1 = 0;
    for (std::size_t i = 0; i < n; ++i) m += f->gaussian_at(i);
    m /= n;
    for (std::size_t i = 0; i < n; ++i) {
        double a = f->gaussian_at(i) - m;
        v += a * a;
        c1 += a * (f->gaussian_at((i + 1) % n) - m);
    }
    v /= n;
    c1 /= n;
    CHECK(std::abs(m) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(v - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(c1) < 4.0 / std::sqrt(double(n)));
}

TEST_CASE("gaussian autocovariance matches the stencil autocorrelation") {
    const double step = 0.25;
    TorusBox box(1, 512.0);
    Kernel k{KernelKind::CompactBump, 1.5};
    GaussianGenerator gen(box, k, Nonlinearity::Identity, step);
    const auto& w = gen.table().weights;
    auto oracle = [&](std::size_t lag) {
        double s = 0;
        for (std::size_t i = 0; i + lag < w.size(); ++i) s += w[i] * w[i + lag];
        return s;
    };
    const int reps = 20;
    std::vector<double> cov(10, 0.0);
    std::size_t n = 0;
    for (int r = 0; r < reps; ++r) {
        auto f = gen.sample(StreamKey{16, {std::uint64_t(r)}});
        n = f->size();
        for (std::size_t lag = 0; lag < cov.size(); ++lag)
            for (std::size_t i = 0; i < n; ++i) cov[lag] += f->gaussian_at(i) * f->gaussian_at((i + lag) % n);
    }
    for (std::size_t lag = 0; lag < cov.size(); ++lag) {
        double c = cov[lag] / (reps * double(n));
        // correlation length ~12 cells: effective sample size ~ reps n / 12
        CHECK(std::abs(c - oracle(lag)) < 4.0 * std::sqrt(2.0 * 12.0 / (reps * double(n))));
    }
}

TEST_CASE("gaussian in two dimensions has unit variance and zero skew") {
    TorusBox box(2, 32.0);
    GaussianGenerator gen(box, Kernel{KernelKind::CompactBump, 1.0}, Nonlinearity::Identity, 0.25);
    double s1 = 0, s2 = 0, s3 = 0, n = 0;
    for (int r = 0; r < 10; ++r) {
        auto f = gen.sample(StreamKey{17, {std::uint64_t(r)}});
        for (std::size_t i = 0; i < f->size(); ++i) {
            double g = f->gaussian_at(i);
            s1 += g;
            s2 += g * g;
            s3 += g * g * g;
            n += 1;
        }
    }
    double m = s1 / n;
    CHECK(std::abs(m) < 0.05);
    CHECK(std::abs(s2 / n - 1.0) < 0.05);
    CHECK(std::abs(s3 / n) < 0.1);
}

TEST_CASE("nonlinearities") {
    CHECK(nonlinearity_mean(Nonlinearity::Identity) == doctest::Approx(0.0));
    CHECK(nonlinearity_mean(Nonlinearity::Tanh) == doctest::Approx(0.0));
    CHECK(nonlinearity_mean(Nonlinearity::Logistic) == doctest::Approx(0.5));
    CHECK(nonlinearity_lipschitz(Nonlinearity::Logistic) == 0.25);
    CHECK(apply_nonlinearity(Nonlinearity::Tanh, 0.3) == doctest::Approx(std::tanh(0.3)));
}

TEST_CASE("gaussian average uses fractional cell weights") {
    TorusBox box(1, 64.0);
    auto f = gaussian_field(StreamKey{18, {}}, box, Kernel{KernelKind::CompactBump, 1.0}, Nonlinearity::Tanh, 0.25);
    for (double L : {1.0, 3.3, 10.1}) CHECK(f->average(L) == doctest::Approx(grid_average(*f, L, 1e-4)).epsilon(1e-3));
    auto g = gaussian_field(StreamKey{18, {}}, box, Kernel{KernelKind::CompactBump, 1.0}, Nonlinearity::Tanh, 0.25);
    CHECK(f->average(5.0) == g->average(5.0));
}

TEST_CASE("raster round trip") {
    TorusBox box(2, 8.0);
    auto f = gaussian_field(StreamKey{19, {}}, box, Kernel{KernelKind::CompactBump, 1.0}, Nonlinearity::Logistic, 0.25);
    Raster r = f->raster(0.25);
    CHECK(r.dims[0] == 32);
    CHECK(r.values.size() == 32 * 32);
    std::stringstream ss;
    write_raster_binary(ss, r);
    Raster q = read_raster_binary(ss);
    CHECK(q.dim == 2);
    CHECK(q.dims == r.dims);
    CHECK(q.step == r.step);
    CHECK(q.values == r.values);
    std::stringstream bad("JSFX");
    CHECK_THROWS(read_raster_binary(bad));
    std::ostringstream csv;
    write_raster_csv(csv, r);
    std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 32);
}

TEST_CASE("spatial average margin") {
    TorusBox box(1, 10.0);
    auto f = inclusion_field(StreamKey{20, {}}, box, 1.0, RadiusLaw::dirac(0.5), 0.0, 1.0);
    CHECK_THROWS(spatial_average(*f, 9.5, 0.5, 0.0));
    CHECK_NOTHROW(spatial_average(*f, 4.0, 0.5, 0.0));
    double z = spatial_average(*f, 4.0, 0.5, 0.3);
    CHECK(z == doctest::Approx(2.0 * (f->average(4.0) - 0.3)));
}

TEST_CASE("parking field covers accepted centers") {
    TorusBox box(1, 20.0);
    DrivingProcess p(StreamKey{21, {}}, box, 1.0);
    auto f = realize_parking(p, Solid::ball(0.5), 0.0, 1.0);
    CHECK(f->model() == FieldModel::Parking);
    for (auto& c : f->centers()) CHECK(f->covered(c));
    CHECK(f->average(10.0) > 0.5);
}

TEST_CASE("kernel extent agrees with the full table") {
    for (Kernel k : {Kernel{KernelKind::PowerDecay, 1.5}, Kernel{KernelKind::PowerDecay, 0.5}, Kernel{KernelKind::CompactBump, 2.0}}) {
        auto a = kernel_extent(k, 1, 0.25, 512.0);
        auto b = make_kernel_table(k, 1, 0.25, 512.0);
        CHECK(a.half == b.half);
        CHECK(a.truncation == b.truncation);
        CHECK(a.tail_fraction == b.tail_fraction);
        CHECK(b.weights.size() == 2 * static_cast<std::size_t>(b.half) + 1);
    }
}
