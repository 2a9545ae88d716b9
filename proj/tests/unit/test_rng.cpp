#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "jamstat/rng.hpp"

using namespace jamstat;

TEST_CASE("philox known-answer vectors") {
    auto a = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(a[0] == 0x6627e8d5u);
    CHECK(a[1] == 0xe169c58du);
    CHECK(a[2] == 0xbc57ac4cu);
    CHECK(a[3] == 0x9b00dbd8u);
    auto b = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(b[0] == 0x408f276du);
    CHECK(b[1] == 0x41c83b0eu);
    CHECK(b[2] == 0xa20bc7c6u);
    CHECK(b[3] == 0x6d5451fdu);
    auto c = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(c[0] == 0xd16cfe09u);
    CHECK(c[1] == 0x94fdccebu);
    CHECK(c[2] == 0x5001e420u);
    CHECK(c[3] == 0x24126ea1u);
}

TEST_CASE("derive_stream is deterministic and injective") {
    StreamKey root{42, {}};
    CHECK(derive_stream(root, 5) == derive_stream(root, 5));
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i <= 10000; ++i) seen.insert(derive_stream(root, i).material());
    CHECK(seen.size() == 10001);
    Stream s1(derive_stream(root, 9)), s2(derive_stream(root, 9));
    for (int i = 0; i < 100; ++i) CHECK(s1.next_u64() == s2.next_u64());
}

TEST_CASE("sibling streams are uncorrelated") {
    StreamKey root{1234, {}};
    const int n = 20000;
    for (int pair = 0; pair < 20; ++pair) {
        Stream a(derive_stream(root, pair)), b(derive_stream(root, pair + 1));
        double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
        for (int i = 0; i < n; ++i) {
            double x = a.uniform(), y = b.uniform();
            sx += x;
            sy += y;
            sxx += x * x;
            syy += y * y;
            sxy += x * y;
        }
        double cov = sxy / n - sx / n * sy / n;
        double rho = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
        CHECK(std::abs(rho) < 4.0 / std::sqrt(double(n)));
    }
}

TEST_CASE("uniform, normal moments") {
    Stream s(StreamKey{5, {1}});
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0, sn3 = 0;
    for (int i = 0; i < n; ++i) {
        double u = s.uniform();
        CHECK_MESSAGE((u > 0.0 && u < 1.0), "uniform out of range");
        su += u;
        double z = s.normal();
        sn += z;
        sn2 += z * z;
        sn3 += z * z * z;
    }
    CHECK(std::abs(su / n - 0.5) < 4.0 * std::sqrt(1.0 / 12 / n));
    CHECK(std::abs(sn / n) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(sn2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(sn3 / n) < 4.0 * std::sqrt(15.0 / n));
}

TEST_CASE("poisson sampler moments across both regimes") {
    for (double mu : {0.3, 4.0, 9.9, 10.0, 37.5, 1e4}) {
        Stream s(StreamKey{77, {static_cast<std::uint64_t>(mu * 10)}});
        const int n = 40000;
        double m1 = 0, m2 = 0;
        for (int i = 0; i < n; ++i) {
            double k = static_cast<double>(s.poisson(mu));
            m1 += k;
            m2 += k * k;
        }
        double mean = m1 / n, var = m2 / n - mean * mean;
        CHECK(std::abs(mean - mu) < 4.0 * std::sqrt(mu / n));
        // variance of the sample variance for Poisson is about (mu + 2 mu^2)/n
        CHECK(std::abs(var - mu) < 4.0 * std::sqrt((mu + 2 * mu * mu) / n));
    }
}

TEST_CASE("poisson small mean matches pmf") {
    Stream s(StreamKey{3, {}});
    const double mu = 2.5;
    const int n = 100000;
    std::vector<int> h(20, 0);
    for (int i = 0; i < n; ++i) {
        auto k = s.poisson(mu);
        if (k < 20) ++h[k];
    }
    double chi2 = 0;
    for (int k = 0; k < 9; ++k) {
        double p = std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0));
        chi2 += (h[k] - n * p) * (h[k] - n * p) / (n * p);
    }
    CHECK(chi2 < 30.0);  // 8 dof, p ~ 2e-4
}

TEST_CASE("binomial sampler moments") {
    struct C {
        std::uint64_t n;
        double p;
    };
    for (C c : {C{1, 0.5}, C{7, 0.5}, C{15, 0.5}, C{40, 0.5}, C{1000, 0.5}, C{100000000, 0.5}, C{50, 0.9}, C{200, 0.01}}) {
        Stream s(StreamKey{91, {c.n}});
        const int n = 40000;
        double m1 = 0, m2 = 0;
        for (int i = 0; i < n; ++i) {
            double k = static_cast<double>(s.binomial(c.n, c.p));
            CHECK(k <= static_cast<double>(c.n));
            m1 += k;
            m2 += k * k;
        }
        double mu = c.n * c.p, v = c.n * c.p * (1 - c.p);
        double mean = m1 / n, var = m2 / n - mean * mean;
        CHECK(std::abs(mean - mu) < 4.0 * std::sqrt(v / n));
        CHECK(std::abs(var / v - 1.0) < 0.05);
    }
}
