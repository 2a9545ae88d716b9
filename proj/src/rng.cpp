#include "jamstat/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace jamstat {

namespace {
constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}
}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
    for (int r = 0; r < 10; ++r) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::uint64_t mix_key(std::uint64_t parent, std::uint64_t child) {
    return splitmix64(parent ^ splitmix64(child + 0x632BE59BD9B4E019ull));
}

std::uint64_t StreamKey::material() const {
    std::uint64_t h = splitmix64(seed ^ 0xA0761D6478BD642Full);
    for (auto p : path) h = mix_key(h, p);
    return h;
}

std::string StreamKey::to_string() const {
    std::ostringstream os;
    os << seed;
    for (auto p : path) os << '/' << p;
    return os.str();
}

StreamKey derive_stream(const StreamKey& key, std::uint64_t child) {
    StreamKey k = key;
    k.path.push_back(child);
    return k;
}

void Stream::refill() {
    std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), 0u, 0u};
    buf_ = philox4x32(ctr, {static_cast<std::uint32_t>(key_), static_cast<std::uint32_t>(key_ >> 32)});
    ++counter_;
    pos_ = 0;
}

std::uint64_t Stream::next_u64() {
    if (pos_ > 2) refill();
    std::uint64_t v = (static_cast<std::uint64_t>(buf_[pos_]) << 32) | buf_[pos_ + 1];
    pos_ += 2;
    return v;
}

double Stream::uniform() {
    // 53 random bits, shifted off zero
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u = uniform(), v = uniform();
    double r = std::sqrt(-2.0 * std::log(u));
    double a = 2.0 * std::numbers::pi * v;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

double Stream::exponential(double rate) { return -std::log(uniform()) / rate; }

std::uint64_t Stream::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("below(0)");
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
}

std::uint64_t Stream::poisson(double mu) {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw std::invalid_argument("poisson mean must be finite and nonnegative");
    if (mu == 0.0) return 0;
    if (mu < 10.0) {
        double p = std::exp(-mu), f = p, u = uniform();
        std::uint64_t k = 0;
        while (u > f && k < 1000) {
            ++k;
            p *= mu / static_cast<double>(k);
            f += p;
        }
        return k;
    }
    // PTRS, Hormann 1993
    const double slam = std::sqrt(mu), loglam = std::log(mu);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
        double U = uniform() - 0.5;
        double V = uniform();
        double us = 0.5 - std::abs(U);
        double k = std::floor((2.0 * a / us + b) * U + mu + 0.43);
        if (us >= 0.07 && V <= vr) return static_cast<std::uint64_t>(k);
        if (k < 0.0 || (us < 0.013 && V > us)) continue;
        if (std::log(V) + std::log(invalpha) - std::log(a / (us * us) + b) <=
            -mu + k * loglam - std::lgamma(k + 1.0))
            return static_cast<std::uint64_t>(k);
    }
}

std::uint64_t Stream::binomial(std::uint64_t n, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial p outside [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    const double q = 1.0 - p;
    const double dn = static_cast<double>(n);
    if (dn * p < 10.0) {
        // inversion
        double s = p / q;
        double a = (dn + 1.0) * s;
        double r = std::pow(q, dn);
        double u = uniform();
        std::uint64_t x = 0;
        while (u > r) {
            u -= r;
            ++x;
            if (x > n) {
                // accumulated rounding; restart
                x = 0;
                r = std::pow(q, dn);
                u = uniform();
                continue;
            }
            r *= a / static_cast<double>(x) - s;
        }
        return x;
    }
    // BTRS, Hormann 1993
    const double spq = std::sqrt(dn * p * q);
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * p;
    const double c = dn * p + 0.5;
    const double vr = 0.92 - 4.2 / b;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double lpq = std::log(p / q);
    const double m = std::floor((dn + 1.0) * p);
    const double h = std::lgamma(m + 1.0) + std::lgamma(dn - m + 1.0);
    for (;;) {
        double U = uniform() - 0.5;
        double V = uniform();
        double us = 0.5 - std::abs(U);
        double k = std::floor((2.0 * a / us + b) * U + c);
        if (k < 0.0 || k > dn) continue;
        if (us >= 0.07 && V <= vr) return static_cast<std::uint64_t>(k);
        V = std::log(V * alpha / (a / (us * us) + b));
        if (V <= h - std::lgamma(k + 1.0) - std::lgamma(dn - k + 1.0) + (k - m) * lpq)
            return static_cast<std::uint64_t>(k);
    }
}

}  // namespace jamstat
