#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace jamstat {

// Philox4x32-10 block function
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key);

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix_key(std::uint64_t parent, std::uint64_t child);

struct StreamKey {
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> path;

    std::uint64_t material() const;
    std::string to_string() const;
    bool operator==(const StreamKey&) const = default;
};

StreamKey derive_stream(const StreamKey& key, std::uint64_t child);

// counter-based generator on a 64-bit key; cheap to create
class Stream {
public:
    explicit Stream(std::uint64_t key) : key_(key) {}
    explicit Stream(const StreamKey& key) : key_(key.material()) {}

    std::uint64_t next_u64();
    // uniform on (0, 1)
    double uniform();
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal();
    double exponential(double rate);
    std::uint64_t poisson(double mean);
    std::uint64_t binomial(std::uint64_t n, double p);
    std::uint64_t below(std::uint64_t n);

private:
    void refill();

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace jamstat
