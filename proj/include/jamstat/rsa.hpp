#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "jamstat/geom.hpp"
#include "jamstat/ppp.hpp"

namespace jamstat {

enum class Algorithm { Sequential, Graphical, Saturation };

struct PackedConfiguration {
    TorusBox box;
    Solid solid;
    std::vector<Point> accepted;
    std::vector<double> accept_times;
    std::size_t jamming_number = 0;
    bool saturated = false;
    double residual_feasible_measure = 0.0;
    StreamKey seed;
    Algorithm algorithm = Algorithm::Sequential;
    int blocks = 0;  // time blocks used by pack_to_saturation
};

struct CausalGraph {
    std::size_t nodes = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;  // i -> j, i earlier
    std::vector<std::vector<std::uint32_t>> roots;      // F_j per round
    std::vector<std::vector<std::uint32_t>> offspring;  // G_j per round
};

PackedConfiguration sequential_insert(const MarkedPointSet& pts, const Solid& solid);
std::pair<PackedConfiguration, CausalGraph> graphical_construction(const MarkedPointSet& pts, const Solid& solid);
MarkedPointSet periodize(MarkedPointSet pts);

struct FeasibleMeasure {
    double lower = 0.0;
    double upper = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;  // Monte Carlo mode only
    bool exact = true;
    bool certified_zero = false;
};

FeasibleMeasure feasible_measure(const PackedConfiguration& cfg, double tol);
bool is_saturated(const PackedConfiguration& cfg);

struct PackOptions {
    double first_block = 1.0;  // duration of the first time block, later blocks double
    int max_blocks = 60;
    int leaf_depth = -1;       // dyadic depth of the canonical Poisson leaves, -1 = by dimension
    int certify_depth = -1;
    std::size_t certify_budget = 400000;
};

// RSA with infinite input, run until the feasible set is certified empty
PackedConfiguration pack_process(const DrivingProcess& process, const Solid& solid, const PackOptions& opt = {});
PackedConfiguration pack_to_saturation(const StreamKey& key, const TorusBox& box, const Solid& solid,
                                       double intensity, const PackOptions& opt = {});

// pairwise and self-image check over the accepted set
bool packing_valid(const PackedConfiguration& cfg);

void write_packing_csv(std::ostream& os, const PackedConfiguration& cfg);
std::string packing_json(const PackedConfiguration& cfg);

}  // namespace jamstat
