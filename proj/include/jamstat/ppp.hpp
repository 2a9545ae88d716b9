#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "jamstat/geom.hpp"
#include "jamstat/rng.hpp"

namespace jamstat {

enum class LawKind { Dirac, Uniform, ParetoTail };

// law of radii (inclusion model) or of cell values (Voronoi model)
struct RadiusLaw {
    LawKind kind = LawKind::Dirac;
    double a = 1.0;  // Dirac value, Uniform lower end, Pareto exponent kappa
    double b = 1.0;  // Uniform upper end, Pareto scale

    static RadiusLaw dirac(double r);
    static RadiusLaw uniform(double lo, double hi);
    // survival (1 + l/s)^-(kappa-1), density ~ l^-kappa
    static RadiusLaw pareto_tail(double kappa, double scale);

    double survival(double l) const;  // nu([l, inf))
    double mass(double lo, double hi) const { return survival(lo) - survival(hi); }
    double quantile(double p) const;
    double sample(Stream& s) const { return quantile(s.uniform()); }
    double mean() const;
    double moment(int d) const;  // E[r^d]
    double upper() const;        // sup of support, inf for Pareto
};

struct MarkedPoint {
    Point loc;
    double time = 0.0;
    double mark = 0.0;
};

struct MarkedPointSet {
    TorusBox box;
    bool torus_metric = false;
    bool has_marks = false;
    std::vector<MarkedPoint> points;

    std::size_t size() const { return points.size(); }
    // box used for overlap tests downstream
    TorusBox metric_box() const;
};

MarkedPointSet sample_ppp(const StreamKey& key, const TorusBox& box, double intensity, double time_horizon);
MarkedPointSet attach_radius_marks(MarkedPointSet pts, const StreamKey& key, const RadiusLaw& law);

// sort by (time, lexicographic location)
bool time_lex_less(const MarkedPoint& a, const MarkedPoint& b);
void sort_time_lex(MarkedPointSet& pts);

// partition of the box into n^d congruent cells of side R/n
struct CellGrid {
    TorusBox box;
    int n = 1;
    double side = 1.0;

    static CellGrid unit(const TorusBox& box);
    std::size_t count() const;
    double cell_volume() const { return std::pow(side, box.dim); }
    std::array<int, 3> coords(std::size_t idx) const;
    std::size_t index(const std::array<int, 3>& c) const;
    std::size_t cell_of(const Point& p) const;
    Point cell_lo(std::size_t idx) const;
    Point cell_center(std::size_t idx) const;
};

struct CellOverride {
    std::size_t cell = 0;
    int mark_class = -1;  // -1 resamples every mark class
    std::uint64_t key = 0;
};

// Poisson process generated cell by cell from keyed streams; resampling a cell
// swaps its stream for an independent one and leaves the rest untouched
class DrivingProcess {
public:
    DrivingProcess() = default;
    DrivingProcess(const StreamKey& key, const TorusBox& box, double intensity);

    TorusBox box;
    CellGrid grid;
    double intensity = 1.0;
    std::uint64_t key = 0;
    StreamKey root;
    std::optional<RadiusLaw> marks;
    bool mark_classes = false;  // class t holds marks in [t - 1/2, t + 1/2)
    std::vector<CellOverride> overrides;

    static int mark_class_of(double r) { return static_cast<int>(std::floor(r + 0.5)); }

    std::uint64_t cell_key(std::size_t cell) const;
    void cell_points(std::size_t cell, std::vector<MarkedPoint>& out) const;
    MarkedPointSet materialize() const;
    bool overridden(std::size_t cell) const;

private:
    void raw_cell_points(std::size_t cell, std::uint64_t k, std::vector<MarkedPoint>& out) const;
};

struct CoupledPair {
    DrivingProcess original;
    DrivingProcess perturbed;
    std::vector<CellOverride> cells;
    StreamKey shared_key;
    StreamKey independent_key;
};

struct CellRef {
    std::size_t cell = 0;
    int mark_class = -1;
};

CoupledPair resample_cells(const DrivingProcess& x, const std::vector<CellRef>& cells, const StreamKey& key2);
// add overrides to an existing perturbed process (second-order couplings)
DrivingProcess with_resampled(const DrivingProcess& x, const std::vector<CellRef>& cells, const StreamKey& key2);

}  // namespace jamstat
