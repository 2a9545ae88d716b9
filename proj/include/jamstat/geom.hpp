#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace jamstat {

enum class Boundary { Periodic, Free };

struct TorusBox {
    int dim = 1;
    double side = 1.0;
    Boundary boundary = Boundary::Periodic;

    TorusBox() = default;
    TorusBox(int d, double r, Boundary b = Boundary::Periodic);

    bool periodic() const { return boundary == Boundary::Periodic; }
    double volume() const { return std::pow(side, dim); }
    double lo() const { return -0.5 * side; }
};

struct Point {
    int dim = 0;
    std::array<double, 3> x{0.0, 0.0, 0.0};

    Point() = default;
    explicit Point(int d) : dim(d) {}
    Point(std::initializer_list<double> c);

    double& operator[](int i) { return x[i]; }
    double operator[](int i) const { return x[i]; }
};

bool lex_less(const Point& a, const Point& b);
bool operator==(const Point& a, const Point& b);

enum class SolidKind { Ball, Cube };

struct Solid {
    SolidKind kind = SolidKind::Ball;
    double size = 0.5;  // radius for Ball, half side for Cube

    static Solid ball(double r);
    static Solid cube(double h);
    double diameter(int dim) const;
    double volume(int dim) const;
};

double unit_ball_volume(int d);

// wrap a coordinate into [-R/2, R/2)
double wrap_coord(double v, double side);
Point wrap(const TorusBox& box, Point p);

// signed per-axis displacement b - a, reduced to the nearest image when periodic
double axis_delta(const TorusBox& box, double a, double b);
double torus_distance(const TorusBox& box, const Point& a, const Point& b);
double torus_distance2(const TorusBox& box, const Point& a, const Point& b);
double chebyshev_distance(const TorusBox& box, const Point& a, const Point& b);

bool solids_overlap(const TorusBox& box, const Solid& s, const Point& a, const Point& b);
// a solid overlaps its own periodic translate when R is smaller than the overlap range
bool self_overlaps(const TorusBox& box, const Solid& s);

// min and max of the per-axis distance between c and any y in [a, b]
struct AxisRange {
    double min;
    double max;
};
AxisRange axis_range(const TorusBox& box, double a, double b, double c);

// uniform grid over the box, cell side >= requested size
class GridIndex {
public:
    GridIndex() = default;
    GridIndex(const TorusBox& box, double cell_size);

    void insert(const Point& p, std::uint32_t id);
    void clear();
    std::size_t size() const { return count_; }
    double cell_side() const { return cell_; }
    int cells_per_axis() const { return n_; }

    // all ids in the 3^d neighborhood of p
    std::vector<std::uint32_t> neighbor_candidates(const Point& p) const;
    // superset of all ids within distance `radius` of p
    void for_each_within(const Point& p, double radius,
                         const std::function<void(std::uint32_t)>& fn) const;
    template <class F>
    void visit_within(const Point& p, double radius, F&& fn) const;

private:
    int cell_of(double v) const;
    std::size_t linear(const std::array<int, 3>& c) const;

    TorusBox box_;
    double cell_ = 1.0;
    int n_ = 1;
    std::size_t count_ = 0;
    std::vector<std::vector<std::uint32_t>> buckets_;
};

template <class F>
void GridIndex::visit_within(const Point& p, double radius, F&& fn) const {
    if (count_ == 0) return;
    const int d = box_.dim;
    int k = static_cast<int>(std::ceil(radius / cell_));
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    bool full[3] = {false, false, false};
    for (int i = 0; i < d; ++i) {
        int c = cell_of(p[i]);
        if (box_.periodic()) {
            if (2 * k + 1 >= n_) {
                full[i] = true;
                lo[i] = 0;
                hi[i] = n_ - 1;
            } else {
                lo[i] = c - k;
                hi[i] = c + k;
            }
        } else {
            lo[i] = std::max(0, c - k);
            hi[i] = std::min(n_ - 1, c + k);
        }
    }
    std::array<int, 3> c{0, 0, 0};
    auto wrapi = [&](int v, int i) {
        if (full[i] || !box_.periodic()) return v;
        v %= n_;
        return v < 0 ? v + n_ : v;
    };
    for (int a = lo[0]; a <= hi[0]; ++a) {
        c[0] = wrapi(a, 0);
        for (int b = (d > 1 ? lo[1] : 0); b <= (d > 1 ? hi[1] : 0); ++b) {
            c[1] = d > 1 ? wrapi(b, 1) : 0;
            for (int e = (d > 2 ? lo[2] : 0); e <= (d > 2 ? hi[2] : 0); ++e) {
                c[2] = d > 2 ? wrapi(e, 2) : 0;
                for (auto id : buckets_[linear(c)]) fn(id);
            }
        }
    }
}

}  // namespace jamstat
