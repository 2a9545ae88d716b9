#include "jamstat/geom.hpp"

#include <algorithm>
#include <numbers>

namespace jamstat {

TorusBox::TorusBox(int d, double r, Boundary b) : dim(d), side(r), boundary(b) {
    if (d < 1 || d > 3) throw std::invalid_argument("box dimension must be 1, 2 or 3");
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("box side must be positive");
}

Point::Point(std::initializer_list<double> c) : dim(static_cast<int>(c.size())) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("point dimension must be 1, 2 or 3");
    int i = 0;
    for (double v : c) x[i++] = v;
}

bool lex_less(const Point& a, const Point& b) {
    for (int i = 0; i < a.dim; ++i) {
        if (a.x[i] < b.x[i]) return true;
        if (a.x[i] > b.x[i]) return false;
    }
    return false;
}

bool operator==(const Point& a, const Point& b) {
    if (a.dim != b.dim) return false;
    for (int i = 0; i < a.dim; ++i)
        if (a.x[i] != b.x[i]) return false;
    return true;
}

Solid Solid::ball(double r) {
    if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
    return Solid{SolidKind::Ball, r};
}

Solid Solid::cube(double h) {
    if (!(h > 0.0)) throw std::invalid_argument("cube half side must be positive");
    return Solid{SolidKind::Cube, h};
}

double Solid::diameter(int dim) const {
    return kind == SolidKind::Ball ? 2.0 * size : 2.0 * size * std::sqrt(double(dim));
}

double Solid::volume(int dim) const {
    return kind == SolidKind::Ball ? unit_ball_volume(dim) * std::pow(size, dim)
                                   : std::pow(2.0 * size, dim);
}

double unit_ball_volume(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return std::numbers::pi;
        case 3: return 4.0 * std::numbers::pi / 3.0;
        default: return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
    }
}

double wrap_coord(double v, double side) {
    double h = 0.5 * side;
    if (v >= -h && v < h) return v;
    double w = v - side * std::floor((v + h) / side);
    if (w >= h) w -= side;
    if (w < -h) w += side;
    return w;
}

Point wrap(const TorusBox& box, Point p) {
    if (!box.periodic()) return p;
    for (int i = 0; i < box.dim; ++i) p.x[i] = wrap_coord(p.x[i], box.side);
    return p;
}

double axis_delta(const TorusBox& box, double a, double b) {
    double v = b - a;
    if (box.periodic()) v -= box.side * std::nearbyint(v / box.side);
    return v;
}

static void check_dims(const TorusBox& box, const Point& a, const Point& b) {
    if (a.dim != box.dim || b.dim != box.dim) throw std::invalid_argument("point dimension does not match box");
}

double torus_distance2(const TorusBox& box, const Point& a, const Point& b) {
    check_dims(box, a, b);
    double s = 0.0;
    for (int i = 0; i < box.dim; ++i) {
        double v = axis_delta(box, a.x[i], b.x[i]);
        s += v * v;
    }
    return s;
}

double torus_distance(const TorusBox& box, const Point& a, const Point& b) {
    return std::sqrt(torus_distance2(box, a, b));
}

double chebyshev_distance(const TorusBox& box, const Point& a, const Point& b) {
    check_dims(box, a, b);
    double m = 0.0;
    for (int i = 0; i < box.dim; ++i) m = std::max(m, std::abs(axis_delta(box, a.x[i], b.x[i])));
    return m;
}

bool solids_overlap(const TorusBox& box, const Solid& s, const Point& a, const Point& b) {
    if (s.kind == SolidKind::Ball) return torus_distance2(box, a, b) < 4.0 * s.size * s.size;
    check_dims(box, a, b);
    for (int i = 0; i < box.dim; ++i)
        if (!(std::abs(axis_delta(box, a.x[i], b.x[i])) < 2.0 * s.size)) return false;
    return true;
}

bool self_overlaps(const TorusBox& box, const Solid& s) {
    return box.periodic() && box.side < 2.0 * s.size;
}

AxisRange axis_range(const TorusBox& box, double a, double b, double c) {
    if (!box.periodic()) {
        double mn = std::max({0.0, a - c, c - b});
        double mx = std::max(std::abs(a - c), std::abs(b - c));
        return {mn, mx};
    }
    const double R = box.side;
    if (b - a >= R) return {0.0, 0.5 * R};
    // image of c closest to the interval midpoint
    double m = 0.5 * (a + b);
    double cc = c + R * std::nearbyint((m - c) / R);
    auto pd = [&](double y) { return std::abs(axis_delta(box, c, y)); };
    double mn;
    if ((cc >= a && cc <= b) || (cc + R >= a && cc + R <= b) || (cc - R >= a && cc - R <= b))
        mn = 0.0;
    else
        mn = std::min(pd(a), pd(b));
    double mx;
    double h = 0.5 * R;
    if ((cc + h >= a && cc + h <= b) || (cc - h >= a && cc - h <= b))
        mx = h;
    else
        mx = std::max(pd(a), pd(b));
    return {mn, mx};
}

GridIndex::GridIndex(const TorusBox& box, double cell_size) : box_(box) {
    if (!(cell_size > 0.0)) throw std::invalid_argument("grid cell size must be positive");
    n_ = std::max(1, static_cast<int>(std::floor(box.side / cell_size)));
    n_ = std::min(n_, box.dim == 1 ? 1 << 22 : (box.dim == 2 ? 2048 : 160));
    cell_ = box.side / n_;
    std::size_t total = 1;
    for (int i = 0; i < box.dim; ++i) total *= static_cast<std::size_t>(n_);
    buckets_.assign(total, {});
}

int GridIndex::cell_of(double v) const {
    int c = static_cast<int>(std::floor((v - box_.lo()) / cell_));
    return std::clamp(c, 0, n_ - 1);
}

std::size_t GridIndex::linear(const std::array<int, 3>& c) const {
    std::size_t k = 0;
    for (int i = box_.dim - 1; i >= 0; --i) k = k * n_ + c[i];
    return k;
}

void GridIndex::insert(const Point& p, std::uint32_t id) {
    std::array<int, 3> c{0, 0, 0};
    for (int i = 0; i < box_.dim; ++i) c[i] = cell_of(p[i]);
    buckets_[linear(c)].push_back(id);
    ++count_;
}

void GridIndex::clear() {
    for (auto& b : buckets_) b.clear();
    count_ = 0;
}

std::vector<std::uint32_t> GridIndex::neighbor_candidates(const Point& p) const {
    std::vector<std::uint32_t> out;
    visit_within(p, cell_, [&](std::uint32_t id) { out.push_back(id); });
    return out;
}

void GridIndex::for_each_within(const Point& p, double radius,
                                const std::function<void(std::uint32_t)>& fn) const {
    visit_within(p, radius, fn);
}

}  // namespace jamstat
