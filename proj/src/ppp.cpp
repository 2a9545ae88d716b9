#include "jamstat/ppp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jamstat {

namespace {
constexpr std::uint64_t kTagStatic = 0x5354415449430001ull;
}

RadiusLaw RadiusLaw::dirac(double r) {
    if (!(r >= 0.0)) throw std::invalid_argument("dirac law value must be nonnegative");
    return {LawKind::Dirac, r, r};
}

RadiusLaw RadiusLaw::uniform(double lo, double hi) {
    if (!(hi > lo)) throw std::invalid_argument("uniform law needs lo < hi");
    return {LawKind::Uniform, lo, hi};
}

RadiusLaw RadiusLaw::pareto_tail(double kappa, double scale) {
    if (!(kappa > 1.0) || !(scale > 0.0)) throw std::invalid_argument("pareto law needs kappa > 1, scale > 0");
    return {LawKind::ParetoTail, kappa, scale};
}

double RadiusLaw::survival(double l) const {
    switch (kind) {
        case LawKind::Dirac: return l <= a ? 1.0 : 0.0;
        case LawKind::Uniform:
            if (l <= a) return 1.0;
            if (l >= b) return 0.0;
            return (b - l) / (b - a);
        case LawKind::ParetoTail:
            if (l <= 0.0) return 1.0;
            return std::pow(1.0 + l / b, -(a - 1.0));
    }
    return 0.0;
}

double RadiusLaw::quantile(double p) const {
    switch (kind) {
        case LawKind::Dirac: return a;
        case LawKind::Uniform: return a + (b - a) * p;
        case LawKind::ParetoTail: return b * (std::pow(1.0 - p, -1.0 / (a - 1.0)) - 1.0);
    }
    return 0.0;
}

double RadiusLaw::mean() const { return moment(1); }

double RadiusLaw::moment(int d) const {
    switch (kind) {
        case LawKind::Dirac: return std::pow(a, d);
        case LawKind::Uniform: return (std::pow(b, d + 1) - std::pow(a, d + 1)) / ((d + 1) * (b - a));
        case LawKind::ParetoTail: {
            double k = a - 1.0;
            if (k <= d) return std::numeric_limits<double>::infinity();
            // E r^d = d s^d B(d, k - d)
            double lb = std::lgamma(double(d)) + std::lgamma(k - d) - std::lgamma(k);
            return d * std::pow(b, d) * std::exp(lb);
        }
    }
    return 0.0;
}

double RadiusLaw::upper() const {
    switch (kind) {
        case LawKind::Dirac: return a;
        case LawKind::Uniform: return b;
        case LawKind::ParetoTail: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

TorusBox MarkedPointSet::metric_box() const {
    TorusBox b = box;
    b.boundary = torus_metric ? Boundary::Periodic : Boundary::Free;
    return b;
}

MarkedPointSet sample_ppp(const StreamKey& key, const TorusBox& box, double intensity, double time_horizon) {
    if (!(intensity > 0.0) || !(time_horizon > 0.0)) throw std::invalid_argument("intensity and horizon must be positive");
    Stream s(key);
    MarkedPointSet out;
    out.box = box;
    std::uint64_t n = s.poisson(intensity * box.volume() * time_horizon);
    out.points.resize(n);
    for (auto& p : out.points) {
        p.loc = Point(box.dim);
        for (int i = 0; i < box.dim; ++i) p.loc.x[i] = wrap_coord(box.lo() + box.side * s.uniform(), box.side);
        p.time = time_horizon * s.uniform();
    }
    return out;
}

MarkedPointSet attach_radius_marks(MarkedPointSet pts, const StreamKey& key, const RadiusLaw& law) {
    Stream s(key);
    for (auto& p : pts.points) p.mark = law.sample(s);
    pts.has_marks = true;
    return pts;
}

bool time_lex_less(const MarkedPoint& a, const MarkedPoint& b) {
    if (a.time != b.time) return a.time < b.time;
    return lex_less(a.loc, b.loc);
}

void sort_time_lex(MarkedPointSet& pts) { std::sort(pts.points.begin(), pts.points.end(), time_lex_less); }

CellGrid CellGrid::unit(const TorusBox& box) {
    CellGrid g;
    g.box = box;
    g.n = std::max(1, static_cast<int>(std::floor(box.side + 1e-9)));
    g.side = box.side / g.n;
    return g;
}

std::size_t CellGrid::count() const {
    std::size_t c = 1;
    for (int i = 0; i < box.dim; ++i) c *= static_cast<std::size_t>(n);
    return c;
}

std::array<int, 3> CellGrid::coords(std::size_t idx) const {
    std::array<int, 3> c{0, 0, 0};
    for (int i = 0; i < box.dim; ++i) {
        c[i] = static_cast<int>(idx % n);
        idx /= n;
    }
    return c;
}

std::size_t CellGrid::index(const std::array<int, 3>& c) const {
    std::size_t k = 0;
    for (int i = box.dim - 1; i >= 0; --i) k = k * n + static_cast<std::size_t>(c[i]);
    return k;
}

std::size_t CellGrid::cell_of(const Point& p) const {
    std::array<int, 3> c{0, 0, 0};
    for (int i = 0; i < box.dim; ++i) {
        double v = box.periodic() ? wrap_coord(p[i], box.side) : p[i];
        c[i] = std::clamp(static_cast<int>(std::floor((v - box.lo()) / side)), 0, n - 1);
    }
    return index(c);
}

Point CellGrid::cell_lo(std::size_t idx) const {
    auto c = coords(idx);
    Point p(box.dim);
    for (int i = 0; i < box.dim; ++i) p.x[i] = box.lo() + side * c[i];
    return p;
}

Point CellGrid::cell_center(std::size_t idx) const {
    Point p = cell_lo(idx);
    for (int i = 0; i < box.dim; ++i) p.x[i] += 0.5 * side;
    return p;
}

DrivingProcess::DrivingProcess(const StreamKey& k, const TorusBox& b, double lambda)
    : box(b), grid(CellGrid::unit(b)), intensity(lambda), key(k.material()), root(k) {
    if (!(lambda > 0.0)) throw std::invalid_argument("intensity must be positive");
}

std::uint64_t DrivingProcess::cell_key(std::size_t cell) const {
    for (const auto& o : overrides)
        if (o.cell == cell && o.mark_class < 0) return o.key;
    return mix_key(key, cell);
}

bool DrivingProcess::overridden(std::size_t cell) const {
    for (const auto& o : overrides)
        if (o.cell == cell) return true;
    return false;
}

void DrivingProcess::raw_cell_points(std::size_t cell, std::uint64_t k, std::vector<MarkedPoint>& out) const {
    Stream s(mix_key(k, kTagStatic));
    std::uint64_t n = s.poisson(intensity * grid.cell_volume());
    Point lo = grid.cell_lo(cell);
    for (std::uint64_t j = 0; j < n; ++j) {
        MarkedPoint p;
        p.loc = Point(box.dim);
        for (int i = 0; i < box.dim; ++i) p.loc.x[i] = lo.x[i] + grid.side * s.uniform();
        p.time = s.uniform();
        if (marks) p.mark = marks->sample(s);
        out.push_back(p);
    }
}

void DrivingProcess::cell_points(std::size_t cell, std::vector<MarkedPoint>& out) const {
    std::vector<const CellOverride*> cls;
    for (const auto& o : overrides)
        if (o.cell == cell && o.mark_class >= 0) cls.push_back(&o);
    if (cls.empty()) {
        raw_cell_points(cell, cell_key(cell), out);
        return;
    }
    auto replaced = [&](double m) {
        int t = mark_class_of(m);
        for (auto* o : cls)
            if (o->mark_class == t) return true;
        return false;
    };
    std::vector<MarkedPoint> tmp;
    raw_cell_points(cell, cell_key(cell), tmp);
    for (auto& p : tmp)
        if (!replaced(p.mark)) out.push_back(p);
    for (auto* o : cls) {
        tmp.clear();
        raw_cell_points(cell, o->key, tmp);
        for (auto& p : tmp)
            if (mark_class_of(p.mark) == o->mark_class) out.push_back(p);
    }
}

MarkedPointSet DrivingProcess::materialize() const {
    MarkedPointSet out;
    out.box = box;
    out.torus_metric = box.periodic();
    out.has_marks = marks.has_value();
    std::size_t nc = grid.count();
    for (std::size_t c = 0; c < nc; ++c) cell_points(c, out.points);
    return out;
}

DrivingProcess with_resampled(const DrivingProcess& x, const std::vector<CellRef>& cells, const StreamKey& key2) {
    DrivingProcess y = x;
    std::uint64_t base = key2.material();
    for (const auto& c : cells) {
        if (c.cell >= x.grid.count()) throw std::out_of_range("cell index outside partition");
        if (c.mark_class >= 0 && !x.mark_classes) throw std::invalid_argument("process has no mark classes");
        CellOverride o;
        o.cell = c.cell;
        o.mark_class = c.mark_class;
        o.key = mix_key(base, c.cell);
        y.overrides.push_back(o);
    }
    return y;
}

CoupledPair resample_cells(const DrivingProcess& x, const std::vector<CellRef>& cells, const StreamKey& key2) {
    CoupledPair p;
    p.original = x;
    p.perturbed = with_resampled(x, cells, key2);
    p.cells.assign(p.perturbed.overrides.end() - static_cast<std::ptrdiff_t>(cells.size()), p.perturbed.overrides.end());
    p.shared_key = x.root;
    p.independent_key = key2;
    return p;
}

}  // namespace jamstat
