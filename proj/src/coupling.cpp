#include "jamstat/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <tuple>

#include "jamstat/parallel.hpp"

namespace jamstat {

namespace {

constexpr std::uint64_t kTagIndependent = 0x494E444550000006ull;

struct Item {
    Point c;
    double v;
};

bool item_less(const Item& a, const Item& b) {
    if (lex_less(a.c, b.c)) return true;
    if (lex_less(b.c, a.c)) return false;
    return a.v < b.v;
}

std::vector<Item> items(const std::vector<Point>& c, const std::vector<double>& v) {
    std::vector<Item> out;
    out.reserve(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out.push_back({c[i], v[i]});
    std::sort(out.begin(), out.end(), item_less);
    return out;
}

// items only in a (side 0) or only in b (side 1)
std::vector<std::pair<Item, int>> symmetric_difference(const std::vector<Item>& a, const std::vector<Item>& b) {
    std::vector<std::pair<Item, int>> out;
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && item_less(a[i], b[j]))) {
            out.push_back({a[i++], 0});
        } else if (i == a.size() || item_less(b[j], a[i])) {
            out.push_back({b[j++], 1});
        } else {
            ++i;
            ++j;
        }
    }
    return out;
}

// displacement c - x per axis
Point rel(const TorusBox& box, const Point& x, const Point& c) {
    Point d(box.dim);
    for (int i = 0; i < box.dim; ++i) d.x[i] = axis_delta(box, x.x[i], c.x[i]);
    return d;
}

double cell_distance(const Point& d, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) {
        double e = std::max(0.0, std::abs(d.x[i]) - 0.5);
        s += e * e;
    }
    return std::sqrt(s);
}

// sup of |wrap(u)| over [s, e] on a circle of length R
double circle_sup(double s, double e, double R, bool periodic) {
    if (!periodic) return std::max(std::abs(s), std::abs(e));
    if (e - s >= R) return 0.5 * R;
    double k = std::ceil((s - 0.5 * R) / R);
    if (0.5 * R + k * R <= e) return 0.5 * R;
    return std::max(std::abs(wrap_coord(s, R)), std::abs(wrap_coord(e, R)));
}

void absorb_interval(Disagreement& d, double s, double e, double R, bool periodic) {
    double sup = circle_sup(s, e, R, periodic);
    d.differ = true;
    d.cheb = std::max(d.cheb, sup);
    d.from_cell = std::max(d.from_cell, std::max(0.0, sup - 0.5));
}

// union of the balls as disjoint intervals in coordinates relative to x
std::vector<std::pair<double, double>> union_1d(const TorusBox& box, const Point& x, const std::vector<Point>& c,
                                                const std::vector<double>& r) {
    const double R = box.side, h = 0.5 * R;
    std::vector<std::pair<double, double>> iv;
    for (std::size_t i = 0; i < c.size(); ++i) {
        double u = axis_delta(box, x.x[0], c[i].x[0]);
        double s = u - r[i], e = u + r[i];
        if (!box.periodic()) {
            iv.emplace_back(s, e);
            continue;
        }
        if (e - s >= R) {
            iv.emplace_back(-h, h);
            continue;
        }
        for (double k : {-1.0, 0.0, 1.0}) {
            double a = std::max(s + k * R, -h), b = std::min(e + k * R, h);
            if (b > a) iv.emplace_back(a, b);
        }
    }
    std::sort(iv.begin(), iv.end());
    std::vector<std::pair<double, double>> out;
    for (auto& p : iv) {
        if (!out.empty() && p.first <= out.back().second)
            out.back().second = std::max(out.back().second, p.second);
        else
            out.push_back(p);
    }
    return out;
}

bool inside(const std::vector<std::pair<double, double>>& u, double y) {
    auto it = std::upper_bound(u.begin(), u.end(), y, [](double v, const auto& p) { return v < p.first; });
    if (it == u.begin()) return false;
    --it;
    return y < it->second;
}

Disagreement inclusion_disagreement(const InclusionField& a, const InclusionField& b, const Point& x) {
    const TorusBox& box = a.box();
    Disagreement d;
    auto sd = symmetric_difference(items(a.centers(), a.radii()), items(b.centers(), b.radii()));
    if (sd.empty()) return d;
    if (box.dim == 1) {
        auto ua = union_1d(box, x, a.centers(), a.radii());
        auto ub = union_1d(box, x, b.centers(), b.radii());
        std::vector<double> cuts;
        for (auto& p : ua) cuts.insert(cuts.end(), {p.first, p.second});
        for (auto& p : ub) cuts.insert(cuts.end(), {p.first, p.second});
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            double s = cuts[i], e = cuts[i + 1];
            if (!(e > s)) continue;
            double m = 0.5 * (s + e);
            if (inside(ua, m) != inside(ub, m)) absorb_interval(d, s, e, box.side, false);
        }
        return d;
    }
    for (auto& [it, side] : sd) {
        Point u = rel(box, x, it.c);
        double cheb = 0.0;
        for (int i = 0; i < box.dim; ++i) cheb = std::max(cheb, std::abs(u.x[i]) + it.v);
        if (box.periodic()) cheb = std::min(cheb, 0.5 * box.side);
        d.differ = true;
        d.cheb = std::max(d.cheb, cheb);
        d.from_cell = std::max(d.from_cell, cell_distance(u, box.dim) + it.v);
    }
    return d;
}

using Polygon = std::vector<std::array<double, 2>>;

Polygon clip(const Polygon& poly, double nx, double ny, double c) {
    // keep n . y <= c
    Polygon out;
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % m];
        double fp = nx * p[0] + ny * p[1] - c, fq = nx * q[0] + ny * q[1] - c;
        if (fp <= 0) out.push_back(p);
        if ((fp < 0 && fq > 0) || (fp > 0 && fq < 0)) {
            double t = fp / (fp - fq);
            out.push_back({p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
        }
    }
    return out;
}

// Voronoi cell of generator g, relative to g; empty when it cannot be certified on the torus
Polygon voronoi_cell_2d(const TorusBox& box, const std::vector<Point>& gens, const Point& g) {
    const double h = 0.5 * box.side;
    std::vector<std::tuple<double, double, double>> nb;
    for (const auto& p : gens) {
        if (p == g) continue;
        Point d = rel(box, g, p);
        nb.emplace_back(d.x[0] * d.x[0] + d.x[1] * d.x[1], d.x[0], d.x[1]);
    }
    std::sort(nb.begin(), nb.end());
    double x0 = -h, x1 = h, y0 = -h, y1 = h;
    if (!box.periodic()) {
        x0 -= g.x[0];
        x1 -= g.x[0];
        y0 -= g.x[1];
        y1 -= g.x[1];
    }
    Polygon poly{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
    auto reach = [&] {
        double m = 0.0;
        for (auto& v : poly) m = std::max(m, v[0] * v[0] + v[1] * v[1]);
        return std::sqrt(m);
    };
    double m = reach();
    for (auto& [d2, dx, dy] : nb) {
        if (std::sqrt(d2) > 2.0 * m) break;
        poly = clip(poly, dx, dy, 0.5 * d2);
        m = reach();
    }
    if (!box.periodic()) return poly;
    if (m >= 0.25 * box.side) return {};
    return poly;
}

void absorb_polygon(Disagreement& d, const TorusBox& box, const Point& gx, const Polygon& poly) {
    const double h = 0.5 * box.side;
    d.differ = true;
    for (auto& v : poly) {
        Point u(2);
        double cheb = 0.0;
        for (int i = 0; i < 2; ++i) {
            double w = std::abs(gx.x[i] + v[i]);
            if (box.periodic()) w = std::min(w, h);
            u.x[i] = w;
            cheb = std::max(cheb, w);
        }
        d.cheb = std::max(d.cheb, cheb);
        d.from_cell = std::max(d.from_cell, cell_distance(u, 2));
    }
}

Disagreement voronoi_disagreement(const VoronoiField& a, const VoronoiField& b, const Point& x) {
    const TorusBox& box = a.box();
    Disagreement d;
    auto sd = symmetric_difference(items(a.generators(), a.values()), items(b.generators(), b.values()));
    const double R = box.side;
    for (auto& [it, side] : sd) {
        const auto& gens = side == 0 ? a.generators() : b.generators();
        Point gx = rel(box, x, it.c);
        if (box.dim == 1) {
            double left = -std::numeric_limits<double>::infinity(), right = std::numeric_limits<double>::infinity();
            for (const auto& p : gens) {
                if (p == it.c) continue;
                double u = p.x[0] - it.c.x[0];
                if (box.periodic()) {
                    u = std::fmod(u, R);
                    if (u < 0) u += R;
                    right = std::min(right, u);
                    left = std::max(left, u - R);
                } else if (u > 0) {
                    right = std::min(right, u);
                } else {
                    left = std::max(left, u);
                }
            }
            double s, e;
            if (std::isinf(left) && box.periodic()) {
                s = -0.5 * R;
                e = 0.5 * R;
            } else {
                s = 0.5 * left;
                e = 0.5 * right;
            }
            if (!box.periodic()) {
                s = std::max(s, -0.5 * R - it.c.x[0]);
                e = std::min(e, 0.5 * R - it.c.x[0]);
            }
            absorb_interval(d, gx.x[0] + s, gx.x[0] + e, R, box.periodic());
            continue;
        }
        if (box.dim != 2) throw std::invalid_argument("voronoi disagreement implemented for d <= 2");
        Polygon poly = voronoi_cell_2d(box, gens, it.c);
        if (poly.empty()) {
            d.differ = true;
            d.cheb = 0.5 * R;
            d.from_cell = std::sqrt(2.0) * std::max(0.0, 0.5 * R - 0.5);
            continue;
        }
        absorb_polygon(d, box, gx, poly);
    }
    return d;
}

}  // namespace

DrivingProcess driving_process(const CouplingSpec& spec, const StreamKey& key, double intensity_factor) {
    DrivingProcess p(key, spec.box, spec.intensity * intensity_factor);
    if (spec.model != CoupledModel::Parking) p.marks = spec.law;
    p.mark_classes = spec.mark_classes;
    return p;
}

std::unique_ptr<FieldSample> realize(const CouplingSpec& spec, const DrivingProcess& proc) {
    switch (spec.model) {
        case CoupledModel::Inclusion: return realize_inclusion(proc, spec.a0, spec.a1);
        case CoupledModel::Voronoi: return realize_voronoi(proc);
        case CoupledModel::Parking: return realize_parking(proc, spec.solid, spec.a0, spec.a1, spec.pack);
    }
    throw std::invalid_argument("unknown model");
}

Disagreement disagreement(const FieldSample& a, const FieldSample& b, const Point& x) {
    if (auto ia = dynamic_cast<const InclusionField*>(&a)) {
        auto ib = dynamic_cast<const InclusionField*>(&b);
        if (!ib) throw std::invalid_argument("disagreement between different models");
        return inclusion_disagreement(*ia, *ib, x);
    }
    if (auto va = dynamic_cast<const VoronoiField*>(&a)) {
        auto vb = dynamic_cast<const VoronoiField*>(&b);
        if (!vb) throw std::invalid_argument("disagreement between different models");
        return voronoi_disagreement(*va, *vb, x);
    }
    throw std::invalid_argument("disagreement needs inclusion, parking or voronoi fields");
}

double action_radius(const Disagreement& dis, const TorusBox&) {
    if (!dis.differ) return 0.0;
    const double e = dis.from_cell;
    if (!std::isfinite(e)) return kRadiusSentinel;
    if (e <= 0.0) return 0.0;
    double hi = 1.0;
    while (hi < e) hi *= 2.0;
    double lo = hi == 1.0 ? 0.0 : 0.5 * hi;
    while (hi - lo > 1.0) {
        double mid = std::floor(0.5 * (lo + hi));
        (e <= mid ? hi : lo) = mid;
    }
    return hi;
}

double action_radius(const FieldSample& a, const FieldSample& b, const Point& x) {
    return action_radius(disagreement(a, b, x), a.box());
}

bool agree_outside_cube(const FieldSample& a, const FieldSample& b, const Point& x, int ell) {
    auto d = disagreement(a, b, x);
    return !d.differ || d.cheb <= ell + 0.5;
}

double discrete_derivative(const Functional& z, const FieldSample& a, const FieldSample& ax, const Point& x, int ell) {
    if (!agree_outside_cube(ax, a, x, ell)) return 0.0;
    return z(a) - z(ax);
}

double discrete_second_derivative(const Functional& z, const FieldSample& a, const FieldSample& ax,
                                  const FieldSample& axp, const FieldSample& axxp, const Point& x, int ell,
                                  const Point& xp, int ellp) {
    if (!agree_outside_cube(ax, a, x, ell) || !agree_outside_cube(axxp, axp, x, ell) ||
        !agree_outside_cube(axp, a, xp, ellp) || !agree_outside_cube(axxp, ax, xp, ellp))
        return 0.0;
    return z(a) - z(ax) - z(axp) + z(axxp);
}

CoupledSample couple(const CouplingSpec& spec, const StreamKey& key, std::size_t cell, int mark_class,
                     double intensity_factor) {
    CoupledSample s;
    DrivingProcess x = driving_process(spec, key, intensity_factor);
    if (cell >= x.grid.count()) throw std::invalid_argument("cell index outside the box");
    auto pair = resample_cells(x, {{cell, mark_class}}, derive_stream(key, kTagIndependent));
    s.center = x.grid.cell_center(cell);
    if (spec.model == CoupledModel::Parking) {
        // the space-time input of a cell is almost surely nonempty
        s.input_changed = true;
        auto pa = pack_process(pair.original, spec.solid, spec.pack);
        auto pb = pack_process(pair.perturbed, spec.solid, spec.pack);
        bool complete = pa.saturated && pb.saturated;
        std::vector<double> ra(pa.accepted.size(), spec.solid.size), rb(pb.accepted.size(), spec.solid.size);
        double cut = 4.0 * spec.solid.diameter(spec.box.dim);
        s.original = std::make_unique<InclusionField>(spec.box, pa.accepted, std::move(ra), spec.a0, spec.a1, cut,
                                                      FieldModel::Parking);
        s.perturbed = std::make_unique<InclusionField>(spec.box, pb.accepted, std::move(rb), spec.a0, spec.a1, cut,
                                                       FieldModel::Parking);
        s.dis = disagreement(*s.original, *s.perturbed, s.center);
        s.rho = complete ? action_radius(s.dis, spec.box) : kRadiusSentinel;
        return s;
    }
    std::vector<MarkedPoint> pa, pb;
    pair.original.cell_points(cell, pa);
    pair.perturbed.cell_points(cell, pb);
    auto keep = [&](std::vector<MarkedPoint>& v) {
        if (mark_class < 0) return;
        std::erase_if(v, [&](const MarkedPoint& p) { return DrivingProcess::mark_class_of(p.mark) != mark_class; });
    };
    keep(pa);
    keep(pb);
    s.input_changed = pa.size() != pb.size();
    for (std::size_t i = 0; !s.input_changed && i < pa.size(); ++i)
        s.input_changed = !(pa[i].loc == pb[i].loc) || pa[i].time != pb[i].time || pa[i].mark != pb[i].mark;
    s.original = realize(spec, pair.original);
    s.perturbed = realize(spec, pair.perturbed);
    s.dis = disagreement(*s.original, *s.perturbed, s.center);
    s.rho = action_radius(s.dis, spec.box);
    return s;
}

std::pair<double, double> wilson_interval(std::size_t k, std::size_t n, double z) {
    if (n == 0) return {0.0, 1.0};
    double nn = static_cast<double>(n), p = static_cast<double>(k) / nn, z2 = z * z;
    double c = (p + z2 / (2 * nn)) / (1 + z2 / nn);
    double h = z / (1 + z2 / nn) * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn));
    return {k == 0 ? 0.0 : std::max(0.0, c - h), k == n ? 1.0 : std::min(1.0, c + h)};
}

WeightTable weight_estimate(const CouplingSpec& spec, const StreamKey& key, const WeightOptions& opt) {
    if (opt.n < 100) throw std::invalid_argument("weight estimate needs at least 100 replicates");
    if (opt.max_ell < 1) throw std::invalid_argument("max_ell must be positive");
    if (opt.mode == RadiusMode::Class && opt.t < 0) throw std::invalid_argument("class radius needs a mark class");
    WeightTable w;
    w.n = opt.n;
    w.radii.assign(opt.n, 0.0);
    w.changed.assign(opt.n, 0);
    const double factor = opt.doubled_intensity ? 2.0 : 1.0;
    const std::size_t cell = CellGrid::unit(spec.box).cell_of(Point(spec.box.dim));
    parallel_for(opt.n, opt.threads, [&](std::size_t i) {
        auto s = couple(spec, derive_stream(key, i), cell, opt.t, factor);
        w.changed[i] = s.input_changed;
        if (!s.input_changed) return;
        w.radii[i] = opt.mode == RadiusMode::Class ? static_cast<double>(opt.t) : s.rho;
    });
    std::vector<std::size_t> counts(static_cast<std::size_t>(opt.max_ell), 0);
    for (std::size_t i = 0; i < opt.n; ++i) {
        if (!w.changed[i]) continue;
        double r = w.radii[i];
        if (!std::isfinite(r)) ++w.sentinels;
        std::size_t bin = std::isfinite(r) ? static_cast<std::size_t>(std::floor(r)) : counts.size() - 1;
        counts[std::min(bin, counts.size() - 1)] += 1;
    }
    for (int ell = 1; ell <= opt.max_ell; ++ell) {
        WeightRow row;
        row.t = opt.t;
        row.ell = ell;
        row.count = counts[static_cast<std::size_t>(ell - 1)];
        row.n = opt.n;
        row.pi_hat = static_cast<double>(row.count) / static_cast<double>(opt.n);
        std::tie(row.ci_lo, row.ci_hi) = wilson_interval(row.count, opt.n);
        w.rows.push_back(row);
    }
    return w;
}

std::vector<double> radius_survival(const WeightTable& w, int max_ell) {
    std::vector<double> s(static_cast<std::size_t>(max_ell) + 1, 0.0);
    for (std::size_t i = 0; i < w.n; ++i) {
        if (!w.changed[i]) continue;
        for (int ell = 0; ell <= max_ell; ++ell)
            if (w.radii[i] >= ell) s[static_cast<std::size_t>(ell)] += 1.0;
    }
    for (auto& v : s) v /= static_cast<double>(w.n);
    return s;
}

void write_weight_csv(std::ostream& os, const std::vector<WeightTable>& tables) {
    os << "t,ell,pi_hat,ci_lo,ci_hi,n\n";
    char buf[256];
    for (const auto& w : tables)
        for (const auto& r : w.rows) {
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g,%.17g,%zu\n", r.t, r.ell, r.pi_hat, r.ci_lo, r.ci_hi, r.n);
            os << buf;
        }
}

}  // namespace jamstat
