#include "jamstat/rsa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace jamstat {

namespace {

constexpr std::uint64_t kTagSpaceTime = 0x5350414345540002ull;
constexpr std::uint64_t kTagRootCount = 0x524F4F5443000003ull;
constexpr std::uint64_t kTagLeaf = 0x4C45414600000004ull;
constexpr std::uint64_t kTagMonteCarlo = 0x4D43000000000005ull;

bool overlaps_any(const TorusBox& box, const Solid& solid, const std::vector<Point>& centers,
                  const GridIndex& grid, const Point& p) {
    bool hit = false;
    grid.visit_within(p, 2.0 * solid.size, [&](std::uint32_t id) {
        if (!hit && solids_overlap(box, solid, centers[id], p)) hit = true;
    });
    return hit;
}

struct DyCell {
    std::uint32_t top = 0;
    int depth = 0;
    std::array<std::uint32_t, 3> c{0, 0, 0};
};

enum class Cls { Discard, Whole, Split };

// classifies axis-aligned cells against the exclusion zones of accepted centers
struct Excluder {
    TorusBox box;
    Solid solid;
    const CellGrid* top = nullptr;
    const std::vector<Point>* centers = nullptr;
    const GridIndex* grid = nullptr;

    double width(const DyCell& c) const { return std::ldexp(top->side, -c.depth); }

    Point lo(const DyCell& c) const {
        Point p = top->cell_lo(c.top);
        double w = width(c);
        for (int i = 0; i < box.dim; ++i) p.x[i] += w * c.c[i];
        return p;
    }

    double volume(const DyCell& c) const { return std::pow(width(c), box.dim); }

    Cls classify(const DyCell& cell) const {
        if (centers->empty()) return Cls::Whole;
        const int d = box.dim;
        const double w = width(cell);
        Point a = lo(cell), m = a;
        for (int i = 0; i < d; ++i) m.x[i] += 0.5 * w;
        const double range = 2.0 * solid.size;
        const double r2 = range * range;
        bool undecided = false, discard = false;
        grid->visit_within(m, range + 0.5 * w * (1.0 + 1e-9), [&](std::uint32_t id) {
            if (discard) return;
            const Point& c = (*centers)[id];
            if (solid.kind == SolidKind::Ball) {
                double smin = 0.0, smax = 0.0;
                for (int i = 0; i < d; ++i) {
                    AxisRange ar = axis_range(box, a.x[i], a.x[i] + w, c.x[i]);
                    smin += ar.min * ar.min;
                    smax += ar.max * ar.max;
                }
                if (smax < r2)
                    discard = true;
                else if (smin < r2)
                    undecided = true;
            } else {
                bool inside = true, outside = false;
                for (int i = 0; i < d; ++i) {
                    AxisRange ar = axis_range(box, a.x[i], a.x[i] + w, c.x[i]);
                    if (!(ar.max < range)) inside = false;
                    if (ar.min >= range) outside = true;
                }
                if (inside)
                    discard = true;
                else if (!outside)
                    undecided = true;
            }
        });
        if (discard) return Cls::Discard;
        return undecided ? Cls::Split : Cls::Whole;
    }

    void children(const DyCell& c, std::vector<DyCell>& out) const {
        const int d = box.dim;
        for (int k = 0; k < (1 << d); ++k) {
            DyCell ch = c;
            ch.depth = c.depth + 1;
            for (int i = 0; i < d; ++i) ch.c[i] = 2 * c.c[i] + ((k >> i) & 1);
            out.push_back(ch);
        }
    }
};

std::uint64_t node_key(std::uint64_t block_key, int depth, const std::array<std::uint32_t, 3>& c) {
    std::uint64_t code = static_cast<std::uint64_t>(c[0]) | (static_cast<std::uint64_t>(c[1]) << 21) |
                         (static_cast<std::uint64_t>(c[2]) << 42);
    return mix_key(mix_key(block_key, static_cast<std::uint64_t>(depth) + 1), code);
}

// split a node count into 2^d child counts by fair binomial halving, axis by axis
void split_counts(std::uint64_t key, std::uint64_t n, int d, std::array<std::uint64_t, 8>& counts) {
    Stream s(key);
    counts.fill(0);
    counts[0] = n;
    for (int a = 0; a < d; ++a) {
        for (int idx = 0; idx < (1 << a); ++idx) {
            std::uint64_t m = counts[idx];
            std::uint64_t lo = m == 0 ? 0 : (m == 1 ? (s.uniform() < 0.5 ? 1 : 0) : s.binomial(m, 0.5));
            counts[idx] = lo;
            counts[idx | (1 << a)] = m - lo;
        }
    }
}

// canonical space-time Poisson process, sampled lazily on dyadic cells
struct LazyPoisson {
    const DrivingProcess* proc;
    int leaf_depth;

    double block_lo(int k, double t0) const { return k == 0 ? 0.0 : std::ldexp(t0, k - 1); }
    double block_hi(int k, double t0) const { return std::ldexp(t0, k); }

    void emit(const DyCell& cell, int block, double tlo, double thi, std::vector<MarkedPoint>& out) const {
        const int d = proc->box.dim;
        std::uint64_t bk = mix_key(mix_key(proc->cell_key(cell.top), kTagSpaceTime), static_cast<std::uint64_t>(block));
        Stream rs(mix_key(bk, kTagRootCount));
        std::uint64_t n = rs.poisson(proc->intensity * proc->grid.cell_volume() * (thi - tlo));
        std::array<std::uint64_t, 8> counts;
        for (int j = 0; j < cell.depth && n > 0; ++j) {
            std::array<std::uint32_t, 3> pc{0, 0, 0};
            int idx = 0;
            for (int a = 0; a < d; ++a) {
                pc[a] = cell.c[a] >> (cell.depth - j);
                idx |= static_cast<int>((cell.c[a] >> (cell.depth - j - 1)) & 1u) << a;
            }
            split_counts(node_key(bk, j, pc), n, d, counts);
            n = counts[idx];
        }
        if (n > 0) expand(bk, cell.top, cell.depth, cell.c, n, tlo, thi, out);
    }

    void expand(std::uint64_t bk, std::uint32_t top, int depth, const std::array<std::uint32_t, 3>& c,
                std::uint64_t n, double tlo, double thi, std::vector<MarkedPoint>& out) const {
        const int d = proc->box.dim;
        if (depth >= leaf_depth) {
            Stream s(mix_key(node_key(bk, depth, c), kTagLeaf));
            double w = std::ldexp(proc->grid.side, -depth);
            Point lo = proc->grid.cell_lo(top);
            for (std::uint64_t j = 0; j < n; ++j) {
                MarkedPoint p;
                p.loc = Point(d);
                for (int i = 0; i < d; ++i) p.loc.x[i] = lo.x[i] + w * (c[i] + s.uniform());
                if (proc->box.periodic()) p.loc = wrap(proc->box, p.loc);
                p.time = tlo + (thi - tlo) * s.uniform();
                out.push_back(p);
            }
            return;
        }
        std::array<std::uint64_t, 8> counts;
        split_counts(node_key(bk, depth, c), n, d, counts);
        for (int k = 0; k < (1 << d); ++k) {
            if (counts[k] == 0) continue;
            std::array<std::uint32_t, 3> ch{0, 0, 0};
            for (int i = 0; i < d; ++i) ch[i] = 2 * c[i] + ((k >> i) & 1);
            expand(bk, top, depth + 1, ch, counts[k], tlo, thi, out);
        }
    }
};

int default_leaf_depth(int d) { return d == 1 ? 14 : (d == 2 ? 9 : 6); }
int default_certify_depth(int d) { return d == 1 ? 48 : (d == 2 ? 30 : 18); }

}  // namespace

PackedConfiguration sequential_insert(const MarkedPointSet& pts, const Solid& solid) {
    for (std::size_t i = 1; i < pts.points.size(); ++i)
        if (time_lex_less(pts.points[i], pts.points[i - 1]))
            throw std::invalid_argument("sequential_insert: points not sorted by (time, lex)");
    PackedConfiguration cfg;
    cfg.box = pts.metric_box();
    cfg.solid = solid;
    cfg.algorithm = Algorithm::Sequential;
    if (!self_overlaps(cfg.box, solid)) {
        GridIndex grid(cfg.box, 2.0 * solid.size);
        for (const auto& p : pts.points) {
            if (overlaps_any(cfg.box, solid, cfg.accepted, grid, p.loc)) continue;
            grid.insert(p.loc, static_cast<std::uint32_t>(cfg.accepted.size()));
            cfg.accepted.push_back(p.loc);
            cfg.accept_times.push_back(p.time);
        }
    }
    cfg.jamming_number = cfg.accepted.size();
    return cfg;
}

std::pair<PackedConfiguration, CausalGraph> graphical_construction(const MarkedPointSet& pts, const Solid& solid) {
    const std::size_t n = pts.points.size();
    TorusBox box = pts.metric_box();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::uint32_t a, std::uint32_t b) { return time_lex_less(pts.points[a], pts.points[b]); });
    std::vector<std::uint32_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) rank[order[i]] = static_cast<std::uint32_t>(i);

    CausalGraph g;
    g.nodes = n;
    std::vector<std::vector<std::uint32_t>> children(n);
    std::vector<std::uint32_t> indeg(n, 0);
    bool selfhit = self_overlaps(box, solid);
    if (!selfhit) {
        GridIndex grid(box, 2.0 * solid.size);
        for (std::uint32_t i = 0; i < n; ++i) grid.insert(pts.points[i].loc, i);
        for (std::uint32_t i = 0; i < n; ++i) {
            grid.visit_within(pts.points[i].loc, 2.0 * solid.size, [&](std::uint32_t j) {
                if (rank[j] <= rank[i]) return;
                if (!solids_overlap(box, solid, pts.points[i].loc, pts.points[j].loc)) return;
                children[i].push_back(j);
                ++indeg[j];
                g.edges.emplace_back(i, j);
            });
        }
    }

    std::vector<char> alive(n, selfhit ? 0 : 1), removed(n, 0);
    std::size_t left = selfhit ? 0 : n;
    std::vector<std::uint32_t> accepted;
    while (left > 0) {
        std::vector<std::uint32_t> F, G;
        for (std::uint32_t v = 0; v < n; ++v)
            if (alive[v] && indeg[v] == 0) F.push_back(v);
        for (auto v : F) removed[v] = 1;
        for (auto v : F)
            for (auto c : children[v])
                if (alive[c] && !removed[c]) {
                    removed[c] = 1;
                    G.push_back(c);
                }
        std::sort(G.begin(), G.end());
        auto drop = [&](std::uint32_t v) {
            alive[v] = 0;
            --left;
            for (auto c : children[v])
                if (alive[c] && !removed[c]) --indeg[c];
        };
        for (auto v : F) drop(v);
        for (auto v : G) drop(v);
        accepted.insert(accepted.end(), F.begin(), F.end());
        g.roots.push_back(std::move(F));
        g.offspring.push_back(std::move(G));
    }

    std::sort(accepted.begin(), accepted.end(), [&](std::uint32_t a, std::uint32_t b) { return rank[a] < rank[b]; });
    PackedConfiguration cfg;
    cfg.box = box;
    cfg.solid = solid;
    cfg.algorithm = Algorithm::Graphical;
    for (auto v : accepted) {
        cfg.accepted.push_back(pts.points[v].loc);
        cfg.accept_times.push_back(pts.points[v].time);
    }
    cfg.jamming_number = cfg.accepted.size();
    return {std::move(cfg), std::move(g)};
}

MarkedPointSet periodize(MarkedPointSet pts) {
    if (!pts.box.periodic()) throw std::invalid_argument("periodize: box has free boundary");
    pts.torus_metric = true;
    return pts;
}

FeasibleMeasure feasible_measure(const PackedConfiguration& cfg, double tol) {
    FeasibleMeasure fm;
    const TorusBox& box = cfg.box;
    if (self_overlaps(box, cfg.solid)) {
        fm.certified_zero = true;
        return fm;
    }
    GridIndex grid(box, 2.0 * cfg.solid.size);
    for (std::size_t i = 0; i < cfg.accepted.size(); ++i) grid.insert(cfg.accepted[i], static_cast<std::uint32_t>(i));

    if (cfg.solid.kind != SolidKind::Ball || box.dim > 2) {
        fm.exact = false;
        Stream s(mix_key(cfg.seed.material(), kTagMonteCarlo));
        const std::size_t m = 200000;
        std::size_t hits = 0;
        for (std::size_t j = 0; j < m; ++j) {
            Point p(box.dim);
            for (int i = 0; i < box.dim; ++i) p.x[i] = box.lo() + box.side * s.uniform();
            if (!overlaps_any(box, cfg.solid, cfg.accepted, grid, p)) ++hits;
        }
        double f = static_cast<double>(hits) / m;
        fm.estimate = box.volume() * f;
        fm.std_error = box.volume() * std::sqrt(std::max(f * (1.0 - f), 1.0 / m) / m);
        fm.lower = std::max(0.0, fm.estimate - 3.0 * fm.std_error);
        fm.upper = fm.estimate + 3.0 * fm.std_error;
        return fm;
    }

    CellGrid top = CellGrid::unit(box);
    Excluder ex{box, cfg.solid, &top, &cfg.accepted, &grid};
    std::vector<DyCell> level, next;
    for (std::uint32_t t = 0; t < top.count(); ++t) level.push_back(DyCell{t, 0, {0, 0, 0}});
    double whole = 0.0;
    const int max_depth = box.dim == 1 ? 60 : 32;
    const std::size_t budget = 4000000;
    for (int depth = 0;; ++depth) {
        next.clear();
        double undecided = 0.0;
        std::vector<DyCell> keep;
        for (const auto& c : level) {
            Cls k = ex.classify(c);
            if (k == Cls::Whole)
                whole += ex.volume(c);
            else if (k == Cls::Split) {
                undecided += ex.volume(c);
                keep.push_back(c);
            }
        }
        fm.lower = whole;
        fm.upper = whole + undecided;
        if (keep.empty() || fm.upper - fm.lower < tol || depth >= max_depth ||
            keep.size() * (1u << box.dim) > budget)
            break;
        for (const auto& c : keep) ex.children(c, next);
        level.swap(next);
    }
    fm.estimate = 0.5 * (fm.lower + fm.upper);
    fm.certified_zero = fm.upper == 0.0;
    return fm;
}

bool is_saturated(const PackedConfiguration& cfg) {
    FeasibleMeasure fm = feasible_measure(cfg, 0.0);
    return fm.exact && fm.certified_zero;
}

PackedConfiguration pack_process(const DrivingProcess& proc, const Solid& solid, const PackOptions& opt) {
    const TorusBox& box = proc.box;
    const int d = box.dim;
    PackedConfiguration cfg;
    cfg.box = box;
    cfg.solid = solid;
    cfg.seed = proc.root;
    cfg.algorithm = Algorithm::Saturation;
    if (self_overlaps(box, solid)) {
        cfg.saturated = true;
        return cfg;
    }
    const double range = 2.0 * solid.size;
    const int leaf = opt.leaf_depth >= 0 ? opt.leaf_depth : default_leaf_depth(d);
    const int cert_depth = opt.certify_depth >= 0 ? opt.certify_depth : default_certify_depth(d);
    int base = 0;
    while (base < leaf && std::ldexp(proc.grid.side, -base) > 0.25 * range) ++base;

    GridIndex grid(box, range);
    Excluder ex{box, solid, &proc.grid, &cfg.accepted, &grid};
    LazyPoisson lp{&proc, leaf};

    std::vector<DyCell> cover, next, stack;
    for (std::uint32_t t = 0; t < proc.grid.count(); ++t) cover.push_back(DyCell{t, 0, {0, 0, 0}});
    std::vector<MarkedPoint> pts;

    auto refine = [&](std::vector<DyCell>& cells, int max_depth, std::size_t budget, bool stop_on_whole,
                      bool& any_whole, bool& exhausted) {
        next.clear();
        stack.assign(cells.rbegin(), cells.rend());
        std::size_t seen = 0;
        any_whole = false;
        exhausted = false;
        while (!stack.empty()) {
            DyCell c = stack.back();
            stack.pop_back();
            if (++seen > budget) {
                exhausted = true;
                return;
            }
            Cls k = ex.classify(c);
            if (k == Cls::Discard) continue;
            if (k == Cls::Whole) {
                any_whole = true;
                if (stop_on_whole) return;
                next.push_back(c);
                continue;
            }
            if (c.depth >= max_depth) {
                next.push_back(c);
                continue;
            }
            std::size_t at = stack.size();
            ex.children(c, stack);
            std::reverse(stack.begin() + static_cast<std::ptrdiff_t>(at), stack.end());
        }
        cells.swap(next);
    };

    for (int k = 0; k < opt.max_blocks; ++k) {
        double tlo = lp.block_lo(k, opt.first_block), thi = lp.block_hi(k, opt.first_block);
        pts.clear();
        for (const auto& c : cover) lp.emit(c, k, tlo, thi, pts);
        std::sort(pts.begin(), pts.end(), time_lex_less);
        for (const auto& p : pts) {
            if (overlaps_any(box, solid, cfg.accepted, grid, p.loc)) continue;
            grid.insert(p.loc, static_cast<std::uint32_t>(cfg.accepted.size()));
            cfg.accepted.push_back(p.loc);
            cfg.accept_times.push_back(p.time);
        }
        cfg.blocks = k + 1;
        bool any_whole = false, exhausted = false;
        refine(cover, std::min(leaf, base + k + 1), static_cast<std::size_t>(-1), false, any_whole, exhausted);
        if (cover.empty()) {
            cfg.saturated = true;
            break;
        }
        if (!any_whole) {
            std::vector<DyCell> probe = cover;
            bool w = false, ex_budget = false;
            refine(probe, cert_depth, opt.certify_budget, true, w, ex_budget);
            if (!w && !ex_budget && probe.empty()) {
                cfg.saturated = true;
                break;
            }
        }
    }
    if (!cfg.saturated) {
        double v = 0.0;
        for (const auto& c : cover) v += ex.volume(c);
        cfg.residual_feasible_measure = v;
    }
    cfg.jamming_number = cfg.accepted.size();
    return cfg;
}

PackedConfiguration pack_to_saturation(const StreamKey& key, const TorusBox& box, const Solid& solid,
                                       double intensity, const PackOptions& opt) {
    DrivingProcess proc(key, box, intensity);
    return pack_process(proc, solid, opt);
}

bool packing_valid(const PackedConfiguration& cfg) {
    if (cfg.accepted.empty()) return true;
    if (self_overlaps(cfg.box, cfg.solid)) return false;
    GridIndex grid(cfg.box, 2.0 * cfg.solid.size);
    for (std::size_t i = 0; i < cfg.accepted.size(); ++i) {
        if (overlaps_any(cfg.box, cfg.solid, cfg.accepted, grid, cfg.accepted[i])) return false;
        grid.insert(cfg.accepted[i], static_cast<std::uint32_t>(i));
    }
    return true;
}

void write_packing_csv(std::ostream& os, const PackedConfiguration& cfg) {
    for (int i = 0; i < cfg.box.dim; ++i) os << 'x' << (i + 1) << ',';
    os << "accept_time\n";
    char buf[64];
    for (std::size_t j = 0; j < cfg.accepted.size(); ++j) {
        for (int i = 0; i < cfg.box.dim; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,", cfg.accepted[j][i]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", j < cfg.accept_times.size() ? cfg.accept_times[j] : 0.0);
        os << buf;
    }
}

std::string packing_json(const PackedConfiguration& cfg) {
    nlohmann::ordered_json j;
    j["dim"] = cfg.box.dim;
    j["side"] = cfg.box.side;
    j["boundary"] = cfg.box.periodic() ? "periodic" : "free";
    j["solid"] = {{"kind", cfg.solid.kind == SolidKind::Ball ? "ball" : "cube"}, {"size", cfg.solid.size}};
    j["jamming_number"] = cfg.jamming_number;
    j["saturated"] = cfg.saturated;
    j["residual_feasible_measure"] = cfg.residual_feasible_measure;
    j["algorithm"] = cfg.algorithm == Algorithm::Sequential ? "sequential"
                     : cfg.algorithm == Algorithm::Graphical ? "graphical"
                                                             : "saturation";
    j["seed"] = {{"seed", cfg.seed.seed}, {"path", cfg.seed.path}};
    j["blocks"] = cfg.blocks;
    nlohmann::ordered_json c = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < cfg.accepted.size(); ++i) {
        std::vector<double> x(cfg.accepted[i].x.begin(), cfg.accepted[i].x.begin() + cfg.box.dim);
        c.push_back({{"x", x}, {"t", i < cfg.accept_times.size() ? cfg.accept_times[i] : 0.0}});
    }
    j["centers"] = c;
    return j.dump(2);
}

}  // namespace jamstat
