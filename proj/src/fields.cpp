#include "jamstat/fields.hpp"

#include <fftw3.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace jamstat {

namespace {

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct GslNoAbort {
    GslNoAbort() { gsl_set_error_handler_off(); }
};
const GslNoAbort gsl_no_abort;

template <class F>
double integrate_inf(F f, double a, double epsabs, double epsrel) {
    gsl_integration_workspace* w = gsl_integration_workspace_alloc(2000);
    gsl_function gf;
    gf.function = [](double x, void* p) { return (*static_cast<F*>(p))(x); };
    gf.params = &f;
    double r = 0, err = 0;
    if (std::isinf(a))
        gsl_integration_qagi(&gf, epsabs, epsrel, 2000, w, &r, &err);
    else
        gsl_integration_qagiu(&gf, a, epsabs, epsrel, 2000, w, &r, &err);
    gsl_integration_workspace_free(w);
    return r;
}

// overlap of [a, b) with [lo, hi) including periodic images of [a, b)
double periodic_overlap(double a, double b, double lo, double hi, double R, bool periodic) {
    if (!periodic) return std::max(0.0, std::min(b, hi) - std::max(a, lo));
    double tot = 0.0;
    double k0 = std::floor((lo - b) / R), k1 = std::ceil((hi - a) / R);
    for (double k = k0; k <= k1; k += 1.0) tot += std::max(0.0, std::min(b + k * R, hi) - std::max(a + k * R, lo));
    return tot;
}

}  // namespace

Raster FieldSample::raster(double step) const {
    Raster r;
    r.dim = box_.dim;
    r.step = step;
    std::size_t n = static_cast<std::size_t>(std::llround(box_.side / step));
    if (n == 0) throw std::invalid_argument("raster step larger than box");
    std::size_t total = 1;
    for (int i = 0; i < r.dim; ++i) {
        r.dims[i] = n;
        total *= n;
    }
    r.values.resize(total);
    for (std::size_t k = 0; k < total; ++k) {
        Point p(r.dim);
        std::size_t m = k;
        for (int i = r.dim - 1; i >= 0; --i) {
            p.x[i] = box_.lo() + (static_cast<double>(m % n) + 0.5) * step;
            m /= n;
        }
        r.values[k] = value(p);
    }
    return r;
}

double grid_average(const FieldSample& f, double L, double step) {
    const int d = f.box().dim;
    std::size_t n = static_cast<std::size_t>(std::ceil(L / step - 1e-9));
    double h = L / static_cast<double>(n);
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= n;
    double s = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
        Point p(d);
        std::size_t m = k;
        for (int i = 0; i < d; ++i) {
            p.x[i] = -0.5 * L + (static_cast<double>(m % n) + 0.5) * h;
            m /= n;
        }
        s += f.value(p);
    }
    return s / static_cast<double>(total);
}

InclusionField::InclusionField(const TorusBox& box, std::vector<Point> centers, std::vector<double> radii, double a0,
                               double a1, double cutoff, FieldModel kind)
    : centers_(std::move(centers)), radii_(std::move(radii)), a0_(a0), a1_(a1), cutoff_(cutoff), kind_(kind) {
    box_ = box;
    if (a0 == a1) throw std::invalid_argument("inclusion field needs A0 != A1");
    if (centers_.size() != radii_.size()) throw std::invalid_argument("centers and radii differ in length");
    std::vector<double> r = radii_;
    double cell = 1.0;
    if (!r.empty()) {
        std::size_t q = (r.size() * 9) / 10;
        std::nth_element(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(q), r.end());
        cell = std::max(0.25, 2.0 * r[q]);
    }
    grid_ = GridIndex(box, cell);
    for (std::size_t i = 0; i < centers_.size(); ++i) {
        if (radii_[i] > cell) {
            large_.push_back(static_cast<std::uint32_t>(i));
        } else {
            grid_.insert(centers_[i], static_cast<std::uint32_t>(i));
            small_max_ = std::max(small_max_, radii_[i]);
        }
    }
}

bool InclusionField::covered(const Point& y) const {
    for (auto i : large_)
        if (torus_distance2(box_, y, centers_[i]) < radii_[i] * radii_[i]) return true;
    bool hit = false;
    grid_.visit_within(y, small_max_, [&](std::uint32_t i) {
        if (!hit && torus_distance2(box_, y, centers_[i]) < radii_[i] * radii_[i]) hit = true;
    });
    return hit;
}

double InclusionField::value(const Point& y) const { return covered(y) ? a1_ : a0_; }

double InclusionField::average(double L) const {
    if (box_.dim != 1) return grid_average(*this, L, average_step);
    const double lo = -0.5 * L, hi = 0.5 * L, R = box_.side;
    std::vector<std::pair<double, double>> iv;
    for (std::size_t i = 0; i < centers_.size(); ++i) {
        double a = centers_[i][0] - radii_[i], b = centers_[i][0] + radii_[i];
        if (box_.periodic()) {
            double k0 = std::floor((lo - b) / R), k1 = std::ceil((hi - a) / R);
            for (double k = k0; k <= k1; k += 1.0) {
                double s = std::max(a + k * R, lo), e = std::min(b + k * R, hi);
                if (e > s) iv.emplace_back(s, e);
            }
        } else {
            double s = std::max(a, lo), e = std::min(b, hi);
            if (e > s) iv.emplace_back(s, e);
        }
    }
    std::sort(iv.begin(), iv.end());
    double cov = 0.0, cs = lo, ce = lo;
    for (auto& [s, e] : iv) {
        if (s > ce) {
            cov += ce - cs;
            cs = s;
            ce = e;
        } else {
            ce = std::max(ce, e);
        }
    }
    cov += ce - cs;
    return (a1_ * cov + a0_ * (L - cov)) / L;
}

VoronoiField::VoronoiField(const TorusBox& box, std::vector<Point> generators, std::vector<double> values,
                           double amplitude, double cutoff)
    : gens_(std::move(generators)), vals_(std::move(values)), amp_(amplitude), cutoff_(cutoff) {
    box_ = box;
    if (gens_.empty()) throw std::invalid_argument("voronoi field needs at least one generator");
    double spacing = std::pow(box.volume() / static_cast<double>(gens_.size()), 1.0 / box.dim);
    grid_ = GridIndex(box, std::max(spacing, box.side / 2048.0));
    for (std::size_t i = 0; i < gens_.size(); ++i) grid_.insert(gens_[i], static_cast<std::uint32_t>(i));
    if (box.dim == 1) {
        order1d_.resize(gens_.size());
        for (std::size_t i = 0; i < gens_.size(); ++i) order1d_[i] = i;
        std::sort(order1d_.begin(), order1d_.end(), [&](std::size_t a, std::size_t b) { return gens_[a][0] < gens_[b][0]; });
    }
}

std::size_t VoronoiField::nearest(const Point& y) const {
    const double diag = 0.5 * box_.side * std::sqrt(double(box_.dim)) + box_.side;
    double rad = grid_.cell_side();
    for (;;) {
        std::size_t best = gens_.size();
        double bd = std::numeric_limits<double>::infinity();
        grid_.visit_within(y, rad, [&](std::uint32_t i) {
            double dd = torus_distance2(box_, y, gens_[i]);
            if (dd < bd || (dd == bd && lex_less(gens_[i], gens_[best]))) {
                bd = dd;
                best = i;
            }
        });
        if (best < gens_.size() && (std::sqrt(bd) <= rad || rad >= diag)) return best;
        if (rad >= diag) return best;
        rad *= 2.0;
    }
}

double VoronoiField::value(const Point& y) const { return vals_[nearest(y)]; }

double VoronoiField::average(double L) const {
    if (box_.dim != 1) return grid_average(*this, L, average_step);
    const double lo = -0.5 * L, hi = 0.5 * L, R = box_.side;
    const std::size_t n = order1d_.size();
    if (n == 1) return vals_[0];
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        std::size_t i = order1d_[j];
        double x = gens_[i][0];
        double left, right;
        if (box_.periodic()) {
            double xp = gens_[order1d_[(j + n - 1) % n]][0];
            double xn = gens_[order1d_[(j + 1) % n]][0];
            if (j == 0) xp -= R;
            if (j + 1 == n) xn += R;
            left = 0.5 * (xp + x);
            right = 0.5 * (x + xn);
        } else {
            left = j == 0 ? -std::numeric_limits<double>::infinity() : 0.5 * (gens_[order1d_[j - 1]][0] + x);
            right = j + 1 == n ? std::numeric_limits<double>::infinity() : 0.5 * (x + gens_[order1d_[j + 1]][0]);
        }
        s += vals_[i] * periodic_overlap(left, right, lo, hi, R, box_.periodic());
    }
    return s / L;
}

double Kernel::profile(double r, int d) const {
    switch (kind) {
        case KernelKind::DiscreteDelta: return r == 0.0 ? 1.0 : 0.0;
        case KernelKind::CompactBump: {
            if (r >= param) return 0.0;
            double u = 1.0 - (r * r) / (param * param);
            return u * u;
        }
        case KernelKind::PowerDecay: return std::pow(1.0 + r, -0.5 * (d + param));
    }
    return 0.0;
}

double Kernel::effective_width() const {
    switch (kind) {
        case KernelKind::DiscreteDelta: return std::numeric_limits<double>::infinity();
        case KernelKind::CompactBump: return param;
        case KernelKind::PowerDecay: return 1.0;
    }
    return 1.0;
}

double apply_nonlinearity(Nonlinearity h, double g) {
    switch (h) {
        case Nonlinearity::Identity: return g;
        case Nonlinearity::Tanh: return std::tanh(g);
        case Nonlinearity::Logistic: return 1.0 / (1.0 + std::exp(-g));
    }
    return g;
}

double nonlinearity_lipschitz(Nonlinearity h) { return h == Nonlinearity::Logistic ? 0.25 : 1.0; }

double nonlinearity_mean(Nonlinearity h) {
    auto f = [h](double g) { return apply_nonlinearity(h, g) * std::exp(-0.5 * g * g) / std::sqrt(2.0 * std::numbers::pi); };
    double v = integrate_inf(f, -std::numeric_limits<double>::infinity(), 1e-13, 1e-12);
    return std::abs(v) < 1e-13 ? 0.0 : v;
}

double KernelTable::weight(const std::array<int, 3>& off) const {
    std::size_t k = 0;
    const std::size_t w = 2 * static_cast<std::size_t>(half) + 1;
    for (int i = 0; i < dim; ++i) {
        if (std::abs(off[i]) > half) return 0.0;
        k = k * w + static_cast<std::size_t>(off[i] + half);
    }
    return weights[k];
}

KernelTable kernel_extent(const Kernel& k, int d, double step, double max_radius) {
    if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
    if (step > 0.25 * k.effective_width() * (1.0 + 1e-12))
        throw std::invalid_argument("grid step too coarse for kernel: need step <= " +
                                    std::to_string(0.25 * k.effective_width()));
    KernelTable t;
    t.dim = d;
    t.step = step;
    if (k.kind == KernelKind::DiscreteDelta) {
        t.weights = {1.0};
        return t;
    }
    if (k.kind == KernelKind::CompactBump) {
        t.taper_start = t.truncation = k.param;
    } else {
        if (!(k.param > 0.0) || std::abs(k.param - d) < 1e-12)
            throw std::invalid_argument("power decay kernel needs beta > 0 and beta != d");
        // share of the continuum variance beyond radius b
        auto tail = [&](double b) {
            auto f = [&](double r) { return std::pow(r, d - 1) * std::pow(1.0 + r, -(d + k.param)); };
            double total = integrate_inf(f, 0.0, 0.0, 1e-10);
            return integrate_inf(f, b, 0.0, 1e-10) / total;
        };
        double lo = 0.0, hi = 1.0;
        while (tail(hi) > 1e-6 && hi < 1e15) hi *= 2.0;
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            (tail(mid) > 1e-6 ? lo : hi) = mid;
        }
        t.taper_start = std::min(hi, max_radius / 1.25);
        t.truncation = 1.25 * t.taper_start;
        t.tail_fraction = tail(t.taper_start);
    }
    t.half = static_cast<int>(std::floor(t.truncation / step));
    return t;
}

KernelTable make_kernel_table(const Kernel& k, int d, double step, double max_radius) {
    KernelTable t = kernel_extent(k, d, step, max_radius);
    if (k.kind == KernelKind::DiscreteDelta) return t;
    const std::size_t w = 2 * static_cast<std::size_t>(t.half) + 1;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= w;
    t.weights.resize(total);
    double ss = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t m = idx;
        double r2 = 0.0;
        for (int i = d - 1; i >= 0; --i) {
            double o = (static_cast<double>(m % w) - t.half) * step;
            r2 += o * o;
            m /= w;
        }
        double r = std::sqrt(r2);
        double v = k.profile(r, d);
        if (r > t.taper_start) {
            double u = (r - t.taper_start) / (t.truncation - t.taper_start);
            v = u >= 1.0 ? 0.0 : v * 0.5 * (1.0 + std::cos(std::numbers::pi * u));
        }
        t.weights[idx] = v;
        ss += v * v;
    }
    double norm = 1.0 / std::sqrt(ss);
    for (auto& v : t.weights) v *= norm;
    return t;
}

GaussianField::GaussianField(const TorusBox& box, double step, std::array<std::size_t, 3> dims, std::vector<double> g,
                             Nonlinearity h, double cutoff)
    : step_(step), dims_(dims), g_(std::move(g)), h_(h), cutoff_(cutoff) {
    box_ = box;
}

double GaussianField::value(const Point& y) const {
    std::size_t k = 0;
    for (int i = 0; i < box_.dim; ++i) {
        double v = box_.periodic() ? wrap_coord(y[i], box_.side) : y[i];
        auto c = static_cast<long long>(std::floor((v - box_.lo()) / step_));
        c = std::clamp<long long>(c, 0, static_cast<long long>(dims_[i]) - 1);
        k = k * dims_[i] + static_cast<std::size_t>(c);
    }
    return apply_nonlinearity(h_, g_[k]);
}

double GaussianField::amplitude() const {
    switch (h_) {
        case Nonlinearity::Identity: return std::numeric_limits<double>::infinity();
        case Nonlinearity::Tanh: return 2.0;
        case Nonlinearity::Logistic: return 1.0;
    }
    return 1.0;
}

double GaussianField::average(double L) const {
    const int d = box_.dim;
    std::array<std::vector<std::pair<std::size_t, double>>, 3> w;
    for (int i = 0; i < d; ++i) {
        for (std::size_t c = 0; c < dims_[i]; ++c) {
            double a = box_.lo() + c * step_, b = a + step_;
            double o = std::max(0.0, std::min(b, 0.5 * L) - std::max(a, -0.5 * L));
            if (o > 0.0) w[i].emplace_back(c, o / L);
        }
    }
    if (d == 1) {
        double s = 0.0;
        for (auto& [c, a] : w[0]) s += a * apply_nonlinearity(h_, g_[c]);
        return s;
    }
    double s = 0.0;
    if (d == 2) {
        for (auto& [c0, a0] : w[0])
            for (auto& [c1, a1] : w[1]) s += a0 * a1 * apply_nonlinearity(h_, g_[c0 * dims_[1] + c1]);
        return s;
    }
    for (auto& [c0, a0] : w[0])
        for (auto& [c1, a1] : w[1])
            for (auto& [c2, a2] : w[2])
                s += a0 * a1 * a2 * apply_nonlinearity(h_, g_[(c0 * dims_[1] + c1) * dims_[2] + c2]);
    return s;
}

Raster GaussianField::raster(double step) const {
    if (std::abs(step - step_) > 1e-12 * step_) return FieldSample::raster(step);
    Raster r;
    r.dim = box_.dim;
    r.step = step_;
    r.dims = dims_;
    r.values.resize(g_.size());
    for (std::size_t i = 0; i < g_.size(); ++i) r.values[i] = apply_nonlinearity(h_, g_[i]);
    return r;
}

GaussianGenerator::GaussianGenerator(const TorusBox& box, const Kernel& k, Nonlinearity h, double step,
                                     double max_radius)
    : box_(box), table_(make_kernel_table(k, box.dim, step, max_radius)), h_(h) {
    const int d = box.dim;
    double nn = box.side / step;
    std::size_t n = static_cast<std::size_t>(std::llround(nn));
    if (std::abs(nn - static_cast<double>(n)) > 1e-6 || n == 0)
        throw std::invalid_argument("box side must be a multiple of the grid step");
    if (n < 2 * static_cast<std::size_t>(table_.half) + 1)
        throw std::invalid_argument("box too small for the kernel truncation radius");
    total_ = 1;
    for (int i = 0; i < d; ++i) {
        dims_[i] = n;
        total_ *= n;
    }
    spec_ = total_ / n * (n / 2 + 1);
    double* in = fftw_alloc_real(total_);
    fftw_complex* out = fftw_alloc_complex(spec_);
    int nd[3] = {static_cast<int>(n), static_cast<int>(n), static_cast<int>(n)};
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan_fwd_ = fftw_plan_dft_r2c(d, nd, in, out, FFTW_ESTIMATE);
        plan_bwd_ = fftw_plan_dft_c2r(d, nd, out, in, FFTW_ESTIMATE);
    }
    std::fill(in, in + total_, 0.0);
    const int hw = table_.half;
    const std::size_t w = 2 * static_cast<std::size_t>(hw) + 1;
    for (std::size_t idx = 0; idx < table_.weights.size(); ++idx) {
        std::size_t m = idx, pos = 0;
        std::array<long long, 3> off{0, 0, 0};
        for (int i = d - 1; i >= 0; --i) {
            off[i] = static_cast<long long>(m % w) - hw;
            m /= w;
        }
        for (int i = 0; i < d; ++i) {
            long long o = ((off[i] % static_cast<long long>(n)) + static_cast<long long>(n)) % static_cast<long long>(n);
            pos = pos * n + static_cast<std::size_t>(o);
        }
        in[pos] += table_.weights[idx];
    }
    fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd_), in, out);
    kernel_hat_.resize(2 * spec_);
    for (std::size_t i = 0; i < spec_; ++i) {
        kernel_hat_[2 * i] = out[i][0];
        kernel_hat_[2 * i + 1] = out[i][1];
    }
    fftw_free(in);
    fftw_free(out);
}

GaussianGenerator::~GaussianGenerator() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    if (plan_bwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_bwd_));
}

std::unique_ptr<GaussianField> GaussianGenerator::sample(const StreamKey& key) const {
    double* in = fftw_alloc_real(total_);
    fftw_complex* out = fftw_alloc_complex(spec_);
    Stream s(key);
    for (std::size_t i = 0; i < total_; ++i) in[i] = s.normal();
    fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_fwd_), in, out);
    const double scale = 1.0 / static_cast<double>(total_);
    for (std::size_t i = 0; i < spec_; ++i) {
        double a = out[i][0], b = out[i][1], c = kernel_hat_[2 * i], e = kernel_hat_[2 * i + 1];
        out[i][0] = (a * c - b * e) * scale;
        out[i][1] = (a * e + b * c) * scale;
    }
    fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_bwd_), out, in);
    std::vector<double> g(in, in + total_);
    fftw_free(in);
    fftw_free(out);
    return std::make_unique<GaussianField>(box_, table_.step, dims_, std::move(g), h_, table_.truncation);
}

std::unique_ptr<GaussianField> gaussian_field(const StreamKey& key, const TorusBox& box, const Kernel& k,
                                              Nonlinearity h, double step) {
    GaussianGenerator gen(box, k, h, step);
    return gen.sample(key);
}

double voronoi_cutoff(double intensity, int d) {
    // empty-ball radius exceeded with probability 1e-4, doubled for the cell diameter
    return 2.0 * std::pow(std::log(1e4) / (intensity * unit_ball_volume(d)), 1.0 / d);
}

double inclusion_cutoff(const RadiusLaw& law) { return law.quantile(0.9999); }

double inclusion_mean(double intensity, const RadiusLaw& law, int d, double a0, double a1) {
    double p0 = std::exp(-intensity * unit_ball_volume(d) * law.moment(d));
    return a0 * p0 + a1 * (1.0 - p0);
}

std::unique_ptr<InclusionField> realize_inclusion(const DrivingProcess& proc, double a0, double a1) {
    if (!proc.marks) throw std::invalid_argument("inclusion model needs a radius law");
    auto pts = proc.materialize();
    std::vector<Point> c;
    std::vector<double> r;
    c.reserve(pts.size());
    r.reserve(pts.size());
    for (auto& p : pts.points) {
        c.push_back(p.loc);
        r.push_back(p.mark);
    }
    return std::make_unique<InclusionField>(proc.box, std::move(c), std::move(r), a0, a1, inclusion_cutoff(*proc.marks));
}

std::unique_ptr<VoronoiField> realize_voronoi(const DrivingProcess& proc) {
    if (!proc.marks) throw std::invalid_argument("voronoi model needs a value law");
    DrivingProcess p = proc;
    int attempts = 0;
    auto pts = p.materialize();
    while (pts.size() == 0) {
        // condition on a nonempty configuration by redrawing every stream
        ++attempts;
        p.key = mix_key(proc.key, 0xC0D1000000000000ull + static_cast<std::uint64_t>(attempts));
        for (auto& o : p.overrides) o.key = mix_key(o.key, static_cast<std::uint64_t>(attempts));
        pts = p.materialize();
        if (attempts > 1000) throw std::runtime_error("voronoi conditioning failed");
    }
    std::vector<Point> g;
    std::vector<double> v;
    for (auto& q : pts.points) {
        g.push_back(q.loc);
        v.push_back(q.mark);
    }
    double amp = proc.marks->upper() - proc.marks->quantile(0.0);
    auto f = std::make_unique<VoronoiField>(proc.box, std::move(g), std::move(v), amp,
                                            voronoi_cutoff(proc.intensity, proc.box.dim));
    f->conditioning_attempts = attempts;
    return f;
}

std::unique_ptr<InclusionField> realize_parking(const DrivingProcess& proc, const Solid& solid, double a0, double a1,
                                                const PackOptions& opt) {
    if (solid.kind != SolidKind::Ball) throw std::invalid_argument("parking field needs ball solids");
    auto cfg = pack_process(proc, solid, opt);
    std::vector<double> r(cfg.accepted.size(), solid.size);
    return std::make_unique<InclusionField>(proc.box, cfg.accepted, std::move(r), a0, a1, 4.0 * solid.diameter(proc.box.dim),
                                            FieldModel::Parking);
}

std::unique_ptr<InclusionField> inclusion_field(const StreamKey& key, const TorusBox& box, double intensity,
                                                const RadiusLaw& law, double a0, double a1) {
    DrivingProcess p(key, box, intensity);
    p.marks = law;
    return realize_inclusion(p, a0, a1);
}

std::unique_ptr<VoronoiField> voronoi_field(const StreamKey& key, const TorusBox& box, double intensity,
                                            const RadiusLaw& values) {
    DrivingProcess p(key, box, intensity);
    p.marks = values;
    return realize_voronoi(p);
}

double spatial_average(const FieldSample& f, double L, double gamma, double mean) {
    if (!(L > 0.0)) throw std::invalid_argument("window size must be positive");
    if (L + 2.0 * f.cutoff() > f.box().side * (1.0 + 1e-12))
        throw std::invalid_argument("box too small: need side >= L + 2 * cutoff = " +
                                    std::to_string(L + 2.0 * f.cutoff()));
    return std::pow(L, gamma) * (f.average(L) - mean);
}

void write_raster_csv(std::ostream& os, const Raster& r) {
    char buf[40];
    std::size_t row = r.dims[r.dim - 1];
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", r.values[i]);
        os << buf << ((i + 1) % row == 0 ? '\n' : ',');
    }
}

namespace {
template <class T>
void put_le(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host expected");
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    os.write(b, sizeof(T));
}
template <class T>
T get_le(std::istream& is) {
    T v;
    char b[sizeof(T)];
    if (!is.read(b, sizeof(T))) throw std::runtime_error("truncated raster file");
    std::memcpy(&v, b, sizeof(T));
    return v;
}
}  // namespace

void write_raster_binary(std::ostream& os, const Raster& r) {
    os.write("JSFD", 4);
    put_le<std::uint32_t>(os, 1);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(r.dim));
    for (int i = 0; i < r.dim; ++i) put_le<std::uint64_t>(os, r.dims[i]);
    put_le<double>(os, r.step);
    for (double v : r.values) put_le<double>(os, v);
}

Raster read_raster_binary(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "JSFD", 4) != 0) throw std::runtime_error("not a JSFD raster");
    if (get_le<std::uint32_t>(is) != 1) throw std::runtime_error("unsupported raster version");
    Raster r;
    r.dim = static_cast<int>(get_le<std::uint32_t>(is));
    if (r.dim < 1 || r.dim > 3) throw std::runtime_error("bad raster dimension");
    std::size_t total = 1;
    for (int i = 0; i < r.dim; ++i) {
        r.dims[i] = get_le<std::uint64_t>(is);
        total *= r.dims[i];
    }
    r.step = get_le<double>(is);
    r.values.resize(total);
    for (auto& v : r.values) v = get_le<double>(is);
    return r;
}

}  // namespace jamstat
