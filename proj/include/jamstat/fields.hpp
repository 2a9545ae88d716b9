#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "jamstat/geom.hpp"
#include "jamstat/ppp.hpp"
#include "jamstat/rsa.hpp"

namespace jamstat {

enum class FieldModel { Inclusion, Voronoi, Gaussian, Parking };

struct Raster {
    int dim = 1;
    std::array<std::size_t, 3> dims{1, 1, 1};
    double step = 1.0;
    std::vector<double> values;  // row-major, last axis fastest
};

class FieldSample {
public:
    virtual ~FieldSample() = default;
    virtual FieldModel model() const = 0;
    virtual double value(const Point& y) const = 0;
    // average of A over Q_L = [-L/2, L/2)^d
    virtual double average(double L) const = 0;
    // margin needed around Q_L for the average to be free of box effects
    virtual double cutoff() const = 0;
    // bound on |A(x) - A(y)|
    virtual double amplitude() const = 0;
    virtual Raster raster(double step) const;

    const TorusBox& box() const { return box_; }

protected:
    TorusBox box_;
};

// midpoint rule over Q_L for fields without an exact average
double grid_average(const FieldSample& f, double L, double step);

class InclusionField : public FieldSample {
public:
    InclusionField(const TorusBox& box, std::vector<Point> centers, std::vector<double> radii, double a0, double a1,
                   double cutoff, FieldModel kind = FieldModel::Inclusion);
    FieldModel model() const override { return kind_; }
    double value(const Point& y) const override;
    double average(double L) const override;
    double cutoff() const override { return cutoff_; }
    double amplitude() const override { return std::abs(a1_ - a0_); }
    bool covered(const Point& y) const;
    double average_step = 1.0 / 32.0;

    const std::vector<Point>& centers() const { return centers_; }
    const std::vector<double>& radii() const { return radii_; }
    double a0() const { return a0_; }
    double a1() const { return a1_; }

private:
    std::vector<Point> centers_;
    std::vector<double> radii_;
    double a0_, a1_, cutoff_;
    FieldModel kind_;
    GridIndex grid_;
    std::vector<std::uint32_t> large_;
    double small_max_ = 0.0;
};

class VoronoiField : public FieldSample {
public:
    VoronoiField(const TorusBox& box, std::vector<Point> generators, std::vector<double> values, double amplitude,
                 double cutoff);
    FieldModel model() const override { return FieldModel::Voronoi; }
    double value(const Point& y) const override;
    double average(double L) const override;
    double cutoff() const override { return cutoff_; }
    double amplitude() const override { return amp_; }
    std::size_t nearest(const Point& y) const;
    double average_step = 1.0 / 32.0;
    int conditioning_attempts = 0;

    const std::vector<Point>& generators() const { return gens_; }
    const std::vector<double>& values() const { return vals_; }

private:
    std::vector<Point> gens_;
    std::vector<double> vals_;
    double amp_, cutoff_;
    GridIndex grid_;
    std::vector<std::size_t> order1d_;  // generators sorted by coordinate (d = 1)
};

enum class KernelKind { DiscreteDelta, CompactBump, PowerDecay };
enum class Nonlinearity { Identity, Tanh, Logistic };

struct Kernel {
    KernelKind kind = KernelKind::PowerDecay;
    double param = 1.5;  // support radius (CompactBump) or beta (PowerDecay)

    double profile(double r, int d) const;  // untruncated, unnormalized C0
    double effective_width() const;
};

double apply_nonlinearity(Nonlinearity h, double g);
double nonlinearity_lipschitz(Nonlinearity h);
double nonlinearity_mean(Nonlinearity h);  // E h(N(0,1)) by quadrature

// discrete moving-average stencil, normalized to unit variance
struct KernelTable {
    int dim = 1;
    double step = 1.0;
    int half = 0;                // stencil covers offsets -half..half per axis
    double taper_start = 0.0;    // radius where the smooth cutoff begins
    double truncation = 0.0;     // radius beyond which weights vanish
    double tail_fraction = 0.0;  // untruncated variance share beyond taper_start
    std::vector<double> weights; // (2 half + 1)^d, row-major
    double weight(const std::array<int, 3>& off) const;
};

KernelTable make_kernel_table(const Kernel& k, int d, double step, double max_radius = 8192.0);
// truncation radius and stencil half-width only, without the weights
KernelTable kernel_extent(const Kernel& k, int d, double step, double max_radius = 8192.0);

class GaussianField : public FieldSample {
public:
    GaussianField(const TorusBox& box, double step, std::array<std::size_t, 3> dims, std::vector<double> g,
                  Nonlinearity h, double cutoff);
    FieldModel model() const override { return FieldModel::Gaussian; }
    double value(const Point& y) const override;
    double average(double L) const override;
    double cutoff() const override { return cutoff_; }
    double amplitude() const override;
    Raster raster(double step) const override;
    double gaussian_at(std::size_t i) const { return g_[i]; }
    std::size_t size() const { return g_.size(); }
    double step() const { return step_; }
    const std::array<std::size_t, 3>& dims() const { return dims_; }

private:
    double step_;
    std::array<std::size_t, 3> dims_;
    std::vector<double> g_;
    Nonlinearity h_;
    double cutoff_;
};

// FFT moving-average sampler; reusable across replicates
class GaussianGenerator {
public:
    GaussianGenerator(const TorusBox& box, const Kernel& k, Nonlinearity h, double step, double max_radius = 8192.0);
    ~GaussianGenerator();
    GaussianGenerator(const GaussianGenerator&) = delete;
    GaussianGenerator& operator=(const GaussianGenerator&) = delete;

    std::unique_ptr<GaussianField> sample(const StreamKey& key) const;
    const KernelTable& table() const { return table_; }
    const TorusBox& box() const { return box_; }

private:
    TorusBox box_;
    KernelTable table_;
    Nonlinearity h_;
    std::array<std::size_t, 3> dims_{1, 1, 1};
    std::size_t total_ = 1;
    std::size_t spec_ = 1;
    std::vector<double> kernel_hat_;  // interleaved complex spectrum of the stencil
    void* plan_fwd_ = nullptr;
    void* plan_bwd_ = nullptr;
};

std::unique_ptr<GaussianField> gaussian_field(const StreamKey& key, const TorusBox& box, const Kernel& k,
                                              Nonlinearity h, double step);

double voronoi_cutoff(double intensity, int d);
double inclusion_cutoff(const RadiusLaw& law);
double inclusion_mean(double intensity, const RadiusLaw& law, int d, double a0, double a1);

std::unique_ptr<InclusionField> realize_inclusion(const DrivingProcess& proc, double a0, double a1);
std::unique_ptr<VoronoiField> realize_voronoi(const DrivingProcess& proc);
std::unique_ptr<InclusionField> realize_parking(const DrivingProcess& proc, const Solid& solid, double a0, double a1,
                                                const PackOptions& opt = {});

std::unique_ptr<InclusionField> inclusion_field(const StreamKey& key, const TorusBox& box, double intensity,
                                                const RadiusLaw& law, double a0, double a1);
std::unique_ptr<VoronoiField> voronoi_field(const StreamKey& key, const TorusBox& box, double intensity,
                                            const RadiusLaw& values);

// Z_L = L^gamma (avg_{Q_L} A - mean)
double spatial_average(const FieldSample& f, double L, double gamma, double mean);

void write_raster_csv(std::ostream& os, const Raster& r);
void write_raster_binary(std::ostream& os, const Raster& r);
Raster read_raster_binary(std::istream& is);

}  // namespace jamstat
