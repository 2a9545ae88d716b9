#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "jamstat/coupling.hpp"
#include "jamstat/fields.hpp"
#include "jamstat/msfi.hpp"
#include "jamstat/rsa.hpp"

namespace jamstat {

inline constexpr const char* kVersion = "1.0.0";

// invalid configuration; the message names the offending field
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Command { Jam, Clt, Weights, Wsg, Field, Rates };
enum class ModelKind { Parking, Inclusion, Voronoi, Gaussian, Poisson };

struct ExperimentConfig {
    Command command = Command::Jam;
    ModelKind model = ModelKind::Parking;
    int dim = 1;
    std::uint64_t seed = 1;
    int threads = 1;
    std::string out = "out";
    std::size_t replicates = 100;
    std::vector<double> scales{16.0, 32.0, 64.0};  // R (point models) or L (fields)
    double intensity = 1.0;
    Solid solid = Solid::ball(0.5);
    RadiusLaw radius_law = RadiusLaw::pareto_tail(4.5, 0.5);
    RadiusLaw value_law = RadiusLaw::uniform(0.0, 1.0);
    double a0 = 0.0, a1 = 1.0;
    Kernel kernel{KernelKind::PowerDecay, 1.5};
    double kernel_max_radius = 8192.0;  // cap on the stencil radius before the taper
    Nonlinearity nonlinearity = Nonlinearity::Identity;
    double step = 0.25;
    double beta = 0.5;  // inclusion weight exponent 2d + beta + 1
    int max_ell = 16;
    std::vector<int> classes{0, 1, 2};  // inclusion radius classes for weights
    RadiusMode radius_mode = RadiusMode::Measured;
    bool doubled_intensity = false;
    int cutoff = 8;  // lattice cutoff of the covariance integral
    std::size_t calibration_replicates = 10000;
    bool save_samples = true;
};

std::string command_name(Command c);
std::string model_name(ModelKind m);

nlohmann::json config_to_json(const ExperimentConfig& c, bool with_runtime = true);
// accepts a config object or a manifest (its "config" member and seed)
ExperimentConfig config_from_json(const nlohmann::json& j);
void validate_config(const ExperimentConfig& c);
std::uint64_t parse_seed(const std::string& s);

std::string sha1_hex(const std::string& bytes);
std::string format_double(double v);

// normalization exponent of Z_L and the margin each model needs around Q_L
double model_gamma(const ExperimentConfig& c);
double model_cutoff(const ExperimentConfig& c);
double model_mean(const ExperimentConfig& c);  // NaN when only an ensemble estimate exists

// per-replicate summary at one scale: N_R for point models, Z_L for fields
struct ScaleEnsemble {
    double scale = 0.0;
    std::vector<double> values;
    std::vector<std::vector<double>> cells;  // unit-cell counts (point models, on request)
    std::size_t unsaturated = 0;
};

ScaleEnsemble scale_ensemble(const ExperimentConfig& c, double scale, bool keep_cells = false);

struct JamRow {
    double R = 0.0;
    std::size_t n = 0;
    double mean_density = 0.0, var_density = 0.0, se_mean = 0.0, se_var = 0.0;
    double diff = std::numeric_limits<double>::quiet_NaN();  // |mean(R) - mean(previous R)|
    std::size_t unsaturated = 0;
};

struct CltRow {
    double scale = 0.0;
    std::size_t n = 0;
    double mean = 0.0, var = 0.0, d_k = 0.0, d_w = 0.0, se_mean = 0.0, se_var = 0.0;
    std::vector<double> normalized;
};

struct WsgRow {
    double L = 0.0;
    WeightSpec weight;
    SecondOrderTerms terms;
    bool has_terms = false;
    WsgReport report;
};

struct RatesRow {
    double scale = 0.0;
    std::size_t n = 0;
    double sigma2 = 0.0, sigma2_se = 0.0;
    double sigma2_cov = std::numeric_limits<double>::quiet_NaN(), sigma2_cov_se = std::numeric_limits<double>::quiet_NaN();
    double d_k = 0.0, d_w = 0.0;
};

std::vector<JamRow> jam_rows(const ExperimentConfig& c);
CltRow clt_row(const ExperimentConfig& c, const ScaleEnsemble& e);
std::vector<CltRow> clt_rows(const ExperimentConfig& c);
WeightSpec calibrated_weight(const ExperimentConfig& c, double L);
std::vector<WsgRow> wsg_rows(const ExperimentConfig& c);
std::vector<RatesRow> rates_rows(const ExperimentConfig& c);

// run a command and write its files plus manifest.json into c.out; returns the files written
std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& c);

}  // namespace jamstat
