#pragma once

#include <string>
#include <utility>
#include <vector>

#include "jamstat/rng.hpp"

namespace jamstat {

struct ReplicateEnsemble {
    std::vector<double> values;
    std::vector<StreamKey> seeds;
    std::string metadata;
};

struct Moments {
    std::size_t n = 0;
    double mean = 0.0;
    double var = 0.0;  // unbiased
    double se_mean = 0.0;
    double se_var = 0.0;  // jackknife
};

Moments ensemble_moments(const std::vector<double>& v);
Moments ensemble_moments(const ReplicateEnsemble& e);

double normal_cdf(double x);
double normal_pdf(double x);

// distances between the empirical law of the samples and N(mu, sd^2)
double kolmogorov_distance(std::vector<double> samples, double mu = 0.0, double sd = 1.0);
double wasserstein1_distance(std::vector<double> samples, double mu = 0.0, double sd = 1.0);

// against the normal with the sample mean and standard deviation
double kolmogorov_distance_fitted(const std::vector<double>& samples);
double wasserstein1_distance_fitted(const std::vector<double>& samples);

enum class FitMode { Power, Exponential };

struct RateFit {
    FitMode mode = FitMode::Power;
    double exponent = 0.0;  // slope in log value against log scale (power) or scale (exponential)
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<std::pair<double, double>> points;
};

RateFit rate_fit(const std::vector<std::pair<double, double>>& points, FitMode mode = FitMode::Power);

// sigma^2 = sum over lattice shifts |h| <= cutoff of cov(xi(Q(h)), xi(Q)), from unit-cell
// counts on periodic boxes with n cells per axis (row-major)
struct CovarianceIntegral {
    double sigma2 = 0.0;
    double std_error = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    double outer_shell = 0.0;  // contribution of cutoff - 1 < |h| <= cutoff
    bool truncation_warning = false;
    int cutoff = 0;
    std::size_t n = 0;
};

CovarianceIntegral covariance_integral(const std::vector<std::vector<double>>& cell_counts, int dim, int cells_per_axis,
                                       int cutoff);

}  // namespace jamstat
