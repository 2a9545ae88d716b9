#include "jamstat/experiments.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "jamstat/parallel.hpp"
#include "jamstat/stats.hpp"

namespace jamstat {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTagEnsemble = 0x454E53454D424C45;
constexpr std::uint64_t kTagCalibrate = 0x43414C4942524154;
constexpr std::uint64_t kTagWeights = 0x5745494748545300;
constexpr std::uint64_t kTagField = 0x4649454C44000000;

const std::map<Command, std::string> kCommands{{Command::Jam, "jam"},         {Command::Clt, "clt"},
                                               {Command::Weights, "weights"}, {Command::Wsg, "wsg"},
                                               {Command::Field, "field"},     {Command::Rates, "rates"}};
const std::map<ModelKind, std::string> kModels{{ModelKind::Parking, "parking"},
                                               {ModelKind::Inclusion, "inclusion"},
                                               {ModelKind::Voronoi, "voronoi"},
                                               {ModelKind::Gaussian, "gaussian"},
                                               {ModelKind::Poisson, "poisson-control"}};

template <class E>
E lookup(const std::map<E, std::string>& m, const std::string& s, const std::string& field) {
    for (auto& [k, v] : m)
        if (v == s) return k;
    std::string opts;
    for (auto& [k, v] : m) opts += (opts.empty() ? "" : ", ") + v;
    throw ConfigError("field '" + field + "': unknown value '" + s + "' (expected one of " + opts + ")");
}

json law_to_json(const RadiusLaw& l) {
    switch (l.kind) {
        case LawKind::Dirac: return {{"kind", "dirac"}, {"value", l.a}};
        case LawKind::Uniform: return {{"kind", "uniform"}, {"lo", l.a}, {"hi", l.b}};
        case LawKind::ParetoTail: return {{"kind", "pareto"}, {"kappa", l.a}, {"scale", l.b}};
    }
    return {};
}

template <class T>
T get(const json& j, const char* key, const std::string& field) {
    if (!j.contains(key)) throw ConfigError("field '" + field + "." + key + "' is missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + field + "." + key + "': " + e.what());
    }
}

RadiusLaw law_from_json(const json& j, const std::string& field) {
    if (!j.is_object()) throw ConfigError("field '" + field + "' must be an object");
    auto kind = get<std::string>(j, "kind", field);
    if (kind == "dirac") return RadiusLaw::dirac(get<double>(j, "value", field));
    if (kind == "uniform") {
        double lo = get<double>(j, "lo", field), hi = get<double>(j, "hi", field);
        if (!(hi > lo)) throw ConfigError("field '" + field + "': need hi > lo");
        return RadiusLaw::uniform(lo, hi);
    }
    if (kind == "pareto") {
        double k = get<double>(j, "kappa", field), s = get<double>(j, "scale", field);
        if (!(k > 1.0) || !(s > 0.0)) throw ConfigError("field '" + field + "': need kappa > 1 and scale > 0");
        return RadiusLaw::pareto_tail(k, s);
    }
    throw ConfigError("field '" + field + ".kind': unknown law '" + kind + "'");
}

const char* kernel_name(KernelKind k) {
    switch (k) {
        case KernelKind::DiscreteDelta: return "delta";
        case KernelKind::CompactBump: return "bump";
        case KernelKind::PowerDecay: return "power";
    }
    return "";
}

const char* nonlinearity_name(Nonlinearity h) {
    switch (h) {
        case Nonlinearity::Identity: return "identity";
        case Nonlinearity::Tanh: return "tanh";
        case Nonlinearity::Logistic: return "logistic";
    }
    return "";
}

bool point_model(ModelKind m) { return m == ModelKind::Parking || m == ModelKind::Poisson; }

// parking is summarized by its count N_R for jam, clt and rates, and as the field 1[x in X] otherwise
bool counts_points(const ExperimentConfig& c) {
    return c.model == ModelKind::Poisson ||
           (c.model == ModelKind::Parking &&
            (c.command == Command::Jam || c.command == Command::Clt || c.command == Command::Rates));
}

StreamKey replicate_key(const ExperimentConfig& c, double scale, std::size_t i) {
    return StreamKey{c.seed,
                     {kTagEnsemble, static_cast<std::uint64_t>(c.model), std::bit_cast<std::uint64_t>(scale), i}};
}

double window_side(const ExperimentConfig& c, double L) {
    double side = std::ceil(L + 2.0 * model_cutoff(c) - 1e-9);
    if (c.model == ModelKind::Gaussian) side = std::ceil(side / c.step - 1e-9) * c.step;
    return side;
}

double value_amplitude(const RadiusLaw& l) {
    switch (l.kind) {
        case LawKind::Dirac: return 0.0;
        case LawKind::Uniform: return l.b - l.a;
        case LawKind::ParetoTail: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
}

double model_beta(const ExperimentConfig& c) {
    if (c.model == ModelKind::Gaussian && c.kernel.kind == KernelKind::PowerDecay) return c.kernel.param;
    return c.beta;
}

void write_file(const std::filesystem::path& p, const std::string& s) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << s;
    if (!os) throw std::runtime_error("write failed for " + p.string());
}

std::string csv_row(std::initializer_list<double> v) {
    std::string s;
    bool first = true;
    for (double x : v) {
        if (!first) s += ',';
        first = false;
        s += format_double(x);
    }
    return s + "\n";
}

std::string fits_csv(const std::vector<double>& scales, const std::vector<std::pair<std::string, std::vector<double>>>& stats) {
    std::string s = "statistic,exponent,intercept,r_squared,points\n";
    for (const auto& [name, v] : stats) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < scales.size(); ++i)
            if (v[i] > 0.0 && std::isfinite(v[i])) pts.push_back({scales[i], v[i]});
        if (pts.size() < 4) {
            std::cerr << "note: " << name << " rate fit skipped (needs four positive scales)\n";
            continue;
        }
        RateFit f = rate_fit(pts);
        s += name + "," + format_double(f.exponent) + "," + format_double(f.intercept) + "," +
             format_double(f.r_squared) + "," + std::to_string(pts.size()) + "\n";
    }
    return s;
}

}  // namespace

std::string command_name(Command c) { return kCommands.at(c); }
std::string model_name(ModelKind m) { return kModels.at(m); }

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string sha1_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha1(), nullptr) != 1)
        throw std::runtime_error("SHA-1 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

std::uint64_t parse_seed(const std::string& s) {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        bool hex = s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X');
        if (s.empty() || s[0] == '-' || s[0] == '+') throw std::invalid_argument(s);
        v = std::stoull(hex ? s.substr(2) : s, &pos, hex ? 16 : 10);
        if (pos != (hex ? s.size() - 2 : s.size())) throw std::invalid_argument(s);
    } catch (const std::exception&) {
        throw ConfigError("field 'seed': '" + s + "' is not a 64-bit unsigned integer (decimal or 0x-hex)");
    }
    return v;
}

json config_to_json(const ExperimentConfig& c, bool with_runtime) {
    json j;
    j["command"] = command_name(c.command);
    j["model"] = model_name(c.model);
    j["dim"] = c.dim;
    j["seed"] = c.seed;
    if (with_runtime) {
        j["threads"] = c.threads;
        j["out"] = c.out;
    }
    j["replicates"] = c.replicates;
    j["scales"] = c.scales;
    j["intensity"] = c.intensity;
    j["solid"] = {{"kind", c.solid.kind == SolidKind::Ball ? "ball" : "cube"}, {"size", c.solid.size}};
    j["radius_law"] = law_to_json(c.radius_law);
    j["value_law"] = law_to_json(c.value_law);
    j["a0"] = c.a0;
    j["a1"] = c.a1;
    j["kernel"] = {{"kind", kernel_name(c.kernel.kind)}, {"param", c.kernel.param}, {"max_radius", c.kernel_max_radius}};
    j["nonlinearity"] = nonlinearity_name(c.nonlinearity);
    j["step"] = c.step;
    j["beta"] = c.beta;
    j["max_ell"] = c.max_ell;
    j["classes"] = c.classes;
    j["radius_mode"] = c.radius_mode == RadiusMode::Class ? "class" : "measured";
    j["doubled_intensity"] = c.doubled_intensity;
    j["cutoff"] = c.cutoff;
    j["calibration_replicates"] = c.calibration_replicates;
    j["save_samples"] = c.save_samples;
    return j;
}

ExperimentConfig config_from_json(const json& in) {
    if (!in.is_object()) throw ConfigError("configuration must be a JSON object");
    const json& j = in.contains("config") && in.contains("outputs") ? in.at("config") : in;
    if (!j.is_object()) throw ConfigError("field 'config' must be an object");
    static const std::set<std::string> known{
        "command", "model",  "dim",   "seed",         "threads", "out",      "replicates",   "scales",
        "intensity", "solid", "radius_law", "value_law", "a0",   "a1",       "kernel",       "nonlinearity",
        "step",    "beta",   "max_ell", "classes",    "radius_mode", "doubled_intensity", "cutoff",
        "calibration_replicates", "save_samples"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw ConfigError("field '" + it.key() + "' is not a known setting");

    ExperimentConfig c;
    auto num = [&](const char* k, auto& dst) {
        if (!j.contains(k)) return;
        try {
            dst = j.at(k).get<std::decay_t<decltype(dst)>>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("field '") + k + "': " + e.what());
        }
    };
    if (j.contains("command")) c.command = lookup(kCommands, get<std::string>(j, "command", "config"), "command");
    if (j.contains("model")) c.model = lookup(kModels, get<std::string>(j, "model", "config"), "model");
    num("dim", c.dim);
    if (j.contains("seed")) {
        const json& s = j.at("seed");
        if (s.is_string())
            c.seed = parse_seed(s.get<std::string>());
        else if (s.is_number_unsigned())
            c.seed = s.get<std::uint64_t>();
        else
            throw ConfigError("field 'seed': must be a non-negative integer or a string");
    }
    num("threads", c.threads);
    num("out", c.out);
    num("replicates", c.replicates);
    num("scales", c.scales);
    num("intensity", c.intensity);
    if (j.contains("solid")) {
        const json& s = j.at("solid");
        auto kind = get<std::string>(s, "kind", "solid");
        double size = get<double>(s, "size", "solid");
        if (kind == "ball")
            c.solid = Solid::ball(size);
        else if (kind == "cube")
            c.solid = Solid::cube(size);
        else
            throw ConfigError("field 'solid.kind': unknown solid '" + kind + "'");
    }
    if (j.contains("radius_law")) c.radius_law = law_from_json(j.at("radius_law"), "radius_law");
    if (j.contains("value_law")) c.value_law = law_from_json(j.at("value_law"), "value_law");
    num("a0", c.a0);
    num("a1", c.a1);
    if (j.contains("kernel")) {
        const json& k = j.at("kernel");
        auto kind = get<std::string>(k, "kind", "kernel");
        if (kind == "delta")
            c.kernel.kind = KernelKind::DiscreteDelta;
        else if (kind == "bump")
            c.kernel.kind = KernelKind::CompactBump;
        else if (kind == "power")
            c.kernel.kind = KernelKind::PowerDecay;
        else
            throw ConfigError("field 'kernel.kind': unknown kernel '" + kind + "'");
        if (k.contains("param")) c.kernel.param = get<double>(k, "param", "kernel");
        if (k.contains("max_radius")) c.kernel_max_radius = get<double>(k, "max_radius", "kernel");
        for (auto it = k.begin(); it != k.end(); ++it)
            if (it.key() != "kind" && it.key() != "param" && it.key() != "max_radius")
                throw ConfigError("field 'kernel." + it.key() + "' is not a known setting");
    }
    if (j.contains("nonlinearity")) {
        auto h = get<std::string>(j, "nonlinearity", "config");
        if (h == "identity")
            c.nonlinearity = Nonlinearity::Identity;
        else if (h == "tanh")
            c.nonlinearity = Nonlinearity::Tanh;
        else if (h == "logistic")
            c.nonlinearity = Nonlinearity::Logistic;
        else
            throw ConfigError("field 'nonlinearity': unknown value '" + h + "'");
    }
    num("step", c.step);
    num("beta", c.beta);
    num("max_ell", c.max_ell);
    num("classes", c.classes);
    if (j.contains("radius_mode")) {
        auto m = get<std::string>(j, "radius_mode", "config");
        if (m == "measured")
            c.radius_mode = RadiusMode::Measured;
        else if (m == "class")
            c.radius_mode = RadiusMode::Class;
        else
            throw ConfigError("field 'radius_mode': unknown value '" + m + "'");
    }
    num("doubled_intensity", c.doubled_intensity);
    num("cutoff", c.cutoff);
    num("calibration_replicates", c.calibration_replicates);
    num("save_samples", c.save_samples);
    return c;
}

void validate_config(const ExperimentConfig& c) {
    auto fail = [](const std::string& f, const std::string& why) { throw ConfigError("field '" + f + "': " + why); };
    if (c.dim < 1 || c.dim > 3) fail("dim", "must be 1, 2 or 3");
    if (c.threads < 1) fail("threads", "must be at least 1");
    if (c.replicates < 1) fail("replicates", "must be at least 1");
    if (c.scales.empty()) fail("scales", "must not be empty");
    for (double s : c.scales)
        if (!(s > 0.0) || !std::isfinite(s)) fail("scales", "entries must be positive");
    if (!(c.intensity > 0.0) || !std::isfinite(c.intensity)) fail("intensity", "must be positive");
    if (!(c.solid.size > 0.0)) fail("solid.size", "must be positive");
    if (!(c.step > 0.0)) fail("step", "must be positive");
    if (!(c.beta > 0.0)) fail("beta", "must be positive");
    if (c.max_ell < 1) fail("max_ell", "must be at least 1");
    if (c.cutoff < 0) fail("cutoff", "must be non-negative");
    if (c.out.empty()) fail("out", "must not be empty");

    const auto m = c.model;
    switch (c.command) {
        case Command::Jam:
            if (m != ModelKind::Parking) fail("model", "jam runs the parking model only");
            if (c.replicates < 2) fail("replicates", "jam needs at least two replicates");
            break;
        case Command::Clt: break;
        case Command::Weights:
            if (m != ModelKind::Inclusion && m != ModelKind::Voronoi && m != ModelKind::Parking)
                fail("model", "weights supports inclusion, voronoi and parking");
            if (c.replicates < 100) fail("replicates", "weight estimates need at least 100 replicates");
            if (c.radius_mode == RadiusMode::Class && m != ModelKind::Inclusion)
                fail("radius_mode", "class radii exist for the inclusion model only");
            for (int t : c.classes)
                if (t < 0) fail("classes", "radius classes are non-negative");
            break;
        case Command::Wsg:
            if (m == ModelKind::Poisson) fail("model", "wsg needs a field model");
            if (c.dim > 2) fail("dim", "wsg supports d = 1 and d = 2");
            if (c.replicates < 2) fail("replicates", "wsg needs at least two replicates");
            if (m == ModelKind::Voronoi && !std::isfinite(value_amplitude(c.value_law)))
                fail("value_law", "wsg needs bounded Voronoi values");
            if ((m == ModelKind::Parking || m == ModelKind::Voronoi) && c.calibration_replicates < 100)
                fail("calibration_replicates", "must be at least 100");
            break;
        case Command::Field:
            if (m == ModelKind::Poisson) fail("model", "field needs a field model");
            break;
        case Command::Rates:
            if (c.replicates < 3) fail("replicates", "rates needs at least three replicates");
            break;
    }
    const bool as_field = !counts_points(c);
    if ((m == ModelKind::Inclusion || m == ModelKind::Parking) && c.a0 == c.a1) fail("a1", "must differ from a0");
    if (m == ModelKind::Parking && as_field && c.solid.kind != SolidKind::Ball)
        fail("solid.kind", "parking fields need ball solids");
    if (m == ModelKind::Gaussian) {
        if (c.kernel.kind == KernelKind::PowerDecay && (!(c.kernel.param > 0.0) || c.kernel.param == c.dim))
            fail("kernel.param", "power decay needs beta > 0 and beta != d");
        if (c.kernel.kind == KernelKind::CompactBump && !(c.kernel.param > 0.0))
            fail("kernel.param", "bump support radius must be positive");
        if (!(c.kernel_max_radius > 0.0)) fail("kernel.max_radius", "must be positive");
        KernelTable ext;
        try {
            ext = kernel_extent(c.kernel, c.dim, c.step, c.kernel_max_radius);
        } catch (const std::invalid_argument& e) {
            fail("step", e.what());
        }
        if (std::pow(2.0 * ext.half + 1.0, c.dim) > double(1u << 26))
            fail("kernel.max_radius", "kernel stencil exceeds 2^26 weights; lower max_radius or coarsen step");
        double side = 0.0;
        for (double s : c.scales) side = std::max(side, c.command == Command::Field ? s : window_side(c, s));
        if (std::pow(side / c.step, c.dim) > double(1u << 26)) fail("step", "Gaussian grid exceeds 2^26 points");
        if (c.command == Command::Field) {
            if (side < (2.0 * ext.half + 1.0) * c.step)
                fail("scales", "field box must be at least the kernel stencil width " +
                                   format_double((2.0 * ext.half + 1.0) * c.step));
            double n = side / c.step;
            if (std::abs(n - std::round(n)) > 1e-6) fail("step", "field box side must be a multiple of step");
        }
    }
    if (c.command == Command::Rates && point_model(m))
        for (double s : c.scales)
            if (2 * c.cutoff > static_cast<int>(std::floor(s + 1e-9)))
                fail("cutoff", "covariance cutoff must be at most half of every scale");
}

double model_gamma(const ExperimentConfig& c) {
    if (c.model == ModelKind::Gaussian && c.kernel.kind == KernelKind::PowerDecay)
        return 0.5 * std::min<double>(c.dim, c.kernel.param);
    return 0.5 * c.dim;
}

double model_cutoff(const ExperimentConfig& c) {
    switch (c.model) {
        case ModelKind::Parking: return 4.0 * c.solid.diameter(c.dim);
        case ModelKind::Inclusion: return inclusion_cutoff(c.radius_law);
        case ModelKind::Voronoi: return voronoi_cutoff(c.intensity, c.dim);
        case ModelKind::Gaussian: return kernel_extent(c.kernel, c.dim, c.step, c.kernel_max_radius).truncation;
        case ModelKind::Poisson: return 0.0;
    }
    return 0.0;
}

double model_mean(const ExperimentConfig& c) {
    switch (c.model) {
        case ModelKind::Inclusion: return inclusion_mean(c.intensity, c.radius_law, c.dim, c.a0, c.a1);
        case ModelKind::Voronoi: return c.value_law.mean();
        case ModelKind::Gaussian: return nonlinearity_mean(c.nonlinearity);
        default: return std::numeric_limits<double>::quiet_NaN();
    }
}

ScaleEnsemble scale_ensemble(const ExperimentConfig& c, double scale, bool keep_cells) {
    ScaleEnsemble e;
    e.scale = scale;
    const std::size_t n = c.replicates;
    e.values.assign(n, 0.0);
    const int d = c.dim;
    if (counts_points(c)) {
        TorusBox box(d, scale);
        CellGrid grid = CellGrid::unit(box);
        if (keep_cells) e.cells.assign(n, std::vector<double>(grid.count(), 0.0));
        std::vector<char> unsat(n, 0);
        parallel_for(n, c.threads, [&](std::size_t i) {
            std::vector<Point> pts;
            if (c.model == ModelKind::Parking) {
                auto cfg = pack_to_saturation(replicate_key(c, scale, i), box, c.solid, c.intensity);
                unsat[i] = !cfg.saturated;
                pts = std::move(cfg.accepted);
            } else {
                auto s = sample_ppp(replicate_key(c, scale, i), box, c.intensity, 1.0);
                for (auto& p : s.points) pts.push_back(p.loc);
            }
            e.values[i] = static_cast<double>(pts.size());
            if (keep_cells)
                for (auto& p : pts) e.cells[i][grid.cell_of(p)] += 1.0;
        });
        for (char u : unsat) e.unsaturated += u;
        return e;
    }
    const double L = scale, gamma = model_gamma(c);
    double mean = model_mean(c);
    if (std::isnan(mean)) mean = 0.0;
    TorusBox box(d, window_side(c, L));
    std::unique_ptr<GaussianGenerator> gen;
    if (c.model == ModelKind::Gaussian) gen = std::make_unique<GaussianGenerator>(box, c.kernel, c.nonlinearity, c.step, c.kernel_max_radius);
    std::vector<char> unsat(n, 0);
    parallel_for(n, c.threads, [&](std::size_t i) {
        StreamKey key = replicate_key(c, scale, i);
        std::unique_ptr<FieldSample> f;
        switch (c.model) {
            case ModelKind::Inclusion: f = inclusion_field(key, box, c.intensity, c.radius_law, c.a0, c.a1); break;
            case ModelKind::Voronoi: f = voronoi_field(key, box, c.intensity, c.value_law); break;
            case ModelKind::Gaussian: f = gen->sample(key); break;
            case ModelKind::Parking: {
                DrivingProcess proc(key, box, c.intensity);
                auto cfg = pack_process(proc, c.solid);
                unsat[i] = !cfg.saturated;
                f = realize_parking(proc, c.solid, c.a0, c.a1);
                break;
            }
            default: break;
        }
        e.values[i] = spatial_average(*f, L, gamma, mean);
    });
    for (char u : unsat) e.unsaturated += u;
    return e;
}

std::vector<JamRow> jam_rows(const ExperimentConfig& c) {
    std::vector<JamRow> rows;
    for (double R : c.scales) {
        ScaleEnsemble e = scale_ensemble(c, R);
        const double vol = std::pow(R, c.dim);
        std::vector<double> dens(e.values.size());
        for (std::size_t i = 0; i < dens.size(); ++i) dens[i] = e.values[i] / vol;
        Moments m = ensemble_moments(dens);
        JamRow r;
        r.R = R;
        r.n = m.n;
        r.mean_density = m.mean;
        r.var_density = m.var;
        r.se_mean = m.se_mean;
        r.se_var = m.se_var;
        r.unsaturated = e.unsaturated;
        if (!rows.empty()) r.diff = std::abs(m.mean - rows.back().mean_density);
        if (e.unsaturated) std::cerr << "warning: " << e.unsaturated << " packings at R=" << R << " not certified saturated\n";
        std::cerr << "[jam] R=" << R << " mean density " << m.mean << "\n";
        rows.push_back(r);
    }
    return rows;
}

CltRow clt_row(const ExperimentConfig& c, const ScaleEnsemble& e) {
    CltRow r;
    r.scale = e.scale;
    r.n = e.values.size();
    std::vector<double> v = e.values;
    const bool pm = counts_points(c);
    const double vol = std::pow(e.scale, c.dim);
    if (pm)
        for (auto& x : v) x /= vol;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    r.mean = mean;
    // point models: R^{d/2} (density - mean); fields: Z_L, recentered when E[A] is unknown
    const bool center = pm || std::isnan(model_mean(c));
    r.normalized = v;
    for (auto& x : r.normalized) {
        if (center) x -= mean;
        if (pm) x *= std::sqrt(vol);
    }
    if (r.n >= 2) {
        Moments m = ensemble_moments(r.normalized);
        r.var = m.var;
        r.se_var = m.se_var;
        r.se_mean = pm ? std::sqrt(m.var / vol / r.n) : m.se_mean;
    } else {
        r.var = 0.0;
        r.se_mean = r.se_var = std::numeric_limits<double>::quiet_NaN();
    }
    r.d_k = kolmogorov_distance_fitted(r.normalized);
    r.d_w = wasserstein1_distance_fitted(r.normalized);
    return r;
}

std::vector<CltRow> clt_rows(const ExperimentConfig& c) {
    std::vector<CltRow> rows;
    for (double s : c.scales) {
        rows.push_back(clt_row(c, scale_ensemble(c, s)));
        std::cerr << "[clt] scale=" << s << " d_K=" << rows.back().d_k << "\n";
    }
    return rows;
}

WeightSpec calibrated_weight(const ExperimentConfig& c, double L) {
    const int d = c.dim;
    switch (c.model) {
        case ModelKind::Inclusion: return calibrate_inclusion_weight(c.radius_law, c.intensity, d, c.beta);
        case ModelKind::Gaussian:
            return calibrate_gaussian_weight(make_kernel_table(c.kernel, d, c.step, c.kernel_max_radius),
                                             nonlinearity_lipschitz(c.nonlinearity), model_beta(c));
        case ModelKind::Parking:
        case ModelKind::Voronoi: {
            CouplingSpec s;
            s.model = c.model == ModelKind::Parking ? CoupledModel::Parking : CoupledModel::Voronoi;
            s.box = TorusBox(d, window_side(c, L));
            s.intensity = c.intensity;
            s.solid = c.solid;
            s.law = c.value_law;
            s.a0 = c.a0;
            s.a1 = c.a1;
            WeightOptions o;
            o.n = c.calibration_replicates;
            o.max_ell = static_cast<int>(std::ceil(s.box.side));
            o.threads = c.threads;
            auto table = weight_estimate(
                s, StreamKey{c.seed, {kTagCalibrate, static_cast<std::uint64_t>(c.model), std::bit_cast<std::uint64_t>(L)}},
                o);
            return calibrate_empirical_weight(
                table, c.model == ModelKind::Parking ? WeightKind::Exponential : WeightKind::StretchedExp, d);
        }
        default: throw ConfigError("field 'model': no certified weight for this model");
    }
}

std::vector<WsgRow> wsg_rows(const ExperimentConfig& c) {
    std::vector<WsgRow> rows;
    double amp = 1.0;
    if (c.model == ModelKind::Inclusion || c.model == ModelKind::Parking) amp = std::abs(c.a1 - c.a0);
    if (c.model == ModelKind::Voronoi) amp = value_amplitude(c.value_law);
    for (double L : c.scales) {
        WsgRow r;
        r.L = L;
        r.weight = calibrated_weight(c, L);
        LinearFunctionalSpec f{c.dim, L, model_gamma(c), amp};
        ScaleEnsemble e = scale_ensemble(c, L);
        r.report = wsg_verify(e.values, wsg_rhs(f, r.weight));
        if (c.dim == 1) {
            r.terms = second_order_terms(f, r.weight);
            r.has_terms = true;
        }
        std::cerr << "[wsg] L=" << L << " lhs " << r.report.lhs << " rhs " << r.report.rhs << "\n";
        rows.push_back(r);
    }
    return rows;
}

std::vector<RatesRow> rates_rows(const ExperimentConfig& c) {
    std::vector<RatesRow> rows;
    const bool pm = counts_points(c);
    for (double s : c.scales) {
        ScaleEnsemble e = scale_ensemble(c, s, pm);
        CltRow cr = clt_row(c, e);
        RatesRow r;
        r.scale = s;
        r.n = cr.n;
        r.sigma2 = cr.var;
        r.sigma2_se = cr.se_var;
        r.d_k = cr.d_k;
        r.d_w = cr.d_w;
        if (pm) {
            int cells = CellGrid::unit(TorusBox(c.dim, s)).n;
            auto ci = covariance_integral(e.cells, c.dim, cells, c.cutoff);
            r.sigma2_cov = ci.sigma2;
            r.sigma2_cov_se = ci.std_error;
            if (ci.truncation_warning) std::cerr << "warning: outer shell above 10% of sigma^2 at scale " << s << "\n";
        }
        std::cerr << "[rates] scale=" << s << " sigma2 " << r.sigma2 << "\n";
        rows.push_back(r);
    }
    return rows;
}

std::vector<std::filesystem::path> run_experiment(const ExperimentConfig& c) {
    validate_config(c);
    namespace fs = std::filesystem;
    const fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());

    std::vector<std::pair<std::string, std::string>> files;  // name, contents
    switch (c.command) {
        case Command::Jam: {
            std::string s = "R,n,mean_density,var_density,se_mean,se_var,diff\n";
            for (const auto& r : jam_rows(c))
                s += format_double(r.R) + "," + std::to_string(r.n) + "," + format_double(r.mean_density) + "," +
                     format_double(r.var_density) + "," + format_double(r.se_mean) + "," + format_double(r.se_var) +
                     "," + format_double(r.diff) + "\n";
            files.push_back({"jam_table.csv", s});
            break;
        }
        case Command::Clt: {
            auto rows = clt_rows(c);
            std::string s = "scale,n,mean,var,d_K,d_W,se_mean,se_var\n";
            std::vector<double> dk, dw;
            for (const auto& r : rows) {
                s += format_double(r.scale) + "," + std::to_string(r.n) + "," +
                     csv_row({r.mean, r.var, r.d_k, r.d_w, r.se_mean, r.se_var});
                dk.push_back(r.d_k);
                dw.push_back(r.d_w);
                if (c.save_samples) {
                    std::string t = "replicate,value\n";
                    for (std::size_t i = 0; i < r.normalized.size(); ++i)
                        t += std::to_string(i) + "," + format_double(r.normalized[i]) + "\n";
                    files.push_back({"samples_R" + format_double(r.scale) + ".csv", t});
                }
            }
            files.insert(files.begin(), {"clt_table.csv", s});
            files.push_back({"clt_fit.csv", fits_csv(c.scales, {{"d_K", dk}, {"d_W", dw}})});
            break;
        }
        case Command::Weights: {
            CouplingSpec s;
            s.model = c.model == ModelKind::Inclusion ? CoupledModel::Inclusion
                      : c.model == ModelKind::Voronoi ? CoupledModel::Voronoi
                                                      : CoupledModel::Parking;
            s.box = TorusBox(c.dim, c.scales.front());
            s.intensity = c.intensity;
            s.law = c.model == ModelKind::Voronoi ? c.value_law : c.radius_law;
            s.solid = c.solid;
            s.a0 = c.a0;
            s.a1 = c.a1;
            s.mark_classes = c.radius_mode == RadiusMode::Class;
            std::vector<int> ts{-1};
            if (s.mark_classes) ts = c.classes;
            std::vector<WeightTable> tables;
            for (int t : ts) {
                WeightOptions o;
                o.t = t;
                o.n = c.replicates;
                o.max_ell = c.max_ell;
                o.mode = c.radius_mode;
                o.doubled_intensity = c.doubled_intensity;
                o.threads = c.threads;
                tables.push_back(weight_estimate(s, StreamKey{c.seed, {kTagWeights, static_cast<std::uint64_t>(t + 1)}}, o));
                if (tables.back().sentinels)
                    std::cerr << "warning: " << tables.back().sentinels << " samples never stabilized\n";
            }
            std::ostringstream os;
            write_weight_csv(os, tables);
            files.push_back({"weights.csv", os.str()});
            if (c.model == ModelKind::Inclusion && s.mark_classes) {
                std::string b = "t,ell,bound\n";
                for (int t : ts)
                    for (int l = 1; l <= c.max_ell; ++l)
                        b += std::to_string(t) + "," + std::to_string(l) + "," +
                             format_double(inclusion_class_weight(c.radius_law, c.intensity, t, l)) + "\n";
                files.push_back({"weights_bound.csv", b});
            }
            break;
        }
        case Command::Wsg: {
            std::vector<TermRow> rows;
            for (const auto& r : wsg_rows(c)) {
                TermRow t;
                t.L = r.L;
                t.terms = r.terms;
                if (!r.has_terms) t.terms.I1 = t.terms.I2 = t.terms.I3 = t.terms.I4 = std::numeric_limits<double>::quiet_NaN();
                t.rhs = r.report.rhs;
                t.wsg = r.report;
                rows.push_back(t);
            }
            std::ostringstream os;
            write_term_csv(os, rows);
            files.push_back({"wsg_table.csv", os.str()});
            break;
        }
        case Command::Field: {
            const double L = c.scales.front();
            TorusBox box(c.dim, L);
            StreamKey key{c.seed, {kTagField, static_cast<std::uint64_t>(c.model)}};
            std::unique_ptr<FieldSample> f;
            switch (c.model) {
                case ModelKind::Inclusion: f = inclusion_field(key, box, c.intensity, c.radius_law, c.a0, c.a1); break;
                case ModelKind::Voronoi: f = voronoi_field(key, box, c.intensity, c.value_law); break;
                case ModelKind::Gaussian:
                    f = GaussianGenerator(box, c.kernel, c.nonlinearity, c.step, c.kernel_max_radius).sample(key);
                    break;
                default: f = realize_parking(DrivingProcess(key, box, c.intensity), c.solid, c.a0, c.a1); break;
            }
            Raster r = f->raster(c.step);
            std::ostringstream csv, bin;
            write_raster_csv(csv, r);
            write_raster_binary(bin, r);
            files.push_back({"field.csv", csv.str()});
            files.push_back({"field.jsfd", bin.str()});
            break;
        }
        case Command::Rates: {
            auto rows = rates_rows(c);
            std::string s = "scale,n,sigma2,sigma2_se,sigma2_cov,sigma2_cov_se,d_K,d_W\n";
            std::vector<double> dk, dw;
            for (const auto& r : rows) {
                s += format_double(r.scale) + "," + std::to_string(r.n) + "," +
                     csv_row({r.sigma2, r.sigma2_se, r.sigma2_cov, r.sigma2_cov_se, r.d_k, r.d_w});
                dk.push_back(r.d_k);
                dw.push_back(r.d_w);
            }
            files.push_back({"rates_table.csv", s});
            files.push_back({"rates_fit.csv", fits_csv(c.scales, {{"d_K", dk}, {"d_W", dw}})});
            break;
        }
    }

    json manifest;
    manifest["version"] = kVersion;
    manifest["command"] = command_name(c.command);
    manifest["seed"] = c.seed;
    manifest["config"] = config_to_json(c, false);
    manifest["config_sha1"] = sha1_hex(manifest["config"].dump());
    json outs = json::object();
    std::vector<fs::path> written;
    for (const auto& [name, body] : files) {
        write_file(dir / name, body);
        outs[name] = sha1_hex(body);
        written.push_back(dir / name);
    }
    manifest["outputs"] = outs;
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    written.push_back(dir / "manifest.json");
    return written;
}

}  // namespace jamstat
