#pragma once

// Experiment configuration: a JSON document with "subcommand", "problem",
// "numerics" and "output" sections. Every offending key is collected before
// a single ConfigError is raised. Keys are listed in docs/config.md.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlhj/errors.hpp"
#include "nlhj/grid.hpp"
#include "nlhj/local.hpp"
#include "nlhj/model.hpp"

namespace nlhj {

struct InitialCondition {
    std::string family = "zero";  // zero | constant | cosine | sine
    double amplitude = 0.0;
    double offset = 0.0;
    double frequency = 1.0;
    double phase = 0.0;

    GridFunction sample(const TorusGrid& g) const {
        return GridFunction::sample(g, [&](const Point& x) {
            const double arg = kTwoPi * frequency * (x[0] + (g.dim() == 2 ? x[1] : 0.0)) + phase;
            if (family == "cosine") return offset + amplitude * std::cos(arg);
            if (family == "sine") return offset + amplitude * std::sin(arg);
            return offset;
        });
    }
};

struct Numerics {
    int N = 128;
    SchemeParams scheme;
    double R_max = 10.0;
    TailTreatment tail = TailTreatment::periodized;
    double tol = 1e-8;
    std::size_t max_steps = 20'000'000;
    double T_final = 1.0;
    std::vector<double> lambda_schedule;
    std::vector<double> defect_times{10.0, 25.0, 50.0};
    std::vector<std::uint64_t> seeds{0, 1, 2};
    int checker_samples = 256;
    int quad_resolution = 64;
    double p_max = kDefaultGradientCap;
    double r0 = 0.1;
    std::size_t window = 50;
};

struct OutputSettings {
    std::string directory = "out";
    std::size_t sample_every = 10;
};

struct ExperimentConfig {
    std::string subcommand;
    std::string instance = "custom";
    ProblemSpec spec;
    InitialCondition initial;
    Numerics numerics;
    OutputSettings output;
};

namespace config_detail {

using json = nlohmann::json;

class Reader {
public:
    std::vector<std::string> errors;

    void fail(const std::string& key, const std::string& msg) { errors.push_back(key + ": " + msg); }

    // Reports keys of `obj` outside `allowed`.
    void allow(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
        if (!obj.is_object()) return;
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!ok.count(it.key())) fail(join(path, it.key()), "unknown key");
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }

    const json* section(const json& obj, const std::string& path, const char* key) {
        if (!obj.contains(key)) return nullptr;
        const json& s = obj.at(key);
        if (!s.is_object()) {
            fail(join(path, key), "must be an object");
            return nullptr;
        }
        return &s;
    }

    // Numeric key with an open/closed range check.
    double number(const json& obj, const std::string& path, const char* key, double def, double lo = -kInf,
                  double hi = kInf, bool lo_open = false, bool hi_open = false) {
        if (!obj.contains(key)) return def;
        const json& v = obj.at(key);
        const std::string k = join(path, key);
        if (!v.is_number()) {
            fail(k, "must be a number");
            return def;
        }
        const double x = v.get<double>();
        const bool below = lo_open ? !(x > lo) : !(x >= lo);
        const bool above = hi_open ? !(x < hi) : !(x <= hi);
        if (!std::isfinite(x) || below || above) {
            fail(k, "value " + format_real(x) + " outside " + std::string(lo_open ? "(" : "[") + range_end(lo) + "," +
                        range_end(hi) + (hi_open ? ")" : "]"));
            return def;
        }
        return x;
    }

    long integer(const json& obj, const std::string& path, const char* key, long def, long lo, long hi) {
        if (!obj.contains(key)) return def;
        const json& v = obj.at(key);
        const std::string k = join(path, key);
        if (!v.is_number_integer()) {
            fail(k, "must be an integer");
            return def;
        }
        const long x = v.get<long>();
        if (x < lo || x > hi) {
            fail(k, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
            return def;
        }
        return x;
    }

    std::string choice(const json& obj, const std::string& path, const char* key, const std::string& def,
                       std::initializer_list<const char*> options) {
        if (!obj.contains(key)) return def;
        const json& v = obj.at(key);
        const std::string k = join(path, key);
        std::string names;
        for (const char* o : options) names += std::string(names.empty() ? "" : "|") + o;
        if (!v.is_string()) {
            fail(k, "must be one of " + names);
            return def;
        }
        const std::string s = v.get<std::string>();
        for (const char* o : options)
            if (s == o) return s;
        fail(k, "unknown value '" + s + "', expected one of " + names);
        return def;
    }

    std::vector<double> numbers(const json& obj, const std::string& path, const char* key, std::vector<double> def,
                                double lo_open_bound) {
        if (!obj.contains(key)) return def;
        const json& v = obj.at(key);
        const std::string k = join(path, key);
        if (!v.is_array()) {
            fail(k, "must be an array of numbers");
            return def;
        }
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number() || !(e.get<double>() > lo_open_bound)) {
                fail(k, "entries must be numbers > " + format_real(lo_open_bound));
                return def;
            }
            out.push_back(e.get<double>());
        }
        return out;
    }

    ScalarField field(const json& obj, const std::string& path, const char* key, const ScalarField& def) {
        if (!obj.contains(key)) return def;
        const json& v = obj.at(key);
        const std::string k = join(path, key);
        if (v.is_number()) return ScalarField::constant(v.get<double>());
        if (!v.is_object()) {
            fail(k, "must be a number or a field object");
            return def;
        }
        allow(v, k, {"shape", "offset", "amplitude", "frequency"});
        const std::string shape = choice(v, k, "shape", "constant", {"constant", "cosine", "sine", "cos_squared"});
        const double off = number(v, k, "offset", 0.0);
        const double amp = number(v, k, "amplitude", 0.0);
        const double freq = number(v, k, "frequency", 1.0, 0.0, kInf, true);
        if (shape == "cosine") return ScalarField::cosine(off, amp, freq);
        if (shape == "sine") return ScalarField::sine(off, amp, freq);
        if (shape == "cos_squared") return ScalarField::cos_squared(off, amp, freq);
        return ScalarField::constant(off);
    }

private:
    static std::string range_end(double v) {
        if (v == kInf) return "inf";
        if (v == -kInf) return "-inf";
        std::ostringstream os;
        os << v;
        return os.str();
    }
};

inline Hamiltonian read_hamiltonian(Reader& r, const json& h, int dim) {
    const std::string p = "problem.hamiltonian";
    r.allow(h, p, {"family", "m", "a", "f", "K", "b_m", "L_H", "H_0"});
    r.choice(h, p, "family", "power", {"power"});
    const double m = r.number(h, p, "m", 2.0, 1.0, kInf, true);
    const ScalarField a = r.field(h, p, "a", ScalarField::constant(1.0));
    const ScalarField f = r.field(h, p, "f", ScalarField::cosine(0.0, 1.0));
    if (!(a.min() > 0.0)) r.fail(p + ".a", "must be bounded below by a positive constant");
    Hamiltonian H = Hamiltonian::power_coercive(m, a, f, dim);
    H.K = r.number(h, p, "K", H.K, 0.0);
    H.b_m = r.number(h, p, "b_m", H.b_m, 0.0);
    H.L_H = r.number(h, p, "L_H", H.L_H, 0.0);
    H.H_0 = r.number(h, p, "H_0", H.H_0, 0.0);
    return H;
}

inline DiffusionFactor read_diffusion(Reader& r, const json& d) {
    const std::string p = "problem.diffusion";
    r.allow(d, p, {"family", "scale", "a", "amplitude", "frequency"});
    const std::string fam = r.choice(d, p, "family", "none", {"none", "constant", "sqrt_field", "sine"});
    if (fam == "constant") return DiffusionFactor::constant(r.number(d, p, "scale", 0.0));
    if (fam == "sqrt_field") {
        const ScalarField a = r.field(d, p, "a", ScalarField::constant(0.0));
        if (a.min() < 0.0) r.fail(p + ".a", "must be nonnegative");
        return DiffusionFactor::sqrt_field(a);
    }
    if (fam == "sine")
        return DiffusionFactor::sine(r.number(d, p, "amplitude", 0.0),
                                     r.number(d, p, "frequency", 1.0, 0.0, kInf, true));
    return DiffusionFactor::none();
}

inline LevyData read_levy(Reader& r, const json& l, int dim) {
    const std::string p = "problem.levy";
    r.allow(l, p, {"family", "order", "mass", "radius", "atoms", "C_nu", "C_j"});
    const std::string fam = r.choice(l, p, "family", "none", {"none", "fractional", "finite", "atomic"});
    LevyData out;
    if (fam == "fractional") {
        out = LevyData::fractional(r.number(l, p, "order", 1.0, 0.0, 2.0, true, true));
    } else if (fam == "finite") {
        out = LevyData::finite(r.number(l, p, "mass", 1.0, 0.0), r.number(l, p, "radius", 0.5, 0.0, kInf, true));
    } else if (fam == "atomic") {
        std::vector<Atom> atoms;
        if (!l.contains("atoms") || !l.at("atoms").is_array()) {
            r.fail(p + ".atoms", "atomic family needs an array of {z, mass}");
        } else {
            std::size_t k = 0;
            for (const auto& a : l.at("atoms")) {
                const std::string ak = p + ".atoms[" + std::to_string(k++) + "]";
                if (!a.is_object()) {
                    r.fail(ak, "must be an object");
                    continue;
                }
                r.allow(a, ak, {"z", "mass"});
                Atom at;
                at.mass = r.number(a, ak, "mass", 1.0, 0.0);
                if (a.contains("z") && a.at("z").is_number()) {
                    at.z[0] = a.at("z").get<double>();
                } else if (a.contains("z") && a.at("z").is_array() && a.at("z").size() == static_cast<std::size_t>(dim)) {
                    for (int c = 0; c < dim; ++c) at.z[c] = a.at("z")[c].get<double>();
                } else {
                    r.fail(ak + ".z", "must be a number (d = 1) or an array of d numbers");
                }
                atoms.push_back(at);
            }
        }
        out = LevyData::atomic(std::move(atoms));
    }
    out.C_nu = r.number(l, p, "C_nu", -1.0);
    out.C_j = r.number(l, p, "C_j", -1.0);
    return out;
}

inline InitialCondition read_initial(Reader& r, const json& u) {
    const std::string p = "problem.initial";
    r.allow(u, p, {"family", "amplitude", "offset", "frequency", "phase"});
    InitialCondition d;
    d.family = r.choice(u, p, "family", "zero", {"zero", "constant", "cosine", "sine"});
    d.amplitude = r.number(u, p, "amplitude", 0.0);
    d.offset = r.number(u, p, "offset", 0.0);
    d.frequency = r.number(u, p, "frequency", 1.0, 0.0, kInf, true);
    d.phase = r.number(u, p, "phase", 0.0);
    return d;
}

}  // namespace config_detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
    using config_detail::json;
    config_detail::Reader r;
    ExperimentConfig cfg;
    if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
    r.allow(j, "", {"subcommand", "instance", "problem", "numerics", "output"});
    cfg.subcommand = r.choice(j, "", "subcommand", "", {"check", "evolve", "stationary", "ergodic", "verify-all"});
    if (!j.contains("subcommand")) r.fail("subcommand", "missing");
    if (j.contains("instance")) {
        if (j.at("instance").is_string())
            cfg.instance = j.at("instance").get<std::string>();
        else
            r.fail("instance", "must be a string");
    }

    static const json empty = json::object();
    const json* prob = r.section(j, "", "problem");
    const json& P = prob ? *prob : empty;
    r.allow(P, "problem", {"dimension", "lambda", "hamiltonian", "diffusion", "levy", "jump", "initial"});
    const int dim = static_cast<int>(r.integer(P, "problem", "dimension", 1, 1, 2));
    cfg.spec.dim = dim;
    cfg.spec.lambda = r.number(P, "problem", "lambda", 0.0, 0.0);
    const json* h = r.section(P, "problem", "hamiltonian");
    cfg.spec.hamiltonian = config_detail::read_hamiltonian(r, h ? *h : empty, dim);
    const json* d = r.section(P, "problem", "diffusion");
    cfg.spec.diffusion = config_detail::read_diffusion(r, d ? *d : empty);
    const json* l = r.section(P, "problem", "levy");
    cfg.spec.levy = config_detail::read_levy(r, l ? *l : empty, dim);
    if (const json* jp = r.section(P, "problem", "jump")) {
        r.allow(*jp, "problem.jump", {"family", "g"});
        if (r.choice(*jp, "problem.jump", "family", "translation", {"translation", "modulated"}) == "modulated") {
            const ScalarField g = r.field(*jp, "problem.jump", "g", ScalarField::constant(1.0));
            if (!(g.min() > 0.0)) r.fail("problem.jump.g", "must be bounded below by a positive constant");
            cfg.spec.levy.modulated(g);
        }
    }
    const json* u0 = r.section(P, "problem", "initial");
    cfg.initial = config_detail::read_initial(r, u0 ? *u0 : empty);

    const json* num = r.section(j, "", "numerics");
    const json& Nm = num ? *num : empty;
    const std::string np = "numerics";
    r.allow(Nm, np,
            {"N", "Q", "R_max", "tail", "cfl_safety", "theta_safety", "tol", "max_steps", "T_final",
             "lambda_schedule", "defect_times", "seeds", "checker_samples", "quad_resolution", "p_max", "r0",
             "window"});
    Numerics& n = cfg.numerics;
    n.N = static_cast<int>(r.integer(Nm, np, "N", n.N, 8, 1 << 14));
    n.scheme.nodes_per_decade = static_cast<int>(r.integer(Nm, np, "Q", n.scheme.nodes_per_decade, 1, 1024));
    n.R_max = r.number(Nm, np, "R_max", n.R_max, 1.0);
    n.tail = r.choice(Nm, np, "tail", "periodized", {"periodized", "drop"}) == "drop" ? TailTreatment::drop
                                                                                       : TailTreatment::periodized;
    n.scheme.cfl_safety = r.number(Nm, np, "cfl_safety", n.scheme.cfl_safety, 0.0, 1.0, true);
    n.scheme.theta_safety = r.number(Nm, np, "theta_safety", n.scheme.theta_safety, 1.0);
    n.tol = r.number(Nm, np, "tol", n.tol, 0.0, kInf, true);
    n.max_steps = static_cast<std::size_t>(r.integer(Nm, np, "max_steps", static_cast<long>(n.max_steps), 1, 1L << 40));
    n.T_final = r.number(Nm, np, "T_final", n.T_final, 0.0, kInf, true);
    n.lambda_schedule = r.numbers(Nm, np, "lambda_schedule", {}, 0.0);
    for (std::size_t k = 1; k < n.lambda_schedule.size(); ++k)
        if (!(n.lambda_schedule[k] < n.lambda_schedule[k - 1]))
            r.fail(np + ".lambda_schedule", "must be strictly decreasing");
    n.defect_times = r.numbers(Nm, np, "defect_times", n.defect_times, 0.0);
    for (std::size_t k = 1; k < n.defect_times.size(); ++k)
        if (!(n.defect_times[k] > n.defect_times[k - 1])) r.fail(np + ".defect_times", "must be strictly increasing");
    if (Nm.contains("seeds")) {
        const json& s = Nm.at("seeds");
        n.seeds.clear();
        if (!s.is_array() || s.empty()) r.fail(np + ".seeds", "must be a nonempty array of nonnegative integers");
        else
            for (const auto& e : s) {
                if (!e.is_number_unsigned()) {
                    r.fail(np + ".seeds", "must be a nonempty array of nonnegative integers");
                    break;
                }
                n.seeds.push_back(e.get<std::uint64_t>());
            }
    }
    n.checker_samples = static_cast<int>(r.integer(Nm, np, "checker_samples", n.checker_samples, 1, 1 << 20));
    n.quad_resolution = static_cast<int>(r.integer(Nm, np, "quad_resolution", n.quad_resolution, 2, 1 << 16));
    n.p_max = r.number(Nm, np, "p_max", n.p_max, 0.0, kInf, true);
    n.r0 = r.number(Nm, np, "r0", n.r0, 0.0, kInf, true);
    n.window = static_cast<std::size_t>(r.integer(Nm, np, "window", static_cast<long>(n.window), 2, 1 << 20));

    if (const json* out = r.section(j, "", "output")) {
        r.allow(*out, "output", {"directory", "sample_every"});
        if (out->contains("directory")) {
            if (out->at("directory").is_string())
                cfg.output.directory = out->at("directory").get<std::string>();
            else
                r.fail("output.directory", "must be a string");
        }
        cfg.output.sample_every =
            static_cast<std::size_t>(r.integer(*out, "output", "sample_every", 10, 1, 1L << 30));
    }

    cfg.spec.levy.tail_radius = n.R_max;
    cfg.spec.levy.tail = n.tail;
    if (r.errors.empty()) {
        try {
            cfg.spec.validate();
        } catch (const ConfigError& e) {
            r.fail("problem", e.what());
        }
    }
    if (!r.errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : r.errors) msg += "\n  " + e;
        throw ConfigError(msg);
    }
    return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read configuration file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace nlhj
