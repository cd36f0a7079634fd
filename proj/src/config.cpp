#include "perihom/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "perihom/errors.hpp"

namespace perihom {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + s + "'", line);
    }
}

int parse_int(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected an integer, got '" + s + "'", line);
    }
}

ReactionExpr parse_or_validate(const std::string& text, int arity, VarKind kind, const std::string& what) {
    try {
        return ReactionExpr::parse(text, arity, kind);
    } catch (const Error& e) {
        throw ValidationError(what + ": " + e.what());
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string eps_token(double eps) {
    long k = std::lround(1.0 / eps);
    return "1/" + std::to_string(k);
}

}  // namespace

double parse_epsilon_token(const std::string& token) {
    double v;
    std::size_t slash = token.find('/');
    if (slash != std::string::npos) {
        double num = std::stod(token.substr(0, slash));
        double den = std::stod(token.substr(slash + 1));
        if (den == 0.0) throw ValidationError("epsilon '" + token + "': division by zero");
        v = num / den;
    } else {
        v = std::stod(token);
    }
    if (!(v > 0.0 && v <= 1.0)) {
        throw ValidationError("epsilon '" + token + "' must lie in (0, 1]");
    }
    double inv = 1.0 / v;
    long k = std::lround(inv);
    if (k < 1 || std::abs(inv - static_cast<double>(k)) > 1e-9 * inv) {
        throw ValidationError("epsilon '" + token + "' is not the reciprocal of an integer");
    }
    return 1.0 / static_cast<double>(k);
}

ProblemSpec RunConfig::build_spec() const {
    if (species.empty()) throw ValidationError("at least one species is required");
    ProblemSpec spec;
    const int n = n_species();
    for (int s = 0; s < n; ++s) {
        const SpeciesConfig& c = species[s];
        std::string tag = "species " + std::to_string(s + 1);
        SpeciesSpec sp;
        sp.d = parse_or_validate(c.d, 2, VarKind::cell, tag + ".d");
        sp.a = parse_or_validate(c.a, 2, VarKind::cell, tag + ".a");
        sp.b = parse_or_validate(c.b, 2, VarKind::cell, tag + ".b");
        sp.R = parse_or_validate(c.R, n, VarKind::species, tag + ".R");
        sp.F = parse_or_validate(c.F, 1, VarKind::species, tag + ".F");
        sp.alpha = c.alpha;
        if (!(sp.alpha > 0.0)) {
            throw ValidationError(tag + ": ellipticity floor alpha must be positive, got " +
                                  fmt(sp.alpha));
        }
        // sampled ellipticity and sign checks on a fixed grid of the cell
        double dmin = std::numeric_limits<double>::max();
        double abmin = 0.0;
        for (int i = 0; i <= 32; ++i) {
            for (int j = 0; j <= 32; ++j) {
                double y[2] = {i / 32.0, j / 32.0};
                dmin = std::min(dmin, sp.d.eval(y));
                abmin = std::min({abmin, sp.a.eval(y), sp.b.eval(y)});
            }
        }
        if (dmin < sp.alpha) {
            throw ValidationError(tag + ": diffusion coefficient violates its ellipticity floor " +
                                  "(sampled min " + fmt(dmin) + " < alpha " + fmt(sp.alpha) + ")");
        }
        if (abmin < 0.0) {
            throw ValidationError(tag + ": deposition coefficients must be nonnegative");
        }
        spec.species.push_back(std::move(sp));
    }
    return spec;
}

PipelineConfig RunConfig::build_pipeline() const {
    PipelineConfig p;
    p.geometry = geometry();
    if (p.geometry.has_hole()) p.geometry.validate();
    p.spec = build_spec();
    p.h_ratio = h_ratio;
    p.macro_h = macro_h;
    p.picard.tol = tol;
    p.picard.max_iter = max_iter;
    p.picard.relax = relax;
    p.picard.linear_tol = linear_tol;
    p.macro_mode = macro_mode;
    p.cutoff.convention = cutoff;
    p.jobs = jobs;
    return p;
}

RunConfig load_config(std::istream& is) {
    RunConfig c;
    c.species.clear();
    std::string line;
    int line_no = 0;
    int declared_species = -1;
    std::vector<std::pair<std::string, std::pair<std::string, int>>> species_keys;
    bool eps_seen = false;

    while (std::getline(is, line)) {
        ++line_no;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'section.key = value'", line_no);
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError("empty key or value", line_no);

        if (key == "geometry.hole_shape") {
            if (value == "disk") c.hole_shape = HoleShape::disk;
            else if (value == "square") c.hole_shape = HoleShape::square;
            else if (value == "none") c.hole_shape = HoleShape::none;
            else throw ConfigError("hole_shape must be disk, square or none", line_no);
        } else if (key == "geometry.hole_radius") {
            c.hole_radius = parse_double(value, line_no);
        } else if (key == "geometry.eps_list") {
            c.eps_list.clear();
            eps_seen = true;
            std::istringstream iss(value);
            std::string tok;
            while (iss >> tok) c.eps_list.push_back(parse_epsilon_token(tok));
        } else if (key == "geometry.h_ratio") {
            c.h_ratio = parse_double(value, line_no);
        } else if (key == "geometry.macro_h") {
            c.macro_h = parse_double(value, line_no);
        } else if (key == "species.count") {
            declared_species = parse_int(value, line_no);
            if (declared_species < 1) throw ValidationError("species.count must be at least 1");
        } else if (key.rfind("species.", 0) == 0) {
            species_keys.push_back({key.substr(8), {value, line_no}});
        } else if (key == "solver.tol") {
            c.tol = parse_double(value, line_no);
        } else if (key == "solver.max_iter") {
            c.max_iter = parse_int(value, line_no);
        } else if (key == "solver.relax") {
            c.relax = parse_double(value, line_no);
        } else if (key == "solver.linear_tol") {
            c.linear_tol = parse_double(value, line_no);
        } else if (key == "solver.cutoff") {
            if (value == "standard") c.cutoff = CutoffConvention::standard;
            else if (value == "paper") c.cutoff = CutoffConvention::paper;
            else throw ConfigError("cutoff must be standard or paper", line_no);
        } else if (key == "solver.macro_mode") {
            if (value == "volume_only") c.macro_mode = MacroMode::volume_only;
            else if (value == "with_surface") c.macro_mode = MacroMode::with_surface;
            else throw ConfigError("macro_mode must be volume_only or with_surface", line_no);
        } else if (key == "solver.order") {
            c.order = parse_int(value, line_no);
            if (c.order < 0 || c.order > 2) throw ValidationError("solver.order must be 0, 1 or 2");
        } else if (key == "solver.jobs") {
            c.jobs = parse_int(value, line_no);
            if (c.jobs < 1) throw ValidationError("solver.jobs must be at least 1");
        } else if (key == "output.dir") {
            c.out_dir = value;
        } else {
            throw ConfigError("unknown key '" + key + "'", line_no);
        }
    }

    if (declared_species < 1) declared_species = 1;
    c.species.assign(declared_species, RunConfig::SpeciesConfig{});
    for (const auto& [sub, vp] : species_keys) {
        const auto& [value, ln] = vp;
        std::size_t dot = sub.find('.');
        if (dot == std::string::npos) throw ConfigError("expected species.<i>.<field>", ln);
        int idx = parse_int(sub.substr(0, dot), ln);
        if (idx < 1 || idx > declared_species) {
            throw ConfigError("species index " + std::to_string(idx) + " out of range 1.." +
                              std::to_string(declared_species), ln);
        }
        std::string field = sub.substr(dot + 1);
        RunConfig::SpeciesConfig& sc = c.species[idx - 1];
        if (field == "d") sc.d = value;
        else if (field == "a") sc.a = value;
        else if (field == "b") sc.b = value;
        else if (field == "R") sc.R = value;
        else if (field == "F") sc.F = value;
        else if (field == "alpha") sc.alpha = parse_double(value, ln);
        else throw ConfigError("unknown species field '" + field + "'", ln);
    }
    if (!eps_seen) c.eps_list = {0.25, 0.125, 0.0625, 0.03125};

    if (c.hole_shape != HoleShape::none) c.geometry().validate();
    if (c.eps_list.empty()) throw ValidationError("eps_list must not be empty");
    if (!(c.h_ratio >= 4.0)) throw ValidationError("h_ratio must be at least 4");
    c.build_spec();  // validates expressions and floors
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    return load_config(in);
}

std::string RunConfig::canonical() const {
    std::ostringstream os;
    const char* shape = hole_shape == HoleShape::disk   ? "disk"
                        : hole_shape == HoleShape::square ? "square"
                                                          : "none";
    os << "geometry.hole_shape = " << shape << "\n";
    os << "geometry.hole_radius = " << fmt(hole_radius) << "\n";
    os << "geometry.eps_list =";
    for (double e : eps_list) os << " " << eps_token(e);
    os << "\n";
    os << "geometry.h_ratio = " << fmt(h_ratio) << "\n";
    os << "geometry.macro_h = " << fmt(macro_h) << "\n";
    os << "species.count = " << species.size() << "\n";
    for (std::size_t s = 0; s < species.size(); ++s) {
        std::string p = "species." + std::to_string(s + 1) + ".";
        os << p << "d = " << species[s].d << "\n";
        os << p << "a = " << species[s].a << "\n";
        os << p << "b = " << species[s].b << "\n";
        os << p << "R = " << species[s].R << "\n";
        os << p << "F = " << species[s].F << "\n";
        os << p << "alpha = " << fmt(species[s].alpha) << "\n";
    }
    os << "solver.tol = " << fmt(tol) << "\n";
    os << "solver.max_iter = " << max_iter << "\n";
    os << "solver.relax = " << fmt(relax) << "\n";
    os << "solver.linear_tol = " << fmt(linear_tol) << "\n";
    os << "solver.cutoff = " << (cutoff == CutoffConvention::standard ? "standard" : "paper") << "\n";
    os << "solver.macro_mode = "
       << (macro_mode == MacroMode::volume_only ? "volume_only" : "with_surface") << "\n";
    os << "solver.order = " << order << "\n";
    os << "solver.jobs = " << jobs << "\n";
    os << "output.dir = " << out_dir << "\n";
    return os.str();
}

std::string RunConfig::hash() const {
    std::string text = canonical();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void save_config(const RunConfig& config, std::ostream& os) { os << config.canonical(); }

}  // namespace perihom
