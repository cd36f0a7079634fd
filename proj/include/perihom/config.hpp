#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "perihom/corrector.hpp"
#include "perihom/problem.hpp"

namespace perihom {

/// Validated run configuration, loaded from the line-oriented
/// `section.key = value` format (see docs/formats.md).
struct RunConfig {
    // geometry
    HoleShape hole_shape = HoleShape::disk;
    double hole_radius = 0.25;
    std::vector<double> eps_list = {0.25, 0.125, 0.0625, 0.03125};
    double h_ratio = 8.0;
    double macro_h = 0.0;  // 0 = finest micro h

    // species
    struct SpeciesConfig {
        std::string d = "1";
        std::string a = "0";
        std::string b = "0";
        std::string R = "0";
        std::string F = "0";
        double alpha = 1.0;
    };
    std::vector<SpeciesConfig> species{SpeciesConfig{}};

    // solver
    double tol = 1e-8;
    int max_iter = 50;
    double relax = 0.8;
    double linear_tol = 1e-10;
    CutoffConvention cutoff = CutoffConvention::standard;
    MacroMode macro_mode = MacroMode::volume_only;
    int order = 1;
    int jobs = 1;

    // output
    std::string out_dir = "out";

    int n_species() const { return static_cast<int>(species.size()); }

    /// Parses all expressions; throws ValidationError on any violation.
    ProblemSpec build_spec() const;
    PipelineConfig build_pipeline() const;
    CellGeometry geometry() const { return {hole_shape, hole_radius}; }

    /// Canonical serialization; load(save(c)) == c.
    std::string canonical() const;
    std::string hash() const;

    bool operator==(const RunConfig& other) const { return canonical() == other.canonical(); }
};

/// Throws ConfigError with the offending line number on syntax errors and
/// ValidationError on semantic ones (non-reciprocal epsilon, alpha <= 0,
/// expressions that do not parse, sampled ellipticity violations).
RunConfig load_config(std::istream& is);
RunConfig load_config_file(const std::string& path);
void save_config(const RunConfig& config, std::ostream& os);

/// Admissible epsilon: the reciprocal of a positive integer. Accepts "1/8"
/// and decimal spellings of such values.
double parse_epsilon_token(const std::string& token);

}  // namespace perihom
