#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "perihom/fem.hpp"
#include "perihom/micro.hpp"

namespace perihom::detail {

/// Full-length rhs for one species given the lagged iterate (Dirichlet rows
/// are zeroed by the engine).
using RhsBuilder = std::function<std::vector<double>(int species, const Field& current)>;

/// Shared fixed-point loop of the micro and macro solvers.
std::pair<Field, PicardReport> run_picard(const Mesh& mesh, int n_species,
                                          const std::vector<SparseMatrix>& A,
                                          const std::vector<int>& dirichlet,
                                          const RhsBuilder& rhs_of, const PicardOptions& opts);

}  // namespace perihom::detail
