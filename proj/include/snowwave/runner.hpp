#pragma once

#include <string>

#include "snowwave/config.hpp"

namespace snowwave {

/// Execute one experiment, writing every artifact plus manifest.json under
/// config.out_dir. Identical config and seeds produce byte-identical numeric
/// artifacts for any thread count. Throws the library's typed errors.
void run_experiment(const RunConfig& config);

/// Bump-data recipe shared by the solve experiments: u0/u1 bumps at the
/// centroid, separable forcing bump times a single-period sine. auto_scale
/// places the data at data.gate_fraction of the smallness gate.
ProblemData build_problem_data(const RunConfig& config, const P1Space& space,
                               const ModalBasis& basis, const SmallnessBudget* budget,
                               double r);

std::string snowwave_version();

} // namespace snowwave
