#pragma once

// CLI subcommand implementations, callable directly from tests. Each takes
// an already-loaded config (with any flag overrides applied), writes its
// artifacts, logs progress to `log`, and returns 0 on success. Contract
// violations throw (std::invalid_argument / std::runtime_error for
// usage/config problems, NumericalError for numerical failures); the CLI
// maps those to exit codes 1 and 2.

#include <iosfwd>

#include "trajpred/config.hpp"

namespace trajpred {

int cmd_gen(const ExperimentConfig& cfg, std::ostream& log);
int cmd_anchors(const ExperimentConfig& cfg, std::ostream& log);
int cmd_train(const ExperimentConfig& cfg, std::ostream& log);
int cmd_eval(const ExperimentConfig& cfg, std::ostream& log);
int cmd_occupancy(const ExperimentConfig& cfg, std::ostream& log);
int cmd_plot(const ExperimentConfig& cfg, std::ostream& log);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace trajpred
