#pragma once

#include "fslsim/sim.hpp"

namespace fslsim {

// Classic federated averaging: every client trains the full composed
// network for K local steps, the aggregator averages parameters. The
// client learning rate is used for the local steps.
RunResult run_fedavg(const RunConfig& cfg);

enum class SplitFedMode { kMultiServer, kSingleServer };

// Split learning with the true server gradient sent back every local
// step. Multi-server keeps one server copy per client and averages the
// copies each round (server copies live in one place, so that transfer
// is free); single-server runs all clients through one shared server in
// a fixed client order.
RunResult run_splitfed(const RunConfig& cfg, SplitFedMode mode);

// Client-side estimator baseline: clients update through their local
// auxiliary network exactly as in run_fsl_sage and additionally train
// the auxiliary on its own head loss every local step. Auxiliary
// parameters are averaged along with client parameters every round
// (costing uplink and downlink on the aux channel); there is no
// server-driven alignment.
RunResult run_cse_fsl(const RunConfig& cfg);

}  // namespace fslsim
