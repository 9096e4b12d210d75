#pragma once

#include <deque>
#include <span>
#include <vector>

#include "fslsim/data.hpp"
#include "fslsim/mlp.hpp"

namespace fslsim {

struct RunConfig;
struct RunResult;

// One uplinked activation batch: cut-layer outputs plus their labels.
struct SmashedRecord {
  Matrix z_f;
  LabelVector labels;
  int client_id = 0;
  long round = 0;
  int local_step = 0;
};

// Per-client FIFO of uplinked records kept for auxiliary alignment.
// Holds only what actually crossed the wire; alignment targets are
// recomputed from the live server when needed. capacity 0 = unbounded.
class AlignmentStore {
 public:
  explicit AlignmentStore(std::size_t capacity = 0) : capacity_(capacity) {}

  void append(SmashedRecord rec);
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  // index 0 is the oldest surviving record
  const SmashedRecord& at(std::size_t i) const { return records_.at(i); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::deque<SmashedRecord> records_;
  std::size_t capacity_;
};

// Static per-client context (shared specs and data).
struct ClientEnv {
  const MlpSpec* client_spec = nullptr;
  const MlpSpec* aux_spec = nullptr;
  const Dataset* data = nullptr;
  std::size_t batch_size = 0;
};

struct ClientState {
  int client_id = 0;
  ParamVector client_params;
  ParamVector aux_params;
  BatchStream stream;
};

struct ServerState {
  ParamVector server_params;
  std::vector<AlignmentStore> stores;  // one per client
};

// One client-side local step: sample a batch, push it through the client
// net, pull the auxiliary network's input gradient back through the
// client and take an sgd step. Returns the smashed batch and the full
// auxiliary evaluation (whose grad_params the estimator-training
// baseline reuses).
struct LocalStepResult {
  Matrix z_f;
  LabelVector labels;
  LossGrad aux_eval;
};
LocalStepResult client_local_step(const ClientEnv& env, ClientState& state,
                                  double client_lr);

// K local steps; every (K/Q)-th smashed batch is emitted for uplink.
// The auxiliary parameters are read, never written.
std::vector<SmashedRecord> client_local_round(const ClientEnv& env,
                                              ClientState& state, long K,
                                              long Q, double client_lr,
                                              long round);

// One server-side sgd step on an uplinked record.
void server_step(const MlpSpec& server_spec, ParamVector& server_params,
                 const SmashedRecord& rec, double server_lr);

// server_step plus retention of the record in the per-client store.
void sserver_process(const MlpSpec& server_spec, ServerState& server,
                     const SmashedRecord& rec, double server_lr);

// Mean squared deviation between the auxiliary net's input gradients and
// the server's, over explicit (z_f, labels, target) samples, together
// with its exact gradient in auxiliary parameter space. The parameter
// gradient needs second derivatives; they come from running the
// backward kernel over dual numbers.
struct AlignmentSample {
  const Matrix* z_f = nullptr;
  const LabelVector* labels = nullptr;
  Matrix target;  // server grad_inputs for this record
};
struct AlignmentLossGrad {
  double loss = 0.0;
  ParamVector grad;
};
AlignmentLossGrad alignment_loss_and_grad(
    const MlpSpec& aux_spec, const ParamVector& aux_params,
    std::span<const AlignmentSample> samples);

// Full-batch gradient descent of the alignment loss over the store's
// records, targets recomputed from the server parameters passed in.
// Returns the updated auxiliary parameters and the loss after the last
// step.
struct AlignmentResult {
  ParamVector aux_params;
  double final_loss = 0.0;
};
AlignmentResult align_auxiliary(const MlpSpec& aux_spec,
                                const ParamVector& aux_params,
                                const AlignmentStore& store,
                                const MlpSpec& server_spec,
                                const ParamVector& server_params,
                                long steps, double align_lr);

// Elementwise mean over clients, summed in ascending client order.
ParamVector fserver_aggregate(std::span<const ParamVector> client_params);

RunResult run_fsl_sage(const RunConfig& cfg);

}  // namespace fslsim
