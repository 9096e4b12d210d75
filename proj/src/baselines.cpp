#include "fslsim/baselines.hpp"

#include <utility>

#include "fslsim/protocol.hpp"
#include "fslsim/rng.hpp"

namespace fslsim {

RunResult run_fedavg(const RunConfig& cfg) {
  const SimSetup setup = build_setup(cfg);
  const std::size_t m = cfg.clients;

  auto [full_spec, x] =
      compose(setup.split, setup.bundle.client_init, setup.bundle.server_init);
  const std::uint64_t model_size = x.size();

  std::vector<BatchStream> streams;
  streams.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    streams.emplace_back(setup.shards[i], mix_seed(cfg.seed_streams, i));

  RunResult result;
  for (long t = 0;; ++t) {
    std::vector<ParamVector> locals;
    locals.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      result.ledger.charge(t, Direction::kDown, Channel::kModel,
                           static_cast<int>(i), model_size);
      ParamVector local = x;
      Matrix bx;
      LabelVector by;
      for (long k = 0; k < cfg.local_steps; ++k) {
        streams[i].next_batch(setup.train, cfg.batch_size, bx, by);
        const LossGrad lg = loss_and_grad(full_spec, local, bx, by);
        local = sgd_step(local, lg.grad_params, cfg.client_lr);
      }
      result.ledger.charge(t, Direction::kUp, Channel::kModel,
                           static_cast<int>(i), model_size);
      locals.push_back(std::move(local));
    }
    x = fserver_aggregate(locals);

    auto [client, server] = decompose(setup.split, x);
    result.rows.push_back(measure_round(cfg, setup, t, client, server, {},
                                        result.ledger, std::nullopt));
    if (stop_after_round(cfg, t, result.ledger)) {
      result.final_client = std::move(client);
      result.final_server = std::move(server);
      break;
    }
  }
  return result;
}

RunResult run_splitfed(const RunConfig& cfg, SplitFedMode mode) {
  const SimSetup setup = build_setup(cfg);
  const std::size_t m = cfg.clients;
  const MlpSpec& client_spec = setup.bundle.client_spec;
  const MlpSpec& server_spec = setup.bundle.server_spec;

  std::vector<ParamVector> client_params(m, setup.bundle.client_init);
  std::vector<BatchStream> streams;
  streams.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    streams.emplace_back(setup.shards[i], mix_seed(cfg.seed_streams, i));

  // multi-server: one copy per client; single-server: copies[0] shared
  std::vector<ParamVector> copies(
      mode == SplitFedMode::kMultiServer ? m : 1, setup.bundle.server_init);

  ParamVector x_c = setup.bundle.client_init;
  const std::uint64_t client_size = x_c.size();

  RunResult result;
  for (long t = 0;; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      client_params[i] = x_c;
      result.ledger.charge(t, Direction::kDown, Channel::kModel,
                           static_cast<int>(i), client_size);
    }

    Matrix bx;
    LabelVector by;
    for (long k = 0; k < cfg.local_steps; ++k) {
      for (std::size_t i = 0; i < m; ++i) {
        streams[i].next_batch(setup.train, cfg.batch_size, bx, by);
        const ForwardResult fwd = forward(client_spec, client_params[i], bx);
        const Matrix& z_f = fwd.output();
        result.ledger.charge(t, Direction::kUp, Channel::kSmashed,
                             static_cast<int>(i), z_f.size() + by.size());
        ParamVector& sp =
            copies[mode == SplitFedMode::kMultiServer ? i : 0];
        const LossGrad lg = loss_and_grad(server_spec, sp, z_f, by);
        sp = sgd_step(sp, lg.grad_params, cfg.server_lr);
        // true cut-layer gradient goes back; no labels ride along
        result.ledger.charge(t, Direction::kDown, Channel::kGradient,
                             static_cast<int>(i), lg.grad_inputs.size());
        const ParamVector g_c =
            vjp_params(client_spec, client_params[i], bx, lg.grad_inputs);
        client_params[i] = sgd_step(client_params[i], g_c, cfg.client_lr);
      }
    }

    for (std::size_t i = 0; i < m; ++i)
      result.ledger.charge(t, Direction::kUp, Channel::kModel,
                           static_cast<int>(i), client_size);
    x_c = fserver_aggregate(client_params);
    if (mode == SplitFedMode::kMultiServer) {
      // the per-client copies are co-located, averaging them moves no bytes
      ParamVector mean = fserver_aggregate(copies);
      for (ParamVector& c : copies) c = mean;
    }

    result.rows.push_back(measure_round(cfg, setup, t, x_c, copies[0], {},
                                        result.ledger, std::nullopt));
    if (stop_after_round(cfg, t, result.ledger)) break;
  }
  result.final_client = x_c;
  result.final_server = copies[0];
  return result;
}

RunResult run_cse_fsl(const RunConfig& cfg) {
  const SimSetup setup = build_setup(cfg);
  const std::size_t m = cfg.clients;

  ClientEnv env;
  env.client_spec = &setup.bundle.client_spec;
  env.aux_spec = &setup.bundle.aux_spec;
  env.data = &setup.train;
  env.batch_size = cfg.batch_size;

  std::vector<ClientState> clients;
  clients.reserve(m);
  for (std::size_t i = 0; i < m; ++i)
    clients.push_back(ClientState{
        static_cast<int>(i), setup.bundle.client_init, setup.aux_inits[i],
        BatchStream(setup.shards[i], mix_seed(cfg.seed_streams, i))});

  ParamVector server_params = setup.bundle.server_init;
  ParamVector x_c = setup.bundle.client_init;
  ParamVector x_a = setup.bundle.aux_init;  // one shared estimator
  const std::uint64_t client_size = x_c.size();
  const std::uint64_t aux_size = x_a.size();

  const long period = cfg.local_steps / cfg.uplinks;

  RunResult result;
  for (long t = 0;; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      clients[i].client_params = x_c;
      result.ledger.charge(t, Direction::kDown, Channel::kModel,
                           static_cast<int>(i), client_size);
      clients[i].aux_params = x_a;
      result.ledger.charge(t, Direction::kDown, Channel::kAux,
                           static_cast<int>(i), aux_size);
    }

    std::vector<std::vector<SmashedRecord>> uplinks(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (long k = 0; k < cfg.local_steps; ++k) {
        LocalStepResult res =
            client_local_step(env, clients[i], cfg.client_lr);
        // the local estimator trains on its own head loss at every step,
        // reusing the evaluation that produced the client's update
        clients[i].aux_params = sgd_step(
            clients[i].aux_params, res.aux_eval.grad_params, cfg.client_lr);
        if ((k + 1) % period == 0) {
          SmashedRecord rec;
          rec.z_f = std::move(res.z_f);
          rec.labels = std::move(res.labels);
          rec.client_id = clients[i].client_id;
          rec.round = t;
          rec.local_step = static_cast<int>(k);
          result.ledger.charge(t, Direction::kUp, Channel::kSmashed,
                               static_cast<int>(i),
                               rec.z_f.size() + rec.labels.size());
          uplinks[i].push_back(std::move(rec));
        }
      }
    }

    for (long q = 0; q < cfg.uplinks; ++q)
      for (std::size_t i = 0; i < m; ++i)
        server_step(setup.bundle.server_spec, server_params,
                    uplinks[i][static_cast<std::size_t>(q)], cfg.server_lr);

    std::vector<ParamVector> client_uploads, aux_uploads;
    client_uploads.reserve(m);
    aux_uploads.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      client_uploads.push_back(clients[i].client_params);
      result.ledger.charge(t, Direction::kUp, Channel::kModel,
                           static_cast<int>(i), client_size);
      aux_uploads.push_back(clients[i].aux_params);
      result.ledger.charge(t, Direction::kUp, Channel::kAux,
                           static_cast<int>(i), aux_size);
    }
    x_c = fserver_aggregate(client_uploads);
    x_a = fserver_aggregate(aux_uploads);

    std::vector<ParamVector> aux_now(m, x_a);
    result.rows.push_back(measure_round(cfg, setup, t, x_c, server_params,
                                        aux_now, result.ledger, std::nullopt));
    if (stop_after_round(cfg, t, result.ledger)) break;
  }
  result.final_client = x_c;
  result.final_server = server_params;
  result.final_aux.assign(m, x_a);
  return result;
}

}  // namespace fslsim
