#include "fslsim/protocol.hpp"

#include <stdexcept>
#include <utility>

#include "fslsim/detail/net_ops.hpp"
#include "fslsim/sim.hpp"

namespace fslsim {

void AlignmentStore::append(SmashedRecord rec) {
  records_.push_back(std::move(rec));
  if (capacity_ > 0)
    while (records_.size() > capacity_) records_.pop_front();
}

LocalStepResult client_local_step(const ClientEnv& env, ClientState& state,
                                  double client_lr) {
  if (!env.client_spec || !env.aux_spec || !env.data)
    throw std::invalid_argument("client env is incomplete");
  Matrix x;
  LabelVector y;
  state.stream.next_batch(*env.data, env.batch_size, x, y);
  const ForwardResult fwd = forward(*env.client_spec, state.client_params, x);
  LocalStepResult out;
  out.z_f = fwd.output();
  out.labels = std::move(y);
  out.aux_eval =
      loss_and_grad(*env.aux_spec, state.aux_params, out.z_f, out.labels);
  const ParamVector g_c = vjp_params(*env.client_spec, state.client_params, x,
                                     out.aux_eval.grad_inputs);
  state.client_params = sgd_step(state.client_params, g_c, client_lr);
  return out;
}

std::vector<SmashedRecord> client_local_round(const ClientEnv& env,
                                              ClientState& state, long K,
                                              long Q, double client_lr,
                                              long round) {
  if (K < 1 || Q < 1 || Q > K || K % Q != 0)
    throw std::invalid_argument(
        "uplinks per round must divide the local step count");
  const long period = K / Q;
  std::vector<SmashedRecord> records;
  records.reserve(static_cast<std::size_t>(Q));
  for (long k = 0; k < K; ++k) {
    LocalStepResult res = client_local_step(env, state, client_lr);
    if ((k + 1) % period == 0) {
      SmashedRecord rec;
      rec.z_f = std::move(res.z_f);
      rec.labels = std::move(res.labels);
      rec.client_id = state.client_id;
      rec.round = round;
      rec.local_step = static_cast<int>(k);
      records.push_back(std::move(rec));
    }
  }
  return records;
}

void server_step(const MlpSpec& server_spec, ParamVector& server_params,
                 const SmashedRecord& rec, double server_lr) {
  const LossGrad lg =
      loss_and_grad(server_spec, server_params, rec.z_f, rec.labels);
  server_params = sgd_step(server_params, lg.grad_params, server_lr);
}

void sserver_process(const MlpSpec& server_spec, ServerState& server,
                     const SmashedRecord& rec, double server_lr) {
  if (rec.client_id < 0 ||
      static_cast<std::size_t>(rec.client_id) >= server.stores.size())
    throw std::invalid_argument("record client_id outside the store range");
  server_step(server_spec, server.server_params, rec, server_lr);
  server.stores[static_cast<std::size_t>(rec.client_id)].append(rec);
}

AlignmentLossGrad alignment_loss_and_grad(
    const MlpSpec& aux_spec, const ParamVector& aux_params,
    std::span<const AlignmentSample> samples) {
  if (samples.empty())
    throw std::invalid_argument("alignment needs at least one sample");
  const std::size_t nparams = aux_spec.param_count();
  if (aux_params.size() != nparams)
    throw std::invalid_argument("aux params do not match spec");

  AlignmentLossGrad out;
  out.grad = zeros_like(aux_spec);
  const double inv_r = 1.0 / static_cast<double>(samples.size());

  std::vector<double> gbuf;
  Matrix ginputs;
  std::vector<detail::Dual> dual_params(nparams);
  std::vector<detail::Dual> dual_gbuf;
  MatT<detail::Dual> dual_inputs, dual_ginputs;

  for (const AlignmentSample& s : samples) {
    if (!s.z_f || !s.labels)
      throw std::invalid_argument("alignment sample missing data");
    if (s.target.rows != s.z_f->rows || s.target.cols != s.z_f->cols)
      throw std::invalid_argument("alignment target shape mismatch");

    // plain pass: the aux input-gradient and the residual
    detail::loss_and_grad_impl<double>(aux_spec, aux_params.data.data(),
                                       *s.z_f, *s.labels, gbuf, ginputs);
    double sq = 0.0;
    for (std::size_t i = 0; i < ginputs.size(); ++i) {
      const double resid = ginputs.data[i] - s.target.data[i];
      sq += resid * resid;
    }
    out.loss += sq * inv_r;

    // dual pass: seed the inputs with the residual direction; the dual
    // part of grad_params is then d/d(aux) of <residual, input-grad>,
    // which is exactly the parameter gradient of this sample's squared
    // deviation (up to the 2/R factor applied below).
    for (std::size_t i = 0; i < nparams; ++i)
      dual_params[i] = detail::Dual(aux_params.data[i], 0.0);
    dual_inputs.resize(s.z_f->rows, s.z_f->cols);
    for (std::size_t i = 0; i < dual_inputs.size(); ++i)
      dual_inputs.data[i] = detail::Dual(
          s.z_f->data[i], ginputs.data[i] - s.target.data[i]);
    detail::loss_and_grad_impl<detail::Dual>(aux_spec, dual_params.data(),
                                             dual_inputs, *s.labels, dual_gbuf,
                                             dual_ginputs);
    for (std::size_t i = 0; i < nparams; ++i)
      out.grad.data[i] += 2.0 * inv_r * dual_gbuf[i].d;
  }
  return out;
}

AlignmentResult align_auxiliary(const MlpSpec& aux_spec,
                                const ParamVector& aux_params,
                                const AlignmentStore& store,
                                const MlpSpec& server_spec,
                                const ParamVector& server_params,
                                long steps, double align_lr) {
  if (store.empty())
    throw std::invalid_argument("alignment requires a non-empty store");
  if (steps < 0) throw std::invalid_argument("alignment steps must be >= 0");

  // targets from the server as it is NOW, not as it was at upload time
  std::vector<AlignmentSample> samples;
  samples.reserve(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const SmashedRecord& rec = store.at(i);
    AlignmentSample s;
    s.z_f = &rec.z_f;
    s.labels = &rec.labels;
    s.target = loss_and_grad(server_spec, server_params, rec.z_f, rec.labels)
                   .grad_inputs;
    samples.push_back(std::move(s));
  }

  AlignmentResult out;
  out.aux_params = aux_params;
  for (long step = 0; step < steps; ++step) {
    const AlignmentLossGrad lg =
        alignment_loss_and_grad(aux_spec, out.aux_params, samples);
    out.aux_params = sgd_step(out.aux_params, lg.grad, align_lr);
  }
  out.final_loss =
      alignment_loss_and_grad(aux_spec, out.aux_params, samples).loss;
  return out;
}

ParamVector fserver_aggregate(std::span<const ParamVector> client_params) {
  if (client_params.empty())
    throw std::invalid_argument("aggregate of zero clients");
  ParamVector out = client_params[0];
  for (std::size_t i = 1; i < client_params.size(); ++i) {
    const ParamVector& p = client_params[i];
    if (p.manifest != out.manifest || p.size() != out.size())
      throw std::invalid_argument("aggregate shape mismatch");
    for (std::size_t j = 0; j < out.data.size(); ++j)
      out.data[j] += p.data[j];
  }
  const double inv = 1.0 / static_cast<double>(client_params.size());
  for (double& v : out.data) v *= inv;
  return out;
}

RunResult run_fsl_sage(const RunConfig& cfg) {
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

  ServerState server;
  server.server_params = setup.bundle.server_init;
  server.stores.assign(m, AlignmentStore(cfg.store_capacity));

  ParamVector x_c = setup.bundle.client_init;
  const std::uint64_t client_size = x_c.size();
  const std::uint64_t aux_size = setup.bundle.aux_init.size();

  RunResult result;
  auto aux_snapshot = [&] {
    std::vector<ParamVector> aux;
    aux.reserve(m);
    for (const ClientState& c : clients) aux.push_back(c.aux_params);
    return aux;
  };

  for (long t = 0;; ++t) {
    for (std::size_t i = 0; i < m; ++i) {
      clients[i].client_params = x_c;
      result.ledger.charge(t, Direction::kDown, Channel::kModel,
                           static_cast<int>(i), client_size);
    }

    std::vector<std::vector<SmashedRecord>> uplinks(m);
    for (std::size_t i = 0; i < m; ++i) {
      uplinks[i] = client_local_round(env, clients[i], cfg.local_steps,
                                      cfg.uplinks, cfg.client_lr, t);
      for (const SmashedRecord& rec : uplinks[i])
        result.ledger.charge(t, Direction::kUp, Channel::kSmashed,
                             static_cast<int>(i),
                             rec.z_f.size() + rec.labels.size());
    }

    // server consumes the q-th record of every client before any
    // (q+1)-th record, clients in ascending id order within a slot
    for (long q = 0; q < cfg.uplinks; ++q)
      for (std::size_t i = 0; i < m; ++i)
        sserver_process(setup.bundle.server_spec, server,
                        uplinks[i][static_cast<std::size_t>(q)],
                        cfg.server_lr);

    std::vector<ParamVector> uploads;
    uploads.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
      uploads.push_back(clients[i].client_params);
      result.ledger.charge(t, Direction::kUp, Channel::kModel,
                           static_cast<int>(i), client_size);
    }
    x_c = fserver_aggregate(uploads);

    std::optional<double> align_loss;
    if (t % cfg.align_every == 0 && t <= cfg.align_until) {
      const std::vector<ParamVector> before = aux_snapshot();
      AlignmentEvent ev;
      ev.round = t;
      ev.eps_before = estimation_error(
          setup.bundle.client_spec, setup.bundle.aux_spec,
          setup.bundle.server_spec, x_c, before, server.server_params,
          setup.probe_inputs, setup.probe_labels);
      double loss_sum = 0.0;
      std::size_t aligned = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (server.stores[i].empty()) continue;
        AlignmentResult ar = align_auxiliary(
            setup.bundle.aux_spec, clients[i].aux_params, server.stores[i],
            setup.bundle.server_spec, server.server_params, cfg.align_steps,
            cfg.align_lr);
        clients[i].aux_params = std::move(ar.aux_params);
        loss_sum += ar.final_loss;
        ++aligned;
        result.ledger.charge(t, Direction::kDown, Channel::kAux,
                             static_cast<int>(i), aux_size);
      }
      if (aligned > 0) {
        align_loss = loss_sum / static_cast<double>(aligned);
        const std::vector<ParamVector> after = aux_snapshot();
        ev.eps_after = estimation_error(
            setup.bundle.client_spec, setup.bundle.aux_spec,
            setup.bundle.server_spec, x_c, after, server.server_params,
            setup.probe_inputs, setup.probe_labels);
        ev.mean_final_loss = *align_loss;
        result.alignment_events.push_back(ev);
      }
    }

    const std::vector<ParamVector> aux_now = aux_snapshot();
    result.rows.push_back(measure_round(cfg, setup, t, x_c,
                                        server.server_params, aux_now,
                                        result.ledger, align_loss));
    if (stop_after_round(cfg, t, result.ledger)) break;
  }

  result.final_client = x_c;
  result.final_server = server.server_params;
  result.final_aux = aux_snapshot();
  return result;
}

}  // namespace fslsim
