#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fslsim/matrix.hpp"
#include "fslsim/mlp.hpp"
#include "fslsim/models.hpp"

namespace fslsim {

enum class Direction { kUp, kDown };
enum class Channel { kModel, kSmashed, kGradient, kAux };

struct CommEvent {
  long round = 0;
  Direction direction = Direction::kUp;
  Channel channel = Channel::kModel;
  int client_id = 0;
  std::uint64_t scalar_count = 0;
};

// Append-only record of everything that crossed the wire. Payloads are
// counted in scalars; bytes assume the 4-byte wire encoding regardless
// of the 8-byte compute precision.
class CommLedger {
 public:
  static constexpr std::uint64_t kWireBytesPerScalar = 4;

  void charge(long round, Direction dir, Channel ch, int client_id,
              std::uint64_t scalar_count);

  std::uint64_t total_scalars() const { return total_scalars_; }
  std::uint64_t total_bytes() const {
    return total_scalars_ * kWireBytesPerScalar;
  }

  struct Query {
    std::optional<long> round;
    std::optional<Direction> direction;
    std::optional<Channel> channel;
    std::optional<int> client_id;
  };
  std::uint64_t scalars(const Query& q) const;
  std::uint64_t bytes(const Query& q) const {
    return scalars(q) * kWireBytesPerScalar;
  }

  const std::vector<CommEvent>& events() const { return events_; }

 private:
  std::vector<CommEvent> events_;
  std::uint64_t total_scalars_ = 0;
};

struct MetricsRow {
  long round = 0;
  double train_loss = 0.0;
  double eval_loss = 0.0;
  double eval_accuracy = 0.0;
  std::uint64_t cumulative_bytes = 0;
  std::optional<double> epsilon_t;
  std::optional<double> grad_norm_sq;
  std::optional<double> alignment_loss;
};

// Shortest decimal string that round-trips the double exactly.
std::string format_double(double v);

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRow& row);
void write_metrics_csv(const std::vector<MetricsRow>& rows,
                       const std::string& path);

// Mean over clients of || g_hat_i - g ||^2 on a fixed probe batch, where
// g is the exact client-parameter gradient of the composed network and
// g_hat_i is the same pullback but with client i's auxiliary network
// standing in for the server.
double estimation_error(const MlpSpec& client_spec, const MlpSpec& aux_spec,
                        const MlpSpec& server_spec,
                        const ParamVector& client_params,
                        std::span<const ParamVector> aux_params,
                        const ParamVector& server_params,
                        const Matrix& probe_inputs,
                        const LabelVector& probe_labels);

// Squared L2 norm of the full-parameter gradient on a probe batch.
double grad_norm_sq(const MlpSpec& spec, const ParamVector& params,
                    const Matrix& probe_inputs,
                    const LabelVector& probe_labels);

double grad_norm_sq_split(const SplitSpec& split, const ParamVector& client,
                          const ParamVector& server,
                          const Matrix& probe_inputs,
                          const LabelVector& probe_labels);

}  // namespace fslsim
