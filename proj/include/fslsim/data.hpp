#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fslsim/matrix.hpp"
#include "fslsim/mlp.hpp"
#include "fslsim/rng.hpp"

namespace fslsim {

struct Dataset {
  Matrix inputs;       // n x d
  LabelVector labels;  // values in [0, num_classes)
  std::size_t num_classes = 0;

  std::size_t size() const { return inputs.rows; }
  std::size_t dim() const { return inputs.cols; }
};

// One client's slice of a dataset: indices are disjoint across shards
// and together cover the dataset.
struct Shard {
  int client_id = 0;
  std::vector<std::size_t> indices;
};

// Isotropic unit-variance Gaussians around class means placed uniformly
// at random on the sphere of radius `separation`. Class sizes are
// balanced to within one sample; row order is shuffled.
Dataset gen_gaussian_mixture(std::size_t n, std::size_t d,
                             std::size_t num_classes, double separation,
                             std::uint64_t seed);

// Label-skewed split: per class, client proportions are drawn from a
// symmetric Dirichlet(alpha). Small alpha concentrates each class on few
// clients; large alpha approaches a uniform split. Draws are retried
// (up to 100 times) until every client is non-empty.
std::vector<Shard> dirichlet_partition(const LabelVector& labels,
                                       std::size_t m, double alpha,
                                       std::uint64_t seed);

// Uniform random split into m near-equal shards.
std::vector<Shard> iid_partition(std::size_t n, std::size_t m,
                                 std::uint64_t seed);

// Without-replacement batch sampler over one shard. Each epoch visits
// every index exactly once in a freshly shuffled order; batches simply
// continue across the epoch boundary.
class BatchStream {
 public:
  BatchStream(Shard shard, std::uint64_t seed);

  std::vector<std::size_t> next_indices(std::size_t batch_size);
  // Gathers the next batch's rows and labels out of `data`.
  void next_batch(const Dataset& data, std::size_t batch_size, Matrix& x,
                  LabelVector& y);

  const Shard& shard() const { return shard_; }

 private:
  Shard shard_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

// Fixed little-endian binary layout: u64 n, d, num_classes; then n*d
// doubles row-major; then n labels as u64.
void dump_dataset(const Dataset& data, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace fslsim
