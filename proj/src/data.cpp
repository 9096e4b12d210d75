#include "fslsim/data.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fslsim {

Dataset gen_gaussian_mixture(std::size_t n, std::size_t d,
                             std::size_t num_classes, double separation,
                             std::uint64_t seed) {
  if (n == 0 || d == 0 || num_classes == 0)
    throw std::invalid_argument("n, d and num_classes must be positive");
  if (n < num_classes)
    throw std::invalid_argument("need at least one sample per class");
  if (!(separation >= 0.0) || !std::isfinite(separation))
    throw std::invalid_argument("separation must be finite and >= 0");

  Rng rng(seed);
  Matrix means(num_classes, d);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      means(c, j) = rng.normal();
      norm2 += means(c, j) * means(c, j);
    }
    const double scale = separation / std::max(std::sqrt(norm2), 1e-12);
    for (std::size_t j = 0; j < d; ++j) means(c, j) *= scale;
  }

  Dataset out;
  out.num_classes = num_classes;
  out.inputs.resize(n, d);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % num_classes;  // balanced to within one
    out.labels[i] = static_cast<std::int64_t>(c);
    for (std::size_t j = 0; j < d; ++j)
      out.inputs(i, j) = means(c, j) + rng.normal();
  }

  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm);
  Dataset shuffled;
  shuffled.num_classes = num_classes;
  shuffled.inputs.resize(n, d);
  shuffled.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    shuffled.labels[i] = out.labels[perm[i]];
    for (std::size_t j = 0; j < d; ++j)
      shuffled.inputs(i, j) = out.inputs(perm[i], j);
  }
  return shuffled;
}

std::vector<Shard> dirichlet_partition(const LabelVector& labels,
                                       std::size_t m, double alpha,
                                       std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (m == 0) throw std::invalid_argument("m must be positive");
  if (m > n)
    throw std::invalid_argument("more clients than samples (m > n)");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");

  std::int64_t max_label = 0;
  for (auto y : labels) {
    if (y < 0) throw std::invalid_argument("negative label");
    max_label = std::max(max_label, y);
  }
  const std::size_t num_classes = static_cast<std::size_t>(max_label) + 1;

  std::vector<std::vector<std::size_t>> by_class(num_classes);
  for (std::size_t i = 0; i < n; ++i)
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  Rng rng(seed);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<Shard> shards(m);
    for (std::size_t i = 0; i < m; ++i)
      shards[i].client_id = static_cast<int>(i);

    for (std::size_t c = 0; c < num_classes; ++c) {
      std::vector<std::size_t> idx = by_class[c];
      rng.shuffle(idx);
      const std::size_t nc = idx.size();
      if (nc == 0) continue;
      std::vector<double> w(m);
      double total = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        w[i] = rng.gamma(alpha);
        total += w[i];
      }
      // cumulative rounding keeps counts summing to nc exactly
      double cum = 0.0;
      std::size_t prev = 0;
      for (std::size_t i = 0; i < m; ++i) {
        cum += w[i] / total;
        std::size_t upto =
            (i + 1 == m) ? nc
                         : static_cast<std::size_t>(std::llround(
                               cum * static_cast<double>(nc)));
        upto = std::min(upto, nc);
        upto = std::max(upto, prev);
        for (std::size_t k = prev; k < upto; ++k)
          shards[i].indices.push_back(idx[k]);
        prev = upto;
      }
    }

    bool ok = true;
    for (const Shard& s : shards)
      if (s.indices.empty()) ok = false;
    if (ok) return shards;
  }
  throw std::runtime_error(
      "dirichlet_partition: could not make every client non-empty in 100 "
      "attempts (alpha too small for this m?)");
}

std::vector<Shard> iid_partition(std::size_t n, std::size_t m,
                                 std::uint64_t seed) {
  if (m == 0) throw std::invalid_argument("m must be positive");
  if (m > n)
    throw std::invalid_argument("more clients than samples (m > n)");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<Shard> shards(m);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < m; ++i) {
    shards[i].client_id = static_cast<int>(i);
    std::size_t take = n / m + (i < n % m ? 1 : 0);
    shards[i].indices.assign(idx.begin() + pos, idx.begin() + pos + take);
    pos += take;
  }
  return shards;
}

BatchStream::BatchStream(Shard shard, std::uint64_t seed)
    : shard_(std::move(shard)), rng_(seed) {
  if (shard_.indices.empty())
    throw std::invalid_argument("batch stream over an empty shard");
  order_ = shard_.indices;
  rng_.shuffle(order_);
}

std::vector<std::size_t> BatchStream::next_indices(std::size_t batch_size) {
  if (batch_size == 0 || batch_size > order_.size())
    throw std::invalid_argument(
        "batch size must be in [1, shard size]");
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  while (out.size() < batch_size) {
    if (cursor_ == order_.size()) {
      rng_.shuffle(order_);
      cursor_ = 0;
    }
    out.push_back(order_[cursor_++]);
  }
  return out;
}

void BatchStream::next_batch(const Dataset& data, std::size_t batch_size,
                             Matrix& x, LabelVector& y) {
  const std::vector<std::size_t> idx = next_indices(batch_size);
  x.resize(batch_size, data.dim());
  y.resize(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    if (idx[i] >= data.size())
      throw std::invalid_argument("shard index out of dataset range");
    y[i] = data.labels[idx[i]];
    for (std::size_t j = 0; j < data.dim(); ++j)
      x(i, j) = data.inputs(idx[i], j);
  }
}

namespace {

void put_u64(std::ofstream& f, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  f.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::ifstream& f) {
  unsigned char b[8];
  f.read(reinterpret_cast<char*>(b), 8);
  if (!f) throw std::runtime_error("dataset file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void dump_dataset(const Dataset& data, const std::string& path) {
  if (data.labels.size() != data.size())
    throw std::invalid_argument("label count does not match row count");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  put_u64(f, data.size());
  put_u64(f, data.dim());
  put_u64(f, data.num_classes);
  for (double v : data.inputs.data) put_u64(f, std::bit_cast<std::uint64_t>(v));
  for (auto y : data.labels) put_u64(f, static_cast<std::uint64_t>(y));
  if (!f) throw std::runtime_error("write to " + path + " failed");
}

Dataset load_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  Dataset d;
  const std::uint64_t n = get_u64(f);
  const std::uint64_t dim = get_u64(f);
  d.num_classes = get_u64(f);
  d.inputs.resize(n, dim);
  for (double& v : d.inputs.data) v = std::bit_cast<double>(get_u64(f));
  d.labels.resize(n);
  for (auto& y : d.labels) {
    const std::uint64_t raw = get_u64(f);
    y = static_cast<std::int64_t>(raw);
    if (y < 0 || (d.num_classes > 0 &&
                  static_cast<std::uint64_t>(y) >= d.num_classes))
      throw std::runtime_error("dataset label out of range");
  }
  return d;
}

}  // namespace fslsim
