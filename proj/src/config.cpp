#include "fslsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "fslsim/metrics.hpp"
#include "fslsim/rng.hpp"

namespace fslsim {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> tokens(const std::string& value) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : value) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Activation parse_activation(const std::string& s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw ConfigError("unknown activation '" + s +
                    "' (want identity, relu or tanh)");
}

Head parse_head(const std::string& s) {
  if (s == "none") return Head::kNone;
  if (s == "softmax_xent") return Head::kSoftmaxXent;
  if (s == "mse") return Head::kMse;
  throw ConfigError("unknown head '" + s +
                    "' (want none, softmax_xent or mse)");
}

Algorithm parse_algorithm(const std::string& s) {
  if (s == "fsl_sage") return Algorithm::kFslSage;
  if (s == "fedavg") return Algorithm::kFedAvg;
  if (s == "splitfed_ms") return Algorithm::kSplitFedMs;
  if (s == "splitfed_ss") return Algorithm::kSplitFedSs;
  if (s == "cse_fsl") return Algorithm::kCseFsl;
  throw ConfigError("unknown algorithm '" + s +
                    "' (want fsl_sage, fedavg, splitfed_ms, splitfed_ss or "
                    "cse_fsl)");
}

PartitionKind parse_partition(const std::string& s) {
  if (s == "dirichlet") return PartitionKind::kDirichlet;
  if (s == "iid") return PartitionKind::kIid;
  throw ConfigError("unknown partition '" + s + "' (want dirichlet or iid)");
}

// Typed access to the raw key/value map with consumption tracking so we
// can reject unknown keys afterwards.
class KvReader {
 public:
  explicit KvReader(
      const std::map<std::string, std::map<std::string, std::string>>& kv)
      : kv_(kv) {}

  bool has(const std::string& section, const std::string& key) {
    auto s = kv_.find(section);
    if (s == kv_.end()) return false;
    return s->second.count(key) > 0;
  }

  std::string str(const std::string& section, const std::string& key,
                  const std::string& fallback) {
    auto s = kv_.find(section);
    if (s == kv_.end()) return fallback;
    auto it = s->second.find(key);
    if (it == s->second.end()) return fallback;
    consumed_.insert(section + "." + key);
    return trim(it->second);
  }

  long integer(const std::string& section, const std::string& key,
               long fallback) {
    const std::string v = str(section, key, "");
    if (v.empty()) return fallback;
    return to_long(section, key, v);
  }

  std::uint64_t unsigned64(const std::string& section, const std::string& key,
                           std::uint64_t fallback) {
    const std::string v = str(section, key, "");
    if (v.empty()) return fallback;
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw ConfigError("[" + section + "] " + key +
                        " must be a non-negative integer, got '" + v + "'");
    return out;
  }

  double real(const std::string& section, const std::string& key,
              double fallback) {
    const std::string v = str(section, key, "");
    if (v.empty()) return fallback;
    try {
      std::size_t pos = 0;
      double out = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError("[" + section + "] " + key + " must be a number, got '" +
                        v + "'");
    }
  }

  bool boolean(const std::string& section, const std::string& key,
               bool fallback) {
    const std::string v = str(section, key, "");
    if (v.empty()) return fallback;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("[" + section + "] " + key + " must be a boolean, got '" +
                      v + "'");
  }

  std::vector<std::size_t> size_list(const std::string& section,
                                     const std::string& key,
                                     const std::vector<std::size_t>& fallback) {
    const std::string v = str(section, key, "");
    if (v.empty()) return fallback;
    std::vector<std::size_t> out;
    for (const std::string& t : tokens(v)) {
      long x = to_long(section, key, t);
      if (x < 0)
        throw ConfigError("[" + section + "] " + key +
                          " entries must be non-negative");
      out.push_back(static_cast<std::size_t>(x));
    }
    return out;
  }

  std::vector<Activation> activation_list(
      const std::string& section, const std::string& key,
      const std::vector<Activation>& fallback) {
    const std::string v = str(section, key, "");
    if (v.empty()) return fallback;
    std::vector<Activation> out;
    for (const std::string& t : tokens(v)) out.push_back(parse_activation(t));
    return out;
  }

  // Anything present but never consumed is a typo; name it.
  void reject_unknown() const {
    for (const auto& [section, keys] : kv_) {
      if (section != "run" && section != "protocol" && section != "data" &&
          section != "model" && section != "metrics" && section != "seeds")
        throw ConfigError("unknown config section [" + section + "]");
      for (const auto& [key, value] : keys) {
        (void)value;
        if (!consumed_.count(section + "." + key))
          throw ConfigError("unknown config key [" + section + "] " + key);
      }
    }
  }

 private:
  long to_long(const std::string& section, const std::string& key,
               const std::string& v) {
    long out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      throw ConfigError("[" + section + "] " + key +
                        " must be an integer, got '" + v + "'");
    return out;
  }

  const std::map<std::string, std::map<std::string, std::string>>& kv_;
  std::set<std::string> consumed_;
};

std::size_t checked_size(const std::string& section, const std::string& key,
                         long v) {
  if (v < 0)
    throw ConfigError("[" + section + "] " + key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kFslSage: return "fsl_sage";
    case Algorithm::kFedAvg: return "fedavg";
    case Algorithm::kSplitFedMs: return "splitfed_ms";
    case Algorithm::kSplitFedSs: return "splitfed_ss";
    case Algorithm::kCseFsl: return "cse_fsl";
  }
  return "?";
}

std::string to_string(PartitionKind p) {
  return p == PartitionKind::kDirichlet ? "dirichlet" : "iid";
}

SplitSpec RunConfig::split_spec() const {
  SplitSpec s;
  s.full.layer_dims = layer_dims;
  s.full.activations = activations;
  s.full.head = head;
  s.cut_index = cut_index;
  s.aux.layer_dims = aux_layer_dims;
  s.aux.activations = aux_activations;
  s.aux.head = head;
  return s;
}

void RunConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds must be >= 1");
  if (clients < 1) throw ConfigError("clients must be >= 1");
  if (local_steps < 1) throw ConfigError("local_steps must be >= 1");
  if (uplinks < 1) throw ConfigError("uplinks_per_round must be >= 1");
  if (uplinks > local_steps || local_steps % uplinks != 0)
    throw ConfigError("uplinks_per_round must divide local_steps");
  if (align_every < 1) throw ConfigError("align_every must be >= 1");
  if (align_until < 0 || align_until > rounds)
    throw ConfigError("align_until must be in [0, rounds]");
  if (align_steps < 0) throw ConfigError("align_steps must be >= 0");
  if (!(server_lr >= 0.0)) throw ConfigError("server_lr must be >= 0");
  if (!(client_lr >= 0.0)) throw ConfigError("client_lr must be >= 0");
  if (!(align_lr >= 0.0)) throw ConfigError("align_lr must be >= 0");
  if (train_n < 1) throw ConfigError("train_n must be >= 1");
  if (eval_n < 1) throw ConfigError("eval_n must be >= 1");
  if (clients > train_n)
    throw ConfigError("clients must not exceed train_n");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(separation >= 0.0)) throw ConfigError("separation must be >= 0");
  if (!(dirichlet_alpha > 0.0))
    throw ConfigError("dirichlet_alpha must be > 0");
  if (probe_size < 1) throw ConfigError("probe_size must be >= 1");
  if (probe_size > eval_n)
    throw ConfigError("probe_size must not exceed eval_n");
  if (classes < 2) throw ConfigError("classes must be >= 2");

  SplitSpec split = split_spec();
  try {
    split.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (dim != split.full.input_dim())
    throw ConfigError("layer_dims must start at the data dim");
  if (head == Head::kSoftmaxXent && split.full.output_dim() != classes)
    throw ConfigError("layer_dims must end at the class count");
}

std::map<std::string, std::map<std::string, std::string>> parse_ini(
    const std::string& text) {
  std::map<std::string, std::map<std::string, std::string>> kv;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(lineno) +
                          ": empty section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) +
                        ": key outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (kv[section].count(key))
      throw ConfigError("duplicate key [" + section + "] " + key);
    kv[section][key] = value;
  }
  return kv;
}

RunConfig build_config(
    const std::map<std::string, std::map<std::string, std::string>>& kv) {
  KvReader r(kv);
  RunConfig cfg;

  cfg.algorithm =
      parse_algorithm(r.str("run", "algorithm", to_string(cfg.algorithm)));
  cfg.rounds = r.integer("run", "rounds", cfg.rounds);
  cfg.clients = checked_size(
      "run", "clients",
      r.integer("run", "clients", static_cast<long>(cfg.clients)));
  cfg.max_bytes = r.unsigned64("run", "max_bytes", cfg.max_bytes);

  cfg.uplinks = r.integer("protocol", "uplinks_per_round", cfg.uplinks);
  cfg.align_every = r.integer("protocol", "align_every", cfg.align_every);
  cfg.server_lr = r.real("protocol", "server_lr", cfg.server_lr);
  cfg.client_lr = r.real("protocol", "client_lr", cfg.client_lr);
  cfg.align_steps = r.integer("protocol", "align_steps", cfg.align_steps);
  cfg.align_lr = r.real("protocol", "align_lr", cfg.align_lr);
  cfg.store_capacity = checked_size(
      "protocol", "store_capacity",
      r.integer("protocol", "store_capacity",
                static_cast<long>(cfg.store_capacity)));

  cfg.train_n = checked_size(
      "data", "train_n",
      r.integer("data", "train_n", static_cast<long>(cfg.train_n)));
  cfg.eval_n = checked_size(
      "data", "eval_n",
      r.integer("data", "eval_n", static_cast<long>(cfg.eval_n)));
  cfg.dim = checked_size("data", "dim",
                         r.integer("data", "dim", static_cast<long>(cfg.dim)));
  cfg.classes = checked_size(
      "data", "classes",
      r.integer("data", "classes", static_cast<long>(cfg.classes)));
  cfg.separation = r.real("data", "separation", cfg.separation);
  cfg.batch_size = checked_size(
      "data", "batch_size",
      r.integer("data", "batch_size", static_cast<long>(cfg.batch_size)));
  cfg.partition =
      parse_partition(r.str("data", "partition", to_string(cfg.partition)));
  cfg.dirichlet_alpha =
      r.real("data", "dirichlet_alpha", cfg.dirichlet_alpha);

  // local_steps = epoch resolves against the mean shard size
  {
    const std::string v =
        r.str("protocol", "local_steps", std::to_string(cfg.local_steps));
    if (v == "epoch") {
      const std::size_t shard =
          std::max<std::size_t>(1, cfg.train_n / std::max<std::size_t>(
                                                     1, cfg.clients));
      cfg.local_steps = static_cast<long>(
          (shard + cfg.batch_size - 1) / cfg.batch_size);
    } else {
      long out = 0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(
            "[protocol] local_steps must be an integer or 'epoch', got '" + v +
            "'");
      cfg.local_steps = out;
    }
  }

  cfg.layer_dims = r.size_list("model", "layer_dims", cfg.layer_dims);
  cfg.activations =
      r.activation_list("model", "activations", cfg.activations);
  cfg.head = parse_head(r.str("model", "head", to_string(cfg.head)));
  cfg.cut_index = checked_size(
      "model", "cut_index",
      r.integer("model", "cut_index", static_cast<long>(cfg.cut_index)));
  cfg.aux_layer_dims =
      r.size_list("model", "aux_layer_dims", cfg.aux_layer_dims);
  cfg.aux_activations =
      r.activation_list("model", "aux_activations", cfg.aux_activations);
  cfg.aux_init_identical =
      r.boolean("model", "aux_init_identical", cfg.aux_init_identical);

  cfg.probe_size = checked_size(
      "metrics", "probe_size",
      r.integer("metrics", "probe_size", static_cast<long>(cfg.probe_size)));

  cfg.seed_dataset = r.unsigned64("seeds", "dataset", cfg.seed_dataset);
  cfg.seed_partition = r.unsigned64("seeds", "partition", cfg.seed_partition);
  cfg.seed_init = r.unsigned64("seeds", "init", cfg.seed_init);
  cfg.seed_streams = r.unsigned64("seeds", "streams", cfg.seed_streams);

  // align_until = rounds (or the word "rounds") means no lazy cutoff
  {
    const std::string v = r.str("protocol", "align_until", "");
    if (v.empty() || v == "rounds") {
      cfg.align_until = cfg.rounds;
    } else {
      long out = 0;
      auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
      if (ec != std::errc() || p != v.data() + v.size())
        throw ConfigError(
            "[protocol] align_until must be an integer or 'rounds', got '" +
            v + "'");
      cfg.align_until = out;
    }
  }

  r.reject_unknown();
  cfg.validate();
  return cfg;
}

RunConfig parse_config(const std::string& text) {
  return build_config(parse_ini(text));
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string join_activations(const std::vector<Activation>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += to_string(v[i]);
  }
  return s;
}

}  // namespace

std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
config_rows(const RunConfig& cfg) {
  using Rows = std::vector<std::pair<std::string, std::string>>;
  Rows run = {
      {"algorithm", to_string(cfg.algorithm)},
      {"rounds", std::to_string(cfg.rounds)},
      {"clients", std::to_string(cfg.clients)},
      {"max_bytes", std::to_string(cfg.max_bytes)},
  };
  Rows protocol = {
      {"local_steps", std::to_string(cfg.local_steps)},
      {"uplinks_per_round", std::to_string(cfg.uplinks)},
      {"align_every", std::to_string(cfg.align_every)},
      {"align_until", std::to_string(cfg.align_until)},
      {"server_lr", format_double(cfg.server_lr)},
      {"client_lr", format_double(cfg.client_lr)},
      {"align_steps", std::to_string(cfg.align_steps)},
      {"align_lr", format_double(cfg.align_lr)},
      {"store_capacity", std::to_string(cfg.store_capacity)},
  };
  Rows data = {
      {"train_n", std::to_string(cfg.train_n)},
      {"eval_n", std::to_string(cfg.eval_n)},
      {"dim", std::to_string(cfg.dim)},
      {"classes", std::to_string(cfg.classes)},
      {"separation", format_double(cfg.separation)},
      {"batch_size", std::to_string(cfg.batch_size)},
      {"partition", to_string(cfg.partition)},
      {"dirichlet_alpha", format_double(cfg.dirichlet_alpha)},
  };
  Rows model = {
      {"layer_dims", join_sizes(cfg.layer_dims)},
      {"activations", join_activations(cfg.activations)},
      {"head", to_string(cfg.head)},
      {"cut_index", std::to_string(cfg.cut_index)},
      {"aux_layer_dims", join_sizes(cfg.aux_layer_dims)},
      {"aux_activations", join_activations(cfg.aux_activations)},
      {"aux_init_identical", cfg.aux_init_identical ? "true" : "false"},
  };
  Rows metrics = {
      {"probe_size", std::to_string(cfg.probe_size)},
  };
  Rows seeds = {
      {"dataset", std::to_string(cfg.seed_dataset)},
      {"partition", std::to_string(cfg.seed_partition)},
      {"init", std::to_string(cfg.seed_init)},
      {"streams", std::to_string(cfg.seed_streams)},
  };
  return {{"run", run},      {"protocol", protocol}, {"data", data},
          {"model", model},  {"metrics", metrics},   {"seeds", seeds}};
}

std::string emit_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& [section, rows] : config_rows(cfg)) {
    out += "[" + section + "]\n";
    for (const auto& [key, value] : rows) out += key + " = " + value + "\n";
    out += "\n";
  }
  return out;
}

void set_config_value(
    std::map<std::string, std::map<std::string, std::string>>& kv,
    const std::string& dotted_key, const std::string& value) {
  const std::size_t dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size())
    throw ConfigError("parameter name must look like section.key, got '" +
                      dotted_key + "'");
  std::string v = value;
  std::replace(v.begin(), v.end(), ',', ' ');
  kv[dotted_key.substr(0, dot)][dotted_key.substr(dot + 1)] = v;
}

SweepSpec parse_sweep_spec(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  SweepSpec spec;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    if (section != "sweep")
      throw ConfigError("sweep files hold a single [sweep] section");
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "axis") {
      std::vector<std::string> t = tokens(value);
      // commas are value-internal separators here, so retokenize on
      // whitespace only
      t.clear();
      std::string cur;
      for (char c : value) {
        if (std::isspace(static_cast<unsigned char>(c))) {
          if (!cur.empty()) t.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      if (!cur.empty()) t.push_back(cur);
      if (t.size() < 2)
        throw ConfigError("axis needs a parameter name and at least one value");
      SweepAxis axis;
      axis.key = t[0];
      axis.values.assign(t.begin() + 1, t.end());
      spec.axes.push_back(std::move(axis));
    } else if (key == "target_accuracy") {
      try {
        std::size_t pos = 0;
        spec.target_accuracy = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError("target_accuracy must be a number, got '" + value +
                          "'");
      }
      if (spec.target_accuracy < 0.0 || spec.target_accuracy > 1.0)
        throw ConfigError("target_accuracy must be in [0, 1]");
    } else {
      throw ConfigError("unknown sweep key '" + key + "'");
    }
  }
  if (spec.axes.empty())
    throw ConfigError("sweep spec needs at least one axis");
  return spec;
}

SweepSpec load_sweep_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open sweep file " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_sweep_spec(buf.str());
}

void apply_seed_override(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed_dataset = mix_seed(seed, 101);
  cfg.seed_partition = mix_seed(seed, 102);
  cfg.seed_init = mix_seed(seed, 103);
  cfg.seed_streams = mix_seed(seed, 104);
}

}  // namespace fslsim
