#include "mpm/net/model_state.hpp"

#include <cmath>
#include <random>
#include <string_view>

#include "mpm/errors.hpp"

namespace mpm::net {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename T>
class Initializer {
 public:
  Initializer(nn::ParameterStore<T>& store, std::uint64_t seed) : store_(store), seed_(seed) {}

  // Each tensor gets its own generator so that adding or removing a tensor
  // never shifts the values of the others.
  std::mt19937_64 rng_for(const std::string& name) const { return std::mt19937_64(seed_ ^ fnv1a(name)); }

  void linear(const std::string& name, int in, int out, bool bias = true) {
    auto rng = rng_for(name + ".w");
    const double a = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-a, a);
    nn::Matrix<T> w(in, out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(u(rng));
    store_.add(name + ".w", std::move(w));
    if (bias) store_.add(name + ".b", nn::Matrix<T>::Zero(1, out));
  }

  void norm(const std::string& name, int dim) {
    store_.add(name + ".g", nn::Matrix<T>::Ones(1, dim));
    store_.add(name + ".b", nn::Matrix<T>::Zero(1, dim));
  }

  void normal(const std::string& name, int rows, int cols, double stddev) {
    auto rng = rng_for(name);
    std::normal_distribution<double> n(0.0, stddev);
    nn::Matrix<T> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(n(rng));
    store_.add(name, std::move(m));
  }

  void attention(const std::string& prefix, int d) {
    norm(prefix + ".ln1", d);
    linear(prefix + ".attn.q", d, d);
    linear(prefix + ".attn.k", d, d);
    linear(prefix + ".attn.v", d, d);
    linear(prefix + ".attn.o", d, d);
  }

  void transformer_block(const std::string& prefix, int d, int hidden) {
    attention(prefix, d);
    norm(prefix + ".ln2", d);
    linear(prefix + ".ffn.fc1", d, hidden);
    linear(prefix + ".ffn.fc2", hidden, d);
  }

 private:
  nn::ParameterStore<T>& store_;
  std::uint64_t seed_;
};

}  // namespace

template <typename T>
ModelState<T> ModelState<T>::initialize(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelState<T> state;
  state.config = config;
  state.stage = StateStage::kPretrained;
  Initializer<T> init(state.params, seed);

  const int d = config.embed_dim;
  const int hidden = config.hidden_dim();
  const int j = config.joints;
  constexpr double kEmbedStd = 0.02;

  for (auto [name, dim] : {std::pair{"enc2d", 2}, std::pair{"enc3d", 3}}) {
    const std::string p = name;
    init.normal(p + ".token", 1, dim, kEmbedStd);
    init.linear(p + ".fc1", j * dim, d);
    init.linear(p + ".fc2", d, d);
  }

  for (int i = 0; i < config.spatial_blocks; ++i) {
    const std::string p = "shared.spatial." + std::to_string(i);
    init.norm(p + ".ln", d);
    init.linear(p + ".fc1", d, hidden);
    init.linear(p + ".fc2", hidden, d);
  }
  init.normal("shared.temporal.pos", config.seq_len, d, kEmbedStd);
  for (int i = 0; i < config.temporal_layers; ++i) {
    init.transformer_block("shared.temporal." + std::to_string(i), d, hidden);
  }
  init.norm("shared.temporal.ln_out", d);

  init.normal("dec.vt", 1, d, kEmbedStd);
  for (auto [name, dim] : {std::pair{"dec2d", 2}, std::pair{"dec3d_pre", 3}}) {
    const std::string p = name;
    init.normal(p + ".pos", config.seq_len, d, kEmbedStd);
    init.transformer_block(p + ".block", d, hidden);
    init.norm(p + ".ln_out", d);
    init.linear(p + ".head", d, j * dim);
  }

  init.normal("dec3d_ft.pos", config.seq_len, d, kEmbedStd);
  for (size_t i = 0; i < config.stride_schedule.size(); ++i) {
    const std::string p = "dec3d_ft." + std::to_string(i);
    init.attention(p, d);
    init.norm(p + ".ln2", d);
    init.linear(p + ".fc1", d, d);
    init.linear(p + ".conv", d * config.stride_schedule[i].kernel, d);
  }
  init.norm("dec3d_ft.ln_out", d);
  init.linear("dec3d_ft.head", d, j * 3);

  init.linear("dec_seq.head", d, j * 3);
  return state;
}

template <typename T>
ParamCensus param_census(const ModelState<T>& state) {
  ParamCensus c;
  c.encoders = state.params.scalar_count("enc");
  c.shared = state.params.scalar_count("shared.");
  c.decoders = state.params.scalar_count("dec");
  c.total = state.params.scalar_count();
  if (c.encoders + c.shared + c.decoders != c.total) {
    throw ValidationError("param_census: parameter outside the encoder/shared/decoder groups");
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> transplant_map(const ModelConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  auto both = [&](const std::string& src, const std::string& dst) {
    out.emplace_back(src + ".g", dst + ".g");
    out.emplace_back(src + ".b", dst + ".b");
  };
  auto linear = [&](const std::string& src, const std::string& dst) {
    out.emplace_back(src + ".w", dst + ".w");
    out.emplace_back(src + ".b", dst + ".b");
  };
  out.emplace_back("dec3d_pre.pos", "dec3d_ft.pos");
  if (!config.stride_schedule.empty()) {
    both("dec3d_pre.block.ln1", "dec3d_ft.0.ln1");
    for (const char* m : {"q", "k", "v", "o"}) {
      linear(std::string("dec3d_pre.block.attn.") + m, std::string("dec3d_ft.0.attn.") + m);
    }
  }
  both("dec3d_pre.ln_out", "dec3d_ft.ln_out");
  linear("dec3d_pre.head", "dec3d_ft.head");
  return out;
}

template <typename T>
ModelState<T> transplant_pretrained(const ModelState<T>& pre, const ModelConfig& post_config,
                                    std::uint64_t seed) {
  post_config.validate();
  const ModelConfig& a = pre.config;
  const ModelConfig& b = post_config;
  if (a.embed_dim != b.embed_dim || a.joints != b.joints || a.seq_len != b.seq_len ||
      a.spatial_blocks != b.spatial_blocks || a.temporal_layers != b.temporal_layers ||
      a.heads != b.heads || a.mlp_ratio != b.mlp_ratio) {
    throw ValidationError("transplant: pretrained and fine-tuning configs are incompatible");
  }

  ModelState<T> post = ModelState<T>::initialize(post_config, seed ^ 0x7472616e73706c61ULL);
  for (auto& p : post.params.all()) {
    const std::string_view name = p.name;
    const bool verbatim = name.starts_with("enc") || name.starts_with("shared.") || name == "dec.vt" ||
                          name.starts_with("dec2d.") || name.starts_with("dec3d_pre.");
    if (verbatim) p.value = pre.params.get(name).value;
  }
  for (const auto& [src, dst] : transplant_map(post_config)) {
    post.params.get(dst).value = pre.params.get(src).value;
  }
  post.stage = StateStage::kPretrained;
  return post;
}

template struct ModelState<float>;
template struct ModelState<double>;
template ParamCensus param_census(const ModelState<float>&);
template ParamCensus param_census(const ModelState<double>&);
template ModelState<float> transplant_pretrained(const ModelState<float>&, const ModelConfig&, std::uint64_t);
template ModelState<double> transplant_pretrained(const ModelState<double>&, const ModelConfig&, std::uint64_t);

}  // namespace mpm::net
