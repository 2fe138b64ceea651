#include "sega/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "sega/error.hpp"
#include "sega/stats.hpp"

namespace sega::mechanism {

namespace {

constexpr std::size_t kMaxSeqLen = 64;
constexpr std::size_t kMaxHeads = 4;
constexpr std::size_t kMaxHeadDim = 16;

void check_dims(std::size_t seq_len, std::size_t n_heads, std::size_t head_dim) {
  if (seq_len == 0 || n_heads == 0 || head_dim == 0) {
    raise(ErrorKind::shape, "dimensions must be positive");
  }
  if (seq_len > kMaxSeqLen || n_heads > kMaxHeads || head_dim > kMaxHeadDim) {
    raise(ErrorKind::shape, "instance exceeds the toy-scale limits (64/4/16)");
  }
}

std::vector<bool> position_mask(const std::vector<std::size_t>& positions,
                                std::size_t seq_len) {
  std::vector<bool> mask(seq_len, false);
  for (std::size_t p : positions) {
    if (p >= seq_len) {
      raise(ErrorKind::domain,
            "intervention position " + std::to_string(p) + " out of range");
    }
    mask[p] = true;
  }
  return mask;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - peak);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

}  // namespace

void validate(const WkvParams& params) {
  check_dims(params.seq_len, params.n_heads, params.head_dim);
  const std::size_t n = params.seq_len * params.n_heads * params.head_dim;
  if (params.r.size() != n || params.k.size() != n || params.v.size() != n ||
      params.w.size() != n) {
    raise(ErrorKind::shape, "stream lengths do not match seq_len*heads*head_dim");
  }
  for (double x : params.w) {
    if (!(x > 0.0)) raise(ErrorKind::validation, "decay exponents must be > 0");
  }
}

WkvParams random_wkv(std::uint64_t seed, std::size_t seq_len,
                     std::size_t n_heads, std::size_t head_dim) {
  check_dims(seq_len, n_heads, head_dim);
  WkvParams params;
  params.seq_len = seq_len;
  params.n_heads = n_heads;
  params.head_dim = head_dim;
  const std::size_t n = seq_len * n_heads * head_dim;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> decay(0.05, 2.0);
  params.r.resize(n);
  params.k.resize(n);
  params.v.resize(n);
  params.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) params.r[i] = unit(rng);
  for (std::size_t i = 0; i < n; ++i) params.k[i] = unit(rng);
  for (std::size_t i = 0; i < n; ++i) params.v[i] = unit(rng);
  for (std::size_t i = 0; i < n; ++i) params.w[i] = decay(rng);
  return params;
}

ToyAttentionParams random_toy(std::uint64_t seed, std::size_t seq_len,
                              std::size_t n_heads, std::size_t head_dim) {
  check_dims(seq_len, n_heads, head_dim);
  ToyAttentionParams params;
  params.seq_len = seq_len;
  params.n_heads = n_heads;
  params.head_dim = head_dim;
  const std::size_t n = seq_len * n_heads * head_dim;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  params.q.resize(n);
  params.k.resize(n);
  params.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) params.q[i] = unit(rng);
  for (std::size_t i = 0; i < n; ++i) params.k[i] = unit(rng);
  for (std::size_t i = 0; i < n; ++i) params.v[i] = unit(rng);
  return params;
}

WkvOutputs wkv_forward(const WkvParams& params,
                       const std::optional<InterventionSpec>& intervention) {
  validate(params);
  std::vector<bool> scaled;
  double scale = 1.0;
  if (intervention) {
    if (intervention->target != InterventionTarget::state_write) {
      raise(ErrorKind::precondition,
            "wkv_forward only accepts state_write interventions");
    }
    if (intervention->scale < 0.0) {
      raise(ErrorKind::domain, "intervention scale must be non-negative");
    }
    scaled = position_mask(intervention->positions, params.seq_len);
    scale = intervention->scale;
  }

  const std::size_t H = params.n_heads;
  const std::size_t C = params.head_dim;
  WkvOutputs out;
  out.seq_len = params.seq_len;
  out.n_heads = H;
  out.head_dim = C;
  out.o.assign(params.seq_len * H * C, 0.0);

  // State accumulates in the widest float available; S[h][i][j] with i the
  // key channel carrying the decay and j the value channel.
  std::vector<long double> state(H * C * C, 0.0L);
  for (std::size_t t = 0; t < params.seq_len; ++t) {
    const double write_scale = (!scaled.empty() && scaled[t]) ? scale : 1.0;
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t i = 0; i < C; ++i) {
        const long double decay =
            std::exp(static_cast<long double>(-params.w[params.index(t, h, i)]));
        const long double kv_scale =
            static_cast<long double>(write_scale) *
            static_cast<long double>(params.k[params.index(t, h, i)]);
        for (std::size_t j = 0; j < C; ++j) {
          long double& s = state[(h * C + i) * C + j];
          s = kv_scale * static_cast<long double>(params.v[params.index(t, h, j)]) +
              decay * s;
        }
      }
      for (std::size_t j = 0; j < C; ++j) {
        long double acc = 0.0L;
        for (std::size_t i = 0; i < C; ++i) {
          acc += static_cast<long double>(params.r[params.index(t, h, i)]) *
                 state[(h * C + i) * C + j];
        }
        out.o[out.index(t, h, j)] = static_cast<double>(acc);
      }
    }
  }
  return out;
}

std::vector<double> cumulative_decay(const WkvParams& params, std::size_t t,
                                     std::size_t j) {
  validate(params);
  if (j > t || t >= params.seq_len) {
    raise(ErrorKind::domain, "cumulative_decay requires j <= t < seq_len");
  }
  const std::size_t H = params.n_heads;
  const std::size_t C = params.head_dim;
  std::vector<double> decay(H * C, 1.0);
  for (std::size_t tau = j + 1; tau <= t; ++tau) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t c = 0; c < C; ++c) {
        decay[h * C + c] *= std::exp(-params.w[params.index(tau, h, c)]);
      }
    }
  }
  return decay;
}

EffectiveAttention effective_attention(const WkvParams& params) {
  validate(params);
  const std::size_t T = params.seq_len;
  const std::size_t H = params.n_heads;
  const std::size_t C = params.head_dim;

  EffectiveAttention attn;
  attn.seq_len = T;
  attn.n_heads = H;
  attn.raw.assign(H * T * T, 0.0);
  attn.rectified.assign(H * T * T, 0.0);
  attn.normalized.assign(H * T * T, 0.0);

  std::vector<double> decay(C);
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t t = 0; t < T; ++t) {
      std::fill(decay.begin(), decay.end(), 1.0);  // D(t, t)
      for (std::size_t jj = t + 1; jj-- > 0;) {
        const std::size_t j = jj;
        if (j < t) {
          for (std::size_t c = 0; c < C; ++c) {
            decay[c] *= std::exp(-params.w[params.index(j + 1, h, c)]);
          }
        }
        double score = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          score += params.r[params.index(t, h, c)] * decay[c] *
                   params.k[params.index(j, h, c)];
        }
        attn.raw[attn.index(h, t, j)] = score;
        attn.rectified[attn.index(h, t, j)] = std::max(0.0, score);
      }
      double row_sum = 0.0;
      for (std::size_t j = 0; j <= t; ++j) {
        row_sum += attn.rectified[attn.index(h, t, j)];
      }
      if (row_sum > 0.0) {
        for (std::size_t j = 0; j <= t; ++j) {
          attn.normalized[attn.index(h, t, j)] =
              attn.rectified[attn.index(h, t, j)] / row_sum;
        }
      }
      // All raw scores non-positive: the normalized row stays all-zero.
    }
  }
  return attn;
}

SoftmaxForward softmax_forward(
    const ToyAttentionParams& params,
    const std::optional<InterventionSpec>& intervention) {
  check_dims(params.seq_len, params.n_heads, params.head_dim);
  const std::size_t n = params.seq_len * params.n_heads * params.head_dim;
  if (params.q.size() != n || params.k.size() != n || params.v.size() != n) {
    raise(ErrorKind::shape, "stream lengths do not match seq_len*heads*head_dim");
  }
  if (intervention && intervention->target != InterventionTarget::attention_edges) {
    raise(ErrorKind::precondition,
          "softmax_forward only accepts attention_edges interventions");
  }

  const std::size_t T = params.seq_len;
  const std::size_t H = params.n_heads;
  const std::size_t C = params.head_dim;
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(C));

  SoftmaxForward fwd;
  fwd.seq_len = T;
  fwd.n_heads = H;
  fwd.attention.assign(H * T * T, 0.0);
  fwd.outputs.seq_len = T;
  fwd.outputs.n_heads = H;
  fwd.outputs.head_dim = C;
  fwd.outputs.o.assign(T * H * C, 0.0);

  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> logits(t + 1);
      for (std::size_t j = 0; j <= t; ++j) {
        double dot = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          dot += params.q[params.index(t, h, c)] * params.k[params.index(j, h, c)];
        }
        logits[j] = dot * inv_sqrt_d;
      }
      const std::vector<double> row = softmax(logits);
      for (std::size_t j = 0; j <= t; ++j) {
        fwd.attention[fwd.index(h, t, j)] = row[j];
      }
    }
  }

  if (intervention && intervention->scale != 1.0) {
    if (intervention->scale < 0.0) {
      raise(ErrorKind::domain, "intervention scale must be non-negative");
    }
    const auto markers = position_mask(intervention->positions, T);
    const auto targets = intervention->edge_targets.empty()
                             ? std::vector<bool>{}
                             : position_mask(intervention->edge_targets, T);
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t t = 0; t < T; ++t) {
        bool affected = false;
        for (std::size_t j = 0; j <= t; ++j) {
          bool hit;
          if (targets.empty()) {
            hit = markers[j];  // all-edge: every edge into a marker column
          } else {
            hit = markers[t] && targets[j];  // marker row -> target column
          }
          if (hit) {
            fwd.attention[fwd.index(h, t, j)] *= intervention->scale;
            affected = true;
          }
        }
        if (!affected) continue;
        double row_sum = 0.0;
        for (std::size_t j = 0; j <= t; ++j) row_sum += fwd.attention[fwd.index(h, t, j)];
        if (row_sum <= 0.0) {
          raise(ErrorKind::degenerate,
                "knockout drove attention row " + std::to_string(t) +
                    " to zero; nothing to renormalize");
        }
        for (std::size_t j = 0; j <= t; ++j) fwd.attention[fwd.index(h, t, j)] /= row_sum;
      }
    }
  }

  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t j = 0; j <= t; ++j) {
          acc += fwd.attention[fwd.index(h, t, j)] * params.v[params.index(j, h, c)];
        }
        fwd.outputs.o[fwd.outputs.index(t, h, c)] = acc;
      }
    }
  }
  return fwd;
}

double marker_function_attention(
    const std::vector<double>& normalized, std::size_t seq_len,
    const std::vector<std::size_t>& marker_positions,
    const std::vector<std::size_t>& function_positions) {
  if (normalized.size() != seq_len * seq_len) {
    raise(ErrorKind::shape, "expected one T x T attention matrix");
  }
  if (marker_positions.empty() || function_positions.empty()) {
    raise(ErrorKind::domain, "marker and function position sets must be non-empty");
  }
  std::set<std::size_t> markers(marker_positions.begin(), marker_positions.end());
  for (std::size_t f : function_positions) {
    if (markers.count(f) != 0) {
      raise(ErrorKind::domain, "marker and function positions must be disjoint");
    }
  }
  // Per marker row: total attention mass on the function-column set; the
  // result is the mean of that mass over markers, as a percentage.
  double sum = 0.0;
  for (std::size_t m : marker_positions) {
    for (std::size_t f : function_positions) {
      if (m >= seq_len || f >= seq_len) {
        raise(ErrorKind::domain, "position out of range");
      }
      sum += normalized[m * seq_len + f];
    }
  }
  return 100.0 * sum / static_cast<double>(marker_positions.size());
}

ReadoutProbe ReadoutProbe::seeded(std::uint64_t seed, std::size_t n_outputs,
                                  std::size_t input_dim) {
  if (n_outputs == 0 || input_dim == 0) {
    raise(ErrorKind::shape, "probe dimensions must be positive");
  }
  ReadoutProbe probe;
  probe.n_outputs = n_outputs;
  probe.input_dim = input_dim;
  probe.weights.resize(n_outputs * input_dim);
  std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (double& w : probe.weights) w = gauss(rng);
  return probe;
}

std::vector<double> ReadoutProbe::distribution(const WkvOutputs& outputs,
                                               std::size_t position) const {
  const std::size_t dim = outputs.n_heads * outputs.head_dim;
  if (dim != input_dim) {
    raise(ErrorKind::shape, "probe input_dim does not match outputs");
  }
  if (position >= outputs.seq_len) {
    raise(ErrorKind::domain, "probe position out of range");
  }
  std::vector<double> logits(n_outputs, 0.0);
  for (std::size_t row = 0; row < n_outputs; ++row) {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      acc += weights[row * input_dim + i] * outputs.o[position * dim + i];
    }
    logits[row] = acc;
  }
  return softmax(logits);
}

std::vector<DosePoint> dose_response(const WkvParams& params,
                                     const std::vector<std::size_t>& positions,
                                     const std::vector<double>& scales,
                                     const ReadoutProbe& probe) {
  if (std::find(scales.begin(), scales.end(), 1.0) == scales.end()) {
    raise(ErrorKind::precondition, "dose_response scales must include 1.0");
  }
  const WkvOutputs baseline = wkv_forward(params);
  const std::size_t final_pos = params.seq_len - 1;
  const stats::Distribution base_dist{probe.distribution(baseline, final_pos)};

  std::vector<DosePoint> curve;
  curve.reserve(scales.size());
  for (double scale : scales) {
    InterventionSpec spec;
    spec.positions = positions;
    spec.scale = scale;
    spec.target = InterventionTarget::state_write;
    const WkvOutputs steered = wkv_forward(params, spec);
    const stats::Distribution steered_dist{
        probe.distribution(steered, final_pos)};
    const stats::KlResult kl = stats::kl_divergence(base_dist, steered_dist);
    curve.push_back({scale, kl.nats});
  }
  return curve;
}

}  // namespace sega::mechanism
