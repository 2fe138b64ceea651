#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace sega::mechanism {

// Streams are stored flat as [position][head][channel].
struct WkvParams {
  std::size_t seq_len = 0;
  std::size_t n_heads = 0;
  std::size_t head_dim = 0;
  std::vector<double> r;  // receptance
  std::vector<double> k;  // key
  std::vector<double> v;  // value
  std::vector<double> w;  // per-channel decay exponents, all > 0

  std::size_t index(std::size_t t, std::size_t h, std::size_t c) const {
    return (t * n_heads + h) * head_dim + c;
  }
};

struct ToyAttentionParams {
  std::size_t seq_len = 0;
  std::size_t n_heads = 0;
  std::size_t head_dim = 0;
  std::vector<double> q;
  std::vector<double> k;
  std::vector<double> v;

  std::size_t index(std::size_t t, std::size_t h, std::size_t c) const {
    return (t * n_heads + h) * head_dim + c;
  }
};

enum class InterventionTarget { state_write, attention_edges };

// scale 1.0 is the identity, scale 0.0 is knockout, scale > 1.0 steers.
struct InterventionSpec {
  std::vector<std::size_t> positions;
  double scale = 1.0;
  InterventionTarget target = InterventionTarget::state_write;
  // Attention-edge scope: columns the marker rows' edges point at. Empty
  // means all-edge mode, which scales every edge into the marker positions
  // (column j for rows t >= j), making the position invisible at scale 0.
  std::vector<std::size_t> edge_targets;
};

struct WkvOutputs {
  std::size_t seq_len = 0;
  std::size_t n_heads = 0;
  std::size_t head_dim = 0;
  std::vector<double> o;  // [position][head][channel]

  std::size_t index(std::size_t t, std::size_t h, std::size_t c) const {
    return (t * n_heads + h) * head_dim + c;
  }
};

// Per-head T x T matrices; entries with j > t are structurally zero.
struct EffectiveAttention {
  std::size_t seq_len = 0;
  std::size_t n_heads = 0;
  std::vector<double> raw;
  std::vector<double> rectified;
  std::vector<double> normalized;

  std::size_t index(std::size_t h, std::size_t t, std::size_t j) const {
    return (h * seq_len + t) * seq_len + j;
  }
};

struct SoftmaxForward {
  std::size_t seq_len = 0;
  std::size_t n_heads = 0;
  std::vector<double> attention;  // [head][row][col], rows sum to 1
  WkvOutputs outputs;

  std::size_t index(std::size_t h, std::size_t t, std::size_t j) const {
    return (h * seq_len + t) * seq_len + j;
  }
};

struct DosePoint {
  double scale = 0.0;
  double kl_nats = 0.0;
};

// Fixed random linear readout mapping a position's output to a probability
// distribution via softmax; the measurement probe for dose-response curves.
struct ReadoutProbe {
  std::size_t n_outputs = 0;
  std::size_t input_dim = 0;
  std::vector<double> weights;  // [n_outputs][input_dim]

  static ReadoutProbe seeded(std::uint64_t seed, std::size_t n_outputs,
                             std::size_t input_dim);
  std::vector<double> distribution(const WkvOutputs& outputs,
                                   std::size_t position) const;
};

// Toy-scale synthetic instances. Limits: T <= 64, heads <= 4, head_dim <= 16.
WkvParams random_wkv(std::uint64_t seed, std::size_t seq_len,
                     std::size_t n_heads, std::size_t head_dim);
ToyAttentionParams random_toy(std::uint64_t seed, std::size_t seq_len,
                              std::size_t n_heads, std::size_t head_dim);

void validate(const WkvParams& params);

// State recurrence S_t = scale_t (k_t x v_t) + exp(-w_t) . S_{t-1},
// o_t = r_t . S_t, with S_0 = 0. The optional intervention applies its scale
// to the kv write at the listed positions.
WkvOutputs wkv_forward(const WkvParams& params,
                       const std::optional<InterventionSpec>& intervention = {});

// Cumulative per-channel decay D(t, j) = prod_{tau=j+1..t} exp(-w_tau),
// returned as a [head][channel] flat vector. D(t, t) is the empty product 1.
std::vector<double> cumulative_decay(const WkvParams& params, std::size_t t,
                                     std::size_t j);

// raw[t][j] = sum_c r_t[c] D(t,j)[c] k_j[c]; rectified = max(0, raw);
// normalized = row-wise L1 with all-non-positive rows left all-zero.
EffectiveAttention effective_attention(const WkvParams& params);

// Causal softmax attention with optional post-softmax edge interventions;
// affected rows are renormalized to sum 1.
SoftmaxForward softmax_forward(
    const ToyAttentionParams& params,
    const std::optional<InterventionSpec>& intervention = {});

// Mean attention mass on (marker row, function column) pairs, as a percent.
double marker_function_attention(const std::vector<double>& normalized,
                                 std::size_t seq_len,
                                 const std::vector<std::size_t>& marker_positions,
                                 const std::vector<std::size_t>& function_positions);

// KL divergence from the baseline probe distribution at the final position,
// one point per scale. Scales must include the identity 1.0.
std::vector<DosePoint> dose_response(const WkvParams& params,
                                     const std::vector<std::size_t>& positions,
                                     const std::vector<double>& scales,
                                     const ReadoutProbe& probe);

}  // namespace sega::mechanism
