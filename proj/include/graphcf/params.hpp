#ifndef GRAPHCF_PARAMS_HPP
#define GRAPHCF_PARAMS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "graphcf/types.hpp"

namespace graphcf {

enum class ModelKind {
  MF,
  SVDPP,
  WSVDPP,
  ASVDPP,
  GCF,
  WGCF,
  AGCF,
  AGCF2,
};

ModelKind parse_model_kind(const std::string& name);
const char* model_kind_name(ModelKind kind);
// "mf svdpp w-svdpp ..." for error messages and --help
std::string model_kind_list();

// Which aggregates enter the prediction for a given kind.
enum class AggMode { None, Uniform, Weighted, Attentive };

AggMode user_agg_mode(ModelKind kind);
AggMode item_agg_mode(ModelKind kind);
inline bool has_user_feedback(ModelKind k) { return user_agg_mode(k) != AggMode::None; }
inline bool has_item_feedback(ModelKind k) { return item_agg_mode(k) != AggMode::None; }
inline bool has_weights(ModelKind k) {
  return k == ModelKind::WSVDPP || k == ModelKind::WGCF;
}
inline bool has_attention(ModelKind k) {
  return k == ModelKind::ASVDPP || k == ModelKind::AGCF || k == ModelKind::AGCF2;
}
inline bool has_step_two(ModelKind k) { return k == ModelKind::AGCF2; }

enum class ScaleKind { Logistic, Clamp };
enum class NormMode { SampledWidth, TrueDegree };

struct AttentionConfig {
  double temperature = 0.1;
  std::vector<int> hidden = {32};

  friend bool operator==(const AttentionConfig&, const AttentionConfig&) = default;
};

struct EmbeddingTable {
  Id rows = 0;
  int dim = 0;
  std::vector<double> data;  // rows * dim, row-major

  bool empty() const { return data.empty(); }
  std::span<double> row(Id r) {
    return {data.data() + static_cast<std::size_t>(r) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> row(Id r) const {
    return {data.data() + static_cast<std::size_t>(r) * dim,
            static_cast<std::size_t>(dim)};
  }
  // Feedback entries may be kPad; the pad embedding lives in the last row.
  Id index_of(Id entry) const { return entry == kPad ? rows - 1 : entry; }
  std::span<const double> row_for(Id entry) const { return row(index_of(entry)); }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;
};

struct MlpLayer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // out * in, row-major
  std::vector<double> b;  // out

  friend bool operator==(const MlpLayer&, const MlpLayer&) = default;
};

// ReLU hidden layers, linear scalar output.
struct MlpParams {
  std::vector<MlpLayer> layers;

  bool empty() const { return layers.empty(); }
  int input_width() const { return layers.empty() ? 0 : layers.front().in; }

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

// All zero weights/biases; widths = input -> hidden... -> 1.
MlpParams make_mlp(int input_width, std::span<const int> hidden);

// Everything the prediction functions need besides the learned values.
struct ModelSpec {
  ModelKind kind = ModelKind::MF;
  int factors = 16;           // K
  int feedback_factors = 16;  // K', must equal K (aggregates add to p_u/q_i)
  int feedback_width = 20;    // k
  ScaleKind scale_kind = ScaleKind::Logistic;
  NormMode norm_mode = NormMode::SampledWidth;
  bool mask_pad = false;
  AttentionConfig attention;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct ModelParams {
  ModelSpec spec;
  Id n_users = 0;
  Id n_items = 0;

  // Tables carry one extra trailing row holding the pad embedding.
  EmbeddingTable P;   // (n_users + 1) x K
  EmbeddingTable Q;   // (n_items + 1) x K
  EmbeddingTable Y;   // (n_items + 1) x K', step-one user feedback
  EmbeddingTable X;   // (n_users + 1) x K', step-one item feedback
  EmbeddingTable Y2;  // (n_users + 1) x K', step-two user feedback
  EmbeddingTable X2;  // (n_items + 1) x K', step-two item feedback

  std::vector<double> b_user;
  std::vector<double> b_item;
  double b_global = 0.0;

  EmbeddingTable alpha;  // (n_users + 1) x K', weight factors
  EmbeddingTable beta;   // (n_items + 1) x K'

  MlpParams attn_user, attn_item;    // step-one attention
  MlpParams attn_user2, attn_item2;  // step-two attention (not shared)

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Allocates exactly the blocks the kind uses; embeddings and MLP weights drawn
// from U(-0.1, 0.1), biases zero. Weight factors (alpha/beta) are shifted so
// the pair weight starts at the uniform k^-1/2. Deterministic in seed.
ModelParams init_params(const ModelSpec& spec, Id n_users, Id n_items,
                        std::uint64_t seed);

// Overwrites every allocated block, biases and attention nets included, with
// draws from U(-half_width, half_width). For gradient checks and property
// tests that need parameters away from the near-zero init.
void randomize_params(ModelParams& params, double half_width,
                      std::uint64_t seed);

// Throws Error(Config) if a block the kind needs is missing or mis-shaped.
void validate_params(const ModelParams& params);

// Binary snapshot: fixed header plus raw little-endian doubles per block.
void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

}  // namespace graphcf

#endif
