#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tagqa/featurizer.hpp"
#include "tagqa/graph.hpp"
#include "tagqa/tensor.hpp"

namespace tagqa {

struct GatConfig {
  int layers = 3;
  int dim = 200;       // node state width D
  int msg_dim = 200;   // message / query / key width N
  int type_dim = 40;   // relation feature width T; node-type features are T/2
  double dropout = 0.2;
  int top_rows = 3;
  int top_cols = 3;

  void validate() const;
  int node_type_dim() const { return type_dim / 2; }
  int input_dim() const { return dim + node_type_dim() + type_dim; }
  friend bool operator==(const GatConfig&, const GatConfig&) = default;
};

/// One-hot (relation, source kind, target kind) has this many entries.
inline constexpr int kRelationInputDim = kNumRelations + 2 * kNumNodeKinds;
inline constexpr int kNumRelationCombos = kNumRelations * kNumNodeKinds * kNumNodeKinds;

inline int relation_combo(RelationKind rel, NodeKind src, NodeKind dst) {
  return (static_cast<int>(rel) * kNumNodeKinds + static_cast<int>(src)) * kNumNodeKinds + static_cast<int>(dst);
}

struct GatLayerParams {
  Mat node_type;  // (T/2) x kinds; column k is u for kind k
  Mat rel_w1;     // T x 12
  Vec rel_b1;
  Mat rel_w2;     // T x T
  Vec rel_b2;
  Mat msg_w;      // N x (D + T/2 + T), f_m
  Vec msg_b;
  Mat query_w;    // N x (D + T/2 + T), g_q
  Vec query_b;
  Mat key_w;      // N x (D + T/2 + T), g_k
  Vec key_b;
  Mat upd_w1;     // D x N, first layer of f_g
  Vec upd_b1;
  Vec bn_gamma;
  Vec bn_beta;
  Mat upd_w2;     // D x D, output layer of f_g
  Vec upd_b2;
};

/// Every trainable tensor: the token embedding table, the attention layers
/// and the two scoring heads.
struct GatParams {
  Mat embedding;  // V x D
  std::vector<GatLayerParams> layers;
  Vec row_head_w;
  Vec row_head_b;  // size 1
  Vec col_head_w;
  Vec col_head_b;  // size 1

  /// Fixed order; names are stable and used by the checkpoint format.
  std::vector<TensorRef> tensors();
  std::vector<ConstTensorRef> tensors() const;
  std::size_t num_parameters() const;

  /// Same shapes, all zeros.
  GatParams zeros_like() const;
  friend bool operator==(const GatParams& a, const GatParams& b);
};

struct BatchNormStats {
  Vec mean;
  Vec var;
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

struct GatModel {
  GatConfig config;
  GatParams params;
  std::vector<BatchNormStats> running;  // one per layer; used in eval mode
};

GatModel init_model(const GatConfig& config, std::size_t vocab_size, std::uint64_t seed);

/// Incoming edges per target, self loop included, in CSR layout.
struct MessageGraph {
  std::vector<std::size_t> offsets;  // size n+1
  std::vector<NodeId> sources;
  std::vector<int> combos;
  std::vector<int> kinds;            // per node
  std::vector<NodeId> row_headers;
  std::vector<NodeId> column_headers;

  std::size_t num_nodes() const { return kinds.size(); }
};

MessageGraph message_graph(const TableGraph& graph);

enum class Mode { Train, Eval };

struct LayerCache {
  Mat input;            // H^{l-1}
  Mat mh, qh, kh;       // per-node projections
  Mat mu, qu, ku;       // per-kind projections (kinds x N)
  Mat rel_pre;          // combos x T before ReLU
  Mat rel;              // combos x T, r
  Mat mr, qr, kr;       // per-combo projections
  std::vector<double> alpha;  // aligned with MessageGraph::sources
  Mat agg;              // sum_s alpha m
  Mat z1;               // before batch norm
  Mat xhat;
  Vec inv_std;
  Vec batch_mean, batch_var;
  Mat y;                // after affine batch norm, before ReLU
  Mat a;
  Mat dropout_mask;     // empty when unused
};

struct GatOutput {
  Vec row_logits;
  Vec col_logits;
  Mat states;  // final node states
  std::vector<LayerCache> cache;
  Mode mode = Mode::Eval;
};

class NonFiniteError : public Error {
 public:
  NonFiniteError(int layer, const std::string& what);
  int layer() const { return layer_; }

 private:
  int layer_;
};

/// `rng` drives dropout and is only required in train mode with dropout > 0.
GatOutput gat_forward(const GatModel& model, const MessageGraph& graph, const Mat& features, Mode mode,
                      std::mt19937_64* rng = nullptr);

/// Mean BCE over rows plus mean BCE over columns.
double selection_loss(const Vec& row_logits, const Vec& col_logits, const std::vector<bool>& row_labels,
                      const std::vector<bool>& col_labels);

struct LossGrad {
  double loss;
  Vec d_row;
  Vec d_col;
};
LossGrad selection_loss_grad(const Vec& row_logits, const Vec& col_logits, const std::vector<bool>& row_labels,
                             const std::vector<bool>& col_labels);

/// Backpropagates logit gradients through a cached forward pass. The
/// returned d_features is d(loss)/d(input features).
struct Backward {
  GatParams grads;
  Mat d_features;
};
Backward gat_backward(const GatModel& model, const MessageGraph& graph, const GatOutput& out, const Vec& d_row,
                      const Vec& d_col);

struct GradientResult {
  double loss;
  GatParams grads;
  GatOutput output;
};

/// Loss and exact gradients for every parameter, embedding table included.
GradientResult compute_gradients(const GatModel& model, const MessageGraph& graph, const NodeTokens& tokens,
                                 const std::vector<bool>& row_labels, const std::vector<bool>& col_labels,
                                 Mode mode = Mode::Train, std::mt19937_64* rng = nullptr);

/// Folds the batch statistics of a train-mode pass into the running stats.
void update_running_stats(GatModel& model, const GatOutput& out);

}  // namespace tagqa
