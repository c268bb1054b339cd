#include "tagqa/gat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tagqa {

void GatConfig::validate() const {
  if (layers < 1) throw Error("GAT needs at least one layer");
  if (dim <= 0 || msg_dim <= 0 || type_dim <= 0) throw Error("GAT widths must be positive");
  if (type_dim % 2 != 0) throw Error("relation width T must be even");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("dropout must lie in [0, 1)");
  if (top_rows < 1 || top_cols < 1) throw Error("top-k values must be positive");
}

namespace {

template <class Ref, class Params>
std::vector<Ref> collect(Params& p) {
  std::vector<Ref> out;
  auto add = [&](const std::string& name, auto& m) { out.push_back(Ref{name, m.data(), m.rows(), m.cols()}); };
  add("embedding", p.embedding);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& L = p.layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    add(pre + "node_type", L.node_type);
    add(pre + "rel_w1", L.rel_w1);
    add(pre + "rel_b1", L.rel_b1);
    add(pre + "rel_w2", L.rel_w2);
    add(pre + "rel_b2", L.rel_b2);
    add(pre + "msg_w", L.msg_w);
    add(pre + "msg_b", L.msg_b);
    add(pre + "query_w", L.query_w);
    add(pre + "query_b", L.query_b);
    add(pre + "key_w", L.key_w);
    add(pre + "key_b", L.key_b);
    add(pre + "upd_w1", L.upd_w1);
    add(pre + "upd_b1", L.upd_b1);
    add(pre + "bn_gamma", L.bn_gamma);
    add(pre + "bn_beta", L.bn_beta);
    add(pre + "upd_w2", L.upd_w2);
    add(pre + "upd_b2", L.upd_b2);
  }
  add("row_head_w", p.row_head_w);
  add("row_head_b", p.row_head_b);
  add("col_head_w", p.col_head_w);
  add("col_head_b", p.col_head_b);
  return out;
}

void check_finite(const Mat& m, int layer, const char* what) {
  if (!m.allFinite()) throw NonFiniteError(layer, what);
}

Mat glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::vector<TensorRef> GatParams::tensors() { return collect<TensorRef>(*this); }
std::vector<ConstTensorRef> GatParams::tensors() const { return collect<ConstTensorRef>(*this); }

std::size_t GatParams::num_parameters() const {
  std::size_t n = 0;
  for (const auto& t : tensors()) n += static_cast<std::size_t>(t.size());
  return n;
}

GatParams GatParams::zeros_like() const {
  GatParams z = *this;
  for (auto& t : z.tensors()) std::fill(t.data, t.data + t.size(), 0.0);
  return z;
}

bool operator==(const GatParams& a, const GatParams& b) {
  auto ta = a.tensors();
  auto tb = b.tensors();
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].name != tb[i].name || ta[i].rows != tb[i].rows || ta[i].cols != tb[i].cols) return false;
    if (!std::equal(ta[i].data, ta[i].data + ta[i].size(), tb[i].data)) return false;
  }
  return true;
}

NonFiniteError::NonFiniteError(int layer, const std::string& what)
    : Error("non-finite value in " + what + " at layer " + std::to_string(layer)), layer_(layer) {}

GatModel init_model(const GatConfig& config, std::size_t vocab_size, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  GatModel m;
  m.config = config;
  const int D = config.dim, N = config.msg_dim, T = config.type_dim, U = config.node_type_dim();
  const int in = config.input_dim();
  m.params.embedding = init_embedding(vocab_size, D, rng);
  for (int l = 0; l < config.layers; ++l) {
    GatLayerParams L;
    L.node_type = glorot(U, kNumNodeKinds, rng);
    L.rel_w1 = glorot(T, kRelationInputDim, rng);
    L.rel_b1 = Vec::Zero(T);
    L.rel_w2 = glorot(T, T, rng);
    L.rel_b2 = Vec::Zero(T);
    L.msg_w = glorot(N, in, rng);
    L.msg_b = Vec::Zero(N);
    L.query_w = glorot(N, in, rng);
    L.query_b = Vec::Zero(N);
    L.key_w = glorot(N, in, rng);
    L.key_b = Vec::Zero(N);
    L.upd_w1 = glorot(D, N, rng);
    L.upd_b1 = Vec::Zero(D);
    L.bn_gamma = Vec::Ones(D);
    L.bn_beta = Vec::Zero(D);
    L.upd_w2 = glorot(D, D, rng);
    L.upd_b2 = Vec::Zero(D);
    m.params.layers.push_back(std::move(L));
    m.running.push_back({Vec::Zero(D), Vec::Ones(D)});
  }
  m.params.row_head_w = glorot(D, 1, rng);
  m.params.row_head_b = Vec::Zero(1);
  m.params.col_head_w = glorot(D, 1, rng);
  m.params.col_head_b = Vec::Zero(1);
  return m;
}

MessageGraph message_graph(const TableGraph& graph) {
  MessageGraph mg;
  const std::size_t n = graph.num_nodes();
  mg.kinds.reserve(n);
  for (const auto& node : graph.nodes()) mg.kinds.push_back(static_cast<int>(node.kind));
  mg.offsets.reserve(n + 1);
  mg.offsets.push_back(0);
  for (NodeId t = 0; t < n; ++t) {
    const auto tk = static_cast<NodeKind>(mg.kinds[t]);
    for (const auto& nb : graph.neighborhood(t)) {
      mg.sources.push_back(nb.id);
      mg.combos.push_back(relation_combo(nb.relation, static_cast<NodeKind>(mg.kinds[nb.id]), tk));
    }
    mg.sources.push_back(t);
    mg.combos.push_back(relation_combo(RelationKind::SelfLoop, tk, tk));
    mg.offsets.push_back(mg.sources.size());
  }
  mg.row_headers = graph.row_headers();
  mg.column_headers = graph.column_headers();
  return mg;
}

namespace {

/// One-hot (relation, source kind, target kind) for every combo.
const Mat& relation_inputs() {
  static const Mat x = [] {
    Mat m = Mat::Zero(kNumRelationCombos, kRelationInputDim);
    for (int r = 0; r < kNumRelations; ++r)
      for (int s = 0; s < kNumNodeKinds; ++s)
        for (int t = 0; t < kNumNodeKinds; ++t) {
          int c = relation_combo(static_cast<RelationKind>(r), static_cast<NodeKind>(s), static_cast<NodeKind>(t));
          m(c, r) = 1.0;
          m(c, kNumRelations + s) = 1.0;
          m(c, kNumRelations + kNumNodeKinds + t) = 1.0;
        }
    return m;
  }();
  return x;
}

struct Blocks {
  Eigen::Index d, u, t;
};

}  // namespace

GatOutput gat_forward(const GatModel& model, const MessageGraph& graph, const Mat& features, Mode mode,
                      std::mt19937_64* rng) {
  const auto& cfg = model.config;
  const Eigen::Index n = static_cast<Eigen::Index>(graph.num_nodes());
  if (features.rows() != n || features.cols() != cfg.dim)
    throw Error("feature matrix is " + std::to_string(features.rows()) + "x" + std::to_string(features.cols()) +
                ", expected " + std::to_string(n) + "x" + std::to_string(cfg.dim));
  const bool use_dropout = mode == Mode::Train && cfg.dropout > 0.0;
  if (use_dropout && rng == nullptr) throw Error("train-mode dropout needs a random generator");

  const Blocks b{cfg.dim, cfg.node_type_dim(), cfg.type_dim};
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.msg_dim));

  GatOutput out;
  out.mode = mode;
  Mat h = features;
  for (int l = 0; l < cfg.layers; ++l) {
    const auto& P = model.params.layers[static_cast<std::size_t>(l)];
    LayerCache c;
    c.input = h;

    c.mh = h * P.msg_w.leftCols(b.d).transpose();
    c.qh = h * P.query_w.leftCols(b.d).transpose();
    c.kh = h * P.key_w.leftCols(b.d).transpose();

    const Mat ut = P.node_type.transpose();  // kinds x U
    c.mu = ut * P.msg_w.middleCols(b.d, b.u).transpose();
    c.qu = ut * P.query_w.middleCols(b.d, b.u).transpose();
    c.ku = ut * P.key_w.middleCols(b.d, b.u).transpose();

    c.rel_pre = (relation_inputs() * P.rel_w1.transpose()).rowwise() + P.rel_b1.transpose();
    c.rel = (c.rel_pre.cwiseMax(0.0) * P.rel_w2.transpose()).rowwise() + P.rel_b2.transpose();
    c.mr = c.rel * P.msg_w.rightCols(b.t).transpose();
    c.qr = c.rel * P.query_w.rightCols(b.t).transpose();
    c.kr = c.rel * P.key_w.rightCols(b.t).transpose();

    c.alpha.assign(graph.sources.size(), 0.0);
    c.agg = Mat::Zero(n, cfg.msg_dim);
    std::vector<double> gamma;
    for (Eigen::Index t = 0; t < n; ++t) {
      const std::size_t begin = graph.offsets[static_cast<std::size_t>(t)];
      const std::size_t end = graph.offsets[static_cast<std::size_t>(t) + 1];
      const int kt = graph.kinds[static_cast<std::size_t>(t)];
      gamma.assign(end - begin, 0.0);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t e = begin; e < end; ++e) {
        const auto s = static_cast<Eigen::Index>(graph.sources[e]);
        const int ks = graph.kinds[static_cast<std::size_t>(s)];
        const int cb = graph.combos[e];
        Vec q = c.qh.row(s).transpose() + c.qu.row(ks).transpose() + c.qr.row(cb).transpose() + P.query_b;
        Vec k = c.kh.row(t).transpose() + c.ku.row(kt).transpose() + c.kr.row(cb).transpose() + P.key_b;
        gamma[e - begin] = q.dot(k) * scale;
        mx = std::max(mx, gamma[e - begin]);
      }
      double z = 0.0;
      for (std::size_t e = begin; e < end; ++e) z += std::exp(gamma[e - begin] - mx);
      for (std::size_t e = begin; e < end; ++e) {
        const double a = std::exp(gamma[e - begin] - mx) / z;
        c.alpha[e] = a;
        const auto s = static_cast<Eigen::Index>(graph.sources[e]);
        const int ks = graph.kinds[static_cast<std::size_t>(s)];
        const int cb = graph.combos[e];
        c.agg.row(t) += a * (c.mh.row(s) + c.mu.row(ks) + c.mr.row(cb) + P.msg_b.transpose());
      }
    }
    check_finite(c.agg, l, "attention aggregate");

    c.z1 = (c.agg * P.upd_w1.transpose()).rowwise() + P.upd_b1.transpose();
    if (mode == Mode::Train) {
      c.batch_mean = c.z1.colwise().mean().transpose();
      c.batch_var = (c.z1.rowwise() - c.batch_mean.transpose()).array().square().colwise().mean().transpose();
      c.inv_std = (c.batch_var.array() + kBatchNormEps).rsqrt().matrix();
      c.xhat = (c.z1.rowwise() - c.batch_mean.transpose()).array().rowwise() * c.inv_std.transpose().array();
    } else {
      const auto& rs = model.running[static_cast<std::size_t>(l)];
      c.inv_std = (rs.var.array() + kBatchNormEps).rsqrt().matrix();
      c.xhat = (c.z1.rowwise() - rs.mean.transpose()).array().rowwise() * c.inv_std.transpose().array();
    }
    c.y = (c.xhat.array().rowwise() * P.bn_gamma.transpose().array()).matrix().rowwise() + P.bn_beta.transpose();
    c.a = c.y.cwiseMax(0.0);
    Mat next = ((c.a * P.upd_w2.transpose()).rowwise() + P.upd_b2.transpose()) + h;
    if (use_dropout && l + 1 < cfg.layers) {
      std::bernoulli_distribution keep(1.0 - cfg.dropout);
      c.dropout_mask.resize(n, cfg.dim);
      const double inv_keep = 1.0 / (1.0 - cfg.dropout);
      for (Eigen::Index i = 0; i < c.dropout_mask.size(); ++i) c.dropout_mask.data()[i] = keep(*rng) ? inv_keep : 0.0;
      next = next.cwiseProduct(c.dropout_mask);
    }
    check_finite(next, l, "node states");
    h = std::move(next);
    out.cache.push_back(std::move(c));
  }

  const auto& p = model.params;
  out.row_logits.resize(static_cast<Eigen::Index>(graph.row_headers.size()));
  for (std::size_t i = 0; i < graph.row_headers.size(); ++i)
    out.row_logits(static_cast<Eigen::Index>(i)) =
        h.row(static_cast<Eigen::Index>(graph.row_headers[i])).dot(p.row_head_w) + p.row_head_b(0);
  out.col_logits.resize(static_cast<Eigen::Index>(graph.column_headers.size()));
  for (std::size_t j = 0; j < graph.column_headers.size(); ++j)
    out.col_logits(static_cast<Eigen::Index>(j)) =
        h.row(static_cast<Eigen::Index>(graph.column_headers[j])).dot(p.col_head_w) + p.col_head_b(0);
  out.states = std::move(h);
  return out;
}

double selection_loss(const Vec& row_logits, const Vec& col_logits, const std::vector<bool>& row_labels,
                      const std::vector<bool>& col_labels) {
  return selection_loss_grad(row_logits, col_logits, row_labels, col_labels).loss;
}

LossGrad selection_loss_grad(const Vec& row_logits, const Vec& col_logits, const std::vector<bool>& row_labels,
                             const std::vector<bool>& col_labels) {
  if (static_cast<std::size_t>(row_logits.size()) != row_labels.size() ||
      static_cast<std::size_t>(col_logits.size()) != col_labels.size())
    throw Error("logit and label lengths differ");
  if (row_labels.empty() || col_labels.empty()) throw Error("selection loss needs at least one row and column");
  LossGrad g{0.0, Vec::Zero(row_logits.size()), Vec::Zero(col_logits.size())};
  auto term = [&](const Vec& logits, const std::vector<bool>& labels, Vec& grad) {
    const double inv = 1.0 / static_cast<double>(labels.size());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      const double x = logits(i);
      const double y = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
      sum -= y * log_sigmoid(x) + (1.0 - y) * log_sigmoid(-x);
      grad(i) = (sigmoid(x) - y) * inv;
    }
    return sum * inv;
  };
  g.loss = term(row_logits, row_labels, g.d_row) + term(col_logits, col_labels, g.d_col);
  return g;
}

Backward gat_backward(const GatModel& model, const MessageGraph& graph, const GatOutput& out, const Vec& d_row,
                      const Vec& d_col) {
  const auto& cfg = model.config;
  const auto& p = model.params;
  const Eigen::Index n = static_cast<Eigen::Index>(graph.num_nodes());
  const Blocks b{cfg.dim, cfg.node_type_dim(), cfg.type_dim};
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.msg_dim));

  Backward res{p.zeros_like(), Mat()};
  GatParams& g = res.grads;
  g.embedding.resize(0, 0);  // filled by the caller via the featurizer

  Mat dh = Mat::Zero(n, cfg.dim);
  for (std::size_t i = 0; i < graph.row_headers.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(graph.row_headers[i]);
    const double d = d_row(static_cast<Eigen::Index>(i));
    dh.row(r) += d * p.row_head_w.transpose();
    g.row_head_w += d * out.states.row(r).transpose();
    g.row_head_b(0) += d;
  }
  for (std::size_t j = 0; j < graph.column_headers.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(graph.column_headers[j]);
    const double d = d_col(static_cast<Eigen::Index>(j));
    dh.row(r) += d * p.col_head_w.transpose();
    g.col_head_w += d * out.states.row(r).transpose();
    g.col_head_b(0) += d;
  }

  for (int l = cfg.layers - 1; l >= 0; --l) {
    const auto& P = p.layers[static_cast<std::size_t>(l)];
    auto& G = g.layers[static_cast<std::size_t>(l)];
    const auto& c = out.cache[static_cast<std::size_t>(l)];

    Mat dnext = c.dropout_mask.size() ? Mat(dh.cwiseProduct(c.dropout_mask)) : dh;
    Mat dprev = dnext;  // residual

    // f_g output layer
    G.upd_w2 += dnext.transpose() * c.a;
    G.upd_b2 += dnext.colwise().sum().transpose();
    Mat dy = (dnext * P.upd_w2).cwiseProduct((c.y.array() > 0.0).cast<double>().matrix());
    G.bn_gamma += dy.cwiseProduct(c.xhat).colwise().sum().transpose();
    G.bn_beta += dy.colwise().sum().transpose();
    Mat dxhat = dy.array().rowwise() * P.bn_gamma.transpose().array();
    Mat dz1;
    if (out.mode == Mode::Train) {
      const double inv_n = 1.0 / static_cast<double>(n);
      Eigen::RowVectorXd sum_dx = dxhat.colwise().sum();
      Eigen::RowVectorXd sum_dx_x = dxhat.cwiseProduct(c.xhat).colwise().sum();
      Mat centered = (dxhat * static_cast<double>(n)).rowwise() - sum_dx;
      centered -= (c.xhat.array().rowwise() * sum_dx_x.array()).matrix();
      dz1 = (centered.array().rowwise() * (c.inv_std.transpose().array() * inv_n)).matrix();
    } else {
      dz1 = dxhat.array().rowwise() * c.inv_std.transpose().array();
    }
    G.upd_w1 += dz1.transpose() * c.agg;
    G.upd_b1 += dz1.colwise().sum().transpose();
    Mat dagg = dz1 * P.upd_w1;

    // attention
    Mat dmh = Mat::Zero(n, cfg.msg_dim), dqh = Mat::Zero(n, cfg.msg_dim), dkh = Mat::Zero(n, cfg.msg_dim);
    Mat dmu = Mat::Zero(kNumNodeKinds, cfg.msg_dim), dqu = dmu, dku = dmu;
    Mat dmr = Mat::Zero(kNumRelationCombos, cfg.msg_dim), dqr = dmr, dkr = dmr;
    std::vector<double> dalpha;
    for (Eigen::Index t = 0; t < n; ++t) {
      const std::size_t begin = graph.offsets[static_cast<std::size_t>(t)];
      const std::size_t end = graph.offsets[static_cast<std::size_t>(t) + 1];
      const int kt = graph.kinds[static_cast<std::size_t>(t)];
      dalpha.assign(end - begin, 0.0);
      double weighted = 0.0;
      for (std::size_t e = begin; e < end; ++e) {
        const auto s = static_cast<Eigen::Index>(graph.sources[e]);
        const int ks = graph.kinds[static_cast<std::size_t>(s)];
        const int cb = graph.combos[e];
        Eigen::RowVectorXd m = c.mh.row(s) + c.mu.row(ks) + c.mr.row(cb) + P.msg_b.transpose();
        dalpha[e - begin] = m.dot(dagg.row(t));
        weighted += c.alpha[e] * dalpha[e - begin];
        Eigen::RowVectorXd dm = c.alpha[e] * dagg.row(t);
        dmh.row(s) += dm;
        dmu.row(ks) += dm;
        dmr.row(cb) += dm;
        G.msg_b += dm.transpose();
      }
      for (std::size_t e = begin; e < end; ++e) {
        const double dgamma = c.alpha[e] * (dalpha[e - begin] - weighted);
        if (dgamma == 0.0) continue;
        const auto s = static_cast<Eigen::Index>(graph.sources[e]);
        const int ks = graph.kinds[static_cast<std::size_t>(s)];
        const int cb = graph.combos[e];
        Eigen::RowVectorXd q = c.qh.row(s) + c.qu.row(ks) + c.qr.row(cb) + P.query_b.transpose();
        Eigen::RowVectorXd k = c.kh.row(t) + c.ku.row(kt) + c.kr.row(cb) + P.key_b.transpose();
        Eigen::RowVectorXd dq = (dgamma * scale) * k;
        Eigen::RowVectorXd dk = (dgamma * scale) * q;
        dqh.row(s) += dq;
        dqu.row(ks) += dq;
        dqr.row(cb) += dq;
        G.query_b += dq.transpose();
        dkh.row(t) += dk;
        dku.row(kt) += dk;
        dkr.row(cb) += dk;
        G.key_b += dk.transpose();
      }
    }

    const Mat ut = P.node_type.transpose();
    const Mat rel_act = c.rel_pre.cwiseMax(0.0);
    Mat drel = Mat::Zero(kNumRelationCombos, cfg.type_dim);
    Mat dut = Mat::Zero(kNumNodeKinds, b.u);
    auto project_back = [&](const Mat& w, Mat& gw, const Mat& dH, const Mat& dU, const Mat& dR) {
      gw.leftCols(b.d) += dH.transpose() * c.input;
      gw.middleCols(b.d, b.u) += dU.transpose() * ut;
      gw.rightCols(b.t) += dR.transpose() * c.rel;
      dprev += dH * w.leftCols(b.d);
      dut += dU * w.middleCols(b.d, b.u);
      drel += dR * w.rightCols(b.t);
    };
    project_back(P.msg_w, G.msg_w, dmh, dmu, dmr);
    project_back(P.query_w, G.query_w, dqh, dqu, dqr);
    project_back(P.key_w, G.key_w, dkh, dku, dkr);
    G.node_type += dut.transpose();

    G.rel_w2 += drel.transpose() * rel_act;
    G.rel_b2 += drel.colwise().sum().transpose();
    Mat dpre = (drel * P.rel_w2).cwiseProduct((c.rel_pre.array() > 0.0).cast<double>().matrix());
    G.rel_w1 += dpre.transpose() * relation_inputs();
    G.rel_b1 += dpre.colwise().sum().transpose();

    dh = std::move(dprev);
  }
  res.d_features = std::move(dh);
  return res;
}

GradientResult compute_gradients(const GatModel& model, const MessageGraph& graph, const NodeTokens& tokens,
                                 const std::vector<bool>& row_labels, const std::vector<bool>& col_labels, Mode mode,
                                 std::mt19937_64* rng) {
  Mat features = embed_nodes(tokens, model.params.embedding);
  GatOutput out = gat_forward(model, graph, features, mode, rng);
  LossGrad lg = selection_loss_grad(out.row_logits, out.col_logits, row_labels, col_labels);
  Backward bw = gat_backward(model, graph, out, lg.d_row, lg.d_col);
  bw.grads.embedding = Mat::Zero(model.params.embedding.rows(), model.params.embedding.cols());
  embed_nodes_backward(tokens, bw.d_features, bw.grads.embedding);
  return {lg.loss, std::move(bw.grads), std::move(out)};
}

void update_running_stats(GatModel& model, const GatOutput& out) {
  if (out.mode != Mode::Train) return;
  for (std::size_t l = 0; l < out.cache.size(); ++l) {
    auto& rs = model.running[l];
    const auto& c = out.cache[l];
    const double n = static_cast<double>(c.z1.rows());
    const Vec unbiased = n > 1 ? Vec(c.batch_var * (n / (n - 1.0))) : c.batch_var;
    rs.mean = (1.0 - kBatchNormMomentum) * rs.mean + kBatchNormMomentum * c.batch_mean;
    rs.var = (1.0 - kBatchNormMomentum) * rs.var + kBatchNormMomentum * unbiased;
  }
}

}  // namespace tagqa
