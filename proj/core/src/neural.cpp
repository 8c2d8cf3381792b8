#include "fcp/neural.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "fcp/errors.hpp"

namespace fcp::neural {

namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;
using ConstMap = Eigen::Map<const MatrixXd>;
using Map = Eigen::Map<MatrixXd>;

constexpr double kNormEps = 1e-6;
const double kGeluC = std::sqrt(2.0 / std::numbers::pi);

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + 0.044715 * x * x * x))); }
double gelu_grad(double x) {
  double u = kGeluC * (x + 0.044715 * x * x * x);
  double t = std::tanh(u);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * 0.044715 * x * x);
}

struct LayerCache {
  MatrixXd x_in;   // residual stream entering the layer
  VectorXd r1;     // rms of each row of x_in
  MatrixXd a;      // normed input to attention
  MatrixXd q, k, v, p, ctx;
  MatrixXd x_mid;  // after attention residual
  VectorXd r2;
  MatrixXd b;      // normed input to MLP
  MatrixXd h_pre, h;
};

struct Cache {
  std::size_t n = 0;
  std::vector<LayerCache> layers;
  MatrixXd x_final;
  VectorXd rf;
  MatrixXd f;
  MatrixXd logits;
};

// y = g * x / rms(x), rowwise.
void rms_forward(const MatrixXd& x, const double* g, std::size_t d, VectorXd& r, MatrixXd& y) {
  r.resize(x.rows());
  y.resize(x.rows(), x.cols());
  Eigen::Map<const RowVectorXd> gain(g, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    r(i) = std::sqrt(x.row(i).squaredNorm() / static_cast<double>(d) + kNormEps);
    y.row(i) = x.row(i).cwiseProduct(gain) / r(i);
  }
}

void rms_backward(const MatrixXd& x, const VectorXd& r, const double* g, std::size_t d, const MatrixXd& dy,
                  MatrixXd& dx, double* dg) {
  Eigen::Map<const RowVectorXd> gain(g, static_cast<Eigen::Index>(d));
  Eigen::Map<RowVectorXd> dgain(dg, static_cast<Eigen::Index>(d));
  dx.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    RowVectorXd gdy = dy.row(i).cwiseProduct(gain);
    dgain += dy.row(i).cwiseProduct(x.row(i)) / r(i);
    double dot = gdy.dot(x.row(i));
    dx.row(i) = gdy / r(i) - x.row(i) * (dot / (static_cast<double>(d) * r(i) * r(i) * r(i)));
  }
}

Cache forward(const NeuralWeights& w, const Layout& lay, std::span<const Token> input) {
  const auto& s = w.shape;
  const auto d = static_cast<Eigen::Index>(s.dim);
  const auto hdim = static_cast<Eigen::Index>(s.hidden);
  const auto vocab = static_cast<Eigen::Index>(s.vocab);
  const double* base = w.values.data();
  Cache c;
  c.n = input.size();
  const auto n = static_cast<Eigen::Index>(c.n);
  if (c.n > s.max_len) {
    throw ContractViolation("sequence of " + std::to_string(c.n) + " tokens exceeds max_len " + std::to_string(s.max_len));
  }
  ConstMap tok(base + lay.tok_emb, vocab, d);
  ConstMap pos(base + lay.pos_emb, static_cast<Eigen::Index>(s.max_len), d);
  MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto id = input[static_cast<std::size_t>(i)].id;
    if (id >= s.vocab) throw ContractViolation("token id " + std::to_string(id) + " outside vocabulary");
    x.row(i) = tok.row(id) + pos.row(i);
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.dim));
  c.layers.resize(s.layers);
  for (std::size_t l = 0; l < s.layers; ++l) {
    const auto& o = lay.layers[l];
    auto& lc = c.layers[l];
    lc.x_in = x;
    rms_forward(x, base + o.norm1, s.dim, lc.r1, lc.a);
    lc.q = lc.a * ConstMap(base + o.wq, d, d);
    lc.k = lc.a * ConstMap(base + o.wk, d, d);
    lc.v = lc.a * ConstMap(base + o.wv, d, d);
    MatrixXd scores = (lc.q * lc.k.transpose()) * scale;
    lc.p.setZero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double mx = scores.row(i).head(i + 1).maxCoeff();
      double z = 0.0;
      for (Eigen::Index j = 0; j <= i; ++j) {
        lc.p(i, j) = std::exp(scores(i, j) - mx);
        z += lc.p(i, j);
      }
      lc.p.row(i).head(i + 1) /= z;
    }
    lc.ctx = lc.p * lc.v;
    x = x + lc.ctx * ConstMap(base + o.wo, d, d);
    lc.x_mid = x;
    rms_forward(x, base + o.norm2, s.dim, lc.r2, lc.b);
    lc.h_pre = lc.b * ConstMap(base + o.w1, d, hdim);
    lc.h_pre.rowwise() += Eigen::Map<const RowVectorXd>(base + o.b1, hdim);
    lc.h = lc.h_pre.unaryExpr([](double v) { return gelu(v); });
    x = x + lc.h * ConstMap(base + o.w2, hdim, d);
    x.rowwise() += Eigen::Map<const RowVectorXd>(base + o.b2, d);
  }
  c.x_final = x;
  rms_forward(x, base + lay.norm_f, s.dim, c.rf, c.f);
  c.logits = c.f * ConstMap(base + lay.w_out, d, vocab);
  c.logits.rowwise() += Eigen::Map<const RowVectorXd>(base + lay.b_out, vocab);
  return c;
}

void backward(const NeuralWeights& w, const Layout& lay, std::span<const Token> input, const Cache& c,
              const MatrixXd& dlogits, std::vector<double>& grad) {
  const auto& s = w.shape;
  const auto d = static_cast<Eigen::Index>(s.dim);
  const auto hdim = static_cast<Eigen::Index>(s.hidden);
  const auto vocab = static_cast<Eigen::Index>(s.vocab);
  const auto n = static_cast<Eigen::Index>(c.n);
  const double* base = w.values.data();
  double* g = grad.data();
  const double scale = 1.0 / std::sqrt(static_cast<double>(s.dim));

  Map(g + lay.w_out, d, vocab).noalias() += c.f.transpose() * dlogits;
  Eigen::Map<RowVectorXd>(g + lay.b_out, vocab) += dlogits.colwise().sum();
  MatrixXd df = dlogits * ConstMap(base + lay.w_out, d, vocab).transpose();
  MatrixXd dx;
  rms_backward(c.x_final, c.rf, base + lay.norm_f, s.dim, df, dx, g + lay.norm_f);

  for (std::size_t li = s.layers; li-- > 0;) {
    const auto& o = lay.layers[li];
    const auto& lc = c.layers[li];
    // MLP block: x_out = x_mid + gelu(b W1 + b1) W2 + b2
    Map(g + o.w2, hdim, d).noalias() += lc.h.transpose() * dx;
    Eigen::Map<RowVectorXd>(g + o.b2, d) += dx.colwise().sum();
    MatrixXd dh = dx * ConstMap(base + o.w2, hdim, d).transpose();
    MatrixXd dh_pre = dh.cwiseProduct(lc.h_pre.unaryExpr([](double v) { return gelu_grad(v); }));
    Map(g + o.w1, d, hdim).noalias() += lc.b.transpose() * dh_pre;
    Eigen::Map<RowVectorXd>(g + o.b1, hdim) += dh_pre.colwise().sum();
    MatrixXd db = dh_pre * ConstMap(base + o.w1, d, hdim).transpose();
    MatrixXd dx_norm;
    rms_backward(lc.x_mid, lc.r2, base + o.norm2, s.dim, db, dx_norm, g + o.norm2);
    dx += dx_norm;

    // Attention block: x_mid = x_in + (P V) Wo
    Map(g + o.wo, d, d).noalias() += lc.ctx.transpose() * dx;
    MatrixXd dctx = dx * ConstMap(base + o.wo, d, d).transpose();
    MatrixXd dp = dctx * lc.v.transpose();
    MatrixXd dv = lc.p.transpose() * dctx;
    MatrixXd ds = MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double dot = 0.0;
      for (Eigen::Index j = 0; j <= i; ++j) dot += dp(i, j) * lc.p(i, j);
      for (Eigen::Index j = 0; j <= i; ++j) ds(i, j) = lc.p(i, j) * (dp(i, j) - dot);
    }
    ds *= scale;
    MatrixXd dq = ds * lc.k;
    MatrixXd dk = ds.transpose() * lc.q;
    Map(g + o.wq, d, d).noalias() += lc.a.transpose() * dq;
    Map(g + o.wk, d, d).noalias() += lc.a.transpose() * dk;
    Map(g + o.wv, d, d).noalias() += lc.a.transpose() * dv;
    MatrixXd da = dq * ConstMap(base + o.wq, d, d).transpose() + dk * ConstMap(base + o.wk, d, d).transpose() +
                  dv * ConstMap(base + o.wv, d, d).transpose();
    rms_backward(lc.x_in, lc.r1, base + o.norm1, s.dim, da, dx_norm, g + o.norm1);
    dx += dx_norm;
  }

  Map tok(g + lay.tok_emb, vocab, d);
  Map pos(g + lay.pos_emb, static_cast<Eigen::Index>(s.max_len), d);
  for (Eigen::Index i = 0; i < n; ++i) {
    tok.row(input[static_cast<std::size_t>(i)].id) += dx.row(i);
    pos.row(i) += dx.row(i);
  }
}

}  // namespace

Layout Layout::of(const NeuralShape& s) {
  Layout lay;
  std::size_t off = 0;
  auto take = [&](std::size_t count) {
    std::size_t at = off;
    off += count;
    return at;
  };
  lay.tok_emb = take(s.vocab * s.dim);
  lay.pos_emb = take(s.max_len * s.dim);
  for (std::size_t l = 0; l < s.layers; ++l) {
    LayerOffsets o{};
    o.norm1 = take(s.dim);
    o.wq = take(s.dim * s.dim);
    o.wk = take(s.dim * s.dim);
    o.wv = take(s.dim * s.dim);
    o.wo = take(s.dim * s.dim);
    o.norm2 = take(s.dim);
    o.w1 = take(s.dim * s.hidden);
    o.b1 = take(s.hidden);
    o.w2 = take(s.hidden * s.dim);
    o.b2 = take(s.dim);
    lay.layers.push_back(o);
  }
  lay.norm_f = take(s.dim);
  lay.w_out = take(s.dim * s.vocab);
  lay.b_out = take(s.vocab);
  lay.total = off;
  return lay;
}

void initialize(NeuralWeights& w, Rng& rng) {
  const auto& s = w.shape;
  if (s.vocab == 0 || s.dim == 0 || s.layers == 0 || s.hidden == 0 || s.max_len == 0) {
    throw ConfigError("neural shape has a zero dimension");
  }
  Layout lay = Layout::of(s);
  w.values.assign(lay.total, 0.0);
  auto fill = [&](std::size_t at, std::size_t count, double stddev) {
    for (std::size_t i = 0; i < count; ++i) w.values[at + i] = stddev * rng.normal();
  };
  auto ones = [&](std::size_t at, std::size_t count) { std::fill_n(w.values.begin() + static_cast<long>(at), count, 1.0); };
  const double dim = static_cast<double>(s.dim);
  const double depth = std::sqrt(2.0 * static_cast<double>(s.layers));
  fill(lay.tok_emb, s.vocab * s.dim, 1.0);
  fill(lay.pos_emb, s.max_len * s.dim, 0.5);
  for (const auto& o : lay.layers) {
    ones(o.norm1, s.dim);
    fill(o.wq, s.dim * s.dim, 1.0 / std::sqrt(dim));
    fill(o.wk, s.dim * s.dim, 1.0 / std::sqrt(dim));
    fill(o.wv, s.dim * s.dim, 1.0 / std::sqrt(dim));
    fill(o.wo, s.dim * s.dim, 1.0 / std::sqrt(dim) / depth);
    ones(o.norm2, s.dim);
    fill(o.w1, s.dim * s.hidden, 1.0 / std::sqrt(dim));
    fill(o.w2, s.hidden * s.dim, 1.0 / std::sqrt(static_cast<double>(s.hidden)) / depth);
  }
  ones(lay.norm_f, s.dim);
  fill(lay.w_out, s.dim * s.vocab, 1.0 / std::sqrt(dim));
}

double sequence_nll(const NeuralWeights& w, std::span<const Token> input, std::size_t target_start,
                    std::vector<double>* per_token, std::vector<double>* grad, double scale) {
  if (target_start == 0 || target_start > input.size()) throw ContractViolation("sequence_nll: bad target start");
  const Layout lay = Layout::of(w.shape);
  Cache c = forward(w, lay, input);
  const auto vocab = static_cast<Eigen::Index>(w.shape.vocab);
  const auto n = static_cast<Eigen::Index>(input.size());
  MatrixXd dlogits;
  if (grad) dlogits.setZero(n, vocab);
  double nll = 0.0;
  if (per_token) per_token->clear();
  for (std::size_t p = target_start; p < input.size(); ++p) {
    const auto row = static_cast<Eigen::Index>(p - 1);
    double mx = c.logits.row(row).maxCoeff();
    double z = (c.logits.row(row).array() - mx).exp().sum();
    double lse = mx + std::log(z);
    double lp = c.logits(row, input[p].id) - lse;
    nll -= lp;
    if (per_token) per_token->push_back(lp);
    if (grad) {
      dlogits.row(row) = ((c.logits.row(row).array() - lse).exp() * scale).matrix();
      dlogits(row, input[p].id) -= scale;
    }
  }
  if (grad) {
    if (grad->size() != lay.total) grad->assign(lay.total, 0.0);
    backward(w, lay, input, c, dlogits, *grad);
  }
  return nll;
}

std::vector<double> next_logits(const NeuralWeights& w, std::span<const Token> input) {
  const Layout lay = Layout::of(w.shape);
  Cache c = forward(w, lay, input);
  RowVectorXd last = c.logits.row(c.logits.rows() - 1);
  return std::vector<double>(last.data(), last.data() + last.size());
}

}  // namespace fcp::neural
