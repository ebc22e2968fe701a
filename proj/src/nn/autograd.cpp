#include "prometheus/nn/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "prometheus/core/error.hpp"

namespace prometheus::nn {

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

double activation_grad(Activation a, double x, double y) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Gelu: {
      const double u = kGeluC * (x + kGeluA * x * x * x);
      const double t = std::tanh(u);
      return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
    }
  }
  return 1.0;
}

void shape_check(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Gelu: return "gelu";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "gelu") return Activation::Gelu;
  throw ArgumentError("unknown activation '" + s + "'");
}

double activate(Activation a, double x) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::Gelu: return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  }
  return x;
}

std::size_t ParameterSet::add(std::string name, std::size_t rows, std::size_t cols) {
  if (find(name)) throw ArgumentError("duplicate parameter '" + name + "'");
  params_.push_back({std::move(name), Matrix(rows, cols)});
  return params_.size() - 1;
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::size_t ParameterSet::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size() - 1);
}

Matrix& Graph::grad_buffer(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) {
    const Matrix& v = n.external ? *n.external : n.value;
    n.grad = Matrix(v.rows(), v.cols());
  }
  return n.grad;
}

const Matrix& Graph::value(Var v) const {
  const Node& n = node(v);
  return n.external ? *n.external : n.value;
}

Var Graph::constant(Matrix m) {
  Node n;
  n.value = std::move(m);
  return {push(std::move(n))};
}

Var Graph::parameter(const ParameterSet& set, std::size_t slot) {
  Node n;
  n.external = &set[slot].value;
  n.slot = static_cast<int>(slot);
  n.requires_grad = true;
  return {push(std::move(n))};
}

Var Graph::matmul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  shape_check(av.cols() == bv.rows(), "matmul " + dims(av) + " * " + dims(bv));
  Node n;
  n.value = Matrix(av.rows(), bv.cols());
  matmul_acc(av, bv, n.value);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    nodes_[static_cast<std::size_t>(id)].back = [this, a, b, id] {
      const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
      if (needs(a)) matmul_nt_acc(g, value(b), grad_buffer(a.id));
      if (needs(b)) matmul_tn_acc(value(a), g, grad_buffer(b.id));
    };
  }
  return {id};
}

Var Graph::add_bias(Var a, Var bias) {
  const Matrix& av = value(a);
  const Matrix& bv = value(bias);
  shape_check(bv.rows() == 1 && bv.cols() == av.cols(), "bias " + dims(bv) + " for " + dims(av));
  Node n;
  n.value = av;
  for (std::size_t r = 0; r < av.rows(); ++r) {
    auto row = n.value.row(r);
    for (std::size_t c = 0; c < av.cols(); ++c) row[c] += bv(0, c);
  }
  n.requires_grad = node(a).requires_grad || node(bias).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    nodes_[static_cast<std::size_t>(id)].back = [this, a, bias, id] {
      const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
      if (needs(a)) {
        Matrix& ga = grad_buffer(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
      }
      if (needs(bias)) {
        Matrix& gb = grad_buffer(bias.id);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
        }
      }
    };
  }
  return {id};
}

Var Graph::add(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  shape_check(av.same_shape(bv), "add " + dims(av) + " + " + dims(bv));
  Node n;
  n.value = av;
  for (std::size_t i = 0; i < av.size(); ++i) n.value.data()[i] += bv.data()[i];
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    nodes_[static_cast<std::size_t>(id)].back = [this, a, b, id] {
      const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
      for (Var v : {a, b}) {
        if (!needs(v)) continue;
        Matrix& gv = grad_buffer(v.id);
        for (std::size_t i = 0; i < g.size(); ++i) gv.data()[i] += g.data()[i];
      }
    };
  }
  return {id};
}

Var Graph::mul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  shape_check(av.same_shape(bv), "mul " + dims(av) + " * " + dims(bv));
  Node n;
  n.value = av;
  for (std::size_t i = 0; i < av.size(); ++i) n.value.data()[i] *= bv.data()[i];
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    nodes_[static_cast<std::size_t>(id)].back = [this, a, b, id] {
      const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
      if (needs(a)) {
        Matrix& ga = grad_buffer(a.id);
        const Matrix& bv2 = value(b);
        for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * bv2.data()[i];
      }
      if (needs(b)) {
        Matrix& gb = grad_buffer(b.id);
        const Matrix& av2 = value(a);
        for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i] * av2.data()[i];
      }
    };
  }
  return {id};
}

Var Graph::scale(Var a, double s) {
  Node n;
  n.value = value(a);
  for (double& x : n.value.data()) x *= s;
  n.requires_grad = node(a).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    nodes_[static_cast<std::size_t>(id)].back = [this, a, s, id] {
      const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
      Matrix& ga = grad_buffer(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += s * g.data()[i];
    };
  }
  return {id};
}

Var Graph::activation(Var a, Activation act) {
  if (act == Activation::Identity) return a;
  Node n;
  n.value = value(a);
  for (double& x : n.value.data()) x = activate(act, x);
  n.requires_grad = node(a).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    nodes_[static_cast<std::size_t>(id)].back = [this, a, act, id] {
      const Node& self = nodes_[static_cast<std::size_t>(id)];
      const Matrix& x = value(a);
      Matrix& ga = grad_buffer(a.id);
      for (std::size_t i = 0; i < x.size(); ++i) {
        ga.data()[i] += self.grad.data()[i] * activation_grad(act, x.data()[i], self.value.data()[i]);
      }
    };
  }
  return {id};
}

Var Graph::layer_norm(Var a, Var gamma, Var beta, double eps) {
  const Matrix& x = value(a);
  const Matrix& gv = value(gamma);
  const Matrix& bv = value(beta);
  const std::size_t d = x.cols();
  shape_check(gv.rows() == 1 && gv.cols() == d && bv.same_shape(gv), "layer_norm affine shape");
  Node n;
  n.value = Matrix(x.rows(), d);
  n.aux = Matrix(x.rows(), d + 1);  // normalized values + inverse std per row
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto xr = x.row(r);
    double mean = 0.0;
    for (double v : xr) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : xr) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      const double xh = (xr[c] - mean) * inv;
      n.aux(r, c) = xh;
      n.value(r, c) = gv(0, c) * xh + bv(0, c);
    }
    n.aux(r, d) = inv;
  }
  n.requires_grad = node(a).requires_grad || node(gamma).requires_grad || node(beta).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    nodes_[static_cast<std::size_t>(id)].back = [this, a, gamma, beta, id] {
      const Node& self = nodes_[static_cast<std::size_t>(id)];
      const Matrix& g = self.grad;
      const Matrix& gv2 = value(gamma);
      const std::size_t rows = g.rows(), dd = g.cols();
      if (needs(gamma) || needs(beta)) {
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < dd; ++c) {
            if (needs(gamma)) grad_buffer(gamma.id)(0, c) += g(r, c) * self.aux(r, c);
            if (needs(beta)) grad_buffer(beta.id)(0, c) += g(r, c);
          }
        }
      }
      if (needs(a)) {
        Matrix& ga = grad_buffer(a.id);
        std::vector<double> dxh(dd);
        for (std::size_t r = 0; r < rows; ++r) {
          double m1 = 0.0, m2 = 0.0;
          for (std::size_t c = 0; c < dd; ++c) {
            dxh[c] = g(r, c) * gv2(0, c);
            m1 += dxh[c];
            m2 += dxh[c] * self.aux(r, c);
          }
          m1 /= static_cast<double>(dd);
          m2 /= static_cast<double>(dd);
          const double inv = self.aux(r, dd);
          for (std::size_t c = 0; c < dd; ++c) {
            ga(r, c) += inv * (dxh[c] - m1 - self.aux(r, c) * m2);
          }
        }
      }
    };
  }
  return {id};
}

Var Graph::concat_cols(std::span<const Var> parts) {
  shape_check(!parts.empty(), "concat of nothing");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  bool req = false;
  for (Var p : parts) {
    shape_check(value(p).rows() == rows, "concat row mismatch");
    cols += value(p).cols();
    req = req || node(p).requires_grad;
  }
  Node n;
  n.value = Matrix(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t off = 0;
    for (Var p : parts) {
      const auto src = value(p).row(r);
      std::copy(src.begin(), src.end(), n.value.row(r).begin() + static_cast<std::ptrdiff_t>(off));
      off += src.size();
    }
  }
  n.requires_grad = req;
  const int id = push(std::move(n));
  if (track_ && req) {
    std::vector<Var> ps(parts.begin(), parts.end());
    nodes_[static_cast<std::size_t>(id)].back = [this, ps, id] {
      const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
      std::size_t off = 0;
      for (Var p : ps) {
        const std::size_t w = value(p).cols();
        if (needs(p)) {
          Matrix& gp = grad_buffer(p.id);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < w; ++c) gp(r, c) += g(r, off + c);
          }
        }
        off += w;
      }
    };
  }
  return {id};
}

Var Graph::slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Matrix& av = value(a);
  shape_check(begin + count <= av.cols(), "slice past end of " + dims(av));
  Node n;
  n.value = Matrix(av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) n.value(r, c) = av(r, begin + c);
  }
  n.requires_grad = node(a).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    nodes_[static_cast<std::size_t>(id)].back = [this, a, begin, count, id] {
      const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
      Matrix& ga = grad_buffer(a.id);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < count; ++c) ga(r, begin + c) += g(r, c);
      }
    };
  }
  return {id};
}

Var Graph::self_attention(Var q, Var k, Var v, std::size_t groups, std::size_t seq,
                          std::size_t heads) {
  const Matrix& qv = value(q);
  const Matrix& kv = value(k);
  const Matrix& vv = value(v);
  const std::size_t d = qv.cols();
  shape_check(qv.rows() == groups * seq && kv.same_shape(qv) && vv.same_shape(qv),
              "attention inputs must be (groups*seq) x d");
  shape_check(heads >= 1 && d % heads == 0, "d_model not divisible by heads");
  const std::size_t dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Node n;
  n.value = Matrix(groups * seq, d);
  n.aux = Matrix(groups * heads * seq, seq);
  n.is_attention = true;
  std::vector<double> scores(seq);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t c0 = h * dh;
      for (std::size_t i = 0; i < seq; ++i) {
        const std::size_t qi = g * seq + i;
        double mx = -INFINITY;
        for (std::size_t j = 0; j < seq; ++j) {
          const std::size_t kj = g * seq + j;
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += qv(qi, c0 + c) * kv(kj, c0 + c);
          scores[j] = s * scale;
          mx = std::max(mx, scores[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < seq; ++j) {
          scores[j] = std::exp(scores[j] - mx);
          z += scores[j];
        }
        const std::size_t prow = (g * heads + h) * seq + i;
        for (std::size_t j = 0; j < seq; ++j) {
          const double p = scores[j] / z;
          n.aux(prow, j) = p;
          const std::size_t vj = g * seq + j;
          for (std::size_t c = 0; c < dh; ++c) n.value(qi, c0 + c) += p * vv(vj, c0 + c);
        }
      }
    }
  }
  n.requires_grad = node(q).requires_grad || node(k).requires_grad || node(v).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    nodes_[static_cast<std::size_t>(id)].back = [this, q, k, v, groups, seq, heads, dh, scale, id] {
      const Node& self = nodes_[static_cast<std::size_t>(id)];
      const Matrix& go = self.grad;
      const Matrix& qv2 = value(q);
      const Matrix& kv2 = value(k);
      const Matrix& vv2 = value(v);
      Matrix* gq = needs(q) ? &grad_buffer(q.id) : nullptr;
      Matrix* gk = needs(k) ? &grad_buffer(k.id) : nullptr;
      Matrix* gv = needs(v) ? &grad_buffer(v.id) : nullptr;
      std::vector<double> dp(seq), ds(seq);
      for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t c0 = h * dh;
          for (std::size_t i = 0; i < seq; ++i) {
            const std::size_t qi = g * seq + i;
            const std::size_t prow = (g * heads + h) * seq + i;
            double dot = 0.0;
            for (std::size_t j = 0; j < seq; ++j) {
              const std::size_t vj = g * seq + j;
              double s = 0.0;
              for (std::size_t c = 0; c < dh; ++c) s += go(qi, c0 + c) * vv2(vj, c0 + c);
              dp[j] = s;
              dot += s * self.aux(prow, j);
              if (gv) {
                const double p = self.aux(prow, j);
                for (std::size_t c = 0; c < dh; ++c) (*gv)(vj, c0 + c) += p * go(qi, c0 + c);
              }
            }
            for (std::size_t j = 0; j < seq; ++j) ds[j] = self.aux(prow, j) * (dp[j] - dot) * scale;
            for (std::size_t j = 0; j < seq; ++j) {
              const std::size_t kj = g * seq + j;
              for (std::size_t c = 0; c < dh; ++c) {
                if (gq) (*gq)(qi, c0 + c) += ds[j] * kv2(kj, c0 + c);
                if (gk) (*gk)(kj, c0 + c) += ds[j] * qv2(qi, c0 + c);
              }
            }
          }
        }
      }
    };
  }
  return {id};
}

Var Graph::mean_rows(Var a, std::size_t groups, std::size_t seq) {
  const Matrix& av = value(a);
  shape_check(av.rows() == groups * seq && seq > 0, "mean_rows expects (groups*seq) rows");
  Node n;
  n.value = Matrix(groups, av.cols());
  const double inv = 1.0 / static_cast<double>(seq);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t s = 0; s < seq; ++s) {
      const auto src = av.row(g * seq + s);
      for (std::size_t c = 0; c < av.cols(); ++c) n.value(g, c) += src[c];
    }
    for (std::size_t c = 0; c < av.cols(); ++c) n.value(g, c) *= inv;
  }
  n.requires_grad = node(a).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    nodes_[static_cast<std::size_t>(id)].back = [this, a, groups, seq, inv, id] {
      const Matrix& g = nodes_[static_cast<std::size_t>(id)].grad;
      Matrix& ga = grad_buffer(a.id);
      for (std::size_t gr = 0; gr < groups; ++gr) {
        for (std::size_t s = 0; s < seq; ++s) {
          for (std::size_t c = 0; c < g.cols(); ++c) ga(gr * seq + s, c) += g(gr, c) * inv;
        }
      }
    };
  }
  return {id};
}

Var Graph::max_elementwise(std::span<const Var> parts) {
  shape_check(!parts.empty(), "max of nothing");
  const Matrix& first = value(parts[0]);
  bool req = false;
  for (Var p : parts) {
    shape_check(value(p).same_shape(first), "max_elementwise shape mismatch");
    req = req || node(p).requires_grad;
  }
  Node n;
  n.value = first;
  n.aux = Matrix(first.rows(), first.cols(), 0.0);  // winning part index
  for (std::size_t k = 1; k < parts.size(); ++k) {
    const Matrix& m = value(parts[k]);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m.data()[i] > n.value.data()[i]) {
        n.value.data()[i] = m.data()[i];
        n.aux.data()[i] = static_cast<double>(k);
      }
    }
  }
  n.requires_grad = req;
  const int id = push(std::move(n));
  if (track_ && req) {
    std::vector<Var> ps(parts.begin(), parts.end());
    nodes_[static_cast<std::size_t>(id)].back = [this, ps, id] {
      const Node& self = nodes_[static_cast<std::size_t>(id)];
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const Var winner = ps[static_cast<std::size_t>(self.aux.data()[i])];
        if (needs(winner)) grad_buffer(winner.id).data()[i] += self.grad.data()[i];
      }
    };
  }
  return {id};
}

Var Graph::weighted_cross_entropy(Var logits, std::span<const int> labels,
                                  std::span<const double> weights) {
  const Matrix& lv = value(logits);
  shape_check(lv.rows() == labels.size() && weights.size() == labels.size(),
              "cross-entropy labels/weights do not match logits rows");
  const std::size_t rows = lv.rows(), k = lv.cols();
  Node n;
  n.value = Matrix(1, 1);
  n.aux = Matrix(rows, k);  // softmax probabilities
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < k; ++c) mx = std::max(mx, lv(r, c));
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(lv(r, c) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < k; ++c) n.aux(r, c) = std::exp(lv(r, c) - lse);
    loss += weights[r] * (lse - lv(r, static_cast<std::size_t>(labels[r])));
  }
  n.value(0, 0) = rows ? loss / static_cast<double>(rows) : 0.0;
  n.requires_grad = node(logits).requires_grad;
  const int id = push(std::move(n));
  if (track_ && nodes_[static_cast<std::size_t>(id)].requires_grad) {
    std::vector<int> y(labels.begin(), labels.end());
    std::vector<double> w(weights.begin(), weights.end());
    nodes_[static_cast<std::size_t>(id)].back = [this, logits, y, w, id] {
      const Node& self = nodes_[static_cast<std::size_t>(id)];
      const double go = self.grad(0, 0);
      Matrix& gl = grad_buffer(logits.id);
      const double inv = 1.0 / static_cast<double>(y.size());
      for (std::size_t r = 0; r < y.size(); ++r) {
        for (std::size_t c = 0; c < self.aux.cols(); ++c) {
          const double target = static_cast<std::size_t>(y[r]) == c ? 1.0 : 0.0;
          gl(r, c) += go * w[r] * (self.aux(r, c) - target) * inv;
        }
      }
    };
  }
  return {id};
}

void Graph::backward(Var scalar) {
  if (!track_) throw ArgumentError("backward on a graph built without gradient tracking");
  const Matrix& v = value(scalar);
  shape_check(v.rows() == 1 && v.cols() == 1, "backward needs a 1x1 output");
  grad_buffer(scalar.id)(0, 0) = 1.0;
  for (int id = scalar.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.back && !n.grad.empty()) n.back();
  }
}

void Graph::accumulate_parameter_grads(std::vector<Matrix>& grads) const {
  for (const Node& n : nodes_) {
    if (n.slot < 0 || n.grad.empty()) continue;
    Matrix& g = grads[static_cast<std::size_t>(n.slot)];
    for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] += n.grad.data()[i];
  }
}

std::vector<Matrix> Graph::attention_maps() const {
  std::vector<Matrix> out;
  for (const Node& n : nodes_) {
    if (n.is_attention) out.push_back(n.aux);
  }
  return out;
}

}  // namespace prometheus::nn
