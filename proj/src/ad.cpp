#include "sarc/ad.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "sarc/errors.hpp"

namespace sarc::ad {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

Var make_node(Matrix value, std::vector<Var> parents) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->id = g_next_id.fetch_add(1);
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  return n;
}

void collect(const Var& root, std::vector<Node*>& out) {
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.get()};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    out.push_back(n);
    for (const auto& p : n->parents) stack.push_back(p.get());
  }
}

}  // namespace

Var constant(Matrix value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->id = g_next_id.fetch_add(1);
  return n;
}

Var parameter(Matrix value) {
  auto n = constant(std::move(value));
  n->requires_grad = true;
  return n;
}

void backward(const Var& root) {
  if (root->value.rows() != 1 || root->value.cols() != 1) {
    throw SarcError(ErrorKind::ShapeMismatch,
                    "backward expects a scalar (1x1) root");
  }
  std::vector<Node*> nodes;
  collect(root, nodes);
  std::sort(nodes.begin(), nodes.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });
  for (Node* n : nodes) n->ensure_grad();
  root->grad(0, 0) = 1.0;
  for (Node* n : nodes) {
    if (n->backward && n->requires_grad) n->backward();
  }
}

// --- elementwise -------------------------------------------------------------

Var add(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "add");
  Var out = make_node(a->value + b->value, {a, b});
  Node* ap = a.get();
  Node* bp = b.get();
  Node* op = out.get();
  out->backward = [ap, bp, op] {
    if (ap->requires_grad) ap->grad += op->grad;
    if (bp->requires_grad) bp->grad += op->grad;
  };
  return out;
}

Var sub(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "sub");
  Var out = make_node(a->value - b->value, {a, b});
  Node* ap = a.get();
  Node* bp = b.get();
  Node* op = out.get();
  out->backward = [ap, bp, op] {
    if (ap->requires_grad) ap->grad += op->grad;
    if (bp->requires_grad) bp->grad -= op->grad;
  };
  return out;
}

Var hadamard(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "hadamard");
  Var out = make_node(a->value.cwiseProduct(b->value), {a, b});
  Node* ap = a.get();
  Node* bp = b.get();
  Node* op = out.get();
  out->backward = [ap, bp, op] {
    if (ap->requires_grad) ap->grad += op->grad.cwiseProduct(bp->value);
    if (bp->requires_grad) bp->grad += op->grad.cwiseProduct(ap->value);
  };
  return out;
}

Var scale(const Var& a, double s) {
  Var out = make_node(a->value * s, {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op, s] {
    if (ap->requires_grad) ap->grad += op->grad * s;
  };
  return out;
}

Var affine(const Var& a, double alpha, double beta) {
  Var out = make_node(
      (a->value.array() * alpha + beta).matrix(), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op, alpha] {
    if (ap->requires_grad) ap->grad += op->grad * alpha;
  };
  return out;
}

Var cmul(const Var& a, const Matrix& c) {
  if (a->value.rows() != c.rows() || a->value.cols() != c.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "cmul");
  Var out = make_node(a->value.cwiseProduct(c), {a});
  Node* ap = a.get();
  Node* op = out.get();
  Matrix cc = c;
  out->backward = [ap, op, cc] {
    if (ap->requires_grad) ap->grad += op->grad.cwiseProduct(cc);
  };
  return out;
}

Var tanh_(const Var& a) {
  Var out = make_node(a->value.array().tanh().matrix(), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op] {
    if (ap->requires_grad)
      ap->grad +=
          op->grad.cwiseProduct((1.0 - op->value.array().square()).matrix());
  };
  return out;
}

Var relu(const Var& a) {
  Var out = make_node(a->value.cwiseMax(0.0), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op] {
    if (!ap->requires_grad) return;
    ap->grad += op->grad.cwiseProduct(
        (ap->value.array() > 0.0).cast<double>().matrix());
  };
  return out;
}

Var sigmoid(const Var& a) {
  Matrix v = a->value.unaryExpr([](double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                    : std::exp(x) / (1.0 + std::exp(x));
  });
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op] {
    if (!ap->requires_grad) return;
    ap->grad += op->grad.cwiseProduct(
        op->value.cwiseProduct((1.0 - op->value.array()).matrix()));
  };
  return out;
}

Var softplus(const Var& a) {
  Matrix v = a->value.unaryExpr([](double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  });
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op] {
    if (!ap->requires_grad) return;
    Matrix sig = ap->value.unaryExpr([](double x) {
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
    });
    ap->grad += op->grad.cwiseProduct(sig);
  };
  return out;
}

Var exp_(const Var& a) {
  Var out = make_node(a->value.array().exp().matrix(), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op] {
    if (ap->requires_grad) ap->grad += op->grad.cwiseProduct(op->value);
  };
  return out;
}

Var pow_(const Var& a, double p) {
  if (p == 0.0) {
    return constant(Matrix::Ones(a->value.rows(), a->value.cols()));
  }
  Var out = make_node(a->value.array().pow(p).matrix(), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op, p] {
    if (!ap->requires_grad) return;
    ap->grad += op->grad.cwiseProduct(
        (p * ap->value.array().pow(p - 1.0)).matrix());
  };
  return out;
}

// --- linear algebra ----------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  if (a->value.cols() != b->value.rows())
    throw SarcError(ErrorKind::ShapeMismatch, "matmul");
  Var out = make_node(a->value * b->value, {a, b});
  Node* ap = a.get();
  Node* bp = b.get();
  Node* op = out.get();
  out->backward = [ap, bp, op] {
    if (ap->requires_grad) ap->grad += op->grad * bp->value.transpose();
    if (bp->requires_grad) bp->grad += ap->value.transpose() * op->grad;
  };
  return out;
}

Var add_rowvec(const Var& a, const Var& b) {
  if (b->value.rows() != 1 || b->value.cols() != a->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "add_rowvec");
  Matrix v = a->value;
  v.rowwise() += b->value.row(0);
  Var out = make_node(std::move(v), {a, b});
  Node* ap = a.get();
  Node* bp = b.get();
  Node* op = out.get();
  out->backward = [ap, bp, op] {
    if (ap->requires_grad) ap->grad += op->grad;
    if (bp->requires_grad) bp->grad += op->grad.colwise().sum();
  };
  return out;
}

Var concat_cols(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows())
    throw SarcError(ErrorKind::ShapeMismatch, "concat_cols");
  Matrix v(a->value.rows(), a->value.cols() + b->value.cols());
  v << a->value, b->value;
  Var out = make_node(std::move(v), {a, b});
  Node* ap = a.get();
  Node* bp = b.get();
  Node* op = out.get();
  out->backward = [ap, bp, op] {
    Eigen::Index ac = ap->value.cols();
    Eigen::Index bc = bp->value.cols();
    if (ap->requires_grad) ap->grad += op->grad.leftCols(ac);
    if (bp->requires_grad) bp->grad += op->grad.rightCols(bc);
  };
  return out;
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "slice_cols");
  Var out = make_node(a->value.middleCols(start, count), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op, start, count] {
    if (ap->requires_grad) ap->grad.middleCols(start, count) += op->grad;
  };
  return out;
}

Var gather_rows(const Var& a, const std::vector<Eigen::Index>& indices) {
  Matrix v(static_cast<Eigen::Index>(indices.size()), a->value.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= a->value.rows())
      throw SarcError(ErrorKind::ShapeMismatch, "gather_rows index");
    v.row(static_cast<Eigen::Index>(i)) = a->value.row(indices[i]);
  }
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  auto idx = indices;
  out->backward = [ap, op, idx] {
    if (!ap->requires_grad) return;
    for (std::size_t i = 0; i < idx.size(); ++i)
      ap->grad.row(idx[i]) += op->grad.row(static_cast<Eigen::Index>(i));
  };
  return out;
}

Var gather_col_per_row(const Var& a, const std::vector<Eigen::Index>& cols) {
  if (static_cast<Eigen::Index>(cols.size()) != a->value.rows())
    throw SarcError(ErrorKind::ShapeMismatch, "gather_col_per_row");
  Matrix v(a->value.rows(), 1);
  for (Eigen::Index i = 0; i < a->value.rows(); ++i) {
    Eigen::Index c = cols[static_cast<std::size_t>(i)];
    if (c < 0 || c >= a->value.cols())
      throw SarcError(ErrorKind::ShapeMismatch, "gather_col_per_row index");
    v(i, 0) = a->value(i, c);
  }
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  auto cc = cols;
  out->backward = [ap, op, cc] {
    if (!ap->requires_grad) return;
    for (Eigen::Index i = 0; i < op->grad.rows(); ++i)
      ap->grad(i, cc[static_cast<std::size_t>(i)]) += op->grad(i, 0);
  };
  return out;
}

// --- reductions ---------------------------------------------------------------

Var sum_all(const Var& a) {
  Matrix v(1, 1);
  v(0, 0) = a->value.sum();
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op] {
    if (ap->requires_grad)
      ap->grad.array() += op->grad(0, 0);
  };
  return out;
}

Var mean_all(const Var& a) {
  double n = static_cast<double>(a->value.size());
  return scale(sum_all(a), 1.0 / n);
}

Var mean_rows(const Var& a) {
  double n = static_cast<double>(a->value.rows());
  Matrix v = a->value.colwise().sum() / n;
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op, n] {
    if (!ap->requires_grad) return;
    ap->grad += (Matrix::Ones(ap->value.rows(), 1) * op->grad) / n;
  };
  return out;
}

Var sum_squares(const Var& a) {
  Matrix v(1, 1);
  v(0, 0) = a->value.squaredNorm();
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op] {
    if (ap->requires_grad) ap->grad += 2.0 * op->grad(0, 0) * ap->value;
  };
  return out;
}

// --- row-structured ops ---------------------------------------------------------

Var masked_softmax_rows(const Var& a, const Matrix& mask) {
  if (mask.rows() != a->value.rows() || mask.cols() != a->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "masked_softmax_rows");
  Matrix v = Matrix::Zero(a->value.rows(), a->value.cols());
  for (Eigen::Index r = 0; r < a->value.rows(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < a->value.cols(); ++c)
      if (mask(r, c) != 0.0) m = std::max(m, a->value(r, c));
    if (!std::isfinite(m))
      throw SarcError(ErrorKind::AllMasked,
                      "softmax row " + std::to_string(r) + " fully masked");
    double sum = 0.0;
    for (Eigen::Index c = 0; c < a->value.cols(); ++c) {
      if (mask(r, c) != 0.0) {
        v(r, c) = std::exp(a->value(r, c) - m);
        sum += v(r, c);
      }
    }
    v.row(r) /= sum;
  }
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  Matrix mm = mask;
  out->backward = [ap, op, mm] {
    if (!ap->requires_grad) return;
    for (Eigen::Index r = 0; r < op->value.rows(); ++r) {
      double dot = op->grad.row(r).dot(op->value.row(r));
      for (Eigen::Index c = 0; c < op->value.cols(); ++c) {
        if (mm(r, c) != 0.0)
          ap->grad(r, c) += op->value(r, c) * (op->grad(r, c) - dot);
      }
    }
  };
  return out;
}

Var log_softmax_rows(const Var& a) {
  Matrix v = a->value;
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    double m = v.row(r).maxCoeff();
    double lse = std::log((v.row(r).array() - m).exp().sum()) + m;
    v.row(r).array() -= lse;
  }
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op] {
    if (!ap->requires_grad) return;
    for (Eigen::Index r = 0; r < op->value.rows(); ++r) {
      double gsum = op->grad.row(r).sum();
      ap->grad.row(r) +=
          op->grad.row(r) - gsum * op->value.row(r).array().exp().matrix();
    }
  };
  return out;
}

Var logsumexp_rows(const Var& a) {
  Matrix v(a->value.rows(), 1);
  for (Eigen::Index r = 0; r < a->value.rows(); ++r) {
    double m = a->value.row(r).maxCoeff();
    v(r, 0) = std::log((a->value.row(r).array() - m).exp().sum()) + m;
  }
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op] {
    if (!ap->requires_grad) return;
    for (Eigen::Index r = 0; r < ap->value.rows(); ++r) {
      ap->grad.row(r) += op->grad(r, 0) *
                         (ap->value.row(r).array() - op->value(r, 0))
                             .exp()
                             .matrix();
    }
  };
  return out;
}

// --- shape utilities -------------------------------------------------------------

Var reshape_col_to_matrix(const Var& a, Eigen::Index rows, Eigen::Index cols) {
  if (a->value.cols() != 1 || a->value.rows() != rows * cols)
    throw SarcError(ErrorKind::ShapeMismatch, "reshape_col_to_matrix");
  Matrix v(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) v(r, c) = a->value(r * cols + c, 0);
  Var out = make_node(std::move(v), {a});
  Node* ap = a.get();
  Node* op = out.get();
  out->backward = [ap, op, rows, cols] {
    if (!ap->requires_grad) return;
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        ap->grad(r * cols + c, 0) += op->grad(r, c);
  };
  return out;
}

// --- batched sequence ops ----------------------------------------------------------

Var batch_qkt(const Var& q, const Var& k, Eigen::Index batch, Eigen::Index len,
              double scale) {
  if (q->value.rows() != batch * len || k->value.rows() != batch * len ||
      q->value.cols() != k->value.cols())
    throw SarcError(ErrorKind::ShapeMismatch, "batch_qkt");
  Matrix v(batch * len, len);
  for (Eigen::Index b = 0; b < batch; ++b) {
    v.middleRows(b * len, len) = scale * q->value.middleRows(b * len, len) *
                                 k->value.middleRows(b * len, len).transpose();
  }
  Var out = make_node(std::move(v), {q, k});
  Node* qp = q.get();
  Node* kp = k.get();
  Node* op = out.get();
  out->backward = [qp, kp, op, batch, len, scale] {
    for (Eigen::Index b = 0; b < batch; ++b) {
      auto g = op->grad.middleRows(b * len, len);
      if (qp->requires_grad)
        qp->grad.middleRows(b * len, len) +=
            scale * g * kp->value.middleRows(b * len, len);
      if (kp->requires_grad)
        kp->grad.middleRows(b * len, len) +=
            scale * g.transpose() * qp->value.middleRows(b * len, len);
    }
  };
  return out;
}

Var batch_av(const Var& attn, const Var& v, Eigen::Index batch,
             Eigen::Index len) {
  if (attn->value.rows() != batch * len || attn->value.cols() != len ||
      v->value.rows() != batch * len)
    throw SarcError(ErrorKind::ShapeMismatch, "batch_av");
  Matrix out_v(batch * len, v->value.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    out_v.middleRows(b * len, len) =
        attn->value.middleRows(b * len, len) * v->value.middleRows(b * len, len);
  }
  Var out = make_node(std::move(out_v), {attn, v});
  Node* apn = attn.get();
  Node* vp = v.get();
  Node* op = out.get();
  out->backward = [apn, vp, op, batch, len] {
    for (Eigen::Index b = 0; b < batch; ++b) {
      auto g = op->grad.middleRows(b * len, len);
      if (apn->requires_grad)
        apn->grad.middleRows(b * len, len) +=
            g * vp->value.middleRows(b * len, len).transpose();
      if (vp->requires_grad)
        vp->grad.middleRows(b * len, len) +=
            apn->value.middleRows(b * len, len).transpose() * g;
    }
  };
  return out;
}

Var weighted_pool(const Var& weights, const Var& states, Eigen::Index batch,
                  Eigen::Index len) {
  if (weights->value.rows() != batch || weights->value.cols() != len ||
      states->value.rows() != batch * len)
    throw SarcError(ErrorKind::ShapeMismatch, "weighted_pool");
  Matrix v(batch, states->value.cols());
  for (Eigen::Index b = 0; b < batch; ++b) {
    v.row(b) =
        weights->value.row(b) * states->value.middleRows(b * len, len);
  }
  Var out = make_node(std::move(v), {weights, states});
  Node* wp = weights.get();
  Node* sp = states.get();
  Node* op = out.get();
  out->backward = [wp, sp, op, batch, len] {
    for (Eigen::Index b = 0; b < batch; ++b) {
      auto g = op->grad.row(b);
      if (wp->requires_grad)
        wp->grad.row(b) +=
            (sp->value.middleRows(b * len, len) * g.transpose()).transpose();
      if (sp->requires_grad)
        sp->grad.middleRows(b * len, len) +=
            wp->value.row(b).transpose() * g;
    }
  };
  return out;
}

// --- regularization -----------------------------------------------------------------

Var dropout(const Var& a, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw SarcError(ErrorKind::BadConfig, "dropout rate >= 1");
  double keep = 1.0 - rate;
  Matrix mask(a->value.rows(), a->value.cols());
  for (Eigen::Index r = 0; r < mask.rows(); ++r)
    for (Eigen::Index c = 0; c < mask.cols(); ++c)
      mask(r, c) = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
  return cmul(a, mask);
}

Var layernorm_rows(const Var& a, const Var& gain, const Var& bias, double eps) {
  Eigen::Index d = a->value.cols();
  if (gain->value.cols() != d || bias->value.cols() != d ||
      gain->value.rows() != 1 || bias->value.rows() != 1)
    throw SarcError(ErrorKind::ShapeMismatch, "layernorm_rows");
  Eigen::Index n = a->value.rows();
  Matrix xhat(n, d);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    double mu = a->value.row(r).mean();
    double var =
        (a->value.row(r).array() - mu).square().sum() / static_cast<double>(d);
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (a->value.row(r).array() - mu) * inv_std(r);
  }
  Matrix v = xhat;
  for (Eigen::Index r = 0; r < n; ++r)
    v.row(r) = v.row(r).cwiseProduct(gain->value.row(0)) + bias->value.row(0);
  Var out = make_node(std::move(v), {a, gain, bias});
  Node* ap = a.get();
  Node* gp = gain.get();
  Node* bp = bias.get();
  Node* op = out.get();
  out->backward = [ap, gp, bp, op, xhat, inv_std, d] {
    for (Eigen::Index r = 0; r < op->grad.rows(); ++r) {
      Eigen::RowVectorXd dy = op->grad.row(r);
      if (gp->requires_grad)
        gp->grad.row(0) += dy.cwiseProduct(xhat.row(r));
      if (bp->requires_grad) bp->grad.row(0) += dy;
      if (ap->requires_grad) {
        Eigen::RowVectorXd dxhat = dy.cwiseProduct(gp->value.row(0));
        double m1 = dxhat.mean();
        double m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
        ap->grad.row(r) +=
            inv_std(r) *
            (dxhat.array() - m1 - xhat.row(r).array() * m2).matrix();
      }
    }
  };
  return out;
}

Var embedding_gather(const Var& table, const std::vector<int>& ids) {
  Matrix v(static_cast<Eigen::Index>(ids.size()), table->value.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table->value.rows())
      throw SarcError(ErrorKind::VocabOverflow,
                      "embedding id " + std::to_string(ids[i]) +
                          " out of range [0, " +
                          std::to_string(table->value.rows()) + ")");
    v.row(static_cast<Eigen::Index>(i)) = table->value.row(ids[i]);
  }
  Var out = make_node(std::move(v), {table});
  Node* tp = table.get();
  Node* op = out.get();
  auto ii = ids;
  out->backward = [tp, op, ii] {
    if (!tp->requires_grad) return;
    for (std::size_t i = 0; i < ii.size(); ++i)
      tp->grad.row(ii[i]) += op->grad.row(static_cast<Eigen::Index>(i));
  };
  return out;
}

}  // namespace sarc::ad
