#ifndef SARC_AD_HPP_
#define SARC_AD_HPP_

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "sarc/rng.hpp"

namespace sarc::ad {

using Matrix = Eigen::MatrixXd;

// One node of the dynamically built computation graph. Nodes are created in
// forward order; creation order doubles as a topological order for the
// backward sweep. Leaves (parameters, constants) have no backward closure.
struct Node {
  Matrix value;
  Matrix grad;                 // allocated lazily, same shape as value
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward;  // accumulates into parents' grads

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols()) {
      grad = Matrix::Zero(value.rows(), value.cols());
    }
  }
  void zero_grad() { grad = Matrix::Zero(value.rows(), value.cols()); }
};

using Var = std::shared_ptr<Node>;

// Leaf constructors.
Var constant(Matrix value);
Var parameter(Matrix value);  // requires_grad = true

// Runs the backward sweep from a scalar (1x1) root, seeding d(root) = 1.
void backward(const Var& root);

// --- elementwise -----------------------------------------------------------
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double s);
// alpha * x + beta, elementwise.
Var affine(const Var& a, double alpha, double beta);
// elementwise multiply by a constant matrix (no gradient through c).
Var cmul(const Var& a, const Matrix& c);
Var tanh_(const Var& a);
Var relu(const Var& a);
Var sigmoid(const Var& a);
// log(1 + e^x) in the overflow-safe form; derivative sigmoid(x).
Var softplus(const Var& a);
Var exp_(const Var& a);
// x^p for x > 0 (p may be any real; p = 0 gives all-ones with zero grad).
Var pow_(const Var& a, double p);

// --- linear algebra ---------------------------------------------------------
Var matmul(const Var& a, const Var& b);
// a [n x d] + row vector b [1 x d] broadcast over rows.
Var add_rowvec(const Var& a, const Var& b);
Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
// out.row(i) = a.row(indices[i]); backward scatter-adds.
Var gather_rows(const Var& a, const std::vector<Eigen::Index>& indices);
// out[i, 0] = a(i, cols[i]).
Var gather_col_per_row(const Var& a, const std::vector<Eigen::Index>& cols);

// --- reductions -------------------------------------------------------------
Var mean_all(const Var& a);
Var sum_all(const Var& a);
// column means -> [1 x d].
Var mean_rows(const Var& a);
// sum of squared entries -> scalar.
Var sum_squares(const Var& a);

// --- row-structured ops ------------------------------------------------------
// Softmax over each row restricted to entries with mask 1; masked entries get
// weight exactly 0. Throws AllMasked on a fully masked row.
Var masked_softmax_rows(const Var& a, const Matrix& mask);
Var log_softmax_rows(const Var& a);
Var logsumexp_rows(const Var& a);  // [n x 1]

// --- shape utilities ---------------------------------------------------------
// [(rows*cols) x 1] column -> [rows x cols], row-major walk.
Var reshape_col_to_matrix(const Var& a, Eigen::Index rows, Eigen::Index cols);

// --- batched sequence ops ----------------------------------------------------
// q, k: [(batch*len) x d] laid out sample-major. Returns [(batch*len) x len]
// with block b holding q_b * k_b^T * scale.
Var batch_qkt(const Var& q, const Var& k, Eigen::Index batch, Eigen::Index len,
              double scale);
// attn [(batch*len) x len], v [(batch*len) x d] -> [(batch*len) x d].
Var batch_av(const Var& attn, const Var& v, Eigen::Index batch,
             Eigen::Index len);
// weights [batch x len], states [(batch*len) x d] -> [batch x d],
// out.row(b) = sum_l weights(b,l) * states.row(b*len+l).
Var weighted_pool(const Var& weights, const Var& states, Eigen::Index batch,
                  Eigen::Index len);

// --- regularization ----------------------------------------------------------
// Inverted dropout; identity when training is false or rate is 0.
Var dropout(const Var& a, double rate, Rng& rng, bool training);

// Per-row layer norm with learned gain/bias row vectors [1 x d].
Var layernorm_rows(const Var& a, const Var& gain, const Var& bias,
                   double eps = 1e-5);

// --- embedding ---------------------------------------------------------------
// table [vocab x d], ids flattened row-major -> [ids.size() x d].
Var embedding_gather(const Var& table, const std::vector<int>& ids);

}  // namespace sarc::ad

#endif  // SARC_AD_HPP_
