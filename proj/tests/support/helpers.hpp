#ifndef SARC_TESTS_HELPERS_HPP_
#define SARC_TESTS_HELPERS_HPP_

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "sarc/ad.hpp"
#include "sarc/data.hpp"
#include "sarc/rng.hpp"

namespace testutil {

// Central finite differences against the tape gradient. Interior nodes are
// rebuilt by fwd() on every call; the observed leaf's grad is reset first
// because backward accumulates.
inline double max_grad_rel_error(const sarc::ad::Var& leaf,
                                 const std::function<sarc::ad::Var()>& fwd,
                                 double h = 1e-4) {
  leaf->zero_grad();
  sarc::ad::Var loss = fwd();
  sarc::ad::backward(loss);
  sarc::ad::Matrix analytic = leaf->grad;
  double worst = 0.0;
  for (Eigen::Index r = 0; r < leaf->value.rows(); ++r) {
    for (Eigen::Index c = 0; c < leaf->value.cols(); ++c) {
      double orig = leaf->value(r, c);
      leaf->value(r, c) = orig + h;
      double up = fwd()->value(0, 0);
      leaf->value(r, c) = orig - h;
      double down = fwd()->value(0, 0);
      leaf->value(r, c) = orig;
      double fd = (up - down) / (2.0 * h);
      // The 1e-6 floor keeps cancellation noise on near-zero entries
      // (saturated softmax tails) from reading as gradient error.
      double denom =
          std::max({std::abs(fd), std::abs(analytic(r, c)), 1e-6});
      worst = std::max(worst, std::abs(fd - analytic(r, c)) / denom);
    }
  }
  return worst;
}

inline sarc::ad::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols,
                                      sarc::Rng& rng, double scale = 1.0) {
  sarc::ad::Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal() * scale;
  return m;
}

// Minimum |pre-relu activation| of x -> relu(x W1 + b1) -> relu(. W2 + b2),
// used to pick finite-difference-safe instances (FD straddles relu kinks).
inline double min_prerelu_two_layer(const sarc::ad::Matrix& x,
                                    const sarc::ad::Matrix& w1,
                                    const sarc::ad::Matrix& b1,
                                    const sarc::ad::Matrix& w2,
                                    const sarc::ad::Matrix& b2) {
  sarc::ad::Matrix h1 = x * w1;
  h1.rowwise() += b1.row(0);
  double worst = h1.cwiseAbs().minCoeff();
  sarc::ad::Matrix h2 = h1.cwiseMax(0.0) * w2;
  h2.rowwise() += b2.row(0);
  return std::min(worst, h2.cwiseAbs().minCoeff());
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("sarc_test_" + tag + "_" + std::to_string(counter()++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

// A linearly separable toy corpus: sarcastic texts carry a marker token,
// non-sarcastic ones do not. Filler words come from a tiny pool so the
// vocabulary stays small.
inline std::vector<sarc::TweetRecord> marker_corpus(int n, std::uint64_t seed,
                                                    bool with_rephrases = false) {
  static const char* fillers[] = {"rain",  "game", "coffee", "monday",
                                  "train", "news", "lunch",  "phone"};
  sarc::Rng rng(seed);
  std::vector<sarc::TweetRecord> records;
  for (int i = 0; i < n; ++i) {
    bool sarcastic = i % 2 == 0;
    std::string base;
    for (int w = 0; w < 4; ++w) {
      if (w) base += " ";
      base += fillers[rng.uniform_int(8)];
    }
    sarc::TweetRecord rec;
    rec.id = std::to_string(i);
    rec.text = sarcastic ? base + " zonk" : base;
    rec.label = sarcastic ? 1 : 0;
    if (sarcastic && with_rephrases) rec.rephrase = "plain " + base;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace testutil

#endif  // SARC_TESTS_HELPERS_HPP_
