/*
 * Copyright 2026 The maid-assure Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// The classifier under assurance: input -> affine -> batch normalization ->
// ReLU -> affine -> softmax. Training uses batch statistics and accumulates
// running statistics; inference uses the running statistics only.

#include <Eigen/Dense>

#include <algorithm>
#include <cerrno>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "maid/distortion.hpp"
#include "maid/errors.hpp"
#include "maid/image.hpp"
#include "maid/parallel.hpp"
#include "maid/random.hpp"
#include "maid/search_space.hpp"

namespace maid::nn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ModelT {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t class_count = 0;
  std::uint64_t seed = 0;
  double bn_epsilon = 1e-5;

  Eigen::MatrixXd w1;  // input_dim x hidden_dim
  Eigen::RowVectorXd b1;
  Eigen::RowVectorXd running_mean;
  Eigen::RowVectorXd running_variance;
  Eigen::RowVectorXd bn_scale;
  Eigen::RowVectorXd bn_shift;
  Eigen::MatrixXd w2;  // hidden_dim x class_count
  Eigen::RowVectorXd b2;

  static ModelT zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t class_count) {
    ModelT m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.class_count = class_count;
    const auto in = static_cast<Eigen::Index>(input_dim);
    const auto hid = static_cast<Eigen::Index>(hidden_dim);
    const auto out = static_cast<Eigen::Index>(class_count);
    m.w1 = Eigen::MatrixXd::Zero(in, hid);
    m.b1 = Eigen::RowVectorXd::Zero(hid);
    m.running_mean = Eigen::RowVectorXd::Zero(hid);
    m.running_variance = Eigen::RowVectorXd::Ones(hid);
    m.bn_scale = Eigen::RowVectorXd::Zero(hid);
    m.bn_shift = Eigen::RowVectorXd::Zero(hid);
    m.w2 = Eigen::MatrixXd::Zero(hid, out);
    m.b2 = Eigen::RowVectorXd::Zero(out);
    return m;
  }

  void validate() const {
    const auto in = static_cast<Eigen::Index>(input_dim);
    const auto hid = static_cast<Eigen::Index>(hidden_dim);
    const auto out = static_cast<Eigen::Index>(class_count);
    if (input_dim == 0 || hidden_dim == 0 || class_count < 2) throw InputError("model dimensions are invalid");
    if (w1.rows() != in || w1.cols() != hid || b1.size() != hid || running_mean.size() != hid ||
        running_variance.size() != hid || bn_scale.size() != hid || bn_shift.size() != hid || w2.rows() != hid ||
        w2.cols() != out || b2.size() != out)
      throw InputError("model arrays do not match the declared dimensions");
    if ((running_variance.array() < 0.0).any()) throw InputError("running variance must be non-negative");
    if (!w1.allFinite() || !w2.allFinite() || !b1.allFinite() || !b2.allFinite() || !bn_scale.allFinite() ||
        !bn_shift.allFinite() || !running_mean.allFinite() || !running_variance.allFinite())
      throw InputError("model weights must be finite");
    if (!(bn_epsilon > 0.0)) throw InputError("bn_epsilon must be positive");
  }

  bool operator==(const ModelT& o) const {
    return input_dim == o.input_dim && hidden_dim == o.hidden_dim && class_count == o.class_count && seed == o.seed &&
           bn_epsilon == o.bn_epsilon && w1 == o.w1 && b1 == o.b1 && running_mean == o.running_mean &&
           running_variance == o.running_variance && bn_scale == o.bn_scale && bn_shift == o.bn_shift &&
           w2 == o.w2 && b2 == o.b2;
  }
};

/// Stacks images as rows of a matrix.
inline Eigen::MatrixXd stack(const std::vector<Image>& images, std::size_t begin, std::size_t end, std::size_t dim) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(end - begin), static_cast<Eigen::Index>(dim));
  for (std::size_t i = begin; i < end; ++i) {
    if (images[i].size() != dim) throw InputError("image size does not match the model input dimension");
    x.row(static_cast<Eigen::Index>(i - begin)) = Eigen::Map<const Eigen::RowVectorXd>(images[i].pixels.data(), static_cast<Eigen::Index>(dim));
  }
  return x;
}

/// Activations entering the normalization layer, one row per input.
inline Eigen::MatrixXd normalization_inputs(const ModelT& m, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != m.input_dim) throw InputError("input dimension mismatch");
  Eigen::MatrixXd a = x * m.w1;
  a.rowwise() += m.b1;
  return a;
}

inline void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - mx).exp();
    logits.row(i) /= logits.row(i).sum();
  }
}

/// Inference-mode class probabilities, one row per input.
inline Eigen::MatrixXd forward(const ModelT& m, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a = normalization_inputs(m, x);
  const Eigen::RowVectorXd inv_std = (m.running_variance.array() + m.bn_epsilon).rsqrt();
  a.rowwise() -= m.running_mean;
  a.array().rowwise() *= (inv_std.array() * m.bn_scale.array());
  a.rowwise() += m.bn_shift;
  a = a.cwiseMax(0.0);
  Eigen::MatrixXd logits = a * m.w2;
  logits.rowwise() += m.b2;
  softmax_rows(logits);
  return logits;
}

inline std::vector<double> predict_proba(const ModelT& m, const Image& img) {
  if (img.size() != m.input_dim) throw InputError("image size does not match the model input dimension");
  const Eigen::MatrixXd p = forward(m, stack({img}, 0, 1, m.input_dim));
  return {p.data(), p.data() + p.size()};
}

inline int predict_class(const ModelT& m, const Image& img) {
  const auto p = predict_proba(m, img);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

/// Largest class probability for every image.
inline std::vector<double> confidences(const ModelT& m, const std::vector<Image>& images) {
  std::vector<double> out(images.size());
  parallel_for(images.size(), 256, [&](std::size_t begin, std::size_t end) {
    const Eigen::MatrixXd p = forward(m, stack(images, begin, end, m.input_dim));
    for (Eigen::Index i = 0; i < p.rows(); ++i) out[begin + static_cast<std::size_t>(i)] = p.row(i).maxCoeff();
  });
  return out;
}

namespace detail {

inline std::size_t count_correct(const ModelT& m, const Eigen::MatrixXd& x, std::span<const int> labels) {
  const Eigen::MatrixXd p = forward(m, x);
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index arg;
    p.row(i).maxCoeff(&arg);
    if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return correct;
}

}  // namespace detail

/// Fraction of images whose distorted version is classified correctly.
inline double evaluate_accuracy(const ModelT& m, const AssuranceSet& set, const DistortionParams& level) {
  if (set.empty()) throw InputError("evaluate_accuracy needs a non-empty set");
  set.validate(m.class_count);
  level.validate();
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (set.size() + kChunk - 1) / kChunk;
  std::vector<std::size_t> correct(chunks, 0);
  parallel_for(set.size(), kChunk, [&](std::size_t begin, std::size_t end) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(end - begin), static_cast<Eigen::Index>(m.input_dim));
    for (std::size_t i = begin; i < end; ++i) {
      const Image& src = set.images[i];
      if (src.size() != m.input_dim) throw InputError("image size does not match the model input dimension");
      const Image img = level == DistortionParams{} ? src : apply_distortion(src, level);
      x.row(static_cast<Eigen::Index>(i - begin)) =
          Eigen::Map<const Eigen::RowVectorXd>(img.pixels.data(), static_cast<Eigen::Index>(m.input_dim));
    }
    correct[begin / kChunk] = detail::count_correct(m, x, std::span<const int>(set.labels).subspan(begin, end - begin));
  });
  const std::size_t total = std::accumulate(correct.begin(), correct.end(), std::size_t{0});
  return static_cast<double>(total) / static_cast<double>(set.size());
}

inline double evaluate_accuracy(const ModelT& m, const AssuranceSet& set, const SearchSpace& space,
                                const DistortionLevel& level) {
  return evaluate_accuracy(m, set, space.to_params(level));
}

struct TrainOptions {
  std::size_t hidden_dim = 64;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  /// Running statistics: running = bn_momentum * running + (1 - bn_momentum) * batch.
  double bn_momentum = 0.9;
};

/// Mini-batch SGD with momentum on softmax cross-entropy. Deterministic in
/// (corpus, seed, options).
inline ModelT train_model(const AssuranceSet& corpus, std::uint64_t seed, const TrainOptions& opt = {}) {
  if (corpus.empty()) throw InputError("training corpus is empty");
  if (corpus.images.size() != corpus.labels.size()) throw InputError("training corpus: images and labels differ in length");
  const int max_label = *std::max_element(corpus.labels.begin(), corpus.labels.end());
  const int min_label = *std::min_element(corpus.labels.begin(), corpus.labels.end());
  if (min_label < 0) throw InputError("training labels must be non-negative");
  if (min_label == max_label) throw InputError("training corpus needs at least two classes");
  if (opt.batch_size < 2) throw InputError("batch_size must be at least 2 for batch statistics");

  const std::size_t in_dim = corpus.images.front().size();
  const auto classes = static_cast<std::size_t>(max_label) + 1;
  ModelT m = ModelT::zeros(in_dim, opt.hidden_dim, classes);
  m.seed = seed;

  Rng rng(seed);
  const double s1 = std::sqrt(2.0 / static_cast<double>(in_dim));
  const double s2 = std::sqrt(2.0 / static_cast<double>(opt.hidden_dim));
  for (Eigen::Index j = 0; j < m.w1.cols(); ++j)
    for (Eigen::Index i = 0; i < m.w1.rows(); ++i) m.w1(i, j) = rng.normal(0.0, s1);
  for (Eigen::Index j = 0; j < m.w2.cols(); ++j)
    for (Eigen::Index i = 0; i < m.w2.rows(); ++i) m.w2(i, j) = rng.normal(0.0, s2);
  m.bn_scale.setOnes();

  const Eigen::MatrixXd x_all = stack(corpus.images, 0, corpus.size(), in_dim);
  const auto hid = static_cast<Eigen::Index>(opt.hidden_dim);
  const auto out = static_cast<Eigen::Index>(classes);

  Eigen::MatrixXd v_w1 = Eigen::MatrixXd::Zero(m.w1.rows(), hid), v_w2 = Eigen::MatrixXd::Zero(hid, out);
  Eigen::RowVectorXd v_b1 = Eigen::RowVectorXd::Zero(hid), v_b2 = Eigen::RowVectorXd::Zero(out);
  Eigen::RowVectorXd v_g = Eigen::RowVectorXd::Zero(hid), v_s = Eigen::RowVectorXd::Zero(hid);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t bsz = std::min(opt.batch_size, corpus.size());
  const std::size_t batches = corpus.size() / bsz;
  const double nb = static_cast<double>(bsz);

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order.begin(), order.end());
    for (std::size_t b = 0; b < batches; ++b) {
      Eigen::MatrixXd x(static_cast<Eigen::Index>(bsz), x_all.cols());
      Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bsz), out);
      for (std::size_t i = 0; i < bsz; ++i) {
        const std::size_t idx = order[b * bsz + i];
        x.row(static_cast<Eigen::Index>(i)) = x_all.row(static_cast<Eigen::Index>(idx));
        y(static_cast<Eigen::Index>(i), corpus.labels[idx]) = 1.0;
      }

      Eigen::MatrixXd a = normalization_inputs(m, x);
      const Eigen::RowVectorXd mu = a.colwise().mean();
      const Eigen::MatrixXd centred = a.rowwise() - mu;
      const Eigen::RowVectorXd var = centred.colwise().squaredNorm() / nb;
      const Eigen::RowVectorXd inv_std = (var.array() + m.bn_epsilon).rsqrt();
      const Eigen::MatrixXd xhat = centred.array().rowwise() * inv_std.array();
      Eigen::MatrixXd z = xhat.array().rowwise() * m.bn_scale.array();
      z.rowwise() += m.bn_shift;
      const Eigen::MatrixXd h = z.cwiseMax(0.0);
      Eigen::MatrixXd p = h * m.w2;
      p.rowwise() += m.b2;
      softmax_rows(p);

      const Eigen::MatrixXd dlogits = (p - y) / nb;
      const Eigen::MatrixXd g_w2 = h.transpose() * dlogits + opt.weight_decay * m.w2;
      const Eigen::RowVectorXd g_b2 = dlogits.colwise().sum();
      const Eigen::MatrixXd dz = ((dlogits * m.w2.transpose()).array() * (z.array() > 0.0).cast<double>()).matrix();
      const Eigen::RowVectorXd g_gamma = (dz.array() * xhat.array()).colwise().sum();
      const Eigen::RowVectorXd g_beta = dz.colwise().sum();
      const Eigen::MatrixXd dxhat = dz.array().rowwise() * m.bn_scale.array();
      const Eigen::RowVectorXd sum_dxhat = dxhat.colwise().sum();
      const Eigen::RowVectorXd sum_dxhat_xhat = (dxhat.array() * xhat.array()).colwise().sum();
      Eigen::MatrixXd da = (nb * dxhat).rowwise() - sum_dxhat;
      da -= (xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
      da = (da.array().rowwise() * (inv_std.array() / nb)).matrix();
      const Eigen::MatrixXd g_w1 = x.transpose() * da + opt.weight_decay * m.w1;
      const Eigen::RowVectorXd g_b1 = da.colwise().sum();

      auto step = [&](auto& param, auto& velocity, const auto& grad) {
        velocity = opt.momentum * velocity - opt.learning_rate * grad;
        param += velocity;
      };
      step(m.w1, v_w1, g_w1);
      step(m.b1, v_b1, g_b1);
      step(m.w2, v_w2, g_w2);
      step(m.b2, v_b2, g_b2);
      step(m.bn_scale, v_g, g_gamma);
      step(m.bn_shift, v_s, g_beta);

      const double keep = opt.bn_momentum;
      m.running_mean = keep * m.running_mean + (1.0 - keep) * mu;
      m.running_variance = keep * m.running_variance + (1.0 - keep) * var * (nb / (nb - 1.0));
    }
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Text model format. See docs/model_format.md.

inline constexpr const char* kModelMagic = "maid-model";
inline constexpr int kModelVersion = 1;

namespace detail {

inline void write_array(std::ostream& os, const char* key, const double* data, std::size_t n) {
  os << key << ' ' << n;
  char buf[40];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(buf, sizeof buf, " %.17g", data[i]);
    os << buf;
  }
  os << '\n';
}

class Tokenizer {
 public:
  explicit Tokenizer(std::string text) : text_(std::move(text)) {}

  std::size_t offset() const { return pos_; }
  /// Start of the most recently read token.
  std::size_t last_start() const { return start_; }

  std::string next(const char* what) {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ >= text_.size()) throw FormatError(std::string("unexpected end of model file, expected ") + what, pos_);
    start_ = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    return text_.substr(start_, pos_ - start_);
  }

  void expect(const std::string& key) {
    const std::string tok = next(key.c_str());
    if (tok != key) throw FormatError("expected '" + key + "', found '" + tok + "'", start_);
  }

  std::uint64_t unsigned_value(const char* what) {
    const std::string tok = next(what);
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
    if (tok.empty() || *end != '\0' || errno != 0 || tok[0] == '-')
      throw FormatError(std::string("invalid integer for ") + what, start_);
    return v;
  }

  double real_value(const char* what) {
    const std::string tok = next(what);
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0' || !std::isfinite(v)) throw FormatError(std::string("invalid number in ") + what, start_);
    return v;
  }

  /// Reads `key n v1 .. vn`; returns the offset of the key.
  std::size_t read_array(const char* key, double* data, std::size_t n) {
    expect(key);
    const std::size_t key_at = start_;
    const std::uint64_t count = unsigned_value(key);
    const std::size_t count_at = start_;
    if (count != n)
      throw FormatError(std::string(key) + " holds " + std::to_string(count) + " values, expected " + std::to_string(n),
                        count_at);
    for (std::size_t i = 0; i < n; ++i) data[i] = real_value(key);
    return key_at;
  }

  void expect_end() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ != text_.size()) throw FormatError("trailing content after 'end'", pos_);
  }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t start_ = 0;
};

}  // namespace detail

inline std::string serialize_model(const ModelT& m) {
  m.validate();
  std::ostringstream os;
  char buf[64];
  os << kModelMagic << '\n' << "version " << kModelVersion << '\n';
  os << "input_dim " << m.input_dim << '\n' << "hidden_dim " << m.hidden_dim << '\n';
  os << "class_count " << m.class_count << '\n' << "seed " << m.seed << '\n';
  std::snprintf(buf, sizeof buf, "bn_epsilon %.17g\n", m.bn_epsilon);
  os << buf;
  // w1 is written row-major: entry (i, j) is the weight from input i to hidden unit j.
  const RowMatrix w1 = m.w1;
  const RowMatrix w2 = m.w2;
  detail::write_array(os, "w1", w1.data(), static_cast<std::size_t>(w1.size()));
  detail::write_array(os, "b1", m.b1.data(), m.hidden_dim);
  detail::write_array(os, "running_mean", m.running_mean.data(), m.hidden_dim);
  detail::write_array(os, "running_variance", m.running_variance.data(), m.hidden_dim);
  detail::write_array(os, "bn_scale", m.bn_scale.data(), m.hidden_dim);
  detail::write_array(os, "bn_shift", m.bn_shift.data(), m.hidden_dim);
  detail::write_array(os, "w2", w2.data(), static_cast<std::size_t>(w2.size()));
  detail::write_array(os, "b2", m.b2.data(), m.class_count);
  os << "end\n";
  return os.str();
}

inline ModelT parse_model(std::string text) {
  detail::Tokenizer tok(std::move(text));
  tok.expect(kModelMagic);
  tok.expect("version");
  if (tok.unsigned_value("version") != static_cast<std::uint64_t>(kModelVersion))
    throw FormatError("unsupported model format version", tok.last_start());

  ModelT m;
  tok.expect("input_dim");
  m.input_dim = tok.unsigned_value("input_dim");
  tok.expect("hidden_dim");
  m.hidden_dim = tok.unsigned_value("hidden_dim");
  tok.expect("class_count");
  m.class_count = tok.unsigned_value("class_count");
  const std::size_t classes_at = tok.last_start();
  if (m.input_dim == 0 || m.hidden_dim == 0 || m.class_count < 2 || m.input_dim > (1u << 24) ||
      m.hidden_dim > (1u << 16) || m.class_count > (1u << 16))
    throw FormatError("model dimensions out of range", classes_at);
  tok.expect("seed");
  m.seed = tok.unsigned_value("seed");
  tok.expect("bn_epsilon");
  m.bn_epsilon = tok.real_value("bn_epsilon");

  const auto in = static_cast<Eigen::Index>(m.input_dim);
  const auto hid = static_cast<Eigen::Index>(m.hidden_dim);
  const auto out = static_cast<Eigen::Index>(m.class_count);
  RowMatrix w1(in, hid), w2(hid, out);
  m.b1.resize(hid);
  m.running_mean.resize(hid);
  m.running_variance.resize(hid);
  m.bn_scale.resize(hid);
  m.bn_shift.resize(hid);
  m.b2.resize(out);
  tok.read_array("w1", w1.data(), static_cast<std::size_t>(w1.size()));
  tok.read_array("b1", m.b1.data(), m.hidden_dim);
  tok.read_array("running_mean", m.running_mean.data(), m.hidden_dim);
  const std::size_t var_at = tok.read_array("running_variance", m.running_variance.data(), m.hidden_dim);
  if ((m.running_variance.array() < 0.0).any()) throw FormatError("negative running variance", var_at);
  tok.read_array("bn_scale", m.bn_scale.data(), m.hidden_dim);
  tok.read_array("bn_shift", m.bn_shift.data(), m.hidden_dim);
  tok.read_array("w2", w2.data(), static_cast<std::size_t>(w2.size()));
  tok.read_array("b2", m.b2.data(), m.class_count);
  tok.expect("end");
  tok.expect_end();
  m.w1 = w1;
  m.w2 = w2;
  return m;
}

inline void export_model(const ModelT& m, const std::filesystem::path& path) {
  const std::string text = serialize_model(m);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

inline ModelT import_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace maid::nn
