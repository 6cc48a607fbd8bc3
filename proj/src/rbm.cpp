#include "occrec/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace occrec {

namespace {

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

VecF sigmoid_vec(VecF v) {
  for (Index i = 0; i < v.size(); ++i) v(i) = sigmoid(v(i));
  return v;
}

MatF sigmoid_mat(MatF m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = sigmoid(m(i, j));
  return m;
}

}  // namespace

VecF RbmModel::hidden_probs(const VecF& v) const {
  return sigmoid_vec(weights.transpose() * v + hidden_bias);
}

VecF RbmModel::visible_probs(const VecF& h) const {
  return sigmoid_vec(weights * h + visible_bias);
}

double RbmModel::free_energy(const VecF& v) const {
  const Vec<double> act =
      (weights.transpose() * v + hidden_bias).cast<double>();
  double soft = 0;
  for (Index j = 0; j < act.size(); ++j) soft += std::log1p(std::exp(act(j)));
  return -static_cast<double>(visible_bias.dot(v)) - soft;
}

VecF binarize(const VecF& h2, float threshold) {
  if (!std::isfinite(threshold)) throw config_error("binarize: threshold must be finite");
  VecF out(h2.size());
  for (Index i = 0; i < h2.size(); ++i) out(i) = h2(i) > threshold ? 1.0f : 0.0f;
  return out;
}

VecF binarize(const VecF& h2, const VecF& thresholds) {
  if (thresholds.size() != h2.size())
    throw config_error("binarize: threshold vector length mismatch");
  VecF out(h2.size());
  for (Index i = 0; i < h2.size(); ++i) out(i) = h2(i) > thresholds(i) ? 1.0f : 0.0f;
  return out;
}

VecF median_thresholds(const RowMatF& rows) {
  if (rows.rows() == 0) throw config_error("median_thresholds: empty input");
  VecF out(rows.cols());
  std::vector<float> column(static_cast<std::size_t>(rows.rows()));
  for (Index d = 0; d < rows.cols(); ++d) {
    for (Index i = 0; i < rows.rows(); ++i) column[static_cast<std::size_t>(i)] = rows(i, d);
    const std::size_t mid = (column.size() - 1) / 2;  // lower median
    std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(mid),
                     column.end());
    out(d) = column[mid];
  }
  return out;
}

RbmModel train_rbm(const RowMatF& data, const RbmOptions& opt, const VecF& thresholds) {
  const Index n = data.rows(), v_dim = data.cols();
  if (n == 0) throw config_error("train_rbm: empty data");
  for (Index i = 0; i < n; ++i)
    for (Index d = 0; d < v_dim; ++d)
      if (data(i, d) != 0.0f && data(i, d) != 1.0f)
        throw config_error("train_rbm: data must be binary; row " + std::to_string(i) +
                           " dim " + std::to_string(d) + " = " + std::to_string(data(i, d)));

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<float> init(0.0f, 0.01f);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);

  RbmModel model;
  model.weights.resize(v_dim, opt.hidden);
  for (Index j = 0; j < opt.hidden; ++j)
    for (Index i = 0; i < v_dim; ++i) model.weights(i, j) = init(rng);
  model.visible_bias = VecF::Zero(v_dim);
  model.hidden_bias = VecF::Zero(opt.hidden);
  model.binarize_thresholds =
      thresholds.size() == v_dim ? thresholds : VecF::Zero(v_dim);

  const Index batches = (n + opt.batch - 1) / opt.batch;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    double recon = 0;
    for (Index b = 0; b < batches; ++b) {
      const Index begin = b * opt.batch;
      const Index rows = std::min<Index>(opt.batch, n - begin);
      const auto v0 = data.middleRows(begin, rows);  // rows x V

      MatF h0_prob = sigmoid_mat((v0 * model.weights).rowwise() + model.hidden_bias.transpose());
      MatF h0_sample(rows, opt.hidden);
      for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < opt.hidden; ++j)
          h0_sample(i, j) = unit(rng) < h0_prob(i, j) ? 1.0f : 0.0f;

      MatF v1_prob = sigmoid_mat(
          (h0_sample * model.weights.transpose()).rowwise() + model.visible_bias.transpose());
      MatF h1_prob = sigmoid_mat((v1_prob * model.weights).rowwise() + model.hidden_bias.transpose());

      const float step = opt.learning_rate / static_cast<float>(rows);
      model.weights += step * (v0.transpose() * h0_prob - v1_prob.transpose() * h1_prob);
      model.visible_bias += step * (v0.colwise().sum() - v1_prob.colwise().sum()).transpose();
      model.hidden_bias += step * (h0_prob.colwise().sum() - h1_prob.colwise().sum()).transpose();

      recon += static_cast<double>((v0 - v1_prob).cwiseAbs().sum());
    }
    model.epoch_recon_error.push_back(static_cast<float>(recon / static_cast<double>(n)));
  }
  return model;
}

VecF gibbs_correct(const VecF& v0, const RbmModel& model, int epochs, std::uint64_t seed,
                   bool binary_readout) {
  if (v0.size() != model.visible())
    throw config_error("gibbs_correct: visible size mismatch");
  if (epochs <= 0) return v0;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  VecF v = v0;
  VecF v_prob = v0;
  for (int e = 0; e < epochs; ++e) {
    const VecF h_prob = model.hidden_probs(v);
    VecF h(h_prob.size());
    for (Index j = 0; j < h.size(); ++j) h(j) = unit(rng) < h_prob(j) ? 1.0f : 0.0f;
    v_prob = model.visible_probs(h);
    for (Index i = 0; i < v.size(); ++i) v(i) = unit(rng) < v_prob(i) ? 1.0f : 0.0f;
  }
  return binary_readout ? v : v_prob;
}

int classify_with_rbm(const ImageRecord& image, const DictionaryF& dict, const RbmModel& model,
                      const LinearClassifier& clf, int gibbs_epochs, std::uint64_t seed,
                      bool binary_readout) {
  const VecF h2 = encode_h2(image, dict);
  if (h2.size() != model.visible())
    throw config_error("classify_with_rbm: activity dimension " + std::to_string(h2.size()) +
                       " != RBM visible size " + std::to_string(model.visible()));
  const VecF v0 = binarize(h2, model.binarize_thresholds);
  const VecF corrected = gibbs_correct(v0, model, gibbs_epochs, seed, binary_readout);
  return clf.predict(corrected);
}

}  // namespace occrec
