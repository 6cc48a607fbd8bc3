#include "occrec/classifiers.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "occrec/parallel.hpp"

namespace occrec {

VecF LinearClassifier::decision_values(const VecF& x) const {
  VecF xs = (x - feat_mean).cwiseQuotient(feat_scale);
  return weights * xs + biases;
}

int LinearClassifier::predict(const VecF& x) const {
  const VecF scores = decision_values(x);
  Index best = 0;
  for (Index i = 1; i < scores.size(); ++i)
    if (scores(i) > scores(best)) best = i;
  return class_map[static_cast<std::size_t>(best)];
}

LinearClassifier train_linear_svm(const RowMatF& x, const std::vector<int>& y,
                                  const std::vector<int>& classes, const SvmOptions& opt) {
  if (classes.size() < 2) throw config_error("train_linear_svm: need >= 2 included classes");

  std::vector<int> class_map = classes;
  std::sort(class_map.begin(), class_map.end());

  std::vector<Index> rows;
  for (Index i = 0; i < x.rows(); ++i)
    if (std::binary_search(class_map.begin(), class_map.end(), y[static_cast<std::size_t>(i)]))
      rows.push_back(i);
  const Index n = static_cast<Index>(rows.size());
  for (int c : class_map) {
    const bool present = std::any_of(rows.begin(), rows.end(), [&](Index i) {
      return y[static_cast<std::size_t>(i)] == c;
    });
    if (!present)
      throw config_error("train_linear_svm: class " + std::to_string(c) + " has no rows");
  }

  const Index dim = x.cols();
  const Index cc = static_cast<Index>(class_map.size());

  LinearClassifier clf;
  clf.class_map = class_map;
  clf.feat_mean = VecF::Zero(dim);
  clf.feat_scale = VecF::Ones(dim);
  for (Index i : rows) clf.feat_mean += x.row(i).transpose();
  clf.feat_mean /= static_cast<float>(n);
  VecF var = VecF::Zero(dim);
  for (Index i : rows) var += (x.row(i).transpose() - clf.feat_mean).array().square().matrix();
  var /= static_cast<float>(n);
  for (Index d = 0; d < dim; ++d)
    clf.feat_scale(d) = var(d) > 1e-12f ? std::sqrt(var(d)) : 1.0f;

  RowMatF xs(n, dim);
  std::vector<int> local(static_cast<std::size_t>(n));  // class row per sample
  for (Index i = 0; i < n; ++i) {
    xs.row(i) = ((x.row(rows[static_cast<std::size_t>(i)]).transpose() - clf.feat_mean)
                     .cwiseQuotient(clf.feat_scale))
                    .transpose();
    const int cls = y[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
    local[static_cast<std::size_t>(i)] = static_cast<int>(
        std::lower_bound(class_map.begin(), class_map.end(), cls) - class_map.begin());
  }

  clf.weights = MatF::Zero(cc, dim);
  clf.biases = VecF::Zero(cc);
  const double lambda = 1.0 / (opt.c_reg * static_cast<double>(n));

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opt.seed);

  std::uint64_t t = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index oi = 0; oi < n; ++oi) {
      const Index i = order[static_cast<std::size_t>(oi)];
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const float shrink = static_cast<float>(1.0 - eta * lambda);  // = 1 - 1/t
      clf.weights *= shrink;
      const auto xi = xs.row(i);
      const VecF margins = clf.weights * xi.transpose() + clf.biases;
      for (Index c = 0; c < cc; ++c) {
        const float sign = local[static_cast<std::size_t>(i)] == static_cast<int>(c) ? 1.0f : -1.0f;
        if (sign * margins(c) < 1.0f) {
          clf.weights.row(c) += static_cast<float>(eta) * sign * xi;
          clf.biases(c) += static_cast<float>(eta) * sign;
        }
      }
    }
  }
  return clf;
}

double svm_objective(const LinearClassifier& clf, const RowMatF& x, const std::vector<int>& y,
                     double c_reg) {
  const Index cc = clf.weights.rows();
  std::vector<Index> rows;
  for (Index i = 0; i < x.rows(); ++i)
    if (std::binary_search(clf.class_map.begin(), clf.class_map.end(),
                           y[static_cast<std::size_t>(i)]))
      rows.push_back(i);
  const double lambda = 1.0 / (c_reg * static_cast<double>(rows.size()));
  double hinge = 0;
  for (Index i : rows) {
    const VecF scores = clf.decision_values(x.row(i).transpose());
    for (Index c = 0; c < cc; ++c) {
      const double sign =
          clf.class_map[static_cast<std::size_t>(c)] == y[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
      hinge += std::max(0.0, 1.0 - sign * static_cast<double>(scores(c)));
    }
  }
  hinge /= static_cast<double>(rows.size());
  return 0.5 * lambda * static_cast<double>(clf.weights.squaredNorm()) + hinge;
}

const LinearClassifier& HypothesisBank::pair(int p, int q) const {
  auto it = leave_pair.find(std::minmax(p, q));
  if (it == leave_pair.end())
    throw config_error("HypothesisBank: no pair classifier for {" + std::to_string(p) + "," +
                       std::to_string(q) + "}");
  return it->second;
}

HypothesisBank train_bank(const ActivityStore& store, const SvmOptions& opt) {
  int num_classes = 0;
  for (int label : store.labels) num_classes = std::max(num_classes, label + 1);
  std::vector<int> all(static_cast<std::size_t>(num_classes));
  std::iota(all.begin(), all.end(), 0);

  struct Job {
    std::vector<int> classes;
    int excl_p = -1, excl_q = -1;
  };
  std::vector<Job> jobs;
  jobs.push_back({all, -1, -1});
  for (int p = 0; p < num_classes; ++p) {
    std::vector<int> classes;
    for (int c : all)
      if (c != p) classes.push_back(c);
    jobs.push_back({classes, p, -1});
  }
  if (num_classes > 2) {
    for (int p = 0; p < num_classes; ++p)
      for (int q = p + 1; q < num_classes; ++q) {
        std::vector<int> classes;
        for (int c : all)
          if (c != p && c != q) classes.push_back(c);
        jobs.push_back({classes, p, q});
      }
  }

  std::vector<LinearClassifier> trained(jobs.size());
  std::vector<std::string> failures(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t j = b; j < e; ++j) {
      try {
        if (jobs[j].classes.size() == 1) {
          // two-class bank: excluding one class leaves a constant predictor
          LinearClassifier constant;
          constant.class_map = jobs[j].classes;
          constant.weights = MatF::Zero(1, store.h2.cols());
          constant.biases = VecF::Zero(1);
          constant.feat_mean = VecF::Zero(store.h2.cols());
          constant.feat_scale = VecF::Ones(store.h2.cols());
          trained[j] = std::move(constant);
        } else {
          trained[j] = train_linear_svm(store.h2, store.labels, jobs[j].classes, opt);
        }
      } catch (const std::exception& ex) {
        failures[j] = ex.what();
      }
    }
  }, 1);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!failures[j].empty()) {
      std::string excl = jobs[j].excl_p < 0 ? "none"
                         : jobs[j].excl_q < 0
                             ? std::to_string(jobs[j].excl_p)
                             : "{" + std::to_string(jobs[j].excl_p) + "," +
                                   std::to_string(jobs[j].excl_q) + "}";
      throw config_error("train_bank: classifier with exclusion " + excl + " failed: " +
                         failures[j]);
    }
  }

  HypothesisBank bank;
  bank.num_classes = num_classes;
  std::size_t j = 0;
  bank.full = std::move(trained[j++]);
  bank.leave_one.resize(static_cast<std::size_t>(num_classes));
  for (int p = 0; p < num_classes; ++p) bank.leave_one[static_cast<std::size_t>(p)] = std::move(trained[j++]);
  if (num_classes > 2)
    for (int p = 0; p < num_classes; ++p)
      for (int q = p + 1; q < num_classes; ++q) bank.leave_pair[{p, q}] = std::move(trained[j++]);
  return bank;
}

std::vector<int> hypotheses(const HypothesisBank& bank, const VecF& h2, int m) {
  if (m < 1 || m > 3) throw config_error("hypotheses: m must be in {1,2,3}");
  if (m >= 3 && bank.leave_pair.empty())
    throw config_error("hypotheses: m=3 requires pair classifiers (need > 2 classes)");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(m));
  const int y1 = bank.full.predict(h2);
  out.push_back(y1);
  if (m >= 2) out.push_back(bank.leave_one[static_cast<std::size_t>(y1)].predict(h2));
  if (m >= 3) out.push_back(bank.pair(out[0], out[1]).predict(h2));
  return out;
}

}  // namespace occrec
