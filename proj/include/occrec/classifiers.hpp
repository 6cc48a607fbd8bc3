#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "occrec/memory.hpp"
#include "occrec/types.hpp"

namespace occrec {

/// One-vs-all linear classifier over a subset of the classes. Inputs are
/// standardized with the training-set statistics stored alongside the
/// weights, so predictions are invariant to a global feature rescale.
struct LinearClassifier {
  MatF weights;                // C' x D
  VecF biases;                 // C'
  std::vector<int> class_map;  // original class id per output row, ascending
  VecF feat_mean, feat_scale;  // D

  VecF decision_values(const VecF& x) const;

  /// Original class id with the highest decision value; ties resolve to the
  /// lowest class id.
  int predict(const VecF& x) const;
};

struct SvmOptions {
  double c_reg = 1.0;  // hinge regularization trade-off; lambda = 1/(c_reg*n)
  int epochs = 50;
  std::uint64_t seed = 7;
};

/// L2-regularized hinge loss, one binary problem per included class,
/// minimized by epoch-based subgradient descent with step 1/(lambda*t).
/// Deterministic: the per-epoch visit order comes from the seed alone.
LinearClassifier train_linear_svm(const RowMatF& x, const std::vector<int>& y,
                                  const std::vector<int>& classes, const SvmOptions& opt = {});

/// Mean hinge objective of a trained classifier on a dataset:
/// lambda/2 |W|^2 + mean one-vs-all hinge. Exposed for convergence checks.
double svm_objective(const LinearClassifier& clf, const RowMatF& x, const std::vector<int>& y,
                     double c_reg);

/// The first/second/third-choice classifier collection: the full classifier,
/// one classifier per excluded class, and one per excluded unordered pair.
struct HypothesisBank {
  LinearClassifier full;
  std::vector<LinearClassifier> leave_one;                   // index = excluded class
  std::map<std::pair<int, int>, LinearClassifier> leave_pair;  // key {p,q}, p < q
  int num_classes = 0;

  const LinearClassifier& pair(int p, int q) const;
  std::size_t count() const { return 1 + leave_one.size() + leave_pair.size(); }
};

/// Trains all 1 + C + C(C-1)/2 classifiers on the stored Layer-2 rows.
/// Classifiers are independent and train in parallel.
HypothesisBank train_bank(const ActivityStore& store, const SvmOptions& opt = {});

/// Ordered class hypotheses: the full classifier's choice, then the
/// leave-one classifier's, then the leave-pair classifier's. Distinct by
/// construction. m must be in {1, 2, 3} and m >= 3 requires pair classifiers.
std::vector<int> hypotheses(const HypothesisBank& bank, const VecF& h2, int m);

}  // namespace occrec
