#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "popgnn/cohort.hpp"
#include "popgnn/matrix.hpp"
#include "popgnn/popgraph.hpp"

namespace popgnn::metrics {

/// Binary-classification report. Rates are fractions in [0, 1]; text output
/// multiplies by 100. confusion[t][p] counts truth t vs prediction p with
/// index 1 = positive class. A zero-denominator rate is reported as 0 with
/// the degenerate flag set.
struct EvalReport {
  double acc = 0.0;
  double sen = 0.0;
  double spe = 0.0;
  double auc = 0.0;
  std::array<std::array<int, 2>, 2> confusion{{{0, 0}, {0, 0}}};
  int n_test = 0;
  std::string positive_class;
  bool degenerate = false;

  bool operator==(const EvalReport&) const = default;
};

std::string to_json(const EvalReport& r);
EvalReport eval_report_from_json(const std::string& text);

/// Confusion counts plus ACC / SEN / SPE. `positive` is the class index
/// treated as positive; labels must lie in [0, n_classes). AUC is left 0.
EvalReport confusion_and_rates(const std::vector<int>& pred, const std::vector<int>& truth,
                               int positive, int n_classes = 2);

/// Rank-based (Mann-Whitney) AUC with ties counted 1/2; exactly equal to the
/// mean over all positive-negative score pairs. Both classes must appear.
double auc(const Vector& scores, const std::vector<int>& truth, int positive);

/// Stratified k-fold masks: fold i is the test set, fold (i+1) mod k the
/// validation set, everything else trains. Subjects of each class are
/// shuffled by seed and dealt round-robin, so folds are disjoint, cover the
/// cohort, and balance classes. With strict=true (default) a class smaller
/// than k is an error; strict=false permits degenerate folds such as
/// leave-one-out.
std::vector<popgraph::Masks> kfold_split(const std::vector<SubjectRecord>& subjects, int k,
                                         std::uint64_t seed, bool strict = true);

struct AggregateReport {
  int n_runs = 0;
  double acc_mean = 0.0, acc_std = 0.0;
  double sen_mean = 0.0, sen_std = 0.0;
  double spe_mean = 0.0, spe_std = 0.0;
  double auc_mean = 0.0, auc_std = 0.0;
  std::vector<EvalReport> runs;
};

AggregateReport aggregate(const std::vector<EvalReport>& runs);
std::string to_json(const AggregateReport& r);

}  // namespace popgnn::metrics
