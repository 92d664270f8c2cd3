#include "popgnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "popgnn/rng.hpp"

namespace popgnn::metrics {

using nlohmann::json;

std::string to_json(const EvalReport& r) {
  json j;
  j["acc"] = r.acc;
  j["sen"] = r.sen;
  j["spe"] = r.spe;
  j["auc"] = r.auc;
  j["confusion"] = {{r.confusion[0][0], r.confusion[0][1]},
                    {r.confusion[1][0], r.confusion[1][1]}};
  j["n_test"] = r.n_test;
  j["positive_class"] = r.positive_class;
  j["degenerate"] = r.degenerate;
  return j.dump(2);
}

EvalReport eval_report_from_json(const std::string& text) {
  const json j = json::parse(text);
  EvalReport r;
  r.acc = j.at("acc").get<double>();
  r.sen = j.at("sen").get<double>();
  r.spe = j.at("spe").get<double>();
  r.auc = j.at("auc").get<double>();
  for (int t = 0; t < 2; ++t) {
    for (int p = 0; p < 2; ++p) r.confusion[t][p] = j.at("confusion")[t][p].get<int>();
  }
  r.n_test = j.at("n_test").get<int>();
  r.positive_class = j.at("positive_class").get<std::string>();
  r.degenerate = j.at("degenerate").get<bool>();
  return r;
}

EvalReport confusion_and_rates(const std::vector<int>& pred, const std::vector<int>& truth,
                               int positive, int n_classes) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("confusion_and_rates: prediction/truth length mismatch");
  }
  if (pred.empty()) throw std::invalid_argument("confusion_and_rates: empty inputs");
  if (positive < 0 || positive >= n_classes) {
    throw std::invalid_argument("confusion_and_rates: positive class outside the class set");
  }

  EvalReport r;
  r.n_test = static_cast<int>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= n_classes || truth[i] < 0 || truth[i] >= n_classes) {
      throw std::invalid_argument("confusion_and_rates: label outside the class set at index " +
                                  std::to_string(i));
    }
    const int t = truth[i] == positive ? 1 : 0;
    const int p = pred[i] == positive ? 1 : 0;
    r.confusion[t][p] += 1;
  }
  const int tp = r.confusion[1][1], fn = r.confusion[1][0];
  const int tn = r.confusion[0][0], fp = r.confusion[0][1];
  r.acc = static_cast<double>(tp + tn) / static_cast<double>(r.n_test);
  if (tp + fn > 0) {
    r.sen = static_cast<double>(tp) / static_cast<double>(tp + fn);
  } else {
    r.degenerate = true;
  }
  if (tn + fp > 0) {
    r.spe = static_cast<double>(tn) / static_cast<double>(tn + fp);
  } else {
    r.degenerate = true;
  }
  return r;
}

double auc(const Vector& scores, const std::vector<int>& truth, int positive) {
  if (scores.size() != truth.size()) {
    throw std::invalid_argument("auc: scores/truth length mismatch");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int t : truth) n_pos += (t == positive) ? 1 : 0;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auc: both classes must be present");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks over tie groups; ranks are 1-based.
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t s = i; s <= j; ++s) rank[order[s]] = mid;
    i = j + 1;
  }

  double rank_sum_pos = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    if (truth[s] == positive) rank_sum_pos += rank[s];
  }
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

std::vector<popgraph::Masks> kfold_split(const std::vector<SubjectRecord>& subjects, int k,
                                         std::uint64_t seed, bool strict) {
  const std::size_t n = subjects.size();
  if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
  if (n < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("kfold_split: " + std::to_string(n) + " subjects < k = " +
                                std::to_string(k));
  }

  std::vector<std::vector<std::size_t>> by_label;
  std::vector<Label> seen;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t g = 0;
    for (; g < seen.size(); ++g) {
      if (seen[g] == subjects[i].label) break;
    }
    if (g == seen.size()) {
      seen.push_back(subjects[i].label);
      by_label.emplace_back();
    }
    by_label[g].push_back(i);
  }
  if (strict) {
    for (std::size_t g = 0; g < by_label.size(); ++g) {
      if (by_label[g].size() < static_cast<std::size_t>(k)) {
        throw std::invalid_argument("kfold_split: class " + to_string(seen[g]) + " has " +
                                    std::to_string(by_label[g].size()) + " members < k = " +
                                    std::to_string(k));
      }
    }
  }

  // Shuffle within each class, then deal round-robin so folds stay balanced.
  Rng rng = Rng::stream(seed, "kfold");
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  std::size_t next_fold = 0;
  for (auto& group : by_label) {
    rng.shuffle(group);
    for (std::size_t idx : group) {
      folds[next_fold].push_back(idx);
      next_fold = (next_fold + 1) % static_cast<std::size_t>(k);
    }
  }

  std::vector<popgraph::Masks> out;
  out.reserve(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    popgraph::Masks m;
    m.train.assign(n, 1);
    m.val.assign(n, 0);
    m.test.assign(n, 0);
    for (std::size_t idx : folds[static_cast<std::size_t>(f)]) {
      m.test[idx] = 1;
      m.train[idx] = 0;
    }
    const std::size_t vf = static_cast<std::size_t>((f + 1) % k);
    for (std::size_t idx : folds[vf]) {
      m.val[idx] = 1;
      m.train[idx] = 0;
    }
    m.validate_partition();
    out.push_back(std::move(m));
  }
  return out;
}

AggregateReport aggregate(const std::vector<EvalReport>& runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  AggregateReport agg;
  agg.n_runs = static_cast<int>(runs.size());
  agg.runs = runs;

  auto stats = [&runs](auto field, double& mean, double& sd) {
    double total = 0.0;
    for (const auto& r : runs) total += field(r);
    mean = total / static_cast<double>(runs.size());
    double ss = 0.0;
    for (const auto& r : runs) {
      const double d = field(r) - mean;
      ss += d * d;
    }
    sd = runs.size() > 1 ? std::sqrt(ss / static_cast<double>(runs.size() - 1)) : 0.0;
  };
  stats([](const EvalReport& r) { return r.acc; }, agg.acc_mean, agg.acc_std);
  stats([](const EvalReport& r) { return r.sen; }, agg.sen_mean, agg.sen_std);
  stats([](const EvalReport& r) { return r.spe; }, agg.spe_mean, agg.spe_std);
  stats([](const EvalReport& r) { return r.auc; }, agg.auc_mean, agg.auc_std);
  return agg;
}

std::string to_json(const AggregateReport& r) {
  json j;
  j["n_runs"] = r.n_runs;
  j["acc"] = {{"mean", r.acc_mean}, {"std", r.acc_std}};
  j["sen"] = {{"mean", r.sen_mean}, {"std", r.sen_std}};
  j["spe"] = {{"mean", r.spe_mean}, {"std", r.spe_std}};
  j["auc"] = {{"mean", r.auc_mean}, {"std", r.auc_std}};
  json runs = json::array();
  for (const auto& run : r.runs) runs.push_back(json::parse(to_json(run)));
  j["runs"] = runs;
  return j.dump(2);
}

}  // namespace popgnn::metrics
