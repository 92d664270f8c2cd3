#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "popgnn/rng.hpp"
#include "popgnn/trainer.hpp"

using namespace popgnn;
using namespace popgnn::trainer;

namespace {

/// Two well-separated feature clusters on a two-block graph.
struct Separable {
  fusion::BranchGraphs graphs;
  std::vector<int> labels;
  popgraph::Masks masks;
};

Separable separable_problem(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Separable s;
  const std::size_t f = 6;
  s.graphs.x0 = Matrix(n, f);
  s.graphs.x1 = Matrix(n, f);
  s.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    s.labels[i] = label;
    for (std::size_t j = 0; j < f; ++j) {
      const double mean = label == 0 ? 1.0 : -1.0;
      s.graphs.x0(i, j) = rng.normal(mean, 0.3);
      s.graphs.x1(i, j) = rng.normal(-mean, 0.3);
    }
  }
  Matrix adj(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = (s.labels[i] == s.labels[j]) ? 1.0 : 0.05;
      adj(i, j) = w;
      adj(j, i) = w;
    }
  }
  s.graphs.branch0_adj = adj;
  s.graphs.branch1_adj = adj;
  s.masks.train.assign(n, 0);
  s.masks.val.assign(n, 0);
  s.masks.test.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n * 6 / 10) s.masks.train[i] = 1;
    else if (i < n * 8 / 10) s.masks.val[i] = 1;
    else s.masks.test[i] = 1;
  }
  return s;
}

model::DualBranchModel fresh_model(const Separable& s, const TrainConfig& cfg, model::Arch arch,
                                   std::uint64_t seed) {
  Rng init = Rng::stream(seed, "init");
  auto b0 = model::init_branch(arch, cfg.k_order, s.graphs.x0.cols(), cfg.hidden, 2,
                               cfg.use_bias, cfg.dropout, init);
  auto b1 = model::init_branch(arch, cfg.k_order, s.graphs.x1.cols(), cfg.hidden, 2,
                               cfg.use_bias, cfg.dropout, init);
  return model::DualBranchModel::dual(std::move(b0), std::move(b1));
}

}  // namespace

TEST_CASE("adam: zero gradient and zero decay leave parameters unchanged") {
  std::vector<double> p = {0.7, -1.3};
  const std::vector<double> g = {0.0, 0.0};
  AdamSlot slot;
  adam_step(p.data(), g.data(), slot, 2, 1, 1e-3, 0.9, 0.999, 1e-8, 0.0);
  CHECK(p == std::vector<double>{0.7, -1.3});
}

TEST_CASE("adam: single step with unit gradient matches the hand formula") {
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::vector<double> p = {0.5};
  const std::vector<double> g = {1.0};
  AdamSlot slot;
  adam_step(p.data(), g.data(), slot, 1, 1, lr, b1, b2, eps, 0.0);
  // m = 0.1, v = 0.001; mhat = 1, vhat = 1; p' = 0.5 - lr / (1 + eps).
  const double expect = 0.5 - lr * 1.0 / (std::sqrt(1.0) + eps);
  CHECK(p[0] == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("sgd matches the hand formula, decay shrinks weights") {
  const double lr = 0.1, wd = 0.5;
  std::vector<double> p = {2.0};
  const std::vector<double> g = {0.3};
  sgd_step(p.data(), g.data(), 1, lr, wd);
  CHECK(p[0] == doctest::Approx(2.0 - 0.1 * (0.3 + 0.5 * 2.0)).epsilon(1e-15));

  // Zero gradient: p' = p (1 - lr wd), strictly smaller norm for lr wd in (0,1).
  std::vector<double> q = {-3.0, 4.0};
  const std::vector<double> zero = {0.0, 0.0};
  sgd_step(q.data(), zero.data(), 2, 0.2, 0.5);
  CHECK(std::abs(q[0]) < 3.0);
  CHECK(std::abs(q[1]) < 4.0);
  CHECK(q[0] == doctest::Approx(-3.0 * 0.9).epsilon(1e-15));
}

TEST_CASE("lr = 0 leaves the model exactly at initialization") {
  const Separable s = separable_problem(20, 3);
  TrainConfig cfg;
  cfg.lr = 0.0;
  cfg.epochs = 5;
  cfg.hidden = 4;
  cfg.k_order = 2;
  cfg.dropout = 0.5;
  const auto m0 = fresh_model(s, cfg, model::Arch::cheb, 11);
  const auto result = train(m0, s.graphs, s.labels, s.masks, cfg);
  CHECK(result.model == m0);
}

TEST_CASE("training reduces the loss on a separable problem") {
  const Separable s = separable_problem(30, 5);
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.hidden = 8;
  cfg.k_order = 3;
  cfg.seed = 4;
  const auto result =
      train(fresh_model(s, cfg, model::Arch::cheb, 4), s.graphs, s.labels, s.masks, cfg);
  REQUIRE(result.log.records.size() == 100);
  CHECK(result.log.records.back().train_loss < result.log.records.front().train_loss);
  CHECK(result.log.records.back().fused_val_acc >= 0.9);
}

TEST_CASE("same seed twice gives a bit-identical log and model") {
  const Separable s = separable_problem(18, 7);
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.hidden = 4;
  cfg.k_order = 2;
  cfg.seed = 99;
  cfg.dropout = 0.5;
  const auto r1 =
      train(fresh_model(s, cfg, model::Arch::cheb, 99), s.graphs, s.labels, s.masks, cfg);
  const auto r2 =
      train(fresh_model(s, cfg, model::Arch::cheb, 99), s.graphs, s.labels, s.masks, cfg);
  CHECK(r1.log == r2.log);
  CHECK(r1.model == r2.model);
}

TEST_CASE("poisoned test labels cannot reach the weights") {
  const Separable s = separable_problem(20, 9);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.hidden = 4;
  cfg.k_order = 2;
  cfg.seed = 5;
  std::vector<int> poisoned = s.labels;
  for (std::size_t i = 0; i < poisoned.size(); ++i) {
    if (s.masks.test[i]) poisoned[i] = 1 - poisoned[i];
  }
  const auto clean =
      train(fresh_model(s, cfg, model::Arch::cheb, 5), s.graphs, s.labels, s.masks, cfg);
  const auto dirty =
      train(fresh_model(s, cfg, model::Arch::cheb, 5), s.graphs, poisoned, s.masks, cfg);
  CHECK(clean.model == dirty.model);
  CHECK(clean.log == dirty.log);
}

TEST_CASE("fused validation accuracy is consistent with the late-fusion path") {
  const Separable s = separable_problem(24, 13);
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.hidden = 4;
  cfg.k_order = 2;
  cfg.seed = 21;
  cfg.dropout = 0.0;
  const auto result =
      train(fresh_model(s, cfg, model::Arch::cheb, 21), s.graphs, s.labels, s.masks, cfg);

  // Recompute the final-epoch fused accuracy from scratch.
  const auto& m = result.model;
  std::vector<Matrix> probs;
  for (std::size_t b = 0; b < 2; ++b) {
    const Matrix* adj = b == 0 ? &s.graphs.branch0_adj : &s.graphs.branch1_adj;
    const Matrix* x = b == 0 ? &s.graphs.x0 : &s.graphs.x1;
    const auto prop = model::PropagationOperator::cheb_from_adjacency(*adj, cfg.k_order);
    const auto px = model::propagate_input(prop, *x);
    probs.push_back(model::softmax_rows(model::forward(m.branches[b], prop, px, nullptr,
                                                       nullptr)));
  }
  const Matrix fused = model::late_fuse(probs[0], probs[1]);
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < fused.rows(); ++i) {
    if (!s.masks.val[i]) continue;
    const int pred = fused(i, 1) > fused(i, 0) ? 1 : 0;
    correct += pred == s.labels[i] ? 1 : 0;
    ++total;
  }
  const double acc = static_cast<double>(correct) / static_cast<double>(total);
  CHECK(result.log.records.back().fused_val_acc == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("gcn arch trains too") {
  const Separable s = separable_problem(20, 15);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.hidden = 6;
  cfg.seed = 8;
  const auto result =
      train(fresh_model(s, cfg, model::Arch::gcn, 8), s.graphs, s.labels, s.masks, cfg);
  CHECK(result.log.records.back().train_loss < result.log.records.front().train_loss);
}

TEST_CASE("numeric blowup aborts with the offending epoch") {
  const Separable s = separable_problem(12, 17);
  TrainConfig cfg;
  cfg.lr = 1e160;  // one Adam step throws the weights past the overflow line
  cfg.epochs = 10;
  cfg.hidden = 4;
  cfg.k_order = 2;
  cfg.dropout = 0.0;
  CHECK_THROWS_WITH_AS(
      train(fresh_model(s, cfg, model::Arch::cheb, 2), s.graphs, s.labels, s.masks, cfg),
      doctest::Contains("epoch"), std::runtime_error);
}

TEST_CASE("train log round-trips through its text form") {
  TrainLog log;
  log.records.push_back({1, 1.5, 1.25, 0.5, 0.625, 0.75});
  log.records.push_back({2, 0.033203125, 1.0 / 3.0, 0.9990234375, 1.0, 0.0});
  const TrainLog back = train_log_from_text(to_text(log));
  CHECK(back == log);
}

TEST_CASE("fused-loss training variant still has exact gradients end to end") {
  const Separable s = separable_problem(16, 23);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.hidden = 4;
  cfg.k_order = 2;
  cfg.seed = 31;
  cfg.dropout = 0.0;
  cfg.fuse_in_loss = true;
  const auto result =
      train(fresh_model(s, cfg, model::Arch::cheb, 31), s.graphs, s.labels, s.masks, cfg);
  CHECK(result.log.records.back().train_loss < result.log.records.front().train_loss);
}
