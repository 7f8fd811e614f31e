#include "lendscore/models/registry.hpp"
#include "lendscore/models/stacking.hpp"

#include "lendscore/eval.hpp"
#include "lendscore/rng.hpp"
#include "testutil.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace lendscore;
using namespace lendscore::models;

namespace {

std::vector<std::size_t> argsort(const Vector& v) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return v[static_cast<Eigen::Index>(a)] < v[static_cast<Eigen::Index>(b)];
  });
  return idx;
}

double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace

TEST_CASE("sigmoid saturates without overflow") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(1000.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sigmoid(-1000.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::isfinite(sigmoid(-1.0e308)));
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("logistic learns a positive slope on separable 1-D data") {
  const auto ds = testutil::make_dataset({{-1.0}, {1.0}}, {0, 1});
  LogisticSpec spec;
  spec.lambda = 0.1;
  const auto model = fit_logistic(ds, spec);
  const auto& logistic = dynamic_cast<const LogisticModel&>(*model);
  CHECK(logistic.weights()[0] > 0.0);
  CHECK(logistic.converged());
}

TEST_CASE("huge ridge collapses weights to zero and predictions to the prior") {
  auto ds = testutil::make_blobs(200, 3, 2.0, 17);
  LogisticSpec spec;
  spec.lambda = 1e6;
  const auto model = fit_logistic(ds, spec);
  const auto& logistic = dynamic_cast<const LogisticModel&>(*model);
  CHECK(logistic.weights().cwiseAbs().maxCoeff() <= 1e-3);
  const Vector p = model->predict_proba(ds.X);
  double prior = 0.0;
  for (int label : ds.y) prior += label;
  prior /= static_cast<double>(ds.y.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    CHECK(p[i] == doctest::Approx(prior).epsilon(5e-3));
  }
}

TEST_CASE("duplicating every row leaves the logistic fit unchanged") {
  auto ds = testutil::make_blobs(60, 2, 1.0, 23);
  data::Dataset doubled = ds;
  doubled.X.conservativeResize(120, 2);
  doubled.X.bottomRows(60) = ds.X;
  doubled.y.insert(doubled.y.end(), ds.y.begin(), ds.y.end());

  LogisticSpec spec;
  const auto a = dynamic_cast<const LogisticModel&>(*fit_logistic(ds, spec));
  const auto b = dynamic_cast<const LogisticModel&>(*fit_logistic(doubled, spec));
  CHECK((a.weights() - b.weights()).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(std::abs(a.bias() - b.bias()) <= 1e-9);
}

TEST_CASE("logistic with zero parameters scores one half") {
  LogisticModel model(Vector::Zero(3), 0.0, 0.0, true);
  const Vector p = model.predict_proba(Matrix::Random(5, 3));
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(p[i] == 0.5);
  CHECK_THROWS_AS(model.predict_proba(Matrix::Random(2, 4)), ModelError);
}

TEST_CASE("entropy values") {
  CHECK(entropy_bits(1.0) == 0.0);
  CHECK(entropy_bits(0.0) == 0.0);
  CHECK(entropy_bits(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(entropy_bits(0.75) == doctest::Approx(0.811278).epsilon(1e-6));
}

TEST_CASE("identical rows give a single leaf with the prior probability") {
  const auto ds = testutil::make_dataset({{2.0}, {2.0}, {2.0}, {2.0}}, {1, 1, 1, 0});
  const auto model = fit_decision_tree(ds, TreeSpec{});
  const auto& tree = dynamic_cast<const DecisionTreeModel&>(*model);
  REQUIRE(tree.nodes().size() == 1);
  CHECK(tree.nodes()[0].prob == doctest::Approx(0.75));  // leaf rule n1/(n1+n0)
  const Vector p = model->predict_proba(ds.X);
  CHECK(p[0] == doctest::Approx(0.75));
}

TEST_CASE("tree splits xor data perfectly at depth 2 but not depth 1") {
  std::vector<std::vector<double>> rows;
  std::vector<int> y;
  for (int rep = 0; rep < 8; ++rep) {
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        rows.push_back({static_cast<double>(a), static_cast<double>(b)});
        y.push_back(a ^ b);
      }
    }
  }
  const auto ds = testutil::make_dataset(rows, y);
  TreeSpec deep;
  deep.max_depth = 2;
  const Vector p2 = fit_decision_tree(ds, deep)->predict_proba(ds.X);
  for (Eigen::Index i = 0; i < p2.size(); ++i) {
    CHECK(p2[i] == doctest::Approx(static_cast<double>(ds.y[static_cast<std::size_t>(i)])));
  }
  TreeSpec shallow;
  shallow.max_depth = 1;
  const Vector p1 = fit_decision_tree(ds, shallow)->predict_proba(ds.X);
  for (Eigen::Index i = 0; i < p1.size(); ++i) CHECK(p1[i] == doctest::Approx(0.5));
}

TEST_CASE("tree respects min_leaf and validates input") {
  CHECK_THROWS_AS(fit_decision_tree(testutil::make_dataset({{1.0}}, {1}), TreeSpec{}), ModelError);
  TreeSpec bad;
  bad.max_depth = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("forest with one tree and no randomness equals the plain tree") {
  auto ds = testutil::make_blobs(150, 3, 1.2, 31);
  ForestSpec forest_spec;
  forest_spec.n_estimators = 1;
  forest_spec.max_depth = 6;
  forest_spec.bootstrap = false;
  forest_spec.mtry = 3;  // all features at every split
  forest_spec.seed = 1;
  TreeSpec tree_spec;
  tree_spec.max_depth = 6;
  const Vector pf = fit_random_forest(ds, forest_spec)->predict_proba(ds.X);
  const Vector pt = fit_decision_tree(ds, tree_spec)->predict_proba(ds.X);
  CHECK((pf - pt).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forest refits bit-identically for a fixed master seed") {
  auto ds = testutil::make_blobs(120, 4, 1.0, 8);
  ForestSpec spec;
  spec.n_estimators = 12;
  spec.max_depth = 5;
  spec.seed = 99;
  const auto a = fit_random_forest(ds, spec);
  const auto b = fit_random_forest(ds, spec);
  CHECK(a->to_json_text() == b->to_json_text());
}

TEST_CASE("forest probability is the mean of tree leaf probabilities") {
  std::vector<std::vector<TreeNode>> trees;
  trees.push_back({TreeNode{-1, 0.0, -1, -1, 0.2}});
  trees.push_back({TreeNode{-1, 0.0, -1, -1, 0.6}});
  RandomForestModel model(std::move(trees), {1, 2}, 2);
  const Vector p = model.predict_proba(Matrix::Zero(1, 2));
  CHECK(p[0] == doctest::Approx(0.4));
}

TEST_CASE("adaboost stage weight matches the closed form at err 1/4") {
  // Depth-1 base: the best stump errs on exactly one of four equally
  // weighted rows, so err_1 = 0.25 and alpha = 0.5*ln(3).
  const auto ds = testutil::make_dataset({{0.0}, {1.0}, {2.0}, {3.0}}, {1, 0, 1, 1});
  AdaBoostSpec spec;
  spec.n_estimators = 1;
  spec.learning_rate = 0.5;
  spec.base_depth = 1;
  const auto model = fit_adaboost(ds, spec);
  const auto& boosted = dynamic_cast<const AdaBoostModel&>(*model);
  REQUIRE(boosted.stage_count() == 1);
  CHECK(boosted.stage_weights()[0] == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12));
  CHECK(!boosted.degenerate());
}

TEST_CASE("adaboost exits after one stage on separable data") {
  const auto ds = testutil::make_dataset({{-2.0}, {-1.0}, {1.0}, {2.0}}, {0, 0, 1, 1});
  AdaBoostSpec spec;
  spec.n_estimators = 50;
  const auto model = fit_adaboost(ds, spec);
  const auto& boosted = dynamic_cast<const AdaBoostModel&>(*model);
  CHECK(boosted.stage_count() == 1);  // training error 0 stops the loop
  const Vector p = model->predict_proba(ds.X);
  CHECK(p[0] < 0.5);
  CHECK(p[3] > 0.5);
}

TEST_CASE("scaling all adaboost stage weights preserves the score ordering") {
  auto ds = testutil::make_blobs(200, 3, 0.8, 77);
  AdaBoostSpec spec;
  spec.n_estimators = 8;
  spec.base_depth = 2;
  const auto model = fit_adaboost(ds, spec);
  auto doc = nlohmann::json::parse(model->to_json_text());
  for (auto& w : doc["stage_weights"]) w = w.get<double>() * 3.7;
  const auto scaled = model_from_json_text(doc.dump());

  const Matrix probe = Matrix::Random(40, 3);
  const Vector a = model->predict_proba(probe);
  const Vector b = scaled->predict_proba(probe);
  CHECK(argsort(a) == argsort(b));
}

TEST_CASE("lda scores one half on the midpoint hyperplane") {
  GaussianClassParams params;
  params.means[0] = Vector::Zero(2);
  params.means[0][0] = -1.0;
  params.means[1] = Vector::Zero(2);
  params.means[1][0] = 1.0;
  params.covariances[0] = Matrix::Identity(2, 2);
  params.covariances[1] = Matrix::Identity(2, 2);
  params.priors = {0.5, 0.5};
  const auto model = make_discriminant(std::move(params), false, 0.0);
  Matrix midpoint = Matrix::Zero(1, 2);
  const Vector p = model->predict_proba(midpoint);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("identical class conditionals reduce the posterior to the prior") {
  GaussianClassParams params;
  params.means[0] = params.means[1] = Vector::Zero(3);
  params.covariances[0] = params.covariances[1] = Matrix::Identity(3, 3);
  params.priors = {0.9, 0.1};
  const auto model = make_discriminant(std::move(params), true, 0.0);
  const Vector p = model->predict_proba(Matrix::Random(20, 3));
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    CHECK(p[i] == doctest::Approx(0.1).epsilon(1e-12));
  }
}

TEST_CASE("qda posterior matches a direct Bayes-rule evaluation") {
  Rng rng(41);
  GaussianClassParams params;
  for (int k = 0; k < 2; ++k) {
    params.means[static_cast<std::size_t>(k)] = Vector::Random(2) * 2.0;
    Matrix a = Matrix::Random(2, 2);
    params.covariances[static_cast<std::size_t>(k)] =
        a * a.transpose() + 0.5 * Matrix::Identity(2, 2);
  }
  params.priors = {0.35, 0.65};
  GaussianClassParams copy = params;
  const auto model = make_discriminant(std::move(copy), true, 0.0);

  // Independent oracle: full Gaussian densities with explicit inverse and
  // determinant, normalized by Bayes' rule.
  auto density = [&](const Vector& x, int k) {
    const auto& mu = params.means[static_cast<std::size_t>(k)];
    const auto& cov = params.covariances[static_cast<std::size_t>(k)];
    const double det = cov.determinant();
    const Vector c = x - mu;
    const double quad = c.dot(cov.inverse() * c);
    return std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(det));
  };
  for (int trial = 0; trial < 100; ++trial) {
    Vector x(2);
    x << rng.normal() * 2.0, rng.normal() * 2.0;
    const double p0 = params.priors[0] * density(x, 0);
    const double p1 = params.priors[1] * density(x, 1);
    const double expected = p1 / (p0 + p1);
    Matrix row = x.transpose();
    CHECK(model->predict_proba(row)[0] == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("discriminant fits stay calibrated on gaussian data") {
  auto ds = testutil::make_blobs(400, 3, 2.0, 13);
  const auto lda = fit_lda(ds, LdaSpec{});
  const auto qda = fit_qda(ds, QdaSpec{});
  const Vector pl = lda->predict_proba(ds.X);
  const Vector pq = qda->predict_proba(ds.X);
  CHECK(eval::auc(pl, ds.y) > 0.9);
  CHECK(eval::auc(pq, ds.y) > 0.9);
  CHECK_THROWS_AS(fit_lda(testutil::make_dataset({{1.0}, {2.0}}, {1, 1}), LdaSpec{}), ModelError);
}

TEST_CASE("single-base stacking tracks the base model") {
  auto encoded = testutil::encoded_synthetic(700, 3, data::GeneratorConfig{});
  StackingSpec spec;
  spec.bases.push_back(ModelSpec{"decision_tree", TreeSpec{}, 0});
  spec.oof_folds = 4;
  const auto stack = fit_stacking(encoded.train, spec, 5);
  const auto base = fit_decision_tree(encoded.train, TreeSpec{});
  const double stack_auc = eval::auc(stack->predict_proba(encoded.test.X), encoded.test.y);
  const double base_auc = eval::auc(base->predict_proba(encoded.test.X), encoded.test.y);
  CHECK(std::abs(stack_auc - base_auc) <= 0.01);
}

TEST_CASE("stacking on constant meta features falls back to the class prior") {
  // Constant X turns the tree base into a constant scorer, so the meta
  // logistic sees a constant column and can only learn the prior.
  std::vector<std::vector<double>> rows(120, {1.0});
  std::vector<int> y;
  for (int i = 0; i < 120; ++i) y.push_back(i % 4 != 0);  // 75% ones
  const auto ds = testutil::make_dataset(rows, y);
  StackingSpec spec;
  spec.bases.push_back(ModelSpec{"decision_tree", TreeSpec{}, 0});
  const auto stack = fit_stacking(ds, spec, 9);
  const Vector p = stack->predict_proba(ds.X);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    CHECK(p[i] == doctest::Approx(0.75).epsilon(0.02));
  }
}

TEST_CASE("stacking is deterministic for a fixed seed") {
  auto ds = testutil::make_blobs(160, 3, 1.0, 21);
  StackingSpec spec;
  spec.bases.push_back(ModelSpec{"decision_tree", TreeSpec{}, 0});
  spec.bases.push_back(ModelSpec{"logistic_l2", LogisticSpec{}, 0});
  CHECK(fit_stacking(ds, spec, 42)->to_json_text() ==
        fit_stacking(ds, spec, 42)->to_json_text());
}

TEST_CASE("zero-initialized mlp outputs one half everywhere") {
  auto model = MlpModel::initialized(3, {4, 2}, 7, true);
  const Vector p = model.predict_proba(Matrix::Random(10, 3));
  for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p[i] == 0.5);
}

TEST_CASE("mlp analytic gradients match central finite differences") {
  Rng rng(55);
  auto model = MlpModel::initialized(5, {4}, 11, false);
  Matrix x(12, 5);
  Vector y(12);
  for (Eigen::Index i = 0; i < 12; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) x(i, j) = rng.normal();
    y[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
  }
  const auto grads = model.gradients_on(x, y);
  const double h = 1e-5;
  double max_rel = 0.0;
  // Probe weights and biases in every layer.
  for (std::size_t l = 0; l < model.weights().size(); ++l) {
    for (int probe = 0; probe < 8; ++probe) {
      const auto r = static_cast<Eigen::Index>(rng.uniform_index(
          static_cast<std::size_t>(model.weights()[l].rows())));
      const auto c = static_cast<Eigen::Index>(rng.uniform_index(
          static_cast<std::size_t>(model.weights()[l].cols())));
      const double saved = model.weights()[l](r, c);
      model.weights()[l](r, c) = saved + h;
      const double up = model.loss_on(x, y);
      model.weights()[l](r, c) = saved - h;
      const double down = model.loss_on(x, y);
      model.weights()[l](r, c) = saved;
      const double fd = (up - down) / (2.0 * h);
      const double analytic = grads.weights[l](r, c);
      max_rel = std::max(max_rel,
                         std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8}));
    }
    const auto bi = static_cast<Eigen::Index>(
        rng.uniform_index(static_cast<std::size_t>(model.biases()[l].size())));
    const double saved = model.biases()[l][bi];
    model.biases()[l][bi] = saved + h;
    const double up = model.loss_on(x, y);
    model.biases()[l][bi] = saved - h;
    const double down = model.loss_on(x, y);
    model.biases()[l][bi] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double analytic = grads.biases[l][bi];
    max_rel = std::max(max_rel,
                       std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8}));
  }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("mlp training is seed-deterministic with early stopping") {
  auto ds = testutil::make_blobs(300, 4, 2.0, 19);
  MlpSpec spec;
  spec.hidden = {8, 4};
  spec.epochs = 15;
  spec.batch_size = 32;
  spec.patience = 5;
  spec.seed = 4;
  const auto a = fit_mlp(ds, spec);
  const auto b = fit_mlp(ds, spec);
  const auto& mlp_a = dynamic_cast<const MlpModel&>(*a);
  const auto& mlp_b = dynamic_cast<const MlpModel&>(*b);
  REQUIRE(!mlp_a.epoch_trace().empty());
  CHECK(mlp_a.epoch_trace() == mlp_b.epoch_trace());
  CHECK(a->to_json_text() == b->to_json_text());
  CHECK(eval::auc(a->predict_proba(ds.X), ds.y) > 0.85);
}

TEST_CASE("every variant round-trips through json and ignores row order") {
  auto encoded = testutil::encoded_synthetic(500, 29, data::GeneratorConfig{});
  KvConfig cfg = KvConfig::parse_string(
      "random_forest.n_estimators=8\n"
      "random_forest.max_depth=5\n"
      "adaboost.n_estimators=6\n"
      "decision_tree.max_depth=4\n"
      "stacking.bases=decision_tree,logistic_l2\n"
      "stacking.oof_folds=3\n"
      "mlp.layers=8,4\n"
      "mlp.epochs=6\n"
      "mlp.batch_size=64\n");

  Matrix probe = encoded.test.X.topRows(40);
  std::vector<std::size_t> perm(40);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(15);
  rng.shuffle(perm);
  Matrix permuted(40, probe.cols());
  for (std::size_t i = 0; i < 40; ++i) {
    permuted.row(static_cast<Eigen::Index>(i)) = probe.row(static_cast<Eigen::Index>(perm[i]));
  }

  for (const auto& variant : known_variants()) {
    CAPTURE(variant);
    const auto spec = spec_from_kv(cfg, variant, 2024);
    const auto model = fit_model(encoded.train, spec);
    CHECK(model->variant() == variant);

    // Refitting with the same seed and data is bit-identical.
    CHECK(fit_model(encoded.train, spec)->to_json_text() == model->to_json_text());

    // Serialization round-trip preserves every prediction bit.
    const auto restored = model_from_json_text(model->to_json_text());
    const Vector p1 = model->predict_proba(probe);
    const Vector p2 = restored->predict_proba(probe);
    CHECK((p1 - p2).cwiseAbs().maxCoeff() == 0.0);
    for (Eigen::Index i = 0; i < p1.size(); ++i) {
      CHECK(p1[i] >= 0.0);
      CHECK(p1[i] <= 1.0);
    }

    // Permuting rows permutes outputs identically.
    const Vector pp = model->predict_proba(permuted);
    for (std::size_t i = 0; i < 40; ++i) {
      CHECK(pp[static_cast<Eigen::Index>(i)] == p1[static_cast<Eigen::Index>(perm[i])]);
    }
  }
}

TEST_CASE("logistic and lda scores are affine; trees are piecewise constant") {
  auto ds = testutil::make_blobs(300, 3, 1.5, 47);
  const auto logistic = fit_logistic(ds, LogisticSpec{});
  const auto lda = fit_lda(ds, LdaSpec{});
  TreeSpec tree_spec;
  tree_spec.max_depth = 3;
  const auto tree = fit_decision_tree(ds, tree_spec);

  Rng rng(5);
  Vector origin = Vector::Zero(3);
  Vector direction(3);
  for (int j = 0; j < 3; ++j) direction[j] = rng.normal();

  auto probe_logit = [&](const ModelPtr& model, double t) {
    Matrix row = (origin + t * direction).transpose();
    return logit(std::clamp(model->predict_proba(row)[0], 1e-12, 1.0 - 1e-12));
  };
  for (const auto* model : {&logistic, &lda}) {
    std::vector<double> values;
    for (int i = 0; i <= 6; ++i) values.push_back(probe_logit(*model, 0.25 * i));
    for (std::size_t i = 2; i < values.size(); ++i) {
      const double second_diff = values[i] - 2.0 * values[i - 1] + values[i - 2];
      CHECK(std::abs(second_diff) <= 1e-8);
    }
  }

  // Probing along an axis crosses finitely many leaves.
  std::set<double> distinct;
  for (int i = 0; i <= 200; ++i) {
    Matrix row = Matrix::Zero(1, 3);
    row(0, 0) = -4.0 + 0.04 * i;
    distinct.insert(tree->predict_proba(row)[0]);
  }
  CHECK(distinct.size() <= 8);  // depth-3 tree has at most 8 leaves
}
