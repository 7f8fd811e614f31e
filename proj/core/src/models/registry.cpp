#include "lendscore/models/registry.hpp"

#include "lendscore/models/stacking.hpp"
#include "lendscore/rng.hpp"

#include <json.hpp>

namespace lendscore::models {

using nlohmann::json;

const std::vector<std::string>& known_variants() {
  static const std::vector<std::string> variants = {
      "logistic_l2", "decision_tree", "random_forest", "adaboost",
      "lda",         "qda",           "stacking",      "mlp"};
  return variants;
}

namespace {

LogisticSpec logistic_from_kv(const KvConfig& cfg, const std::string& prefix) {
  LogisticSpec s;
  s.lambda = cfg.get_double(prefix + "lambda", s.lambda);
  s.tol = cfg.get_double(prefix + "tol", s.tol);
  s.max_iters = static_cast<int>(cfg.get_int(prefix + "max_iters", s.max_iters));
  s.validate();
  return s;
}

}  // namespace

ModelSpec spec_from_kv(const KvConfig& cfg, const std::string& variant, std::uint64_t master_seed) {
  ModelSpec spec;
  spec.variant = variant;
  spec.seed = derive_seed(master_seed, "model:" + variant);
  const std::string prefix = variant + ".";
  if (variant == "logistic_l2") {
    spec.params = logistic_from_kv(cfg, prefix);
  } else if (variant == "decision_tree") {
    TreeSpec s;
    s.max_depth = static_cast<int>(cfg.get_int(prefix + "max_depth", s.max_depth));
    s.min_leaf = static_cast<int>(cfg.get_int(prefix + "min_leaf", s.min_leaf));
    s.validate();
    spec.params = s;
  } else if (variant == "random_forest") {
    ForestSpec s;
    s.n_estimators = static_cast<int>(cfg.get_int(prefix + "n_estimators", s.n_estimators));
    s.max_depth = static_cast<int>(cfg.get_int(prefix + "max_depth", s.max_depth));
    s.min_leaf = static_cast<int>(cfg.get_int(prefix + "min_leaf", s.min_leaf));
    s.bootstrap = cfg.get_bool(prefix + "bootstrap", s.bootstrap);
    s.mtry = static_cast<int>(cfg.get_int(prefix + "mtry", s.mtry));
    s.validate();
    spec.params = s;
  } else if (variant == "adaboost") {
    AdaBoostSpec s;
    s.n_estimators = static_cast<int>(cfg.get_int(prefix + "n_estimators", s.n_estimators));
    s.learning_rate = cfg.get_double(prefix + "learning_rate", s.learning_rate);
    s.base_depth = static_cast<int>(cfg.get_int(prefix + "base_depth", s.base_depth));
    s.validate();
    spec.params = s;
  } else if (variant == "lda") {
    LdaSpec s;
    s.ridge = cfg.get_double(prefix + "ridge", s.ridge);
    s.validate();
    spec.params = s;
  } else if (variant == "qda") {
    QdaSpec s;
    s.ridge = cfg.get_double(prefix + "ridge", s.ridge);
    s.validate();
    spec.params = s;
  } else if (variant == "stacking") {
    StackingSpec s;
    const auto base_names = cfg.get_list(
        prefix + "bases", {"decision_tree", "random_forest", "logistic_l2", "lda"});
    for (const auto& base : base_names) {
      if (base == "stacking") throw ConfigError("stacking: nested stacking bases are not supported");
      s.bases.push_back(spec_from_kv(cfg, base, master_seed));
    }
    s.oof_folds = static_cast<int>(cfg.get_int(prefix + "oof_folds", s.oof_folds));
    s.meta = logistic_from_kv(cfg, prefix + "meta.");
    s.validate();
    spec.params = std::move(s);
  } else if (variant == "mlp") {
    MlpSpec s;
    if (auto layers = cfg.get(prefix + "layers")) {
      s.hidden.clear();
      for (const auto& item : split_list(*layers)) {
        auto v = parse_int(item);
        if (!v || *v < 1) throw ConfigError("mlp.layers: bad layer size '" + item + "'");
        s.hidden.push_back(static_cast<int>(*v));
      }
    }
    s.epochs = static_cast<int>(cfg.get_int(prefix + "epochs", s.epochs));
    s.batch_size = static_cast<int>(cfg.get_int(prefix + "batch_size", s.batch_size));
    s.validation_split = cfg.get_double(prefix + "validation_split", s.validation_split);
    s.patience = static_cast<int>(cfg.get_int(prefix + "patience", s.patience));
    s.alpha = cfg.get_double(prefix + "alpha", s.alpha);
    s.beta1 = cfg.get_double(prefix + "beta1", s.beta1);
    s.beta2 = cfg.get_double(prefix + "beta2", s.beta2);
    s.epsilon = cfg.get_double(prefix + "epsilon", s.epsilon);
    s.validate();
    spec.params = std::move(s);
  } else {
    throw ConfigError("unknown model variant '" + variant + "'");
  }
  return spec;
}

ModelPtr fit_model(const data::Dataset& ds, const ModelSpec& spec) {
  return std::visit(
      [&](const auto& params) -> ModelPtr {
        using T = std::decay_t<decltype(params)>;
        if constexpr (std::is_same_v<T, LogisticSpec>) {
          return fit_logistic(ds, params);
        } else if constexpr (std::is_same_v<T, TreeSpec>) {
          return fit_decision_tree(ds, params);
        } else if constexpr (std::is_same_v<T, ForestSpec>) {
          ForestSpec seeded = params;
          seeded.seed = spec.seed;
          return fit_random_forest(ds, seeded);
        } else if constexpr (std::is_same_v<T, AdaBoostSpec>) {
          return fit_adaboost(ds, params);
        } else if constexpr (std::is_same_v<T, LdaSpec>) {
          return fit_lda(ds, params);
        } else if constexpr (std::is_same_v<T, QdaSpec>) {
          return fit_qda(ds, params);
        } else if constexpr (std::is_same_v<T, StackingSpec>) {
          return fit_stacking(ds, params, spec.seed);
        } else {
          MlpSpec seeded = params;
          seeded.seed = spec.seed;
          return fit_mlp(ds, seeded);
        }
      },
      spec.params);
}

namespace {

std::vector<TreeNode> nodes_from_json(const json& arr) {
  std::vector<TreeNode> nodes;
  nodes.reserve(arr.size());
  for (const auto& n : arr) {
    TreeNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.prob = n.at("prob").get<double>();
    nodes.push_back(node);
  }
  return nodes;
}

Vector vector_from_json(const json& arr) {
  Vector v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

ModelPtr model_from_json(const json& j) {
  if (j.at("format_version").get<int>() != 1) {
    throw DataError("model json: unsupported format version");
  }
  const auto variant = j.at("variant").get<std::string>();
  if (variant == "logistic_l2") {
    return std::make_unique<LogisticModel>(vector_from_json(j.at("w")), j.at("b").get<double>(),
                                           j.at("lambda").get<double>(),
                                           j.at("converged").get<bool>());
  }
  if (variant == "decision_tree") {
    return std::make_unique<DecisionTreeModel>(nodes_from_json(j.at("nodes")),
                                               j.at("dimension").get<std::size_t>());
  }
  if (variant == "random_forest") {
    std::vector<std::vector<TreeNode>> trees;
    for (const auto& t : j.at("trees")) trees.push_back(nodes_from_json(t));
    return std::make_unique<RandomForestModel>(
        std::move(trees), j.at("tree_seeds").get<std::vector<std::uint64_t>>(),
        j.at("dimension").get<std::size_t>());
  }
  if (variant == "adaboost") {
    std::vector<std::vector<TreeNode>> stages;
    for (const auto& t : j.at("stages")) stages.push_back(nodes_from_json(t));
    return std::make_unique<AdaBoostModel>(
        std::move(stages), j.at("stage_weights").get<std::vector<double>>(),
        j.at("learning_rate").get<double>(), j.at("degenerate").get<bool>(),
        j.at("dimension").get<std::size_t>());
  }
  if (variant == "lda" || variant == "qda") {
    GaussianClassParams params;
    for (int k = 0; k < 2; ++k) {
      const auto& c = j.at("class" + std::to_string(k));
      params.means[static_cast<std::size_t>(k)] = vector_from_json(c.at("mean"));
      params.priors[static_cast<std::size_t>(k)] = c.at("prior").get<double>();
      const auto& rows = c.at("covariance");
      const auto d = static_cast<Eigen::Index>(rows.size());
      Matrix cov(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        const auto row = rows[static_cast<std::size_t>(r)].get<std::vector<double>>();
        for (Eigen::Index col = 0; col < d; ++col) {
          cov(r, col) = row[static_cast<std::size_t>(col)];
        }
      }
      params.covariances[static_cast<std::size_t>(k)] = std::move(cov);
    }
    return make_discriminant(std::move(params), variant == "qda", j.at("ridge").get<double>());
  }
  if (variant == "stacking") {
    std::vector<ModelPtr> bases;
    for (const auto& base : j.at("bases")) bases.push_back(model_from_json(base));
    return std::make_unique<StackingModel>(std::move(bases), model_from_json(j.at("meta")));
  }
  if (variant == "mlp") {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
    for (const auto& layer : j.at("layers")) {
      const auto rows = layer.at("rows").get<Eigen::Index>();
      const auto cols = layer.at("cols").get<Eigen::Index>();
      const auto w = layer.at("w").get<std::vector<double>>();
      Matrix m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          m(r, c) = w[static_cast<std::size_t>(r * cols + c)];
        }
      }
      weights.push_back(std::move(m));
      biases.push_back(vector_from_json(layer.at("b")));
    }
    auto model = std::make_unique<MlpModel>(std::move(weights), std::move(biases));
    if (j.contains("epoch_trace")) {
      std::vector<std::pair<double, double>> trace;
      for (const auto& e : j.at("epoch_trace")) {
        trace.emplace_back(e[0].get<double>(), e[1].get<double>());
      }
      model->set_epoch_trace(std::move(trace));
    }
    return model;
  }
  throw DataError("model json: unknown variant '" + variant + "'");
}

}  // namespace

ModelPtr model_from_json_text(const std::string& text) {
  return model_from_json(json::parse(text));
}

}  // namespace lendscore::models
