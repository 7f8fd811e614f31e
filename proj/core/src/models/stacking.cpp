#include "lendscore/models/stacking.hpp"

#include "lendscore/preprocess.hpp"
#include "lendscore/rng.hpp"

#include <json.hpp>

namespace lendscore::models {

using nlohmann::json;

void StackingSpec::validate() const {
  if (bases.empty()) throw ConfigError("stacking: needs at least one base model");
  if (oof_folds < 2) throw ConfigError("stacking: oof_folds must be >= 2");
  meta.validate();
  for (const auto& base : bases) {
    if (base.variant == "stacking") {
      throw ConfigError("stacking: nested stacking bases are not supported");
    }
  }
}

StackingModel::StackingModel(std::vector<ModelPtr> bases, ModelPtr meta)
    : bases_(std::move(bases)), meta_(std::move(meta)) {
  if (bases_.empty() || !meta_) throw ModelError("stacking: empty ensemble");
  dimension_ = bases_.front()->dimension();
}

Vector StackingModel::predict_proba(const Matrix& X) const {
  check_dimension(X);
  Matrix meta_features(X.rows(), static_cast<Eigen::Index>(bases_.size()));
  for (std::size_t b = 0; b < bases_.size(); ++b) {
    meta_features.col(static_cast<Eigen::Index>(b)) = bases_[b]->predict_proba(X);
  }
  return meta_->predict_proba(meta_features);
}

std::string StackingModel::to_json_text() const {
  json j;
  j["format_version"] = 1;
  j["variant"] = variant();
  j["dimension"] = dimension_;
  j["bases"] = json::array();
  for (const auto& base : bases_) j["bases"].push_back(json::parse(base->to_json_text()));
  j["meta"] = json::parse(meta_->to_json_text());
  return j.dump();
}

ModelPtr fit_stacking(const data::Dataset& ds, const StackingSpec& spec, std::uint64_t seed) {
  spec.validate();
  ds.validate();

  const auto folds =
      preprocess::make_stratified_folds(ds.y, spec.oof_folds, derive_seed(seed, "stacking-oof"));
  Matrix oof(static_cast<Eigen::Index>(ds.rows()), static_cast<Eigen::Index>(spec.bases.size()));
  for (int f = 0; f < folds.k; ++f) {
    std::vector<std::size_t> train_idx, holdout_idx;
    for (std::size_t i = 0; i < folds.assignments.size(); ++i) {
      (folds.assignments[i] == f ? holdout_idx : train_idx).push_back(i);
    }
    const data::Dataset fold_train = ds.subset(train_idx);
    const data::Dataset fold_holdout = ds.subset(holdout_idx);
    for (std::size_t b = 0; b < spec.bases.size(); ++b) {
      ModelSpec base = spec.bases[b];
      base.seed = derive_seed(seed, "stacking-fold:" + std::to_string(f) + ":base:" +
                                        std::to_string(b));
      const auto model = fit_model(fold_train, base);
      const Vector scores = model->predict_proba(fold_holdout.X);
      for (std::size_t i = 0; i < holdout_idx.size(); ++i) {
        oof(static_cast<Eigen::Index>(holdout_idx[i]), static_cast<Eigen::Index>(b)) =
            scores[static_cast<Eigen::Index>(i)];
      }
    }
  }

  data::Dataset meta_ds;
  meta_ds.X = std::move(oof);
  meta_ds.y = ds.y;
  for (const auto& base : spec.bases) meta_ds.feature_names.push_back("oof_" + base.variant);
  ModelPtr meta = fit_logistic(meta_ds, spec.meta);

  std::vector<ModelPtr> bases;
  bases.reserve(spec.bases.size());
  for (std::size_t b = 0; b < spec.bases.size(); ++b) {
    ModelSpec base = spec.bases[b];
    base.seed = derive_seed(seed, "stacking-final:base:" + std::to_string(b));
    bases.push_back(fit_model(ds, base));
  }
  return std::make_unique<StackingModel>(std::move(bases), std::move(meta));
}

}  // namespace lendscore::models
