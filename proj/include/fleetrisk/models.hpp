#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fleetrisk/features.hpp"
#include "fleetrisk/tree.hpp"

namespace fleetrisk {

enum class ModelKind { Logistic, Forest, Gbt };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

struct LogisticHyper {
  double l2_lambda = 1e-4;
  int max_iters = 500;
  double tol = 1e-8;  // stop when the gradient norm drops below this
  std::uint64_t seed = 0;
};

struct ForestHyper {
  int n_estimators = 400;
  int max_features = 0;  // 0 = ceil(width / 3)
  int max_depth = 12;
  int min_leaf = 5;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
};

struct GbtHyper {
  double learning_rate = 0.1;
  int n_estimators = 200;
  int max_depth = 3;
  int max_features = 0;  // 0 = all columns
  int min_leaf = 1;
  std::uint64_t seed = 0;
};

struct ModelHyper {
  LogisticHyper logistic;
  ForestHyper forest;
  GbtHyper gbt;
};

struct LogisticModel {
  FeatureLayout layout;
  std::vector<double> weights;
  double intercept = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  LogisticHyper hyper;
};

struct ForestModel {
  FeatureLayout layout;
  std::vector<RegressionTree> trees;
  ForestHyper hyper;
};

struct GbtModel {
  FeatureLayout layout;
  double init_score = 0.0;
  std::vector<RegressionTree> trees;
  GbtHyper hyper;
  /// Mean training log-loss before the first round and after each round.
  std::vector<double> train_loss;
};

using RiskModel = std::variant<LogisticModel, ForestModel, GbtModel>;

const FeatureLayout& layout_of(const RiskModel& model);
ModelKind kind_of(const RiskModel& model);

double sigmoid(double z);
double logit(double p);

/// Mean negative log-likelihood + l2/2 * |w|^2 (intercept unpenalized).
double logistic_objective(const FeatureMatrix& m, std::span<const double> w, double b, double l2);
/// Writes d/dw into grad_w and returns d/db.
double logistic_gradient(const FeatureMatrix& m, std::span<const double> w, double b, double l2,
                         std::span<double> grad_w);

LogisticModel fit_logistic(const FeatureMatrix& m, const LogisticHyper& hyper = {});
ForestModel fit_random_forest(const FeatureMatrix& m, const ForestHyper& hyper = {});
GbtModel fit_gbt(const FeatureMatrix& m, const GbtHyper& hyper = {});
RiskModel fit_model(ModelKind kind, const FeatureMatrix& m, const ModelHyper& hyper);

/// Probabilities in [0, 1]. The matrix must share the model's layout.
std::vector<double> predict_proba(const RiskModel& model, const FeatureMatrix& m);
std::vector<double> predict_proba(const LogisticModel& model, const FeatureMatrix& m);
std::vector<double> predict_proba(const ForestModel& model, const FeatureMatrix& m);
std::vector<double> predict_proba(const GbtModel& model, const FeatureMatrix& m);

/// Standardized-coefficient ranking. Throws NotStandardized unless `training`
/// is the standardized matrix the model was fitted on.
std::vector<std::pair<std::string, double>> coefficient_influence(const LogisticModel& model,
                                                                  const FeatureMatrix& training);

nlohmann::json model_to_json(const RiskModel& model);
RiskModel model_from_json(const nlohmann::json& doc);

}  // namespace fleetrisk
