#include "fleetrisk/models.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include <Eigen/Dense>

namespace fleetrisk {

using nlohmann::json;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic: return "logistic";
    case ModelKind::Forest: return "forest";
    case ModelKind::Gbt: return "gbt";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  const auto t = to_lower(trim(text));
  if (t == "logistic" || t == "lr") return ModelKind::Logistic;
  if (t == "forest" || t == "rf" || t == "random_forest") return ModelKind::Forest;
  if (t == "gbt" || t == "boosted" || t == "gradient_boosting") return ModelKind::Gbt;
  throw Error(ErrorCode::InvalidConfig, "unknown model kind '" + std::string(text) + "'");
}

const FeatureLayout& layout_of(const RiskModel& model) {
  return std::visit([](const auto& m) -> const FeatureLayout& { return m.layout; }, model);
}

ModelKind kind_of(const RiskModel& model) {
  switch (model.index()) {
    case 0: return ModelKind::Logistic;
    case 1: return ModelKind::Forest;
    default: return ModelKind::Gbt;
  }
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void require_both_classes(const FeatureMatrix& m) {
  bool pos = false, neg = false;
  for (int y : m.labels()) (y ? pos : neg) = true;
  if (!pos || !neg) throw Error(ErrorCode::SingleClassLabels, "training labels contain a single class");
}

void require_finite(const FeatureMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    m.for_each_entry(i, [&](std::size_t col, double v) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteFeature,
                    "row " + std::to_string(i) + " column '" + m.columns()[col].name + "' is not finite");
      }
    });
  }
}

void require_layout(const FeatureLayout& model, const FeatureMatrix& m) {
  if (model.width() != m.width()) {
    throw Error(ErrorCode::WidthMismatch, "matrix width " + std::to_string(m.width()) + " != model width " +
                                              std::to_string(model.width()));
  }
  if (!(model == m.layout())) throw Error(ErrorCode::ColumnMismatch, "matrix columns differ from the model's");
}

double mean_log_loss(const std::vector<int>& y, std::span<const double> scores) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += softplus(scores[i]) - y[i] * scores[i];
  return s / static_cast<double>(y.size());
}

// Newton is used while the dense Hessian stays small; wider matrices (large
// one-hot vehicle-id groups) fall back to gradient steps.
constexpr std::size_t kNewtonMaxWidth = 2000;

}  // namespace

double logistic_objective(const FeatureMatrix& m, std::span<const double> w, double b, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double z = m.dot(i, w) + b;
    loss += softplus(z) - m.labels()[i] * z;
  }
  loss /= static_cast<double>(m.rows());
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return loss + 0.5 * l2 * reg;
}

double logistic_gradient(const FeatureMatrix& m, std::span<const double> w, double b, double l2,
                         std::span<double> grad_w) {
  std::fill(grad_w.begin(), grad_w.end(), 0.0);
  double grad_b = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double r = sigmoid(m.dot(i, w) + b) - m.labels()[i];
    m.for_each_entry(i, [&](std::size_t col, double v) { grad_w[col] += r * v; });
    grad_b += r;
  }
  const double inv_n = 1.0 / static_cast<double>(m.rows());
  for (std::size_t j = 0; j < grad_w.size(); ++j) grad_w[j] = grad_w[j] * inv_n + l2 * w[j];
  return grad_b * inv_n;
}

LogisticModel fit_logistic(const FeatureMatrix& m, const LogisticHyper& hyper) {
  if (!(hyper.tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "logistic tol must be positive");
  if (hyper.l2_lambda < 0.0) throw Error(ErrorCode::InvalidConfig, "l2_lambda must be >= 0");
  require_both_classes(m);
  require_finite(m);

  const std::size_t p = m.width();
  const std::size_t n = m.rows();
  std::vector<double> w(p, 0.0), gw(p), w_try(p);
  double b = 0.0;
  const bool newton = p + 1 <= kNewtonMaxWidth;

  LogisticModel model;
  model.layout = m.layout();
  model.hyper = hyper;

  double f = logistic_objective(m, w, b, hyper.l2_lambda);
  double step_hint = 1.0;
  int it = 0;
  double gnorm = 0.0;
  for (;; ++it) {
    const double gb = logistic_gradient(m, w, b, hyper.l2_lambda, gw);
    gnorm = std::sqrt(std::inner_product(gw.begin(), gw.end(), gw.begin(), gb * gb));
    if (gnorm < hyper.tol || it >= hyper.max_iters) break;

    Eigen::VectorXd dir(static_cast<Eigen::Index>(p + 1));
    for (std::size_t j = 0; j < p; ++j) dir[static_cast<Eigen::Index>(j)] = -gw[j];
    dir[static_cast<Eigen::Index>(p)] = -gb;
    bool newton_step = false;
    if (newton) {
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p + 1), static_cast<Eigen::Index>(p + 1));
      std::vector<std::pair<std::size_t, double>> entries;
      for (std::size_t i = 0; i < n; ++i) {
        entries.clear();
        m.for_each_entry(i, [&](std::size_t col, double v) { entries.emplace_back(col, v); });
        entries.emplace_back(p, 1.0);
        const double s = sigmoid(m.dot(i, w) + b);
        const double wt = s * (1.0 - s);
        for (const auto& [a, va] : entries) {
          for (const auto& [c, vc] : entries) h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) += wt * va * vc;
        }
      }
      h /= static_cast<double>(n);
      for (std::size_t j = 0; j < p; ++j) h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += hyper.l2_lambda;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        Eigen::VectorXd nd = ldlt.solve(dir);
        if (nd.allFinite() && nd.dot(dir) > 0.0) {
          dir = nd;
          newton_step = true;
        }
      }
    }

    // Armijo backtracking on the objective
    const double slope = -[&] {
      double s = 0.0;
      for (std::size_t j = 0; j < p; ++j) s += gw[j] * dir[static_cast<Eigen::Index>(j)];
      return s + gb * dir[static_cast<Eigen::Index>(p)];
    }();
    double t = newton_step ? 1.0 : std::min(1.0e6, step_hint * 2.0);
    double f_try = f;
    double b_try = b;
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      for (std::size_t j = 0; j < p; ++j) w_try[j] = w[j] + t * dir[static_cast<Eigen::Index>(j)];
      b_try = b + t * dir[static_cast<Eigen::Index>(p)];
      f_try = logistic_objective(m, w_try, b_try, hyper.l2_lambda);
      if (f_try <= f - 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no further decrease representable
    if (!newton_step) step_hint = t;
    w.swap(w_try);
    b = b_try;
    f = f_try;
  }

  for (double v : w) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteFeature, "logistic fit diverged");
  }
  model.weights = std::move(w);
  model.intercept = b;
  model.iterations = it;
  model.gradient_norm = gnorm;
  return model;
}

ForestModel fit_random_forest(const FeatureMatrix& m, const ForestHyper& hyper) {
  if (hyper.n_estimators < 1) throw Error(ErrorCode::InvalidConfig, "forest n_estimators must be >= 1");
  require_both_classes(m);
  require_finite(m);

  const std::size_t n = m.rows();
  std::vector<double> targets(m.labels().begin(), m.labels().end());
  TreeParams params;
  params.max_depth = hyper.max_depth;
  params.min_leaf = hyper.min_leaf;
  params.max_features = hyper.max_features > 0
                            ? hyper.max_features
                            : static_cast<int>(std::max<std::size_t>(1, (m.width() + 2) / 3));

  ForestModel model;
  model.layout = m.layout();
  model.hyper = hyper;
  model.trees.resize(static_cast<std::size_t>(hyper.n_estimators));

  // per-tree seeds make the result independent of scheduling
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    std::vector<std::size_t> sample(n);
    for (std::size_t t; (t = next.fetch_add(1)) < model.trees.size();) {
      try {
        Rng rng(derive_seed(hyper.seed, static_cast<std::uint64_t>(t)));
        for (auto& s : sample) s = static_cast<std::size_t>(rng.index(n));
        model.trees[t] = fit_tree(m, targets, sample, params, rng);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned threads = hyper.threads > 0 ? static_cast<unsigned>(hyper.threads) : std::thread::hardware_concurrency();
  threads = std::clamp(threads, 1u, static_cast<unsigned>(model.trees.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return model;
}

GbtModel fit_gbt(const FeatureMatrix& m, const GbtHyper& hyper) {
  if (!(hyper.learning_rate > 0.0) || hyper.learning_rate > 1.0) {
    throw Error(ErrorCode::InvalidConfig, "gbt learning_rate must be in (0, 1]");
  }
  if (hyper.n_estimators < 0) throw Error(ErrorCode::InvalidConfig, "gbt n_estimators must be >= 0");
  require_both_classes(m);
  require_finite(m);

  const std::size_t n = m.rows();
  const auto& y = m.labels();
  const double base = static_cast<double>(std::accumulate(y.begin(), y.end(), 0)) / static_cast<double>(n);

  GbtModel model;
  model.layout = m.layout();
  model.hyper = hyper;
  model.init_score = logit(base);

  TreeParams params;
  params.max_depth = hyper.max_depth;
  params.max_features = hyper.max_features;
  params.min_leaf = hyper.min_leaf;
  Rng rng(hyper.seed);

  std::vector<double> score(n, model.init_score), residual(n);
  model.train_loss.push_back(mean_log_loss(y, score));
  for (int round = 0; round < hyper.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - sigmoid(score[i]);
    auto tree = fit_tree(m, residual, params, rng);
    for (std::size_t i = 0; i < n; ++i) {
      score[i] += hyper.learning_rate * tree.predict(m, i);
      if (!std::isfinite(score[i])) throw Error(ErrorCode::NonFiniteFeature, "gbt score became non-finite");
    }
    model.trees.push_back(std::move(tree));
    model.train_loss.push_back(mean_log_loss(y, score));
  }
  return model;
}

RiskModel fit_model(ModelKind kind, const FeatureMatrix& m, const ModelHyper& hyper) {
  switch (kind) {
    case ModelKind::Logistic: return fit_logistic(m, hyper.logistic);
    case ModelKind::Forest: return fit_random_forest(m, hyper.forest);
    case ModelKind::Gbt: return fit_gbt(m, hyper.gbt);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown model kind");
}

std::vector<double> predict_proba(const LogisticModel& model, const FeatureMatrix& m) {
  require_layout(model.layout, m);
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i] = sigmoid(m.dot(i, model.weights) + model.intercept);
  return out;
}

std::vector<double> predict_proba(const ForestModel& model, const FeatureMatrix& m) {
  require_layout(model.layout, m);
  std::vector<double> out(m.rows(), 0.0);
  if (model.trees.empty()) return out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (const auto& t : model.trees) s += t.predict(m, i);
    out[i] = std::clamp(s / static_cast<double>(model.trees.size()), 0.0, 1.0);
  }
  return out;
}

std::vector<double> predict_proba(const GbtModel& model, const FeatureMatrix& m) {
  require_layout(model.layout, m);
  std::vector<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double s = 0.0;
    for (const auto& t : model.trees) s += t.predict(m, i);
    out[i] = sigmoid(model.init_score + model.hyper.learning_rate * s);
  }
  return out;
}

std::vector<double> predict_proba(const RiskModel& model, const FeatureMatrix& m) {
  return std::visit([&](const auto& mod) { return predict_proba(mod, m); }, model);
}

std::vector<std::pair<std::string, double>> coefficient_influence(const LogisticModel& model,
                                                                  const FeatureMatrix& training) {
  if (!(model.layout == training.layout())) {
    throw Error(ErrorCode::NotStandardized, "matrix is not the one the model was fitted on");
  }
  if (!is_standardized(training)) {
    throw Error(ErrorCode::NotStandardized, "model was fitted on an unstandardized matrix");
  }
  return rank_by_magnitude(model.layout.columns(), model.weights);
}

// ---- persistence ---------------------------------------------------------

namespace {

json tree_to_json(const RegressionTree& t) {
  json col = json::array(), thr = json::array(), left = json::array(), right = json::array(), val = json::array();
  for (const auto& n : t.nodes()) {
    col.push_back(n.column);
    thr.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    val.push_back(n.value);
  }
  return {{"column", col}, {"threshold", thr}, {"left", left}, {"right", right}, {"value", val}};
}

RegressionTree tree_from_json(const json& j, std::size_t width) {
  const auto col = j.at("column").get<std::vector<int>>();
  const auto thr = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto val = j.at("value").get<std::vector<double>>();
  const auto k = col.size();
  if (k == 0 || thr.size() != k || left.size() != k || right.size() != k || val.size() != k) {
    throw Error(ErrorCode::Parse, "tree arrays have inconsistent lengths");
  }
  std::vector<TreeNode> nodes(k);
  for (std::size_t i = 0; i < k; ++i) {
    nodes[i] = {col[i], thr[i], left[i], right[i], val[i]};
    if (col[i] >= 0) {
      const auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(k); };
      if (static_cast<std::size_t>(col[i]) >= width || !in_range(left[i]) || !in_range(right[i]) ||
          !std::isfinite(thr[i])) {
        throw Error(ErrorCode::ColumnMismatch, "tree node " + std::to_string(i) + " references an invalid column or child");
      }
    }
  }
  return RegressionTree(std::move(nodes));
}

json columns_to_json(const FeatureLayout& layout) {
  json cols = json::array();
  for (const auto& c : layout.columns()) {
    cols.push_back({{"name", c.name},
                    {"kind", c.kind == ColumnKind::Numeric ? "numeric" : "one_hot"},
                    {"group", c.group},
                    {"level", c.level},
                    {"scale", c.scale}});
  }
  return cols;
}

FeatureLayout layout_from_json(const json& doc) {
  const auto spec = FeatureSpec::parse(doc.at("features").get<std::string>());
  std::vector<ColumnInfo> cols;
  for (const auto& c : doc.at("columns")) {
    ColumnInfo info;
    info.name = c.at("name").get<std::string>();
    const auto kind = c.at("kind").get<std::string>();
    if (kind != "numeric" && kind != "one_hot") throw Error(ErrorCode::ColumnMismatch, "bad column kind '" + kind + "'");
    info.kind = kind == "numeric" ? ColumnKind::Numeric : ColumnKind::OneHot;
    info.group = c.at("group").get<std::string>();
    info.level = c.at("level").get<std::string>();
    info.scale = c.at("scale").get<double>();
    cols.push_back(std::move(info));
  }
  return FeatureLayout::from_columns(spec, std::move(cols));
}

}  // namespace

json model_to_json(const RiskModel& model) {
  const auto& layout = layout_of(model);
  json doc = {{"format", "fleetrisk-model"},
              {"version", 1},
              {"kind", std::string(to_string(kind_of(model)))},
              {"features", layout.spec().label()},
              {"columns", columns_to_json(layout)}};
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LogisticModel>) {
          doc["hyper"] = {{"l2_lambda", m.hyper.l2_lambda},
                          {"max_iters", m.hyper.max_iters},
                          {"tol", m.hyper.tol},
                          {"seed", m.hyper.seed}};
          doc["weights"] = m.weights;
          doc["intercept"] = m.intercept;
          doc["iterations"] = m.iterations;
          doc["gradient_norm"] = m.gradient_norm;
        } else if constexpr (std::is_same_v<T, ForestModel>) {
          doc["hyper"] = {{"n_estimators", m.hyper.n_estimators}, {"max_features", m.hyper.max_features},
                          {"max_depth", m.hyper.max_depth},       {"min_leaf", m.hyper.min_leaf},
                          {"seed", m.hyper.seed}};
          json trees = json::array();
          for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
          doc["trees"] = std::move(trees);
        } else {
          doc["hyper"] = {{"learning_rate", m.hyper.learning_rate}, {"n_estimators", m.hyper.n_estimators},
                          {"max_depth", m.hyper.max_depth},         {"max_features", m.hyper.max_features},
                          {"min_leaf", m.hyper.min_leaf},           {"seed", m.hyper.seed}};
          doc["init_score"] = m.init_score;
          json trees = json::array();
          for (const auto& t : m.trees) trees.push_back(tree_to_json(t));
          doc["trees"] = std::move(trees);
          doc["train_loss"] = m.train_loss;
        }
      },
      model);
  return doc;
}

RiskModel model_from_json(const json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "fleetrisk-model") throw Error(ErrorCode::Parse, "not a model document");
    const auto kind = parse_model_kind(doc.at("kind").get<std::string>());
    auto layout = layout_from_json(doc);
    const auto& h = doc.at("hyper");
    switch (kind) {
      case ModelKind::Logistic: {
        LogisticModel m;
        m.layout = std::move(layout);
        m.hyper = {h.at("l2_lambda").get<double>(), h.at("max_iters").get<int>(), h.at("tol").get<double>(),
                   h.at("seed").get<std::uint64_t>()};
        m.weights = doc.at("weights").get<std::vector<double>>();
        m.intercept = doc.at("intercept").get<double>();
        m.iterations = doc.value("iterations", 0);
        m.gradient_norm = doc.value("gradient_norm", 0.0);
        if (m.weights.size() != m.layout.width()) {
          throw Error(ErrorCode::ColumnMismatch, "weight count does not match column metadata");
        }
        for (double v : m.weights) {
          if (!std::isfinite(v)) throw Error(ErrorCode::Parse, "non-finite weight");
        }
        return m;
      }
      case ModelKind::Forest: {
        ForestModel m;
        m.layout = std::move(layout);
        m.hyper.n_estimators = h.at("n_estimators").get<int>();
        m.hyper.max_features = h.at("max_features").get<int>();
        m.hyper.max_depth = h.at("max_depth").get<int>();
        m.hyper.min_leaf = h.at("min_leaf").get<int>();
        m.hyper.seed = h.at("seed").get<std::uint64_t>();
        for (const auto& t : doc.at("trees")) m.trees.push_back(tree_from_json(t, m.layout.width()));
        if (m.trees.size() != static_cast<std::size_t>(m.hyper.n_estimators)) {
          throw Error(ErrorCode::Parse, "forest tree count does not match n_estimators");
        }
        return m;
      }
      case ModelKind::Gbt: {
        GbtModel m;
        m.layout = std::move(layout);
        m.hyper.learning_rate = h.at("learning_rate").get<double>();
        m.hyper.n_estimators = h.at("n_estimators").get<int>();
        m.hyper.max_depth = h.at("max_depth").get<int>();
        m.hyper.max_features = h.at("max_features").get<int>();
        m.hyper.min_leaf = h.at("min_leaf").get<int>();
        m.hyper.seed = h.at("seed").get<std::uint64_t>();
        m.init_score = doc.at("init_score").get<double>();
        for (const auto& t : doc.at("trees")) m.trees.push_back(tree_from_json(t, m.layout.width()));
        if (doc.contains("train_loss")) m.train_loss = doc.at("train_loss").get<std::vector<double>>();
        return m;
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("model document: ") + e.what());
  }
  throw Error(ErrorCode::Parse, "unknown model kind");
}

}  // namespace fleetrisk
