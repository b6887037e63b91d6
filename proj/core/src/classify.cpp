#include "semtransfer/classify.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "semtransfer/error.hpp"
#include "semtransfer/rng.hpp"

namespace semtransfer {

namespace {

// log(1 + e^z) without overflow
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double sigmoid(double z) {
  constexpr double lo = std::numeric_limits<double>::denorm_min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return std::clamp(s, lo, hi);
}

LogisticObjective::LogisticObjective(const Eigen::MatrixXd& standardized, Eigen::VectorXd targets, double l2)
    : x_(standardized), t_(std::move(targets)), l2_(l2) {}

double LogisticObjective::value(const Eigen::VectorXd& params) const {
  Eigen::VectorXd unused;
  return value_and_gradient(params, unused);
}

double LogisticObjective::value_and_gradient(const Eigen::VectorXd& params, Eigen::VectorXd& gradient) const {
  const Eigen::Index d = x_.cols();
  const auto n = static_cast<double>(x_.rows());
  const Eigen::VectorXd z = (x_ * params.head(d)).array() + params[d];
  double nll = 0.0;
  Eigen::VectorXd residual(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    nll += softplus(z[i]) - t_[i] * z[i];
    residual[i] = sigmoid(z[i]) - t_[i];
  }
  gradient.resize(d + 1);
  gradient.head(d) = x_.transpose() * residual / n + l2_ * params.head(d);
  gradient[d] = residual.sum() / n + l2_ * params[d];
  return nll / n + 0.5 * l2_ * params.squaredNorm();
}

std::vector<std::string> AttributeModel::degenerate_attributes() const {
  std::vector<std::string> out;
  for (std::size_t m = 0; m < fits.size(); ++m) {
    if (fits[m].degenerate) out.push_back(attributes.name(m));
  }
  return out;
}

AttributeModel train_attribute_classifiers(const FeatureMatrix& features, const LabelMap& labels,
                                           const AssociationMatrix& assoc, const TrainConfig& config) {
  if (labels.empty()) throw ValidationError("training: no labeled instances");
  if (!(config.lr > 0.0) || !(config.l2 >= 0.0) || !(config.tol >= 0.0)) {
    throw ValidationError("training: lr must be positive, l2 and tol non-negative");
  }
  const Eigen::Index d = features.dim();
  const auto n = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd x(n, d);
  std::vector<std::size_t> category_row(labels.size());
  {
    Eigen::Index i = 0;
    for (const auto& [inst, cat] : labels) {
      const auto r = features.instances().find(inst);
      if (!r) throw ValidationError("training: instance '" + inst + "' has no feature row");
      const auto c = assoc.categories().find(cat);
      if (!c) throw ValidationError("training: category '" + cat + "' has no association row");
      x.row(i) = features.values.row(static_cast<Eigen::Index>(*r));
      category_row[static_cast<std::size_t>(i)] = *c;
      ++i;
    }
  }

  AttributeModel model;
  model.attributes = assoc.attributes();
  model.config = config;
  model.feature_mean = x.colwise().mean().transpose();
  model.feature_scale.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = (x.col(j).array() - model.feature_mean[j]).square().mean();
    const double sd = std::sqrt(var);
    model.feature_scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  const Eigen::MatrixXd xs =
      (x.rowwise() - model.feature_mean.transpose()).array().rowwise() / model.feature_scale.transpose().array();

  const auto m_count = static_cast<Eigen::Index>(assoc.attributes().size());
  model.weights = Eigen::MatrixXd::Zero(m_count, d);
  model.bias = Eigen::VectorXd::Zero(m_count);
  model.fits.resize(static_cast<std::size_t>(m_count));

  // Initial points are drawn up front so each attribute's run is independent.
  std::vector<Eigen::VectorXd> init(static_cast<std::size_t>(m_count), Eigen::VectorXd::Zero(d + 1));
  if (config.init_scale > 0.0) {
    Rng rng(config.seed);
    for (auto& p : init) {
      for (Eigen::Index k = 0; k <= d; ++k) p[k] = config.init_scale * rng.normal();
    }
  }

  for (Eigen::Index m = 0; m < m_count; ++m) {
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) t[i] = assoc.values(static_cast<Eigen::Index>(category_row[i]), m);
    AttributeFit& fit = model.fits[static_cast<std::size_t>(m)];
    fit.degenerate = t.minCoeff() == t.maxCoeff();

    LogisticObjective objective(xs, std::move(t), config.l2);
    Eigen::VectorXd params = init[static_cast<std::size_t>(m)];
    Eigen::VectorXd grad;
    double loss = objective.value_and_gradient(params, grad);
    if (config.record_loss) fit.loss_history.push_back(loss);
    std::size_t it = 0;
    while (it < config.max_iters && grad.norm() >= config.tol) {
      params -= config.lr * grad;
      loss = objective.value_and_gradient(params, grad);
      ++it;
      if (config.record_loss) fit.loss_history.push_back(loss);
    }
    fit.iterations = it;
    fit.final_loss = loss;
    fit.gradient_norm = grad.norm();
    model.weights.row(m) = params.head(d).transpose();
    model.bias[m] = params[d];
  }
  return model;
}

AttributeModel train_category_classifiers(const FeatureMatrix& features, const LabelMap& labels,
                                          const Registry& categories, const TrainConfig& config) {
  const auto c = static_cast<Eigen::Index>(categories.size());
  auto identity = AssociationMatrix::create(categories, categories, Eigen::MatrixXd::Identity(c, c), true);
  return train_attribute_classifiers(features, labels, identity, config);
}

AttributeScoreMatrix predict_attribute_scores(const AttributeModel& model, const FeatureMatrix& features) {
  if (features.dim() != model.dim()) {
    throw ValidationError("prediction: feature dimension " + std::to_string(features.dim()) +
                          " does not match model dimension " + std::to_string(model.dim()));
  }
  const Eigen::MatrixXd xs = (features.values.rowwise() - model.feature_mean.transpose()).array().rowwise() /
                             model.feature_scale.transpose().array();
  Eigen::MatrixXd z = xs * model.weights.transpose();
  z.rowwise() += model.bias.transpose();
  Eigen::MatrixXd p = z.unaryExpr([](double v) { return sigmoid(v); });
  return AttributeScoreMatrix::create(features.instances(), model.attributes, std::move(p));
}

namespace {

using nlohmann::json;

json to_array(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd from_array(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string model_to_json(const AttributeModel& model) {
  json j;
  j["format"] = "semtransfer.attribute_model/1";
  j["attributes"] = model.attributes.names();
  j["dim"] = model.dim();
  j["feature_mean"] = to_array(model.feature_mean);
  j["feature_scale"] = to_array(model.feature_scale);
  json ws = json::array();
  for (Eigen::Index m = 0; m < model.weights.rows(); ++m) ws.push_back(to_array(model.weights.row(m).transpose()));
  j["weights"] = ws;
  j["bias"] = to_array(model.bias);
  j["config"] = {{"l2", model.config.l2},
                 {"lr", model.config.lr},
                 {"max_iters", model.config.max_iters},
                 {"tol", model.config.tol},
                 {"seed", model.config.seed},
                 {"init_scale", model.config.init_scale}};
  json fits = json::array();
  for (const auto& f : model.fits) {
    fits.push_back({{"iterations", f.iterations},
                    {"final_loss", f.final_loss},
                    {"gradient_norm", f.gradient_norm},
                    {"degenerate", f.degenerate}});
  }
  j["fits"] = fits;
  return j.dump(2) + "\n";
}

AttributeModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    AttributeModel model;
    model.attributes = Registry(j.at("attributes").get<std::vector<std::string>>());
    const auto d = j.at("dim").get<Eigen::Index>();
    model.feature_mean = from_array(j.at("feature_mean"));
    model.feature_scale = from_array(j.at("feature_scale"));
    const auto& ws = j.at("weights");
    const auto m = static_cast<Eigen::Index>(model.attributes.size());
    if (static_cast<Eigen::Index>(ws.size()) != m) throw ParseError("model: weight rows do not match attributes");
    model.weights.resize(m, d);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto row = from_array(ws.at(static_cast<std::size_t>(r)));
      if (row.size() != d) throw ParseError("model: weight row has wrong dimension");
      model.weights.row(r) = row.transpose();
    }
    model.bias = from_array(j.at("bias"));
    if (model.bias.size() != m || model.feature_mean.size() != d || model.feature_scale.size() != d) {
      throw ParseError("model: inconsistent array lengths");
    }
    if (!model.weights.allFinite() || !model.bias.allFinite()) throw ParseError("model: non-finite parameter");
    const auto& c = j.at("config");
    model.config.l2 = c.at("l2").get<double>();
    model.config.lr = c.at("lr").get<double>();
    model.config.max_iters = c.at("max_iters").get<std::size_t>();
    model.config.tol = c.at("tol").get<double>();
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.config.init_scale = c.value("init_scale", 0.0);
    for (const auto& f : j.at("fits")) {
      AttributeFit fit;
      fit.iterations = f.at("iterations").get<std::size_t>();
      fit.final_loss = f.at("final_loss").get<double>();
      fit.gradient_norm = f.at("gradient_norm").get<double>();
      fit.degenerate = f.at("degenerate").get<bool>();
      model.fits.push_back(fit);
    }
    return model;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  } catch (const ValidationError& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const AttributeModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << model_to_json(model);
}

AttributeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace semtransfer
