#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semtransfer/matrix.hpp"
#include "semtransfer/split.hpp"

namespace semtransfer {

struct TrainConfig {
  double l2 = 1e-3;
  double lr = 0.1;
  std::size_t max_iters = 2000;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  /// Standard deviation of the random initial parameters; 0 starts at zero.
  double init_scale = 0.0;
  /// Keep the objective value of every iteration in AttributeFit::loss_history.
  bool record_loss = false;
};

struct AttributeFit {
  std::size_t iterations = 0;
  double final_loss = 0.0;
  double gradient_norm = 0.0;
  bool degenerate = false;  // targets contain a single class
  std::vector<double> loss_history;
};

/// One L2-regularized logistic model per attribute over standardized features.
struct AttributeModel {
  Registry attributes;
  Eigen::MatrixXd weights;  // attributes x dim
  Eigen::VectorXd bias;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_scale;
  TrainConfig config;
  std::vector<AttributeFit> fits;

  Eigen::Index dim() const { return weights.cols(); }
  std::vector<std::string> degenerate_attributes() const;
};

/// Mean negative log-likelihood plus (l2/2)|theta|^2 for one attribute.
/// `params` stacks the weights followed by the bias; the bias is regularized
/// too, which keeps the objective strictly convex for any l2 > 0.
class LogisticObjective {
 public:
  LogisticObjective(const Eigen::MatrixXd& standardized, Eigen::VectorXd targets, double l2);

  double value(const Eigen::VectorXd& params) const;
  double value_and_gradient(const Eigen::VectorXd& params, Eigen::VectorXd& gradient) const;
  Eigen::Index param_count() const { return x_.cols() + 1; }

 private:
  const Eigen::MatrixXd& x_;
  Eigen::VectorXd t_;
  double l2_;
};

double sigmoid(double z);

/// Instance i of category y gets target assoc(y, m) for attribute m; soft
/// associations act as fractional targets. Only instances present in
/// `labels` are used. Throws ValidationError when a label is missing from
/// `features` or `assoc`.
AttributeModel train_attribute_classifiers(const FeatureMatrix& features, const LabelMap& labels,
                                           const AssociationMatrix& assoc, const TrainConfig& config);

/// One-vs-rest classifiers over `categories`, i.e. training against an identity association.
AttributeModel train_category_classifiers(const FeatureMatrix& features, const LabelMap& labels,
                                          const Registry& categories, const TrainConfig& config);

/// sigmoid(w_m . standardize(x_i) + b_m), kept strictly inside (0,1).
AttributeScoreMatrix predict_attribute_scores(const AttributeModel& model, const FeatureMatrix& features);

std::string model_to_json(const AttributeModel& model);
AttributeModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const AttributeModel& model);
AttributeModel load_model(const std::filesystem::path& path);

}  // namespace semtransfer
