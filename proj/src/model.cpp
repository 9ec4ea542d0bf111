#include "pmoe/model.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "pmoe/errors.hpp"

namespace pmoe {

namespace {

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) {
    throw InvalidArgument("core_model", std::string(what) + " contains non-finite entries");
  }
}

// dBCE/dyhat evaluated at the clipped prediction.
double bce_derivative(double yhat, double y) { return (yhat - y) / (yhat * (1.0 - yhat)); }

double bce(double yhat, double y) {
  return -(y * std::log(yhat) + (1.0 - y) * std::log(1.0 - yhat));
}

}  // namespace

FeatureMatrix Standardization::apply(const FeatureMatrix& raw) const {
  if (static_cast<std::size_t>(raw.cols()) != dim()) {
    throw DimensionError(dim(), static_cast<std::size_t>(raw.cols()));
  }
  FeatureMatrix out(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const auto ju = static_cast<std::size_t>(j);
    out.col(j) = (raw.col(j).array() - mean[ju]) / stddev[ju];
  }
  return out;
}

void Standardization::validate() const {
  if (mean.size() != stddev.size()) {
    throw InvalidArgument("data_io", "standardization mean/stddev length mismatch");
  }
  for (std::size_t j = 0; j < mean.size(); ++j) {
    if (!std::isfinite(mean[j]) || !std::isfinite(stddev[j]) || !(stddev[j] > 0.0)) {
      throw InvalidArgument("data_io",
                            "standardization column " + std::to_string(j) + " is invalid");
    }
  }
}

void Dataset::validate() const {
  if (features.rows() < 1 || features.cols() < 1) {
    throw InvalidArgument("core_model", "dataset needs N >= 1 and d >= 1");
  }
  if (labels.size() != features.rows()) {
    throw InvalidArgument("core_model", "labels length does not match row count");
  }
  if (columns.size() != dim()) {
    throw InvalidArgument("core_model", "column names do not match feature count");
  }
  for (Eigen::Index n = 0; n < labels.size(); ++n) {
    if (labels[n] != 0.0 && labels[n] != 1.0) {
      throw InvalidArgument("core_model", "label at row " + std::to_string(n) + " is not 0 or 1");
    }
  }
  if (!features.allFinite()) {
    throw InvalidArgument("core_model", "features contain non-finite entries");
  }
  if (standardization) {
    standardization->validate();
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(indices.size()), features.cols());
  out.labels.resize(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = static_cast<Eigen::Index>(indices[i]);
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(src);
    out.labels[static_cast<Eigen::Index>(i)] = labels[src];
  }
  out.columns = columns;
  out.standardization = standardization;
  return out;
}

double Dataset::positive_rate() const {
  return labels.size() == 0 ? 0.0 : labels.mean();
}

MoEModel MoEModel::zeros(std::size_t d) {
  MoEModel m;
  m.theta = Vector::Zero(static_cast<Eigen::Index>(d + 1));
  m.w = Vector::Zero(static_cast<Eigen::Index>(d + 1));
  return m;
}

void MoEModel::validate() const {
  if (theta.size() < 2 || theta.size() != w.size()) {
    throw InvalidArgument("core_model", "theta and w must both have length d+1 with d >= 1");
  }
  require_finite(theta, "theta");
  require_finite(w, "w");
  if (!(gamma >= 0.0) || !(epsilon >= 0.0)) {
    throw InvalidArgument("core_model", "gamma and epsilon must be nonnegative");
  }
  if (!(prob_clip_delta > 0.0 && prob_clip_delta < 0.5)) {
    throw InvalidArgument("core_model", "prob_clip_delta must lie in (0, 0.5)");
  }
  if (reference_loss && !(*reference_loss > 0.0 && std::isfinite(*reference_loss))) {
    throw InvalidArgument("core_model", "reference_loss must be positive and finite");
  }
  if (standardization && standardization->dim() != dim()) {
    throw DimensionError(dim(), standardization->dim());
  }
  if (!columns.empty() && columns.size() != dim()) {
    throw DimensionError(dim(), columns.size());
  }
}

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) {
  if (z >= 0.0) {
    return -std::log1p(std::exp(-z));
  }
  return z - std::log1p(std::exp(z));
}

double clip_probability(double p, double delta) { return std::clamp(p, delta, 1.0 - delta); }

double affine_score(const Vector& params, FeatureRef x) {
  const auto d = params.size() - 1;
  if (x.size() != d) {
    throw DimensionError(static_cast<std::size_t>(d), static_cast<std::size_t>(x.size()));
  }
  return params.head(d).dot(x) + params[d];
}

double expert_probability(const MoEModel& model, FeatureRef x) {
  return clip_probability(sigmoid(affine_score(model.theta, x)), model.prob_clip_delta);
}

double gate_value(const MoEModel& model, FeatureRef x) {
  return clip_probability(sigmoid(affine_score(model.w, x)), model.prob_clip_delta);
}

double mix(double f, double rho, Guideline g, double delta) {
  if (!applicable(g)) {
    return f;
  }
  return clip_probability((1.0 - rho) * f + rho * to_int(g), delta);
}

double predict_moe(const MoEModel& model, FeatureRef x, Guideline g) {
  const double f = expert_probability(model, x);
  if (!applicable(g)) {
    return f;
  }
  return mix(f, gate_value(model, x), g, model.prob_clip_delta);
}

void check_guideline_size(const Dataset& data, const GuidelineVector& guideline) {
  if (guideline.size() != data.rows()) {
    throw InvalidArgument("core_model", "guideline vector has " + std::to_string(guideline.size()) +
                                            " entries for " + std::to_string(data.rows()) +
                                            " rows");
  }
}

Evaluation evaluate(const MoEModel& model, const FeatureMatrix& features,
                    const GuidelineVector& guideline) {
  const auto d = model.theta.size() - 1;
  if (features.cols() != d) {
    throw DimensionError(static_cast<std::size_t>(d), static_cast<std::size_t>(features.cols()));
  }
  if (guideline.size() != static_cast<std::size_t>(features.rows())) {
    throw InvalidArgument("core_model", "guideline vector does not match row count");
  }
  const double delta = model.prob_clip_delta;
  Vector sf = features * model.theta.head(d);
  Vector sg = features * model.w.head(d);
  Evaluation ev;
  ev.expert.resize(features.rows());
  ev.gate.resize(features.rows());
  ev.mixture.resize(features.rows());
  for (Eigen::Index n = 0; n < features.rows(); ++n) {
    const double f = clip_probability(sigmoid(sf[n] + model.theta[d]), delta);
    const double rho = clip_probability(sigmoid(sg[n] + model.w[d]), delta);
    ev.expert[n] = f;
    ev.gate[n] = rho;
    ev.mixture[n] = mix(f, rho, guideline[static_cast<std::size_t>(n)], delta);
  }
  return ev;
}

double gate_l1(const Vector& w) { return w.head(w.size() - 1).lpNorm<1>(); }

double data_loss(const MoEModel& model, const Dataset& data, const GuidelineVector& guideline) {
  check_guideline_size(data, guideline);
  const Evaluation ev = evaluate(model, data.features, guideline);
  double total = 0.0;
  for (Eigen::Index n = 0; n < ev.mixture.size(); ++n) {
    total += bce(ev.mixture[n], data.labels[n]);
  }
  return total;
}

double loss(const MoEModel& model, const Dataset& data, const GuidelineVector& guideline) {
  return data_loss(model, data, guideline) + model.gamma * gate_l1(model.w);
}

Gradients data_loss_gradients(const MoEModel& model, const Dataset& data,
                              const GuidelineVector& guideline) {
  check_guideline_size(data, guideline);
  const Evaluation ev = evaluate(model, data.features, guideline);
  const auto n_rows = data.features.rows();
  const auto d = data.features.cols();
  // Per-row coefficients on the augmented feature vector.
  Vector coef_theta(n_rows);
  Vector coef_w(n_rows);
  for (Eigen::Index n = 0; n < n_rows; ++n) {
    const double f = ev.expert[n];
    const double rho = ev.gate[n];
    const double dloss = bce_derivative(ev.mixture[n], data.labels[n]);
    const Guideline g = guideline[static_cast<std::size_t>(n)];
    if (applicable(g)) {
      coef_theta[n] = dloss * (1.0 - rho) * f * (1.0 - f);
      coef_w[n] = dloss * (to_int(g) - f) * rho * (1.0 - rho);
    } else {
      coef_theta[n] = dloss * f * (1.0 - f);
      coef_w[n] = 0.0;
    }
  }
  Gradients grad;
  grad.theta.resize(d + 1);
  grad.w.resize(d + 1);
  grad.theta.head(d) = data.features.transpose() * coef_theta;
  grad.theta[d] = coef_theta.sum();
  grad.w.head(d) = data.features.transpose() * coef_w;
  grad.w[d] = coef_w.sum();
  return grad;
}

Gradients loss_gradients(const MoEModel& model, const Dataset& data,
                         const GuidelineVector& guideline) {
  Gradients grad = data_loss_gradients(model, data, guideline);
  if (model.gamma != 0.0) {
    for (Eigen::Index j = 0; j + 1 < model.w.size(); ++j) {
      const double wj = model.w[j];
      grad.w[j] += model.gamma * static_cast<double>((wj > 0.0) - (wj < 0.0));
    }
  }
  return grad;
}

bool enforce_norm_cap(Vector& v, double cap) {
  const double norm = v.norm();
  if (norm > cap) {
    v *= cap / norm;
    return true;
  }
  return false;
}

}  // namespace pmoe
