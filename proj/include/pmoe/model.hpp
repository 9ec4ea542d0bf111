#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pmoe {

using Vector = Eigen::VectorXd;
// Row-major so each observation is a contiguous row.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using FeatureRef = Eigen::Ref<const Vector>;

inline constexpr double kDefaultClipDelta = 1e-7;
inline constexpr double kDefaultNormCap = 1e3;

// Output of the human guideline function g.
enum class Guideline : int { kNotApplicable = -1, kNegative = 0, kPositive = 1 };
using GuidelineVector = std::vector<Guideline>;

inline int to_int(Guideline g) { return static_cast<int>(g); }
inline bool applicable(Guideline g) { return g != Guideline::kNotApplicable; }

// Per-column affine map x -> (x - mean) / stddev. Population (1/N) stddev.
// Binary 0/1 columns and constant columns are stored with an identity or
// centring transform (see data_io::standardize).
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;

  std::size_t dim() const { return mean.size(); }
  FeatureMatrix apply(const FeatureMatrix& raw) const;
  void validate() const;
};

struct Dataset {
  FeatureMatrix features;  // N x d
  Vector labels;           // N entries, each 0 or 1
  std::vector<std::string> columns;
  std::optional<Standardization> standardization;

  std::size_t rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

  // Throws InvalidArgument when N, d, labels, finiteness or column names are
  // inconsistent.
  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  double positive_rate() const;
};

// Gate and expert are both logistic in the (bias-augmented) features. The last
// entry of `theta` and `w` is the bias.
struct MoEModel {
  Vector theta;
  Vector w;
  double gamma = 0.0;
  double epsilon = 0.0;
  std::optional<double> reference_loss;
  std::optional<Standardization> standardization;
  std::vector<std::string> columns;
  double prob_clip_delta = kDefaultClipDelta;
  // Class-1 fraction of the training rows; the human-only baseline falls back
  // to the majority class where no rule applies.
  double base_rate = 0.5;
  std::string solver = "unconstrained";

  static MoEModel zeros(std::size_t d);

  std::size_t dim() const { return static_cast<std::size_t>(theta.size()) - 1; }
  void validate() const;
};

double sigmoid(double z);
// ln sigma(z) without clipping, stable for large |z|.
double log_sigmoid(double z);
double clip_probability(double p, double delta);

// Affine score v[0..d-1] . x + v[d].
double affine_score(const Vector& params, FeatureRef x);

double expert_probability(const MoEModel& model, FeatureRef x);
double gate_value(const MoEModel& model, FeatureRef x);
double predict_moe(const MoEModel& model, FeatureRef x, Guideline g);

// Mixture combination on already-clipped expert and gate values.
double mix(double f, double rho, Guideline g, double delta);

struct Evaluation {
  Vector expert;  // f_n, clipped
  Vector gate;    // rho_n, clipped
  Vector mixture; // yhat_n, clipped
};

Evaluation evaluate(const MoEModel& model, const FeatureMatrix& features,
                    const GuidelineVector& guideline);

// L1 norm of the gate weights, bias excluded.
double gate_l1(const Vector& w);

double data_loss(const MoEModel& model, const Dataset& data, const GuidelineVector& guideline);
// Cross-entropy plus gamma * ||w||_1 (bias excluded).
double loss(const MoEModel& model, const Dataset& data, const GuidelineVector& guideline);

struct Gradients {
  Vector theta;
  Vector w;
};

// Exact chain-rule gradient of `loss`. The L1 term contributes
// gamma * sign(w_j), zero at exact zeros and on the bias.
Gradients loss_gradients(const MoEModel& model, const Dataset& data,
                         const GuidelineVector& guideline);
// Same, without the L1 term.
Gradients data_loss_gradients(const MoEModel& model, const Dataset& data,
                              const GuidelineVector& guideline);

// Rescales v in place when ||v|| exceeds cap. Returns true if it did.
bool enforce_norm_cap(Vector& v, double cap = kDefaultNormCap);

void check_guideline_size(const Dataset& data, const GuidelineVector& guideline);

}  // namespace pmoe
