#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pmoe/model.hpp"
#include "pmoe/rules.hpp"

namespace pmoe {

// CSV with a header row; the final column must be named "label" and hold 0/1.
// ParseError positions are 1-based (line, field).
Dataset load_csv(const std::filesystem::path& path);
Dataset parse_csv(std::istream& in);
// Shortest round-trip decimal representation, so load(write(d)) == d.
void write_csv(std::ostream& out, const Dataset& data);
void write_csv(const std::filesystem::path& path, const Dataset& data);

// Fits a population-stddev standardization on `data` and applies it. Binary
// 0/1 columns are left unchanged; constant columns map to 0 with stddev 1.
Dataset standardize(const Dataset& data);
Standardization fit_standardization(const FeatureMatrix& raw);
// Applies a stored record to raw data.
Dataset apply_standardization(const Dataset& raw, const Standardization& record);

struct SplitSpec {
  double train = 0.7;
  double val = 0.15;
  double test = 0.15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DataSplit {
  Dataset train;
  Dataset val;
  Dataset test;
  std::vector<std::size_t> train_index, val_index, test_index;
};

// Seeded shuffle, then contiguous slices. Empty parts are allowed for val and
// test; their Dataset has zero rows.
DataSplit split_dataset(const Dataset& data, const SplitSpec& spec);

// Which label the synthetic rule predicts inside its region.
enum class ConsequentMode {
  kNegative,
  kPositive,
  kMajority,  // in-region majority of the latent ground truth
  kMinority,  // opposite of the in-region majority
};

struct SynthConfig {
  std::size_t n = 1000;
  std::size_t d = 4;
  // Axis-aligned rule region; +-infinity for unbounded sides. Empty vectors
  // select the default region x_0 >= 0.5.
  std::vector<double> region_lower;
  std::vector<double> region_upper;
  // Probability that an in-region label is replaced by the rule consequent.
  double alpha = 1.0;
  double class_balance = 0.5;
  // Std-dev of Gaussian noise added to the latent logit.
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  // Latent logistic weights (length d). Empty: drawn from N(0, 1).
  std::vector<double> truth_weights;
  ConsequentMode consequent = ConsequentMode::kPositive;

  void validate() const;
};

enum class Regime { kA, kB, kAdversarial };

// Presets: A = compatible but non-informative rule (alpha 0, majority
// consequent); B = rule exact inside its region (alpha 1); adversarial = rule
// predicts the in-region minority label (alpha 0).
SynthConfig regime_config(Regime regime, std::size_t n, std::size_t d, std::uint64_t seed);

struct GroundTruth {
  std::vector<double> weights;
  double intercept = 0.0;
  int consequent = 1;
  double alpha = 0.0;
  std::size_t in_region_rows = 0;
  bool empty_region = false;
  bool balance_attainable = true;
  double expected_positive_rate = 0.0;
  double realized_positive_rate = 0.0;
  // Mean latent probability of the consequent label inside the region.
  double in_region_base_rate = 0.0;

  std::string to_text() const;
};

struct SyntheticData {
  Dataset data;  // raw features, no standardization
  RuleSet rules; // one promote rule matching the region, bound to the schema
  GroundTruth truth;
};

SyntheticData generate_synthetic(const SynthConfig& cfg);

// Versioned text format with lossless hexadecimal floats. A closing [end]
// section lets the loader reject truncated files.
inline constexpr int kModelFormatVersion = 1;
void save_model(const MoEModel& model, std::ostream& out);
void save_model(const MoEModel& model, const std::filesystem::path& path);
MoEModel load_model(std::istream& in);
MoEModel load_model(const std::filesystem::path& path);

std::string format_hex(double v);
double parse_hex(const std::string& text);

}  // namespace pmoe
