#include "pmoe/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "pmoe/errors.hpp"

namespace pmoe {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  std::string_view v = text;
  if (!v.empty() && v.front() == '+') v.remove_prefix(1);
  if (v.empty()) return false;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  return ec == std::errc() && ptr == v.data() + v.size() && std::isfinite(out);
}

std::string format_decimal(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::ofstream open_out(const std::filesystem::path& path, const char* component) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InvalidArgument(component, "cannot open " + path.string() + " for writing");
  }
  return out;
}

}  // namespace

Dataset parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      header = split_fields(line);
      break;
    }
  }
  if (header.empty()) {
    throw ParseError("data_io", "empty CSV file", line_no == 0 ? 1 : line_no, 1);
  }
  const std::size_t header_line = line_no;
  for (auto& h : header) h = trim(h);
  if (header.size() < 2 || header.back() != "label") {
    throw ParseError("data_io", "final column must be named \"label\"", header_line,
                     header.size());
  }
  const std::size_t d = header.size() - 1;

  std::vector<double> values;
  std::vector<double> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError("data_io",
                       "expected " + std::to_string(header.size()) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no, std::min(fields.size(), header.size()) + 1);
    }
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      if (!parse_double(trim(fields[j]), v)) {
        throw ParseError("data_io", "non-numeric cell '" + fields[j] + "'", line_no, j + 1);
      }
      values.push_back(v);
    }
    const std::string label = trim(fields[d]);
    if (label != "0" && label != "1") {
      throw ParseError("data_io", "label must be 0 or 1, got '" + label + "'", line_no, d + 1);
    }
    labels.push_back(label == "1" ? 1.0 : 0.0);
  }
  if (labels.empty()) {
    throw ParseError("data_io", "CSV has a header but no data rows", line_no, 1);
  }

  Dataset data;
  data.columns.assign(header.begin(), header.end() - 1);
  data.features = Eigen::Map<const FeatureMatrix>(values.data(),
                                                  static_cast<Eigen::Index>(labels.size()),
                                                  static_cast<Eigen::Index>(d));
  data.labels = Eigen::Map<const Vector>(labels.data(), static_cast<Eigen::Index>(labels.size()));
  return data;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidArgument("data_io", "cannot open " + path.string());
  }
  return parse_csv(in);
}

void write_csv(std::ostream& out, const Dataset& data) {
  for (const auto& c : data.columns) out << c << ',';
  out << "label\n";
  for (Eigen::Index n = 0; n < data.features.rows(); ++n) {
    for (Eigen::Index j = 0; j < data.features.cols(); ++j) {
      out << format_decimal(data.features(n, j)) << ',';
    }
    out << (data.labels[n] == 1.0 ? '1' : '0') << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  auto out = open_out(path, "data_io");
  write_csv(out, data);
}

Standardization fit_standardization(const FeatureMatrix& raw) {
  Standardization rec;
  const auto n = static_cast<double>(raw.rows());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const auto col = raw.col(j);
    const bool binary = (col.array() == 0.0 || col.array() == 1.0).all();
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (lo == hi) {
      rec.mean.push_back(lo);
      rec.stddev.push_back(1.0);
    } else if (binary) {
      rec.mean.push_back(0.0);
      rec.stddev.push_back(1.0);
    } else {
      const double mean = col.sum() / n;
      const double var = (col.array() - mean).square().sum() / n;
      rec.mean.push_back(mean);
      rec.stddev.push_back(std::sqrt(var));
    }
  }
  return rec;
}

Dataset apply_standardization(const Dataset& raw, const Standardization& record) {
  Dataset out = raw;
  out.features = record.apply(raw.features);
  out.standardization = record;
  return out;
}

Dataset standardize(const Dataset& data) {
  return apply_standardization(data, fit_standardization(data.features));
}

void SplitSpec::validate() const {
  if (train <= 0.0 || val < 0.0 || test < 0.0) {
    throw InvalidArgument("data_io", "split fractions must be >= 0 with train > 0");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw InvalidArgument("data_io", "split fractions must sum to 1");
  }
}

DataSplit split_dataset(const Dataset& data, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = data.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  auto n_val = static_cast<std::size_t>(std::llround(spec.val * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n);
  n_val = std::min(n_val, n - n_train);

  DataSplit out;
  out.train_index.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val_index.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                       order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test_index.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  out.train = data.subset(out.train_index);
  out.val = data.subset(out.val_index);
  out.test = data.subset(out.test_index);
  return out;
}

// ---------------------------------------------------------------------------
// Model persistence

std::string format_hex(double v) {
  char buf[64];
  const double mag = std::abs(v);
  const auto res = std::to_chars(buf, buf + sizeof(buf), mag, std::chars_format::hex);
  std::string out = std::signbit(v) ? "-0x" : "0x";
  out.append(buf, res.ptr);
  return out;
}

double parse_hex(const std::string& text) {
  const std::string trimmed = trim(text);
  std::string_view v = trimmed;
  bool negative = false;
  if (!v.empty() && (v.front() == '-' || v.front() == '+')) {
    negative = v.front() == '-';
    v.remove_prefix(1);
  }
  if (v.size() >= 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) v.remove_prefix(2);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out, std::chars_format::hex);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw FormatError("data_io", "malformed hexadecimal float '" + text + "'");
  }
  if (!std::isfinite(out)) {
    throw FormatError("data_io", "non-finite value '" + text + "'");
  }
  return negative ? -out : out;
}

void save_model(const MoEModel& model, std::ostream& out) {
  model.validate();
  const std::size_t d = model.dim();
  out << "# preferential mixture-of-experts model\n";
  out << "[meta]\n";
  out << "format_version=" << kModelFormatVersion << '\n';
  out << "d=" << d << '\n';
  out << "gamma=" << format_hex(model.gamma) << '\n';
  out << "epsilon=" << format_hex(model.epsilon) << '\n';
  out << "delta=" << format_hex(model.prob_clip_delta) << '\n';
  out << "reference_loss=" << (model.reference_loss ? format_hex(*model.reference_loss) : "none")
      << '\n';
  out << "base_rate=" << format_hex(model.base_rate) << '\n';
  out << "solver=" << model.solver << '\n';
  out << "[columns]\n";
  for (const auto& c : model.columns) out << c << '\n';
  out << "[standardization]\n";
  if (model.standardization) {
    for (std::size_t j = 0; j < d; ++j) {
      out << format_hex(model.standardization->mean[j]) << ' '
          << format_hex(model.standardization->stddev[j]) << '\n';
    }
  }
  out << "[theta]\n";
  for (Eigen::Index j = 0; j < model.theta.size(); ++j) out << format_hex(model.theta[j]) << '\n';
  out << "[w]\n";
  for (Eigen::Index j = 0; j < model.w.size(); ++j) out << format_hex(model.w[j]) << '\n';
  out << "[end]\n";
}

void save_model(const MoEModel& model, const std::filesystem::path& path) {
  auto out = open_out(path, "data_io");
  save_model(model, out);
}

MoEModel load_model(std::istream& in) {
  std::map<std::string, std::vector<std::string>> sections;
  std::string current;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      current = t.substr(1, t.size() - 2);
      if (sections.count(current)) {
        throw FormatError("data_io", "duplicate section [" + current + "]");
      }
      sections[current];
      continue;
    }
    if (current.empty()) {
      throw FormatError("data_io", "content before the first section");
    }
    sections[current].push_back(t);
  }
  if (current != "end" || !sections["end"].empty()) {
    throw FormatError("data_io", "missing trailing [end] section (truncated file?)");
  }
  for (const char* required : {"meta", "columns", "standardization", "theta", "w"}) {
    if (!sections.count(required)) {
      throw FormatError("data_io",
                        std::string("missing section [") + required + "] (truncated file?)");
    }
  }

  std::map<std::string, std::string> meta;
  for (const auto& entry : sections["meta"]) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw FormatError("data_io", "malformed meta entry '" + entry + "'");
    }
    meta[trim(entry.substr(0, eq))] = trim(entry.substr(eq + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end()) throw FormatError("data_io", "missing meta key '" + key + "'");
    return it->second;
  };
  if (get("format_version") != std::to_string(kModelFormatVersion)) {
    throw FormatError("data_io", "unsupported format_version " + get("format_version") +
                                     " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  std::size_t d = 0;
  {
    const std::string& ds = get("d");
    const auto [ptr, ec] = std::from_chars(ds.data(), ds.data() + ds.size(), d);
    if (ec != std::errc() || ptr != ds.data() + ds.size() || d == 0) {
      throw FormatError("data_io", "invalid dimension '" + ds + "'");
    }
  }

  MoEModel model = MoEModel::zeros(d);
  model.gamma = parse_hex(get("gamma"));
  model.epsilon = parse_hex(get("epsilon"));
  model.prob_clip_delta = parse_hex(get("delta"));
  if (get("reference_loss") != "none") model.reference_loss = parse_hex(get("reference_loss"));
  if (meta.count("base_rate")) model.base_rate = parse_hex(meta["base_rate"]);
  if (meta.count("solver")) model.solver = meta["solver"];

  model.columns = sections["columns"];
  if (!model.columns.empty() && model.columns.size() != d) {
    throw FormatError("data_io", "expected " + std::to_string(d) + " column names, found " +
                                     std::to_string(model.columns.size()));
  }
  const auto& stdz = sections["standardization"];
  if (!stdz.empty()) {
    if (stdz.size() != d) {
      throw FormatError("data_io", "standardization section has " + std::to_string(stdz.size()) +
                                       " rows, expected " + std::to_string(d));
    }
    Standardization rec;
    for (const auto& entry : stdz) {
      std::istringstream fields(entry);
      std::string a, b;
      if (!(fields >> a >> b)) throw FormatError("data_io", "malformed standardization row");
      rec.mean.push_back(parse_hex(a));
      rec.stddev.push_back(parse_hex(b));
    }
    model.standardization = rec;
  }
  auto read_vector = [&](const char* name, Vector& dst) {
    const auto& rows = sections[name];
    if (rows.size() != d + 1) {
      throw FormatError("data_io", std::string("section [") + name + "] has " +
                                       std::to_string(rows.size()) + " entries, expected " +
                                       std::to_string(d + 1) + " (truncated file?)");
    }
    for (std::size_t j = 0; j <= d; ++j) dst[static_cast<Eigen::Index>(j)] = parse_hex(rows[j]);
  };
  read_vector("theta", model.theta);
  read_vector("w", model.w);
  try {
    model.validate();
  } catch (const Error& e) {
    throw FormatError("data_io", std::string("invalid model: ") + e.what());
  }
  return model;
}

MoEModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidArgument("data_io", "cannot open model file " + path.string());
  }
  return load_model(in);
}

}  // namespace pmoe
