#include "pmoe/rules.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "pmoe/errors.hpp"

namespace pmoe {

namespace {

constexpr double kRealEqualityTolerance = 1e-9;

struct Token {
  enum class Kind { kWord, kNumber, kOperator, kColon, kEnd } kind;
  std::string text;
  std::size_t column;  // 1-based
};

bool is_word_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}
bool is_number_start(char c) {
  return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
}

std::vector<Token> tokenize(std::string_view line, std::size_t line_no) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (is_word_start(c)) {
      while (i < line.size() && is_word_char(line[i])) ++i;
      out.push_back({Token::Kind::kWord, std::string(line.substr(start, i - start)), start + 1});
    } else if (c == '<' || c == '>' || c == '=') {
      ++i;
      if (c != '=' && i < line.size() && line[i] == '=') ++i;
      out.push_back({Token::Kind::kOperator, std::string(line.substr(start, i - start)), start + 1});
    } else if (c == ':') {
      ++i;
      out.push_back({Token::Kind::kColon, ":", start + 1});
    } else if (is_number_start(c)) {
      ++i;
      while (i < line.size() &&
             (std::isalnum(static_cast<unsigned char>(line[i])) || line[i] == '.' ||
              ((line[i] == '-' || line[i] == '+') && (line[i - 1] == 'e' || line[i - 1] == 'E')))) {
        ++i;
      }
      out.push_back({Token::Kind::kNumber, std::string(line.substr(start, i - start)), start + 1});
    } else {
      throw ParseError("rules", std::string("unexpected character '") + c + "'", line_no,
                       start + 1);
    }
  }
  out.push_back({Token::Kind::kEnd, "", line.size() + 1});
  return out;
}

class LineParser {
 public:
  LineParser(std::vector<Token> tokens, std::size_t line_no)
      : tokens_(std::move(tokens)), line_(line_no) {}

  Rule parse() {
    expect_word("rule");
    Rule rule;
    rule.name = take(Token::Kind::kWord, "rule name").text;
    take(Token::Kind::kColon, "':'");
    expect_word("if");
    rule.antecedent.any_of.emplace_back();
    rule.antecedent.any_of.back().push_back(parse_clause());
    while (peek().kind == Token::Kind::kWord && (peek().text == "and" || peek().text == "or")) {
      const bool is_or = take(Token::Kind::kWord, "connective").text == "or";
      if (is_or) rule.antecedent.any_of.emplace_back();
      rule.antecedent.any_of.back().push_back(parse_clause());
    }
    expect_word("then");
    const Token verb = take(Token::Kind::kWord, "'predict' or 'avoid'");
    if (verb.text != "predict" && verb.text != "avoid") {
      fail("expected 'predict' or 'avoid', got '" + verb.text + "'", verb.column);
    }
    const Token label = take(Token::Kind::kNumber, "label 0 or 1");
    if (label.text != "0" && label.text != "1") {
      fail("rule label must be 0 or 1, got '" + label.text + "'", label.column);
    }
    const int value = label.text == "1" ? 1 : 0;
    if (verb.text == "avoid") {
      rule.kind = RuleKind::kAvoid;
      rule.consequent = 1 - value;
    } else {
      rule.consequent = value;
    }
    if (peek().kind != Token::Kind::kEnd) {
      fail("trailing input '" + peek().text + "'", peek().column);
    }
    return rule;
  }

 private:
  Clause parse_clause() {
    Clause clause;
    const Token feature = take(Token::Kind::kWord, "feature name");
    if (feature.text == "and" || feature.text == "or" || feature.text == "then") {
      fail("expected feature name, got keyword '" + feature.text + "'", feature.column);
    }
    clause.feature = feature.text;
    const Token op = take(Token::Kind::kOperator, "comparison operator");
    if (op.text == "<") clause.op = Comparison::kLess;
    else if (op.text == "<=") clause.op = Comparison::kLessEqual;
    else if (op.text == ">") clause.op = Comparison::kGreater;
    else if (op.text == ">=") clause.op = Comparison::kGreaterEqual;
    else clause.op = Comparison::kEqual;
    const Token number = take(Token::Kind::kNumber, "number");
    clause.value = parse_number(number);
    return clause;
  }

  double parse_number(const Token& tok) {
    std::string_view text = tok.text;
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
      fail("invalid number '" + tok.text + "'", tok.column);
    }
    return v;
  }

  const Token& peek() const { return tokens_[pos_]; }

  Token take(Token::Kind kind, const std::string& what) {
    const Token& tok = peek();
    if (tok.kind != kind) {
      fail("expected " + what + (tok.kind == Token::Kind::kEnd ? " at end of line"
                                                               : ", got '" + tok.text + "'"),
           tok.column);
    }
    return tokens_[pos_++];
  }

  void expect_word(const std::string& word) {
    const Token tok = take(Token::Kind::kWord, "'" + word + "'");
    if (tok.text != word) {
      fail("expected '" + word + "', got '" + tok.text + "'", tok.column);
    }
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t column) const {
    throw ParseError("rules", msg, line_, column);
  }

  std::vector<Token> tokens_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string_view to_string(Comparison op) {
  switch (op) {
    case Comparison::kLess: return "<";
    case Comparison::kLessEqual: return "<=";
    case Comparison::kGreater: return ">";
    case Comparison::kGreaterEqual: return ">=";
    case Comparison::kEqual: return "=";
  }
  return "?";
}

bool Clause::holds(double x) const {
  switch (op) {
    case Comparison::kLess: return x < value;
    case Comparison::kLessEqual: return x <= value;
    case Comparison::kGreater: return x > value;
    case Comparison::kGreaterEqual: return x >= value;
    case Comparison::kEqual:
      // Integer-coded constants match exactly; reals within a tolerance.
      if (std::floor(value) == value) return x == value;
      return std::abs(x - value) <= kRealEqualityTolerance;
  }
  return false;
}

bool Antecedent::holds(FeatureRef raw) const {
  for (const auto& conj : any_of) {
    bool all = true;
    for (const auto& clause : conj) {
      if (!clause.holds(raw[static_cast<Eigen::Index>(clause.column)])) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

RuleSet::RuleSet(std::vector<Rule> rules) : rules_(std::move(rules)) {
  std::unordered_set<std::string> seen;
  for (const auto& r : rules_) {
    if (!seen.insert(r.name).second) {
      throw InvalidArgument("rules", "duplicate rule name '" + r.name + "'");
    }
    if (r.consequent != 0 && r.consequent != 1) {
      throw InvalidArgument("rules", "rule '" + r.name + "' has a non-binary consequent");
    }
  }
}

RuleSet RuleSet::parse(std::string_view text) {
  std::vector<Rule> rules;
  std::unordered_map<std::string, std::size_t> names;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
    const auto first = line.find_first_not_of(" \t");
    if (first != std::string_view::npos && line[first] != '#') {
      Rule rule = LineParser(tokenize(line, line_no), line_no).parse();
      if (names.count(rule.name)) {
        throw ParseError("rules", "duplicate rule name '" + rule.name + "'", line_no, first + 1);
      }
      names.emplace(rule.name, line_no);
      rules.push_back(std::move(rule));
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return RuleSet(std::move(rules));
}

RuleSet RuleSet::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InvalidArgument("rules", "cannot open rules file " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

RuleSet RuleSet::bind(const std::vector<std::string>& schema) const {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t j = 0; j < schema.size(); ++j) index.emplace(schema[j], j);
  RuleSet out = *this;
  for (auto& rule : out.rules_) {
    for (auto& conj : rule.antecedent.any_of) {
      for (auto& clause : conj) {
        const auto it = index.find(clause.feature);
        if (it == index.end()) {
          throw SchemaError("rules", "rule '" + rule.name + "' references unknown feature '" +
                                         clause.feature + "'");
        }
        clause.column = it->second;
      }
    }
  }
  out.bound_ = true;
  return out;
}

void RuleSet::require_bound() const {
  if (!bound_) {
    throw SchemaError("rules", "rule set must be bound to a schema before evaluation");
  }
}

Guideline RuleSet::evaluate(FeatureRef raw) const {
  require_bound();
  for (const auto& rule : rules_) {
    if (rule.antecedent.holds(raw)) {
      return rule.consequent == 1 ? Guideline::kPositive : Guideline::kNegative;
    }
  }
  return Guideline::kNotApplicable;
}

GuidelineVector RuleSet::evaluate(const FeatureMatrix& raw) const {
  GuidelineVector out(static_cast<std::size_t>(raw.rows()));
  for (Eigen::Index n = 0; n < raw.rows(); ++n) {
    out[static_cast<std::size_t>(n)] = evaluate(FeatureRef(raw.row(n).transpose()));
  }
  return out;
}

std::string RuleSet::to_text() const {
  std::ostringstream out;
  for (const auto& rule : rules_) {
    out << "rule " << rule.name << " : if ";
    for (std::size_t i = 0; i < rule.antecedent.any_of.size(); ++i) {
      if (i) out << " or ";
      const auto& conj = rule.antecedent.any_of[i];
      for (std::size_t j = 0; j < conj.size(); ++j) {
        if (j) out << " and ";
        out << conj[j].feature << ' ' << to_string(conj[j].op) << ' '
            << format_number(conj[j].value);
      }
    }
    if (rule.kind == RuleKind::kAvoid) {
      out << " then avoid " << (1 - rule.consequent) << '\n';
    } else {
      out << " then predict " << rule.consequent << '\n';
    }
  }
  return out.str();
}

ComplianceMatrix compliance_matrix(const RuleSet& rules, const FeatureMatrix& raw,
                                   const Vector& predictions, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InvalidArgument("rules", "compliance threshold must lie in (0, 1)");
  }
  if (predictions.size() != raw.rows()) {
    throw InvalidArgument("rules", "predictions do not match row count");
  }
  if (!rules.bound()) {
    throw SchemaError("rules", "rule set must be bound to a schema before evaluation");
  }
  ComplianceMatrix m;
  m.rows = static_cast<std::size_t>(raw.rows());
  m.cols = rules.size();
  m.codes.resize(m.rows * m.cols);
  for (std::size_t n = 0; n < m.rows; ++n) {
    const auto row = raw.row(static_cast<Eigen::Index>(n)).transpose();
    const int predicted = predictions[static_cast<Eigen::Index>(n)] >= threshold ? 1 : 0;
    for (std::size_t k = 0; k < m.cols; ++k) {
      const Rule& rule = rules.rules()[k];
      Compliance c = Compliance::kNotApplicable;
      if (rule.antecedent.holds(row)) {
        c = predicted == rule.consequent ? Compliance::kFollowed : Compliance::kNotFollowed;
      }
      m.codes[n * m.cols + k] = c;
    }
  }
  return m;
}

std::vector<RuleStats> rule_report(const RuleSet& rules, const FeatureMatrix& raw,
                                   const Vector& labels, const Vector& predictions,
                                   double threshold) {
  if (labels.size() != raw.rows()) {
    throw InvalidArgument("rules", "labels do not match row count");
  }
  const ComplianceMatrix codes = compliance_matrix(rules, raw, predictions, threshold);
  std::vector<RuleStats> out;
  for (std::size_t k = 0; k < codes.cols; ++k) {
    const Rule& rule = rules.rules()[k];
    RuleStats stats;
    stats.name = rule.name;
    std::size_t followed = 0;
    std::size_t correct = 0;
    for (std::size_t n = 0; n < codes.rows; ++n) {
      const Compliance c = codes.at(n, k);
      if (c == Compliance::kNotApplicable) continue;
      ++stats.applicable_rows;
      if (c == Compliance::kFollowed) ++followed;
      if (static_cast<int>(labels[static_cast<Eigen::Index>(n)]) == rule.consequent) ++correct;
    }
    stats.applicability =
        codes.rows == 0 ? 0.0 : 100.0 * static_cast<double>(stats.applicable_rows) /
                                    static_cast<double>(codes.rows);
    if (stats.applicable_rows > 0) {
      const auto denom = static_cast<double>(stats.applicable_rows);
      stats.compliance = 100.0 * static_cast<double>(followed) / denom;
      stats.rule_accuracy = 100.0 * static_cast<double>(correct) / denom;
    }
    out.push_back(std::move(stats));
  }
  return out;
}

}  // namespace pmoe
