#include "blr/modelspec.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "numeric_text.hpp"

namespace blr {

DistributionSpec DistributionSpec::normal(double location, double scale) {
  return {DistributionKind::Normal, location, scale};
}

DistributionSpec DistributionSpec::half_normal(double scale) {
  return {DistributionKind::HalfNormal, 0.0, scale};
}

ModelSpec default_model() {
  return {DistributionSpec::normal(0.0, 1.0), DistributionSpec::half_normal(1.0),
          DistributionSpec::half_normal(1.0)};
}

namespace {

constexpr std::array<std::string_view, 3> kParamNames{"a", "b", "sigma"};

// Positive-support parameters must use HalfNormal, the slope must use Normal.
bool prior_supported(std::size_t param, DistributionKind kind) {
  return param == 0 ? kind == DistributionKind::Normal : kind == DistributionKind::HalfNormal;
}

void validate_prior(std::size_t param, const DistributionSpec& d) {
  const std::string name(kParamNames[param]);
  if (!(d.scale > 0.0) || !std::isfinite(d.scale))
    throw DomainError("prior scale of '" + name + "' must be positive and finite");
  if (!std::isfinite(d.location)) throw DomainError("prior location of '" + name + "' must be finite");
  if (d.kind == DistributionKind::HalfNormal && d.location != 0.0)
    throw DomainError("HalfNormal prior of '" + name + "' has no location");
  if (!prior_supported(param, d.kind))
    throw DomainError("prior of '" + name + "' has the wrong support");
}

enum class Tok { Ident, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string_view text;
  std::size_t column = 0;
};

bool ident_start(unsigned char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(unsigned char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(unsigned char c) { return c >= '0' && c <= '9'; }

std::vector<Token> lex_line(std::string_view line, std::size_t lineno) {
  std::vector<Token> toks;
  std::size_t i = 0;
  while (i < line.size()) {
    const unsigned char c = static_cast<unsigned char>(line[i]);
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
    } else if (ident_start(c)) {
      std::size_t j = i + 1;
      while (j < line.size() && ident_char(static_cast<unsigned char>(line[j]))) ++j;
      toks.push_back({Tok::Ident, line.substr(i, j - i), i + 1});
      i = j;
    } else if (digit(c) || c == '.') {
      std::size_t j = i + 1;
      while (j < line.size()) {
        const unsigned char d = static_cast<unsigned char>(line[j]);
        if (digit(d) || d == '.') {
          ++j;
        } else if ((d == 'e' || d == 'E')) {
          ++j;
          if (j < line.size() && (line[j] == '+' || line[j] == '-')) ++j;
        } else {
          break;
        }
      }
      toks.push_back({Tok::Number, line.substr(i, j - i), i + 1});
      i = j;
    } else if (c == '~' || c == '(' || c == ')' || c == ',' || c == '*' || c == '+' || c == '-') {
      toks.push_back({Tok::Punct, line.substr(i, 1), i + 1});
      ++i;
    } else {
      throw SpecParseError(SpecErrorCode::Syntax, lineno, i + 1, "unexpected character");
    }
  }
  toks.push_back({Tok::End, {}, line.size() + 1});
  return toks;
}

class LineParser {
 public:
  LineParser(std::vector<Token> toks, std::size_t lineno) : toks_(std::move(toks)), line_(lineno) {}

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (t.kind != Tok::End) ++pos_;
    return t;
  }

  [[noreturn]] void fail(SpecErrorCode code, const Token& at, const std::string& what) const {
    throw SpecParseError(code, line_, at.column, what);
  }

  void expect_punct(std::string_view p, SpecErrorCode code = SpecErrorCode::Syntax) {
    const Token& t = next();
    if (t.kind != Tok::Punct || t.text != p) fail(code, t, "expected '" + std::string(p) + "'");
  }

  const Token& expect_ident(SpecErrorCode code = SpecErrorCode::Syntax) {
    const Token& t = next();
    if (t.kind != Tok::Ident) fail(code, t, "expected identifier");
    return t;
  }

  void expect_end() {
    const Token& t = peek();
    if (t.kind != Tok::End) fail(SpecErrorCode::Syntax, t, "unexpected trailing input");
  }

  // [+|-] number
  std::pair<double, const Token*> number() {
    const Token& first = peek();
    double sign = 1.0;
    if (first.kind == Tok::Punct && (first.text == "-" || first.text == "+")) {
      sign = first.text == "-" ? -1.0 : 1.0;
      next();
    }
    const Token& t = next();
    if (t.kind != Tok::Number) fail(SpecErrorCode::BadNumber, t, "expected a number");
    auto v = detail::parse_finite_double(t.text);
    if (!v) fail(SpecErrorCode::BadNumber, t, "malformed number '" + std::string(t.text) + "'");
    return {sign * *v, &first};
  }

  std::size_t line() const { return line_; }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::size_t line_;
};

struct ParseState {
  std::array<std::optional<DistributionSpec>, 3> priors;
  bool have_likelihood = false;
};

void parse_param(LineParser& p, ParseState& st) {
  const Token& name = p.expect_ident();
  std::size_t index = kParamNames.size();
  for (std::size_t k = 0; k < kParamNames.size(); ++k) {
    if (name.text == kParamNames[k]) index = k;
  }
  if (index == kParamNames.size())
    p.fail(SpecErrorCode::UnknownParameter, name,
           "unknown parameter '" + std::string(name.text) + "' (expected a, b or sigma)");
  if (st.priors[index])
    p.fail(SpecErrorCode::DuplicateParameter, name, "parameter '" + std::string(name.text) + "' declared twice");

  p.expect_punct("~");
  const Token& dist = p.expect_ident(SpecErrorCode::UnknownDistribution);
  DistributionKind kind;
  std::size_t arity;
  if (dist.text == "Normal") {
    kind = DistributionKind::Normal;
    arity = 2;
  } else if (dist.text == "HalfNormal") {
    kind = DistributionKind::HalfNormal;
    arity = 1;
  } else {
    p.fail(SpecErrorCode::UnknownDistribution, dist,
           "unknown distribution '" + std::string(dist.text) + "' (expected Normal or HalfNormal)");
  }

  p.expect_punct("(");
  std::vector<std::pair<double, const Token*>> args;
  if (!(p.peek().kind == Tok::Punct && p.peek().text == ")")) {
    args.push_back(p.number());
    while (p.peek().kind == Tok::Punct && p.peek().text == ",") {
      p.next();
      args.push_back(p.number());
    }
  }
  const Token& close = p.peek();
  p.expect_punct(")");
  p.expect_end();

  if (args.size() != arity) {
    p.fail(SpecErrorCode::WrongArity, close,
           std::string(dist.text) + " takes " + std::to_string(arity) + " argument(s), got " +
               std::to_string(args.size()));
  }
  const auto& [scale, scale_tok] = args.back();
  if (!(scale > 0.0)) p.fail(SpecErrorCode::NonPositiveScale, *scale_tok, "scale must be positive");

  if (!prior_supported(index, kind)) {
    std::string why = index == 0 ? "the slope 'a' takes a Normal prior"
                                 : "'" + std::string(name.text) +
                                       "' must be positive; use HalfNormal(<scale>) instead of Normal";
    p.fail(SpecErrorCode::UnsupportedPrior, dist, why);
  }

  st.priors[index] = kind == DistributionKind::Normal ? DistributionSpec::normal(args[0].first, scale)
                                                      : DistributionSpec::half_normal(scale);
}

void parse_likelihood(LineParser& p, ParseState& st, const Token& keyword) {
  if (st.have_likelihood) p.fail(SpecErrorCode::DuplicateLikelihood, keyword, "likelihood declared twice");
  constexpr SpecErrorCode bad = SpecErrorCode::BadLikelihood;
  auto word = [&](std::string_view w) {
    const Token& t = p.next();
    if (t.kind != Tok::Ident || t.text != w)
      p.fail(bad, t, "likelihood must read 'Y ~ Normal(a * X + b, sigma)'; expected '" + std::string(w) + "'");
  };
  auto punct = [&](std::string_view s) {
    const Token& t = p.next();
    if (t.kind != Tok::Punct || t.text != s)
      p.fail(bad, t, "likelihood must read 'Y ~ Normal(a * X + b, sigma)'; expected '" + std::string(s) + "'");
  };
  word("Y");
  punct("~");
  word("Normal");
  punct("(");
  word("a");
  punct("*");
  word("X");
  punct("+");
  word("b");
  punct(",");
  word("sigma");
  punct(")");
  p.expect_end();
  st.have_likelihood = true;
}

}  // namespace

void validate(const ModelSpec& spec) {
  validate_prior(0, spec.slope_prior);
  validate_prior(1, spec.intercept_prior);
  validate_prior(2, spec.noise_prior);
}

std::string_view to_string(SpecErrorCode code) {
  switch (code) {
    case SpecErrorCode::Syntax: return "Syntax";
    case SpecErrorCode::UnknownStatement: return "UnknownStatement";
    case SpecErrorCode::UnknownParameter: return "UnknownParameter";
    case SpecErrorCode::UnknownDistribution: return "UnknownDistribution";
    case SpecErrorCode::WrongArity: return "WrongArity";
    case SpecErrorCode::BadNumber: return "BadNumber";
    case SpecErrorCode::NonPositiveScale: return "NonPositiveScale";
    case SpecErrorCode::UnsupportedPrior: return "UnsupportedPrior";
    case SpecErrorCode::DuplicateParameter: return "DuplicateParameter";
    case SpecErrorCode::MissingParameter: return "MissingParameter";
    case SpecErrorCode::BadLikelihood: return "BadLikelihood";
    case SpecErrorCode::DuplicateLikelihood: return "DuplicateLikelihood";
    case SpecErrorCode::MissingLikelihood: return "MissingLikelihood";
  }
  return "Unknown";
}

SpecParseError::SpecParseError(SpecErrorCode code, std::size_t line, std::size_t column, const std::string& detail)
    : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + std::string(to_string(code)) + ": " +
            detail),
      code_(code),
      line_(line),
      column_(column) {}

ModelSpec parse_model_spec(std::string_view text) {
  ParseState st;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    LineParser p(lex_line(line, lineno), lineno);
    const Token& head = p.next();
    if (head.kind == Tok::End) continue;
    if (head.kind == Tok::Ident && head.text == "param") {
      parse_param(p, st);
    } else if (head.kind == Tok::Ident && head.text == "likelihood") {
      parse_likelihood(p, st, head);
    } else {
      p.fail(SpecErrorCode::UnknownStatement, head, "expected 'param' or 'likelihood'");
    }
  }

  const std::size_t eof_line = lineno + 1;
  for (std::size_t k = 0; k < kParamNames.size(); ++k) {
    if (!st.priors[k]) {
      throw SpecParseError(SpecErrorCode::MissingParameter, eof_line, 1,
                           "parameter '" + std::string(kParamNames[k]) + "' has no prior");
    }
  }
  if (!st.have_likelihood)
    throw SpecParseError(SpecErrorCode::MissingLikelihood, eof_line, 1, "no likelihood statement");

  return {*st.priors[0], *st.priors[1], *st.priors[2]};
}

ModelSpec load_model_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read model spec '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_spec(buf.str());
}

std::string format_model_spec(const ModelSpec& spec) {
  auto prior = [](const DistributionSpec& d) {
    if (d.kind == DistributionKind::Normal)
      return "Normal(" + detail::format_shortest(d.location) + ", " + detail::format_shortest(d.scale) + ")";
    return "HalfNormal(" + detail::format_shortest(d.scale) + ")";
  };
  std::string out;
  out += "param a ~ " + prior(spec.slope_prior) + "\n";
  out += "param b ~ " + prior(spec.intercept_prior) + "\n";
  out += "param sigma ~ " + prior(spec.noise_prior) + "\n";
  out += "likelihood Y ~ Normal(a * X + b, sigma)\n";
  return out;
}

}  // namespace blr
