// Copyright 2026 The cerule Authors
// SPDX-License-Identifier: Apache-2.0

#include "cerule/rules/rule.hpp"

#include <cctype>
#include <optional>

namespace cerule {

std::string_view action_keyword(ActionKind kind) {
  switch (kind) {
    case ActionKind::kAlert: return "alert";
    case ActionKind::kStop: return "stop";
    case ActionKind::kOverride: return "override";
  }
  return "alert";
}

std::string Diagnostic::to_string() const {
  return std::to_string(line) + ":" + std::to_string(column) + ": " +
         std::string(errc_name(code)) + ": " + message;
}

namespace {

enum class Tok : std::uint8_t { kWord, kString, kLParen, kRParen, kLabel, kEnd };

struct Token {
  Tok kind;
  std::string text;     // word, unescaped string, or label
  std::size_t column;   // 1-based
  std::size_t length;
};

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '+' ||
         c == '-' || c == '.';
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_keyword(std::string_view word) {
  auto w = lower(word);
  return w == "and" || w == "or" || w == "not" || w == "if";
}

class Lexer {
 public:
  Lexer(std::string_view src, std::size_t line) : src_(src), line_(line) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      if (pos_ >= src_.size()) break;
      char c = src_[pos_];
      std::size_t start = pos_;
      if (c == '(') {
        out.push_back({Tok::kLParen, "(", start + 1, 1});
        ++pos_;
      } else if (c == ')') {
        out.push_back({Tok::kRParen, ")", start + 1, 1});
        ++pos_;
      } else if (c == '"') {
        out.push_back(string_literal());
      } else if (c == '[') {
        out.push_back(label());
      } else if (word_char(c)) {
        while (pos_ < src_.size() && word_char(src_[pos_])) ++pos_;
        out.push_back({Tok::kWord, std::string(src_.substr(start, pos_ - start)), start + 1,
                       pos_ - start});
      } else {
        fail(start + 1, 1, std::string("unexpected character '") + c + "'");
      }
    }
    out.push_back({Tok::kEnd, "", src_.size() + 1, 0});
    return out;
  }

 private:
  [[noreturn]] void fail(std::size_t column, std::size_t length, std::string message) {
    throw RuleError(Diagnostic{Errc::kSyntax, line_, column, length, std::move(message)});
  }

  Token string_literal() {
    std::size_t start = pos_++;
    std::string value;
    while (pos_ < src_.size() && src_[pos_] != '"') {
      char c = src_[pos_++];
      if (c == '\\') {
        if (pos_ >= src_.size()) break;
        char e = src_[pos_++];
        switch (e) {
          case '"': value += '"'; break;
          case '\\': value += '\\'; break;
          case 'n': value += '\n'; break;
          case 't': value += '\t'; break;
          default: fail(pos_ - 1, 2, std::string("unknown escape '\\") + e + "'");
        }
      } else {
        value += c;
      }
    }
    if (pos_ >= src_.size()) fail(start + 1, src_.size() - start, "unterminated string");
    ++pos_;
    return {Tok::kString, std::move(value), start + 1, pos_ - start};
  }

  Token label() {
    std::size_t start = pos_++;
    auto close = src_.find(']', pos_);
    if (close == std::string_view::npos) fail(start + 1, 1, "unterminated rule label");
    auto name = src_.substr(pos_, close - pos_);
    if (name.empty()) fail(start + 1, close - start + 1, "empty rule label");
    for (char c : name) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) {
        fail(start + 1, close - start + 1, "rule label may only contain [A-Za-z0-9_.-]");
      }
    }
    pos_ = close + 1;
    return {Tok::kLabel, std::string(name), start + 1, pos_ - start};
  }

  std::string_view src_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, const CeVocabulary& vocab, std::size_t line)
      : toks_(std::move(tokens)), vocab_(vocab), line_(line) {}

  Rule rule() {
    Rule r;
    if (peek().kind == Tok::kLabel) r.name = next().text;
    r.action = action();
    const auto& kw = peek();
    if (kw.kind != Tok::kWord || lower(kw.text) != "if") {
      fail(Errc::kSyntax, kw, "expected 'if' after action");
    }
    next();
    r.predicate = condition();
    return r;
  }

  Predicate condition() {
    auto p = or_expr();
    const auto& t = peek();
    if (t.kind == Tok::kRParen) fail(Errc::kSyntax, t, "unbalanced parenthesis: unmatched ')'");
    if (t.kind != Tok::kEnd) fail(Errc::kSyntax, t, "unexpected '" + t.text + "' after condition");
    return p;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }

  [[noreturn]] void fail(Errc code, const Token& t, std::string message) const {
    throw RuleError(Diagnostic{code, line_, t.column, t.length, std::move(message)});
  }

  bool at_keyword(std::string_view kw) const {
    return peek().kind == Tok::kWord && lower(peek().text) == kw;
  }

  Action action() {
    const auto& t = peek();
    if (t.kind != Tok::kWord) fail(Errc::kSyntax, t, "expected an action keyword");
    auto kw = lower(t.text);
    if (kw == "alert") {
      next();
      return Action::alert();
    }
    if (kw == "stop" || kw == "refuse") {
      next();
      return Action::stop();
    }
    if (kw == "override") {
      next();
      const auto& s = peek();
      if (s.kind != Tok::kString) fail(Errc::kSyntax, s, "override needs a quoted scripted response");
      if (s.text.empty()) fail(Errc::kSyntax, s, "override scripted response is empty");
      return Action::override_with(next().text);
    }
    fail(Errc::kUnknownAction, t, "unknown action '" + t.text + "'");
  }

  // Flattens same-kind children so `a AND (b AND c)` and `a AND b AND c`
  // produce the same tree.
  static Predicate join(NodeKind kind, std::vector<Predicate> parts) {
    if (parts.size() == 1) return std::move(parts.front());
    std::vector<Predicate> flat;
    for (auto& p : parts) {
      if (p.kind == kind) {
        for (auto& c : p.children) flat.push_back(std::move(c));
      } else {
        flat.push_back(std::move(p));
      }
    }
    return Predicate{kind, 0, std::move(flat)};
  }

  Predicate or_expr() {
    std::vector<Predicate> parts;
    parts.push_back(and_expr());
    while (at_keyword("or")) {
      next();
      parts.push_back(and_expr());
    }
    return join(NodeKind::kOr, std::move(parts));
  }

  Predicate and_expr() {
    std::vector<Predicate> parts;
    parts.push_back(not_expr());
    while (at_keyword("and")) {
      next();
      parts.push_back(not_expr());
    }
    return join(NodeKind::kAnd, std::move(parts));
  }

  Predicate not_expr() {
    if (at_keyword("not")) {
      next();
      return Predicate::negate(not_expr());
    }
    return primary();
  }

  Predicate primary() {
    const auto& t = peek();
    switch (t.kind) {
      case Tok::kLParen: {
        next();
        auto inner = or_expr();
        const auto& close = peek();
        if (close.kind != Tok::kRParen) {
          fail(Errc::kSyntax, close,
               "unbalanced parenthesis: expected ')' to close '(' at column " +
                   std::to_string(t.column));
        }
        next();
        return inner;
      }
      case Tok::kWord: {
        if (is_keyword(t.text)) fail(Errc::kSyntax, t, "expected a CE name, found '" + t.text + "'");
        auto id = vocab_.find(t.text);
        if (!id) fail(Errc::kUnknownCe, t, "unknown CE '" + t.text + "'");
        next();
        return Predicate::leaf(*id);
      }
      case Tok::kEnd:
        fail(Errc::kSyntax, t, "unexpected end of rule, expected a CE name or '('");
      default:
        fail(Errc::kSyntax, t, "expected a CE name or '('");
    }
  }

  std::vector<Token> toks_;
  const CeVocabulary& vocab_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

void print_into(const Predicate& p, const CeVocabulary& vocab, std::string& out) {
  auto child = [&](const Predicate& c, bool parens) {
    if (parens) out += '(';
    print_into(c, vocab, out);
    if (parens) out += ')';
  };
  switch (p.kind) {
    case NodeKind::kLeaf:
      out += vocab[p.ce].name;
      return;
    case NodeKind::kNot: {
      const auto& c = p.children.front();
      out += "NOT ";
      child(c, c.kind == NodeKind::kAnd || c.kind == NodeKind::kOr);
      return;
    }
    case NodeKind::kAnd:
    case NodeKind::kOr: {
      const char* sep = p.kind == NodeKind::kAnd ? " AND " : " OR ";
      for (std::size_t i = 0; i < p.children.size(); ++i) {
        if (i) out += sep;
        const auto& c = p.children[i];
        // AND binds tighter than OR, so only an OR under an AND needs
        // parentheses. Same-kind nesting is kept explicit as well.
        bool parens = c.kind == p.kind || (p.kind == NodeKind::kAnd && c.kind == NodeKind::kOr);
        child(c, parens);
      }
      return;
    }
  }
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

Rule parse_rule(std::string_view source, const CeVocabulary& vocab, std::size_t line) {
  Parser parser(Lexer(source, line).run(), vocab, line);
  return parser.rule();
}

Predicate parse_condition(std::string_view source, const CeVocabulary& vocab, std::size_t line) {
  Parser parser(Lexer(source, line).run(), vocab, line);
  return parser.condition();
}

std::string print_predicate(const Predicate& p, const CeVocabulary& vocab) {
  std::string out;
  print_into(p, vocab, out);
  return out;
}

std::string print_rule(const Rule& rule, const CeVocabulary& vocab) {
  std::string out(action_keyword(rule.action.kind));
  if (rule.action.kind == ActionKind::kOverride) {
    out += " \"" + escape(rule.action.scripted_text) + "\"";
  }
  out += " if ";
  print_into(rule.predicate, vocab, out);
  return out;
}

}  // namespace cerule
