#include <cctype>
#include <regex>
#include <set>

#include <fmt/format.h>

#include "compilot/error.hpp"
#include "compilot/kernel.hpp"

namespace compilot {

KernelParseError::KernelParseError(const std::string& message, int line, int column)
    : Error(fmt::format("{}:{}: {}", line, column, message)), line_(line), column_(column), detail_(message) {}

namespace {

struct Token {
  enum class Kind { Ident, Int, Float, Punct, Annotation, End } kind;
  std::string text;
  int line;
  int column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (pos_ >= src_.size()) {
        out.push_back({Token::Kind::End, "", line_, col_});
        return out;
      }
      int line = line_, col = col_;
      char c = src_[pos_];
      if (c == '/' && peek(1) == '/') {
        std::size_t end = src_.find('\n', pos_);
        if (end == std::string_view::npos) end = src_.size();
        std::string text(src_.substr(pos_, end - pos_));
        advance(end - pos_);
        if (auto id = annotation(text, line, col)) out.push_back({Token::Kind::Annotation, *id, line, col});
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        std::size_t end = src_.find("*/", pos_ + 2);
        if (end == std::string_view::npos) throw KernelParseError("unterminated comment", line, col);
        advance(end + 2 - pos_);
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t s = pos_;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          advance(1);
        }
        out.push_back({Token::Kind::Ident, std::string(src_.substr(s, pos_ - s)), line, col});
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        std::size_t s = pos_;
        bool is_float = false;
        while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
          if (!std::isdigit(static_cast<unsigned char>(src_[pos_]))) is_float = true;
          advance(1);
        }
        out.push_back({is_float ? Token::Kind::Float : Token::Kind::Int, std::string(src_.substr(s, pos_ - s)),
                       line, col});
        continue;
      }
      static const char* two[] = {"<=", "++", "+=", "-=", "*=", "/=", "&&", ">="};
      bool matched = false;
      for (const char* t : two) {
        if (src_.substr(pos_, 2) == t) {
          out.push_back({Token::Kind::Punct, t, line, col});
          advance(2);
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (std::string_view("()[]{};,=<>+-*/#").find(c) != std::string_view::npos) {
        out.push_back({Token::Kind::Punct, std::string(1, c), line, col});
        advance(1);
        continue;
      }
      throw KernelParseError(fmt::format("unexpected character '{}'", c), line, col);
    }
  }

 private:
  char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance(1);
  }

  static std::optional<std::string> annotation(const std::string& text, int line, int col) {
    static const std::regex prefix(R"(^//\s*comp_ID\b.*)");
    static const std::regex exact(R"(^// comp_ID: (comp[0-9]{2})\s*$)");
    if (!std::regex_match(text, prefix)) return std::nullopt;
    std::smatch m;
    if (!std::regex_match(text, m, exact)) {
      throw KernelParseError("malformed comp_ID annotation (expected '// comp_ID: compNN')", line, col);
    }
    return m[1].str();
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Kernel run() {
    parse_header();
    while (at_ident("long") || at_ident("double") || at_ident("int")) parse_decl();
    while (!at(Token::Kind::End)) parse_stmt();
    if (pending_) fail(*pending_tok_, "comp_ID annotation not followed by a statement");
    renumber_loops(kernel_);
    try {
      validate_kernel(kernel_);
    } catch (const KernelError& e) {
      throw KernelParseError(e.what(), toks_.back().line, toks_.back().column);
    }
    return std::move(kernel_);
  }

 private:
  [[noreturn]] void fail(const Token& t, const std::string& msg) { throw KernelParseError(msg, t.line, t.column); }

  const Token& cur() const { return toks_[pos_]; }
  bool at(Token::Kind k) const { return cur().kind == k; }
  bool at_punct(std::string_view p) const { return cur().kind == Token::Kind::Punct && cur().text == p; }
  bool at_ident(std::string_view p) const { return cur().kind == Token::Kind::Ident && cur().text == p; }

  const Token& take() { return toks_[pos_++]; }

  void expect_punct(std::string_view p) {
    if (!at_punct(p)) fail(cur(), fmt::format("expected '{}'", p));
    ++pos_;
  }

  void expect_ident(std::string_view p) {
    if (!at_ident(p)) fail(cur(), fmt::format("expected '{}'", p));
    ++pos_;
  }

  std::string ident() {
    if (!at(Token::Kind::Ident)) fail(cur(), "expected identifier");
    return take().text;
  }

  std::int64_t integer() {
    if (at(Token::Kind::Float)) fail(cur(), "only integer literals are supported");
    if (!at(Token::Kind::Int)) fail(cur(), "expected integer");
    const Token& t = take();
    try {
      return std::stoll(t.text);
    } catch (const std::exception&) {
      fail(t, "integer literal out of range");
    }
  }

  void parse_header() {
    expect_punct("#");
    expect_ident("pragma");
    expect_ident("kernel");
    kernel_.name = ident();
    expect_ident("params");
    expect_punct("(");
    if (!at_punct(")")) {
      while (true) {
        const Token& t = cur();
        Param p;
        p.name = ident();
        expect_punct("=");
        p.value = integer();
        if (p.value < 1) fail(t, fmt::format("parameter {} must be at least 1", p.name));
        if (kernel_.is_param(p.name)) fail(t, fmt::format("duplicate parameter {}", p.name));
        kernel_.params.push_back(p);
        if (at_punct(",")) {
          ++pos_;
          continue;
        }
        break;
      }
    }
    expect_punct(")");
  }

  void parse_decl() {
    std::string type = take().text;
    const Token& nt = cur();
    BufferDecl d;
    d.type = type == "double" ? ScalarType::Double : ScalarType::Long;
    d.name = ident();
    if (kernel_.buffer(d.name) || kernel_.is_param(d.name)) fail(nt, fmt::format("duplicate name {}", d.name));
    if (!at_punct("[")) fail(cur(), "buffer declaration requires at least one dimension");
    while (at_punct("[")) {
      ++pos_;
      d.extents.push_back(affine({}));
      expect_punct("]");
    }
    expect_punct(";");
    kernel_.buffers.push_back(std::move(d));
  }

  void parse_stmt() {
    if (at(Token::Kind::Annotation)) {
      const Token& t = take();
      if (pending_) fail(t, "a second comp_ID annotation before the statement of the first");
      if (seen_ids_.count(t.text)) fail(t, fmt::format("duplicate comp_ID {}", t.text));
      seen_ids_.insert(t.text);
      pending_ = t.text;
      pending_tok_ = &t;
      if (at(Token::Kind::End) || at_punct("}")) fail(t, "comp_ID annotation without a statement");
      parse_stmt();
      return;
    }
    if (at_punct("{")) {
      ++pos_;
      while (!at_punct("}")) {
        if (at(Token::Kind::End)) fail(cur(), "expected '}'");
        parse_stmt();
      }
      ++pos_;
      return;
    }
    if (at_punct("#")) {
      parse_directive();
      parse_for();
      return;
    }
    if (at_ident("for")) {
      parse_for();
      return;
    }
    parse_assignment();
  }

  // '#pragma omp parallel for' or '#pragma unroll(N)' ahead of a loop
  void parse_directive() {
    const Token& t = take();
    expect_ident("pragma");
    if (at_ident("omp")) {
      ++pos_;
      expect_ident("parallel");
      expect_ident("for");
      pending_parallel_ = true;
    } else if (at_ident("unroll")) {
      ++pos_;
      expect_punct("(");
      pending_unroll_ = static_cast<int>(integer());
      expect_punct(")");
    } else {
      fail(t, "unsupported pragma");
    }
    if (!at_ident("for")) fail(cur(), "directive must precede a for loop");
  }

  void parse_for() {
    const Token& ft = take();
    expect_punct("(");
    if (at_ident("long") || at_ident("int")) ++pos_;
    const Token& it = cur();
    std::string var = ident();
    if (kernel_.is_param(var) || kernel_.buffer(var)) fail(it, fmt::format("iterator {} shadows a declaration", var));
    for (const auto& l : stack_) {
      if (l.iterator == var) fail(it, fmt::format("iterator {} shadows an enclosing iterator", var));
    }
    std::set<std::string> outer;
    for (const auto& l : stack_) outer.insert(l.iterator);
    expect_punct("=");
    AffineExpr lb = affine(outer);
    expect_punct(";");
    const Token& ct = cur();
    if (ident() != var) fail(ct, "loop condition must test the loop iterator");
    bool inclusive = false;
    if (at_punct("<=")) {
      inclusive = true;
      ++pos_;
    } else {
      expect_punct("<");
    }
    AffineExpr ub = affine(outer);
    if (inclusive) ub += 1;
    expect_punct(";");
    const Token& st = cur();
    if (at_punct("++")) {
      ++pos_;
      if (ident() != var) fail(st, "loop increment must update the loop iterator");
    } else {
      if (ident() != var) fail(st, "loop increment must update the loop iterator");
      if (at_punct("++")) {
        ++pos_;
      } else {
        expect_punct("+=");
        if (integer() != 1) fail(st, "loop step must be 1");
      }
    }
    expect_punct(")");
    Loop l;
    l.iterator = var;
    l.lower = Bound(lb);
    l.upper = Bound(ub);
    l.id = next_loop_id_++;
    l.parallel = pending_parallel_;
    l.unroll = pending_unroll_;
    pending_parallel_ = false;
    pending_unroll_ = 0;
    (void)ft;
    stack_.push_back(l);
    parse_stmt();
    stack_.pop_back();
  }

  void parse_assignment() {
    const Token& st = cur();
    if (!pending_) fail(st, "missing comp_ID annotation before statement");
    if (stack_.empty()) fail(st, "statement must be inside a loop");
    std::set<std::string> iters;
    for (const auto& l : stack_) iters.insert(l.iterator);
    if (!at(Token::Kind::Ident)) fail(st, "expected statement");
    Access target = access(iters);
    std::string op;
    if (at_punct("=") || at_punct("+=") || at_punct("-=") || at_punct("*=") || at_punct("/=")) {
      op = take().text;
    } else {
      fail(cur(), "expected assignment operator");
    }
    ExprPtr rhs = expr(iters);
    expect_punct(";");
    if (op != "=") {
      static const std::map<std::string, Expr::Kind> kinds{
          {"+=", Expr::Kind::Add}, {"-=", Expr::Kind::Sub}, {"*=", Expr::Kind::Mul}, {"/=", Expr::Kind::Div}};
      rhs = Expr::make_binary(kinds.at(op), Expr::make_load(target), rhs);
    }
    Computation c;
    c.comp_id = *pending_;
    c.loops = stack_;
    c.body = Assignment{std::move(target), std::move(rhs)};
    kernel_.computations.push_back(std::move(c));
    pending_.reset();
  }

  Access access(const std::set<std::string>& iters) {
    const Token& t = cur();
    std::string name = ident();
    const BufferDecl* d = kernel_.buffer(name);
    if (!d) fail(t, fmt::format("undeclared buffer {}", name));
    Access a{name, {}};
    while (at_punct("[")) {
      ++pos_;
      a.subscripts.push_back(affine(iters));
      expect_punct("]");
    }
    if (a.subscripts.size() != d->extents.size()) {
      fail(t, fmt::format("buffer {} has rank {} but {} subscripts given", name, d->extents.size(),
                          a.subscripts.size()));
    }
    return a;
  }

  ExprPtr expr(const std::set<std::string>& iters) {
    ExprPtr lhs = term(iters);
    while (at_punct("+") || at_punct("-")) {
      auto kind = take().text == "+" ? Expr::Kind::Add : Expr::Kind::Sub;
      lhs = Expr::make_binary(kind, lhs, term(iters));
    }
    return lhs;
  }

  ExprPtr term(const std::set<std::string>& iters) {
    ExprPtr lhs = unary(iters);
    while (at_punct("*") || at_punct("/")) {
      auto kind = take().text == "*" ? Expr::Kind::Mul : Expr::Kind::Div;
      lhs = Expr::make_binary(kind, lhs, unary(iters));
    }
    return lhs;
  }

  ExprPtr unary(const std::set<std::string>& iters) {
    if (at_punct("-")) {
      ++pos_;
      return Expr::make_neg(unary(iters));
    }
    return primary(iters);
  }

  ExprPtr primary(const std::set<std::string>& iters) {
    const Token& t = cur();
    if (at(Token::Kind::Int)) return Expr::make_value(AffineExpr(integer()));
    if (at(Token::Kind::Float)) fail(t, "only integer literals are supported");
    if (at_punct("(")) {
      ++pos_;
      ExprPtr e = expr(iters);
      expect_punct(")");
      return e;
    }
    if (at(Token::Kind::Ident)) {
      if (toks_[pos_ + 1].kind == Token::Kind::Punct && toks_[pos_ + 1].text == "[") {
        return Expr::make_load(access(iters));
      }
      std::string name = take().text;
      if (kernel_.buffer(name)) fail(t, fmt::format("buffer {} used without subscripts", name));
      if (!iters.count(name) && !kernel_.is_param(name)) fail(t, fmt::format("undeclared identifier {}", name));
      return Expr::make_value(AffineExpr::symbol(name));
    }
    fail(t, "expected expression");
  }

  AffineExpr affine(const std::set<std::string>& iters) {
    const Token& t = cur();
    ExprPtr e = expr(iters);
    return to_affine(*e, t);
  }

  AffineExpr to_affine(const Expr& e, const Token& t) {
    switch (e.kind) {
      case Expr::Kind::Value:
        return e.value;
      case Expr::Kind::Load:
        fail(t, "non-affine expression: array access not allowed here");
      case Expr::Kind::Neg:
        return -to_affine(*e.lhs, t);
      case Expr::Kind::Add:
        return to_affine(*e.lhs, t) + to_affine(*e.rhs, t);
      case Expr::Kind::Sub:
        return to_affine(*e.lhs, t) - to_affine(*e.rhs, t);
      case Expr::Kind::Mul: {
        AffineExpr l = to_affine(*e.lhs, t), r = to_affine(*e.rhs, t);
        if (l.is_constant()) return r * l.constant();
        if (r.is_constant()) return l * r.constant();
        fail(t, "non-affine expression: product of non-constant terms");
      }
      case Expr::Kind::Div:
        fail(t, "non-affine expression: division not allowed here");
    }
    fail(t, "non-affine expression");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Kernel kernel_;
  std::vector<Loop> stack_;
  std::optional<std::string> pending_;
  const Token* pending_tok_ = nullptr;
  std::set<std::string> seen_ids_;
  int next_loop_id_ = 0;
  bool pending_parallel_ = false;
  int pending_unroll_ = 0;
};

}  // namespace

Kernel parse_kernel(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.run();
}

}  // namespace compilot
