#include "relgraph/csg_expr.hpp"

#include <cctype>
#include <charconv>

namespace relgraph {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  CsgExpr parse() {
    CsgExpr e = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error("expression: " + what + " at position " + std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  std::string identifier() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  double number() {
    skip_space();
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return value;
  }

  CsgExpr expr() {
    const std::size_t at = pos_;
    const std::string name = identifier();
    expect('(');
    CsgExpr e;
    if (name == "union" || name == "intersect" || name == "intersection" || name == "difference" ||
        name == "minus") {
      e.leaf = false;
      e.op = name == "union" ? CsgOp::union_
             : (name == "difference" || name == "minus") ? CsgOp::difference
                                                          : CsgOp::intersection;
      do {
        e.operands.push_back(expr());
      } while (accept(','));
      expect(')');
      if (e.operands.size() < 2) fail("'" + name + "' needs at least two operands");
      if (e.op == CsgOp::difference && e.operands.size() != 2) fail("'" + name + "' takes exactly two operands");
      return e;
    }
    std::string base = name;
    if (base.size() > 3 && base.ends_with("_of")) base.resize(base.size() - 3);
    if (base == "in_front") base = "front";
    const auto kind = parse_kind(base);
    if (!kind || *kind == PredicateKind::on) {
      pos_ = at;
      fail("unknown predicate '" + name + "'");
    }
    e.kind = *kind;
    const double anchor = number();
    if (anchor != static_cast<int>(anchor)) fail("anchor must be an integer id");
    e.anchor = static_cast<int>(anchor);
    if (accept(',')) e.threshold = number();
    expect(')');
    return e;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

CsgExpr parse_csg_expr(std::string_view text) { return Parser(text).parse(); }

std::string format_csg_expr(const CsgExpr& e) {
  if (e.leaf) {
    std::string out(to_string(e.kind));
    if (is_directional(e.kind)) out += "_of";
    out += "(" + std::to_string(e.anchor);
    if (e.threshold) out += ", " + format_double(*e.threshold);
    return out + ")";
  }
  std::string out = e.op == CsgOp::union_ ? "union(" : e.op == CsgOp::intersection ? "intersect(" : "difference(";
  for (std::size_t i = 0; i < e.operands.size(); ++i) out += (i ? ", " : "") + format_csg_expr(e.operands[i]);
  return out + ")";
}

OccupancyGrid evaluate_csg_expr(const CsgExpr& e,
                                const std::function<OccupancyGrid(const CsgExpr& leaf)>& leaf_volume) {
  if (e.leaf) return leaf_volume(e);
  OccupancyGrid acc = evaluate_csg_expr(e.operands.front(), leaf_volume);
  for (std::size_t i = 1; i < e.operands.size(); ++i) {
    acc = csg(acc, evaluate_csg_expr(e.operands[i], leaf_volume), e.op);
  }
  return acc;
}

}  // namespace relgraph
