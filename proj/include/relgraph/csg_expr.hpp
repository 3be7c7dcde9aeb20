#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "relgraph/proto.hpp"

namespace relgraph {

/// Parsed proto-relation expression such as
/// `intersect(right_of(5), front_of(9, 20))`.
///
/// Leaves name a predicate and an anchor id, optionally followed by a
/// threshold: `right_of(5)`, `above(3, 10)`, `next_to(2, 0.3)`. The `_of`
/// suffix is optional. Inner nodes are `union`, `intersect` (or
/// `intersection`) with two or more operands, and `difference` (or `minus`)
/// with exactly two.
struct CsgExpr {
  bool leaf = true;
  // leaf
  PredicateKind kind = PredicateKind::next_to;
  int anchor = 0;
  std::optional<double> threshold;
  // inner node
  CsgOp op = CsgOp::union_;
  std::vector<CsgExpr> operands;
};

/// Throws Error with the offending position on malformed input.
CsgExpr parse_csg_expr(std::string_view text);

/// Canonical text form; parse_csg_expr(format_csg_expr(e)) == e structurally.
std::string format_csg_expr(const CsgExpr& expr);

/// Evaluates the expression bottom-up; `leaf_volume` supplies the
/// thresholded volume of each leaf.
OccupancyGrid evaluate_csg_expr(const CsgExpr& expr,
                                const std::function<OccupancyGrid(const CsgExpr& leaf)>& leaf_volume);

}  // namespace relgraph
