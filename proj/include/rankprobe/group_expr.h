// Copyright 2026 The rankprobe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RANKPROBE_GROUP_EXPR_H_
#define RANKPROBE_GROUP_EXPR_H_

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rankprobe::ir {

// Arithmetic over named base features: sums, products and positive integer
// powers. Text form is e.g. `(QTR+STF+VTFIDF)^2` or `QTR*STF`.
class GroupExpr {
 public:
  enum class Kind { kLeaf, kSum, kProduct, kPower };

  static GroupExpr leaf(std::string name);
  static GroupExpr sum(std::vector<GroupExpr> terms);
  static GroupExpr product(std::vector<GroupExpr> factors);
  static GroupExpr power(GroupExpr base, int exponent);

  // Grammar:  expr := term ('+' term)* ; term := factor ('*' factor)* ;
  //           factor := primary ('^' INT)? ; primary := NAME | '(' expr ')'
  // Throws std::invalid_argument with the offending position.
  static GroupExpr parse(std::string_view text);

  Kind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  const std::vector<GroupExpr>& children() const { return children_; }
  int exponent() const { return exponent_; }

  // Canonical text; parse(to_string()) reproduces the tree.
  std::string to_string() const;

  // Leaf names in first-appearance order, without duplicates.
  std::vector<std::string> leaves() const;

  // Throws std::invalid_argument naming the first missing leaf.
  double evaluate(const std::map<std::string, double>& values) const;

  bool operator==(const GroupExpr&) const = default;

 private:
  Kind kind_ = Kind::kLeaf;
  std::string name_;
  std::vector<GroupExpr> children_;
  int exponent_ = 1;
};

inline double group_value(const GroupExpr& expr,
                          const std::map<std::string, double>& base_values) {
  return expr.evaluate(base_values);
}

// Maps values onto [0, 1] by (v - min) / (max - min); a constant column maps
// to all zeros.
std::vector<double> min_max_normalize(std::span<const double> values);

// Evaluates `expr` row by row over aligned base-feature columns, min-max
// normalizing every leaf column first when `normalize` is set.
std::vector<double> group_labels(
    const GroupExpr& expr,
    const std::map<std::string, std::vector<double>>& columns,
    bool normalize = true);

}  // namespace rankprobe::ir

#endif  // RANKPROBE_GROUP_EXPR_H_
