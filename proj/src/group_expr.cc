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

#include "rankprobe/group_expr.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

namespace rankprobe::ir {
namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  GroupExpr parse_all() {
    GroupExpr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("group expression '" + std::string(text_) +
                                "': " + what + " at position " +
                                std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  GroupExpr expr() {
    std::vector<GroupExpr> terms;
    terms.push_back(term());
    while (accept('+')) terms.push_back(term());
    return terms.size() == 1 ? std::move(terms[0]) : GroupExpr::sum(std::move(terms));
  }

  GroupExpr term() {
    std::vector<GroupExpr> factors;
    factors.push_back(factor());
    while (accept('*')) factors.push_back(factor());
    return factors.size() == 1 ? std::move(factors[0])
                               : GroupExpr::product(std::move(factors));
  }

  GroupExpr factor() {
    GroupExpr base = primary();
    if (!accept('^')) return base;
    skip_ws();
    const size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) fail("expected a positive integer exponent");
    const int k = std::stoi(std::string(text_.substr(start, pos_ - start)));
    if (k < 1) fail("exponent must be >= 1");
    return GroupExpr::power(std::move(base), k);
  }

  GroupExpr primary() {
    if (accept('(')) {
      GroupExpr e = expr();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    skip_ws();
    const size_t start = pos_;
    while (pos_ < text_.size()) {
      const auto c = static_cast<unsigned char>(text_[pos_]);
      if (!(std::isalnum(c) || c == '_' || c == '.' || c == '-')) break;
      ++pos_;
    }
    if (start == pos_) fail("expected a feature name");
    return GroupExpr::leaf(std::string(text_.substr(start, pos_ - start)));
  }

  std::string_view text_;
  size_t pos_ = 0;
};

}  // namespace

GroupExpr GroupExpr::leaf(std::string name) {
  if (name.empty()) throw std::invalid_argument("empty leaf name");
  GroupExpr e;
  e.kind_ = Kind::kLeaf;
  e.name_ = std::move(name);
  return e;
}

GroupExpr GroupExpr::sum(std::vector<GroupExpr> terms) {
  if (terms.size() < 2) throw std::invalid_argument("sum needs >= 2 terms");
  GroupExpr e;
  e.kind_ = Kind::kSum;
  e.children_ = std::move(terms);
  return e;
}

GroupExpr GroupExpr::product(std::vector<GroupExpr> factors) {
  if (factors.size() < 2) throw std::invalid_argument("product needs >= 2 factors");
  GroupExpr e;
  e.kind_ = Kind::kProduct;
  e.children_ = std::move(factors);
  return e;
}

GroupExpr GroupExpr::power(GroupExpr base, int exponent) {
  if (exponent < 1) throw std::invalid_argument("exponent must be >= 1");
  GroupExpr e;
  e.kind_ = Kind::kPower;
  e.children_.push_back(std::move(base));
  e.exponent_ = exponent;
  return e;
}

GroupExpr GroupExpr::parse(std::string_view text) {
  return Parser(text).parse_all();
}

std::string GroupExpr::to_string() const {
  switch (kind_) {
    case Kind::kLeaf:
      return name_;
    case Kind::kSum: {
      std::string s;
      for (size_t i = 0; i < children_.size(); ++i) {
        if (i) s += '+';
        // A nested sum would re-parse flattened, so it keeps its parentheses.
        const bool paren = children_[i].kind_ == Kind::kSum;
        s += paren ? "(" + children_[i].to_string() + ")" : children_[i].to_string();
      }
      return s;
    }
    case Kind::kProduct: {
      std::string s;
      for (size_t i = 0; i < children_.size(); ++i) {
        if (i) s += '*';
        const auto k = children_[i].kind_;
        const bool paren = k == Kind::kSum || k == Kind::kProduct;
        s += paren ? "(" + children_[i].to_string() + ")" : children_[i].to_string();
      }
      return s;
    }
    case Kind::kPower: {
      const GroupExpr& b = children_[0];
      const std::string base =
          b.kind_ == Kind::kLeaf ? b.to_string() : "(" + b.to_string() + ")";
      return base + "^" + std::to_string(exponent_);
    }
  }
  return {};
}

std::vector<std::string> GroupExpr::leaves() const {
  std::vector<std::string> out;
  auto visit = [&](const GroupExpr& e, auto& self) -> void {
    if (e.kind_ == Kind::kLeaf) {
      if (std::find(out.begin(), out.end(), e.name_) == out.end()) {
        out.push_back(e.name_);
      }
      return;
    }
    for (const auto& c : e.children_) self(c, self);
  };
  visit(*this, visit);
  return out;
}

double GroupExpr::evaluate(const std::map<std::string, double>& values) const {
  switch (kind_) {
    case Kind::kLeaf: {
      auto it = values.find(name_);
      if (it == values.end()) {
        throw std::invalid_argument("missing base feature '" + name_ + "'");
      }
      return it->second;
    }
    case Kind::kSum: {
      double s = 0.0;
      for (const auto& c : children_) s += c.evaluate(values);
      return s;
    }
    case Kind::kProduct: {
      double p = 1.0;
      for (const auto& c : children_) p *= c.evaluate(values);
      return p;
    }
    case Kind::kPower: {
      const double b = children_[0].evaluate(values);
      double r = 1.0;
      for (int i = 0; i < exponent_; ++i) r *= b;
      return r;
    }
  }
  return 0.0;
}

std::vector<double> min_max_normalize(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  if (out.empty()) return out;
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double min = *lo;
  const double range = *hi - *lo;
  for (double& v : out) v = range > 0.0 ? (v - min) / range : 0.0;
  return out;
}

std::vector<double> group_labels(
    const GroupExpr& expr,
    const std::map<std::string, std::vector<double>>& columns, bool normalize) {
  std::map<std::string, std::vector<double>> prepared;
  size_t n = 0;
  bool first = true;
  for (const auto& name : expr.leaves()) {
    auto it = columns.find(name);
    if (it == columns.end()) {
      throw std::invalid_argument("missing base feature '" + name + "'");
    }
    if (first) {
      n = it->second.size();
      first = false;
    } else if (it->second.size() != n) {
      throw std::invalid_argument("base feature columns differ in length");
    }
    prepared[name] = normalize ? min_max_normalize(it->second) : it->second;
  }
  std::vector<double> out(n);
  std::map<std::string, double> row;
  for (size_t i = 0; i < n; ++i) {
    for (const auto& [name, col] : prepared) row[name] = col[i];
    out[i] = expr.evaluate(row);
  }
  return out;
}

}  // namespace rankprobe::ir
