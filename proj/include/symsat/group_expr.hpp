#pragma once

#include <cctype>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace symsat {

// Maximum permutation degree accepted by the grammar. Enforced at parse time
// and at node construction so downstream dense code never sees a degree it
// cannot afford.
inline constexpr int kMaxDegree = 4096;

// Grammar of permutation groups:
//
//   G ::= I<m> | Z<m> | S<m> | G + G | G * G | G wr G
//
// "+" is the direct sum acting on disjoint blocks, "*" the Kronecker product
// acting on pairs (coarse index = left factor), and "A wr B" the wreath
// product with inner group A (acting within each block) and outer group B
// (permuting the blocks). Degree of A wr B is deg(A) * deg(B) with index
// layout x = i*deg(A) + j, i indexing blocks.
class GroupExpr {
 public:
  enum class Kind { trivial, cyclic, symmetric, sum, product, wreath };

  GroupExpr() : kind_(Kind::trivial), m_(1) {}

  static GroupExpr trivial(int m) { return leaf(Kind::trivial, m); }
  static GroupExpr cyclic(int m) { return leaf(Kind::cyclic, m); }
  static GroupExpr symmetric(int m) { return leaf(Kind::symmetric, m); }

  static GroupExpr sum(GroupExpr a, GroupExpr b) { return binary(Kind::sum, std::move(a), std::move(b)); }
  static GroupExpr product(GroupExpr a, GroupExpr b) { return binary(Kind::product, std::move(a), std::move(b)); }
  // inner acts within blocks, outer permutes blocks.
  static GroupExpr wreath(GroupExpr inner, GroupExpr outer) {
    return binary(Kind::wreath, std::move(inner), std::move(outer));
  }

  Kind kind() const { return kind_; }
  bool is_leaf() const { return kind_ == Kind::trivial || kind_ == Kind::cyclic || kind_ == Kind::symmetric; }
  int leaf_degree() const { return m_; }

  const GroupExpr& left() const { return sub_[0]; }
  const GroupExpr& right() const { return sub_[1]; }
  const GroupExpr& inner() const { return sub_[0]; }
  const GroupExpr& outer() const { return sub_[1]; }

  int degree() const {
    switch (kind_) {
      case Kind::trivial:
      case Kind::cyclic:
      case Kind::symmetric:
        return m_;
      case Kind::sum:
        return left().degree() + right().degree();
      case Kind::product:
      case Kind::wreath:
        return left().degree() * right().degree();
    }
    return 0;
  }

  // Number of point orbits. Products and wreaths multiply orbit counts,
  // sums add them.
  std::int64_t orbit_count() const {
    switch (kind_) {
      case Kind::trivial:
        return m_;
      case Kind::cyclic:
      case Kind::symmetric:
        return 1;
      case Kind::sum:
        return left().orbit_count() + right().orbit_count();
      case Kind::product:
      case Kind::wreath:
        return left().orbit_count() * right().orbit_count();
    }
    return 0;
  }

  // Dimension of the equivariant space, i.e. the number of orbits of the
  // pair action. Composite cases follow the closed-form counts for the
  // equivariant bases of sums, products and wreaths.
  std::int64_t basis_dim() const {
    switch (kind_) {
      case Kind::trivial:
        return static_cast<std::int64_t>(m_) * m_;
      case Kind::cyclic:
        return m_;
      case Kind::symmetric:
        return m_ == 1 ? 1 : 2;
      case Kind::sum:
        return left().basis_dim() + right().basis_dim() + 2 * left().orbit_count() * right().orbit_count();
      case Kind::product:
        return left().basis_dim() * right().basis_dim();
      case Kind::wreath: {
        const std::int64_t d_in = inner().basis_dim(), o_in = inner().orbit_count();
        const std::int64_t d_out = outer().basis_dim(), o_out = outer().orbit_count();
        return o_out * d_in + (d_out - o_out) * o_in * o_in;
      }
    }
    return 0;
  }

  // True when the denoted group is the trivial group, i.e. every leaf is I.
  bool is_trivial_group() const { return basis_dim() == static_cast<std::int64_t>(degree()) * degree(); }

  // Leaf paths, left-to-right. Each path is a 0/1 descent through the
  // binary nodes; used to address components for masking/validation.
  std::vector<std::vector<int>> leaf_paths() const {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    collect_paths(cur, out);
    return out;
  }

  const GroupExpr& at(const std::vector<int>& path) const {
    const GroupExpr* e = this;
    for (int step : path) e = (step == 0) ? &e->sub_[0] : &e->sub_[1];
    return *e;
  }

  friend bool operator==(const GroupExpr& a, const GroupExpr& b) {
    if (a.kind_ != b.kind_) return false;
    if (a.is_leaf()) return a.m_ == b.m_;
    return a.sub_[0] == b.sub_[0] && a.sub_[1] == b.sub_[1];
  }
  friend bool operator!=(const GroupExpr& a, const GroupExpr& b) { return !(a == b); }

 private:
  static GroupExpr leaf(Kind k, int m) {
    if (m < 1) throw std::invalid_argument("group leaf degree must be >= 1");
    if (m > kMaxDegree) throw std::invalid_argument("group degree exceeds limit");
    GroupExpr e;
    e.kind_ = k;
    e.m_ = m;
    return e;
  }

  static GroupExpr binary(Kind k, GroupExpr a, GroupExpr b) {
    GroupExpr e;
    e.kind_ = k;
    e.sub_.reserve(2);
    e.sub_.push_back(std::move(a));
    e.sub_.push_back(std::move(b));
    const std::int64_t da = e.sub_[0].degree(), db = e.sub_[1].degree();
    const std::int64_t d = (k == Kind::sum) ? da + db : da * db;
    if (d > kMaxDegree) throw std::invalid_argument("group degree exceeds limit");
    return e;
  }

  void collect_paths(std::vector<int>& cur, std::vector<std::vector<int>>& out) const {
    if (is_leaf()) {
      out.push_back(cur);
      return;
    }
    cur.push_back(0);
    sub_[0].collect_paths(cur, out);
    cur.back() = 1;
    sub_[1].collect_paths(cur, out);
    cur.pop_back();
  }

  Kind kind_;
  int m_ = 0;
  std::vector<GroupExpr> sub_;
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(const std::string& s) : s_(s) {}

  GroupExpr parse() {
    GroupExpr e = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return e;
  }

 private:
  // sum := term ('+' term)* ; term := factor ('*' factor)* ;
  // factor := atom ('wr' atom)* ; atom := leaf | '(' sum ')'
  GroupExpr parse_sum() {
    GroupExpr e = parse_term();
    while (accept('+')) e = GroupExpr::sum(std::move(e), parse_term());
    return e;
  }

  GroupExpr parse_term() {
    GroupExpr e = parse_factor();
    while (accept('*')) e = GroupExpr::product(std::move(e), parse_factor());
    return e;
  }

  GroupExpr parse_factor() {
    GroupExpr e = parse_atom();
    while (accept_word("wr")) e = GroupExpr::wreath(std::move(e), parse_atom());
    return e;
  }

  GroupExpr parse_atom() {
    skip_ws();
    if (accept('(')) {
      GroupExpr e = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return e;
    }
    if (pos_ >= s_.size()) fail("expected group atom");
    const char c = s_[pos_];
    if (c != 'I' && c != 'Z' && c != 'S') fail("expected I<m>, Z<m> or S<m>");
    ++pos_;
    if (pos_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_]))) fail("expected degree digits");
    long m = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      m = m * 10 + (s_[pos_] - '0');
      if (m > kMaxDegree) fail("group degree exceeds limit");
      ++pos_;
    }
    if (m < 1) fail("group degree must be >= 1");
    switch (c) {
      case 'I': return GroupExpr::trivial(static_cast<int>(m));
      case 'Z': return GroupExpr::cyclic(static_cast<int>(m));
      default: return GroupExpr::symmetric(static_cast<int>(m));
    }
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool accept_word(const char* w) {
    skip_ws();
    std::size_t i = pos_;
    for (const char* p = w; *p; ++p, ++i)
      if (i >= s_.size() || s_[i] != *p) return false;
    // must not run into an identifier character
    if (i < s_.size() && std::isalnum(static_cast<unsigned char>(s_[i]))) return false;
    pos_ = i;
    return true;
  }

  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("group expression parse error at offset " + std::to_string(pos_) + ": " + what);
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline GroupExpr parse_group_expr(const std::string& s) { return detail::ExprParser(s).parse(); }

// Prints in the same grammar parse_group_expr accepts. Wreath nodes are
// always parenthesized when nested so expressions read unambiguously.
inline std::string format_group_expr(const GroupExpr& e, int parent_prec = 0) {
  const auto prec = [](GroupExpr::Kind k) {
    switch (k) {
      case GroupExpr::Kind::sum: return 1;
      case GroupExpr::Kind::product: return 2;
      case GroupExpr::Kind::wreath: return 3;
      default: return 4;
    }
  };
  switch (e.kind()) {
    case GroupExpr::Kind::trivial: return "I" + std::to_string(e.leaf_degree());
    case GroupExpr::Kind::cyclic: return "Z" + std::to_string(e.leaf_degree());
    case GroupExpr::Kind::symmetric: return "S" + std::to_string(e.leaf_degree());
    default: break;
  }
  const int p = prec(e.kind());
  const char* op = e.kind() == GroupExpr::Kind::sum ? " + " : e.kind() == GroupExpr::Kind::product ? " * " : " wr ";
  // left child keeps equal precedence (left association), right child needs
  // strictly higher precedence to avoid re-association on re-parse.
  std::string s = format_group_expr(e.left(), p) + op + format_group_expr(e.right(), p + 1);
  const bool need_parens = p < parent_prec || (e.kind() == GroupExpr::Kind::wreath && parent_prec > 0);
  return need_parens ? "(" + s + ")" : s;
}

// Replaces every leaf outside `keep` by the trivial group of equal degree.
// `keep` lists leaf paths (as produced by leaf_paths) to preserve.
inline GroupExpr mask_leaves(const GroupExpr& e, const std::vector<std::vector<int>>& keep) {
  struct Rec {
    static GroupExpr go(const GroupExpr& g, const std::vector<std::vector<int>>& keep, std::vector<int>& cur) {
      if (g.is_leaf()) {
        for (const auto& k : keep)
          if (k == cur) return g;
        return GroupExpr::trivial(g.leaf_degree());
      }
      cur.push_back(0);
      GroupExpr l = go(g.left(), keep, cur);
      cur.back() = 1;
      GroupExpr r = go(g.right(), keep, cur);
      cur.pop_back();
      switch (g.kind()) {
        case GroupExpr::Kind::sum: return GroupExpr::sum(std::move(l), std::move(r));
        case GroupExpr::Kind::product: return GroupExpr::product(std::move(l), std::move(r));
        default: return GroupExpr::wreath(std::move(l), std::move(r));
      }
    }
  };
  std::vector<int> cur;
  return Rec::go(e, keep, cur);
}

}  // namespace symsat
