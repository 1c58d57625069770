#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cma/wirtinger.hpp"

namespace cma {

// Defining expressions: an AST over z_1..z_n, conj(z_k), abs2(z_k) (sugar for
// z_k * conj(z_k)), {+, -, *, /, integer power, exp, log} and real literals.
// abs2 is desugared at parse time. CNum nodes carry complex constants; the
// text grammar never produces them, but catalog maps and unitary coordinate
// changes are built programmatically and need them.
enum class NodeKind : uint8_t { Num, CNum, Var, ConjVar, Add, Sub, Mul, Div, Pow, Exp, Log };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    NodeKind kind;
    double num = 0.0;
    Cxd cnum{0.0, 0.0};
    int var = 0;
    long long ipow = 0;
    ExprPtr a, b;
};

class Expression {
public:
    Expression() = default;

    // grammar-exact parser; n is the variable count for z1..zn
    static Expression parse(const std::string& text, int n);
    // same grammar with the single real variable 't' (radial profiles)
    static Expression parse_in_t(const std::string& text);

    // programmatic builders (folded)
    static Expression number(double v, int n);
    static Expression cnumber(Cxd v, int n);
    static Expression variable(int k, int n);
    static Expression conj_variable(int k, int n);
    static Expression add(const Expression&, const Expression&);
    static Expression sub(const Expression&, const Expression&);
    static Expression mul(const Expression&, const Expression&);
    static Expression div(const Expression&, const Expression&);
    static Expression pow(const Expression&, long long p);
    static Expression exp_of(const Expression&);
    static Expression log_of(const Expression&);

    bool empty() const { return !root_; }
    int vars() const { return n_; }
    const ExprPtr& root() const { return root_; }
    std::string to_string() const;

    // formal Wirtinger derivatives treating z_k and conj(z_k) as independent
    Expression diff_z(int k) const;
    Expression diff_zbar(int k) const;
    bool is_holomorphic() const; // contains no ConjVar

    // z -> U z substitution (U complex n x n, row-major); conjugated entries
    // are applied to the ConjVar occurrences so real fields stay real.
    Expression substitute_linear(const std::vector<Cxd>& U) const;

    template <class V> V eval_ring(std::span<const V> z, const V& one) const;

    template <class S> Cx<S> eval(std::span<const Cx<S>> z) const {
        return eval_ring(z, Cx<S>(S(1.0)));
    }
    template <class S> CJet<S> eval(std::span<const CJet<S>> z) const {
        return eval_ring(z, CJet<S>::constant(z[0].re.layout(), Cx<S>(S(1.0))));
    }
    Cxd eval_point(std::span<const Cxd> z) const { return eval<double>(z); }

    // samples random points; throws errc::non_real with a witness if the
    // imaginary part exceeds the tolerance anywhere
    void validate_real(uint64_t seed = 42, int samples = 64, double tol = 1e-12) const;

private:
    Expression(ExprPtr r, int n) : root_(std::move(r)), n_(n) {}
    ExprPtr root_;
    int n_ = 0;

    friend class ExprParser;
};

namespace detail {

template <class V> V make_ring_const(Cxd c, const V& one);

template <class S> inline Cx<S> make_ring_const(Cxd c, const Cx<S>&) {
    return Cx<S>::from_std({c.re, c.im});
}
template <class S> inline CJet<S> make_ring_const(Cxd c, const CJet<S>& one) {
    return CJet<S>::constant(one.re.layout(), Cx<S>::from_std({c.re, c.im}));
}

template <class V> V eval_expr_node(const ExprNode* nd, std::span<const V> z, const V& one) {
    switch (nd->kind) {
        case NodeKind::Num: return make_ring_const(Cxd{nd->num, 0.0}, one);
        case NodeKind::CNum: return make_ring_const(nd->cnum, one);
        case NodeKind::Var: return z[nd->var];
        case NodeKind::ConjVar: return conj(z[nd->var]);
        case NodeKind::Add:
            return eval_expr_node(nd->a.get(), z, one) + eval_expr_node(nd->b.get(), z, one);
        case NodeKind::Sub:
            return eval_expr_node(nd->a.get(), z, one) - eval_expr_node(nd->b.get(), z, one);
        case NodeKind::Mul:
            return eval_expr_node(nd->a.get(), z, one) * eval_expr_node(nd->b.get(), z, one);
        case NodeKind::Div:
            return eval_expr_node(nd->a.get(), z, one) / eval_expr_node(nd->b.get(), z, one);
        case NodeKind::Pow: return powi(eval_expr_node(nd->a.get(), z, one), nd->ipow);
        case NodeKind::Exp: return exp(eval_expr_node(nd->a.get(), z, one));
        case NodeKind::Log: return log(eval_expr_node(nd->a.get(), z, one));
    }
    throw Error(errc::config, "corrupt expression node");
}

} // namespace detail

template <class V> V Expression::eval_ring(std::span<const V> z, const V& one) const {
    if (!root_) throw Error(errc::config, "empty expression");
    return detail::eval_expr_node(root_.get(), z, one);
}

} // namespace cma
