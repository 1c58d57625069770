#include "cma/expression.hpp"

#include <cctype>
#include <cstring>
#include <cstdlib>
#include <random>
#include <sstream>

namespace cma {

namespace {

std::shared_ptr<ExprNode> make(NodeKind k) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    return n;
}

ExprPtr num_node(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = NodeKind::Num;
    n->num = v;
    return n;
}

bool is_num(const ExprPtr& n, double v) { return n->kind == NodeKind::Num && n->num == v; }
bool is_zero(const ExprPtr& n) {
    return is_num(n, 0.0) || (n->kind == NodeKind::CNum && n->cnum.re == 0.0 && n->cnum.im == 0.0);
}
bool is_one(const ExprPtr& n) { return is_num(n, 1.0); }

ExprPtr fold_add(ExprPtr a, ExprPtr b) {
    if (is_zero(a)) return b;
    if (is_zero(b)) return a;
    if (a->kind == NodeKind::Num && b->kind == NodeKind::Num) return num_node(a->num + b->num);
    auto n = make(NodeKind::Add);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

ExprPtr fold_sub(ExprPtr a, ExprPtr b) {
    if (is_zero(b)) return a;
    if (a->kind == NodeKind::Num && b->kind == NodeKind::Num) return num_node(a->num - b->num);
    auto n = make(NodeKind::Sub);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

ExprPtr fold_mul(ExprPtr a, ExprPtr b) {
    if (is_zero(a) || is_zero(b)) return num_node(0.0);
    if (is_one(a)) return b;
    if (is_one(b)) return a;
    if (a->kind == NodeKind::Num && b->kind == NodeKind::Num) return num_node(a->num * b->num);
    auto n = make(NodeKind::Mul);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

ExprPtr fold_div(ExprPtr a, ExprPtr b) {
    if (is_zero(a)) return num_node(0.0);
    if (is_one(b)) return a;
    auto n = make(NodeKind::Div);
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

ExprPtr fold_pow(ExprPtr a, long long p) {
    if (p == 0) return num_node(1.0);
    if (p == 1) return a;
    if (is_zero(a)) return num_node(0.0);
    if (is_one(a)) return num_node(1.0);
    auto n = make(NodeKind::Pow);
    n->a = std::move(a);
    n->ipow = p;
    return n;
}

ExprPtr var_node(NodeKind k, int idx) {
    auto n = make(k);
    n->var = idx;
    return n;
}

ExprPtr unary_node(NodeKind k, ExprPtr a) {
    auto n = make(k);
    n->a = std::move(a);
    return n;
}

} // namespace

// --- recursive-descent parser ------------------------------------------------
//
// expr   := term (('+'|'-') term)*
// term   := factor (('*'|'/') factor)*
// factor := base ('^' integer)?
// base   := number | 'z'k | 'conj(z'k')' | 'abs2(z'k')'
//         | 'exp(' expr ')' | 'log(' expr ')' | '(' expr ')'
class ExprParser {
public:
    ExprParser(const std::string& text, int n, bool tmode)
        : s_(text), n_(n), tmode_(tmode) {}

    Expression run() {
        skip_ws();
        ExprPtr e = parse_expr();
        skip_ws();
        if (pos_ != s_.size()) fail("unexpected trailing input");
        return Expression(std::move(e), n_);
    }

private:
    const std::string& s_;
    std::size_t pos_ = 0;
    int n_;
    bool tmode_;

    [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(msg, pos_); }

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace((unsigned char)s_[pos_])) ++pos_;
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }
    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c, const char* what) {
        if (!accept(c)) fail(std::string("expected '") + c + "' " + what);
    }

    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        for (;;) {
            if (accept('+')) e = fold_add(e, parse_term());
            else if (accept('-')) e = fold_sub(e, parse_term());
            else return e;
        }
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        for (;;) {
            if (accept('*')) e = fold_mul(e, parse_factor());
            else if (accept('/')) e = fold_div(e, parse_factor());
            else return e;
        }
    }

    ExprPtr parse_factor() {
        ExprPtr e = parse_base();
        if (accept('^')) return fold_pow(e, parse_integer());
        return e;
    }

    long long parse_integer() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
        if (pos_ >= s_.size() || !std::isdigit((unsigned char)s_[pos_])) fail("expected integer exponent");
        while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) ++pos_;
        return std::strtoll(s_.c_str() + start, nullptr, 10);
    }

    int parse_var_index() {
        // the digits after 'z'; 1-based in the grammar
        std::size_t start = pos_;
        if (pos_ >= s_.size() || !std::isdigit((unsigned char)s_[pos_])) fail("expected variable index after 'z'");
        while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) ++pos_;
        int k = std::atoi(s_.substr(start, pos_ - start).c_str());
        if (k < 1 || k > n_) fail("variable index out of range 1.." + std::to_string(n_));
        return k - 1;
    }

    bool match_word(const char* w) {
        skip_ws();
        std::size_t len = std::strlen(w);
        if (s_.compare(pos_, len, w) == 0) {
            pos_ += len;
            return true;
        }
        return false;
    }

    ExprPtr parse_base() {
        skip_ws();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (std::isdigit((unsigned char)c) || c == '.') {
            char* end = nullptr;
            double v = std::strtod(s_.c_str() + pos_, &end);
            if (end == s_.c_str() + pos_) fail("malformed number");
            // reject a sign consumed by strtod's exponent handling only; the
            // grammar has no unary minus, so strtod starting at a digit/dot is safe
            pos_ = std::size_t(end - s_.c_str());
            return num_node(v);
        }
        if (accept('(')) {
            ExprPtr e = parse_expr();
            expect(')', "to close parenthesis");
            return e;
        }
        if (tmode_) {
            if (match_word("exp(")) {
                ExprPtr e = parse_expr();
                expect(')', "to close exp(");
                return unary_node(NodeKind::Exp, std::move(e));
            }
            if (match_word("log(")) {
                ExprPtr e = parse_expr();
                expect(')', "to close log(");
                return unary_node(NodeKind::Log, std::move(e));
            }
            if (match_word("t")) return var_node(NodeKind::Var, 0);
            fail("expected number, 't', exp(, log( or '('");
        }
        if (match_word("conj(")) {
            skip_ws();
            if (!accept('z')) fail("expected 'z' after conj(");
            int k = parse_var_index();
            expect(')', "to close conj(");
            return var_node(NodeKind::ConjVar, k);
        }
        if (match_word("abs2(")) {
            skip_ws();
            if (!accept('z')) fail("expected 'z' after abs2(");
            int k = parse_var_index();
            expect(')', "to close abs2(");
            return fold_mul(var_node(NodeKind::Var, k), var_node(NodeKind::ConjVar, k));
        }
        if (match_word("exp(")) {
            ExprPtr e = parse_expr();
            expect(')', "to close exp(");
            return unary_node(NodeKind::Exp, std::move(e));
        }
        if (match_word("log(")) {
            ExprPtr e = parse_expr();
            expect(')', "to close log(");
            return unary_node(NodeKind::Log, std::move(e));
        }
        if (accept('z')) return var_node(NodeKind::Var, parse_var_index());
        fail("expected number, variable, function or '('");
    }
};

Expression Expression::parse(const std::string& text, int n) {
    if (n < 1) throw Error(errc::config, "expression needs n >= 1 variables");
    return ExprParser(text, n, false).run();
}

Expression Expression::parse_in_t(const std::string& text) {
    return ExprParser(text, 1, true).run();
}

// --- builders ------------------------------------------------------------------

Expression Expression::number(double v, int n) { return Expression(num_node(v), n); }
Expression Expression::cnumber(Cxd v, int n) {
    if (v.im == 0.0) return number(v.re, n);
    auto nd = make(NodeKind::CNum);
    nd->cnum = v;
    return Expression(nd, n);
}
Expression Expression::variable(int k, int n) { return Expression(var_node(NodeKind::Var, k), n); }
Expression Expression::conj_variable(int k, int n) {
    return Expression(var_node(NodeKind::ConjVar, k), n);
}
Expression Expression::add(const Expression& a, const Expression& b) {
    return Expression(fold_add(a.root_, b.root_), a.n_);
}
Expression Expression::sub(const Expression& a, const Expression& b) {
    return Expression(fold_sub(a.root_, b.root_), a.n_);
}
Expression Expression::mul(const Expression& a, const Expression& b) {
    return Expression(fold_mul(a.root_, b.root_), a.n_);
}
Expression Expression::div(const Expression& a, const Expression& b) {
    return Expression(fold_div(a.root_, b.root_), a.n_);
}
Expression Expression::pow(const Expression& a, long long p) {
    return Expression(fold_pow(a.root_, p), a.n_);
}
Expression Expression::exp_of(const Expression& a) {
    return Expression(unary_node(NodeKind::Exp, a.root_), a.n_);
}
Expression Expression::log_of(const Expression& a) {
    return Expression(unary_node(NodeKind::Log, a.root_), a.n_);
}

// --- derivatives -----------------------------------------------------------------

namespace {

ExprPtr d_node(const ExprPtr& nd, int k, bool bar) {
    switch (nd->kind) {
        case NodeKind::Num:
        case NodeKind::CNum: return num_node(0.0);
        case NodeKind::Var: return num_node(!bar && nd->var == k ? 1.0 : 0.0);
        case NodeKind::ConjVar: return num_node(bar && nd->var == k ? 1.0 : 0.0);
        case NodeKind::Add: return fold_add(d_node(nd->a, k, bar), d_node(nd->b, k, bar));
        case NodeKind::Sub: return fold_sub(d_node(nd->a, k, bar), d_node(nd->b, k, bar));
        case NodeKind::Mul:
            return fold_add(fold_mul(d_node(nd->a, k, bar), nd->b),
                            fold_mul(nd->a, d_node(nd->b, k, bar)));
        case NodeKind::Div:
            return fold_div(fold_sub(fold_mul(d_node(nd->a, k, bar), nd->b),
                                     fold_mul(nd->a, d_node(nd->b, k, bar))),
                            fold_mul(nd->b, nd->b));
        case NodeKind::Pow:
            return fold_mul(fold_mul(num_node(double(nd->ipow)), fold_pow(nd->a, nd->ipow - 1)),
                            d_node(nd->a, k, bar));
        case NodeKind::Exp: return fold_mul(nd, d_node(nd->a, k, bar));
        case NodeKind::Log: return fold_div(d_node(nd->a, k, bar), nd->a);
    }
    throw Error(errc::config, "corrupt expression node");
}

bool holomorphic_node(const ExprPtr& nd) {
    if (!nd) return true;
    if (nd->kind == NodeKind::ConjVar) return false;
    return holomorphic_node(nd->a) && holomorphic_node(nd->b);
}

ExprPtr substitute_node(const ExprPtr& nd, const std::vector<Cxd>& U, int n) {
    switch (nd->kind) {
        case NodeKind::Num:
        case NodeKind::CNum: return nd;
        case NodeKind::Var:
        case NodeKind::ConjVar: {
            bool bar = nd->kind == NodeKind::ConjVar;
            ExprPtr acc = num_node(0.0);
            for (int j = 0; j < n; ++j) {
                Cxd u = U[std::size_t(nd->var) * n + j];
                if (bar) u = conj(u);
                auto cn = make(NodeKind::CNum);
                cn->cnum = u;
                acc = fold_add(acc,
                               fold_mul(cn, var_node(bar ? NodeKind::ConjVar : NodeKind::Var, j)));
            }
            return acc;
        }
        case NodeKind::Add:
            return fold_add(substitute_node(nd->a, U, n), substitute_node(nd->b, U, n));
        case NodeKind::Sub:
            return fold_sub(substitute_node(nd->a, U, n), substitute_node(nd->b, U, n));
        case NodeKind::Mul:
            return fold_mul(substitute_node(nd->a, U, n), substitute_node(nd->b, U, n));
        case NodeKind::Div:
            return fold_div(substitute_node(nd->a, U, n), substitute_node(nd->b, U, n));
        case NodeKind::Pow: return fold_pow(substitute_node(nd->a, U, n), nd->ipow);
        case NodeKind::Exp: return unary_node(NodeKind::Exp, substitute_node(nd->a, U, n));
        case NodeKind::Log: return unary_node(NodeKind::Log, substitute_node(nd->a, U, n));
    }
    throw Error(errc::config, "corrupt expression node");
}

void print_node(const ExprPtr& nd, std::ostringstream& os) {
    switch (nd->kind) {
        case NodeKind::Num: os << nd->num; return;
        case NodeKind::CNum: os << "(" << nd->cnum.re << "+" << nd->cnum.im << "i)"; return;
        case NodeKind::Var: os << "z" << nd->var + 1; return;
        case NodeKind::ConjVar: os << "conj(z" << nd->var + 1 << ")"; return;
        case NodeKind::Add:
        case NodeKind::Sub:
        case NodeKind::Mul:
        case NodeKind::Div: {
            const char* op = nd->kind == NodeKind::Add   ? "+"
                             : nd->kind == NodeKind::Sub ? "-"
                             : nd->kind == NodeKind::Mul ? "*"
                                                         : "/";
            os << "(";
            print_node(nd->a, os);
            os << op;
            print_node(nd->b, os);
            os << ")";
            return;
        }
        case NodeKind::Pow:
            os << "(";
            print_node(nd->a, os);
            os << ")^" << nd->ipow;
            return;
        case NodeKind::Exp:
            os << "exp(";
            print_node(nd->a, os);
            os << ")";
            return;
        case NodeKind::Log:
            os << "log(";
            print_node(nd->a, os);
            os << ")";
            return;
    }
}

} // namespace

Expression Expression::diff_z(int k) const { return Expression(d_node(root_, k, false), n_); }
Expression Expression::diff_zbar(int k) const { return Expression(d_node(root_, k, true), n_); }
bool Expression::is_holomorphic() const { return holomorphic_node(root_); }

Expression Expression::substitute_linear(const std::vector<Cxd>& U) const {
    return Expression(substitute_node(root_, U, n_), n_);
}

std::string Expression::to_string() const {
    if (!root_) return "<empty>";
    std::ostringstream os;
    os.precision(17);
    print_node(root_, os);
    return os.str();
}

void Expression::validate_real(uint64_t seed, int samples, double tol) const {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    int valid = 0;
    for (int attempt = 0; attempt < 8 * samples && valid < samples; ++attempt) {
        std::vector<Cxd> z(n_);
        for (auto& c : z) {
            double re = dist(rng), im = dist(rng);
            c = Cxd(re, im);
        }
        Cxd v;
        try {
            v = eval_point(z);
        } catch (const Error&) {
            continue; // outside the domain of a log/division; try another point
        }
        ++valid;
        if (std::abs(v.im) > tol * (1.0 + std::abs(v.re))) {
            std::ostringstream os;
            os << "expression is not real-valued: imaginary part " << v.im << " at witness point (";
            for (int i = 0; i < n_; ++i)
                os << (i ? ", " : "") << z[i].re << (z[i].im < 0 ? "-" : "+")
                   << std::abs(z[i].im) << "i";
            os << ")";
            throw Error(errc::non_real, os.str());
        }
    }
    if (valid < samples)
        throw Error(errc::non_real,
                    "expression could not be evaluated at enough sample points to validate realness");
}

} // namespace cma
