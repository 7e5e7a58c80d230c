#include "traceopt/parser.hpp"

#include <cctype>
#include <istream>
#include <sstream>

#include "traceopt/errors.hpp"

namespace traceopt {

namespace {

struct Token {
    enum class Kind { number, variable, tr, plus, minus, star, slash, caret, lparen, rparen, end };
    Kind kind = Kind::end;
    Rational value;   // number
    int var_index = 0; // variable
    std::size_t pos = 0;
};

class Lexer {
  public:
    explicit Lexer(const std::string& text) : text_(text) { advance(); }

    const Token& peek() const { return tok_; }
    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

  private:
    void advance() {
        while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
        tok_ = Token{};
        tok_.pos = i_;
        if (i_ >= text_.size()) {
            tok_.kind = Token::Kind::end;
            return;
        }
        const char c = text_[i_];
        switch (c) {
            case '+': tok_.kind = Token::Kind::plus; ++i_; return;
            case '-': tok_.kind = Token::Kind::minus; ++i_; return;
            case '*': tok_.kind = Token::Kind::star; ++i_; return;
            case '/': tok_.kind = Token::Kind::slash; ++i_; return;
            case '^': tok_.kind = Token::Kind::caret; ++i_; return;
            case '(': tok_.kind = Token::Kind::lparen; ++i_; return;
            case ')': tok_.kind = Token::Kind::rparen; ++i_; return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            lex_ident();
            return;
        }
        fail("unexpected character '" + std::string(1, c) + "'", i_);
    }

    void lex_number() {
        std::string digits, frac, exp;
        while (i_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i_]))) digits += text_[i_++];
        if (i_ < text_.size() && text_[i_] == '.') {
            ++i_;
            while (i_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i_]))) frac += text_[i_++];
        }
        if (i_ < text_.size() && (text_[i_] == 'e' || text_[i_] == 'E')) {
            std::size_t save = i_;
            ++i_;
            std::string sign;
            if (i_ < text_.size() && (text_[i_] == '+' || text_[i_] == '-')) sign += text_[i_++];
            std::string ed;
            while (i_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i_]))) ed += text_[i_++];
            if (ed.empty()) {
                i_ = save; // not an exponent after all
            } else {
                exp = sign + ed;
            }
        }
        if (digits.empty() && frac.empty()) fail("malformed number", tok_.pos);
        // Explicit base 10: the GMP string constructors default to base 0,
        // which would misread digit runs with leading zeros as octal.
        Rational v(digits.empty() ? std::string("0") : digits, 10);
        if (!frac.empty()) {
            mpz_class scale;
            mpz_ui_pow_ui(scale.get_mpz_t(), 10, frac.size());
            Rational fpart(mpz_class(frac, 10), scale);
            fpart.canonicalize();
            v += fpart;
        }
        if (!exp.empty()) {
            long e = std::stol(exp);
            mpz_class scale;
            mpz_ui_pow_ui(scale.get_mpz_t(), 10, std::size_t(e < 0 ? -e : e));
            if (e >= 0)
                v *= Rational(scale);
            else
                v /= Rational(scale);
        }
        v.canonicalize();
        tok_.kind = Token::Kind::number;
        tok_.value = v;
    }

    void lex_ident() {
        std::string name;
        while (i_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[i_]))) name += text_[i_++];
        std::string num;
        while (i_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i_]))) num += text_[i_++];
        std::string lower;
        for (char ch : name) lower += char(std::tolower(static_cast<unsigned char>(ch)));
        if (lower == "tr" && num.empty()) {
            tok_.kind = Token::Kind::tr;
            return;
        }
        if (lower == "x" && !num.empty()) {
            tok_.kind = Token::Kind::variable;
            tok_.var_index = std::stoi(num);
            if (tok_.var_index < 1) fail("variable index must be at least 1", tok_.pos);
            return;
        }
        fail("unknown identifier '" + name + num + "'", tok_.pos);
    }

    [[noreturn]] void fail(const std::string& msg, std::size_t pos) {
        throw InputError("expression parse error at position " + std::to_string(pos + 1) + ": " + msg);
    }

    const std::string& text_;
    std::size_t i_ = 0;
    Token tok_;
};

class Parser {
  public:
    Parser(const std::string& text, int n_vars) : lex_(text), n_vars_(n_vars) {}

    TracePoly<Rational> parse() {
        TracePoly<Rational> p = parse_expr();
        if (lex_.peek().kind != Token::Kind::end)
            fail("unexpected trailing input", lex_.peek().pos);
        return p;
    }

  private:
    using P = TracePoly<Rational>;

    P parse_expr() {
        bool negate = false;
        if (lex_.peek().kind == Token::Kind::plus) {
            lex_.take();
        } else if (lex_.peek().kind == Token::Kind::minus) {
            lex_.take();
            negate = true;
        }
        P acc = parse_term();
        if (negate) acc = -acc;
        while (true) {
            Token::Kind k = lex_.peek().kind;
            if (k == Token::Kind::plus) {
                lex_.take();
                acc += parse_term();
            } else if (k == Token::Kind::minus) {
                lex_.take();
                acc -= parse_term();
            } else {
                break;
            }
        }
        return acc;
    }

    P parse_term() {
        P acc = parse_power();
        while (true) {
            Token::Kind k = lex_.peek().kind;
            if (k == Token::Kind::star) {
                lex_.take();
                acc = acc * parse_power();
            } else if (k == Token::Kind::slash) {
                Token slash = lex_.take();
                P rhs = parse_power();
                if (!rhs.is_constant()) fail("division is only defined by constants", slash.pos);
                Rational v = rhs.constant_value();
                if (v == 0) fail("division by zero", slash.pos);
                acc = acc.scaled(1 / v);
            } else {
                break;
            }
        }
        return acc;
    }

    P parse_power() {
        P base = parse_primary();
        while (lex_.peek().kind == Token::Kind::caret) {
            Token caret = lex_.take();
            Token e = lex_.take();
            if (e.kind != Token::Kind::number || e.value.get_den() != 1 || e.value < 0 ||
                e.value.get_num() > 64)
                fail("exponent must be an integer between 0 and 64", caret.pos);
            base = base.pow(int(e.value.get_num().get_si()));
        }
        return base;
    }

    P parse_primary() {
        Token t = lex_.take();
        switch (t.kind) {
            case Token::Kind::number:
                return P::constant(t.value);
            case Token::Kind::variable:
                if (n_vars_ > 0 && t.var_index > n_vars_)
                    fail("variable x" + std::to_string(t.var_index) + " exceeds the declared count " +
                             std::to_string(n_vars_),
                         t.pos);
                return P::variable(t.var_index);
            case Token::Kind::tr: {
                Token open = lex_.take();
                if (open.kind != Token::Kind::lparen) fail("expected '(' after tr", open.pos);
                P inner = parse_expr();
                Token close = lex_.take();
                if (close.kind != Token::Kind::rparen) fail("expected ')'", close.pos);
                return inner.universal_trace();
            }
            case Token::Kind::lparen: {
                P inner = parse_expr();
                Token close = lex_.take();
                if (close.kind != Token::Kind::rparen) fail("expected ')'", close.pos);
                return inner;
            }
            default:
                fail("expected a number, variable, tr(...) or parenthesized expression", t.pos);
        }
    }

    [[noreturn]] void fail(const std::string& msg, std::size_t pos) {
        throw InputError("expression parse error at position " + std::to_string(pos + 1) + ": " + msg);
    }

    Lexer lex_;
    int n_vars_;
};

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

TracePoly<Rational> parse_trace_poly(const std::string& text, int n_vars) {
    return Parser(text, n_vars).parse();
}

Rational parse_scalar(const std::string& text) {
    TracePoly<Rational> p = parse_trace_poly(text);
    if (!p.is_constant()) throw InputError("expected a constant expression: " + text);
    return p.constant_value();
}

ProblemFile parse_problem_file(std::istream& is) {
    ProblemFile out;
    out.spec.n = 0;
    bool saw_objective = false;
    std::string line;
    int lineno = 0;
    auto bad = [&](const std::string& msg) -> void {
        throw InputError("problem file line " + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = strip(line);
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        std::string rest;
        std::getline(ls, rest);
        rest = strip(rest);
        if (key == "problem") {
            out.spec.name = rest;
        } else if (key == "vars") {
            try {
                out.spec.n = std::stoi(rest);
            } catch (const std::exception&) {
                bad("vars expects an integer");
            }
            if (out.spec.n < 1) bad("vars must be at least 1");
        } else if (key == "sense") {
            if (rest == "minimize" || rest == "min")
                out.spec.sense = Sense::minimize;
            else if (rest == "maximize" || rest == "max")
                out.spec.sense = Sense::maximize;
            else
                bad("sense must be minimize or maximize");
        } else if (key == "bound") {
            out.spec.N = parse_scalar(rest);
            if (out.spec.N <= 0) bad("bound must be positive");
        } else if (key == "objective") {
            out.spec.objective = parse_trace_poly(rest, out.spec.n);
            saw_objective = true;
        } else if (key == "constraint") {
            std::istringstream cs(rest);
            std::string kind;
            cs >> kind;
            std::string tail;
            std::getline(cs, tail);
            tail = strip(tail);
            if (kind == "projection" || kind == "involution") {
                TracePoly<Rational> v = parse_trace_poly(tail, out.spec.n);
                int var = 0;
                if (v.term_count() == 1) {
                    const auto& [m, c] = *v.terms().begin();
                    if (c == 1 && m.factors.empty() && m.tail.size() == 1) var = m.tail[0];
                }
                if (var == 0) bad(kind + " constraint expects a single variable");
                out.spec.constraints.push_back(
                    {kind == "projection" ? ConstraintKind::projection_var : ConstraintKind::involution_var,
                     {},
                     var});
            } else if (kind == "inequality") {
                out.spec.constraints.push_back(
                    {ConstraintKind::inequality, parse_trace_poly(tail, out.spec.n), 0});
            } else if (kind == "equality") {
                out.spec.constraints.push_back(
                    {ConstraintKind::equality, parse_trace_poly(tail, out.spec.n), 0});
            } else {
                bad("unknown constraint kind '" + kind + "'");
            }
        } else if (key == "order") {
            try {
                out.order = std::stoi(rest);
            } catch (const std::exception&) {
                bad("order expects an integer");
            }
            if (out.order < 1) bad("order must be at least 1");
        } else if (key == "option") {
            std::istringstream os(rest);
            std::string what, value;
            os >> what >> value;
            if (what == "boundedness") {
                out.has_boundedness_mode = true;
                if (value == "per-k")
                    out.boundedness = BoundednessMode::per_k;
                else if (value == "single")
                    out.boundedness = BoundednessMode::single;
                else
                    bad("boundedness must be per-k or single");
            } else {
                bad("unknown option '" + what + "'");
            }
        } else {
            bad("unknown directive '" + key + "'");
        }
    }
    if (out.spec.n < 1) throw InputError("problem file: missing 'vars' directive");
    if (!saw_objective) throw InputError("problem file: missing 'objective' directive");
    out.spec.validate();
    return out;
}

ProblemFile parse_problem_text(const std::string& text) {
    std::istringstream is(text);
    return parse_problem_file(is);
}

std::string problem_file_text(const ProblemSpec& spec, int order) {
    std::ostringstream os;
    if (!spec.name.empty()) os << "problem " << spec.name << "\n";
    os << "vars " << spec.n << "\n";
    os << "sense " << (spec.sense == Sense::maximize ? "maximize" : "minimize") << "\n";
    os << "bound " << spec.N.get_str() << "\n";
    os << "objective " << to_string(spec.objective) << "\n";
    for (const Constraint& c : spec.constraints) {
        switch (c.kind) {
            case ConstraintKind::projection_var:
                os << "constraint projection x" << c.variable << "\n";
                break;
            case ConstraintKind::involution_var:
                os << "constraint involution x" << c.variable << "\n";
                break;
            case ConstraintKind::inequality:
                os << "constraint inequality " << to_string(c.poly) << "\n";
                break;
            case ConstraintKind::equality:
                os << "constraint equality " << to_string(c.poly) << "\n";
                break;
        }
    }
    if (order > 0) os << "order " << order << "\n";
    return os.str();
}

} // namespace traceopt
