#include "needle/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace needle {

std::string print_name(const Name& n) {
    if (n.index == 0) return n.base;
    return n.base + std::to_string(n.index);
}

Name fresh(const Name& base, const NameSet& avoid) {
    Name candidate = base;
    while (avoid.count(candidate)) candidate.index++;
    return candidate;
}

std::string prim_word(Prim p) {
    switch (p) {
        case Prim::Add1: return "add1";
        case Prim::Sub1: return "sub1";
    }
    return "?";
}

TermPtr mk_var(Name n) { return std::make_shared<Term>(Term::Var{std::move(n)}); }
TermPtr mk_lam(Name p, TermPtr b) {
    return std::make_shared<Term>(Term::Lam{std::move(p), std::move(b)});
}
TermPtr mk_app(TermPtr f, TermPtr a) {
    return std::make_shared<Term>(Term::App{std::move(f), std::move(a)});
}
TermPtr mk_let(Name n, TermPtr r, TermPtr b) {
    return std::make_shared<Term>(Term::Let{std::move(n), std::move(r), std::move(b)});
}
TermPtr mk_letrec(Bindings bs, TermPtr b) {
    return std::make_shared<Term>(Term::Letrec{std::move(bs), std::move(b)});
}
TermPtr mk_int(long long v) { return std::make_shared<Term>(Term::IntConst{v}); }
TermPtr mk_prim(Prim p, TermPtr a) {
    return std::make_shared<Term>(Term::PrimApp{p, std::move(a)});
}
TermPtr mk_cons(TermPtr a, TermPtr b) {
    return std::make_shared<Term>(Term::Cons{std::move(a), std::move(b)});
}
TermPtr mk_car(TermPtr a) { return std::make_shared<Term>(Term::Car{std::move(a)}); }
TermPtr mk_cdr(TermPtr a) { return std::make_shared<Term>(Term::Cdr{std::move(a)}); }
TermPtr mk_pair_val(Name a, Name b) {
    return std::make_shared<Term>(Term::PairVal{std::move(a), std::move(b)});
}

// ------------------------------
// lexer
// ------------------------------

namespace {

enum class Tok {
    Lambda,
    NameTok,
    IntTok,
    LParen,
    RParen,
    Dot,
    Equals,
    Comma,
    KwLet,
    KwLetrec,
    KwIn,
    KwCons,
    KwCar,
    KwCdr,
    KwAdd1,
    KwSub1,
    End,
};

struct Token {
    Tok kind;
    std::string text;
    long long int_value = 0;
    int line = 1;
    int column = 1;
};

bool is_name_start(char c) { return std::isalpha((unsigned char)c) || c == '_'; }
bool is_name_char(char c) { return std::isalnum((unsigned char)c) || c == '_'; }

// Trailing digits of an identifier become the name index, so printed
// fresh names (x1, x2, ...) read back as the same Name.
Name split_name(const std::string& text) {
    size_t end = text.size();
    while (end > 1 && std::isdigit((unsigned char)text[end - 1])) end--;
    if (end == text.size()) return Name(text, 0);
    long long idx = std::stoll(text.substr(end));
    return Name(text.substr(0, end), (int)idx);
}

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; k++) {
            if (src[i + k] == '\n') {
                line++;
                col = 1;
            } else {
                col++;
            }
        }
        i += n;
    };
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace((unsigned char)c)) {
            advance(1);
            continue;
        }
        if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.column = col;
        if (c == '\\') {
            t.kind = Tok::Lambda;
            advance(1);
        } else if ((unsigned char)c == 0xce && i + 1 < src.size() &&
                   (unsigned char)src[i + 1] == 0xbb) {  // UTF-8 lambda
            t.kind = Tok::Lambda;
            advance(2);
        } else if (c == '(') {
            t.kind = Tok::LParen;
            advance(1);
        } else if (c == ')') {
            t.kind = Tok::RParen;
            advance(1);
        } else if (c == '.') {
            t.kind = Tok::Dot;
            advance(1);
        } else if (c == '=') {
            t.kind = Tok::Equals;
            advance(1);
        } else if (c == ',') {
            t.kind = Tok::Comma;
            advance(1);
        } else if (std::isdigit((unsigned char)c) ||
                   (c == '-' && i + 1 < src.size() &&
                    std::isdigit((unsigned char)src[i + 1]))) {
            size_t j = i + (c == '-' ? 1 : 0);
            while (j < src.size() && std::isdigit((unsigned char)src[j])) j++;
            t.kind = Tok::IntTok;
            t.text = src.substr(i, j - i);
            t.int_value = std::stoll(t.text);
            advance(j - i);
        } else if (is_name_start(c)) {
            size_t j = i;
            while (j < src.size() && is_name_char(src[j])) j++;
            t.text = src.substr(i, j - i);
            advance(j - i);
            if (t.text == "let")
                t.kind = Tok::KwLet;
            else if (t.text == "letrec")
                t.kind = Tok::KwLetrec;
            else if (t.text == "in")
                t.kind = Tok::KwIn;
            else if (t.text == "cons")
                t.kind = Tok::KwCons;
            else if (t.text == "car")
                t.kind = Tok::KwCar;
            else if (t.text == "cdr")
                t.kind = Tok::KwCdr;
            else if (t.text == "add1")
                t.kind = Tok::KwAdd1;
            else if (t.text == "sub1")
                t.kind = Tok::KwSub1;
            else
                t.kind = Tok::NameTok;
        } else {
            throw SyntaxError(line, col, "unexpected character '" + std::string(1, c) + "'");
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Tok::End;
    end.line = line;
    end.column = col;
    out.push_back(end);
    return out;
}

// ------------------------------
// parser
// ------------------------------

struct Parser {
    std::vector<Token> toks;
    size_t pos = 0;

    const Token& peek() const { return toks[pos]; }
    Token next() { return toks[pos++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        throw SyntaxError(t.line, t.column, msg);
    }

    Token expect(Tok kind, const std::string& what) {
        if (peek().kind != kind) fail("expected " + what);
        return next();
    }

    Name expect_name() {
        Token t = expect(Tok::NameTok, "identifier");
        return split_name(t.text);
    }

    bool starts_atom(Tok k) const {
        switch (k) {
            case Tok::NameTok:
            case Tok::IntTok:
            case Tok::LParen:
            case Tok::KwCons:
            case Tok::KwCar:
            case Tok::KwCdr:
            case Tok::KwAdd1:
            case Tok::KwSub1: return true;
            default: return false;
        }
    }

    bool starts_binder(Tok k) const {
        return k == Tok::Lambda || k == Tok::KwLet || k == Tok::KwLetrec;
    }

    TermPtr parse_term() {
        switch (peek().kind) {
            case Tok::Lambda: {
                next();
                Name param = expect_name();
                expect(Tok::Dot, "'.'");
                return mk_lam(param, parse_term());
            }
            case Tok::KwLet: {
                next();
                Name n = expect_name();
                expect(Tok::Equals, "'='");
                TermPtr rhs = parse_term();
                expect(Tok::KwIn, "'in'");
                return mk_let(n, rhs, parse_term());
            }
            case Tok::KwLetrec: {
                Token kw = next();
                Bindings bs;
                NameSet seen;
                for (;;) {
                    Name n = expect_name();
                    if (!seen.insert(n).second)
                        throw DuplicateBinding(kw.line, kw.column,
                                               "letrec binds '" + print_name(n) +
                                                   "' more than once");
                    expect(Tok::Equals, "'='");
                    bs.emplace_back(n, parse_term());
                    if (peek().kind == Tok::Comma) {
                        next();
                        continue;
                    }
                    break;
                }
                expect(Tok::KwIn, "'in'");
                return mk_letrec(std::move(bs), parse_term());
            }
            default: return parse_app();
        }
    }

    TermPtr parse_app() {
        if (!starts_atom(peek().kind)) fail("expected a term");
        TermPtr t = parse_atom();
        for (;;) {
            if (starts_atom(peek().kind)) {
                t = mk_app(t, parse_atom());
            } else if (starts_binder(peek().kind)) {
                // last operand may be an unparenthesized binder form
                t = mk_app(t, parse_term());
                break;
            } else {
                break;
            }
        }
        return t;
    }

    TermPtr parse_atom() {
        switch (peek().kind) {
            case Tok::NameTok: return mk_var(expect_name());
            case Tok::IntTok: return mk_int(next().int_value);
            case Tok::LParen: {
                next();
                TermPtr t = parse_term();
                expect(Tok::RParen, "')'");
                return t;
            }
            case Tok::KwCons: {
                next();
                TermPtr a = parse_atom();
                TermPtr b = parse_atom();
                return mk_cons(a, b);
            }
            case Tok::KwCar: {
                next();
                return mk_car(parse_atom());
            }
            case Tok::KwCdr: {
                next();
                return mk_cdr(parse_atom());
            }
            case Tok::KwAdd1: {
                next();
                return mk_prim(Prim::Add1, parse_atom());
            }
            case Tok::KwSub1: {
                next();
                return mk_prim(Prim::Sub1, parse_atom());
            }
            default: fail("expected a term");
        }
    }
};

}  // namespace

TermPtr parse(const std::string& source) {
    Parser p{lex(source)};
    TermPtr t = p.parse_term();
    if (p.peek().kind != Tok::End) p.fail("trailing input");
    return t;
}

// ------------------------------
// printer
// ------------------------------

namespace {

// Precedence contexts for printing: a full term, an application operator,
// or an application operand (atom position).
enum class Pos { Top, AppFun, AppArg };

void print_into(const Term& t, Pos pos, bool last_operand, std::ostringstream& out);

void print_parens(const Term& t, std::ostringstream& out) {
    out << "(";
    print_into(t, Pos::Top, true, out);
    out << ")";
}


void print_into(const Term& t, Pos pos, bool last_operand, std::ostringstream& out) {
    std::visit(
        overloaded{
            [&](const Term::Var& v) { out << print_name(v.name); },
            [&](const Term::IntConst& c) { out << c.value; },
            [&](const Term::PairVal& p) {
                out << "<" << print_name(p.first) << "," << print_name(p.second) << ">";
            },
            [&](const Term::Lam& l) {
                if (pos == Pos::Top || (pos == Pos::AppArg && last_operand)) {
                    out << "\\" << print_name(l.param) << ".";
                    print_into(*l.body, Pos::Top, true, out);
                } else {
                    print_parens(t, out);
                }
            },
            [&](const Term::Let& l) {
                if (pos == Pos::Top || (pos == Pos::AppArg && last_operand)) {
                    out << "let " << print_name(l.name) << " = ";
                    print_into(*l.rhs, Pos::Top, false, out);
                    out << " in ";
                    print_into(*l.body, Pos::Top, true, out);
                } else {
                    print_parens(t, out);
                }
            },
            [&](const Term::Letrec& l) {
                if (pos == Pos::Top || (pos == Pos::AppArg && last_operand)) {
                    out << "letrec ";
                    bool first = true;
                    for (const auto& [n, rhs] : l.bindings) {
                        if (!first) out << ", ";
                        first = false;
                        out << print_name(n) << " = ";
                        print_into(*rhs, Pos::Top, false, out);
                    }
                    out << " in ";
                    print_into(*l.body, Pos::Top, true, out);
                } else {
                    print_parens(t, out);
                }
            },
            [&](const Term::App& a) {
                if (pos == Pos::AppArg) {
                    print_parens(t, out);
                    return;
                }
                print_into(*a.fun, Pos::AppFun, false, out);
                out << " ";
                print_into(*a.arg, Pos::AppArg, pos == Pos::Top && last_operand, out);
            },
            [&](const Term::PrimApp& p) {
                if (pos == Pos::AppFun) {
                    print_parens(t, out);
                    return;
                }
                out << prim_word(p.prim) << " ";
                print_into(*p.arg, Pos::AppArg, false, out);
            },
            [&](const Term::Cons& c) {
                if (pos == Pos::AppFun) {
                    print_parens(t, out);
                    return;
                }
                out << "cons ";
                print_into(*c.first, Pos::AppArg, false, out);
                out << " ";
                print_into(*c.second, Pos::AppArg, false, out);
            },
            [&](const Term::Car& c) {
                if (pos == Pos::AppFun) {
                    print_parens(t, out);
                    return;
                }
                out << "car ";
                print_into(*c.arg, Pos::AppArg, false, out);
            },
            [&](const Term::Cdr& c) {
                if (pos == Pos::AppFun) {
                    print_parens(t, out);
                    return;
                }
                out << "cdr ";
                print_into(*c.arg, Pos::AppArg, false, out);
            },
        },
        t.node);
}

}  // namespace

std::string print(const Term& t) {
    std::ostringstream out;
    print_into(t, Pos::Top, true, out);
    return out.str();
}

std::string print(const TermPtr& t) { return print(*t); }

// ------------------------------
// term operations
// ------------------------------

bool term_equal(const Term& a, const Term& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        overloaded{
            [&](const Term::Var& x) { return x.name == std::get<Term::Var>(b.node).name; },
            [&](const Term::Lam& x) {
                const auto& y = std::get<Term::Lam>(b.node);
                return x.param == y.param && term_equal(*x.body, *y.body);
            },
            [&](const Term::App& x) {
                const auto& y = std::get<Term::App>(b.node);
                return term_equal(*x.fun, *y.fun) && term_equal(*x.arg, *y.arg);
            },
            [&](const Term::Let& x) {
                const auto& y = std::get<Term::Let>(b.node);
                return x.name == y.name && term_equal(*x.rhs, *y.rhs) &&
                       term_equal(*x.body, *y.body);
            },
            [&](const Term::Letrec& x) {
                const auto& y = std::get<Term::Letrec>(b.node);
                if (x.bindings.size() != y.bindings.size()) return false;
                for (size_t i = 0; i < x.bindings.size(); i++) {
                    if (x.bindings[i].first != y.bindings[i].first) return false;
                    if (!term_equal(*x.bindings[i].second, *y.bindings[i].second))
                        return false;
                }
                return term_equal(*x.body, *y.body);
            },
            [&](const Term::IntConst& x) {
                return x.value == std::get<Term::IntConst>(b.node).value;
            },
            [&](const Term::PrimApp& x) {
                const auto& y = std::get<Term::PrimApp>(b.node);
                return x.prim == y.prim && term_equal(*x.arg, *y.arg);
            },
            [&](const Term::Cons& x) {
                const auto& y = std::get<Term::Cons>(b.node);
                return term_equal(*x.first, *y.first) && term_equal(*x.second, *y.second);
            },
            [&](const Term::Car& x) {
                return term_equal(*x.arg, *std::get<Term::Car>(b.node).arg);
            },
            [&](const Term::Cdr& x) {
                return term_equal(*x.arg, *std::get<Term::Cdr>(b.node).arg);
            },
            [&](const Term::PairVal& x) {
                const auto& y = std::get<Term::PairVal>(b.node);
                return x.first == y.first && x.second == y.second;
            },
        },
        a.node);
}

namespace {

void free_vars_into(const Term& t, NameSet& bound, NameSet& out) {
    std::visit(
        overloaded{
            [&](const Term::Var& v) {
                if (!bound.count(v.name)) out.insert(v.name);
            },
            [&](const Term::Lam& l) {
                bool added = bound.insert(l.param).second;
                free_vars_into(*l.body, bound, out);
                if (added) bound.erase(l.param);
            },
            [&](const Term::App& a) {
                free_vars_into(*a.fun, bound, out);
                free_vars_into(*a.arg, bound, out);
            },
            [&](const Term::Let& l) {
                free_vars_into(*l.rhs, bound, out);
                bool added = bound.insert(l.name).second;
                free_vars_into(*l.body, bound, out);
                if (added) bound.erase(l.name);
            },
            [&](const Term::Letrec& l) {
                // letrec binds in every right-hand side and the body
                std::vector<Name> added;
                for (const auto& [n, _] : l.bindings)
                    if (bound.insert(n).second) added.push_back(n);
                for (const auto& [_, rhs] : l.bindings) free_vars_into(*rhs, bound, out);
                free_vars_into(*l.body, bound, out);
                for (const Name& n : added) bound.erase(n);
            },
            [&](const Term::IntConst&) {},
            [&](const Term::PrimApp& p) { free_vars_into(*p.arg, bound, out); },
            [&](const Term::Cons& c) {
                free_vars_into(*c.first, bound, out);
                free_vars_into(*c.second, bound, out);
            },
            [&](const Term::Car& c) { free_vars_into(*c.arg, bound, out); },
            [&](const Term::Cdr& c) { free_vars_into(*c.arg, bound, out); },
            [&](const Term::PairVal& p) {
                if (!bound.count(p.first)) out.insert(p.first);
                if (!bound.count(p.second)) out.insert(p.second);
            },
        },
        t.node);
}

}  // namespace

NameSet free_vars(const Term& t) {
    NameSet bound, out;
    free_vars_into(t, bound, out);
    return out;
}

const NameSet& free_vars_cached(const TermPtr& t) {
    struct Entry {
        TermPtr keep;  // pins the node so the pointer key stays valid
        NameSet fv;
    };
    thread_local std::unordered_map<const Term*, Entry> cache;
    auto it = cache.find(t.get());
    if (it != cache.end()) return it->second.fv;
    if (cache.size() > 1u << 22) cache.clear();
    Entry e{t, free_vars(*t)};
    return cache.emplace(t.get(), std::move(e)).first->second.fv;
}

bool is_closed(const Term& t) { return free_vars(t).empty(); }

bool is_value(const Term& t) {
    return std::holds_alternative<Term::Lam>(t.node) ||
           std::holds_alternative<Term::IntConst>(t.node) ||
           std::holds_alternative<Term::PairVal>(t.node);
}

bool contains_letrec(const Term& t) {
    return std::visit(
        overloaded{
            [&](const Term::Var&) { return false; },
            [&](const Term::Lam& l) { return contains_letrec(*l.body); },
            [&](const Term::App& a) {
                return contains_letrec(*a.fun) || contains_letrec(*a.arg);
            },
            [&](const Term::Let& l) {
                return contains_letrec(*l.rhs) || contains_letrec(*l.body);
            },
            [&](const Term::Letrec&) { return true; },
            [&](const Term::IntConst&) { return false; },
            [&](const Term::PrimApp& p) { return contains_letrec(*p.arg); },
            [&](const Term::Cons& c) {
                return contains_letrec(*c.first) || contains_letrec(*c.second);
            },
            [&](const Term::Car& c) { return contains_letrec(*c.arg); },
            [&](const Term::Cdr& c) { return contains_letrec(*c.arg); },
            [&](const Term::PairVal&) { return false; },
        },
        t.node);
}

size_t term_size(const Term& t) {
    return std::visit(
        overloaded{
            [&](const Term::Var&) -> size_t { return 1; },
            [&](const Term::Lam& l) { return 1 + term_size(*l.body); },
            [&](const Term::App& a) { return 1 + term_size(*a.fun) + term_size(*a.arg); },
            [&](const Term::Let& l) {
                return 1 + term_size(*l.rhs) + term_size(*l.body);
            },
            [&](const Term::Letrec& l) {
                size_t s = 1 + term_size(*l.body);
                for (const auto& [_, rhs] : l.bindings) s += term_size(*rhs);
                return s;
            },
            [&](const Term::IntConst&) -> size_t { return 1; },
            [&](const Term::PrimApp& p) { return 1 + term_size(*p.arg); },
            [&](const Term::Cons& c) {
                return 1 + term_size(*c.first) + term_size(*c.second);
            },
            [&](const Term::Car& c) { return 1 + term_size(*c.arg); },
            [&](const Term::Cdr& c) { return 1 + term_size(*c.arg); },
            [&](const Term::PairVal&) -> size_t { return 1; },
        },
        t.node);
}

TermPtr subst(const TermPtr& term, const Name& target, const TermPtr& replacement) {
    const Term& t = *term;
    return std::visit(
        overloaded{
            [&](const Term::Var& v) -> TermPtr {
                return v.name == target ? replacement : term;
            },
            [&](const Term::Lam& l) -> TermPtr {
                if (l.param == target) return term;
                NameSet body_free = free_vars(*l.body);
                if (!body_free.count(target)) return term;
                NameSet repl_free = free_vars(*replacement);
                if (repl_free.count(l.param)) {
                    NameSet avoid = repl_free;
                    avoid.insert(body_free.begin(), body_free.end());
                    avoid.insert(target);
                    Name renamed = fresh(l.param, avoid);
                    TermPtr body = subst(l.body, l.param, mk_var(renamed));
                    return mk_lam(renamed, subst(body, target, replacement));
                }
                return mk_lam(l.param, subst(l.body, target, replacement));
            },
            [&](const Term::App& a) -> TermPtr {
                return mk_app(subst(a.fun, target, replacement),
                              subst(a.arg, target, replacement));
            },
            [&](const Term::Let& l) -> TermPtr {
                TermPtr rhs = subst(l.rhs, target, replacement);
                if (l.name == target) return mk_let(l.name, rhs, l.body);
                NameSet body_free = free_vars(*l.body);
                if (!body_free.count(target)) return mk_let(l.name, rhs, l.body);
                NameSet repl_free = free_vars(*replacement);
                if (repl_free.count(l.name)) {
                    NameSet avoid = repl_free;
                    avoid.insert(body_free.begin(), body_free.end());
                    avoid.insert(target);
                    Name renamed = fresh(l.name, avoid);
                    TermPtr body = subst(l.body, l.name, mk_var(renamed));
                    return mk_let(renamed, rhs, subst(body, target, replacement));
                }
                return mk_let(l.name, rhs, subst(l.body, target, replacement));
            },
            [&](const Term::Letrec& l) -> TermPtr {
                for (const auto& [n, _] : l.bindings)
                    if (n == target) return term;  // target bound here
                NameSet inner_free;
                {
                    NameSet bound;
                    free_vars_into(t, bound, inner_free);
                }
                if (!inner_free.count(target)) return term;
                NameSet repl_free = free_vars(*replacement);
                Bindings bs = l.bindings;
                TermPtr body = l.body;
                // rename any binder that would capture the replacement
                NameSet avoid = repl_free;
                avoid.insert(inner_free.begin(), inner_free.end());
                avoid.insert(target);
                for (const auto& [n, _] : bs) avoid.insert(n);
                for (size_t i = 0; i < bs.size(); i++) {
                    if (!repl_free.count(bs[i].first)) continue;
                    Name renamed = fresh(bs[i].first, avoid);
                    avoid.insert(renamed);
                    Name old = bs[i].first;
                    TermPtr rv = mk_var(renamed);
                    for (auto& [n2, rhs2] : bs) rhs2 = subst(rhs2, old, rv);
                    body = subst(body, old, rv);
                    bs[i].first = renamed;
                }
                for (auto& [n2, rhs2] : bs) rhs2 = subst(rhs2, target, replacement);
                return mk_letrec(std::move(bs), subst(body, target, replacement));
            },
            [&](const Term::IntConst&) -> TermPtr { return term; },
            [&](const Term::PrimApp& p) -> TermPtr {
                return mk_prim(p.prim, subst(p.arg, target, replacement));
            },
            [&](const Term::Cons& c) -> TermPtr {
                return mk_cons(subst(c.first, target, replacement),
                               subst(c.second, target, replacement));
            },
            [&](const Term::Car& c) -> TermPtr {
                return mk_car(subst(c.arg, target, replacement));
            },
            [&](const Term::Cdr& c) -> TermPtr {
                return mk_cdr(subst(c.arg, target, replacement));
            },
            [&](const Term::PairVal& p) -> TermPtr {
                if (p.first != target && p.second != target) return term;
                const auto* v = std::get_if<Term::Var>(&replacement->node);
                if (!v)
                    throw std::logic_error(
                        "subst: pair component replaced by non-variable");
                Name a = p.first == target ? v->name : p.first;
                Name b = p.second == target ? v->name : p.second;
                return mk_pair_val(a, b);
            },
        },
        t.node);
}

// ------------------------------
// alpha equivalence
// ------------------------------

namespace {

struct NameHash {
    size_t operator()(const Name& n) const {
        return std::hash<std::string>()(n.base) * 131 + (size_t)n.index;
    }
};

// binder levels per name, innermost last
struct ScopeMap {
    std::unordered_map<Name, std::vector<int>, NameHash> levels;
    std::vector<Name> stack;

    void push(const Name& n, int level) {
        levels[n].push_back(level);
        stack.push_back(n);
    }
    void pop() {
        Name n = stack.back();
        stack.pop_back();
        auto it = levels.find(n);
        it->second.pop_back();
        if (it->second.empty()) levels.erase(it);
    }
    int lookup(const Name& n) const {
        auto it = levels.find(n);
        if (it == levels.end() || it->second.empty()) return -1;
        return it->second.back();
    }
};

bool names_match(const Name& a, const Name& b, const ScopeMap& ma, const ScopeMap& mb) {
    int la = ma.lookup(a);
    int lb = mb.lookup(b);
    if (la != lb) return false;
    if (la == -1) return a == b;  // both free
    return true;
}

bool alpha_eq(const Term& a, const Term& b, ScopeMap& ma, ScopeMap& mb, int& level,
              bool perm);

// Compare letrec nodes with b's bindings taken in the order `order`.
bool letrec_eq_ordered(const Term::Letrec& x, const Term::Letrec& y,
                       const std::vector<size_t>& order, ScopeMap& ma, ScopeMap& mb,
                       int& level, bool perm) {
    int base = level;
    for (const auto& [n, _] : x.bindings) ma.push(n, level++);
    level = base;
    for (size_t j : order) mb.push(y.bindings[j].first, level++);
    bool r = true;
    for (size_t i = 0; r && i < x.bindings.size(); i++)
        r = alpha_eq(*x.bindings[i].second, *y.bindings[order[i]].second, ma, mb,
                     level, perm);
    if (r) r = alpha_eq(*x.body, *y.body, ma, mb, level, perm);
    for (size_t i = 0; i < x.bindings.size(); i++) {
        ma.pop();
        mb.pop();
    }
    return r;
}

bool alpha_eq(const Term& a, const Term& b, ScopeMap& ma, ScopeMap& mb, int& level,
              bool perm) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        overloaded{
            [&](const Term::Var& x) {
                return names_match(x.name, std::get<Term::Var>(b.node).name, ma, mb);
            },
            [&](const Term::Lam& x) {
                const auto& y = std::get<Term::Lam>(b.node);
                ma.push(x.param, level);
                mb.push(y.param, level);
                level++;
                bool r = alpha_eq(*x.body, *y.body, ma, mb, level, perm);
                ma.pop();
                mb.pop();
                return r;
            },
            [&](const Term::App& x) {
                const auto& y = std::get<Term::App>(b.node);
                return alpha_eq(*x.fun, *y.fun, ma, mb, level, perm) &&
                       alpha_eq(*x.arg, *y.arg, ma, mb, level, perm);
            },
            [&](const Term::Let& x) {
                const auto& y = std::get<Term::Let>(b.node);
                if (!alpha_eq(*x.rhs, *y.rhs, ma, mb, level, perm)) return false;
                ma.push(x.name, level);
                mb.push(y.name, level);
                level++;
                bool r = alpha_eq(*x.body, *y.body, ma, mb, level, perm);
                ma.pop();
                mb.pop();
                return r;
            },
            [&](const Term::Letrec& x) {
                const auto& y = std::get<Term::Letrec>(b.node);
                if (x.bindings.size() != y.bindings.size()) return false;
                size_t n = x.bindings.size();
                std::vector<size_t> order(n);
                for (size_t i = 0; i < n; i++) order[i] = i;
                if (!perm || n > 8)
                    return letrec_eq_ordered(x, y, order, ma, mb, level, perm);
                do {
                    if (letrec_eq_ordered(x, y, order, ma, mb, level, perm))
                        return true;
                } while (std::next_permutation(order.begin(), order.end()));
                return false;
            },
            [&](const Term::IntConst& x) {
                return x.value == std::get<Term::IntConst>(b.node).value;
            },
            [&](const Term::PrimApp& x) {
                const auto& y = std::get<Term::PrimApp>(b.node);
                return x.prim == y.prim && alpha_eq(*x.arg, *y.arg, ma, mb, level, perm);
            },
            [&](const Term::Cons& x) {
                const auto& y = std::get<Term::Cons>(b.node);
                return alpha_eq(*x.first, *y.first, ma, mb, level, perm) &&
                       alpha_eq(*x.second, *y.second, ma, mb, level, perm);
            },
            [&](const Term::Car& x) {
                return alpha_eq(*x.arg, *std::get<Term::Car>(b.node).arg, ma, mb, level, perm);
            },
            [&](const Term::Cdr& x) {
                return alpha_eq(*x.arg, *std::get<Term::Cdr>(b.node).arg, ma, mb, level, perm);
            },
            [&](const Term::PairVal& x) {
                const auto& y = std::get<Term::PairVal>(b.node);
                return names_match(x.first, y.first, ma, mb) &&
                       names_match(x.second, y.second, ma, mb);
            },
        },
        a.node);
}

}  // namespace

bool alpha_equal(const Term& a, const Term& b) {
    ScopeMap ma, mb;
    int level = 0;
    return alpha_eq(a, b, ma, mb, level, false);
}

bool alpha_equal_upto_bindings(const Term& a, const Term& b) {
    ScopeMap ma, mb;
    int level = 0;
    return alpha_eq(a, b, ma, mb, level, true);
}

}  // namespace needle
