#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

namespace needle {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ------------------------------
// names
// ------------------------------

// A name is a base identifier plus a numeric index; freshening bumps the
// index, so renamed variables stay readable (x, x1, x2, ...).
struct Name {
    std::string base;
    int index = 0;

    Name() = default;
    Name(std::string b, int i = 0) : base(std::move(b)), index(i) {}

    friend bool operator==(const Name& a, const Name& b) {
        return a.index == b.index && a.base == b.base;
    }
    friend bool operator!=(const Name& a, const Name& b) { return !(a == b); }
    friend bool operator<(const Name& a, const Name& b) {
        return std::tie(a.base, a.index) < std::tie(b.base, b.index);
    }
};

using NameSet = std::set<Name>;

std::string print_name(const Name& n);

// Smallest index >= base.index that avoids the given set.
Name fresh(const Name& base, const NameSet& avoid);

// ------------------------------
// terms
// ------------------------------

enum class Prim { Add1, Sub1 };

std::string prim_word(Prim p);

struct Term;
using TermPtr = std::shared_ptr<const Term>;
using Binding = std::pair<Name, TermPtr>;
using Bindings = std::vector<Binding>;

struct Term {
    struct Var {
        Name name;
    };
    struct Lam {
        Name param;
        TermPtr body;
    };
    struct App {
        TermPtr fun;
        TermPtr arg;
    };
    struct Let {
        Name name;
        TermPtr rhs;
        TermPtr body;
    };
    struct Letrec {
        Bindings bindings;  // source order kept; names pairwise distinct
        TermPtr body;
    };
    struct IntConst {
        long long value;
    };
    struct PrimApp {
        Prim prim;
        TermPtr arg;
    };
    struct Cons {
        TermPtr first;
        TermPtr second;
    };
    struct Car {
        TermPtr arg;
    };
    struct Cdr {
        TermPtr arg;
    };
    // Machine-internal pair value <x1,x2>; the surface grammar rejects it.
    struct PairVal {
        Name first;
        Name second;
    };

    using Node = std::variant<Var, Lam, App, Let, Letrec, IntConst, PrimApp,
                              Cons, Car, Cdr, PairVal>;
    Node node;

    explicit Term(Node n) : node(std::move(n)) {}
};

TermPtr mk_var(Name n);
TermPtr mk_lam(Name param, TermPtr body);
TermPtr mk_app(TermPtr fun, TermPtr arg);
TermPtr mk_let(Name n, TermPtr rhs, TermPtr body);
TermPtr mk_letrec(Bindings bs, TermPtr body);
TermPtr mk_int(long long v);
TermPtr mk_prim(Prim p, TermPtr arg);
TermPtr mk_cons(TermPtr a, TermPtr b);
TermPtr mk_car(TermPtr a);
TermPtr mk_cdr(TermPtr a);
TermPtr mk_pair_val(Name a, Name b);

// ------------------------------
// parsing / printing
// ------------------------------

struct SyntaxError : std::runtime_error {
    int line;
    int column;
    SyntaxError(int l, int c, const std::string& msg)
        : std::runtime_error("syntax error at " + std::to_string(l) + ":" +
                             std::to_string(c) + ": " + msg),
          line(l),
          column(c) {}
};

struct DuplicateBinding : SyntaxError {
    DuplicateBinding(int l, int c, const std::string& msg)
        : SyntaxError(l, c, msg) {}
};

TermPtr parse(const std::string& source);

std::string print(const Term& t);
std::string print(const TermPtr& t);

// ------------------------------
// term operations
// ------------------------------

bool term_equal(const Term& a, const Term& b);

NameSet free_vars(const Term& t);
inline NameSet free_vars(const TermPtr& t) { return free_vars(*t); }

// Memoized on the shared immutable nodes (thread-local cache); the machines
// and the oracle ask for the same subterms' free variables over and over.
const NameSet& free_vars_cached(const TermPtr& t);

bool is_closed(const Term& t);

// v ::= \x.t | b | <x1,x2>
bool is_value(const Term& t);

bool contains_letrec(const Term& t);

size_t term_size(const Term& t);

// Capture-avoiding; binders are renamed with fresh() as needed.
TermPtr subst(const TermPtr& term, const Name& target, const TermPtr& replacement);

// Equal after consistent bound-name normalization.
bool alpha_equal(const Term& a, const Term& b);
inline bool alpha_equal(const TermPtr& a, const TermPtr& b) {
    return alpha_equal(*a, *b);
}

// Like alpha_equal, but letrec binding lists may be permuted (the calculus
// treats D as unordered; engines keep different deterministic orders).
bool alpha_equal_upto_bindings(const Term& a, const Term& b);
inline bool alpha_equal_upto_bindings(const TermPtr& a, const TermPtr& b) {
    return alpha_equal_upto_bindings(*a, *b);
}

}  // namespace needle
