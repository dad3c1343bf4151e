#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "needle/syntax.hpp"

namespace needle {

// ------------------------------
// standard-order decomposition
// ------------------------------

// Path from the root of a term down to the focused subterm, one step per
// evaluation-context production. Plugging the focus back along the path
// reconstructs the whole term.
struct PathStep;
using CtxPath = std::vector<PathStep>;

struct PathStep {
    // E t : descend into the operator
    struct AppLeft {
        TermPtr operand;
    };
    // (\x.E[x]) E : descend into the operand; bodyCtx is the evidence
    // decomposition of the operator body around one free occurrence of x
    struct OperandOf {
        Name binder;
        CtxPath bodyCtx;
    };
    // (\x.E) t : descend under the binder
    struct UnderBinder {
        Name binder;
        TermPtr operand;
    };
    // f E
    struct PrimArg {
        Prim prim;
    };
    // car E / cdr E
    struct CarArg {};
    struct CdrArg {};
    // letrec D in E
    struct InLetrecBody {
        Bindings bindings;
    };
    // letrec D, x = E in E[x] : descend into the demanded binding; the
    // body evidence and the other bindings are carried for reconstruction
    struct InLetrecBinding {
        Name var;
        Bindings before;
        Bindings after;
        TermPtr body;
    };
    // letrec xn = E, D[x,xn] in E[x] : descend along a dependency chain;
    // entries run from the body-demanded variable inward
    struct InDepChain {
        struct Link {
            Name var;      // variable whose definition demands the next one
            TermPtr rhs;   // that definition, with the demanded occurrence intact
        };
        Name var;  // the chain-end variable whose definition holds the hole
        std::vector<Link> chain;
        Bindings before;
        Bindings after;
        TermPtr body;
    };

    using Step = std::variant<AppLeft, OperandOf, UnderBinder, PrimArg, CarArg,
                              CdrArg, InLetrecBody, InLetrecBinding, InDepChain>;
    Step step;
};

// Rebuild the whole term from a path and the term sitting in the hole.
TermPtr plug(const CtxPath& path, TermPtr focus);

struct Decomposition {
    struct IsAnswer {
        TermPtr term;
    };
    struct Redex {
        CtxPath ctx;
        TermPtr redex;
    };
    struct Stuck {
        std::string reason;
    };
    std::variant<IsAnswer, Redex, Stuck> result;
};

// a ::= v | (\x.a) t
bool is_answer(const Term& t);

// Unique decomposition of a closed term into context and redex.
Decomposition decompose(const TermPtr& term);

// ------------------------------
// contraction and stepping
// ------------------------------

struct ContractResult {
    TermPtr term;        // null when stuck
    std::string stuck;   // nonempty explains why
};

// One notion of reduction applied at the root. Throws std::invalid_argument
// if the term is not a redex shape; delta failures come back as stuck.
ContractResult contract(const TermPtr& redex);

struct StepResult {
    enum class Kind { Stepped, AlreadyAnswer, Stuck };
    Kind kind;
    TermPtr term;        // the contractum in context (Stepped)
    std::string reason;  // Stuck
};

StepResult step_sr(const TermPtr& term);

struct Outcome {
    enum class Kind { Value, OutOfFuel, Stuck };
    Kind kind;
    TermPtr term;        // answer, or last term seen
    long steps = 0;      // contractions performed
    std::string reason;
    long delta_count = 0;
};

Outcome evaluate_sr(const TermPtr& term, long fuel);

// ------------------------------
// letrec calculus
// ------------------------------

struct LetrecStep {
    enum class Kind { Stepped, AlreadyAnswer, BlackHole, Stuck };
    Kind kind;
    TermPtr term;
    std::vector<Name> chain;  // the cycle, for BlackHole
    std::string reason;
    bool applied_delta = false;
};

// letrec answers: a ::= v | letrec D in a
bool is_letrec_answer(const Term& t);

LetrecStep step_letrec(const TermPtr& term);

Outcome evaluate_letrec(const TermPtr& term, long fuel);

}  // namespace needle
