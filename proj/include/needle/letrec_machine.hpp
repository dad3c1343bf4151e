#pragma once

#include <string>
#include <variant>
#include <vector>

#include "needle/machine.hpp"  // MachineStats, TraceLine
#include "needle/syntax.hpp"

namespace needle {

// ------------------------------
// letrec machine contexts
// ------------------------------

struct LFrame;
using LContext = std::vector<LFrame>;

// Dependency chain, most recent first: <xn,En>::...::<x0,E0>. Entry i holds
// the context inside x_i's definition where the next variable was demanded.
struct DepChain {
    struct Entry {
        Name var;
        LContext ctx;
    };
    std::vector<Entry> entries;

    bool empty() const { return entries.empty(); }
    bool mentions(const Name& n) const {
        for (const auto& e : entries)
            if (e.var == n) return true;
        return false;
    }
};

struct LFrame {
    struct Operand {
        TermPtr term;  // [] t
    };
    struct RecBinder {
        Bindings bindings;  // letr D+ in []
    };
    // letr x = [], <chain>, D* in E  (an empty chain is the plain
    // evaluated-binding frame)
    struct EvalFrame {
        Name var;
        DepChain chain;
        Bindings rest;
        LContext bodyCtx;
    };
    struct PrimF {
        Prim prim;
    };
    struct CarF {};
    struct CdrF {};

    std::variant<Operand, RecBinder, EvalFrame, PrimF, CarF, CdrF> f;
};

struct LAnswer {
    LContext binders;  // RecBinder frames only
    TermPtr value;
};

// Concatenate a run of RecBinder frames into one binding list.
Bindings flatten(const LContext& binders);

struct LRedex {
    struct AnswerApply {  // a t
        LAnswer fun;
        TermPtr arg;
    };
    struct EvalRedex {  // letr x = a, <chain>, D* in E
        Name var;
        LAnswer ans;
        DepChain chain;
        Bindings rest;
        LContext bodyCtx;
    };
    struct LetrecRedex {  // source letrec
        Bindings bindings;
        TermPtr body;
    };
    struct LetRedex {
        Name var;
        TermPtr rhs;
        TermPtr body;
    };
    struct PrimRedex {
        Prim prim;
        LAnswer arg;
    };
    struct ConsRedex {
        TermPtr first;
        TermPtr second;
    };
    struct CarRedex {
        LAnswer arg;
    };
    struct CdrRedex {
        LAnswer arg;
    };

    std::variant<AnswerApply, EvalRedex, LetrecRedex, LetRedex, PrimRedex,
                 ConsRedex, CarRedex, CdrRedex>
        r;
};

struct LConfiguration {
    struct Refocus {
        LContext ctx;
        TermPtr term;
    };
    struct Rebuild {
        LContext ctx;
        TermPtr value;
    };
    struct Need {
        LContext ctx;
        Name var;
    };
    struct Reduce {
        LContext ctx;
        LRedex redex;
    };
    struct Final {
        LAnswer answer;
    };

    std::vector<Name> names;
    std::variant<Refocus, Rebuild, Need, Reduce, Final> mode;

    bool is_final() const { return std::holds_alternative<Final>(mode); }
};

enum class LTag {
    LF1, LF2, LF3, LF4, LF5, LF6, LF7, LF8, LF9,
    LB1, LB2, LB3, LB4, LB5, LB6, LB7,
    LN1, LN2,
    LD1, LD2, LD3, LD4,
    LLET, LPRIM, LCONS, LCAR, LCDR,
};

std::string ltag_name(LTag t);
bool is_lreduce_tag(LTag t);

// ------------------------------
// operations
// ------------------------------

LConfiguration linject(const TermPtr& term);

struct LStepInfo {
    bool ok = true;
    LConfiguration next;
    LTag tag = LTag::LF1;
    std::string stuck_reason;
    bool black_hole = false;
    std::vector<Name> chain;  // the cyclic dependencies, for black holes
    bool renamed = false;
    bool applied_delta = false;
};

LStepInfo lstep(const LConfiguration& c);

struct LMachineResult {
    enum class Kind { Final, OutOfFuel, Stuck, BlackHole };
    Kind kind;
    LConfiguration last;
    std::string stuck_reason;
    std::vector<Name> chain;
    MachineStats stats;
    std::vector<TraceLine> trace;
    std::vector<LConfiguration> history;
    std::vector<LTag> tags;
    std::vector<std::string> wf_failures;
};

LMachineResult lrun(const LConfiguration& start, long fuel,
                    const RunOptions& opts = {});
LMachineResult lrun_term(const TermPtr& term, long fuel,
                         const RunOptions& opts = {});

TermPtr lunload(const LConfiguration& c);
TermPtr lunload_answer(const LAnswer& a);

WfReport lcheck_wf(const LConfiguration& c);

std::string lrender(const LConfiguration& c);
std::string lrender_context(const LContext& E);

}  // namespace needle
