#pragma once

#include <string>
#include <variant>
#include <vector>

#include "needle/syntax.hpp"

namespace needle {

// ------------------------------
// contexts as frame lists (innermost frame last)
// ------------------------------

struct Frame;
using Context = std::vector<Frame>;

struct Frame {
    struct Operand {
        TermPtr term;  // [] t
    };
    struct Binder {
        Name var;      // (\x.[]) t
        TermPtr term;
    };
    struct ContFrame {
        Name var;      // (kx.E) []
        Context inner;
    };
    struct PrimF {
        Prim prim;     // f []
    };
    struct CarF {};    // car []
    struct CdrF {};    // cdr []

    std::variant<Operand, Binder, ContFrame, PrimF, CarF, CdrF> f;
};

// Answer = binder frames x value
struct Answer {
    Context binders;  // Binder frames only
    TermPtr value;    // Lam, IntConst, or PairVal
};

struct MRedex {
    struct ContApply {   // (kx.E) a
        Name var;
        Context inner;
        Answer arg;
    };
    struct AnswerApply {  // a t
        Answer fun;
        TermPtr arg;
    };
    struct LetRedex {
        Name var;
        TermPtr rhs;
        TermPtr body;
    };
    struct PrimRedex {  // f a
        Prim prim;
        Answer arg;
    };
    struct ConsRedex {  // cons t1 t2
        TermPtr first;
        TermPtr second;
    };
    struct CarRedex {  // car a
        Answer arg;
    };
    struct CdrRedex {  // cdr a
        Answer arg;
    };

    std::variant<ContApply, AnswerApply, LetRedex, PrimRedex, ConsRedex, CarRedex,
                 CdrRedex>
        r;
};

// ------------------------------
// configurations <X | E, ?>
// ------------------------------

struct Configuration {
    struct Refocus {
        Context ctx;
        TermPtr term;
    };
    struct Rebuild {
        Context ctx;
        TermPtr value;
    };
    struct Need {
        Context ctx;
        Name var;
    };
    struct Reduce {
        Context ctx;
        MRedex redex;
    };
    struct Final {
        Answer answer;
    };

    std::vector<Name> names;  // X, in insertion order
    std::variant<Refocus, Rebuild, Need, Reduce, Final> mode;

    bool is_final() const { return std::holds_alternative<Final>(mode); }
};

enum class RuleTag {
    F1, F2, F3, F4, F5, F6, F7, F8,
    B1, B2, B3, B4, B5, B6,
    N1,
    D1, D2,
    LET, PRIM, CONS, CAR, CDR,
};

std::string tag_name(RuleTag t);
bool is_reduce_tag(RuleTag t);

// ------------------------------
// operations
// ------------------------------

// <0 | [], t>_f ; throws std::invalid_argument on open terms
Configuration inject(const TermPtr& term);

struct StepInfo {
    bool ok = true;
    Configuration next;
    RuleTag tag = RuleTag::F1;
    std::string stuck_reason;  // set when !ok
    bool renamed = false;      // D.2 / LET freshened the binder
    bool applied_delta = false;
};

StepInfo step(const Configuration& c);

struct MachineStats {
    long steps = 0;
    long delta_count = 0;
    long fresh_count = 0;
    size_t max_context_depth = 0;
};

struct TraceLine {
    std::string tag;       // "-" for the initial configuration
    std::string rendered;
};

struct RunOptions {
    bool trace = false;
    bool check_wf = false;     // assert well-formedness at every step
    bool keep_history = false; // record every configuration and tag
};

struct MachineResult {
    enum class Kind { Final, OutOfFuel, Stuck };
    Kind kind;
    Configuration last;  // the Final configuration, or the last one reached
    std::string stuck_reason;
    MachineStats stats;
    std::vector<TraceLine> trace;
    std::vector<Configuration> history;  // with keep_history
    std::vector<RuleTag> tags;           // with keep_history
    std::vector<std::string> wf_failures;
};

MachineResult run(const Configuration& start, long fuel, const RunOptions& opts = {});
MachineResult run_term(const TermPtr& term, long fuel, const RunOptions& opts = {});

// mtoc: map configurations back to calculus terms
TermPtr unload(const Configuration& c);
TermPtr unload_answer(const Answer& a);

// active / captured / free context variables
NameSet av(const Context& E);
NameSet cv(const Context& E);
NameSet fv_ctx(const Context& E);

struct WfReport {
    bool ok = true;
    std::vector<std::string> violations;
};

WfReport check_wf(const Configuration& c);

std::string render(const Configuration& c);
std::string render_context(const Context& E);

}  // namespace needle
