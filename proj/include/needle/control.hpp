#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "needle/syntax.hpp"  // Name

namespace needle {

// ------------------------------
// call-by-value control language: lambda + newPrompt / pushPrompt /
// withSubCont / pushSubCont, plus the host data the simulation needs
// ------------------------------

enum class CPrimOp { Add, Add1, Sub1, Fst, Snd };

std::string cprim_word(CPrimOp op);

struct CTerm;
using CTermPtr = std::shared_ptr<const CTerm>;

struct CTerm {
    struct CVar {
        Name name;
    };
    struct CLam {
        Name param;
        CTermPtr body;
        std::string thunk_label;  // nonempty marks an instrumented thunk
    };
    struct CApp {
        CTermPtr fun;
        CTermPtr arg;
    };
    struct CNewPrompt {};
    struct CPushPrompt {
        CTermPtr prompt;
        CTermPtr body;
    };
    struct CWithSubCont {
        CTermPtr prompt;
        CTermPtr fun;
    };
    struct CPushSubCont {
        CTermPtr subcont;
        CTermPtr body;
    };
    struct CInt {
        long long value;
    };
    struct CBool {
        bool value;
    };
    struct CUnit {};
    struct CPrim {
        CPrimOp op;
        std::vector<CTermPtr> args;
    };
    struct CIf {
        CTermPtr cond;
        CTermPtr then_branch;
        CTermPtr else_branch;
    };
    struct CPair {
        CTermPtr first;
        CTermPtr second;
    };
    struct CLet {
        Name name;
        CTermPtr rhs;
        CTermPtr body;
    };
    struct CLetPair {
        Name first;
        Name second;
        CTermPtr rhs;
        CTermPtr body;
    };

    using Node = std::variant<CVar, CLam, CApp, CNewPrompt, CPushPrompt,
                              CWithSubCont, CPushSubCont, CInt, CBool, CUnit, CPrim,
                              CIf, CPair, CLet, CLetPair>;
    Node node;

    explicit CTerm(Node n) : node(std::move(n)) {}
};

CTermPtr c_var(Name n);
CTermPtr c_lam(Name param, CTermPtr body, std::string thunk_label = "");
CTermPtr c_app(CTermPtr f, CTermPtr a);
CTermPtr c_new_prompt();
CTermPtr c_push_prompt(CTermPtr p, CTermPtr body);
CTermPtr c_with_subcont(CTermPtr p, CTermPtr f);
CTermPtr c_push_subcont(CTermPtr k, CTermPtr body);
CTermPtr c_int(long long v);
CTermPtr c_bool(bool v);
CTermPtr c_unit();
CTermPtr c_prim(CPrimOp op, std::vector<CTermPtr> args);
CTermPtr c_if(CTermPtr c, CTermPtr t, CTermPtr e);
CTermPtr c_pair(CTermPtr a, CTermPtr b);
CTermPtr c_let(Name n, CTermPtr rhs, CTermPtr body);
CTermPtr c_let_pair(Name a, Name b, CTermPtr rhs, CTermPtr body);

// ------------------------------
// values, environments, continuations, metacontinuations
// ------------------------------

struct CValue;
using CValuePtr = std::shared_ptr<const CValue>;

struct EnvNode;
struct Env {
    std::shared_ptr<const EnvNode> head;

    Env extend(const Name& n, CValuePtr v) const;
    const CValuePtr* lookup(const Name& n) const;
};

struct EnvNode {
    Name name;
    CValuePtr value;
    std::shared_ptr<const EnvNode> next;
};

struct CFrame;
using Kont = std::vector<CFrame>;  // innermost frame last

// M ::= [] | E : M | p : M
struct MetaItem {
    std::variant<Kont, uint64_t> item;

    bool is_prompt(uint64_t p) const {
        const auto* q = std::get_if<uint64_t>(&item);
        return q && *q == p;
    }
};
using Meta = std::deque<MetaItem>;  // front is innermost

struct CValue {
    struct Closure {
        Name param;
        CTermPtr body;
        Env env;
        std::string thunk_label;
    };
    struct PromptV {
        uint64_t prompt;
    };
    struct SubContV {
        Meta segment;  // captured E : M1
    };
    struct IntV {
        long long value;
    };
    struct BoolV {
        bool value;
    };
    struct UnitV {};
    struct PairV {
        CValuePtr first;
        CValuePtr second;
    };

    std::variant<Closure, PromptV, SubContV, IntV, BoolV, UnitV, PairV> v;
};

struct CFrame {
    struct AppFun {  // [] t
        CTermPtr arg;
        Env env;
    };
    struct AppArg {  // v []
        CValuePtr fun;
    };
    struct PushPromptF {  // pushPrompt [] t
        CTermPtr body;
        Env env;
    };
    struct WithSC1 {  // withSubCont [] t
        CTermPtr fun;
        Env env;
    };
    struct WithSC2 {  // withSubCont p []
        CValuePtr prompt;
    };
    struct PushSCF {  // pushSubCont [] t
        CTermPtr body;
        Env env;
    };
    struct PrimFc {
        CPrimOp op;
        std::vector<CTermPtr> pending;
        Env env;
        std::vector<CValuePtr> done;
    };
    struct IfF {
        CTermPtr then_branch;
        CTermPtr else_branch;
        Env env;
    };
    struct PairF1 {
        CTermPtr second;
        Env env;
    };
    struct PairF2 {
        CValuePtr first;
    };
    struct LetF {
        Name name;
        CTermPtr body;
        Env env;
    };
    struct LetPairF {
        Name first;
        Name second;
        CTermPtr body;
        Env env;
    };

    std::variant<AppFun, AppArg, PushPromptF, WithSC1, WithSC2, PushSCF, PrimFc,
                 IfF, PairF1, PairF2, LetF, LetPairF>
        f;
};

// State: focused term or value, continuation, metacontinuation, prompt source.
struct CState {
    bool returning = false;
    CTermPtr focus;  // when !returning
    Env env;
    CValuePtr value;  // when returning
    Kont kont;
    Meta meta;
    uint64_t counter = 0;
};

struct CStats {
    long steps = 0;
    long prompts = 0;
    std::map<std::string, long> thunk_entries;

    long entries_for(const std::string& prefix) const {
        long n = 0;
        for (const auto& [label, count] : thunk_entries)
            if (label.rfind(prefix, 0) == 0) n += count;
        return n;
    }
};

// ------------------------------
// operations
// ------------------------------

CState cinject(const CTermPtr& t);

struct CStepResult {
    enum class Kind { Continue, Done, Error };
    Kind kind = Kind::Continue;
    CState next;       // Continue
    CValuePtr value;   // Done
    std::string error; // Error
    std::string entered_thunk;  // label of a thunk body entered by this step
    bool allocated_prompt = false;
};

CStepResult cstep(const CState& s);

struct COutcome {
    enum class Kind { Value, OutOfFuel, Error };
    Kind kind;
    CValuePtr value;
    std::string error;
    CStats stats;
    std::vector<std::string> trace;
};

struct CRunOptions {
    bool trace = false;
};

COutcome crun(const CTermPtr& t, long fuel, const CRunOptions& opts = {});

std::string cvalue_show(const CValue& v);
std::string crender(const CState& s);

}  // namespace needle
