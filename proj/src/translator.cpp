#include "needle/translator.hpp"

namespace needle {

Name redex_prompt_name() { return Name("%s", 0); }

namespace {

// Macro-internal binders use reserved % names so they can never capture
// source variables.
const Name kS = redex_prompt_name();
const Name kKa{"%ka", 0};
const Name kVa{"%va", 0};
const Name kVp{"%vp", 0};  // pair result in car/cdr; distinct from the
                           // need macro's internal %va
const Name kXp{"%xp", 0};
const Name kFk{"%fk", 0};
const Name kK{"%k", 0};
const Name kFth{"%fth", 0};
const Name kU{"%u", 0};
const Name kC1{"%c1", 0};
const Name kC2{"%c2", 0};

// return v  ==  withSubCont s (\ka. <ka, v>)
CTermPtr m_return(CTermPtr v) {
    return c_with_subcont(c_var(kS), c_lam(kKa, c_pair(c_var(kKa), std::move(v))));
}

// do x <= t1 in t2  ==  let <ka, x> = pushPrompt s t1 in pushSubCont ka t2
CTermPtr m_do(const Name& x, CTermPtr t1, CTermPtr t2) {
    return c_let_pair(kKa, x, c_push_prompt(c_var(kS), std::move(t1)),
                      c_push_subcont(c_var(kKa), std::move(t2)));
}

// delay t1 as x in t2  ==  let fk = pushPrompt x t2 in fk (\().t1)
CTermPtr m_delay(CTermPtr t1, CTermPtr prompt, CTermPtr t2,
                 const std::string& label) {
    return c_let(kFk, c_push_prompt(std::move(prompt), std::move(t2)),
                 c_app(c_var(kFk), c_lam(kU, std::move(t1), label)));
}

// force f  ==  f ()
CTermPtr m_force(CTermPtr f) { return c_app(std::move(f), c_unit()); }

// need x  ==  withSubCont x \k.\fth.
//   do va <= force fth in (delay (return va) as x in pushSubCont k (return va))
CTermPtr m_need(const CTermPtr& prompt, const TranslateOptions& opts) {
    CTermPtr memo = opts.by_name_need ? m_force(c_var(kFth))
                                      : m_return(c_var(kVa));
    CTermPtr body = m_do(
        kVa, m_force(c_var(kFth)),
        m_delay(std::move(memo), prompt,
                c_push_subcont(c_var(kK), m_return(c_var(kVa))), ""));
    return c_with_subcont(prompt, c_lam(kK, c_lam(kFth, std::move(body))));
}

struct Translator {
    TranslateOptions opts;
    long site = 0;

    std::string label_for(const std::string& base) {
        return base + "@" + std::to_string(site++);
    }

    CTermPtr go(const TermPtr& t) {
        return std::visit(
            overloaded{
                [&](const Term::Var& v) -> CTermPtr {
                    return m_need(c_var(v.name), opts);
                },
                [&](const Term::Lam& l) -> CTermPtr {
                    return m_return(c_lam(l.param, go(l.body)));
                },
                [&](const Term::App& a) -> CTermPtr {
                    // do va <= N[t1] in let xp = newPrompt
                    //   in delay N[t2] as xp in (va xp)
                    return m_do(
                        kVa, go(a.fun),
                        c_let(kXp, c_new_prompt(),
                              m_delay(go(a.arg), c_var(kXp),
                                      c_app(c_var(kVa), c_var(kXp)),
                                      label_for("@arg"))));
                },
                [&](const Term::Let& l) -> CTermPtr {
                    // the source variable is directly assigned a fresh prompt
                    return c_let(l.name, c_new_prompt(),
                                 m_delay(go(l.rhs), c_var(l.name), go(l.body),
                                         label_for(print_name(l.name))));
                },
                [&](const Term::Letrec&) -> CTermPtr {
                    throw Untranslatable("letrec has no control translation");
                },
                [&](const Term::IntConst& n) -> CTermPtr {
                    return m_return(c_int(n.value));
                },
                [&](const Term::PrimApp& p) -> CTermPtr {
                    // do va <= N[t] in return (f va)
                    CPrimOp op =
                        p.prim == Prim::Add1 ? CPrimOp::Add1 : CPrimOp::Sub1;
                    return m_do(kVa, go(p.arg),
                                m_return(c_prim(op, {c_var(kVa)})));
                },
                [&](const Term::Cons& cn) -> CTermPtr {
                    // two fresh prompts, two delays, and a pair of the
                    // prompts; the pair is a value, so it is returned to the
                    // nearest redex like any other (the machine's cons rule
                    // rebuilds the same way)
                    return c_let(
                        kC1, c_new_prompt(),
                        c_let(kC2, c_new_prompt(),
                              m_delay(go(cn.first), c_var(kC1),
                                      m_delay(go(cn.second), c_var(kC2),
                                              m_return(c_pair(c_var(kC1),
                                                              c_var(kC2))),
                                              label_for("@cons2")),
                                      label_for("@cons1"))));
                },
                [&](const Term::Car& cr) -> CTermPtr {
                    return m_do(kVp, go(cr.arg),
                                m_need(c_prim(CPrimOp::Fst, {c_var(kVp)}), opts));
                },
                [&](const Term::Cdr& cd) -> CTermPtr {
                    return m_do(kVp, go(cd.arg),
                                m_need(c_prim(CPrimOp::Snd, {c_var(kVp)}), opts));
                },
                [&](const Term::PairVal&) -> CTermPtr {
                    throw Untranslatable("machine-internal pair value");
                },
            },
            t->node);
    }
};

}  // namespace

CTermPtr translate(const TermPtr& t, const TranslateOptions& opts) {
    Translator tr{opts, 0};
    return tr.go(t);
}

CTermPtr translate_program(const TermPtr& t, const TranslateOptions& opts) {
    return c_let(kS, c_new_prompt(), c_push_prompt(c_var(kS), translate(t, opts)));
}

std::string shape_word(SimOutcome::Shape s) {
    switch (s) {
        case SimOutcome::Shape::Int: return "int";
        case SimOutcome::Shape::Closure: return "closure";
        case SimOutcome::Shape::Pair: return "pair";
        case SimOutcome::Shape::Bool: return "bool";
        case SimOutcome::Shape::Unit: return "unit";
        case SimOutcome::Shape::Prompt: return "prompt";
        case SimOutcome::Shape::SubCont: return "subcont";
        case SimOutcome::Shape::Unknown: return "unknown";
    }
    return "?";
}

SimOutcome simulate(const TermPtr& t, long fuel, const TranslateOptions& opts) {
    SimOutcome out;
    CTermPtr prog = translate_program(t, opts);
    COutcome run = crun(prog, fuel);
    out.steps = run.stats.steps;
    out.stats = run.stats;
    if (run.kind == COutcome::Kind::OutOfFuel) {
        out.kind = SimOutcome::Kind::OutOfFuel;
        return out;
    }
    if (run.kind == COutcome::Kind::Error) {
        out.kind = SimOutcome::Kind::Error;
        out.error = run.error;
        return out;
    }
    out.kind = SimOutcome::Kind::Value;
    out.answer = run.value;
    // the program's value is the answer tuple <k_a, v_a>
    if (const auto* p = std::get_if<CValue::PairV>(&run.value->v))
        out.value_part = p->second;
    else
        out.value_part = run.value;
    std::visit(overloaded{
                   [&](const CValue::IntV& n) {
                       out.shape = SimOutcome::Shape::Int;
                       out.int_value = n.value;
                   },
                   [&](const CValue::Closure&) {
                       out.shape = SimOutcome::Shape::Closure;
                   },
                   [&](const CValue::PairV&) { out.shape = SimOutcome::Shape::Pair; },
                   [&](const CValue::BoolV&) { out.shape = SimOutcome::Shape::Bool; },
                   [&](const CValue::UnitV&) { out.shape = SimOutcome::Shape::Unit; },
                   [&](const CValue::PromptV&) {
                       out.shape = SimOutcome::Shape::Prompt;
                   },
                   [&](const CValue::SubContV&) {
                       out.shape = SimOutcome::Shape::SubCont;
                   },
               },
               out.value_part->v);
    return out;
}

}  // namespace needle
