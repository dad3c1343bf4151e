#include "needle/machine.hpp"

#include <algorithm>
#include <stdexcept>

namespace needle {

std::string tag_name(RuleTag t) {
    switch (t) {
        case RuleTag::F1: return "F.1";
        case RuleTag::F2: return "F.2";
        case RuleTag::F3: return "F.3";
        case RuleTag::F4: return "F.4";
        case RuleTag::F5: return "F.5";
        case RuleTag::F6: return "F.6";
        case RuleTag::F7: return "F.7";
        case RuleTag::F8: return "F.8";
        case RuleTag::B1: return "B.1";
        case RuleTag::B2: return "B.2";
        case RuleTag::B3: return "B.3";
        case RuleTag::B4: return "B.4";
        case RuleTag::B5: return "B.5";
        case RuleTag::B6: return "B.6";
        case RuleTag::N1: return "N.1";
        case RuleTag::D1: return "D.1";
        case RuleTag::D2: return "D.2";
        case RuleTag::LET: return "LET";
        case RuleTag::PRIM: return "PRIM";
        case RuleTag::CONS: return "CONS";
        case RuleTag::CAR: return "CAR";
        case RuleTag::CDR: return "CDR";
    }
    return "?";
}

bool is_reduce_tag(RuleTag t) {
    switch (t) {
        case RuleTag::D1:
        case RuleTag::D2:
        case RuleTag::LET:
        case RuleTag::PRIM:
        case RuleTag::CONS:
        case RuleTag::CAR:
        case RuleTag::CDR: return true;
        default: return false;
    }
}

namespace {

Context compose(Context a, const Context& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

Context compose(Context a, Frame f) {
    a.push_back(std::move(f));
    return a;
}

NameSet name_set(const std::vector<Name>& names) {
    return NameSet(names.begin(), names.end());
}

long long apply_delta(Prim p, long long v) {
    switch (p) {
        case Prim::Add1: return v + 1;
        case Prim::Sub1: return v - 1;
    }
    return 0;
}

StepInfo stuck(const Configuration& c, std::string reason) {
    StepInfo s;
    s.ok = false;
    s.next = c;
    s.stuck_reason = std::move(reason);
    return s;
}

StepInfo to(std::vector<Name> names,
            std::variant<Configuration::Refocus, Configuration::Rebuild,
                         Configuration::Need, Configuration::Reduce,
                         Configuration::Final>
                mode,
            RuleTag tag) {
    StepInfo s;
    s.next = Configuration{std::move(names), std::move(mode)};
    s.tag = tag;
    return s;
}

}  // namespace

Configuration inject(const TermPtr& term) {
    NameSet fv = free_vars(*term);
    if (!fv.empty())
        throw std::invalid_argument("inject: open term (free variable " +
                                    print_name(*fv.begin()) + ")");
    return Configuration{{}, Configuration::Refocus{{}, term}};
}

// ------------------------------
// transition rules
// ------------------------------

namespace {

StepInfo step_refocus(const Configuration& c, const Configuration::Refocus& m) {
    const Term& t = *m.term;
    // (F.1)  <X | E, x>_f -> <X | E, x>_n
    if (const auto* v = std::get_if<Term::Var>(&t.node))
        return to(c.names, Configuration::Need{m.ctx, v->name}, RuleTag::F1);
    // (F.2)  <X | E, v>_f -> <X | E, v>_b
    if (is_value(t))
        return to(c.names, Configuration::Rebuild{m.ctx, m.term}, RuleTag::F2);
    // (F.3)  <X | E, t1 t2>_f -> <X | E.[[] t2], t1>_f
    if (const auto* a = std::get_if<Term::App>(&t.node))
        return to(c.names,
                  Configuration::Refocus{
                      compose(m.ctx, Frame{Frame::Operand{a->arg}}), a->fun},
                  RuleTag::F3);
    // (F.4)  <X | E, let x=t2 in t1>_f -> <X | E, let x=t2 in t1>_d
    if (const auto* l = std::get_if<Term::Let>(&t.node))
        return to(c.names,
                  Configuration::Reduce{
                      m.ctx, MRedex{MRedex::LetRedex{l->name, l->rhs, l->body}}},
                  RuleTag::F4);
    // (F.5)  <X | E, f t>_f -> <X | E.[f []], t>_f
    if (const auto* p = std::get_if<Term::PrimApp>(&t.node))
        return to(c.names,
                  Configuration::Refocus{
                      compose(m.ctx, Frame{Frame::PrimF{p->prim}}), p->arg},
                  RuleTag::F5);
    // (F.6)  <X | E, cons t1 t2>_f -> <X | E, cons t1 t2>_d
    if (const auto* cn = std::get_if<Term::Cons>(&t.node))
        return to(c.names,
                  Configuration::Reduce{
                      m.ctx, MRedex{MRedex::ConsRedex{cn->first, cn->second}}},
                  RuleTag::F6);
    // (F.7)  <X | E, car t>_f -> <X | E.[car []], t>_f
    if (const auto* cr = std::get_if<Term::Car>(&t.node))
        return to(c.names,
                  Configuration::Refocus{compose(m.ctx, Frame{Frame::CarF{}}),
                                         cr->arg},
                  RuleTag::F7);
    // (F.8)  <X | E, cdr t>_f -> <X | E.[cdr []], t>_f
    if (const auto* cd = std::get_if<Term::Cdr>(&t.node))
        return to(c.names,
                  Configuration::Refocus{compose(m.ctx, Frame{Frame::CdrF{}}),
                                         cd->arg},
                  RuleTag::F8);
    return stuck(c, "letrec requires the letrec machine");
}

StepInfo step_rebuild(const Configuration& c, const Configuration::Rebuild& m) {
    // split off the maximal trailing run of binder frames E_b
    size_t cut = m.ctx.size();
    while (cut > 0 && std::holds_alternative<Frame::Binder>(m.ctx[cut - 1].f)) cut--;
    Answer a{Context(m.ctx.begin() + cut, m.ctx.end()), m.value};
    // (B.1)  <X | E_b, v>_b -> <X | <E_b, v>>
    if (cut == 0) return to(c.names, Configuration::Final{std::move(a)}, RuleTag::B1);
    Context outer(m.ctx.begin(), m.ctx.begin() + (cut - 1));
    const Frame& split = m.ctx[cut - 1];
    // (B.2)  <X | E1.[[] t].E_b, v>_b -> <X | E1, <E_b,v> t>_d
    if (const auto* op = std::get_if<Frame::Operand>(&split.f))
        return to(c.names,
                  Configuration::Reduce{
                      std::move(outer),
                      MRedex{MRedex::AnswerApply{std::move(a), op->term}}},
                  RuleTag::B2);
    // (B.3)  <X | E1.[(kx.E2) []].E_b, v>_b -> <X | E1, (kx.E2) <E_b,v>>_d
    if (const auto* k = std::get_if<Frame::ContFrame>(&split.f))
        return to(c.names,
                  Configuration::Reduce{
                      std::move(outer),
                      MRedex{MRedex::ContApply{k->var, k->inner, std::move(a)}}},
                  RuleTag::B3);
    // (B.4)  <X | E1.[f []].E_b, v>_b -> <X | E1, f <E_b,v>>_d
    if (const auto* p = std::get_if<Frame::PrimF>(&split.f))
        return to(c.names,
                  Configuration::Reduce{
                      std::move(outer),
                      MRedex{MRedex::PrimRedex{p->prim, std::move(a)}}},
                  RuleTag::B4);
    // (B.5) / (B.6): car / cdr frames
    if (std::holds_alternative<Frame::CarF>(split.f))
        return to(c.names,
                  Configuration::Reduce{std::move(outer),
                                        MRedex{MRedex::CarRedex{std::move(a)}}},
                  RuleTag::B5);
    return to(c.names,
              Configuration::Reduce{std::move(outer),
                                    MRedex{MRedex::CdrRedex{std::move(a)}}},
              RuleTag::B6);
}

StepInfo step_need(const Configuration& c, const Configuration::Need& m) {
    // (N.1)  <X | E1.[(\x.[]) t].E2, x>_n -> <X | E1.[(kx.E2) []], t>_f
    // scanning from the innermost end keeps [(\x.[]) t] out of E2
    for (size_t i = m.ctx.size(); i-- > 0;) {
        const auto* b = std::get_if<Frame::Binder>(&m.ctx[i].f);
        if (!b || b->var != m.var) continue;
        Context e1(m.ctx.begin(), m.ctx.begin() + i);
        Context e2(m.ctx.begin() + i + 1, m.ctx.end());
        return to(c.names,
                  Configuration::Refocus{
                      compose(std::move(e1),
                              Frame{Frame::ContFrame{m.var, std::move(e2)}}),
                      b->term},
                  RuleTag::N1);
    }
    return stuck(c, "need: no binder for " + print_name(m.var));
}

StepInfo step_reduce(const Configuration& c, const Configuration::Reduce& m) {
    NameSet xs = name_set(c.names);
    // (D.1)  <X | E1, (kx.E2) <E3,v>>_d -> <X | E1.E3.[(\x.[]) v].E2, v>_b
    if (const auto* k = std::get_if<MRedex::ContApply>(&m.redex.r)) {
        Context ctx = compose(m.ctx, k->arg.binders);
        ctx = compose(std::move(ctx), Frame{Frame::Binder{k->var, k->arg.value}});
        ctx = compose(std::move(ctx), k->inner);
        return to(c.names, Configuration::Rebuild{std::move(ctx), k->arg.value},
                  RuleTag::D1);
    }
    // (D.2)  <X | E1, <E2,\x.t1> t2>_d -> <X,x' | E1.E2.[(\x'.[]) t2], t1[x'/x]>_f
    if (const auto* ap = std::get_if<MRedex::AnswerApply>(&m.redex.r)) {
        const auto* l = std::get_if<Term::Lam>(&ap->fun.value->node);
        if (!l)
            return stuck(c, "application of non-function value " +
                                print(ap->fun.value));
        Name renamed = fresh(l->param, xs);
        TermPtr body =
            renamed == l->param ? l->body : subst(l->body, l->param, mk_var(renamed));
        std::vector<Name> names = c.names;
        names.push_back(renamed);
        Context ctx = compose(m.ctx, ap->fun.binders);
        ctx = compose(std::move(ctx), Frame{Frame::Binder{renamed, ap->arg}});
        StepInfo s = to(std::move(names),
                        Configuration::Refocus{std::move(ctx), body}, RuleTag::D2);
        s.renamed = renamed != l->param;
        return s;
    }
    // (LET)  <X | E, let x=t2 in t1>_d -> <X,x' | E.[(\x'.[]) t2], t1[x'/x]>_f
    if (const auto* lt = std::get_if<MRedex::LetRedex>(&m.redex.r)) {
        Name renamed = fresh(lt->var, xs);
        TermPtr body =
            renamed == lt->var ? lt->body : subst(lt->body, lt->var, mk_var(renamed));
        std::vector<Name> names = c.names;
        names.push_back(renamed);
        Context ctx = compose(m.ctx, Frame{Frame::Binder{renamed, lt->rhs}});
        StepInfo s = to(std::move(names),
                        Configuration::Refocus{std::move(ctx), body}, RuleTag::LET);
        s.renamed = renamed != lt->var;
        return s;
    }
    // (PRIM)  <X | E, f <E_b,v>>_d -> <X | E.E_b, delta(f,v)>_b
    if (const auto* p = std::get_if<MRedex::PrimRedex>(&m.redex.r)) {
        const auto* n = std::get_if<Term::IntConst>(&p->arg.value->node);
        if (!n)
            return stuck(c, "delta undefined: " + prim_word(p->prim) +
                                " applied to " + print(p->arg.value));
        StepInfo s = to(c.names,
                        Configuration::Rebuild{compose(m.ctx, p->arg.binders),
                                               mk_int(apply_delta(p->prim, n->value))},
                        RuleTag::PRIM);
        s.applied_delta = true;
        return s;
    }
    // (CONS)  <X | E, cons t1 t2>_d
    //         -> <X,x1,x2 | E.[(\x1.[]) t1].[(\x2.[]) t2], <x1,x2>>_b
    if (const auto* cn = std::get_if<MRedex::ConsRedex>(&m.redex.r)) {
        Name x1 = fresh(Name("x", 1), xs);
        xs.insert(x1);
        Name x2 = fresh(Name("x", 2), xs);
        std::vector<Name> names = c.names;
        names.push_back(x1);
        names.push_back(x2);
        Context ctx = compose(m.ctx, Frame{Frame::Binder{x1, cn->first}});
        ctx = compose(std::move(ctx), Frame{Frame::Binder{x2, cn->second}});
        return to(std::move(names),
                  Configuration::Rebuild{std::move(ctx), mk_pair_val(x1, x2)},
                  RuleTag::CONS);
    }
    // (CAR)  <X | E1, car <E2,<x1,x2>>>_d -> <X | E1.E2, x1>_n
    if (const auto* cr = std::get_if<MRedex::CarRedex>(&m.redex.r)) {
        const auto* pv = std::get_if<Term::PairVal>(&cr->arg.value->node);
        if (!pv) return stuck(c, "car applied to " + print(cr->arg.value));
        return to(c.names,
                  Configuration::Need{compose(m.ctx, cr->arg.binders), pv->first},
                  RuleTag::CAR);
    }
    const auto& cd = std::get<MRedex::CdrRedex>(m.redex.r);
    const auto* pv = std::get_if<Term::PairVal>(&cd.arg.value->node);
    if (!pv) return stuck(c, "cdr applied to " + print(cd.arg.value));
    return to(c.names,
              Configuration::Need{compose(m.ctx, cd.arg.binders), pv->second},
              RuleTag::CDR);
}

}  // namespace

StepInfo step(const Configuration& c) {
    return std::visit(
        overloaded{
            [&](const Configuration::Refocus& m) { return step_refocus(c, m); },
            [&](const Configuration::Rebuild& m) { return step_rebuild(c, m); },
            [&](const Configuration::Need& m) { return step_need(c, m); },
            [&](const Configuration::Reduce& m) { return step_reduce(c, m); },
            [&](const Configuration::Final&) {
                return stuck(c, "step on a final configuration");
            },
        },
        c.mode);
}

// ------------------------------
// driver
// ------------------------------

namespace {

size_t context_depth(const Configuration& c) {
    return std::visit(
        overloaded{
            [](const Configuration::Refocus& m) { return m.ctx.size(); },
            [](const Configuration::Rebuild& m) { return m.ctx.size(); },
            [](const Configuration::Need& m) { return m.ctx.size(); },
            [](const Configuration::Reduce& m) { return m.ctx.size(); },
            [](const Configuration::Final& m) { return m.answer.binders.size(); },
        },
        c.mode);
}

}  // namespace

MachineResult run(const Configuration& start, long fuel, const RunOptions& opts) {
    MachineResult res;
    res.kind = MachineResult::Kind::OutOfFuel;
    Configuration cur = start;
    auto note = [&](const Configuration& c, const char* tag) {
        if (opts.trace) res.trace.push_back({tag, render(c)});
        if (opts.check_wf) {
            WfReport wf = check_wf(c);
            if (!wf.ok)
                for (const auto& v : wf.violations)
                    res.wf_failures.push_back("step " + std::to_string(res.stats.steps) +
                                              ": " + v);
        }
        res.stats.max_context_depth =
            std::max(res.stats.max_context_depth, context_depth(c));
    };
    if (opts.keep_history) res.history.push_back(cur);
    note(cur, "-");
    while (!cur.is_final()) {
        if (res.stats.steps >= fuel) {
            res.kind = MachineResult::Kind::OutOfFuel;
            res.last = cur;
            return res;
        }
        StepInfo s = step(cur);
        if (!s.ok) {
            res.kind = MachineResult::Kind::Stuck;
            res.last = cur;
            res.stuck_reason = s.stuck_reason;
            return res;
        }
        cur = std::move(s.next);
        res.stats.steps++;
        if (s.applied_delta) res.stats.delta_count++;
        if (s.renamed) res.stats.fresh_count++;
        if (opts.keep_history) {
            res.history.push_back(cur);
            res.tags.push_back(s.tag);
        }
        note(cur, tag_name(s.tag).c_str());
    }
    res.kind = MachineResult::Kind::Final;
    res.last = cur;
    return res;
}

MachineResult run_term(const TermPtr& term, long fuel, const RunOptions& opts) {
    return run(inject(term), fuel, opts);
}

// ------------------------------
// mtoc / unload
// ------------------------------

namespace {

TermPtr unload_ctx(const Context& E, size_t i, TermPtr hole) {
    if (i == E.size()) return hole;
    const Frame& f = E[i];
    return std::visit(
        overloaded{
            [&](const Frame::Operand& o) {
                return mk_app(unload_ctx(E, i + 1, hole), o.term);
            },
            [&](const Frame::Binder& b) {
                return mk_app(mk_lam(b.var, unload_ctx(E, i + 1, hole)), b.term);
            },
            [&](const Frame::ContFrame& k) {
                return mk_app(mk_lam(k.var, unload_ctx(k.inner, 0, mk_var(k.var))),
                              unload_ctx(E, i + 1, hole));
            },
            [&](const Frame::PrimF& p) {
                return mk_prim(p.prim, unload_ctx(E, i + 1, hole));
            },
            [&](const Frame::CarF&) { return mk_car(unload_ctx(E, i + 1, hole)); },
            [&](const Frame::CdrF&) { return mk_cdr(unload_ctx(E, i + 1, hole)); },
        },
        f.f);
}

TermPtr unload_redex(const MRedex& r) {
    return std::visit(
        overloaded{
            [&](const MRedex::ContApply& k) {
                return mk_app(mk_lam(k.var, unload_ctx(k.inner, 0, mk_var(k.var))),
                              unload_answer(k.arg));
            },
            [&](const MRedex::AnswerApply& a) {
                return mk_app(unload_answer(a.fun), a.arg);
            },
            [&](const MRedex::LetRedex& l) { return mk_let(l.var, l.rhs, l.body); },
            [&](const MRedex::PrimRedex& p) {
                return mk_prim(p.prim, unload_answer(p.arg));
            },
            [&](const MRedex::ConsRedex& c) { return mk_cons(c.first, c.second); },
            [&](const MRedex::CarRedex& c) { return mk_car(unload_answer(c.arg)); },
            [&](const MRedex::CdrRedex& c) { return mk_cdr(unload_answer(c.arg)); },
        },
        r.r);
}

}  // namespace

TermPtr unload_answer(const Answer& a) { return unload_ctx(a.binders, 0, a.value); }

TermPtr unload(const Configuration& c) {
    return std::visit(
        overloaded{
            [&](const Configuration::Refocus& m) {
                return unload_ctx(m.ctx, 0, m.term);
            },
            [&](const Configuration::Rebuild& m) {
                return unload_ctx(m.ctx, 0, m.value);
            },
            [&](const Configuration::Need& m) {
                return unload_ctx(m.ctx, 0, mk_var(m.var));
            },
            [&](const Configuration::Reduce& m) {
                return unload_ctx(m.ctx, 0, unload_redex(m.redex));
            },
            [&](const Configuration::Final& m) { return unload_answer(m.answer); },
        },
        c.mode);
}

// ------------------------------
// active / captured / free context variables
// ------------------------------

namespace {

void av_occurrences(const Context& E, std::vector<Name>& out) {
    for (const Frame& f : E) {
        std::visit(overloaded{
                       [&](const Frame::Binder& b) { out.push_back(b.var); },
                       [&](const Frame::ContFrame& k) {
                           av_occurrences(k.inner, out);
                           out.push_back(k.var);
                       },
                       [&](const auto&) {},
                   },
                   f.f);
    }
}

// One backward sweep: a frame's binder scopes over everything inner to it.
void fv_ctx_into(const Context& E, NameSet& free) {
    for (size_t i = E.size(); i-- > 0;) {
        std::visit(
            overloaded{
                [&](const Frame::Binder& b) {
                    free.erase(b.var);
                    const NameSet& tf = free_vars_cached(b.term);
                    free.insert(tf.begin(), tf.end());
                },
                [&](const Frame::Operand& o) {
                    const NameSet& tf = free_vars_cached(o.term);
                    free.insert(tf.begin(), tf.end());
                },
                [&](const Frame::ContFrame& k) {
                    NameSet inner;
                    fv_ctx_into(k.inner, inner);
                    inner.erase(k.var);
                    free.insert(inner.begin(), inner.end());
                },
                [&](const auto&) {},
            },
            E[i].f);
    }
}

}  // namespace

NameSet av(const Context& E) {
    std::vector<Name> occ;
    av_occurrences(E, occ);
    return NameSet(occ.begin(), occ.end());
}

NameSet cv(const Context& E) {
    // cont frames capture nothing: CV(E.[(kx.E1) []]) = CV(E)
    NameSet out;
    for (const Frame& f : E)
        if (const auto* b = std::get_if<Frame::Binder>(&f.f)) out.insert(b->var);
    return out;
}

NameSet fv_ctx(const Context& E) {
    NameSet free;
    fv_ctx_into(E, free);
    return free;
}

// ------------------------------
// well-formedness
// ------------------------------

namespace {

// The context a configuration's wf conditions range over: for reduce
// configurations the answer binders and the split frame rejoin the context.
struct WfView {
    Context ctx;
    NameSet focus_fv;
};

WfView wf_view(const Configuration& c) {
    return std::visit(
        overloaded{
            [&](const Configuration::Refocus& m) {
                return WfView{m.ctx, free_vars_cached(m.term)};
            },
            [&](const Configuration::Rebuild& m) {
                return WfView{m.ctx, free_vars_cached(m.value)};
            },
            [&](const Configuration::Need& m) {
                return WfView{m.ctx, NameSet{m.var}};
            },
            [&](const Configuration::Final& m) {
                return WfView{m.answer.binders, free_vars_cached(m.answer.value)};
            },
            [&](const Configuration::Reduce& m) {
                return std::visit(
                    overloaded{
                        [&](const MRedex::ContApply& k) {
                            Context ctx = compose(
                                m.ctx, Frame{Frame::ContFrame{k.var, k.inner}});
                            ctx = compose(std::move(ctx), k.arg.binders);
                            return WfView{std::move(ctx), free_vars_cached(k.arg.value)};
                        },
                        [&](const MRedex::AnswerApply& a) {
                            Context ctx =
                                compose(m.ctx, Frame{Frame::Operand{a.arg}});
                            ctx = compose(std::move(ctx), a.fun.binders);
                            return WfView{std::move(ctx), free_vars_cached(a.fun.value)};
                        },
                        [&](const MRedex::LetRedex& l) {
                            NameSet fv = free_vars(*l.rhs);
                            NameSet bf = free_vars(*l.body);
                            bf.erase(l.var);
                            fv.insert(bf.begin(), bf.end());
                            return WfView{m.ctx, std::move(fv)};
                        },
                        [&](const MRedex::PrimRedex& p) {
                            Context ctx =
                                compose(m.ctx, Frame{Frame::PrimF{p.prim}});
                            ctx = compose(std::move(ctx), p.arg.binders);
                            return WfView{std::move(ctx), free_vars_cached(p.arg.value)};
                        },
                        [&](const MRedex::ConsRedex& cn) {
                            NameSet fv = free_vars(*cn.first);
                            NameSet sf = free_vars(*cn.second);
                            fv.insert(sf.begin(), sf.end());
                            return WfView{m.ctx, std::move(fv)};
                        },
                        [&](const MRedex::CarRedex& cr) {
                            Context ctx = compose(m.ctx, Frame{Frame::CarF{}});
                            ctx = compose(std::move(ctx), cr.arg.binders);
                            return WfView{std::move(ctx), free_vars_cached(cr.arg.value)};
                        },
                        [&](const MRedex::CdrRedex& cd) {
                            Context ctx = compose(m.ctx, Frame{Frame::CdrF{}});
                            ctx = compose(std::move(ctx), cd.arg.binders);
                            return WfView{std::move(ctx), free_vars_cached(cd.arg.value)};
                        },
                    },
                    m.redex.r);
            },
        },
        c.mode);
}

}  // namespace

WfReport check_wf(const Configuration& c) {
    WfReport rep;
    auto violate = [&](std::string msg) {
        rep.ok = false;
        rep.violations.push_back(std::move(msg));
    };

    NameSet xs = name_set(c.names);
    if (xs.size() != c.names.size()) violate("duplicate name in X");

    WfView view = wf_view(c);

    // (1) FV(E) = 0
    NameSet ctx_free = fv_ctx(view.ctx);
    for (const Name& n : ctx_free)
        violate("free context variable " + print_name(n));

    // (2) AV(E) = X
    std::vector<Name> occ;
    av_occurrences(view.ctx, occ);
    NameSet avs(occ.begin(), occ.end());
    if (avs != xs) violate("AV(E) differs from the name list X");

    // (3) active variables pairwise distinct
    std::sort(occ.begin(), occ.end());
    for (size_t i = 0; i + 1 < occ.size(); i++)
        if (occ[i] == occ[i + 1]) {
            violate("duplicate active variable " + print_name(occ[i]));
            while (i + 1 < occ.size() && occ[i] == occ[i + 1]) i++;
        }

    // (4) FV(?) subset of CV(E)
    NameSet cvs = cv(view.ctx);
    for (const Name& n : view.focus_fv)
        if (!cvs.count(n))
            violate("focus variable " + print_name(n) + " is not captured");

    return rep;
}

// ------------------------------
// rendering
// ------------------------------

namespace {

std::string render_frame(const Frame& f) {
    return std::visit(
        overloaded{
            [&](const Frame::Operand& o) { return "[] " + print(o.term); },
            [&](const Frame::Binder& b) {
                return "(\\" + print_name(b.var) + ".[]) " + print(b.term);
            },
            [&](const Frame::ContFrame& k) {
                return "(k" + print_name(k.var) + "." + render_context(k.inner) +
                       ") []";
            },
            [&](const Frame::PrimF& p) { return prim_word(p.prim) + " []"; },
            [&](const Frame::CarF&) { return std::string("car []"); },
            [&](const Frame::CdrF&) { return std::string("cdr []"); },
        },
        f.f);
}

std::string render_answer(const Answer& a) {
    return "<" + render_context(a.binders) + ", " + print(a.value) + ">";
}

std::string render_redex(const MRedex& r) {
    return std::visit(
        overloaded{
            [&](const MRedex::ContApply& k) {
                return "(k" + print_name(k.var) + "." + render_context(k.inner) +
                       ") " + render_answer(k.arg);
            },
            [&](const MRedex::AnswerApply& a) {
                return render_answer(a.fun) + " " + print(a.arg);
            },
            [&](const MRedex::LetRedex& l) {
                return "let " + print_name(l.var) + " = " + print(l.rhs) + " in " +
                       print(l.body);
            },
            [&](const MRedex::PrimRedex& p) {
                return prim_word(p.prim) + " " + render_answer(p.arg);
            },
            [&](const MRedex::ConsRedex& c) {
                return "cons " + print(c.first) + " " + print(c.second);
            },
            [&](const MRedex::CarRedex& c) {
                return "car " + render_answer(c.arg);
            },
            [&](const MRedex::CdrRedex& c) {
                return "cdr " + render_answer(c.arg);
            },
        },
        r.r);
}

std::string render_names(const std::vector<Name>& names) {
    std::string out = "{";
    for (size_t i = 0; i < names.size(); i++) {
        if (i) out += ",";
        out += print_name(names[i]);
    }
    return out + "}";
}

}  // namespace

std::string render_context(const Context& E) {
    if (E.empty()) return "[]";
    std::string out;
    for (const Frame& f : E) out += "[" + render_frame(f) + "]";
    return out;
}

std::string render(const Configuration& c) {
    std::string head = "<" + render_names(c.names) + " | ";
    return std::visit(
        overloaded{
            [&](const Configuration::Refocus& m) {
                return head + render_context(m.ctx) + ", " + print(m.term) + ">_f";
            },
            [&](const Configuration::Rebuild& m) {
                return head + render_context(m.ctx) + ", " + print(m.value) + ">_b";
            },
            [&](const Configuration::Need& m) {
                return head + render_context(m.ctx) + ", " + print_name(m.var) +
                       ">_n";
            },
            [&](const Configuration::Reduce& m) {
                return head + render_context(m.ctx) + ", " + render_redex(m.redex) +
                       ">_d";
            },
            [&](const Configuration::Final& m) {
                return head + render_answer(m.answer) + ">";
            },
        },
        c.mode);
}

}  // namespace needle
