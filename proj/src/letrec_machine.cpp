#include "needle/letrec_machine.hpp"

#include <algorithm>
#include <stdexcept>

namespace needle {

std::string ltag_name(LTag t) {
    switch (t) {
        case LTag::LF1: return "LF.1";
        case LTag::LF2: return "LF.2";
        case LTag::LF3: return "LF.3";
        case LTag::LF4: return "LF.4";
        case LTag::LF5: return "LF.5";
        case LTag::LF6: return "LF.6";
        case LTag::LF7: return "LF.7";
        case LTag::LF8: return "LF.8";
        case LTag::LF9: return "LF.9";
        case LTag::LB1: return "LB.1";
        case LTag::LB2: return "LB.2";
        case LTag::LB3: return "LB.3";
        case LTag::LB4: return "LB.4";
        case LTag::LB5: return "LB.5";
        case LTag::LB6: return "LB.6";
        case LTag::LB7: return "LB.7";
        case LTag::LN1: return "LN.1";
        case LTag::LN2: return "LN.2";
        case LTag::LD1: return "LD.1";
        case LTag::LD2: return "LD.2";
        case LTag::LD3: return "LD.3";
        case LTag::LD4: return "LD.4";
        case LTag::LLET: return "LLET";
        case LTag::LPRIM: return "LPRIM";
        case LTag::LCONS: return "LCONS";
        case LTag::LCAR: return "LCAR";
        case LTag::LCDR: return "LCDR";
    }
    return "?";
}

bool is_lreduce_tag(LTag t) {
    switch (t) {
        case LTag::LD1:
        case LTag::LD2:
        case LTag::LD3:
        case LTag::LD4:
        case LTag::LLET:
        case LTag::LPRIM:
        case LTag::LCONS:
        case LTag::LCAR:
        case LTag::LCDR: return true;
        default: return false;
    }
}

Bindings flatten(const LContext& binders) {
    Bindings out;
    for (const LFrame& f : binders) {
        const auto* rb = std::get_if<LFrame::RecBinder>(&f.f);
        if (!rb) throw std::logic_error("flatten: non-binder frame in answer");
        out.insert(out.end(), rb->bindings.begin(), rb->bindings.end());
    }
    return out;
}

namespace {

LContext compose(LContext a, const LContext& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

LContext compose(LContext a, LFrame f) {
    a.push_back(std::move(f));
    return a;
}

NameSet name_set(const std::vector<Name>& names) {
    return NameSet(names.begin(), names.end());
}

long long apply_delta(Prim p, long long v) {
    return p == Prim::Add1 ? v + 1 : v - 1;
}

LStepInfo lstuck(const LConfiguration& c, std::string reason) {
    LStepInfo s;
    s.ok = false;
    s.next = c;
    s.stuck_reason = std::move(reason);
    return s;
}

LStepInfo lto(std::vector<Name> names,
              std::variant<LConfiguration::Refocus, LConfiguration::Rebuild,
                           LConfiguration::Need, LConfiguration::Reduce,
                           LConfiguration::Final>
                  mode,
              LTag tag) {
    LStepInfo s;
    s.next = LConfiguration{std::move(names), std::move(mode)};
    s.tag = tag;
    return s;
}

}  // namespace

LConfiguration linject(const TermPtr& term) {
    NameSet fv = free_vars(*term);
    if (!fv.empty())
        throw std::invalid_argument("linject: open term (free variable " +
                                    print_name(*fv.begin()) + ")");
    return LConfiguration{{}, LConfiguration::Refocus{{}, term}};
}

// ------------------------------
// transitions
// ------------------------------

namespace {

LStepInfo lstep_refocus(const LConfiguration& c, const LConfiguration::Refocus& m) {
    const Term& t = *m.term;
    if (const auto* v = std::get_if<Term::Var>(&t.node))
        return lto(c.names, LConfiguration::Need{m.ctx, v->name}, LTag::LF1);
    if (is_value(t))
        return lto(c.names, LConfiguration::Rebuild{m.ctx, m.term}, LTag::LF2);
    if (const auto* a = std::get_if<Term::App>(&t.node))
        return lto(c.names,
                   LConfiguration::Refocus{
                       compose(m.ctx, LFrame{LFrame::Operand{a->arg}}), a->fun},
                   LTag::LF3);
    // (LF.4)  <X | E, letrec D in t>_f -> <X | E, letrec D in t>_d
    if (const auto* lr = std::get_if<Term::Letrec>(&t.node))
        return lto(c.names,
                   LConfiguration::Reduce{
                       m.ctx, LRedex{LRedex::LetrecRedex{lr->bindings, lr->body}}},
                   LTag::LF4);
    if (const auto* p = std::get_if<Term::PrimApp>(&t.node))
        return lto(c.names,
                   LConfiguration::Refocus{
                       compose(m.ctx, LFrame{LFrame::PrimF{p->prim}}), p->arg},
                   LTag::LF5);
    if (const auto* cn = std::get_if<Term::Cons>(&t.node))
        return lto(c.names,
                   LConfiguration::Reduce{
                       m.ctx, LRedex{LRedex::ConsRedex{cn->first, cn->second}}},
                   LTag::LF6);
    if (const auto* cr = std::get_if<Term::Car>(&t.node))
        return lto(c.names,
                   LConfiguration::Refocus{compose(m.ctx, LFrame{LFrame::CarF{}}),
                                           cr->arg},
                   LTag::LF7);
    if (const auto* cd = std::get_if<Term::Cdr>(&t.node))
        return lto(c.names,
                   LConfiguration::Refocus{compose(m.ctx, LFrame{LFrame::CdrF{}}),
                                           cd->arg},
                   LTag::LF8);
    const auto& l = std::get<Term::Let>(t.node);
    return lto(c.names,
               LConfiguration::Reduce{
                   m.ctx, LRedex{LRedex::LetRedex{l.name, l.rhs, l.body}}},
               LTag::LF9);
}

LStepInfo lstep_rebuild(const LConfiguration& c, const LConfiguration::Rebuild& m) {
    size_t cut = m.ctx.size();
    while (cut > 0 && std::holds_alternative<LFrame::RecBinder>(m.ctx[cut - 1].f))
        cut--;
    LAnswer a{LContext(m.ctx.begin() + cut, m.ctx.end()), m.value};
    // (LB.1)
    if (cut == 0)
        return lto(c.names, LConfiguration::Final{std::move(a)}, LTag::LB1);
    LContext outer(m.ctx.begin(), m.ctx.begin() + (cut - 1));
    const LFrame& split = m.ctx[cut - 1];
    // (LB.2)
    if (const auto* op = std::get_if<LFrame::Operand>(&split.f))
        return lto(c.names,
                   LConfiguration::Reduce{
                       std::move(outer),
                       LRedex{LRedex::AnswerApply{std::move(a), op->term}}},
                   LTag::LB2);
    // (LB.3) / (LB.4)
    if (const auto* ev = std::get_if<LFrame::EvalFrame>(&split.f))
        return lto(c.names,
                   LConfiguration::Reduce{
                       std::move(outer),
                       LRedex{LRedex::EvalRedex{ev->var, std::move(a), ev->chain,
                                                ev->rest, ev->bodyCtx}}},
                   ev->chain.empty() ? LTag::LB3 : LTag::LB4);
    if (const auto* p = std::get_if<LFrame::PrimF>(&split.f))
        return lto(c.names,
                   LConfiguration::Reduce{
                       std::move(outer),
                       LRedex{LRedex::PrimRedex{p->prim, std::move(a)}}},
                   LTag::LB5);
    if (std::holds_alternative<LFrame::CarF>(split.f))
        return lto(c.names,
                   LConfiguration::Reduce{std::move(outer),
                                          LRedex{LRedex::CarRedex{std::move(a)}}},
                   LTag::LB6);
    return lto(c.names,
               LConfiguration::Reduce{std::move(outer),
                                      LRedex{LRedex::CdrRedex{std::move(a)}}},
               LTag::LB7);
}

LStepInfo black_hole(const LConfiguration& c, const Name& demanded,
                     std::vector<Name> cycle) {
    LStepInfo s;
    s.ok = false;
    s.next = c;
    s.black_hole = true;
    s.chain = std::move(cycle);
    s.stuck_reason = "black hole: " + print_name(demanded);
    return s;
}

// A definition that is a bare reference to a variable already on the chain
// can only loop; diagnose it at the point the chain frame would be built.
bool closes_cycle(const TermPtr& def, const Name& var, const DepChain& chain) {
    const auto* v = std::get_if<Term::Var>(&def->node);
    return v && (v->name == var || chain.mentions(v->name));
}

LStepInfo lstep_need(const LConfiguration& c, const LConfiguration::Need& m) {
    for (size_t i = m.ctx.size(); i-- > 0;) {
        const LFrame& f = m.ctx[i];
        if (const auto* rb = std::get_if<LFrame::RecBinder>(&f.f)) {
            for (size_t j = 0; j < rb->bindings.size(); j++) {
                if (rb->bindings[j].first != m.var) continue;
                // (LN.1)  <X | E1.[letr (x=t, D*) in []].E2, x>_n
                //         -> <X | E1.[letr x = [], D* in E2], t>_f
                if (closes_cycle(rb->bindings[j].second, m.var, DepChain{}))
                    return black_hole(c, m.var, {m.var});
                Bindings rest = rb->bindings;
                rest.erase(rest.begin() + j);
                LContext e1(m.ctx.begin(), m.ctx.begin() + i);
                LContext e2(m.ctx.begin() + i + 1, m.ctx.end());
                return lto(c.names,
                           LConfiguration::Refocus{
                               compose(std::move(e1),
                                       LFrame{LFrame::EvalFrame{
                                           m.var, {}, std::move(rest), std::move(e2)}}),
                               rb->bindings[j].second},
                           LTag::LN1);
            }
            continue;
        }
        if (const auto* ev = std::get_if<LFrame::EvalFrame>(&f.f)) {
            if (ev->var == m.var || ev->chain.mentions(m.var)) {
                // the demanded variable is already under evaluation: a cycle
                std::vector<Name> cycle{ev->var};
                for (const auto& e : ev->chain.entries) cycle.push_back(e.var);
                return black_hole(c, m.var, std::move(cycle));
            }
            for (size_t j = 0; j < ev->rest.size(); j++) {
                if (ev->rest[j].first != m.var) continue;
                // (LN.2)  extend the dependency chain with <x_n, E_n>
                Bindings rest = ev->rest;
                rest.erase(rest.begin() + j);
                DepChain chain = ev->chain;
                LContext e1(m.ctx.begin(), m.ctx.begin() + i);
                LContext en(m.ctx.begin() + i + 1, m.ctx.end());
                chain.entries.insert(chain.entries.begin(),
                                     DepChain::Entry{ev->var, std::move(en)});
                if (closes_cycle(ev->rest[j].second, m.var, chain)) {
                    std::vector<Name> cycle{m.var};
                    for (const auto& e : chain.entries) cycle.push_back(e.var);
                    return black_hole(c, m.var, std::move(cycle));
                }
                return lto(c.names,
                           LConfiguration::Refocus{
                               compose(std::move(e1),
                                       LFrame{LFrame::EvalFrame{
                                           m.var, std::move(chain), std::move(rest),
                                           ev->bodyCtx}}),
                               ev->rest[j].second},
                           LTag::LN2);
            }
            continue;
        }
    }
    return lstuck(c, "need: no binding for " + print_name(m.var));
}

LStepInfo lstep_reduce(const LConfiguration& c, const LConfiguration::Reduce& m) {
    NameSet xs = name_set(c.names);
    if (const auto* ev = std::get_if<LRedex::EvalRedex>(&m.redex.r)) {
        Bindings merged;
        merged.emplace_back(ev->var, ev->ans.value);
        Bindings inner = flatten(ev->ans.binders);
        merged.insert(merged.end(), inner.begin(), inner.end());
        merged.insert(merged.end(), ev->rest.begin(), ev->rest.end());
        if (ev->chain.empty()) {
            // (LD.1)  <X | E1, letr x = <E2,v>, D* in E3>_d
            //         -> <X | E1.[letr x = v, F(E2), D* in []].E3, v>_b
            LContext ctx = compose(
                m.ctx, LFrame{LFrame::RecBinder{std::move(merged)}});
            ctx = compose(std::move(ctx), ev->bodyCtx);
            return lto(c.names, LConfiguration::Rebuild{std::move(ctx), ev->ans.value},
                       LTag::LD1);
        }
        // (LD.2)  resolve the most recent dependency <x_n, E_n>
        DepChain chain = ev->chain;
        DepChain::Entry top = chain.entries.front();
        chain.entries.erase(chain.entries.begin());
        LContext ctx = compose(
            m.ctx, LFrame{LFrame::EvalFrame{top.var, std::move(chain),
                                            std::move(merged), ev->bodyCtx}});
        ctx = compose(std::move(ctx), top.ctx);
        return lto(c.names, LConfiguration::Rebuild{std::move(ctx), ev->ans.value},
                   LTag::LD2);
    }
    if (const auto* ap = std::get_if<LRedex::AnswerApply>(&m.redex.r)) {
        const auto* l = std::get_if<Term::Lam>(&ap->fun.value->node);
        if (!l)
            return lstuck(c, "application of non-function value " +
                                 print(ap->fun.value));
        // (LD.3)  <X | E1, <E2,\x.t1> t2>_d
        //         -> <X,x' | E1.E2.[letr x' = t2 in []], t1[x'/x]>_f
        Name renamed = fresh(l->param, xs);
        TermPtr body =
            renamed == l->param ? l->body : subst(l->body, l->param, mk_var(renamed));
        std::vector<Name> names = c.names;
        names.push_back(renamed);
        LContext ctx = compose(m.ctx, ap->fun.binders);
        ctx = compose(std::move(ctx),
                      LFrame{LFrame::RecBinder{{{renamed, ap->arg}}}});
        LStepInfo s = lto(std::move(names),
                          LConfiguration::Refocus{std::move(ctx), body}, LTag::LD3);
        s.renamed = renamed != l->param;
        return s;
    }
    if (const auto* lr = std::get_if<LRedex::LetrecRedex>(&m.redex.r)) {
        // (LD.4)  <X | E, letrec D in t>_d -> <X,D' | E.[letr D' in []], t'>_f
        // with every bound name freshened together when any collides with X
        Bindings bs = lr->bindings;
        TermPtr body = lr->body;
        bool collision = false;
        for (const auto& [n, _] : bs)
            if (xs.count(n)) collision = true;
        bool renamed = false;
        if (collision) {
            NameSet avoid = xs;
            for (const auto& [n, _] : bs) avoid.insert(n);
            std::vector<std::pair<Name, Name>> renames;
            for (auto& [n, _] : bs) {
                Name fresh_name = fresh(n, avoid);
                avoid.insert(fresh_name);
                renames.emplace_back(n, fresh_name);
            }
            for (const auto& [old_name, new_name] : renames) {
                if (old_name == new_name) continue;
                renamed = true;
                TermPtr rv = mk_var(new_name);
                for (auto& [n2, rhs2] : bs) rhs2 = subst(rhs2, old_name, rv);
                body = subst(body, old_name, rv);
            }
            for (size_t i = 0; i < bs.size(); i++) bs[i].first = renames[i].second;
        }
        std::vector<Name> names = c.names;
        for (const auto& [n, _] : bs) names.push_back(n);
        LContext ctx = compose(m.ctx, LFrame{LFrame::RecBinder{bs}});
        LStepInfo s = lto(std::move(names),
                          LConfiguration::Refocus{std::move(ctx), body}, LTag::LD4);
        s.renamed = renamed;
        return s;
    }
    if (const auto* lt = std::get_if<LRedex::LetRedex>(&m.redex.r)) {
        // (LLET)  a let binding is a single non-recursive letr frame
        Name renamed = fresh(lt->var, xs);
        TermPtr body =
            renamed == lt->var ? lt->body : subst(lt->body, lt->var, mk_var(renamed));
        std::vector<Name> names = c.names;
        names.push_back(renamed);
        LContext ctx =
            compose(m.ctx, LFrame{LFrame::RecBinder{{{renamed, lt->rhs}}}});
        LStepInfo s = lto(std::move(names),
                          LConfiguration::Refocus{std::move(ctx), body}, LTag::LLET);
        s.renamed = renamed != lt->var;
        return s;
    }
    if (const auto* p = std::get_if<LRedex::PrimRedex>(&m.redex.r)) {
        const auto* n = std::get_if<Term::IntConst>(&p->arg.value->node);
        if (!n)
            return lstuck(c, "delta undefined: " + prim_word(p->prim) +
                                 " applied to " + print(p->arg.value));
        LStepInfo s =
            lto(c.names,
                LConfiguration::Rebuild{compose(m.ctx, p->arg.binders),
                                        mk_int(apply_delta(p->prim, n->value))},
                LTag::LPRIM);
        s.applied_delta = true;
        return s;
    }
    if (const auto* cn = std::get_if<LRedex::ConsRedex>(&m.redex.r)) {
        // (LCONS)  two fresh single-binding letr frames and a pair value
        Name x1 = fresh(Name("x", 1), xs);
        xs.insert(x1);
        Name x2 = fresh(Name("x", 2), xs);
        std::vector<Name> names = c.names;
        names.push_back(x1);
        names.push_back(x2);
        LContext ctx = compose(m.ctx, LFrame{LFrame::RecBinder{{{x1, cn->first}}}});
        ctx = compose(std::move(ctx), LFrame{LFrame::RecBinder{{{x2, cn->second}}}});
        return lto(std::move(names),
                   LConfiguration::Rebuild{std::move(ctx), mk_pair_val(x1, x2)},
                   LTag::LCONS);
    }
    if (const auto* cr = std::get_if<LRedex::CarRedex>(&m.redex.r)) {
        const auto* pv = std::get_if<Term::PairVal>(&cr->arg.value->node);
        if (!pv) return lstuck(c, "car applied to " + print(cr->arg.value));
        return lto(c.names,
                   LConfiguration::Need{compose(m.ctx, cr->arg.binders), pv->first},
                   LTag::LCAR);
    }
    const auto& cd = std::get<LRedex::CdrRedex>(m.redex.r);
    const auto* pv = std::get_if<Term::PairVal>(&cd.arg.value->node);
    if (!pv) return lstuck(c, "cdr applied to " + print(cd.arg.value));
    return lto(c.names,
               LConfiguration::Need{compose(m.ctx, cd.arg.binders), pv->second},
               LTag::LCDR);
}

}  // namespace

LStepInfo lstep(const LConfiguration& c) {
    return std::visit(
        overloaded{
            [&](const LConfiguration::Refocus& m) { return lstep_refocus(c, m); },
            [&](const LConfiguration::Rebuild& m) { return lstep_rebuild(c, m); },
            [&](const LConfiguration::Need& m) { return lstep_need(c, m); },
            [&](const LConfiguration::Reduce& m) { return lstep_reduce(c, m); },
            [&](const LConfiguration::Final&) {
                return lstuck(c, "step on a final configuration");
            },
        },
        c.mode);
}

namespace {

size_t lcontext_depth(const LConfiguration& c) {
    return std::visit(
        overloaded{
            [](const LConfiguration::Refocus& m) { return m.ctx.size(); },
            [](const LConfiguration::Rebuild& m) { return m.ctx.size(); },
            [](const LConfiguration::Need& m) { return m.ctx.size(); },
            [](const LConfiguration::Reduce& m) { return m.ctx.size(); },
            [](const LConfiguration::Final& m) { return m.answer.binders.size(); },
        },
        c.mode);
}

}  // namespace

LMachineResult lrun(const LConfiguration& start, long fuel, const RunOptions& opts) {
    LMachineResult res;
    res.kind = LMachineResult::Kind::OutOfFuel;
    LConfiguration cur = start;
    auto note = [&](const LConfiguration& c, const char* tag) {
        if (opts.trace) res.trace.push_back({tag, lrender(c)});
        if (opts.check_wf) {
            WfReport wf = lcheck_wf(c);
            if (!wf.ok)
                for (const auto& v : wf.violations)
                    res.wf_failures.push_back(
                        "step " + std::to_string(res.stats.steps) + ": " + v);
        }
        res.stats.max_context_depth =
            std::max(res.stats.max_context_depth, lcontext_depth(c));
    };
    if (opts.keep_history) res.history.push_back(cur);
    note(cur, "-");
    while (!cur.is_final()) {
        if (res.stats.steps >= fuel) {
            res.kind = LMachineResult::Kind::OutOfFuel;
            res.last = cur;
            return res;
        }
        LStepInfo s = lstep(cur);
        if (!s.ok) {
            res.kind = s.black_hole ? LMachineResult::Kind::BlackHole
                                    : LMachineResult::Kind::Stuck;
            res.last = cur;
            res.stuck_reason = s.stuck_reason;
            res.chain = s.chain;
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
        note(cur, ltag_name(s.tag).c_str());
    }
    res.kind = LMachineResult::Kind::Final;
    res.last = cur;
    return res;
}

LMachineResult lrun_term(const TermPtr& term, long fuel, const RunOptions& opts) {
    return lrun(linject(term), fuel, opts);
}

// ------------------------------
// unloading
// ------------------------------

namespace {

TermPtr lunload_ctx(const LContext& E, size_t i, TermPtr hole);

// letr x = <hole>, <chain>, D* in E as a letrec term
TermPtr unload_eval_frame(const Name& var, const DepChain& chain,
                          const Bindings& rest, const LContext& bodyCtx,
                          TermPtr rhs_hole) {
    Bindings bs;
    bs.emplace_back(var, rhs_hole);
    Name prev = var;
    for (const auto& e : chain.entries) {
        bs.emplace_back(e.var, lunload_ctx(e.ctx, 0, mk_var(prev)));
        prev = e.var;
    }
    bs.insert(bs.end(), rest.begin(), rest.end());
    return mk_letrec(std::move(bs), lunload_ctx(bodyCtx, 0, mk_var(prev)));
}

TermPtr lunload_ctx(const LContext& E, size_t i, TermPtr hole) {
    if (i == E.size()) return hole;
    const LFrame& f = E[i];
    return std::visit(
        overloaded{
            [&](const LFrame::Operand& o) {
                return mk_app(lunload_ctx(E, i + 1, hole), o.term);
            },
            [&](const LFrame::RecBinder& b) {
                return mk_letrec(b.bindings, lunload_ctx(E, i + 1, hole));
            },
            [&](const LFrame::EvalFrame& ev) {
                return unload_eval_frame(ev.var, ev.chain, ev.rest, ev.bodyCtx,
                                         lunload_ctx(E, i + 1, hole));
            },
            [&](const LFrame::PrimF& p) {
                return mk_prim(p.prim, lunload_ctx(E, i + 1, hole));
            },
            [&](const LFrame::CarF&) { return mk_car(lunload_ctx(E, i + 1, hole)); },
            [&](const LFrame::CdrF&) { return mk_cdr(lunload_ctx(E, i + 1, hole)); },
        },
        f.f);
}

TermPtr lunload_redex(const LRedex& r) {
    return std::visit(
        overloaded{
            [&](const LRedex::AnswerApply& a) {
                return mk_app(lunload_answer(a.fun), a.arg);
            },
            [&](const LRedex::EvalRedex& ev) {
                return unload_eval_frame(ev.var, ev.chain, ev.rest, ev.bodyCtx,
                                         lunload_answer(ev.ans));
            },
            [&](const LRedex::LetrecRedex& lr) {
                return mk_letrec(lr.bindings, lr.body);
            },
            [&](const LRedex::LetRedex& lt) {
                return mk_let(lt.var, lt.rhs, lt.body);
            },
            [&](const LRedex::PrimRedex& p) {
                return mk_prim(p.prim, lunload_answer(p.arg));
            },
            [&](const LRedex::ConsRedex& cn) { return mk_cons(cn.first, cn.second); },
            [&](const LRedex::CarRedex& cr) { return mk_car(lunload_answer(cr.arg)); },
            [&](const LRedex::CdrRedex& cd) { return mk_cdr(lunload_answer(cd.arg)); },
        },
        r.r);
}

}  // namespace

TermPtr lunload_answer(const LAnswer& a) { return lunload_ctx(a.binders, 0, a.value); }

TermPtr lunload(const LConfiguration& c) {
    return std::visit(
        overloaded{
            [&](const LConfiguration::Refocus& m) {
                return lunload_ctx(m.ctx, 0, m.term);
            },
            [&](const LConfiguration::Rebuild& m) {
                return lunload_ctx(m.ctx, 0, m.value);
            },
            [&](const LConfiguration::Need& m) {
                return lunload_ctx(m.ctx, 0, mk_var(m.var));
            },
            [&](const LConfiguration::Reduce& m) {
                return lunload_ctx(m.ctx, 0, lunload_redex(m.redex));
            },
            [&](const LConfiguration::Final& m) { return lunload_answer(m.answer); },
        },
        c.mode);
}

// ------------------------------
// well-formedness (adapted from the core machine)
// ------------------------------

namespace {

void lav_occurrences(const LContext& E, std::vector<Name>& out) {
    for (const LFrame& f : E) {
        std::visit(overloaded{
                       [&](const LFrame::RecBinder& b) {
                           for (const auto& [n, _] : b.bindings) out.push_back(n);
                       },
                       [&](const LFrame::EvalFrame& ev) {
                           out.push_back(ev.var);
                           for (const auto& e : ev.chain.entries) {
                               out.push_back(e.var);
                               lav_occurrences(e.ctx, out);
                           }
                           for (const auto& [n, _] : ev.rest) out.push_back(n);
                           lav_occurrences(ev.bodyCtx, out);
                       },
                       [&](const auto&) {},
                   },
                   f.f);
    }
}

// variables the focus may legitimately reference
void lcv_into(const LContext& E, NameSet& out) {
    for (const LFrame& f : E) {
        std::visit(overloaded{
                       [&](const LFrame::RecBinder& b) {
                           for (const auto& [n, _] : b.bindings) out.insert(n);
                       },
                       [&](const LFrame::EvalFrame& ev) {
                           // letrec scope covers the definition under evaluation
                           out.insert(ev.var);
                           for (const auto& e : ev.chain.entries) out.insert(e.var);
                           for (const auto& [n, _] : ev.rest) out.insert(n);
                       },
                       [&](const auto&) {},
                   },
                   f.f);
    }
}

NameSet lfv_ctx(const LContext& E, size_t i) {
    if (i == E.size()) return {};
    const LFrame& f = E[i];
    return std::visit(
        overloaded{
            [&](const LFrame::Operand& o) {
                NameSet rest = lfv_ctx(E, i + 1);
                NameSet tf = free_vars(*o.term);
                rest.insert(tf.begin(), tf.end());
                return rest;
            },
            [&](const LFrame::RecBinder& b) {
                NameSet inner = lfv_ctx(E, i + 1);
                for (const auto& [_, rhs] : b.bindings) {
                    NameSet rf = free_vars(*rhs);
                    inner.insert(rf.begin(), rf.end());
                }
                for (const auto& [n, _] : b.bindings) inner.erase(n);
                return inner;
            },
            [&](const LFrame::EvalFrame& ev) {
                NameSet inner = lfv_ctx(E, i + 1);  // the definition in the hole
                for (const auto& e : ev.chain.entries) {
                    NameSet cf = lfv_ctx(e.ctx, 0);
                    inner.insert(cf.begin(), cf.end());
                }
                for (const auto& [_, rhs] : ev.rest) {
                    NameSet rf = free_vars(*rhs);
                    inner.insert(rf.begin(), rf.end());
                }
                NameSet bf = lfv_ctx(ev.bodyCtx, 0);
                inner.insert(bf.begin(), bf.end());
                inner.erase(ev.var);
                for (const auto& e : ev.chain.entries) inner.erase(e.var);
                for (const auto& [n, _] : ev.rest) inner.erase(n);
                return inner;
            },
            [&](const auto&) { return lfv_ctx(E, i + 1); },
        },
        f.f);
}

struct LWfView {
    LContext ctx;
    NameSet focus_fv;
};

LWfView lwf_view(const LConfiguration& c) {
    return std::visit(
        overloaded{
            [&](const LConfiguration::Refocus& m) {
                return LWfView{m.ctx, free_vars(*m.term)};
            },
            [&](const LConfiguration::Rebuild& m) {
                return LWfView{m.ctx, free_vars(*m.value)};
            },
            [&](const LConfiguration::Need& m) {
                return LWfView{m.ctx, NameSet{m.var}};
            },
            [&](const LConfiguration::Final& m) {
                return LWfView{m.answer.binders, free_vars(*m.answer.value)};
            },
            [&](const LConfiguration::Reduce& m) {
                return std::visit(
                    overloaded{
                        [&](const LRedex::AnswerApply& a) {
                            LContext ctx =
                                compose(m.ctx, LFrame{LFrame::Operand{a.arg}});
                            ctx = compose(std::move(ctx), a.fun.binders);
                            return LWfView{std::move(ctx), free_vars(*a.fun.value)};
                        },
                        [&](const LRedex::EvalRedex& ev) {
                            LContext ctx = compose(
                                m.ctx, LFrame{LFrame::EvalFrame{ev.var, ev.chain,
                                                                ev.rest, ev.bodyCtx}});
                            ctx = compose(std::move(ctx), ev.ans.binders);
                            return LWfView{std::move(ctx), free_vars(*ev.ans.value)};
                        },
                        [&](const LRedex::LetrecRedex& lr) {
                            return LWfView{
                                m.ctx, free_vars(*mk_letrec(lr.bindings, lr.body))};
                        },
                        [&](const LRedex::LetRedex& lt) {
                            return LWfView{
                                m.ctx, free_vars(*mk_let(lt.var, lt.rhs, lt.body))};
                        },
                        [&](const LRedex::PrimRedex& p) {
                            LContext ctx =
                                compose(m.ctx, LFrame{LFrame::PrimF{p.prim}});
                            ctx = compose(std::move(ctx), p.arg.binders);
                            return LWfView{std::move(ctx), free_vars(*p.arg.value)};
                        },
                        [&](const LRedex::ConsRedex& cn) {
                            NameSet fv = free_vars(*cn.first);
                            NameSet sf = free_vars(*cn.second);
                            fv.insert(sf.begin(), sf.end());
                            return LWfView{m.ctx, std::move(fv)};
                        },
                        [&](const LRedex::CarRedex& cr) {
                            LContext ctx = compose(m.ctx, LFrame{LFrame::CarF{}});
                            ctx = compose(std::move(ctx), cr.arg.binders);
                            return LWfView{std::move(ctx), free_vars(*cr.arg.value)};
                        },
                        [&](const LRedex::CdrRedex& cd) {
                            LContext ctx = compose(m.ctx, LFrame{LFrame::CdrF{}});
                            ctx = compose(std::move(ctx), cd.arg.binders);
                            return LWfView{std::move(ctx), free_vars(*cd.arg.value)};
                        },
                    },
                    m.redex.r);
            },
        },
        c.mode);
}

}  // namespace

WfReport lcheck_wf(const LConfiguration& c) {
    WfReport rep;
    auto violate = [&](std::string msg) {
        rep.ok = false;
        rep.violations.push_back(std::move(msg));
    };

    NameSet xs = name_set(c.names);
    if (xs.size() != c.names.size()) violate("duplicate name in X");

    LWfView view = lwf_view(c);

    NameSet ctx_free = lfv_ctx(view.ctx, 0);
    for (const Name& n : ctx_free) violate("free context variable " + print_name(n));

    std::vector<Name> occ;
    lav_occurrences(view.ctx, occ);
    NameSet avs(occ.begin(), occ.end());
    if (avs != xs) violate("AV(E) differs from the name list X");

    std::sort(occ.begin(), occ.end());
    for (size_t i = 0; i + 1 < occ.size(); i++)
        if (occ[i] == occ[i + 1]) {
            violate("duplicate active variable " + print_name(occ[i]));
            while (i + 1 < occ.size() && occ[i] == occ[i + 1]) i++;
        }

    NameSet cvs;
    lcv_into(view.ctx, cvs);
    for (const Name& n : view.focus_fv)
        if (!cvs.count(n))
            violate("focus variable " + print_name(n) + " is not captured");

    return rep;
}

// ------------------------------
// rendering
// ------------------------------

namespace {

std::string render_bindings(const Bindings& bs) {
    std::string out;
    for (size_t i = 0; i < bs.size(); i++) {
        if (i) out += ", ";
        out += print_name(bs[i].first) + " = " + print(bs[i].second);
    }
    return out;
}

std::string render_chain(const DepChain& chain) {
    std::string out;
    for (size_t i = 0; i < chain.entries.size(); i++) {
        if (i) out += "::";
        out += "<" + print_name(chain.entries[i].var) + ":" +
               lrender_context(chain.entries[i].ctx) + ">";
    }
    return out;
}

std::string render_eval_frame(const Name& var, const DepChain& chain,
                              const Bindings& rest, const LContext& bodyCtx,
                              const std::string& hole) {
    std::string out = "letr " + print_name(var) + " = " + hole;
    if (!chain.empty()) out += ", " + render_chain(chain);
    if (!rest.empty()) out += ", " + render_bindings(rest);
    out += " in " + lrender_context(bodyCtx);
    return out;
}

std::string lrender_frame(const LFrame& f) {
    return std::visit(
        overloaded{
            [&](const LFrame::Operand& o) { return "[] " + print(o.term); },
            [&](const LFrame::RecBinder& b) {
                return "letr " + render_bindings(b.bindings) + " in []";
            },
            [&](const LFrame::EvalFrame& ev) {
                return render_eval_frame(ev.var, ev.chain, ev.rest, ev.bodyCtx, "[]");
            },
            [&](const LFrame::PrimF& p) { return prim_word(p.prim) + " []"; },
            [&](const LFrame::CarF&) { return std::string("car []"); },
            [&](const LFrame::CdrF&) { return std::string("cdr []"); },
        },
        f.f);
}

std::string lrender_answer(const LAnswer& a) {
    return "<" + lrender_context(a.binders) + ", " + print(a.value) + ">";
}

std::string lrender_redex(const LRedex& r) {
    return std::visit(
        overloaded{
            [&](const LRedex::AnswerApply& a) {
                return lrender_answer(a.fun) + " " + print(a.arg);
            },
            [&](const LRedex::EvalRedex& ev) {
                return render_eval_frame(ev.var, ev.chain, ev.rest, ev.bodyCtx,
                                         lrender_answer(ev.ans));
            },
            [&](const LRedex::LetrecRedex& lr) {
                return print(mk_letrec(lr.bindings, lr.body));
            },
            [&](const LRedex::LetRedex& lt) {
                return print(mk_let(lt.var, lt.rhs, lt.body));
            },
            [&](const LRedex::PrimRedex& p) {
                return prim_word(p.prim) + " " + lrender_answer(p.arg);
            },
            [&](const LRedex::ConsRedex& cn) {
                return "cons " + print(cn.first) + " " + print(cn.second);
            },
            [&](const LRedex::CarRedex& cr) {
                return "car " + lrender_answer(cr.arg);
            },
            [&](const LRedex::CdrRedex& cd) {
                return "cdr " + lrender_answer(cd.arg);
            },
        },
        r.r);
}

std::string lrender_names(const std::vector<Name>& names) {
    std::string out = "{";
    for (size_t i = 0; i < names.size(); i++) {
        if (i) out += ",";
        out += print_name(names[i]);
    }
    return out + "}";
}

}  // namespace

std::string lrender_context(const LContext& E) {
    if (E.empty()) return "[]";
    std::string out;
    for (const LFrame& f : E) out += "[" + lrender_frame(f) + "]";
    return out;
}

std::string lrender(const LConfiguration& c) {
    std::string head = "<" + lrender_names(c.names) + " | ";
    return std::visit(
        overloaded{
            [&](const LConfiguration::Refocus& m) {
                return head + lrender_context(m.ctx) + ", " + print(m.term) + ">_f";
            },
            [&](const LConfiguration::Rebuild& m) {
                return head + lrender_context(m.ctx) + ", " + print(m.value) + ">_b";
            },
            [&](const LConfiguration::Need& m) {
                return head + lrender_context(m.ctx) + ", " + print_name(m.var) +
                       ">_n";
            },
            [&](const LConfiguration::Reduce& m) {
                return head + lrender_context(m.ctx) + ", " +
                       lrender_redex(m.redex) + ">_d";
            },
            [&](const LConfiguration::Final& m) {
                return head + lrender_answer(m.answer) + ">";
            },
        },
        c.mode);
}

}  // namespace needle
