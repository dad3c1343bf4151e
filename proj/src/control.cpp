#include "needle/control.hpp"

#include <sstream>

namespace needle {

std::string cprim_word(CPrimOp op) {
    switch (op) {
        case CPrimOp::Add: return "+";
        case CPrimOp::Add1: return "add1";
        case CPrimOp::Sub1: return "sub1";
        case CPrimOp::Fst: return "fst";
        case CPrimOp::Snd: return "snd";
    }
    return "?";
}

CTermPtr c_var(Name n) { return std::make_shared<CTerm>(CTerm::CVar{std::move(n)}); }
CTermPtr c_lam(Name p, CTermPtr b, std::string label) {
    return std::make_shared<CTerm>(
        CTerm::CLam{std::move(p), std::move(b), std::move(label)});
}
CTermPtr c_app(CTermPtr f, CTermPtr a) {
    return std::make_shared<CTerm>(CTerm::CApp{std::move(f), std::move(a)});
}
CTermPtr c_new_prompt() { return std::make_shared<CTerm>(CTerm::CNewPrompt{}); }
CTermPtr c_push_prompt(CTermPtr p, CTermPtr b) {
    return std::make_shared<CTerm>(CTerm::CPushPrompt{std::move(p), std::move(b)});
}
CTermPtr c_with_subcont(CTermPtr p, CTermPtr f) {
    return std::make_shared<CTerm>(CTerm::CWithSubCont{std::move(p), std::move(f)});
}
CTermPtr c_push_subcont(CTermPtr k, CTermPtr b) {
    return std::make_shared<CTerm>(CTerm::CPushSubCont{std::move(k), std::move(b)});
}
CTermPtr c_int(long long v) { return std::make_shared<CTerm>(CTerm::CInt{v}); }
CTermPtr c_bool(bool v) { return std::make_shared<CTerm>(CTerm::CBool{v}); }
CTermPtr c_unit() { return std::make_shared<CTerm>(CTerm::CUnit{}); }
CTermPtr c_prim(CPrimOp op, std::vector<CTermPtr> args) {
    return std::make_shared<CTerm>(CTerm::CPrim{op, std::move(args)});
}
CTermPtr c_if(CTermPtr c, CTermPtr t, CTermPtr e) {
    return std::make_shared<CTerm>(
        CTerm::CIf{std::move(c), std::move(t), std::move(e)});
}
CTermPtr c_pair(CTermPtr a, CTermPtr b) {
    return std::make_shared<CTerm>(CTerm::CPair{std::move(a), std::move(b)});
}
CTermPtr c_let(Name n, CTermPtr rhs, CTermPtr body) {
    return std::make_shared<CTerm>(
        CTerm::CLet{std::move(n), std::move(rhs), std::move(body)});
}
CTermPtr c_let_pair(Name a, Name b, CTermPtr rhs, CTermPtr body) {
    return std::make_shared<CTerm>(
        CTerm::CLetPair{std::move(a), std::move(b), std::move(rhs), std::move(body)});
}

Env Env::extend(const Name& n, CValuePtr v) const {
    return Env{std::make_shared<EnvNode>(EnvNode{n, std::move(v), head})};
}

const CValuePtr* Env::lookup(const Name& n) const {
    for (const EnvNode* e = head.get(); e; e = e->next.get())
        if (e->name == n) return &e->value;
    return nullptr;
}

namespace {

CValuePtr mkv(CValue v) { return std::make_shared<CValue>(std::move(v)); }

struct StepEffects {
    std::string entered_thunk;
    bool allocated_prompt = false;
};

enum class StepKind { Continue, Done, Error };

// One transition, in place. The focused term/value is pinned through a
// local shared_ptr so the state can be overwritten freely.
StepKind do_step(CState& s, StepEffects& fx, std::string& error) {
    if (!s.returning) {
        CTermPtr t = s.focus;
        return std::visit(
            overloaded{
                [&](const CTerm::CVar& v) -> StepKind {
                    const CValuePtr* found = s.env.lookup(v.name);
                    if (!found) {
                        error = "unbound variable " + print_name(v.name);
                        return StepKind::Error;
                    }
                    s.returning = true;
                    s.value = *found;
                    s.focus = nullptr;
                    return StepKind::Continue;
                },
                [&](const CTerm::CLam& l) -> StepKind {
                    s.returning = true;
                    s.value = mkv(CValue{
                        CValue::Closure{l.param, l.body, s.env, l.thunk_label}});
                    s.focus = nullptr;
                    return StepKind::Continue;
                },
                [&](const CTerm::CInt& n) -> StepKind {
                    s.returning = true;
                    s.value = mkv(CValue{CValue::IntV{n.value}});
                    s.focus = nullptr;
                    return StepKind::Continue;
                },
                [&](const CTerm::CBool& b) -> StepKind {
                    s.returning = true;
                    s.value = mkv(CValue{CValue::BoolV{b.value}});
                    s.focus = nullptr;
                    return StepKind::Continue;
                },
                [&](const CTerm::CUnit&) -> StepKind {
                    s.returning = true;
                    s.value = mkv(CValue{CValue::UnitV{}});
                    s.focus = nullptr;
                    return StepKind::Continue;
                },
                [&](const CTerm::CNewPrompt&) -> StepKind {
                    // E[newPrompt], M, p -> E[p], M, p+1
                    s.returning = true;
                    s.value = mkv(CValue{CValue::PromptV{s.counter}});
                    s.focus = nullptr;
                    s.counter++;
                    fx.allocated_prompt = true;
                    return StepKind::Continue;
                },
                [&](const CTerm::CApp& a) -> StepKind {
                    s.kont.push_back(CFrame{CFrame::AppFun{a.arg, s.env}});
                    s.focus = a.fun;
                    return StepKind::Continue;
                },
                [&](const CTerm::CPushPrompt& p) -> StepKind {
                    s.kont.push_back(CFrame{CFrame::PushPromptF{p.body, s.env}});
                    s.focus = p.prompt;
                    return StepKind::Continue;
                },
                [&](const CTerm::CWithSubCont& w) -> StepKind {
                    s.kont.push_back(CFrame{CFrame::WithSC1{w.fun, s.env}});
                    s.focus = w.prompt;
                    return StepKind::Continue;
                },
                [&](const CTerm::CPushSubCont& p) -> StepKind {
                    s.kont.push_back(CFrame{CFrame::PushSCF{p.body, s.env}});
                    s.focus = p.subcont;
                    return StepKind::Continue;
                },
                [&](const CTerm::CPrim& p) -> StepKind {
                    std::vector<CTermPtr> pending(p.args.begin() + 1, p.args.end());
                    s.kont.push_back(
                        CFrame{CFrame::PrimFc{p.op, std::move(pending), s.env, {}}});
                    s.focus = p.args[0];
                    return StepKind::Continue;
                },
                [&](const CTerm::CIf& i) -> StepKind {
                    s.kont.push_back(
                        CFrame{CFrame::IfF{i.then_branch, i.else_branch, s.env}});
                    s.focus = i.cond;
                    return StepKind::Continue;
                },
                [&](const CTerm::CPair& p) -> StepKind {
                    s.kont.push_back(CFrame{CFrame::PairF1{p.second, s.env}});
                    s.focus = p.first;
                    return StepKind::Continue;
                },
                [&](const CTerm::CLet& l) -> StepKind {
                    s.kont.push_back(CFrame{CFrame::LetF{l.name, l.body, s.env}});
                    s.focus = l.rhs;
                    return StepKind::Continue;
                },
                [&](const CTerm::CLetPair& l) -> StepKind {
                    s.kont.push_back(
                        CFrame{CFrame::LetPairF{l.first, l.second, l.body, s.env}});
                    s.focus = l.rhs;
                    return StepKind::Continue;
                },
            },
            t->node);
    }

    CValuePtr v = s.value;
    if (!s.kont.empty()) {
        CFrame frame = std::move(s.kont.back());
        s.kont.pop_back();
        return std::visit(
            overloaded{
                [&](const CFrame::AppFun& f) -> StepKind {
                    s.kont.push_back(CFrame{CFrame::AppArg{v}});
                    s.returning = false;
                    s.focus = f.arg;
                    s.env = f.env;
                    return StepKind::Continue;
                },
                [&](const CFrame::AppArg& f) -> StepKind {
                    const auto* cl = std::get_if<CValue::Closure>(&f.fun->v);
                    if (!cl) {
                        error = "application of a non-closure value: " +
                                cvalue_show(*f.fun);
                        return StepKind::Error;
                    }
                    s.returning = false;
                    s.focus = cl->body;
                    s.env = cl->env.extend(cl->param, v);
                    fx.entered_thunk = cl->thunk_label;
                    return StepKind::Continue;
                },
                [&](const CFrame::PushPromptF& f) -> StepKind {
                    // E[pushPrompt p t], M -> [][t], p : E : M
                    const auto* p = std::get_if<CValue::PromptV>(&v->v);
                    if (!p) {
                        error = "pushPrompt: not a prompt";
                        return StepKind::Error;
                    }
                    s.meta.push_front(MetaItem{std::move(s.kont)});
                    s.meta.push_front(MetaItem{p->prompt});
                    s.kont = Kont{};
                    s.returning = false;
                    s.focus = f.body;
                    s.env = f.env;
                    return StepKind::Continue;
                },
                [&](const CFrame::WithSC1& f) -> StepKind {
                    if (!std::holds_alternative<CValue::PromptV>(v->v)) {
                        error = "withSubCont: not a prompt";
                        return StepKind::Error;
                    }
                    s.kont.push_back(CFrame{CFrame::WithSC2{v}});
                    s.returning = false;
                    s.focus = f.fun;
                    s.env = f.env;
                    return StepKind::Continue;
                },
                [&](const CFrame::WithSC2& f) -> StepKind {
                    // E[withSubCont p f], M1 ++ (p : M2) -> [][f <E:M1>], M2
                    const auto& p = std::get<CValue::PromptV>(f.prompt->v);
                    const auto* cl = std::get_if<CValue::Closure>(&v->v);
                    if (!cl) {
                        error = "withSubCont: not a function";
                        return StepKind::Error;
                    }
                    size_t split = s.meta.size();
                    for (size_t i = 0; i < s.meta.size(); i++) {
                        if (s.meta[i].is_prompt(p.prompt)) {
                            split = i;
                            break;
                        }
                    }
                    if (split == s.meta.size()) {
                        error = "unbound prompt p" + std::to_string(p.prompt);
                        return StepKind::Error;
                    }
                    Meta captured;
                    captured.push_back(MetaItem{std::move(s.kont)});
                    for (size_t i = 0; i < split; i++)
                        captured.push_back(std::move(s.meta[i]));
                    s.meta.erase(s.meta.begin(), s.meta.begin() + split + 1);
                    CValuePtr sub =
                        mkv(CValue{CValue::SubContV{std::move(captured)}});
                    s.kont = Kont{};
                    s.returning = false;
                    s.focus = cl->body;
                    s.env = cl->env.extend(cl->param, sub);
                    fx.entered_thunk = cl->thunk_label;
                    return StepKind::Continue;
                },
                [&](const CFrame::PushSCF& f) -> StepKind {
                    // E[pushSubCont k t], M2 -> [][t], M1 ++ (E : M2)
                    const auto* sub = std::get_if<CValue::SubContV>(&v->v);
                    if (!sub) {
                        error = "pushSubCont: not a subcontinuation";
                        return StepKind::Error;
                    }
                    s.meta.push_front(MetaItem{std::move(s.kont)});
                    for (auto it = sub->segment.rbegin(); it != sub->segment.rend();
                         ++it)
                        s.meta.push_front(*it);
                    s.kont = Kont{};
                    s.returning = false;
                    s.focus = f.body;
                    s.env = f.env;
                    return StepKind::Continue;
                },
                [&](const CFrame::PrimFc& f) -> StepKind {
                    std::vector<CValuePtr> done = f.done;
                    done.push_back(v);
                    if (f.pending.empty()) {
                        bool ok = true;
                        auto as_int = [&](const CValuePtr& x) {
                            const auto* n = std::get_if<CValue::IntV>(&x->v);
                            if (!n) {
                                ok = false;
                                return 0LL;
                            }
                            return n->value;
                        };
                        CValuePtr result;
                        switch (f.op) {
                            case CPrimOp::Add: {
                                long long a = as_int(done[0]);
                                long long b = as_int(done[1]);
                                if (ok)
                                    result = mkv(CValue{CValue::IntV{a + b}});
                                break;
                            }
                            case CPrimOp::Add1:
                            case CPrimOp::Sub1: {
                                long long a = as_int(done[0]);
                                if (ok)
                                    result = mkv(CValue{CValue::IntV{
                                        f.op == CPrimOp::Add1 ? a + 1 : a - 1}});
                                break;
                            }
                            case CPrimOp::Fst:
                            case CPrimOp::Snd: {
                                const auto* pr =
                                    std::get_if<CValue::PairV>(&done[0]->v);
                                if (!pr)
                                    ok = false;
                                else
                                    result = f.op == CPrimOp::Fst ? pr->first
                                                                  : pr->second;
                                break;
                            }
                        }
                        if (!ok) {
                            error = "type error: " + cprim_word(f.op) +
                                    " applied to an unsuitable value";
                            return StepKind::Error;
                        }
                        s.value = std::move(result);
                        return StepKind::Continue;
                    }
                    std::vector<CTermPtr> pending(f.pending.begin() + 1,
                                                  f.pending.end());
                    CTermPtr next = f.pending[0];
                    s.kont.push_back(CFrame{CFrame::PrimFc{
                        f.op, std::move(pending), f.env, std::move(done)}});
                    s.returning = false;
                    s.focus = next;
                    s.env = f.env;
                    return StepKind::Continue;
                },
                [&](const CFrame::IfF& f) -> StepKind {
                    const auto* b = std::get_if<CValue::BoolV>(&v->v);
                    if (!b) {
                        error = "type error: if condition is not a boolean";
                        return StepKind::Error;
                    }
                    s.returning = false;
                    s.focus = b->value ? f.then_branch : f.else_branch;
                    s.env = f.env;
                    return StepKind::Continue;
                },
                [&](const CFrame::PairF1& f) -> StepKind {
                    s.kont.push_back(CFrame{CFrame::PairF2{v}});
                    s.returning = false;
                    s.focus = f.second;
                    s.env = f.env;
                    return StepKind::Continue;
                },
                [&](const CFrame::PairF2& f) -> StepKind {
                    s.value = mkv(CValue{CValue::PairV{f.first, v}});
                    return StepKind::Continue;
                },
                [&](const CFrame::LetF& f) -> StepKind {
                    s.returning = false;
                    s.focus = f.body;
                    s.env = f.env.extend(f.name, v);
                    return StepKind::Continue;
                },
                [&](const CFrame::LetPairF& f) -> StepKind {
                    const auto* p = std::get_if<CValue::PairV>(&v->v);
                    if (!p) {
                        error = "let-pair: not a pair";
                        return StepKind::Error;
                    }
                    s.returning = false;
                    s.focus = f.body;
                    s.env = f.env.extend(f.first, p->first)
                                .extend(f.second, p->second);
                    return StepKind::Continue;
                },
            },
            frame.f);
    }

    // [][v], E : M -> E[v], M    and    [][v], p : M -> [][v], M
    if (!s.meta.empty()) {
        MetaItem item = std::move(s.meta.front());
        s.meta.pop_front();
        if (auto* seg = std::get_if<Kont>(&item.item)) s.kont = std::move(*seg);
        return StepKind::Continue;
    }
    return StepKind::Done;
}

}  // namespace

CState cinject(const CTermPtr& t) {
    CState s;
    s.returning = false;
    s.focus = t;
    s.counter = 0;
    return s;
}

CStepResult cstep(const CState& s) {
    CStepResult r;
    CState next = s;
    StepEffects fx;
    std::string error;
    StepKind k = do_step(next, fx, error);
    switch (k) {
        case StepKind::Continue:
            r.kind = CStepResult::Kind::Continue;
            r.next = std::move(next);
            break;
        case StepKind::Done:
            r.kind = CStepResult::Kind::Done;
            r.value = s.value;
            break;
        case StepKind::Error:
            r.kind = CStepResult::Kind::Error;
            r.error = std::move(error);
            break;
    }
    r.entered_thunk = fx.entered_thunk;
    r.allocated_prompt = fx.allocated_prompt;
    return r;
}

COutcome crun(const CTermPtr& t, long fuel, const CRunOptions& opts) {
    COutcome out;
    CState cur = cinject(t);
    if (opts.trace) out.trace.push_back(crender(cur));
    for (;;) {
        if (out.stats.steps >= fuel) {
            out.kind = COutcome::Kind::OutOfFuel;
            return out;
        }
        StepEffects fx;
        std::string error;
        StepKind k = do_step(cur, fx, error);
        if (k == StepKind::Error) {
            out.kind = COutcome::Kind::Error;
            out.error = std::move(error);
            return out;
        }
        if (k == StepKind::Done) {
            out.kind = COutcome::Kind::Value;
            out.value = cur.value;
            return out;
        }
        out.stats.steps++;
        if (!fx.entered_thunk.empty()) out.stats.thunk_entries[fx.entered_thunk]++;
        if (fx.allocated_prompt) out.stats.prompts++;
        if (opts.trace) out.trace.push_back(crender(cur));
    }
}

// ------------------------------
// rendering
// ------------------------------

std::string cvalue_show(const CValue& v) {
    return std::visit(
        overloaded{
            [&](const CValue::Closure& c) {
                return c.thunk_label.empty() ? std::string("<closure>")
                                             : "<closure:" + c.thunk_label + ">";
            },
            [&](const CValue::PromptV& p) { return "p" + std::to_string(p.prompt); },
            [&](const CValue::SubContV& k) {
                return "<subcont:" + std::to_string(k.segment.size()) + ">";
            },
            [&](const CValue::IntV& n) { return std::to_string(n.value); },
            [&](const CValue::BoolV& b) {
                return std::string(b.value ? "true" : "false");
            },
            [&](const CValue::UnitV&) { return std::string("()"); },
            [&](const CValue::PairV& p) {
                return "(" + cvalue_show(*p.first) + ", " + cvalue_show(*p.second) +
                       ")";
            },
        },
        v.v);
}

namespace {

std::string cterm_head(const CTerm& t) {
    return std::visit(
        overloaded{
            [&](const CTerm::CVar& v) { return print_name(v.name); },
            [&](const CTerm::CLam&) { return std::string("\\"); },
            [&](const CTerm::CApp&) { return std::string("app"); },
            [&](const CTerm::CNewPrompt&) { return std::string("newPrompt"); },
            [&](const CTerm::CPushPrompt&) { return std::string("pushPrompt"); },
            [&](const CTerm::CWithSubCont&) { return std::string("withSubCont"); },
            [&](const CTerm::CPushSubCont&) { return std::string("pushSubCont"); },
            [&](const CTerm::CInt& n) { return std::to_string(n.value); },
            [&](const CTerm::CBool& b) {
                return std::string(b.value ? "true" : "false");
            },
            [&](const CTerm::CUnit&) { return std::string("()"); },
            [&](const CTerm::CPrim& p) { return cprim_word(p.op); },
            [&](const CTerm::CIf&) { return std::string("if"); },
            [&](const CTerm::CPair&) { return std::string("pair"); },
            [&](const CTerm::CLet&) { return std::string("let"); },
            [&](const CTerm::CLetPair&) { return std::string("letpair"); },
        },
        t.node);
}

}  // namespace

std::string crender(const CState& s) {
    std::ostringstream out;
    out << "<" << (s.returning ? cvalue_show(*s.value) : cterm_head(*s.focus));
    out << " || k" << s.kont.size() << " || [";
    for (size_t i = 0; i < s.meta.size(); i++) {
        if (i) out << " . ";
        if (const auto* seg = std::get_if<Kont>(&s.meta[i].item))
            out << "k" << seg->size();
        else
            out << "p" << std::get<uint64_t>(s.meta[i].item);
    }
    out << "] || " << s.counter << ">";
    return out.str();
}

}  // namespace needle
