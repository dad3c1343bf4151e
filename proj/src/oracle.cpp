#include "needle/oracle.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

namespace needle {

namespace {

const Name kHole{"%hole", 0};

TermPtr marker() { return mk_var(kHole); }

// Answer recognition memoized on the shared nodes; decompose asks about the
// same binder spines at every step.
bool is_answer_cached(const TermPtr& t) {
    struct Entry {
        TermPtr keep;
        bool answer;
    };
    thread_local std::unordered_map<const Term*, Entry> cache;
    auto it = cache.find(t.get());
    if (it != cache.end()) return it->second.answer;
    if (cache.size() > 1u << 22) cache.clear();
    bool answer;
    if (is_value(*t)) {
        answer = true;
    } else if (const auto* a = std::get_if<Term::App>(&t->node)) {
        const auto* l = std::get_if<Term::Lam>(&a->fun->node);
        answer = l && is_answer_cached(l->body);
    } else {
        answer = false;
    }
    cache.emplace(t.get(), Entry{t, answer});
    return answer;
}

}  // namespace

// ------------------------------
// answers
// ------------------------------

bool is_answer(const Term& t) {
    if (is_value(t)) return true;
    if (const auto* a = std::get_if<Term::App>(&t.node)) {
        if (const auto* l = std::get_if<Term::Lam>(&a->fun->node))
            return is_answer(*l->body);
    }
    return false;
}

bool is_letrec_answer(const Term& t) {
    if (is_value(t)) return true;
    if (const auto* l = std::get_if<Term::Letrec>(&t.node))
        return is_letrec_answer(*l->body);
    return false;
}

// ------------------------------
// plugging paths
// ------------------------------

TermPtr plug(const CtxPath& path, TermPtr focus) {
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        focus = std::visit(
            overloaded{
                [&](const PathStep::AppLeft& s) { return mk_app(focus, s.operand); },
                [&](const PathStep::OperandOf& s) {
                    return mk_app(mk_lam(s.binder, plug(s.bodyCtx, mk_var(s.binder))),
                                  focus);
                },
                [&](const PathStep::UnderBinder& s) {
                    return mk_app(mk_lam(s.binder, focus), s.operand);
                },
                [&](const PathStep::PrimArg& s) { return mk_prim(s.prim, focus); },
                [&](const PathStep::CarArg&) { return mk_car(focus); },
                [&](const PathStep::CdrArg&) { return mk_cdr(focus); },
                [&](const PathStep::InLetrecBody& s) {
                    return mk_letrec(s.bindings, focus);
                },
                [&](const PathStep::InLetrecBinding& s) {
                    Bindings bs = s.before;
                    bs.emplace_back(s.var, focus);
                    bs.insert(bs.end(), s.after.begin(), s.after.end());
                    return mk_letrec(std::move(bs), s.body);
                },
                [&](const PathStep::InDepChain& s) {
                    Bindings bs = s.before;
                    bs.emplace_back(s.var, focus);
                    bs.insert(bs.end(), s.after.begin(), s.after.end());
                    return mk_letrec(std::move(bs), s.body);
                },
            },
            it->step);
    }
    return focus;
}

namespace {

// Replace the subterm addressed by `path` inside `t`.
TermPtr replace_at(const TermPtr& t, const CtxPath& path, size_t i, TermPtr repl) {
    if (i == path.size()) return repl;
    return std::visit(
        overloaded{
            [&](const PathStep::AppLeft&) -> TermPtr {
                const auto& a = std::get<Term::App>(t->node);
                return mk_app(replace_at(a.fun, path, i + 1, repl), a.arg);
            },
            [&](const PathStep::OperandOf&) -> TermPtr {
                const auto& a = std::get<Term::App>(t->node);
                return mk_app(a.fun, replace_at(a.arg, path, i + 1, repl));
            },
            [&](const PathStep::UnderBinder&) -> TermPtr {
                const auto& a = std::get<Term::App>(t->node);
                const auto& l = std::get<Term::Lam>(a.fun->node);
                return mk_app(mk_lam(l.param, replace_at(l.body, path, i + 1, repl)),
                              a.arg);
            },
            [&](const PathStep::PrimArg&) -> TermPtr {
                const auto& p = std::get<Term::PrimApp>(t->node);
                return mk_prim(p.prim, replace_at(p.arg, path, i + 1, repl));
            },
            [&](const PathStep::CarArg&) -> TermPtr {
                const auto& c = std::get<Term::Car>(t->node);
                return mk_car(replace_at(c.arg, path, i + 1, repl));
            },
            [&](const PathStep::CdrArg&) -> TermPtr {
                const auto& c = std::get<Term::Cdr>(t->node);
                return mk_cdr(replace_at(c.arg, path, i + 1, repl));
            },
            [&](const auto&) -> TermPtr {
                throw std::logic_error("replace_at: letrec step in core path");
            },
        },
        path[i].step);
}

// ------------------------------
// evidence search: body == E[x] for a free occurrence of x in
// evaluation position. Depth-first, left to right, with backtracking.
// ------------------------------

bool find_evidence(const Term& t, const Name& x, CtxPath& path);

bool find_evidence_app(const Term::App& a, const Name& x, CtxPath& path) {
    // E t
    path.push_back(PathStep{PathStep::AppLeft{a.arg}});
    if (find_evidence(*a.fun, x, path)) return true;
    path.pop_back();
    if (const auto* l = std::get_if<Term::Lam>(&a.fun->node)) {
        // (\y.E1[y]) E2
        CtxPath ev;
        if (find_evidence(*l->body, l->param, ev)) {
            path.push_back(PathStep{PathStep::OperandOf{l->param, std::move(ev)}});
            if (find_evidence(*a.arg, x, path)) return true;
            path.pop_back();
        }
        // (\y.E) t
        if (l->param != x) {
            path.push_back(PathStep{PathStep::UnderBinder{l->param, a.arg}});
            if (find_evidence(*l->body, x, path)) return true;
            path.pop_back();
        }
    }
    return false;
}

bool find_evidence(const Term& t, const Name& x, CtxPath& path) {
    return std::visit(
        overloaded{
            [&](const Term::Var& v) { return v.name == x; },
            [&](const Term::App& a) { return find_evidence_app(a, x, path); },
            [&](const Term::PrimApp& p) {
                path.push_back(PathStep{PathStep::PrimArg{p.prim}});
                if (find_evidence(*p.arg, x, path)) return true;
                path.pop_back();
                return false;
            },
            [&](const Term::Car& c) {
                path.push_back(PathStep{PathStep::CarArg{}});
                if (find_evidence(*c.arg, x, path)) return true;
                path.pop_back();
                return false;
            },
            [&](const Term::Cdr& c) {
                path.push_back(PathStep{PathStep::CdrArg{}});
                if (find_evidence(*c.arg, x, path)) return true;
                path.pop_back();
                return false;
            },
            [&](const auto&) { return false; },
        },
        t.node);
}

// Memoized on the shared nodes: the spine changes step to step, the bodies
// under it do not.
std::optional<CtxPath> evidence(const TermPtr& body, const Name& x) {
    struct Key {
        const Term* t;
        Name x;
        bool operator==(const Key& o) const { return t == o.t && x == o.x; }
    };
    struct KeyHash {
        size_t operator()(const Key& k) const {
            return std::hash<const void*>()(k.t) * 31 +
                   std::hash<std::string>()(k.x.base) * 7 + (size_t)k.x.index;
        }
    };
    struct Entry {
        TermPtr keep;
        std::optional<CtxPath> path;
    };
    thread_local std::unordered_map<Key, Entry, KeyHash> cache;
    Key key{body.get(), x};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second.path;
    if (cache.size() > 1u << 21) cache.clear();
    CtxPath path;
    std::optional<CtxPath> result;
    if (find_evidence(*body, x, path)) result = std::move(path);
    return cache.emplace(key, Entry{body, result}).first->second.path;
}

}  // namespace

// ------------------------------
// decompose
// ------------------------------

namespace {

Decomposition search(const TermPtr& cur, CtxPath path) {
    const Term& t = *cur;
    if (const auto* a = std::get_if<Term::App>(&t.node)) {
        if (is_answer_cached(a->fun)) {
            if (const auto* l = std::get_if<Term::Lam>(&a->fun->node)) {
                if (auto ev = evidence(l->body, l->param)) {
                    if (is_answer_cached(a->arg))
                        return {Decomposition::Redex{std::move(path), cur}};
                    path.push_back(
                        PathStep{PathStep::OperandOf{l->param, std::move(*ev)}});
                    return search(a->arg, std::move(path));
                }
                path.push_back(PathStep{PathStep::UnderBinder{l->param, a->arg}});
                return search(l->body, std::move(path));
            }
            if (std::holds_alternative<Term::App>(a->fun->node))
                return {Decomposition::Redex{std::move(path), cur}};  // lift
            return {Decomposition::Stuck{"application of non-function value"}};
        }
        path.push_back(PathStep{PathStep::AppLeft{a->arg}});
        return search(a->fun, std::move(path));
    }
    if (std::holds_alternative<Term::Let>(t.node))
        return {Decomposition::Redex{std::move(path), cur}};
    if (const auto* p = std::get_if<Term::PrimApp>(&t.node)) {
        if (is_answer_cached(p->arg))
            return {Decomposition::Redex{std::move(path), cur}};
        path.push_back(PathStep{PathStep::PrimArg{p->prim}});
        return search(p->arg, std::move(path));
    }
    if (std::holds_alternative<Term::Cons>(t.node))
        return {Decomposition::Redex{std::move(path), cur}};
    if (const auto* c = std::get_if<Term::Car>(&t.node)) {
        if (is_answer_cached(c->arg))
            return {Decomposition::Redex{std::move(path), cur}};
        path.push_back(PathStep{PathStep::CarArg{}});
        return search(c->arg, std::move(path));
    }
    if (const auto* c = std::get_if<Term::Cdr>(&t.node)) {
        if (is_answer_cached(c->arg))
            return {Decomposition::Redex{std::move(path), cur}};
        path.push_back(PathStep{PathStep::CdrArg{}});
        return search(c->arg, std::move(path));
    }
    if (const auto* v = std::get_if<Term::Var>(&t.node))
        return {Decomposition::Stuck{"variable " + print_name(v->name) +
                                     " demanded with no binding"}};
    if (std::holds_alternative<Term::Letrec>(t.node))
        return {Decomposition::Stuck{"letrec term reached core decomposition"}};
    return {Decomposition::Stuck{"value in focus position"}};
}

}  // namespace

Decomposition decompose(const TermPtr& term) {
    if (is_answer_cached(term)) return {Decomposition::IsAnswer{term}};
    return search(term, {});
}

// ------------------------------
// contraction
// ------------------------------

namespace {

long long apply_delta(Prim p, long long v) {
    switch (p) {
        case Prim::Add1: return v + 1;
        case Prim::Sub1: return v - 1;
    }
    return 0;
}

// Rename the binder of an abstraction away from `avoid`.
std::pair<Name, TermPtr> rename_binder(const Name& param, const TermPtr& body,
                                        NameSet avoid) {
    NameSet bf = free_vars(*body);
    avoid.insert(bf.begin(), bf.end());
    Name renamed = fresh(param, avoid);
    return {renamed, subst(body, param, mk_var(renamed))};
}

}  // namespace

ContractResult contract(const TermPtr& redex) {
    const Term& t = *redex;
    if (const auto* a = std::get_if<Term::App>(&t.node)) {
        if (const auto* l = std::get_if<Term::Lam>(&a->fun->node)) {
            auto ev = evidence(l->body, l->param);
            if (ev && is_answer(*a->arg)) {
                if (is_value(*a->arg)) {
                    // (\x.E[x]) v  ->  (\x.E[v]) v
                    TermPtr holed = replace_at(l->body, *ev, 0, marker());
                    TermPtr filled = subst(holed, kHole, a->arg);
                    return {mk_app(mk_lam(l->param, filled), a->arg), ""};
                }
                // (\x1.E[x1]) ((\x2.a) t1)  ->  (\x2.(\x1.E[x1]) a) t1
                const auto& inner = std::get<Term::App>(a->arg->node);
                const auto& il = std::get<Term::Lam>(inner.fun->node);
                Name x2 = il.param;
                TermPtr ibody = il.body;
                NameSet fun_free = free_vars(*a->fun);
                if (fun_free.count(x2)) {
                    NameSet avoid = fun_free;
                    NameSet tf = free_vars(*inner.arg);
                    avoid.insert(tf.begin(), tf.end());
                    std::tie(x2, ibody) = rename_binder(il.param, il.body, avoid);
                }
                return {mk_app(mk_lam(x2, mk_app(a->fun, ibody)), inner.arg), ""};
            }
            if (!ev) {
                // (\x.a) t1 t2 handled below via the outer application
            }
        }
        if (const auto* outer = std::get_if<Term::App>(&a->fun->node)) {
            // (\x.a) t1 t2  ->  (\x.a t2) t1
            if (const auto* l = std::get_if<Term::Lam>(&outer->fun->node)) {
                if (is_answer(*l->body)) {
                    Name x = l->param;
                    TermPtr abody = l->body;
                    NameSet t2_free = free_vars(*a->arg);
                    if (t2_free.count(x)) {
                        NameSet avoid = t2_free;
                        NameSet tf = free_vars(*outer->arg);
                        avoid.insert(tf.begin(), tf.end());
                        std::tie(x, abody) = rename_binder(l->param, l->body, avoid);
                    }
                    return {mk_app(mk_lam(x, mk_app(abody, a->arg)), outer->arg), ""};
                }
            }
        }
        throw std::invalid_argument("contract: application is not a redex");
    }
    if (const auto* l = std::get_if<Term::Let>(&t.node)) {
        // let x=t2 in t1  ->  (\x.t1) t2
        return {mk_app(mk_lam(l->name, l->body), l->rhs), ""};
    }
    if (const auto* p = std::get_if<Term::PrimApp>(&t.node)) {
        if (const auto* n = std::get_if<Term::IntConst>(&p->arg->node))
            return {mk_int(apply_delta(p->prim, n->value)), ""};
        if (is_value(*p->arg))
            return {nullptr, "delta undefined: " + prim_word(p->prim) +
                                 " applied to a non-integer value"};
        if (const auto* a = std::get_if<Term::App>(&p->arg->node)) {
            // f ((\x.a) t)  ->  (\x.f a) t
            const auto& l2 = std::get<Term::Lam>(a->fun->node);
            return {mk_app(mk_lam(l2.param, mk_prim(p->prim, l2.body)), a->arg), ""};
        }
        throw std::invalid_argument("contract: prim argument is not an answer");
    }
    if (const auto* c = std::get_if<Term::Cons>(&t.node)) {
        // cons t1 t2  ->  (\x1.(\x2.<x1,x2>) t2) t1
        NameSet avoid = free_vars(*c->first);
        NameSet f2 = free_vars(*c->second);
        avoid.insert(f2.begin(), f2.end());
        Name x1 = fresh(Name("x", 1), avoid);
        avoid.insert(x1);
        Name x2 = fresh(Name("x", 2), avoid);
        return {mk_app(mk_lam(x1, mk_app(mk_lam(x2, mk_pair_val(x1, x2)), c->second)),
                       c->first),
                ""};
    }
    if (const auto* c = std::get_if<Term::Car>(&t.node)) {
        if (const auto* pv = std::get_if<Term::PairVal>(&c->arg->node))
            return {mk_var(pv->first), ""};
        if (is_value(*c->arg)) return {nullptr, "car applied to a non-pair value"};
        if (const auto* a = std::get_if<Term::App>(&c->arg->node)) {
            const auto& l2 = std::get<Term::Lam>(a->fun->node);
            return {mk_app(mk_lam(l2.param, mk_car(l2.body)), a->arg), ""};
        }
        throw std::invalid_argument("contract: car argument is not an answer");
    }
    if (const auto* c = std::get_if<Term::Cdr>(&t.node)) {
        if (const auto* pv = std::get_if<Term::PairVal>(&c->arg->node))
            return {mk_var(pv->second), ""};
        if (is_value(*c->arg)) return {nullptr, "cdr applied to a non-pair value"};
        if (const auto* a = std::get_if<Term::App>(&c->arg->node)) {
            const auto& l2 = std::get<Term::Lam>(a->fun->node);
            return {mk_app(mk_lam(l2.param, mk_cdr(l2.body)), a->arg), ""};
        }
        throw std::invalid_argument("contract: cdr argument is not an answer");
    }
    throw std::invalid_argument("contract: not a redex");
}

// ------------------------------
// stepping
// ------------------------------

StepResult step_sr(const TermPtr& term) {
    Decomposition d = decompose(term);
    return std::visit(
        overloaded{
            [&](const Decomposition::IsAnswer&) {
                return StepResult{StepResult::Kind::AlreadyAnswer, term, ""};
            },
            [&](const Decomposition::Stuck& s) {
                return StepResult{StepResult::Kind::Stuck, term, s.reason};
            },
            [&](const Decomposition::Redex& r) {
                ContractResult c = contract(r.redex);
                if (!c.term)
                    return StepResult{StepResult::Kind::Stuck, term, c.stuck};
                return StepResult{StepResult::Kind::Stepped, plug(r.ctx, c.term), ""};
            },
        },
        d.result);
}

Outcome evaluate_sr(const TermPtr& term, long fuel) {
    TermPtr cur = term;
    long steps = 0;
    long deltas = 0;
    for (;;) {
        Decomposition d = decompose(cur);
        if (std::holds_alternative<Decomposition::IsAnswer>(d.result))
            return {Outcome::Kind::Value, cur, steps, "", deltas};
        if (const auto* s = std::get_if<Decomposition::Stuck>(&d.result))
            return {Outcome::Kind::Stuck, cur, steps, s->reason, deltas};
        if (steps >= fuel) return {Outcome::Kind::OutOfFuel, cur, steps, "", deltas};
        const auto& r = std::get<Decomposition::Redex>(d.result);
        if (const auto* p = std::get_if<Term::PrimApp>(&r.redex->node))
            if (is_value(*p->arg)) deltas++;
        ContractResult c = contract(r.redex);
        if (!c.term) return {Outcome::Kind::Stuck, cur, steps, c.stuck, deltas};
        cur = plug(r.ctx, c.term);
        steps++;
    }
}

// ------------------------------
// letrec calculus, rules (1)-(6)
// ------------------------------

namespace {

NameSet binding_names(const Bindings& bs) {
    NameSet s;
    for (const auto& [n, _] : bs) s.insert(n);
    return s;
}

// Does the evaluation position of `t` demand a variable from `visible`?
// If so, return that variable and `t` with the demanded occurrence
// replaced by the hole marker.
std::optional<std::pair<Name, TermPtr>> lr_demand(const TermPtr& t,
                                                  const NameSet& visible) {
    const Term& node = *t;
    if (const auto* v = std::get_if<Term::Var>(&node.node)) {
        if (visible.count(v->name)) return std::make_pair(v->name, marker());
        return std::nullopt;
    }
    if (const auto* a = std::get_if<Term::App>(&node.node)) {
        if (is_letrec_answer(*a->fun)) return std::nullopt;
        if (auto r = lr_demand(a->fun, visible))
            return std::make_pair(r->first, mk_app(r->second, a->arg));
        return std::nullopt;
    }
    if (const auto* p = std::get_if<Term::PrimApp>(&node.node)) {
        if (is_letrec_answer(*p->arg)) return std::nullopt;
        if (auto r = lr_demand(p->arg, visible))
            return std::make_pair(r->first, mk_prim(p->prim, r->second));
        return std::nullopt;
    }
    if (const auto* c = std::get_if<Term::Car>(&node.node)) {
        if (is_letrec_answer(*c->arg)) return std::nullopt;
        if (auto r = lr_demand(c->arg, visible))
            return std::make_pair(r->first, mk_car(r->second));
        return std::nullopt;
    }
    if (const auto* c = std::get_if<Term::Cdr>(&node.node)) {
        if (is_letrec_answer(*c->arg)) return std::nullopt;
        if (auto r = lr_demand(c->arg, visible))
            return std::make_pair(r->first, mk_cdr(r->second));
        return std::nullopt;
    }
    if (const auto* l = std::get_if<Term::Letrec>(&node.node)) {
        NameSet inner = binding_names(l->bindings);
        NameSet vis_outer;
        for (const Name& n : visible)
            if (!inner.count(n)) vis_outer.insert(n);
        NameSet all = vis_outer;
        all.insert(inner.begin(), inner.end());
        auto r = lr_demand(l->body, all);
        if (!r) return std::nullopt;
        if (vis_outer.count(r->first))
            return std::make_pair(r->first, mk_letrec(l->bindings, r->second));
        // the body demands an inner binding; follow the dependency chain and
        // see whether the chain-end definition demands an outer variable
        NameSet chain{r->first};
        Name cur = r->first;
        for (;;) {
            const TermPtr* rhs = nullptr;
            for (const auto& [n, rt] : l->bindings)
                if (n == cur) rhs = &rt;
            if (!rhs) return std::nullopt;
            if (is_value(**rhs) || is_letrec_answer(**rhs)) return std::nullopt;
            auto r2 = lr_demand(*rhs, all);
            if (!r2) return std::nullopt;
            if (vis_outer.count(r2->first)) {
                Bindings bs = l->bindings;
                for (auto& [n, rt] : bs)
                    if (n == cur) rt = r2->second;
                return std::make_pair(r2->first, mk_letrec(std::move(bs), l->body));
            }
            if (chain.count(r2->first)) return std::nullopt;  // inner cycle
            chain.insert(r2->first);
            cur = r2->first;
        }
    }
    return std::nullopt;
}

LetrecStep stepped(TermPtr t) {
    return {LetrecStep::Kind::Stepped, std::move(t), {}, ""};
}

LetrecStep lr_step(const TermPtr& t);

// Step inside a subterm, rebuilding with `wrap` on success.
template <class Wrap>
LetrecStep step_within(const TermPtr& sub, Wrap wrap) {
    LetrecStep inner = lr_step(sub);
    if (inner.kind == LetrecStep::Kind::Stepped) {
        LetrecStep s = stepped(wrap(inner.term));
        s.applied_delta = inner.applied_delta;
        return s;
    }
    if (inner.kind == LetrecStep::Kind::AlreadyAnswer)
        return {LetrecStep::Kind::Stuck, sub, {}, "internal: unexpected answer focus"};
    return inner;
}

// Merge an inner letrec's bindings into an outer one, renaming the inner
// binders away from everything visible at the outer level.
std::pair<Bindings, TermPtr> hoist_bindings(const Bindings& inner_bs,
                                            const TermPtr& inner_body,
                                            const NameSet& collide) {
    Bindings bs = inner_bs;
    TermPtr body = inner_body;
    NameSet avoid = collide;
    for (const auto& [n, _] : bs) avoid.insert(n);
    for (size_t i = 0; i < bs.size(); i++) {
        Name old = bs[i].first;
        if (!collide.count(old)) continue;
        Name renamed = fresh(old, avoid);
        avoid.insert(renamed);
        TermPtr rv = mk_var(renamed);
        for (auto& [n2, rhs2] : bs) rhs2 = subst(rhs2, old, rv);
        body = subst(body, old, rv);
        bs[i].first = renamed;
    }
    return {std::move(bs), std::move(body)};
}

LetrecStep lr_step_letrec(const TermPtr& t, const Term::Letrec& l) {
    NameSet dom = binding_names(l.bindings);
    auto body_demand = lr_demand(l.body, dom);
    if (!body_demand) {
        // no variable demand: the body itself must contain the redex
        return step_within(l.body, [&](TermPtr b) { return mk_letrec(l.bindings, b); });
    }

    std::vector<Name> chain{body_demand->first};
    // marked definitions along the chain; marked[i] corresponds to chain[i]
    std::vector<TermPtr> marked{body_demand->second};  // marked[0] is the body
    Name cur = body_demand->first;
    for (;;) {
        const TermPtr* rhs = nullptr;
        for (const auto& [n, rt] : l.bindings)
            if (n == cur) rhs = &rt;
        if (!rhs)
            return {LetrecStep::Kind::Stuck, t, chain,
                    "internal: demanded variable has no binding"};
        if (is_value(**rhs)) {
            TermPtr filled = subst(marked.back(), kHole, *rhs);
            if (chain.size() == 1) {
                // rule (2): substitute the value into the body
                return stepped(mk_letrec(l.bindings, filled));
            }
            // rule (3): substitute into the previous definition in the chain
            Name prev = chain[chain.size() - 2];
            Bindings bs = l.bindings;
            for (auto& [n, rt] : bs)
                if (n == prev) rt = filled;
            return stepped(mk_letrec(std::move(bs), l.body));
        }
        if (is_letrec_answer(**rhs)) {
            // rules (5)/(6): hoist the inner bindings into this letrec
            const auto& inner = std::get<Term::Letrec>((*rhs)->node);
            NameSet avoid = dom;
            for (const auto& [_, r2] : l.bindings) {
                NameSet f = free_vars(*r2);
                avoid.insert(f.begin(), f.end());
            }
            NameSet bf = free_vars(*l.body);
            avoid.insert(bf.begin(), bf.end());
            auto [hoisted, inner_body] = hoist_bindings(inner.bindings, inner.body, avoid);
            Bindings bs;
            for (const auto& [n, rt] : l.bindings) {
                if (n == cur) {
                    bs.insert(bs.end(), hoisted.begin(), hoisted.end());
                    bs.emplace_back(n, inner_body);
                } else {
                    bs.emplace_back(n, rt);
                }
            }
            return stepped(mk_letrec(std::move(bs), l.body));
        }
        auto next = lr_demand(*rhs, dom);
        if (!next) {
            // the active definition holds the redex
            Name active = cur;
            return step_within(*rhs, [&, active](TermPtr r2) {
                Bindings bs = l.bindings;
                for (auto& [n, rt] : bs)
                    if (n == active) rt = r2;
                return mk_letrec(std::move(bs), l.body);
            });
        }
        if (std::find(chain.begin(), chain.end(), next->first) != chain.end()) {
            chain.push_back(next->first);
            return {LetrecStep::Kind::BlackHole, t, chain, "black hole"};
        }
        chain.push_back(next->first);
        marked.push_back(next->second);
        cur = next->first;
    }
}

LetrecStep lr_step(const TermPtr& t) {
    const Term& node = *t;
    if (is_letrec_answer(node))
        return {LetrecStep::Kind::AlreadyAnswer, t, {}, ""};

    if (const auto* a = std::get_if<Term::App>(&node.node)) {
        if (is_letrec_answer(*a->fun)) {
            if (const auto* l = std::get_if<Term::Lam>(&a->fun->node)) {
                // rule (1): (\x.t1) t2 -> letrec x = t2 in t1
                Name x = l->param;
                TermPtr body = l->body;
                NameSet arg_free = free_vars(*a->arg);
                if (arg_free.count(x)) {
                    NameSet avoid = arg_free;
                    std::tie(x, body) = rename_binder(l->param, l->body, avoid);
                }
                return stepped(mk_letrec({{x, a->arg}}, body));
            }
            if (const auto* lr = std::get_if<Term::Letrec>(&a->fun->node)) {
                // rule (4): (letrec D in a) t -> letrec D in a t
                NameSet avoid = free_vars(*a->arg);
                auto [bs, body] = hoist_bindings(lr->bindings, lr->body, avoid);
                return stepped(mk_letrec(std::move(bs), mk_app(body, a->arg)));
            }
            return {LetrecStep::Kind::Stuck, t, {}, "application of non-function value"};
        }
        return step_within(a->fun, [&](TermPtr f) { return mk_app(f, a->arg); });
    }
    if (const auto* l = std::get_if<Term::Let>(&node.node)) {
        return stepped(mk_app(mk_lam(l->name, l->body), l->rhs));
    }
    if (const auto* p = std::get_if<Term::PrimApp>(&node.node)) {
        if (const auto* n = std::get_if<Term::IntConst>(&p->arg->node)) {
            LetrecStep s = stepped(mk_int(apply_delta(p->prim, n->value)));
            s.applied_delta = true;
            return s;
        }
        if (is_value(*p->arg))
            return {LetrecStep::Kind::Stuck, t, {},
                    "delta undefined: " + prim_word(p->prim) +
                        " applied to a non-integer value"};
        if (const auto* lr = std::get_if<Term::Letrec>(&p->arg->node)) {
            if (is_letrec_answer(*p->arg))
                return stepped(
                    mk_letrec(lr->bindings, mk_prim(p->prim, lr->body)));
        }
        return step_within(p->arg, [&](TermPtr x) { return mk_prim(p->prim, x); });
    }
    if (const auto* c = std::get_if<Term::Car>(&node.node)) {
        if (const auto* pv = std::get_if<Term::PairVal>(&c->arg->node))
            return stepped(mk_var(pv->first));
        if (is_value(*c->arg))
            return {LetrecStep::Kind::Stuck, t, {}, "car applied to a non-pair value"};
        if (const auto* lr = std::get_if<Term::Letrec>(&c->arg->node)) {
            if (is_letrec_answer(*c->arg))
                return stepped(mk_letrec(lr->bindings, mk_car(lr->body)));
        }
        return step_within(c->arg, [&](TermPtr x) { return mk_car(x); });
    }
    if (const auto* c = std::get_if<Term::Cdr>(&node.node)) {
        if (const auto* pv = std::get_if<Term::PairVal>(&c->arg->node))
            return stepped(mk_var(pv->second));
        if (is_value(*c->arg))
            return {LetrecStep::Kind::Stuck, t, {}, "cdr applied to a non-pair value"};
        if (const auto* lr = std::get_if<Term::Letrec>(&c->arg->node)) {
            if (is_letrec_answer(*c->arg))
                return stepped(mk_letrec(lr->bindings, mk_cdr(lr->body)));
        }
        return step_within(c->arg, [&](TermPtr x) { return mk_cdr(x); });
    }
    if (const auto* c = std::get_if<Term::Cons>(&node.node)) {
        // cons t1 t2 -> letrec x1 = t1 in letrec x2 = t2 in <x1,x2>
        NameSet avoid = free_vars(*c->first);
        NameSet f2 = free_vars(*c->second);
        avoid.insert(f2.begin(), f2.end());
        Name x1 = fresh(Name("x", 1), avoid);
        avoid.insert(x1);
        Name x2 = fresh(Name("x", 2), avoid);
        return stepped(mk_letrec(
            {{x1, c->first}},
            mk_letrec({{x2, c->second}}, mk_pair_val(x1, x2))));
    }
    if (const auto* lr = std::get_if<Term::Letrec>(&node.node)) {
        return lr_step_letrec(t, *lr);
    }
    if (const auto* v = std::get_if<Term::Var>(&node.node)) {
        return {LetrecStep::Kind::Stuck, t, {},
                "variable " + print_name(v->name) + " demanded with no binding"};
    }
    return {LetrecStep::Kind::Stuck, t, {}, "value in focus position"};
}

}  // namespace

LetrecStep step_letrec(const TermPtr& term) { return lr_step(term); }

Outcome evaluate_letrec(const TermPtr& term, long fuel) {
    TermPtr cur = term;
    long steps = 0;
    long deltas = 0;
    for (;;) {
        LetrecStep s = step_letrec(cur);
        switch (s.kind) {
            case LetrecStep::Kind::AlreadyAnswer:
                return {Outcome::Kind::Value, cur, steps, "", deltas};
            case LetrecStep::Kind::BlackHole: {
                std::string msg = "black hole:";
                for (const Name& n : s.chain) msg += " " + print_name(n);
                return {Outcome::Kind::Stuck, cur, steps, msg, deltas};
            }
            case LetrecStep::Kind::Stuck:
                return {Outcome::Kind::Stuck, cur, steps, s.reason, deltas};
            case LetrecStep::Kind::Stepped:
                if (steps >= fuel)
                    return {Outcome::Kind::OutOfFuel, cur, steps, "", deltas};
                if (s.applied_delta) deltas++;
                cur = s.term;
                steps++;
                break;
        }
    }
}

}  // namespace needle
