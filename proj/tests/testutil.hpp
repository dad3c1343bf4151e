#pragma once

#include <functional>
#include <map>
#include <random>
#include <vector>

#include "needle/letrec_machine.hpp"
#include "needle/machine.hpp"
#include "needle/oracle.hpp"
#include "needle/syntax.hpp"

namespace testutil {

using namespace needle;

inline TermPtr P(const std::string& src) { return parse(src); }

// ------------------------------
// random closed terms
// ------------------------------

struct Gen {
    std::mt19937 rng;
    explicit Gen(unsigned seed) : rng(seed) {}

    int pick(int n) { return (int)(rng() % (unsigned)n); }

    Name binder_name(const std::vector<Name>& env) {
        static const char* bases[] = {"x", "y", "z", "w", "u", "v"};
        // occasionally reuse a bound name to exercise shadowing and hygiene
        if (!env.empty() && pick(4) == 0) return env[pick((int)env.size())];
        return Name(bases[pick(6)], pick(3));
    }

    TermPtr core(int budget) {
        std::vector<Name> env;
        return core_rec(budget, env);
    }

    TermPtr core_rec(int budget, std::vector<Name>& env) {
        if (budget <= 1) {
            if (!env.empty()) return mk_var(env[pick((int)env.size())]);
            budget = 2;
        }
        int choice = pick(10);
        if (budget >= 3 && choice < 5) {
            int left = 1 + pick(budget - 2);
            TermPtr f = core_rec(left, env);
            TermPtr a = core_rec(budget - 1 - left, env);
            return mk_app(f, a);
        }
        if (budget >= 2 && (choice < 8 || env.empty())) {
            Name n = binder_name(env);
            env.push_back(n);
            TermPtr body = core_rec(budget - 1, env);
            env.pop_back();
            return mk_lam(n, body);
        }
        return mk_var(env[pick((int)env.size())]);
    }

    // letrec-free term over the full extended syntax
    TermPtr extended(int budget) {
        std::vector<Name> env;
        return ext_rec(budget, env);
    }

    TermPtr ext_rec(int budget, std::vector<Name>& env) {
        if (budget <= 1) {
            if (!env.empty() && pick(2) == 0) return mk_var(env[pick((int)env.size())]);
            return mk_int(pick(5));
        }
        switch (pick(12)) {
            case 0:
            case 1:
            case 2: {
                if (budget < 3) break;
                int left = 1 + pick(budget - 2);
                return mk_app(ext_rec(left, env), ext_rec(budget - 1 - left, env));
            }
            case 3:
            case 4: {
                Name n = binder_name(env);
                env.push_back(n);
                TermPtr body = ext_rec(budget - 1, env);
                env.pop_back();
                return mk_lam(n, body);
            }
            case 5: {
                if (budget < 3) break;
                Name n = binder_name(env);
                int left = 1 + pick(budget - 2);
                TermPtr rhs = ext_rec(left, env);
                env.push_back(n);
                TermPtr body = ext_rec(budget - 1 - left, env);
                env.pop_back();
                return mk_let(n, rhs, body);
            }
            case 6:
                return mk_prim(pick(2) ? Prim::Add1 : Prim::Sub1,
                               ext_rec(budget - 1, env));
            case 7: {
                if (budget < 3) break;
                int left = 1 + pick(budget - 2);
                return mk_cons(ext_rec(left, env), ext_rec(budget - 1 - left, env));
            }
            case 8:
                return mk_car(ext_rec(budget - 1, env));
            case 9:
                return mk_cdr(ext_rec(budget - 1, env));
            default: break;
        }
        if (!env.empty() && pick(2) == 0) return mk_var(env[pick((int)env.size())]);
        return mk_int(pick(5));
    }
};

// ------------------------------
// exhaustive enumeration of closed core terms (de Bruijn, then named)
// ------------------------------

// Number of nodes: Var = 1, Lam = 1 + body, App = 1 + fun + arg.
inline std::vector<TermPtr> enumerate_closed(int size) {
    static std::map<std::pair<int, int>, std::vector<TermPtr>> memo;
    std::function<const std::vector<TermPtr>&(int, int)> go =
        [&](int s, int depth) -> const std::vector<TermPtr>& {
        auto key = std::make_pair(s, depth);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        std::vector<TermPtr> out;
        if (s == 1) {
            for (int i = 0; i < depth; i++) out.push_back(mk_var(Name("v", i)));
        } else {
            for (const TermPtr& b : go(s - 1, depth + 1))
                out.push_back(mk_lam(Name("v", depth), b));
            for (int left = 1; left <= s - 2; left++) {
                const auto& fs = go(left, depth);
                const auto& as = go(s - 1 - left, depth);
                for (const TermPtr& f : fs)
                    for (const TermPtr& a : as) out.push_back(mk_app(f, a));
            }
        }
        return memo.emplace(key, std::move(out)).first->second;
    };
    return go(size, 0);
}

// ------------------------------
// reference decomposition counter for the core calculus
// ------------------------------

// Number of ways body == E[x] for an evaluation context E.
inline long count_evidences(const Term& body, const Name& x) {
    long n = 0;
    if (const auto* v = std::get_if<Term::Var>(&body.node)) {
        if (v->name == x) n++;
        return n;
    }
    if (const auto* a = std::get_if<Term::App>(&body.node)) {
        n += count_evidences(*a->fun, x);  // E t
        if (const auto* l = std::get_if<Term::Lam>(&a->fun->node)) {
            long inner = count_evidences(*l->body, l->param);
            if (inner > 0) n += inner * count_evidences(*a->arg, x);  // (\y.E[y]) E
            if (l->param != x) n += count_evidences(*l->body, x);     // (\y.E) t
        }
        return n;
    }
    return 0;
}

// ------------------------------
// per-step soundness of the machine against the oracle
// ------------------------------

inline long redex_binder_count(const Configuration& c) {
    const auto* m = std::get_if<Configuration::Reduce>(&c.mode);
    if (!m) return 0;
    return std::visit(
        overloaded{
            [](const MRedex::ContApply& k) { return (long)k.arg.binders.size(); },
            [](const MRedex::AnswerApply& a) { return (long)a.fun.binders.size(); },
            [](const MRedex::PrimRedex& p) { return (long)p.arg.binders.size(); },
            [](const MRedex::CarRedex& p) { return (long)p.arg.binders.size(); },
            [](const MRedex::CdrRedex& p) { return (long)p.arg.binders.size(); },
            [](const auto&) { return 0L; },
        },
        m->redex.r);
}

// Unload a configuration with the first `prefix` context frames removed.
inline TermPtr unload_without_prefix(const Configuration& c, size_t prefix) {
    Configuration trimmed = c;
    std::visit(overloaded{
                   [&](Configuration::Refocus& m) {
                       m.ctx.erase(m.ctx.begin(), m.ctx.begin() + prefix);
                   },
                   [&](Configuration::Rebuild& m) {
                       m.ctx.erase(m.ctx.begin(), m.ctx.begin() + prefix);
                   },
                   [&](Configuration::Need& m) {
                       m.ctx.erase(m.ctx.begin(), m.ctx.begin() + prefix);
                   },
                   [&](Configuration::Reduce& m) {
                       m.ctx.erase(m.ctx.begin(), m.ctx.begin() + prefix);
                   },
                   [&](Configuration::Final&) {},
               },
               trimmed.mode);
    return unload(trimmed);
}

// Housekeeping transitions must preserve the unloading up to alpha; reduce
// transitions must either preserve it (pure renaming) or advance it by at
// most binders+2 standard-order contractions.
//
// Every reduce rule leaves the outer context E1 in place, so the oracle
// replay runs on the parts below E1: unload(before) = [[E1]][local] and
// unload(after) = [[E1]][local'], and for well-formed configurations the
// standard redex of [[E1]][local] sits inside local (the demanded positions
// of E1 hold the focus; wf is checked separately). Replaying locally keeps
// the check linear in the changed part instead of the whole term.
inline bool step_is_sound(const Configuration& before, const Configuration& after,
                          RuleTag tag, std::string* why = nullptr,
                          const TermPtr* u1_cached = nullptr,
                          const TermPtr* u2_cached = nullptr) {
    if (!is_reduce_tag(tag)) {
        TermPtr u1 = u1_cached ? *u1_cached : unload(before);
        TermPtr u2 = u2_cached ? *u2_cached : unload(after);
        if (alpha_equal(*u1, *u2)) return true;
        if (why)
            *why = "housekeeping step " + tag_name(tag) + " changed the unloading";
        return false;
    }
    const auto* red = std::get_if<Configuration::Reduce>(&before.mode);
    if (!red) {
        if (why) *why = "reduce tag on a non-reduce configuration";
        return false;
    }
    Configuration local_cfg{before.names, Configuration::Reduce{{}, red->redex}};
    TermPtr local_before = unload(local_cfg);
    TermPtr local_after = unload_without_prefix(after, red->ctx.size());
    if (alpha_equal(*local_before, *local_after)) return true;
    long limit = redex_binder_count(before) + 2;
    TermPtr cur = local_before;
    for (long i = 0; i < limit; i++) {
        StepResult s = step_sr(cur);
        if (s.kind != StepResult::Kind::Stepped) {
            if (why) *why = "oracle got stuck replaying " + tag_name(tag);
            return false;
        }
        cur = s.term;
        if (alpha_equal(*cur, *local_after)) return true;
    }
    if (why)
        *why = "reduce step " + tag_name(tag) + " not reachable within " +
               std::to_string(limit) + " oracle steps";
    return false;
}

// Check every transition of a recorded machine run.
inline long run_soundness_violations(const std::vector<Configuration>& history,
                                     const std::vector<RuleTag>& tags,
                                     std::string* first_why = nullptr) {
    long violations = 0;
    if (history.empty()) return 0;
    TermPtr prev;  // unload of history[k], filled lazily for housekeeping
    bool prev_valid = false;
    for (size_t k = 0; k + 1 < history.size(); k++) {
        std::string why;
        bool ok;
        if (is_reduce_tag(tags[k])) {
            ok = step_is_sound(history[k], history[k + 1], tags[k], &why);
            prev_valid = false;
        } else {
            if (!prev_valid) prev = unload(history[k]);
            TermPtr next = unload(history[k + 1]);
            ok = step_is_sound(history[k], history[k + 1], tags[k], &why, &prev,
                               &next);
            prev = next;
            prev_valid = true;
        }
        if (!ok) {
            violations++;
            if (first_why && first_why->empty()) *first_why = why;
        }
    }
    return violations;
}

// Letrec-machine analogue, checked against step_letrec; letrec binding
// lists are compared up to permutation.
inline long lredex_binder_count(const LConfiguration& c) {
    const auto* m = std::get_if<LConfiguration::Reduce>(&c.mode);
    if (!m) return 0;
    return std::visit(
        overloaded{
            [](const LRedex::AnswerApply& a) { return (long)a.fun.binders.size(); },
            [](const LRedex::EvalRedex& e) { return (long)e.ans.binders.size(); },
            [](const LRedex::PrimRedex& p) { return (long)p.arg.binders.size(); },
            [](const LRedex::CarRedex& p) { return (long)p.arg.binders.size(); },
            [](const LRedex::CdrRedex& p) { return (long)p.arg.binders.size(); },
            [](const auto&) { return 0L; },
        },
        m->redex.r);
}

inline bool lstep_is_sound(const LConfiguration& before, const LConfiguration& after,
                           LTag tag, std::string* why = nullptr) {
    TermPtr u1 = lunload(before);
    TermPtr u2 = lunload(after);
    if (alpha_equal_upto_bindings(*u1, *u2)) return true;
    if (!is_lreduce_tag(tag)) {
        if (why)
            *why = "housekeeping step " + ltag_name(tag) + " changed the unloading";
        return false;
    }
    long limit = lredex_binder_count(before) + 2;
    TermPtr cur = u1;
    for (long i = 0; i < limit; i++) {
        LetrecStep s = step_letrec(cur);
        if (s.kind != LetrecStep::Kind::Stepped) {
            if (why) *why = "letrec oracle got stuck replaying " + ltag_name(tag);
            return false;
        }
        cur = s.term;
        if (alpha_equal_upto_bindings(*cur, *u2)) return true;
    }
    if (why)
        *why = "reduce step " + ltag_name(tag) + " not reachable within " +
               std::to_string(limit) + " letrec oracle steps";
    return false;
}

// random closed letrec programs (small, cycle-prone)
inline TermPtr gen_letrec_program(Gen& g) {
    int n = 1 + g.pick(3);
    std::vector<Name> vars;
    for (int i = 0; i < n; i++) vars.push_back(Name("r", i));
    Bindings bs;
    for (int i = 0; i < n; i++) {
        std::vector<Name> env = vars;
        TermPtr rhs;
        switch (g.pick(6)) {
            case 0: rhs = mk_int(g.pick(5)); break;
            case 1: rhs = mk_lam(Name("w"), mk_var(Name("w"))); break;
            case 2: rhs = mk_cons(mk_int(g.pick(3)), mk_var(vars[g.pick(n)])); break;
            case 3: rhs = mk_prim(Prim::Add1, mk_int(g.pick(3))); break;
            case 4: rhs = mk_var(vars[g.pick(n)]); break;  // cycle-prone
            default: rhs = g.ext_rec(3 + g.pick(4), env); break;
        }
        bs.emplace_back(vars[i], rhs);
    }
    std::vector<Name> env = vars;
    TermPtr body;
    switch (g.pick(3)) {
        case 0: body = mk_var(vars[g.pick(n)]); break;
        case 1: body = mk_car(mk_var(vars[g.pick(n)])); break;
        default: body = g.ext_rec(2 + g.pick(4), env); break;
    }
    return mk_letrec(std::move(bs), body);
}

// Number of decompositions t == E[r] with r a core redex.
inline long count_decompositions(const Term& t) {
    long n = 0;
    if (const auto* a = std::get_if<Term::App>(&t.node)) {
        if (const auto* l = std::get_if<Term::Lam>(&a->fun->node)) {
            long ev = count_evidences(*l->body, l->param);
            if (ev > 0 && is_answer(*a->arg)) n += ev;  // deref / assoc redexes
        }
        if (const auto* fa = std::get_if<Term::App>(&a->fun->node)) {
            if (const auto* fl = std::get_if<Term::Lam>(&fa->fun->node))
                if (is_answer(*fl->body)) n += 1;  // lift redex
        }
        n += count_decompositions(*a->fun);  // context E t
        if (const auto* l = std::get_if<Term::Lam>(&a->fun->node)) {
            long ev = count_evidences(*l->body, l->param);
            if (ev > 0) n += ev * count_decompositions(*a->arg);  // (\x.E[x]) E
            n += count_decompositions(*l->body);                  // (\x.E) t
        }
        return n;
    }
    return 0;
}

}  // namespace testutil
