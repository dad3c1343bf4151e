#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "testutil.hpp"

using namespace needle;
using testutil::Gen;
using testutil::P;

TEST_CASE("decompose: whole-term redexes and answers") {
    Decomposition d = decompose(P("(\\x.x) \\y.y"));
    const auto& r = std::get<Decomposition::Redex>(d.result);
    CHECK(r.ctx.empty());
    CHECK(term_equal(*r.redex, *P("(\\x.x) \\y.y")));

    CHECK(std::holds_alternative<Decomposition::IsAnswer>(
        decompose(P("\\x.x")).result));
    // answers wrap values in binder applications
    CHECK(is_answer(*P("(\\x.\\y.y) \\z.z")));
    CHECK(is_answer(*P("(\\x.(\\y.5) 9) 7")));
    CHECK_FALSE(is_answer(*P("(\\x.x) \\y.y")));
}

TEST_CASE("decompose: backtracking evidence search") {
    // the body decomposes as both (\y.[]) x and (\y.y) []; only the second
    // exhibits the bound variable, so the whole term is a deref redex
    TermPtr t = P("(\\x.(\\y.y) x) \\z.z");
    Decomposition d = decompose(t);
    const auto& r = std::get<Decomposition::Redex>(d.result);
    CHECK(r.ctx.empty());
    ContractResult c = contract(r.redex);
    REQUIRE(c.term);
    CHECK(term_equal(*c.term, *P("(\\x.(\\y.y) (\\z.z)) \\z.z")));
}

TEST_CASE("decompose: descends into operands only with evidence") {
    // (\x.x) ((\y.y) \z.z): operand must be evaluated first
    Decomposition d = decompose(P("(\\x.x) ((\\y.y) \\z.z)"));
    const auto& r = std::get<Decomposition::Redex>(d.result);
    REQUIRE(r.ctx.size() == 1);
    CHECK(std::holds_alternative<PathStep::OperandOf>(r.ctx[0].step));
    CHECK(term_equal(*r.redex, *P("(\\y.y) \\z.z")));
    CHECK(term_equal(*plug(r.ctx, r.redex), *P("(\\x.x) ((\\y.y) \\z.z)")));
}

TEST_CASE("contract: deref, lift, commute, cons") {
    CHECK(term_equal(*contract(P("(\\x.add1 x) 5")).term, *P("(\\x.add1 5) 5")));
    // (\x.a) t1 t2 -> (\x.a t2) t1
    CHECK(term_equal(*contract(P("(\\x.\\w.w) 1 2")).term, *P("(\\x.(\\w.w) 2) 1")));
    // f ((\x.a) t) -> (\x.f a) t
    CHECK(term_equal(*contract(mk_prim(Prim::Add1, P("(\\x.5) 9"))).term,
                     *P("(\\x.add1 5) 9")));
    TermPtr c = contract(P("cons 1 y")).term;
    CHECK(term_equal(*c, *mk_app(mk_lam(Name("x", 1),
                                        mk_app(mk_lam(Name("x", 2),
                                                      mk_pair_val(Name("x", 1),
                                                                  Name("x", 2))),
                                               mk_var(Name("y")))),
                                 mk_int(1))));
    CHECK_THROWS_AS((void)contract(P("\\x.x")), std::invalid_argument);
}

TEST_CASE("contract hygiene: lift does not capture") {
    // operand t2 mentions x; the binder must be renamed before t2 moves under it
    TermPtr t = mk_app(P("(\\x.\\w.w) 1"), mk_var(Name("x")));
    TermPtr out = contract(t).term;
    const auto& a = std::get<Term::App>(out->node);
    const auto& l = std::get<Term::Lam>(a.fun->node);
    CHECK(l.param != Name("x"));
    NameSet fv = free_vars(*out);
    CHECK(fv == NameSet{Name("x")});
}

TEST_CASE("step_sr examples") {
    StepResult s = step_sr(P("(\\x.x) \\y.y"));
    CHECK(s.kind == StepResult::Kind::Stepped);
    CHECK(term_equal(*s.term, *P("(\\x.\\y.y) \\y.y")));

    CHECK(step_sr(P("\\x.x")).kind == StepResult::Kind::AlreadyAnswer);

    StepResult p = step_sr(P("add1 (sub1 5)"));
    CHECK(p.kind == StepResult::Kind::Stepped);
    CHECK(term_equal(*p.term, *P("add1 4")));
}

TEST_CASE("evaluate_sr examples") {
    Outcome o = evaluate_sr(P("(\\x.x) \\y.y"), 100);
    CHECK(o.kind == Outcome::Kind::Value);
    CHECK(alpha_equal(*o.term, *P("(\\x.\\y.y) \\y.y")));
    CHECK(o.steps == 1);  // the term after deref is already an answer

    Outcome omega = evaluate_sr(P("(\\x.x x) (\\x.x x)"), 50);
    CHECK(omega.kind == Outcome::Kind::OutOfFuel);

    Outcome n = evaluate_sr(P("add1 2"), 10);
    CHECK(n.kind == Outcome::Kind::Value);
    CHECK(std::get<Term::IntConst>(n.term->node).value == 3);
    CHECK(n.steps == 1);
}

TEST_CASE("evaluate_sr: delta failure and non-function application are stuck") {
    CHECK(evaluate_sr(P("add1 (\\x.x)"), 10).kind == Outcome::Kind::Stuck);
    CHECK(evaluate_sr(P("car 5"), 10).kind == Outcome::Kind::Stuck);
    CHECK(evaluate_sr(P("1 2"), 10).kind == Outcome::Kind::Stuck);
}

TEST_CASE("let and pairs evaluate through the oracle") {
    Outcome o = evaluate_sr(P("let x = add1 0 in x"), 100);
    REQUIRE(o.kind == Outcome::Kind::Value);
    // answer is 1 wrapped in the x binder, with the binding memoized
    CHECK(alpha_equal(*o.term, *P("(\\x.1) 1")));

    Outcome c = evaluate_sr(P("car (cons 2 3)"), 100);
    REQUIRE(c.kind == Outcome::Kind::Value);
    // strip the answer bindings: the underlying value is 2
    const Term* v = c.term.get();
    while (const auto* a = std::get_if<Term::App>(&v->node))
        v = std::get<Term::Lam>(a->fun->node).body.get();
    CHECK(std::get<Term::IntConst>(v->node).value == 2);
}

TEST_CASE("unique decomposition against the reference counter, size <= 6") {
    for (int size = 2; size <= 6; size++) {
        for (const TermPtr& t : testutil::enumerate_closed(size)) {
            long n = testutil::count_decompositions(*t);
            Decomposition d = decompose(t);
            if (is_answer(*t)) {
                CHECK(n == 0);
                CHECK(std::holds_alternative<Decomposition::IsAnswer>(d.result));
            } else {
                CHECK(n == 1);
                const auto* r = std::get_if<Decomposition::Redex>(&d.result);
                REQUIRE(r != nullptr);
                CHECK(term_equal(*plug(r->ctx, r->redex), *t));
            }
        }
    }
}

TEST_CASE("oracle step invariants on random corpus") {
    Gen g(424242);
    for (int i = 0; i < 150; i++) {
        TermPtr t = g.core(3 + g.pick(12));
        // determinism
        StepResult s1 = step_sr(t);
        StepResult s2 = step_sr(t);
        CHECK(s1.kind == s2.kind);
        if (s1.kind == StepResult::Kind::Stepped) {
            CHECK(term_equal(*s1.term, *s2.term));
            // closedness preservation
            CHECK(is_closed(*s1.term));
        }
        // answer stability
        if (std::holds_alternative<Decomposition::IsAnswer>(decompose(t).result))
            CHECK(s1.kind == StepResult::Kind::AlreadyAnswer);
    }
}

// ------------------------------
// letrec calculus
// ------------------------------

TEST_CASE("step_letrec follows the cyclic cons reduction") {
    const Name y("y"), x1("x", 1), x2("x", 2);
    TermPtr pair = mk_pair_val(x1, x2);

    TermPtr t0 = P("letrec y = cons 1 y in y");
    LetrecStep s1 = step_letrec(t0);
    REQUIRE(s1.kind == LetrecStep::Kind::Stepped);
    TermPtr e1 = mk_letrec(
        {{y, mk_letrec({{x1, mk_int(1)}},
                       mk_letrec({{x2, mk_var(y)}}, pair))}},
        mk_var(y));
    CHECK(term_equal(*s1.term, *e1));

    LetrecStep s2 = step_letrec(s1.term);
    REQUIRE(s2.kind == LetrecStep::Kind::Stepped);
    TermPtr e2 = mk_letrec(
        {{x1, mk_int(1)}, {y, mk_letrec({{x2, mk_var(y)}}, pair)}}, mk_var(y));
    CHECK(term_equal(*s2.term, *e2));

    LetrecStep s3 = step_letrec(s2.term);
    REQUIRE(s3.kind == LetrecStep::Kind::Stepped);
    TermPtr e3 = mk_letrec({{x1, mk_int(1)}, {x2, mk_var(y)}, {y, pair}}, mk_var(y));
    CHECK(term_equal(*s3.term, *e3));

    LetrecStep s4 = step_letrec(s3.term);
    REQUIRE(s4.kind == LetrecStep::Kind::Stepped);
    TermPtr e4 = mk_letrec({{x1, mk_int(1)}, {x2, mk_var(y)}, {y, pair}}, pair);
    CHECK(term_equal(*s4.term, *e4));

    CHECK(step_letrec(s4.term).kind == LetrecStep::Kind::AlreadyAnswer);
}

TEST_CASE("step_letrec: black holes") {
    LetrecStep s = step_letrec(P("letrec x = x in x"));
    CHECK(s.kind == LetrecStep::Kind::BlackHole);
    REQUIRE(s.chain.size() == 2);
    CHECK(s.chain[0] == Name("x"));

    for (int k = 1; k <= 4; k++) {
        Bindings bs;
        for (int i = 0; i < k; i++)
            bs.emplace_back(Name("c", i), mk_var(Name("c", (i + 1) % k)));
        TermPtr cyc = mk_letrec(bs, mk_var(Name("c", 0)));
        Outcome o = evaluate_letrec(cyc, 100);
        CHECK(o.kind == Outcome::Kind::Stuck);
        CHECK(o.reason.find("black hole") == 0);
    }
}

TEST_CASE("evaluate_letrec basics") {
    Outcome o = evaluate_letrec(P("letrec a = \\w.w in a"), 100);
    REQUIRE(o.kind == Outcome::Kind::Value);
    const auto& l = std::get<Term::Letrec>(o.term->node);
    CHECK(alpha_equal(*l.body, *P("\\w.w")));

    Outcome c = evaluate_letrec(P("letrec y = cons 1 y in car y"), 1000);
    REQUIRE(c.kind == Outcome::Kind::Value);
    const Term* v = c.term.get();
    while (const auto* lr = std::get_if<Term::Letrec>(&v->node)) v = lr->body.get();
    CHECK(std::get<Term::IntConst>(v->node).value == 1);

    // mutual recursion
    Outcome m = evaluate_letrec(
        P("letrec even = \\n.n, odd = even in odd \\q.q"), 1000);
    CHECK(m.kind == Outcome::Kind::Value);
}

TEST_CASE("letrec oracle handles plain core programs") {
    Outcome o = evaluate_letrec(P("(\\x.x) \\y.y"), 100);
    REQUIRE(o.kind == Outcome::Kind::Value);
    const Term* v = o.term.get();
    while (const auto* lr = std::get_if<Term::Letrec>(&v->node)) v = lr->body.get();
    CHECK(alpha_equal(*v, *P("\\y.y")));
}
