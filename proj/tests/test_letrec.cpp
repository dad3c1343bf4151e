#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "testutil.hpp"

using namespace needle;
using testutil::Gen;
using testutil::P;

TEST_CASE("flatten") {
    LContext two{LFrame{LFrame::RecBinder{{{Name("x", 1), mk_int(1)}}}},
                 LFrame{LFrame::RecBinder{{{Name("x", 2), mk_var(Name("y"))}}}}};
    Bindings flat = flatten(two);
    REQUIRE(flat.size() == 2);
    CHECK(flat[0].first == Name("x", 1));
    CHECK(flat[1].first == Name("x", 2));

    CHECK(flatten({}).empty());

    LContext one{LFrame{LFrame::RecBinder{{{Name("a"), P("\\w.w")}}}}};
    CHECK(flatten(one).size() == 1);

    LContext bad{LFrame{LFrame::Operand{mk_int(0)}}};
    CHECK_THROWS_AS((void)flatten(bad), std::logic_error);
}

TEST_CASE("golden trace for the cyclic cons program") {
    RunOptions opts;
    opts.trace = true;
    opts.keep_history = true;
    opts.check_wf = true;
    LMachineResult r = lrun_term(P("letrec y = cons 1 y in y"), 100, opts);
    REQUIRE(r.kind == LMachineResult::Kind::Final);
    CHECK(r.stats.steps == 9);
    CHECK(r.wf_failures.empty());

    std::vector<std::string> tags;
    for (LTag t : r.tags) tags.push_back(ltag_name(t));
    std::vector<std::string> expect = {"LF.4", "LD.4",  "LF.1", "LN.1", "LF.6",
                                       "LCONS", "LB.3", "LD.1", "LB.1"};
    CHECK(tags == expect);

    std::vector<std::string> rendered;
    for (const auto& line : r.trace) rendered.push_back(line.rendered);
    std::vector<std::string> expect_lines = {
        "<{} | [], letrec y = cons 1 y in y>_f",
        "<{} | [], letrec y = cons 1 y in y>_d",
        "<{y} | [letr y = cons 1 y in []], y>_f",
        "<{y} | [letr y = cons 1 y in []], y>_n",
        "<{y} | [letr y = [] in []], cons 1 y>_f",
        "<{y} | [letr y = [] in []], cons 1 y>_d",
        "<{y,x1,x2} | [letr y = [] in []][letr x1 = 1 in []][letr x2 = y in []], "
        "<x1,x2>>_b",
        "<{y,x1,x2} | [], letr y = <[letr x1 = 1 in []][letr x2 = y in []], "
        "<x1,x2>> in []>_d",
        "<{y,x1,x2} | [letr y = <x1,x2>, x1 = 1, x2 = y in []], <x1,x2>>_b",
        "<{y,x1,x2} | <[letr y = <x1,x2>, x1 = 1, x2 = y in []], <x1,x2>>>",
    };
    CHECK(rendered == expect_lines);

    // final answer: letr y=<x1,x2>, x1=1, x2=y in <x1,x2>, up to permutation
    const auto& fin = std::get<LConfiguration::Final>(r.last.mode);
    TermPtr expected = mk_letrec(
        {{Name("y"), mk_pair_val(Name("x", 1), Name("x", 2))},
         {Name("x", 1), mk_int(1)},
         {Name("x", 2), mk_var(Name("y"))}},
        mk_pair_val(Name("x", 1), Name("x", 2)));
    CHECK(alpha_equal_upto_bindings(*lunload_answer(fin.answer), *expected));

    // sharing of cycles: exactly one pair binding, no cons left anywhere
    Bindings flat = flatten(fin.answer.binders);
    int pair_bindings = 0;
    for (const auto& [_, rhs] : flat) {
        if (std::holds_alternative<Term::PairVal>(rhs->node)) pair_bindings++;
        CHECK_FALSE(contains_letrec(*rhs));
        std::function<bool(const Term&)> has_cons = [&](const Term& t) {
            if (std::holds_alternative<Term::Cons>(t.node)) return true;
            bool found = false;
            std::visit(overloaded{
                           [&](const Term::Lam& l) { found = has_cons(*l.body); },
                           [&](const Term::App& a) {
                               found = has_cons(*a.fun) || has_cons(*a.arg);
                           },
                           [&](const auto&) {},
                       },
                       t.node);
            return found;
        };
        CHECK_FALSE(has_cons(*rhs));
    }
    CHECK(pair_bindings == 1);
}

TEST_CASE("letrec machine examples") {
    LMachineResult a = lrun_term(P("letrec a = \\w.w in a"), 100);
    REQUIRE(a.kind == LMachineResult::Kind::Final);
    const auto& fa = std::get<LConfiguration::Final>(a.last.mode);
    CHECK(alpha_equal(*fa.answer.value, *P("\\w.w")));

    LMachineResult c = lrun_term(P("letrec y = cons 1 y in car y"), 1000);
    REQUIRE(c.kind == LMachineResult::Kind::Final);
    const auto& fc = std::get<LConfiguration::Final>(c.last.mode);
    CHECK(std::get<Term::IntConst>(fc.answer.value->node).value == 1);

    // lunload of the injected configuration is the program itself
    TermPtr t = P("letrec y = cons 1 y in y");
    CHECK(term_equal(*lunload(linject(t)), *t));
}

TEST_CASE("black holes on k-cycles, promptly") {
    for (int k = 1; k <= 4; k++) {
        Bindings bs;
        for (int i = 0; i < k; i++)
            bs.emplace_back(Name("c", i), mk_var(Name("c", (i + 1) % k)));
        TermPtr cyc = mk_letrec(bs, mk_var(Name("c", 0)));
        LMachineResult r = lrun_term(cyc, 1000);
        CHECK(r.kind == LMachineResult::Kind::BlackHole);
        CHECK(r.stats.steps <= 4 * k);
        CHECK(!r.chain.empty());
        // the oracle diagnoses the same programs
        LetrecStep o = step_letrec(cyc);
        CHECK(o.kind == LetrecStep::Kind::BlackHole);
    }

    LMachineResult self = lrun_term(P("letrec x = x in x"), 100);
    CHECK(self.kind == LMachineResult::Kind::BlackHole);
    REQUIRE(self.chain.size() == 1);
    CHECK(self.chain[0] == Name("x"));
}

TEST_CASE("mutual recursion through a dependency chain") {
    // b needs a, a needs... a is a value after one step of arithmetic
    TermPtr t = P("letrec a = add1 0, b = add1 a in b");
    LMachineResult r = lrun_term(t, 1000, {});
    REQUIRE(r.kind == LMachineResult::Kind::Final);
    const auto& fin = std::get<LConfiguration::Final>(r.last.mode);
    CHECK(std::get<Term::IntConst>(fin.answer.value->node).value == 2);
    Outcome o = evaluate_letrec(t, 1000);
    REQUIRE(o.kind == Outcome::Kind::Value);
    CHECK(alpha_equal_upto_bindings(*o.term, *lunload_answer(fin.answer)));
}

TEST_CASE("non-letrec programs run on the letrec machine") {
    LMachineResult r = lrun_term(P("(\\x.x) \\y.y"), 100);
    REQUIRE(r.kind == LMachineResult::Kind::Final);
    const auto& fin = std::get<LConfiguration::Final>(r.last.mode);
    CHECK(alpha_equal(*fin.answer.value, *P("\\y.y")));

    LMachineResult lt = lrun_term(P("let x = add1 0 in x"), 100);
    REQUIRE(lt.kind == LMachineResult::Kind::Final);
    CHECK(std::get<Term::IntConst>(
              std::get<LConfiguration::Final>(lt.last.mode).answer.value->node)
              .value == 1);
}

TEST_CASE("per-step soundness against step_letrec") {
    Gen g(8181);
    RunOptions opts;
    opts.keep_history = true;
    opts.check_wf = true;
    for (int i = 0; i < 60; i++) {
        TermPtr t = testutil::gen_letrec_program(g);
        LMachineResult r = lrun_term(t, 200, opts);
        CHECK(r.wf_failures.empty());
        for (size_t k = 0; k + 1 < r.history.size(); k++) {
            std::string why;
            bool sound = testutil::lstep_is_sound(r.history[k], r.history[k + 1],
                                                  r.tags[k], &why);
            if (!sound) {
                CAPTURE(print(t));
                CAPTURE(why);
                CAPTURE(lrender(r.history[k]));
                CAPTURE(lrender(r.history[k + 1]));
            }
            REQUIRE(sound);
        }
    }
}

TEST_CASE("letrec machine agrees with the letrec oracle") {
    Gen g(2718);
    int finals = 0, holes = 0;
    for (int i = 0; i < 80; i++) {
        TermPtr t = testutil::gen_letrec_program(g);
        RunOptions opts;
        opts.keep_history = true;
        LMachineResult m = lrun_term(t, 1000, opts);
        long contractions = 0;
        for (LTag tag : m.tags)
            if (is_lreduce_tag(tag)) contractions++;
        Outcome o = evaluate_letrec(t, contractions + 4);
        switch (m.kind) {
            case LMachineResult::Kind::Final: {
                REQUIRE(o.kind == Outcome::Kind::Value);
                const auto& fin = std::get<LConfiguration::Final>(m.last.mode);
                CHECK(alpha_equal_upto_bindings(*o.term, *lunload_answer(fin.answer)));
                finals++;
                break;
            }
            case LMachineResult::Kind::BlackHole:
                CHECK(o.kind == Outcome::Kind::Stuck);
                CHECK(o.reason.find("black hole") == 0);
                holes++;
                break;
            case LMachineResult::Kind::Stuck:
                CHECK(o.kind == Outcome::Kind::Stuck);
                break;
            case LMachineResult::Kind::OutOfFuel: break;
        }
    }
    CHECK(finals > 20);
    CHECK(holes > 3);
}

TEST_CASE("active variable distinctness preserved by every lstep") {
    Gen g(31415);
    RunOptions opts;
    opts.check_wf = true;
    for (int i = 0; i < 40; i++) {
        TermPtr t = testutil::gen_letrec_program(g);
        LMachineResult r = lrun_term(t, 300, opts);
        for (const auto& fail : r.wf_failures) CAPTURE(fail);
        CHECK(r.wf_failures.empty());
    }
}
