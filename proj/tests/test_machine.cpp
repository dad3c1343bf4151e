#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "testutil.hpp"

using namespace needle;
using testutil::Gen;
using testutil::P;

TEST_CASE("inject") {
    Configuration c = inject(P("(\\x.x) \\y.y"));
    CHECK(render(c) == "<{} | [], (\\x.x) \\y.y>_f");
    CHECK(render(inject(P("\\x.x"))) == "<{} | [], \\x.x>_f");
    CHECK_THROWS_AS((void)inject(mk_var(Name("x"))), std::invalid_argument);
}

TEST_CASE("golden trace for (\\x.x) \\y.y") {
    RunOptions opts;
    opts.trace = true;
    opts.keep_history = true;
    opts.check_wf = true;
    MachineResult r = run_term(P("(\\x.x) \\y.y"), 100, opts);
    REQUIRE(r.kind == MachineResult::Kind::Final);
    CHECK(r.stats.steps == 10);
    CHECK(r.wf_failures.empty());

    std::vector<std::string> tags;
    for (RuleTag t : r.tags) tags.push_back(tag_name(t));
    std::vector<std::string> expect = {"F.3", "F.2", "B.2", "D.2", "F.1",
                                       "N.1", "F.2", "B.3", "D.1", "B.1"};
    CHECK(tags == expect);

    std::vector<std::string> rendered;
    for (const auto& line : r.trace) rendered.push_back(line.rendered);
    std::vector<std::string> expect_lines = {
        "<{} | [], (\\x.x) \\y.y>_f",
        "<{} | [[] \\y.y], \\x.x>_f",
        "<{} | [[] \\y.y], \\x.x>_b",
        "<{} | [], <[], \\x.x> \\y.y>_d",
        "<{x} | [(\\x.[]) \\y.y], x>_f",
        "<{x} | [(\\x.[]) \\y.y], x>_n",
        "<{x} | [(kx.[]) []], \\y.y>_f",
        "<{x} | [(kx.[]) []], \\y.y>_b",
        "<{x} | [], (kx.[]) <[], \\y.y>>_d",
        "<{x} | [(\\x.[]) \\y.y], \\y.y>_b",
        "<{x} | <[(\\x.[]) \\y.y], \\y.y>>",
    };
    CHECK(rendered == expect_lines);

    CHECK(alpha_equal(*unload(r.last), *P("(\\x.\\y.y) \\y.y")));
}

TEST_CASE("run examples") {
    MachineResult r1 = run_term(P("\\x.x"), 10);
    CHECK(r1.kind == MachineResult::Kind::Final);
    CHECK(r1.stats.steps == 2);  // F.2 then B.1
    CHECK(render(r1.last) == "<{} | <[], \\x.x>>");

    MachineResult r2 = run_term(P("let x = add1 0 in x"), 100);
    REQUIRE(r2.kind == MachineResult::Kind::Final);
    const auto& fin = std::get<Configuration::Final>(r2.last.mode);
    CHECK(std::get<Term::IntConst>(fin.answer.value->node).value == 1);
    CHECK(r2.stats.delta_count == 1);

    MachineResult omega = run_term(P("(\\x.x x) (\\x.x x)"), 200);
    CHECK(omega.kind == MachineResult::Kind::OutOfFuel);
}

TEST_CASE("stuck machine states") {
    CHECK(run_term(P("1 2"), 50).kind == MachineResult::Kind::Stuck);
    CHECK(run_term(P("add1 (\\x.x)"), 50).kind == MachineResult::Kind::Stuck);
    CHECK(run_term(P("car 7"), 50).kind == MachineResult::Kind::Stuck);
    CHECK(run_term(P("letrec a = a in a"), 50).kind == MachineResult::Kind::Stuck);
}

TEST_CASE("unload") {
    // <[[] \y.y], \x.x>_f -> (\x.x) \y.y
    Configuration c{{},
                    Configuration::Refocus{
                        {Frame{Frame::Operand{P("\\y.y")}}}, P("\\x.x")}};
    CHECK(term_equal(*unload(c), *P("(\\x.x) \\y.y")));

    Configuration id = inject(P("(\\x.x) \\y.y"));
    CHECK(term_equal(*unload(id), *P("(\\x.x) \\y.y")));

    MachineResult r = run_term(P("(\\x.x) \\y.y"), 100);
    CHECK(alpha_equal(*unload(r.last), *P("(\\x.\\y.y) \\y.y")));
}

TEST_CASE("av / cv / fv on contexts") {
    CHECK(av({}).empty());

    Context binder{Frame{Frame::Binder{Name("x"), P("\\w.w")}}};
    CHECK(cv(binder) == NameSet{Name("x")});
    CHECK(av(binder) == NameSet{Name("x")});

    Context inner{Frame{Frame::Binder{Name("y"), P("0")}}};
    Context withCont{Frame{Frame::ContFrame{Name("x"), inner}}};
    CHECK(av(withCont) == NameSet{Name("x"), Name("y")});
    CHECK(cv(withCont).empty());  // cont frames capture nothing

    Context open{Frame{Frame::Operand{mk_var(Name("z"))}}};
    CHECK(fv_ctx(open) == NameSet{Name("z")});
    // binder scopes over the frames inside it
    Context scoped{Frame{Frame::Binder{Name("z"), P("1")}},
                   Frame{Frame::Operand{mk_var(Name("z"))}}};
    CHECK(fv_ctx(scoped).empty());
}

TEST_CASE("check_wf examples") {
    CHECK(check_wf(inject(P("(\\x.x) \\y.y"))).ok);

    // duplicate active variable
    Configuration dup{{Name("x")},
                      Configuration::Need{
                          {Frame{Frame::Binder{Name("x"), P("1")}},
                           Frame{Frame::Binder{Name("x"), P("2")}}},
                          Name("x")}};
    WfReport w = check_wf(dup);
    CHECK_FALSE(w.ok);
    bool found = false;
    for (const auto& v : w.violations)
        if (v.find("duplicate active variable") != std::string::npos) found = true;
    CHECK(found);

    // free context variable
    Configuration open{{},
                       Configuration::Refocus{
                           {Frame{Frame::Operand{mk_var(Name("y"))}}}, P("\\x.x")}};
    WfReport w2 = check_wf(open);
    CHECK_FALSE(w2.ok);
    bool found2 = false;
    for (const auto& v : w2.violations)
        if (v.find("free context variable") != std::string::npos) found2 = true;
    CHECK(found2);
}

TEST_CASE("hygiene: D.2 renames clashing binders") {
    // \w goes under D.2 twice, so the second entry must rename w
    MachineResult r = run_term(P("(\\f.f (f 0)) (\\w.add1 w)"), 1000, {});
    REQUIRE(r.kind == MachineResult::Kind::Final);
    CHECK(r.stats.fresh_count >= 1);
    const auto& fin = std::get<Configuration::Final>(r.last.mode);
    CHECK(std::get<Term::IntConst>(fin.answer.value->node).value == 2);
}

TEST_CASE("per-step soundness and wf preservation on random corpus") {
    Gen g(1337);
    RunOptions opts;
    opts.keep_history = true;
    opts.check_wf = true;
    long reduce_steps = 0;
    for (int i = 0; i < 80; i++) {
        TermPtr t = g.core(3 + g.pick(12));
        MachineResult r = run_term(t, 300, opts);
        CHECK(r.wf_failures.empty());
        for (size_t k = 0; k + 1 < r.history.size(); k++) {
            std::string why;
            bool sound =
                testutil::step_is_sound(r.history[k], r.history[k + 1], r.tags[k], &why);
            if (!sound) {
                CAPTURE(print(t));
                CAPTURE(why);
                CAPTURE(render(r.history[k]));
            }
            REQUIRE(sound);
            if (is_reduce_tag(r.tags[k])) reduce_steps++;
        }
    }
    CHECK(reduce_steps > 100);
}

TEST_CASE("machine agrees with the oracle on the corpus") {
    Gen g(5150);
    int values = 0;
    for (int i = 0; i < 120; i++) {
        TermPtr t = (i % 2) ? g.core(3 + g.pick(12)) : g.extended(3 + g.pick(10));
        if (contains_letrec(*t)) continue;
        RunOptions opts;
        opts.keep_history = true;
        MachineResult m = run_term(t, 2000, opts);
        long contractions = 0;
        for (RuleTag tag : m.tags)
            if (is_reduce_tag(tag)) contractions++;
        if (m.kind == MachineResult::Kind::Final) {
            Outcome o = evaluate_sr(t, contractions + 2);
            REQUIRE(o.kind == Outcome::Kind::Value);
            CHECK(alpha_equal(*o.term, *unload(m.last)));
            values++;
        } else if (m.kind == MachineResult::Kind::OutOfFuel) {
            Outcome o = evaluate_sr(t, contractions);
            CHECK(o.kind == Outcome::Kind::OutOfFuel);
        } else {
            Outcome o = evaluate_sr(t, contractions + 2);
            CHECK(o.kind == Outcome::Kind::Stuck);
        }
    }
    CHECK(values > 20);
}

TEST_CASE("sharing: memoized binding computes once") {
    // q = x is demanded once; the add1 0 under x contracts exactly once
    MachineResult r = run_term(P("let x = add1 0 in (\\p.\\q.q) x x"), 1000);
    REQUIRE(r.kind == MachineResult::Kind::Final);
    CHECK(r.stats.delta_count == 1);

    // demanding the same binding twice computes its rhs once: the shared
    // program does strictly less reduction work than its textual expansion
    auto reduce_count = [](const std::string& src) {
        RunOptions opts;
        opts.keep_history = true;
        MachineResult m = run_term(P(src), 2000, opts);
        REQUIRE(m.kind == MachineResult::Kind::Final);
        long n = 0;
        for (RuleTag tag : m.tags)
            if (is_reduce_tag(tag)) n++;
        return n;
    };
    std::string rhs = "(\\i.i) ((\\i.i) ((\\i.i) ((\\i.i) (\\w.add1 w))))";
    long shared = reduce_count("let g = " + rhs + " in g (g 0)");
    long copied = reduce_count("(" + rhs + ") ((" + rhs + ") 0)");
    CHECK(shared < copied);
}

TEST_CASE("context algebra: plugging distributes over composition") {
    Gen g(11);
    RunOptions opts;
    opts.keep_history = true;
    auto U = [](Context E, TermPtr t) {
        return unload(Configuration{{}, Configuration::Refocus{std::move(E), t}});
    };
    for (int i = 0; i < 20; i++) {
        TermPtr t = g.core(4 + g.pick(10));
        MachineResult r = run_term(t, 100, opts);
        for (const Configuration& c : r.history) {
            const auto* m = std::get_if<Configuration::Refocus>(&c.mode);
            if (!m || m->ctx.empty()) continue;
            size_t cut = g.pick((int)m->ctx.size() + 1);
            Context e1(m->ctx.begin(), m->ctx.begin() + cut);
            Context e2(m->ctx.begin() + cut, m->ctx.end());
            CHECK(term_equal(*U(m->ctx, m->term), *U(e1, U(e2, m->term))));
        }
    }
}

TEST_CASE("trace line count is steps plus one") {
    RunOptions opts;
    opts.trace = true;
    MachineResult r = run_term(P("(\\x.x) ((\\y.y) \\z.z)"), 500, opts);
    CHECK((long)r.trace.size() == r.stats.steps + 1);
}
