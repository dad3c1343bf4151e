#include "needle/engines.hpp"


#include "needle/control.hpp"
#include "needle/letrec_machine.hpp"
#include "needle/machine.hpp"
#include "needle/oracle.hpp"
#include "needle/translator.hpp"

namespace needle {

std::optional<EngineKind> engine_from_string(const std::string& s) {
    if (s == "oracle") return EngineKind::Oracle;
    if (s == "machine") return EngineKind::Machine;
    if (s == "letrec") return EngineKind::Letrec;
    if (s == "simulate") return EngineKind::Simulate;
    return std::nullopt;
}

std::string engine_name(EngineKind k) {
    switch (k) {
        case EngineKind::Oracle: return "oracle";
        case EngineKind::Machine: return "machine";
        case EngineKind::Letrec: return "letrec";
        case EngineKind::Simulate: return "simulate";
    }
    return "?";
}

namespace {

// Strip answer bindings down to the underlying value.
const Term* answer_value(const Term* t) {
    for (;;) {
        if (const auto* a = std::get_if<Term::App>(&t->node)) {
            if (const auto* l = std::get_if<Term::Lam>(&a->fun->node)) {
                t = l->body.get();
                continue;
            }
        }
        if (const auto* lr = std::get_if<Term::Letrec>(&t->node)) {
            t = lr->body.get();
            continue;
        }
        return t;
    }
}

void observe_term(EngineResult& r) {
    if (!r.answer) return;
    const Term* v = answer_value(r.answer.get());
    if (const auto* n = std::get_if<Term::IntConst>(&v->node)) {
        r.obs = EngineResult::Obs::Int;
        r.int_value = n->value;
    } else if (std::holds_alternative<Term::Lam>(v->node)) {
        r.obs = EngineResult::Obs::Lambda;
    } else if (std::holds_alternative<Term::PairVal>(v->node)) {
        r.obs = EngineResult::Obs::Pair;
    }
}

EngineResult run_oracle(const TermPtr& term, long fuel, const EngineOptions& opts) {
    EngineResult r;
    bool rec = contains_letrec(*term);
    if (opts.trace) {
        // replay step by step so each contraction gets a trace line
        TermPtr cur = term;
        r.trace.push_back("-\t" + print(cur));
        for (long i = 0; i < fuel; i++) {
            if (rec) {
                LetrecStep s = step_letrec(cur);
                if (s.kind != LetrecStep::Kind::Stepped) break;
                cur = s.term;
            } else {
                StepResult s = step_sr(cur);
                if (s.kind != StepResult::Kind::Stepped) break;
                cur = s.term;
            }
            r.trace.push_back("step\t" + print(cur));
        }
    }
    Outcome o = rec ? evaluate_letrec(term, fuel) : evaluate_sr(term, fuel);
    r.steps = o.steps;
    r.stats = {{"steps", o.steps}, {"delta", o.delta_count}};
    switch (o.kind) {
        case Outcome::Kind::Value:
            r.status = EngineResult::Status::Value;
            r.answer = o.term;
            observe_term(r);
            break;
        case Outcome::Kind::OutOfFuel:
            r.status = EngineResult::Status::OutOfFuel;
            r.answer = o.term;
            break;
        case Outcome::Kind::Stuck:
            r.status = EngineResult::Status::Stuck;
            r.answer = o.term;
            r.message = o.reason;
            break;
    }
    return r;
}

EngineResult run_machine(const TermPtr& term, long fuel, const EngineOptions& opts) {
    if (contains_letrec(*term))
        throw EngineMisuse("letrec programs need --engine letrec (or oracle)");
    EngineResult r;
    RunOptions mo;
    mo.trace = opts.trace;
    MachineResult m = run_term(term, fuel, mo);
    r.steps = m.stats.steps;
    r.stats = {{"steps", m.stats.steps},
               {"delta", m.stats.delta_count},
               {"fresh", m.stats.fresh_count},
               {"max-depth", (long)m.stats.max_context_depth}};
    for (const auto& line : m.trace) r.trace.push_back(line.tag + "\t" + line.rendered);
    switch (m.kind) {
        case MachineResult::Kind::Final:
            r.status = EngineResult::Status::Value;
            r.answer = unload(m.last);
            observe_term(r);
            break;
        case MachineResult::Kind::OutOfFuel:
            r.status = EngineResult::Status::OutOfFuel;
            break;
        case MachineResult::Kind::Stuck:
            r.status = EngineResult::Status::Stuck;
            r.message = m.stuck_reason;
            break;
    }
    return r;
}

EngineResult run_letrec(const TermPtr& term, long fuel, const EngineOptions& opts) {
    EngineResult r;
    RunOptions mo;
    mo.trace = opts.trace;
    LMachineResult m = lrun_term(term, fuel, mo);
    r.steps = m.stats.steps;
    r.stats = {{"steps", m.stats.steps},
               {"delta", m.stats.delta_count},
               {"fresh", m.stats.fresh_count},
               {"max-depth", (long)m.stats.max_context_depth}};
    for (const auto& line : m.trace) r.trace.push_back(line.tag + "\t" + line.rendered);
    switch (m.kind) {
        case LMachineResult::Kind::Final:
            r.status = EngineResult::Status::Value;
            r.answer = lunload(m.last);
            observe_term(r);
            break;
        case LMachineResult::Kind::OutOfFuel:
            r.status = EngineResult::Status::OutOfFuel;
            break;
        case LMachineResult::Kind::BlackHole:
            r.status = EngineResult::Status::Stuck;
            r.message = m.stuck_reason;
            break;
        case LMachineResult::Kind::Stuck:
            r.status = EngineResult::Status::Stuck;
            r.message = m.stuck_reason;
            break;
    }
    return r;
}

EngineResult run_simulate(const TermPtr& term, long fuel, const EngineOptions& opts) {
    if (contains_letrec(*term))
        throw EngineMisuse("the control simulation has no letrec translation");
    EngineResult r;
    if (opts.trace) {
        CRunOptions co;
        co.trace = true;
        COutcome run = crun(translate_program(term), fuel, co);
        for (size_t i = 0; i < run.trace.size(); i++)
            r.trace.push_back((i ? "step\t" : "-\t") + run.trace[i]);
    }
    SimOutcome o = simulate(term, fuel);
    r.steps = o.steps;
    long entries = 0;
    for (const auto& [_, n] : o.stats.thunk_entries) entries += n;
    r.stats = {{"steps", o.steps},
               {"prompts", o.stats.prompts},
               {"thunk-entries", entries}};
    switch (o.kind) {
        case SimOutcome::Kind::Value:
            r.status = EngineResult::Status::Value;
            switch (o.shape) {
                case SimOutcome::Shape::Int:
                    r.obs = EngineResult::Obs::Int;
                    r.int_value = o.int_value;
                    break;
                case SimOutcome::Shape::Closure:
                    r.obs = EngineResult::Obs::Lambda;
                    break;
                case SimOutcome::Shape::Pair:
                    r.obs = EngineResult::Obs::Pair;
                    break;
                default: break;
            }
            break;
        case SimOutcome::Kind::OutOfFuel:
            r.status = EngineResult::Status::OutOfFuel;
            break;
        case SimOutcome::Kind::Error:
            r.status = EngineResult::Status::Stuck;
            r.message = o.error;
            break;
    }
    return r;
}

std::string obs_show(const EngineResult& r) {
    switch (r.obs) {
        case EngineResult::Obs::Int: return std::to_string(r.int_value);
        case EngineResult::Obs::Lambda: return "<lambda>";
        case EngineResult::Obs::Pair: return "<pair>";
        case EngineResult::Obs::None: return "<none>";
    }
    return "?";
}

std::string status_show(const EngineResult& r) {
    switch (r.status) {
        case EngineResult::Status::Value:
            return r.answer ? print(r.answer) : obs_show(r);
        case EngineResult::Status::OutOfFuel: return "out of fuel";
        case EngineResult::Status::Stuck: return "stuck: " + r.message;
    }
    return "?";
}

}  // namespace

EngineResult run_engine(EngineKind kind, const TermPtr& term, long fuel,
                        const EngineOptions& opts) {
    switch (kind) {
        case EngineKind::Oracle: return run_oracle(term, fuel, opts);
        case EngineKind::Machine: return run_machine(term, fuel, opts);
        case EngineKind::Letrec: return run_letrec(term, fuel, opts);
        case EngineKind::Simulate: return run_simulate(term, fuel, opts);
    }
    throw std::logic_error("unknown engine");
}

CompareOutcome compare_engines(EngineKind a, EngineKind b, const TermPtr& term,
                               long fuel) {
    EngineResult ra = run_engine(a, term, fuel);
    EngineResult rb = run_engine(b, term, fuel);
    CompareOutcome out;
    auto disagree = [&]() {
        out.agree = false;
        out.summary = "DISAGREE: " + engine_name(a) + " -> " + status_show(ra) +
                      " | " + engine_name(b) + " -> " + status_show(rb);
        return out;
    };
    if (ra.status != rb.status) return disagree();
    if (ra.status == EngineResult::Status::OutOfFuel) {
        out.agree = true;
        out.summary = "AGREE: out of fuel";
        return out;
    }
    if (ra.status == EngineResult::Status::Stuck) {
        out.agree = true;
        out.summary = "AGREE: stuck";
        return out;
    }
    if (ra.answer && rb.answer) {
        if (!alpha_equal_upto_bindings(*ra.answer, *rb.answer)) return disagree();
        out.agree = true;
        out.summary = "AGREE: " + print(ra.answer);
        return out;
    }
    // a simulate side: compare on ground observables only
    if (ra.obs != rb.obs) return disagree();
    if (ra.obs == EngineResult::Obs::Int && ra.int_value != rb.int_value)
        return disagree();
    out.agree = true;
    out.summary = "AGREE: " + obs_show(ra);
    return out;
}

}  // namespace needle
