#pragma once

#include <stdexcept>
#include <string>

#include "needle/control.hpp"
#include "needle/syntax.hpp"

namespace needle {

struct Untranslatable : std::runtime_error {
    explicit Untranslatable(const std::string& what)
        : std::runtime_error("untranslatable: " + what) {}
};

struct TranslateOptions {
    // Re-delay the original suspension instead of the memoized value when a
    // variable is resolved: call-by-name behavior, kept for the sharing
    // counters' sanity checks.
    bool by_name_need = false;
};

// Source variables become control variables of the same name, bound to
// prompts. The redex prompt is held by a reserved name the surface grammar
// cannot produce.
Name redex_prompt_name();

CTermPtr translate(const TermPtr& t, const TranslateOptions& opts = {});

// runCC (let s = newPrompt in pushPrompt s N[t])
CTermPtr translate_program(const TermPtr& t, const TranslateOptions& opts = {});

struct SimOutcome {
    enum class Kind { Value, OutOfFuel, Error };
    enum class Shape { Int, Closure, Pair, Bool, Unit, Prompt, SubCont, Unknown };

    Kind kind;
    Shape shape = Shape::Unknown;  // of the answer's value part
    long long int_value = 0;       // when shape == Int
    CValuePtr answer;              // full final value (the answer tuple)
    CValuePtr value_part;
    long steps = 0;
    std::string error;
    CStats stats;
};

SimOutcome simulate(const TermPtr& t, long fuel, const TranslateOptions& opts = {});

std::string shape_word(SimOutcome::Shape s);

}  // namespace needle
