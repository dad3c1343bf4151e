#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "needle/syntax.hpp"

namespace needle {

enum class EngineKind { Oracle, Machine, Letrec, Simulate };

std::optional<EngineKind> engine_from_string(const std::string& s);
std::string engine_name(EngineKind k);

// A program/engine mismatch (letrec fed to an engine without letrec rules).
struct EngineMisuse : std::runtime_error {
    explicit EngineMisuse(const std::string& what) : std::runtime_error(what) {}
};

struct EngineResult {
    enum class Status { Value, OutOfFuel, Stuck };
    enum class Obs { Int, Lambda, Pair, None };

    Status status;
    TermPtr answer;  // unloaded answer term; null for the simulate engine
    Obs obs = Obs::None;
    long long int_value = 0;
    std::string message;  // stuck / error diagnostics
    long steps = 0;
    std::vector<std::pair<std::string, long>> stats;  // name -> value, in order
    std::vector<std::string> trace;  // initial line plus one line per step
};

struct EngineOptions {
    bool trace = false;
};

EngineResult run_engine(EngineKind kind, const TermPtr& term, long fuel,
                        const EngineOptions& opts = {});

struct CompareOutcome {
    bool agree = false;
    std::string summary;  // "AGREE: ..." or "DISAGREE: ..."
};

CompareOutcome compare_engines(EngineKind a, EngineKind b, const TermPtr& term,
                               long fuel);

}  // namespace needle
