#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <sys/stat.h>

#include "CLI11.hpp"
#include "needle/engines.hpp"

using namespace needle;

namespace {

std::string read_stream(std::istream& in) {
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

// "-" reads stdin; an existing path reads the file; anything else is source.
std::string load_source(const std::string& arg) {
    if (arg == "-") return read_stream(std::cin);
    struct stat st{};
    if (stat(arg.c_str(), &st) == 0 && S_ISREG(st.st_mode)) {
        std::ifstream f(arg);
        return read_stream(f);
    }
    return arg;
}

long default_fuel() {
    if (const char* env = std::getenv("NEEDLE_FUEL")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v > 0) return v;
    }
    return 100000;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"needle: call-by-need evaluation laboratory"};
    app.get_formatter()->column_width(26);

    std::string engine_arg = "machine";
    std::string compare_arg;
    std::string term_arg;
    long fuel = default_fuel();
    bool trace = false;
    bool stats = false;

    app.add_option("--engine", engine_arg,
                   "evaluation engine: oracle | machine | letrec | simulate")
        ->capture_default_str();
    app.add_option("--compare", compare_arg,
                   "run a second engine and report agreement");
    app.add_option("--fuel", fuel, "step budget (env NEEDLE_FUEL sets the default)")
        ->capture_default_str();
    app.add_flag("--trace", trace, "print one line per machine step");
    app.add_flag("--stats", stats, "print run statistics");
    app.add_option("term", term_arg,
                   "program text, a file path, or - for stdin")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 3;
    }

    std::optional<EngineKind> engine = engine_from_string(engine_arg);
    if (!engine) {
        std::cerr << "unknown engine '" << engine_arg << "'\n";
        return 3;
    }
    std::optional<EngineKind> second;
    if (!compare_arg.empty()) {
        second = engine_from_string(compare_arg);
        if (!second) {
            std::cerr << "unknown engine '" << compare_arg << "'\n";
            return 3;
        }
    }

    TermPtr term;
    try {
        term = parse(load_source(term_arg));
    } catch (const SyntaxError& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
    if (!is_closed(*term)) {
        std::cerr << "program is not closed\n";
        return 3;
    }

    try {
        if (second) {
            CompareOutcome cmp = compare_engines(*engine, *second, term, fuel);
            std::cout << cmp.summary << "\n";
            return cmp.agree ? 0 : 1;
        }

        EngineOptions opts;
        opts.trace = trace;
        EngineResult r = run_engine(*engine, term, fuel, opts);

        if (trace) {
            long idx = 0;
            for (const auto& line : r.trace) {
                size_t tab = line.find('\t');
                std::string tag = line.substr(0, tab);
                std::string rendered = line.substr(tab + 1);
                std::ostringstream head;
                head << idx++ << "\t" << tag << "\t";
                std::cout << head.str() << rendered << "\n";
            }
        }

        int code = 0;
        switch (r.status) {
            case EngineResult::Status::Value:
                if (r.answer) {
                    std::cout << print(r.answer) << "\n";
                } else if (r.obs == EngineResult::Obs::Int) {
                    std::cout << r.int_value << "\n";
                } else if (r.obs == EngineResult::Obs::Lambda) {
                    std::cout << "<closure>\n";
                } else if (r.obs == EngineResult::Obs::Pair) {
                    std::cout << "<pair>\n";
                } else {
                    std::cout << "<value>\n";
                }
                code = 0;
                break;
            case EngineResult::Status::Stuck:
                std::cerr << r.message << "\n";
                code = 1;
                break;
            case EngineResult::Status::OutOfFuel:
                std::cerr << "out of fuel after " << r.steps << " steps\n";
                code = 2;
                break;
        }
        if (stats) {
            for (const auto& [key, value] : r.stats)
                std::cout << key << ": " << value << "\n";
        }
        return code;
    } catch (const EngineMisuse& e) {
        std::cerr << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
}
