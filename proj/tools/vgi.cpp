// vgi: run, check or interactively explore a dialogue scenario.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "vg/dot.hpp"
#include "vg/repl.hpp"
#include "vg/scenario.hpp"

namespace {

enum Exit { ok = 0, scenario_error = 1, internal_error = 2 };

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw vg::ScenarioError("io", "cannot read " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

bool write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    return static_cast<bool>(f);
}

template <class F>
int guarded(F&& body) {
    try {
        return body();
    } catch (const vg::ParseError& e) {
        std::cerr << "parse error at " << e.what() << "\n";
        return scenario_error;
    } catch (const vg::ScenarioError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return scenario_error;
    } catch (const vg::ContradictionError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return scenario_error;
    } catch (const vg::DepthError& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return scenario_error;
    } catch (const vg::InvalidAttitude& e) {
        std::cerr << "scenario error: " << e.what() << "\n";
        return scenario_error;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return internal_error;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recognize dialogue plans and ascribe implicit goals"};
    app.require_subcommand(1);

    std::string file, trace_out, dot_out;
    std::size_t bound = 0;
    bool strict = false;

    auto* run = app.add_subcommand("run", "Run every turn of a scenario");
    run->add_option("file", file, "scenario (.vgs)")->required();
    run->add_option("--trace", trace_out, "write the JSON trace here");
    run->add_option("--dot", dot_out, "write the last recognized plan as DOT here");
    run->add_option("--bound", bound, "planning bound (action steps)")->check(CLI::PositiveNumber);
    run->add_flag("--strict", strict, "stop at the first failing turn");

    auto* repl = app.add_subcommand("repl", "Load a scenario and enter acts interactively");
    repl->add_option("file", file, "scenario (.vgs)")->required();

    auto* check = app.add_subcommand("check", "Parse and validate a scenario");
    check->add_option("file", file, "scenario (.vgs)")->required();

    CLI11_PARSE(app, argc, argv);

    if (*check) {
        return guarded([&] {
            auto s = vg::load_scenario(slurp(file));
            std::cout << "ok: " << s.agents.size() << " agents, " << s.turns.size() << " turns\n";
            return static_cast<int>(ok);
        });
    }
    if (*repl) {
        return guarded([&] {
            auto s = vg::load_scenario(slurp(file));
            return vg::repl(s, std::cin, std::cout);
        });
    }
    return guarded([&] {
        auto s = vg::load_scenario(slurp(file));
        vg::RunOptions opts;
        if (bound)
            opts.bound = bound;
        if (strict)
            opts.strict = true;
        auto r = vg::run(s, opts);
        const vg::Plan* last = nullptr;
        std::optional<vg::Completion> overlay;
        for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
            std::cout << vg::summarize(vg::ActInstance::from_term(s.turns[i]), r.outcomes[i], r.domain) << "\n";
            if (r.outcomes[i].recognition) {
                last = &r.outcomes[i].recognition->plan;
                overlay = r.outcomes[i].report.completion;
            }
        }
        for (const auto* e : r.trace.of_kind("error"))
            if (e->module == "scenario")
                std::cerr << "turn " << e->data.at("turn").get<std::size_t>() << ": " << e->data.at("message").get<std::string>() << "\n";
        if (!trace_out.empty() && !write_file(trace_out, vg::emit_json(r.trace))) {
            std::cerr << "cannot write " << trace_out << "\n";
            return static_cast<int>(scenario_error);
        }
        if (!dot_out.empty()) {
            if (!last) {
                std::cerr << "no recognized plan to draw\n";
                return static_cast<int>(scenario_error);
            }
            if (!write_file(dot_out, vg::emit_dot(*last, overlay))) {
                std::cerr << "cannot write " << dot_out << "\n";
                return static_cast<int>(scenario_error);
            }
        }
        return static_cast<int>(r.halted ? scenario_error : ok);
    });
}
