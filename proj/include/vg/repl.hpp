#pragma once

// Turn summaries and the line-oriented interactive session.

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>

#include "vg/dot.hpp"
#include "vg/implicature.hpp"
#include "vg/scenario.hpp"

namespace vg {

/// One line describing what inference made of a turn, e.g.
/// "inefficient (3 vs 2): conjunctive goal ascribed: goal(expert, ...)".
inline std::string summarize(const ActInstance& act, const InferenceOutcome& o, const Domain& d) {
    if (act.hearer != d.self)
        return act.str() + ": not addressed to " + d.self;
    if (o.recognition_failed || !o.recognition)
        return act.str() + ": recognition failed: no candidate goal reachable";
    const auto& v = *o.verdict;
    std::string head = v.inefficient
                           ? "inefficient (" + std::to_string(v.cost_r) + " vs " + std::to_string(v.cost_o) + ")"
                           : "optimal (cost " + std::to_string(v.cost_r) + ")";
    head += ": recognized " + o.recognition->goal.str();
    switch (o.report.kind) {
    case AscriptionKind::conjunctive:
        return head + ": conjunctive goal ascribed: " + o.report.goal.str();
    case AscriptionKind::avoidance:
        return head + ": avoidance goal ascribed: " + o.report.goal.str();
    case AscriptionKind::none:
        break;
    }
    return v.inefficient ? head + ": no goal ascribed" : head;
}

inline void print_store(const BeliefStore& store, std::ostream& out) {
    for (const auto& [path, space] : store.spaces()) {
        out << path.str() << "\n";
        for (const auto& a : space)
            out << "  " << render(path, a).str() << "\n";
    }
}

/// Interactive session over `s`. The scenario's own turns run first.
/// Returns the process exit code.
inline int repl(const Scenario& s, std::istream& in, std::ostream& out, bool prompt = true) {
    RunResult state = run(s);
    for (std::size_t i = 0; i < state.outcomes.size(); ++i)
        out << summarize(ActInstance::from_term(s.turns[i]), state.outcomes[i], state.domain) << "\n";
    std::optional<Plan> last_plan;
    std::optional<Completion> last_completion;
    for (const auto& o : state.outcomes)
        if (o.recognition) {
            last_plan = o.recognition->plan;
            last_completion = o.report.completion;
        }
    std::string line;
    for (;;) {
        if (prompt)
            out << "> " << std::flush;
        if (!std::getline(in, line))
            return 0;
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            continue;
        line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
        if (line == ":quit")
            return 0;
        if (line == ":store") {
            print_store(state.store, out);
            continue;
        }
        if (line == ":trace") {
            out << emit_json(state.trace);
            continue;
        }
        if (line.rfind(":dot", 0) == 0) {
            std::string file = line.size() > 4 ? line.substr(4) : "";
            file.erase(0, file.find_first_not_of(' '));
            if (file.empty()) {
                out << "usage: :dot <file>\n";
            } else if (!last_plan) {
                out << "no recognized plan yet\n";
            } else {
                std::ofstream f(file);
                f << emit_dot(*last_plan, last_completion);
                out << (f ? "wrote " + file : "cannot write " + file) << "\n";
            }
            continue;
        }
        if (line.front() == ':') {
            out << "unknown command " << line << " (:store, :trace, :dot <file>, :quit)\n";
            continue;
        }
        try {
            ActInstance act = ActInstance::from_term(parse_term(line));
            schema_of(act);
            for (const auto& a : {act.speaker, act.hearer})
                if (std::find(s.agents.begin(), s.agents.end(), a) == s.agents.end())
                    throw ScenarioError("undeclared-agent", a);
            auto o = infer(state.store, act, state.domain, &state.trace);
            state.store = o.store;
            out << summarize(act, o, state.domain) << "\n";
            if (o.recognition) {
                last_plan = o.recognition->plan;
                last_completion = o.report.completion;
            }
        } catch (const ParseError& e) {
            out << "parse error: " << e.what() << "\n";
        } catch (const std::exception& e) {
            out << "error: " << e.what() << "\n";
        }
    }
}

} // namespace vg
