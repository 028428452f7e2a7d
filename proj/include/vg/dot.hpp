#pragma once

// Graphviz rendering of a plan, optionally with a completion drawn dashed.
// Causal links are solid and labelled with their condition; ordering
// constraints not already implied by a link are dotted.

#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "vg/planner.hpp"

namespace vg {

namespace detail {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\')
            out += '\\';
        out += c;
    }
    return out;
}

inline std::string dot_node(StepId id) { return step_name(id); }

} // namespace detail

inline std::string emit_dot(const Plan& p, const std::optional<Completion>& overlay = std::nullopt) {
    using detail::dot_escape;
    using detail::dot_node;
    std::ostringstream out;
    out << "digraph plan {\n  rankdir=LR;\n  node [shape=box];\n";
    out << "  init [label=\"init\", shape=ellipse];\n";
    out << "  goal [label=\"goal\", shape=ellipse];\n";
    for (StepId id : linearize(p))
        out << "  " << dot_node(id) << " [label=\"" << dot_escape(p.step(id)->action().str()) << "\"];\n";
    std::set<std::pair<StepId, StepId>> linked;
    for (const auto& l : p.links) {
        linked.insert({l.producer, l.consumer});
        out << "  " << dot_node(l.producer) << " -> " << dot_node(l.consumer) << " [label=\""
            << dot_escape(l.condition.str()) << "\"];\n";
    }
    for (const auto& [a, b] : p.ordering)
        if (!linked.count({a, b}))
            out << "  " << dot_node(a) << " -> " << dot_node(b) << " [style=dotted];\n";
    if (overlay && !overlay->actions.empty()) {
        StepId entry = kInitStep;
        for (const auto& s : asserted_states(p))
            if (unifiable(s.state, overlay->entry_state)) {
                entry = s.producer;
                break;
            }
        std::string prev = dot_node(entry);
        std::string edge_label = overlay->entry_state.str();
        for (std::size_t i = 0; i < overlay->actions.size(); ++i) {
            std::string n = "c" + std::to_string(i + 1);
            out << "  " << n << " [label=\"" << dot_escape(overlay->actions[i].head().str()) << "\", style=dashed];\n";
            out << "  " << prev << " -> " << n << " [label=\"" << dot_escape(edge_label) << "\", style=dashed];\n";
            prev = n;
            edge_label.clear();
        }
        out << "  extra_goal [label=\"" << dot_escape(overlay->achieved_goal.str())
            << "\", shape=ellipse, style=dashed];\n";
        out << "  " << prev << " -> extra_goal [style=dashed];\n";
    }
    out << "}\n";
    return out.str();
}

} // namespace vg
