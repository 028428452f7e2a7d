#pragma once

// Scenario files (.vgs): S-expression sections holding canonical terms.
//
//   (agents system expert)
//   (stereotype computer_expert (member expert) (trigger planned)
//     (attitude goal(not(damage(hard_drive))))
//     (goal-template goal(?self, bel(?, cause(switch(?, computer_off), damage(hard_drive))))))
//   (believes (system expert) bel(p))
//   (reliable expert permission)
//   (action switch)
//   (operator name (params ?a ?b) (actor ?a) (pre ...) (add ...) (del ...) (constraint ...))
//   (rule name (if ...) (then ...))
//   (goal goal(?self, X))
//   (avoid blamed(?self))
//   (turn inform(expert, system, p))
//   (config bound 8)
//
// Inside a section a name immediately followed by '(' starts a compound
// term; ';' comments run to end of line.

#include <cctype>
#include <cstddef>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vg/belief_store.hpp"
#include "vg/dialogue_acts.hpp"
#include "vg/implicature.hpp"
#include "vg/planner.hpp"
#include "vg/term.hpp"
#include "vg/trace.hpp"

namespace vg {

class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct ScenarioConfig {
    std::size_t bound = 8;
    std::size_t inference_cap = 8;
    bool strict = false;
    bool alternate = true;
    AscriptionOrder order = AscriptionOrder::conjunctive_first;

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct Scenario {
    std::vector<std::string> agents;
    std::vector<Stereotype> stereotypes;
    std::vector<std::pair<ViewpointPath, Attitude>> beliefs;
    std::vector<std::pair<std::string, std::string>> reliable;
    std::vector<std::string> actions;
    std::vector<Operator> operators;
    std::vector<Operator> rules;
    std::vector<Term> goals;
    std::vector<Term> avoid;
    std::vector<Term> turns;
    ScenarioConfig config;

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

namespace sexp {

struct Node {
    bool is_list = false;
    std::string text;  // term text for leaves
    std::vector<Node> items;
    std::size_t line = 1;
    std::size_t column = 1;

    const std::string& head() const {
        if (!is_list || items.empty() || items.front().is_list)
            throw ParseError(line, column, "expected (keyword ...)");
        return items.front().text;
    }
};

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    std::vector<Node> read_all() {
        std::vector<Node> out;
        for (;;) {
            skip();
            if (at_end())
                return out;
            if (peek() != '(')
                fail("expected '(' to start a section");
            out.push_back(read());
        }
    }

private:
    Node read() {
        skip();
        Node n;
        n.line = line_;
        n.column = column_;
        if (at_end())
            fail("unexpected end of input");
        if (peek() == '(') {
            n.is_list = true;
            advance();
            for (;;) {
                skip();
                if (at_end())
                    throw ParseError(n.line, n.column, "unclosed '('");
                if (peek() == ')') {
                    advance();
                    return n;
                }
                n.items.push_back(read());
            }
        }
        if (peek() == ')')
            fail("unexpected ')'");
        // A leaf: a name or variable, optionally followed directly by a
        // parenthesized argument list.
        std::size_t start = pos_;
        if (peek() == '?')
            advance();
        while (!at_end() && (detail::is_name_char(peek()) || peek() == '-'))
            advance();
        if (pos_ == start)
            fail(std::string("unexpected character '") + peek() + "'");
        if (!at_end() && peek() == '(') {
            int depth = 0;
            do {
                if (at_end())
                    throw ParseError(n.line, n.column, "unterminated term");
                if (peek() == '(')
                    ++depth;
                else if (peek() == ')')
                    --depth;
                else if (peek() == ';')
                    fail("comment inside a term");
                advance();
            } while (depth > 0);
        }
        n.text = std::string(text_.substr(start, pos_ - start));
        return n;
    }

    void skip() {
        while (!at_end()) {
            if (std::isspace(static_cast<unsigned char>(peek()))) {
                advance();
            } else if (peek() == ';') {
                while (!at_end() && peek() != '\n')
                    advance();
            } else {
                break;
            }
        }
    }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, column_, msg); }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t column_ = 1;
};

} // namespace sexp

namespace detail {

class ScenarioParser {
public:
    Scenario parse(std::string_view text) {
        auto sections = sexp::Reader(text).read_all();
        Scenario s;
        bool have_agents = false;
        for (const auto& sec : sections) {
            const std::string& kw = sec.head();
            if (kw == "agents") {
                if (have_agents)
                    throw ParseError(sec.line, sec.column, "duplicate agents section");
                have_agents = true;
                for (std::size_t i = 1; i < sec.items.size(); ++i)
                    s.agents.push_back(atom_of(sec.items[i]));
                if (s.agents.empty())
                    throw ParseError(sec.line, sec.column, "agents section is empty");
            } else if (kw == "stereotype") {
                s.stereotypes.push_back(stereotype(sec));
            } else if (kw == "believes") {
                expect_size(sec, 3);
                const auto& p = sec.items[1];
                if (!p.is_list || p.items.empty())
                    throw ParseError(p.line, p.column, "expected a viewpoint path like (system expert)");
                std::vector<std::string> agents;
                for (const auto& a : p.items)
                    agents.push_back(atom_of(a));
                s.beliefs.emplace_back(ViewpointPath(agents), attitude(sec.items[2]));
            } else if (kw == "reliable") {
                expect_size(sec, 3);
                s.reliable.emplace_back(atom_of(sec.items[1]), atom_of(sec.items[2]));
            } else if (kw == "action") {
                for (std::size_t i = 1; i < sec.items.size(); ++i)
                    s.actions.push_back(atom_of(sec.items[i]));
            } else if (kw == "operator") {
                s.operators.push_back(op(sec));
            } else if (kw == "rule") {
                s.rules.push_back(rule(sec));
            } else if (kw == "goal") {
                expect_size(sec, 2);
                s.goals.push_back(term(sec.items[1]));
            } else if (kw == "avoid") {
                expect_size(sec, 2);
                s.avoid.push_back(term(sec.items[1]));
            } else if (kw == "turn") {
                expect_size(sec, 2);
                s.turns.push_back(term(sec.items[1]));
            } else if (kw == "config") {
                expect_size(sec, 3);
                config(s.config, sec);
            } else {
                throw ParseError(sec.line, sec.column, "unknown section '" + kw + "'");
            }
        }
        if (!have_agents)
            throw ParseError(1, 1, "missing agents section");
        return s;
    }

private:
    Term term(const sexp::Node& n) {
        if (n.is_list)
            throw ParseError(n.line, n.column, "expected a term, found a list");
        return parse_term(n.text, n.line, n.column, &anon_);
    }

    std::string atom_of(const sexp::Node& n) {
        Term t = term(n);
        if (!t.is_atom())
            throw ParseError(n.line, n.column, "expected a name, found " + t.str());
        return t.name();
    }

    Attitude attitude(const sexp::Node& n) {
        Term t = term(n);
        try {
            return Attitude::from_term(t);
        } catch (const std::invalid_argument& e) {
            throw ParseError(n.line, n.column, e.what());
        }
    }

    static void expect_size(const sexp::Node& n, std::size_t k) {
        if (n.items.size() != k)
            throw ParseError(n.line, n.column,
                             "(" + n.head() + " ...) takes " + std::to_string(k - 1) + " argument(s)");
    }

    std::vector<Term> terms(const sexp::Node& n) {
        std::vector<Term> out;
        for (std::size_t i = 1; i < n.items.size(); ++i)
            out.push_back(term(n.items[i]));
        return out;
    }

    Stereotype stereotype(const sexp::Node& sec) {
        if (sec.items.size() < 2)
            throw ParseError(sec.line, sec.column, "stereotype needs a name");
        Stereotype st;
        st.name = atom_of(sec.items[1]);
        for (std::size_t i = 2; i < sec.items.size(); ++i) {
            const auto& f = sec.items[i];
            const std::string& kw = f.head();
            if (kw == "member") {
                for (std::size_t j = 1; j < f.items.size(); ++j)
                    st.members.push_back(atom_of(f.items[j]));
            } else if (kw == "trigger") {
                expect_size(f, 2);
                std::string t = atom_of(f.items[1]);
                if (t == "planned")
                    st.trigger = StereotypeTrigger::planned;
                else if (t == "immediate")
                    st.trigger = StereotypeTrigger::immediate;
                else
                    throw ParseError(f.line, f.column, "trigger must be planned or immediate");
            } else if (kw == "attitude") {
                expect_size(f, 2);
                st.attitudes.push_back(attitude(f.items[1]));
            } else if (kw == "goal-template") {
                expect_size(f, 2);
                st.goal_library.push_back(term(f.items[1]));
            } else {
                throw ParseError(f.line, f.column, "unknown stereotype field '" + kw + "'");
            }
        }
        return st;
    }

    Operator op(const sexp::Node& sec) {
        if (sec.items.size() < 2)
            throw ParseError(sec.line, sec.column, "operator needs a name");
        Operator o;
        o.name = atom_of(sec.items[1]);
        for (std::size_t i = 2; i < sec.items.size(); ++i) {
            const auto& f = sec.items[i];
            const std::string& kw = f.head();
            auto ts = terms(f);
            if (kw == "params")
                o.params = ts;
            else if (kw == "actor") {
                expect_size(f, 2);
                o.actor = ts.front();
            } else if (kw == "pre")
                o.pre = ts;
            else if (kw == "add")
                o.add = ts;
            else if (kw == "del")
                o.del = ts;
            else if (kw == "constraint")
                o.constraints.insert(o.constraints.end(), ts.begin(), ts.end());
            else
                throw ParseError(f.line, f.column, "unknown operator field '" + kw + "'");
        }
        if (o.actor.empty())
            throw ParseError(sec.line, sec.column, "operator " + o.name + " needs an (actor ...)");
        try {
            o.validate();
        } catch (const std::invalid_argument& e) {
            throw ParseError(sec.line, sec.column, e.what());
        }
        return o;
    }

    Operator rule(const sexp::Node& sec) {
        if (sec.items.size() != 4)
            throw ParseError(sec.line, sec.column, "rule takes a name, (if ...) and (then ...)");
        const auto& c = sec.items[2];
        const auto& t = sec.items[3];
        if (c.head() != "if" || t.head() != "then")
            throw ParseError(sec.line, sec.column, "rule takes (if ...) then (then ...)");
        Operator o = make_rule(atom_of(sec.items[1]), terms(c), terms(t));
        try {
            o.validate();
        } catch (const std::invalid_argument& e) {
            throw ParseError(sec.line, sec.column, e.what());
        }
        return o;
    }

    void config(ScenarioConfig& c, const sexp::Node& sec) {
        std::string key = sec.items[1].text;
        const std::string& v = sec.items[2].text;
        auto number = [&] {
            try {
                std::size_t used = 0;
                auto n = std::stoul(v, &used);
                if (used == v.size())
                    return static_cast<std::size_t>(n);
            } catch (const std::exception&) {
            }
            throw ParseError(sec.line, sec.column, "config " + key + " expects a number");
        };
        auto boolean = [&] {
            if (v == "true")
                return true;
            if (v == "false")
                return false;
            throw ParseError(sec.line, sec.column, "config " + key + " expects true or false");
        };
        if (key == "bound")
            c.bound = number();
        else if (key == "inference_cap")
            c.inference_cap = number();
        else if (key == "strict")
            c.strict = boolean();
        else if (key == "alternate")
            c.alternate = boolean();
        else if (key == "order") {
            if (v == "conjunctive-first")
                c.order = AscriptionOrder::conjunctive_first;
            else if (v == "avoidance-first")
                c.order = AscriptionOrder::avoidance_first;
            else
                throw ParseError(sec.line, sec.column, "order must be conjunctive-first or avoidance-first");
        } else {
            throw ParseError(sec.line, sec.column, "unknown config key '" + key + "'");
        }
    }

    std::size_t anon_ = 0;
};

} // namespace detail

/// Cross-reference checks: declared agents, known act schemas, turn
/// alternation, bounds.
inline void validate(const Scenario& s) {
    auto declared = [&](const std::string& a, const std::string& where) {
        if (std::find(s.agents.begin(), s.agents.end(), a) == s.agents.end())
            throw ScenarioError("undeclared-agent", a + " in " + where);
    };
    for (std::size_t i = 0; i < s.agents.size(); ++i)
        for (std::size_t j = i + 1; j < s.agents.size(); ++j)
            if (s.agents[i] == s.agents[j])
                throw ScenarioError("duplicate-agent", s.agents[i]);
    for (const auto& st : s.stereotypes)
        for (const auto& m : st.members)
            declared(m, "stereotype " + st.name);
    for (const auto& [p, a] : s.beliefs)
        for (const auto& ag : p.agents())
            declared(ag, "believes " + p.str());
    for (const auto& [ag, topic] : s.reliable)
        declared(ag, "reliable " + topic);
    std::string last;
    for (const auto& t : s.turns) {
        ActInstance act;
        try {
            act = ActInstance::from_term(t);
            schema_of(act);
        } catch (const std::invalid_argument& e) {
            throw ScenarioError("malformed-turn", e.what());
        }
        declared(act.speaker, "turn " + t.str());
        declared(act.hearer, "turn " + t.str());
        if (s.config.alternate && act.speaker == last)
            throw ScenarioError("turn-order", act.speaker + " speaks twice in a row at " + t.str());
        last = act.speaker;
    }
    if (s.config.bound < 1)
        throw ScenarioError("config", "bound must be at least 1");
    for (const auto& g : s.goals)
        if (!g.is("goal", 2))
            throw ScenarioError("malformed-goal", "declared goals must be goal(Agent, X): " + g.str());
    for (const auto& st : s.stereotypes)
        for (const auto& g : st.goal_library)
            if (!g.is("goal", 2))
                throw ScenarioError("malformed-goal", "goal templates must be goal(Agent, X): " + g.str());
}

inline Scenario load_scenario(std::string_view text) {
    Scenario s = detail::ScenarioParser().parse(text);
    validate(s);
    return s;
}

inline std::string render_scenario(const Scenario& s) {
    std::ostringstream out;
    auto list = [&](const std::vector<Term>& ts) {
        std::string r;
        for (const auto& t : ts)
            r += " " + t.str();
        return r;
    };
    out << "(agents";
    for (const auto& a : s.agents)
        out << " " << a;
    out << ")\n";
    for (const auto& st : s.stereotypes) {
        out << "(stereotype " << st.name << "\n  (member";
        for (const auto& m : st.members)
            out << " " << m;
        out << ")\n  (trigger " << (st.trigger == StereotypeTrigger::planned ? "planned" : "immediate") << ")";
        for (const auto& a : st.attitudes)
            out << "\n  (attitude " << a.str() << ")";
        for (const auto& g : st.goal_library)
            out << "\n  (goal-template " << g.str() << ")";
        out << ")\n";
    }
    for (const auto& [p, a] : s.beliefs) {
        out << "(believes (";
        for (std::size_t i = 0; i < p.agents().size(); ++i)
            out << (i ? " " : "") << p.agents()[i];
        out << ") " << a.str() << ")\n";
    }
    for (const auto& [a, t] : s.reliable)
        out << "(reliable " << a << " " << t << ")\n";
    for (const auto& a : s.actions)
        out << "(action " << a << ")\n";
    for (const auto& o : s.operators) {
        out << "(operator " << o.name << "\n  (params" << list(o.params) << ")\n  (actor " << o.actor.str() << ")";
        if (!o.pre.empty())
            out << "\n  (pre" << list(o.pre) << ")";
        out << "\n  (add" << list(o.add) << ")";
        if (!o.del.empty())
            out << "\n  (del" << list(o.del) << ")";
        if (!o.constraints.empty())
            out << "\n  (constraint" << list(o.constraints) << ")";
        out << ")\n";
    }
    for (const auto& r : s.rules)
        out << "(rule " << r.name << "\n  (if" << list(r.pre) << ")\n  (then" << list(r.add) << "))\n";
    for (const auto& g : s.goals)
        out << "(goal " << g.str() << ")\n";
    for (const auto& a : s.avoid)
        out << "(avoid " << a.str() << ")\n";
    for (const auto& t : s.turns)
        out << "(turn " << t.str() << ")\n";
    const ScenarioConfig def;
    if (s.config.bound != def.bound)
        out << "(config bound " << s.config.bound << ")\n";
    if (s.config.inference_cap != def.inference_cap)
        out << "(config inference_cap " << s.config.inference_cap << ")\n";
    if (s.config.strict != def.strict)
        out << "(config strict " << (s.config.strict ? "true" : "false") << ")\n";
    if (s.config.alternate != def.alternate)
        out << "(config alternate " << (s.config.alternate ? "true" : "false") << ")\n";
    if (s.config.order != def.order)
        out << "(config order avoidance-first)\n";
    return out.str();
}

/// Store and recognizer context before the first turn.
struct Setup {
    BeliefStore store;
    Domain domain;
};

inline Setup prepare(const Scenario& s, Trace* trace = nullptr) {
    Setup out;
    Domain& d = out.domain;
    d.self = s.agents.front();
    d.agents = s.agents;
    d.stereotypes = s.stereotypes;
    d.operators = planning_operators();
    d.operators.insert(d.operators.end(), s.operators.begin(), s.operators.end());
    d.operators.insert(d.operators.end(), s.rules.begin(), s.rules.end());
    d.goal_library = s.goals;
    d.avoid_library = s.avoid;
    d.config.bound = s.config.bound;
    d.config.inference_cap = s.config.inference_cap;
    d.config.order = s.config.order;

    BeliefStore& st = out.store;
    for (const auto& a : s.actions)
        st = st.with_action(a, trace);
    for (const auto& o : d.operators)
        if (o.is_action())
            st = st.with_action(o.name, trace);
    for (const auto& [a, t] : s.reliable)
        st = st.with_reliable(a, t, trace);
    for (const auto& [p, a] : s.beliefs)
        st = assert_attitude(st, p, a, trace, "scenario");
    for (const auto& stereo : s.stereotypes) {
        if (stereo.trigger != StereotypeTrigger::immediate)
            continue;
        for (const auto& m : stereo.members) {
            ViewpointPath path = m == d.self ? ViewpointPath{d.self} : ViewpointPath{d.self, m};
            st = stereotype_ascribe(st, path, stereo, self_binding(m), trace);
        }
    }
    return out;
}

struct RunOptions {
    std::optional<std::size_t> bound;
    std::optional<bool> strict;
};

struct RunResult {
    Trace trace;
    BeliefStore store;
    Domain domain;
    std::vector<InferenceOutcome> outcomes;
    bool halted = false;
    bool had_errors = false;
};

/// Processes the turns in order. A turn that throws, or that cannot be
/// recognized under strict mode, is recorded as an error event; strict mode
/// stops there.
inline RunResult run(const Scenario& s, const RunOptions& opts = {}) {
    RunResult r;
    Scenario sc = s;
    if (opts.bound)
        sc.config.bound = *opts.bound;
    if (opts.strict)
        sc.config.strict = *opts.strict;
    validate(sc);
    Setup setup = prepare(sc, &r.trace);
    r.store = std::move(setup.store);
    r.domain = std::move(setup.domain);
    for (std::size_t i = 0; i < sc.turns.size(); ++i) {
        ActInstance act = ActInstance::from_term(sc.turns[i]);
        try {
            auto outcome = infer(r.store, act, r.domain, &r.trace);
            r.store = outcome.store;
            bool failed = outcome.recognition_failed;
            r.outcomes.push_back(std::move(outcome));
            if (failed) {
                r.had_errors = true;
                if (sc.config.strict) {
                    r.trace.emit("scenario", "halt", {{"turn", i}, {"reason", "recognition-failure"}});
                    r.halted = true;
                    break;
                }
            }
        } catch (const ContradictionError& e) {
            r.had_errors = true;
            r.trace.emit("scenario", "error", {{"turn", i}, {"error", "contradiction"}, {"message", e.what()}});
        } catch (const DepthError& e) {
            r.had_errors = true;
            r.trace.emit("scenario", "error", {{"turn", i}, {"error", "depth"}, {"message", e.what()}});
        } catch (const InvalidAttitude& e) {
            r.had_errors = true;
            r.trace.emit("scenario", "error", {{"turn", i}, {"error", "invalid-attitude"}, {"message", e.what()}});
        }
        if (r.had_errors && sc.config.strict && !r.halted) {
            r.trace.emit("scenario", "halt", {{"turn", i}, {"reason", "error"}});
            r.halted = true;
            break;
        }
    }
    return r;
}

} // namespace vg
