#pragma once

// Speech acts: schemas, the speaker/hearer update rules, belief acceptance,
// and the planning operators the recognizer searches with.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vg/belief_store.hpp"
#include "vg/planner.hpp"
#include "vg/term.hpp"
#include "vg/trace.hpp"

namespace vg {

/// Templates are rendered attitudes over the role variables ?s (speaker),
/// ?h (hearer) and ?p (content).
struct ActSchema {
    std::string name;
    std::vector<Term> preconditions;  // kind(?s, ...)
    std::vector<Term> effects;        // bel(?h, ...)

    friend bool operator==(const ActSchema&, const ActSchema&) = default;
};

class UnknownSchema : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ActInstance {
    std::string schema;
    std::string speaker;
    std::string hearer;
    Term content;

    Term term() const { return fn(schema, atom(speaker), atom(hearer), content); }
    std::string str() const { return term().str(); }

    /// schema(speaker, hearer, content)
    static ActInstance from_term(const Term& t) {
        if (!t.is_compound() || t.arity() != 3 || !t.arg(0).is_atom() || !t.arg(1).is_atom())
            throw std::invalid_argument("act must be name(speaker, hearer, content): " + t.str());
        ActInstance a{t.name(), t.arg(0).name(), t.arg(1).name(), t.arg(2)};
        if (a.speaker == a.hearer)
            throw std::invalid_argument("speaker and hearer must differ: " + t.str());
        return a;
    }

    friend bool operator==(const ActInstance&, const ActInstance&) = default;
};

namespace acts {

inline Term S() { return var("s"); }
inline Term H() { return var("h"); }
inline Term P() { return var("p"); }
inline Term either(const Term& p) { return fn("or", p, negate(p)); }

inline ActSchema answer(const std::string& name, const Term& content) {
    return {name,
            {fn("goal", S(), fn("bel", H(), content)), fn("bel", S(), content)},
            {fn("bel", H(), fn("bel", S(), content)), fn("bel", H(), fn("goal", S(), fn("bel", H(), content)))}};
}

} // namespace acts

inline const std::map<std::string, ActSchema>& builtin_schemas() {
    using namespace acts;
    static const std::map<std::string, ActSchema> schemas = [] {
        std::map<std::string, ActSchema> m;
        m["inform"] = answer("inform", P());
        m["yes_answer"] = answer("yes_answer", P());
        m["no_answer"] = answer("no_answer", negate(P()));
        ActSchema q{"question",
                    {fn("goal", S(), fn("bel", S(), either(P()))), fn("bel", S(), fn("bel", H(), either(P())))},
                    {}};
        for (const auto& c : q.preconditions)
            q.effects.push_back(fn("bel", H(), c));
        m["question"] = q;
        return m;
    }();
    return schemas;
}

inline const ActSchema& schema_of(const ActInstance& act) {
    const auto& all = builtin_schemas();
    auto it = all.find(act.schema);
    if (it == all.end())
        throw UnknownSchema("unknown speech act: " + act.schema);
    return it->second;
}

inline Substitution role_bindings(const ActInstance& act) {
    Substitution s;
    s.bind("s", atom(act.speaker));
    s.bind("h", atom(act.hearer));
    s.bind("p", act.content);
    return s;
}

inline std::vector<Term> instantiated_preconditions(const ActInstance& act) {
    return vg::apply(role_bindings(act), schema_of(act).preconditions);
}

inline std::vector<Term> instantiated_effects(const ActInstance& act) {
    return vg::apply(role_bindings(act), schema_of(act).effects);
}

/// Speaker side: each precondition C is ascribed as bel(C) into the
/// speaker's view of the hearer.
[[nodiscard]] inline BeliefStore apply_speaker_update(const BeliefStore& store, const ActInstance& act,
                                                      Trace* trace = nullptr) {
    BeliefStore out = store;
    const std::string rule = "speaker-update:" + act.schema;
    ViewpointPath from{act.speaker};
    ViewpointPath to{act.speaker, act.hearer};
    for (const auto& c : instantiated_preconditions(act))
        if (auto r = default_ascribe(out, from, to, Attitude::bel(c), trace, rule))
            out = std::move(*r);
    return out;
}

/// Hearer side: each precondition C is ascribed into the hearer's view of
/// the speaker, then the act's effects are added to the hearer's own space.
/// A question also leaves a discourse expectation.
[[nodiscard]] inline BeliefStore apply_hearer_update(const BeliefStore& store, const ActInstance& act,
                                                     Trace* trace = nullptr) {
    BeliefStore out = store;
    const std::string rule = "hearer-update:" + act.schema;
    ViewpointPath from{act.hearer};
    ViewpointPath to{act.hearer, act.speaker};
    for (const auto& c : instantiated_preconditions(act)) {
        auto [p, a] = from_rendered(c);
        if (p.front() != act.speaker)
            throw std::logic_error("precondition not held by the speaker: " + c.str());
        Attitude inner{a.kind, a.content};
        std::vector<std::string> rest(p.agents().begin() + 1, p.agents().end());
        if (!rest.empty())
            inner = Attitude::bel(render(ViewpointPath(rest), a));
        if (auto r = default_ascribe(out, from, to, inner, trace, rule))
            out = std::move(*r);
    }
    for (const auto& e : instantiated_effects(act)) {
        auto [p, a] = from_rendered(e);
        if (contrary_evidence(out, p, a.content, a.kind)) {
            emit(trace, "dialogue-acts", "block",
                 {{"path", p.to_json()}, {"attitude", a.str()}, {"rule", "effect:" + act.schema}, {"reason", "contrary_evidence"}});
            continue;
        }
        out = assert_attitude(out, p, a, trace, "effect:" + act.schema);
    }
    if (act.schema == "question")
        out = out.with_expectation(Expectation{act.speaker, act.hearer, act.content}, trace);
    return out;
}

/// Commitments of the agent the store belongs to: when it speaks, its own
/// act preconditions are asserted in its environment.
[[nodiscard]] inline BeliefStore apply_speaker_commitment(const BeliefStore& store, const ActInstance& act,
                                                          Trace* trace = nullptr) {
    BeliefStore out = store;
    for (const auto& c : instantiated_preconditions(act)) {
        auto [p, a] = from_rendered(c);
        out = assert_attitude(out, p, a, trace, "commitment:" + act.schema);
    }
    return out;
}

struct AcceptResult {
    std::optional<BeliefStore> store;
    std::string refused;  // contrary_evidence, unreliable_source, no_evidence

    bool accepted() const noexcept { return store.has_value(); }
};

/// The hearer adopts p from the speaker when it believes the speaker
/// believes p, has no contrary evidence, and the speaker is a reliable
/// source on p's topic.
inline AcceptResult accept_belief(const BeliefStore& store, const std::string& hearer, const std::string& speaker,
                                  const Term& p, Trace* trace = nullptr) {
    auto refuse = [&](const std::string& why) {
        emit(trace, "dialogue-acts", "refuse",
             {{"hearer", hearer}, {"speaker", speaker}, {"proposition", p.str()}, {"reason", why}});
        return AcceptResult{std::nullopt, why};
    };
    if (!holds(store, ViewpointPath{hearer, speaker}, Attitude::bel(p)))
        return refuse("no_evidence");
    if (contrary_evidence(store, ViewpointPath{hearer}, p))
        return refuse("contrary_evidence");
    if (!store.is_reliable(speaker, topic_of(p)))
        return refuse("unreliable_source");
    return AcceptResult{assert_attitude(store, ViewpointPath{hearer}, Attitude::bel(p), trace, "accept_belief"), {}};
}

/// Operators over planning states. A planning state is the speaker's world
/// as the hearer models it: kind(agent, X) facts plus the bookkeeping facts
/// agent(A), stereotypical(A, Attitude) and asked(Asker, Addressee, P).
inline std::vector<Operator> planning_operators() {
    using namespace acts;
    std::vector<Operator> ops;
    auto act_op = [](const ActSchema& sc) {
        Operator o;
        o.name = sc.name;
        o.params = {S(), H(), P()};
        o.pre = sc.preconditions;
        o.add = sc.effects;
        o.actor = S();
        return o;
    };
    const auto& sc = builtin_schemas();
    ops.push_back(act_op(sc.at("inform")));
    ops.push_back(act_op(sc.at("question")));
    ops.back().add.push_back(fn("asked", S(), H(), P()));
    for (const char* name : {"yes_answer", "no_answer"}) {
        Operator o = act_op(sc.at(name));
        Term content = std::string(name) == "yes_answer" ? P() : negate(P());
        // An answer needs the speaker to know the answer and to have been asked.
        o.pre = {fn("goal", S(), fn("bel", H(), content)), fn("bel", S(), either(P())), fn("asked", H(), S(), P())};
        ops.push_back(o);
    }
    Operator accept;
    accept.name = "accept_belief";
    accept.params = {H(), S(), P()};
    accept.pre = {fn("bel", H(), fn("bel", S(), P()))};
    accept.constraints = {fn("reliable_source", S(), P()), fn("no_contrary", H(), P())};
    accept.add = {fn("bel", H(), P())};
    accept.actor = H();
    ops.push_back(accept);
    Operator ascribe;
    ascribe.name = "ascribe";
    ascribe.params = {H(), S(), var("a")};
    ascribe.pre = {fn("stereotypical", S(), var("a")), fn("agent", H())};
    ascribe.constraints = {fn("distinct", H(), S())};
    ascribe.add = {fn("bel", H(), var("a"))};
    ascribe.actor = H();
    ops.push_back(ascribe);
    return ops;
}

} // namespace vg
