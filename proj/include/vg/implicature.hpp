#pragma once

// Plan recognition, the efficiency audit, and goal ascription.
//
// The hearer recognizes the speaker's plan in its model of the speaker's
// environment, re-plans the same goal without the utterance, and when the
// recognized plan turns out longer it looks for an extra goal the detour
// serves (conjunctive) or an outcome the direct route would have risked
// (avoidance).

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vg/belief_store.hpp"
#include "vg/dialogue_acts.hpp"
#include "vg/planner.hpp"
#include "vg/term.hpp"
#include "vg/trace.hpp"

namespace vg {

enum class AscriptionOrder { conjunctive_first, avoidance_first };

struct InferenceConfig {
    std::size_t bound = 8;
    std::size_t inference_cap = 8;
    std::size_t node_limit = 4'000'000;
    AscriptionOrder order = AscriptionOrder::conjunctive_first;
};

/// Everything about the dialogue the recognizer needs besides the store.
struct Domain {
    std::string self;  // the agent whose store this is
    std::vector<std::string> agents;
    std::vector<Stereotype> stereotypes;
    std::vector<Operator> operators;  // actions and rules
    std::vector<Term> goal_library;   // goal(?self, X) templates
    std::vector<Term> avoid_library;  // AG templates over ?self
    InferenceConfig config;

    SearchLimits limits() const { return {config.bound, config.inference_cap, config.node_limit}; }
};

inline Substitution self_binding(const std::string& agent) {
    Substitution s;
    s.bind("self", atom(agent));
    return s;
}

/// The speaker's environment as the hearer models it: attitudes under
/// [hearer, speaker] rendered from the speaker's side, plus agent/1,
/// stereotypical/2 and asked/3 bookkeeping facts.
inline std::vector<Term> planning_state(const BeliefStore& store, const std::string& hearer,
                                        const std::string& speaker, const Domain& d) {
    std::set<Term> out;
    ViewpointPath root{hearer, speaker};
    for (const auto& [path, space] : store.spaces()) {
        if (!root.is_prefix_of(path))
            continue;
        for (const auto& a : space) {
            Term t = path.depth() == 2 ? a.with_agent(speaker) : render(path.suffix_after(2), a);
            if (t.is_ground())
                out.insert(t);
        }
    }
    for (const auto& a : d.agents)
        out.insert(fn("agent", atom(a)));
    for (const auto& st : d.stereotypes) {
        if (st.trigger != StereotypeTrigger::planned)
            continue;
        for (const auto& m : st.members)
            for (const auto& a : st.attitudes) {
                Term t = vg::apply(self_binding(m), a.with_agent(m));
                if (t.is_ground())
                    out.insert(fn("stereotypical", atom(m), t));
            }
    }
    for (const auto& e : store.expectations())
        out.insert(fn("asked", atom(e.asker), atom(e.addressee), e.proposition));
    return {out.begin(), out.end()};
}

inline ConstraintContext constraint_context(const BeliefStore& store) {
    return ConstraintContext{store.reliable_sources()};
}

/// Candidate goals for `speaker`, most likely first: answers expected by the
/// discourse, then the speaker's stereotype goals, then declared goals.
inline std::vector<Term> candidate_goals(const BeliefStore& store, const std::string& hearer,
                                         const std::string& speaker, const Domain& d) {
    std::vector<Term> out;
    auto push = [&](const Term& g) {
        if (std::find(out.begin(), out.end(), g) == out.end())
            out.push_back(g);
    };
    for (const auto& e : store.expectations()) {
        if (e.asker != hearer || e.addressee != speaker)
            continue;
        push(fn("goal", atom(speaker), fn("bel", atom(hearer), e.proposition)));
        push(fn("goal", atom(speaker), fn("bel", atom(hearer), negate(e.proposition))));
    }
    for (const auto& st : d.stereotypes)
        if (st.has_member(speaker))
            for (const auto& g : st.goal_library)
                push(vg::apply(self_binding(speaker), g));
    for (const auto& g : d.goal_library)
        push(vg::apply(self_binding(speaker), g));
    return out;
}

/// Planner goal for a goal(agent, X) hypothesis. An attitude of an
/// unnamed agent in X stands for someone other than the goal's holder.
struct GoalSpec {
    Term content;
    std::vector<Term> constraints;
};

inline GoalSpec goal_spec(const Term& hypothesis) {
    if (!hypothesis.is("goal", 2) || !hypothesis.arg(0).is_atom())
        throw std::invalid_argument("candidate goal must be goal(agent, X): " + hypothesis.str());
    GoalSpec g{hypothesis.arg(1), {}};
    const Term& x = g.content;
    if (x.is_compound() && x.arity() == 2 && kind_from_name(x.name()) && x.arg(0).is_var())
        g.constraints.push_back(fn("distinct", x.arg(0), hypothesis.arg(0)));
    return g;
}

struct RecognitionResult {
    ActInstance utterance;
    Term goal;  // G1 as goal(speaker, X)
    GoalSpec spec;
    Plan plan;
    std::size_t candidate_rank = 0;
    std::vector<Term> initial;
    ConstraintContext context;
    Term utterance_step;  // the utterance as a planning action
};

inline nlohmann::json steps_json(const Plan& p) {
    nlohmann::json out = nlohmann::json::array();
    for (StepId id : linearize(p))
        out.push_back(p.step(id)->action().str());
    return out;
}

inline std::optional<Plan> traced_plan(const PlanningProblem& problem, const SearchLimits& limits,
                                       const std::string& purpose, const Term& goal, Trace* trace) {
    PlanResult r = plan(problem, limits);
    if (r.plan) {
        emit(trace, "planner", "plan-found",
             {{"purpose", purpose},
              {"goal", goal.str()},
              {"cost", cost(*r.plan)},
              {"steps", steps_json(*r.plan)},
              {"nodes", r.nodes}});
    } else {
        emit(trace, "planner", r.node_limit_hit ? "search-limit" : "bound-exceeded",
             {{"purpose", purpose}, {"goal", goal.str()}, {"bound", limits.bound}, {"nodes", r.nodes}});
    }
    return std::move(r.plan);
}

/// Recognizes the plan behind `utterance`: the first candidate admitting a
/// complete plan in which the utterance is a step feeding the goal.
inline std::optional<RecognitionResult> recognize(const BeliefStore& store, const ActInstance& utterance,
                                                  const std::vector<Term>& candidates, const Domain& d,
                                                  Trace* trace = nullptr) {
    auto base = planning_state(store, utterance.hearer, utterance.speaker, d);
    for (std::size_t rank = 0; rank < candidates.size(); ++rank) {
        const Term& g = candidates[rank];
        GoalSpec spec = goal_spec(g);
        PlanningProblem prob;
        prob.initial = base;
        if (g.is_ground())
            prob.initial.push_back(g);
        prob.goals = {spec.content};
        prob.goal_constraints = spec.constraints;
        prob.operators = d.operators;
        prob.context = constraint_context(store);
        prob.required = {utterance.term()};
        auto p = traced_plan(prob, d.limits(), "recognition", g, trace);
        if (!p)
            continue;
        emit(trace, "implicature", "recognized",
             {{"utterance", utterance.str()}, {"goal", g.str()}, {"rank", rank}, {"cost", cost(*p)}});
        return RecognitionResult{utterance, g, spec, std::move(*p), rank, prob.initial, prob.context, utterance.term()};
    }
    return std::nullopt;
}

struct EfficiencyVerdict {
    bool inefficient = false;
    std::optional<Plan> plan_o;
    std::size_t cost_r = 0;
    std::size_t cost_o = 0;
};

/// Re-plans G1 from the same state without requiring the utterance.
inline EfficiencyVerdict efficiency_audit(const RecognitionResult& r, const Domain& d, Trace* trace = nullptr) {
    PlanningProblem prob;
    prob.initial = r.initial;
    prob.goals = {r.spec.content};
    prob.goal_constraints = r.spec.constraints;
    prob.operators = d.operators;
    prob.context = r.context;
    EfficiencyVerdict v;
    v.cost_r = cost(r.plan);
    v.plan_o = traced_plan(prob, d.limits(), "audit", r.goal, trace);
    if (v.plan_o) {
        v.cost_o = cost(*v.plan_o);
        v.inefficient = v.cost_o < v.cost_r;
    }
    nlohmann::json data{{"goal", r.goal.str()},
                        {"cost_r", v.cost_r},
                        {"verdict", v.inefficient ? "inefficient" : "optimal"}};
    if (v.plan_o) {
        data["cost_o"] = v.cost_o;
        data["plan_o"] = steps_json(*v.plan_o);
    }
    emit(trace, "implicature", "audit", data);
    return v;
}

enum class AscriptionKind { none, conjunctive, avoidance };

inline const char* kind_name(AscriptionKind k) {
    switch (k) {
    case AscriptionKind::conjunctive:
        return "conjunctive";
    case AscriptionKind::avoidance:
        return "avoidance";
    case AscriptionKind::none:
        break;
    }
    return "none";
}

struct ConditionsChecked {
    std::optional<bool> exclusiveness;
    std::optional<bool> efficiency;
    std::optional<bool> causality;
};

struct AscriptionReport {
    AscriptionKind kind = AscriptionKind::none;
    Term goal;                     // goal(speaker, G2) or goal(speaker, not(AG))
    std::vector<Term> intentions;  // int(speaker, Ai), conjunctive only
    Term exclusive_state;
    std::optional<Completion> completion;
    ConditionsChecked conditions;
    std::optional<std::size_t> joint_cost;              // optimum for G1 and G2 over all plans
    std::optional<std::size_t> constrained_joint_cost;  // same, plans using the utterance
    std::vector<nlohmann::json> alternatives;
};

inline nlohmann::json report_to_json(const AscriptionReport& r) {
    nlohmann::json j{{"kind", kind_name(r.kind)}};
    if (r.kind == AscriptionKind::none)
        return j;
    j["goal"] = r.goal.str();
    j["intentions"] = nlohmann::json::array();
    for (const auto& i : r.intentions)
        j["intentions"].push_back(i.str());
    j["exclusive_state"] = r.exclusive_state.str();
    if (r.completion) {
        nlohmann::json acts = nlohmann::json::array();
        for (const auto& a : r.completion->actions)
            acts.push_back(a.head().str());
        j["completion"] = acts;
        j["achieved_goal"] = r.completion->achieved_goal.str();
    }
    nlohmann::json c = nlohmann::json::object();
    if (r.conditions.exclusiveness)
        c["exclusiveness"] = *r.conditions.exclusiveness;
    if (r.conditions.efficiency)
        c["efficiency"] = *r.conditions.efficiency;
    if (r.conditions.causality)
        c["causality"] = *r.conditions.causality;
    j["conditions"] = c;
    if (r.joint_cost)
        j["joint_cost"] = *r.joint_cost;
    if (r.constrained_joint_cost)
        j["constrained_joint_cost"] = *r.constrained_joint_cost;
    j["alternatives"] = r.alternatives;
    return j;
}

/// Final state of a plan's linearization closed under the domain rules.
inline std::set<Term> ambient_state(const Plan& p, const Domain& d, const ConstraintContext& ctx) {
    auto sim = simulate(p.initial, linearized_ops(p));
    if (auto* f = std::get_if<SimulationFailure>(&sim))
        throw PlanError("plan does not simulate at step " + std::to_string(f->index) + ": " + f->missing.str());
    FactIndex idx(std::get<std::set<Term>>(sim));
    std::set<Term> init(p.initial.begin(), p.initial.end());
    close_under_rules(idx, d.operators, init, ctx);
    return idx.all();
}

struct AscriptionOutcome {
    AscriptionReport report;
    BeliefStore store;
};

namespace detail {

inline nlohmann::json candidate_json(const Term& state, const Term& goal) {
    return {{"state", state.str()}, {"goal", goal.str()}};
}

} // namespace detail

/// Conjunctive-goal rule: an exclusive state of Pr from which a completion
/// reaches a library goal G2, with Pr plus the completion optimal for
/// G1 and G2 together. Ascribes goal(G2) and the completion intentions.
inline std::optional<AscriptionOutcome> ascribe_conjunctive(const BeliefStore& store, const RecognitionResult& r,
                                                            const EfficiencyVerdict& v,
                                                            const std::vector<Term>& library, const Domain& d,
                                                            Trace* trace = nullptr) {
    if (!v.inefficient || !v.plan_o || library.empty())
        return std::nullopt;
    const std::string& hearer = r.utterance.hearer;
    const std::string& speaker = r.utterance.speaker;
    auto ambient = ambient_state(r.plan, d, r.context);
    std::set<Term> init(r.initial.begin(), r.initial.end());
    std::optional<AscriptionOutcome> chosen;

    for (const auto& s : exclusive_states(r.plan, *v.plan_o)) {
        for (const auto& tmpl : library) {
            Term g2 = vg::apply(self_binding(speaker), tmpl);
            if (g2 == r.goal)
                continue;
            GoalSpec spec = goal_spec(g2);
            auto skip = [&](const char* why) {
                nlohmann::json j = detail::candidate_json(s.state, g2);
                j["rule"] = "conjunctive";
                j["reason"] = why;
                emit(trace, "implicature", "candidate-skip", j);
            };
            if (satisfies(ambient, spec.content, spec.constraints, init, r.context))
                continue;
            CompletionRequest req{ambient, d.operators, r.context, init, d.config.bound, std::nullopt, spec.constraints};
            auto completion = complete_from(s.state, spec.content, req);
            if (!completion)
                continue;
            // Efficiency: no plan for G1 and G2 together beats Pr plus the completion.
            PlanningProblem joint;
            joint.initial = r.initial;
            joint.goals = {r.spec.content, spec.content};
            joint.goal_constraints = r.spec.constraints;
            joint.goal_constraints.insert(joint.goal_constraints.end(), spec.constraints.begin(), spec.constraints.end());
            joint.operators = d.operators;
            joint.context = r.context;
            Term joint_goal = fn("and", r.goal, g2);
            auto best = traced_plan(joint, d.limits(), "efficiency", joint_goal, trace);
            joint.required = {r.utterance_step};
            auto with_u = traced_plan(joint, d.limits(), "efficiency-with-utterance", joint_goal, trace);
            std::size_t target = cost(r.plan) + completion->size();
            bool efficient = best && cost(*best) == target;
            if (!efficient) {
                skip("efficiency");
                continue;
            }
            if (chosen) {
                nlohmann::json alt = detail::candidate_json(s.state, g2);
                alt["completion_length"] = completion->size();
                chosen->report.alternatives.push_back(alt);
                continue;
            }
            AscriptionReport rep;
            rep.kind = AscriptionKind::conjunctive;
            rep.exclusive_state = s.state;
            rep.goal = fn("goal", atom(speaker), completion->achieved_goal);
            rep.conditions.exclusiveness = true;
            rep.conditions.efficiency = true;
            rep.joint_cost = cost(*best);
            if (with_u)
                rep.constrained_joint_cost = cost(*with_u);
            BeliefStore out = store;
            ViewpointPath from{hearer};
            ViewpointPath to{hearer, speaker};
            auto g = default_ascribe(out, from, to, Attitude::goal(completion->achieved_goal), trace, "conjunctive-goal");
            if (!g) {
                skip("blocked");
                continue;
            }
            out = std::move(*g);
            for (const auto& a : completion->actions) {
                if (auto i = default_ascribe(out, from, to, Attitude::intention(a.head()), trace, "conjunctive-intention")) {
                    out = std::move(*i);
                    rep.intentions.push_back(fn("int", atom(speaker), a.head()));
                }
            }
            rep.completion = std::move(*completion);
            chosen = AscriptionOutcome{std::move(rep), std::move(out)};
        }
    }
    return chosen;
}

/// Avoidance-goal rule: an exclusive state of Po from which a completion
/// without the speaker as an agent reaches a library outcome AG. Ascribes
/// goal(not(AG)).
inline std::optional<AscriptionOutcome> ascribe_avoidance(const BeliefStore& store, const RecognitionResult& r,
                                                          const EfficiencyVerdict& v,
                                                          const std::vector<Term>& library, const Domain& d,
                                                          Trace* trace = nullptr) {
    if (!v.inefficient || !v.plan_o || library.empty())
        return std::nullopt;
    const std::string& hearer = r.utterance.hearer;
    const std::string& speaker = r.utterance.speaker;
    auto ambient = ambient_state(*v.plan_o, d, r.context);
    std::set<Term> init(r.initial.begin(), r.initial.end());
    std::optional<AscriptionOutcome> chosen;

    for (const auto& s : exclusive_states(*v.plan_o, r.plan)) {
        for (const auto& tmpl : library) {
            Term ag = vg::apply(self_binding(speaker), tmpl);
            if (satisfies(ambient, ag))
                continue;
            CompletionRequest req{ambient, d.operators, r.context, init, d.config.bound, std::nullopt, {}};
            auto completion = complete_from(s.state, ag, req);
            if (!completion)
                continue;
            auto by_speaker = [&](const Completion& c) {
                return std::any_of(c.actions.begin(), c.actions.end(),
                                   [&](const Operator& a) { return a.actor == atom(speaker); });
            };
            if (by_speaker(*completion)) {
                nlohmann::json j = detail::candidate_json(s.state, ag);
                j["rule"] = "avoidance";
                j["reason"] = "causality";
                emit(trace, "implicature", "candidate-skip", j);
                req.forbidden_actor = speaker;
                completion = complete_from(s.state, ag, req);
                if (!completion)
                    continue;
            }
            if (chosen) {
                nlohmann::json alt = detail::candidate_json(s.state, ag);
                alt["completion_length"] = completion->size();
                chosen->report.alternatives.push_back(alt);
                continue;
            }
            auto g = default_ascribe(store, ViewpointPath{hearer}, ViewpointPath{hearer, speaker},
                                     Attitude::goal(negate(completion->achieved_goal)), trace, "avoidance-goal");
            if (!g)
                continue;
            AscriptionReport rep;
            rep.kind = AscriptionKind::avoidance;
            rep.exclusive_state = s.state;
            rep.goal = fn("goal", atom(speaker), negate(completion->achieved_goal));
            rep.conditions.exclusiveness = true;
            rep.conditions.causality = true;
            rep.completion = std::move(*completion);
            chosen = AscriptionOutcome{std::move(rep), std::move(*g)};
        }
    }
    return chosen;
}

/// Library of G2 templates offered to the conjunctive rule for `speaker`.
inline std::vector<Term> conjunctive_library(const Domain& d, const std::string& speaker) {
    std::vector<Term> out;
    for (const auto& st : d.stereotypes)
        if (st.has_member(speaker))
            for (const auto& g : st.goal_library)
                out.push_back(g);
    for (const auto& g : d.goal_library)
        if (std::find(out.begin(), out.end(), g) == out.end())
            out.push_back(g);
    return out;
}

struct InferenceOutcome {
    BeliefStore store;
    std::optional<RecognitionResult> recognition;
    std::optional<EfficiencyVerdict> verdict;
    AscriptionReport report;
    bool recognition_failed = false;
};

/// One dialogue turn: act updates, then (when the act is addressed to this
/// store's agent) recognition, audit and goal ascription.
inline InferenceOutcome infer(const BeliefStore& store, const ActInstance& utterance, const Domain& d,
                              Trace* trace = nullptr) {
    emit(trace, "dialogue-acts", "act",
         {{"act", utterance.str()}, {"speaker", utterance.speaker}, {"hearer", utterance.hearer}});
    InferenceOutcome out{store, std::nullopt, std::nullopt, {}, false};
    out.store = apply_speaker_update(out.store, utterance, trace);
    out.store = apply_hearer_update(out.store, utterance, trace);
    if (utterance.speaker == d.self)
        out.store = apply_speaker_commitment(out.store, utterance, trace);
    if (utterance.hearer != d.self) {
        emit(trace, "implicature", "skip", {{"act", utterance.str()}, {"reason", "not addressed to " + d.self}});
        return out;
    }
    auto candidates = candidate_goals(out.store, utterance.hearer, utterance.speaker, d);
    nlohmann::json cj = nlohmann::json::array();
    for (const auto& c : candidates)
        cj.push_back(c.str());
    emit(trace, "implicature", "candidates", {{"act", utterance.str()}, {"goals", cj}});
    out.recognition = recognize(out.store, utterance, candidates, d, trace);
    if (!out.recognition) {
        out.recognition_failed = true;
        emit(trace, "implicature", "error", {{"act", utterance.str()}, {"error", "recognition-failure"}});
        return out;
    }
    out.verdict = efficiency_audit(*out.recognition, d, trace);
    if (out.verdict->inefficient) {
        auto conj = [&] {
            return ascribe_conjunctive(out.store, *out.recognition, *out.verdict,
                                       conjunctive_library(d, utterance.speaker), d, trace);
        };
        auto avoid = [&] {
            return ascribe_avoidance(out.store, *out.recognition, *out.verdict, d.avoid_library, d, trace);
        };
        std::optional<AscriptionOutcome> res;
        if (d.config.order == AscriptionOrder::conjunctive_first) {
            res = conj();
            if (!res)
                res = avoid();
        } else {
            res = avoid();
            if (!res)
                res = conj();
        }
        if (res) {
            out.store = std::move(res->store);
            out.report = std::move(res->report);
        }
    }
    nlohmann::json rj = report_to_json(out.report);
    rj["act"] = utterance.str();
    rj["recognized_goal"] = out.recognition->goal.str();
    rj["cost_r"] = out.verdict->cost_r;
    if (out.verdict->plan_o)
        rj["cost_o"] = out.verdict->cost_o;
    emit(trace, "implicature", "ascription-report", rj);
    return out;
}

} // namespace vg
