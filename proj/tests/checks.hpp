#pragma once

// Checks shared by the gtest suites and the acceptance binary. Each returns
// the failures it found as readable strings plus a count of cases run.

#include <chrono>
#include <random>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "support.hpp"
#include "vg/vg.hpp"

namespace checks {

using namespace vg;
using support::T;

struct Report {
    std::size_t cases = 0;
    std::size_t fired = 0;  // instances where a rule produced something
    std::vector<std::string> failures;

    bool ok() const { return failures.empty(); }
    void fail(std::string s) { failures.push_back(std::move(s)); }
};

// ---------------------------------------------------------------------------
// The computer-off dialogue end to end.

inline const Term kNoGoal = parse_term("goal(expert, bel(system, not(permission(system, switch(system, computer_off)))))");
inline const Term kEducate = parse_term("goal(expert, bel(?, cause(switch(?, computer_off), damage(hard_drive))))");
inline const Term kCause = parse_term("cause(switch(system, computer_off), damage(hard_drive))");

inline bool has_step(const Plan& p, const std::string& name) {
    return std::any_of(p.steps.begin(), p.steps.end(), [&](const PlanStep& s) { return s.op.name == name; });
}

inline Report computer_off() {
    Report r;
    r.cases = 1;
    Scenario sc = support::shipped("computer_off");
    auto t0 = std::chrono::steady_clock::now();
    RunResult run_result = run(sc);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= 5.0)
        r.fail("took " + std::to_string(secs) + " s");
    if (run_result.outcomes.size() != 2) {
        r.fail("expected two outcomes");
        return r;
    }
    const auto& out = run_result.outcomes[1];
    if (!out.recognition) {
        r.fail("inform not recognized");
        return r;
    }
    const auto& rec = *out.recognition;
    if (rec.goal != kNoGoal)
        r.fail("recognized " + rec.goal.str());
    if (!has_step(rec.plan, "inform"))
        r.fail("recognized plan lacks inform");
    if (!out.verdict || !out.verdict->inefficient || !out.verdict->plan_o) {
        r.fail("no inefficiency verdict");
        return r;
    }
    const auto& v = *out.verdict;
    if (!has_step(*v.plan_o, "no_answer"))
        r.fail("Po does not use no_answer");
    const auto& ops = run_result.domain.operators;
    auto po = oracle::lifted_bfs_min(rec.initial, {rec.spec.content}, ops, rec.context, 4);
    auto pr = oracle::lifted_min_needing(rec.initial, {rec.spec.content}, ops, rec.context, 4, rec.utterance_step);
    if (!po || *po != v.cost_o || v.cost_o != 2)
        r.fail("cost(Po) " + std::to_string(v.cost_o) + " vs oracle " + (po ? std::to_string(*po) : "none"));
    if (!pr || *pr != v.cost_r || v.cost_r != 3)
        r.fail("cost(Pr) " + std::to_string(v.cost_r) + " vs oracle " + (pr ? std::to_string(*pr) : "none"));
    const auto& rep = out.report;
    if (rep.kind != AscriptionKind::conjunctive) {
        r.fail(std::string("ascription kind ") + kind_name(rep.kind));
        return r;
    }
    if (!unifiable(rep.goal, kEducate))
        r.fail("ascribed " + rep.goal.str());
    if (!rep.completion || rep.completion->size() != 1 || rep.completion->actions[0].name != "accept_belief")
        r.fail("completion is not a single accept_belief");
    ViewpointPath view{"system", "expert"};
    bool goal_held = false;
    if (const auto* space = run_result.store.at(view))
        for (const auto& a : *space)
            goal_held = goal_held || (a.kind == AttitudeKind::goal && unifiable(fn("goal", atom("expert"), a.content), kEducate));
    if (!goal_held)
        r.fail("educate goal missing from system's view of expert");
    if (rep.completion && !holds(run_result.store, view, Attitude::intention(rep.completion->actions[0].head())))
        r.fail("completion intention missing from system's view of expert");
    return r;
}

// ---------------------------------------------------------------------------
// Random ground domains against exhaustive BFS.

inline Report planner_random(unsigned seed, std::size_t n, Report* soundness = nullptr) {
    Report r;
    std::mt19937 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        auto g = oracle::random_problem(rng);
        auto want = oracle::bfs_min(g, 6);
        auto prob = oracle::to_problem(g);
        auto got = plan(prob, {6, 0, 4'000'000});
        ++r.cases;
        std::string tag = "domain " + std::to_string(i) + ": ";
        if (got.plan.has_value() != want.has_value()) {
            r.fail(tag + (want ? "planner found nothing" : "planner found a plan BFS did not"));
            continue;
        }
        if (!want)
            continue;
        ++r.fired;
        if (cost(*got.plan) != *want)
            r.fail(tag + "cost " + std::to_string(cost(*got.plan)) + " vs " + std::to_string(*want));
        if (soundness) {
            ++soundness->cases;
            auto sim = simulate(prob.initial, linearized_ops(*got.plan));
            auto* state = std::get_if<std::set<Term>>(&sim);
            bool ok = state && std::all_of(prob.goals.begin(), prob.goals.end(),
                                           [&](const Term& t) { return state->count(t) > 0; });
            if (!ok)
                soundness->fail(tag + "plan does not simulate to the goal");
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Ascription rules on generated instances.
//
// Hearer h, speaker s. The speaker reaches g by an utterance u from a0 to
// b and then finish; a direct action reaches g in one step. Both detour
// and direct route assert random side atoms x*, and random extra actions
// by s, h or o lead between the atoms.

struct Instance {
    Domain domain;
    BeliefStore store;
    RecognitionResult rec;
    EfficiencyVerdict verdict;
};

inline Operator ground_op(const std::string& name, const std::string& actor, std::vector<Term> pre, std::vector<Term> add) {
    Operator o;
    o.name = name;
    o.actor = atom(actor);
    o.pre = std::move(pre);
    o.add = std::move(add);
    return o;
}

inline std::optional<Instance> make_instance(std::mt19937& rng) {
    const char* actors[] = {"s", "h", "o"};
    std::uniform_int_distribution<int> coin(0, 1), actor(0, 2), nx(0, 5), extra(2, 6), lib(1, 3);
    auto x = [&] { return atom("x" + std::to_string(nx(rng))); };
    auto some_x = [&] {
        std::vector<Term> v;
        for (int k = coin(rng) + coin(rng); k > 0; --k)
            v.push_back(x());
        return v;
    };
    std::vector<Operator> ops;
    auto direct_add = some_x();
    direct_add.insert(direct_add.begin(), atom("g"));
    auto u_add = some_x();
    u_add.insert(u_add.begin(), atom("b"));
    ops.push_back(ground_op("direct", actors[actor(rng)], {atom("a0")}, direct_add));
    ops.push_back(ground_op("u", "s", {atom("a0")}, u_add));
    ops.push_back(ground_op("finish", actors[actor(rng)], {atom("b")}, {atom("g")}));
    for (int i = extra(rng); i > 0; --i) {
        Term pre = coin(rng) ? x() : (coin(rng) ? atom("b") : atom("a0"));
        std::vector<Term> add{x()};
        if (coin(rng))
            add.push_back(x());
        ops.push_back(ground_op("e" + std::to_string(ops.size()), actors[actor(rng)], {pre}, add));
    }

    Instance in;
    Domain& d = in.domain;
    d.self = "h";
    d.agents = {"h", "s", "o"};
    d.operators = ops;
    d.config.bound = 5;
    std::set<Term> seen_lib;
    for (int i = lib(rng); i > 0; --i) {
        Term t = x();
        if (seen_lib.insert(t).second)
            d.goal_library.push_back(fn("goal", var("self"), t));
    }
    seen_lib.clear();
    for (int i = lib(rng); i > 0; --i) {
        Term t = x();
        if (seen_lib.insert(t).second)
            d.avoid_library.push_back(t);
    }
    for (const auto& o : ops)
        in.store = in.store.with_action(o.name);

    PlanningProblem p;
    p.initial = {atom("a0")};
    p.goals = {atom("g")};
    p.operators = ops;
    p.required = {atom("u")};
    auto pr = plan(p, d.limits()).plan;
    if (!pr)
        return std::nullopt;
    Term goal = fn("goal", atom("s"), atom("g"));
    in.rec = RecognitionResult{ActInstance{"inform", "s", "h", atom("g")}, goal, goal_spec(goal), *pr, 0,
                               p.initial, {}, atom("u")};
    in.verdict = efficiency_audit(in.rec, d);
    return in;
}

inline std::vector<Term> asserted(const Plan& p) {
    std::vector<Term> out(p.initial.begin(), p.initial.end());
    for (const auto& s : p.steps)
        out.insert(out.end(), s.op.add.begin(), s.op.add.end());
    return out;
}

inline bool unifies_with_any(const Term& t, const std::vector<Term>& ts) {
    return std::any_of(ts.begin(), ts.end(), [&](const Term& u) { return unifiable(t, u); });
}

inline Report ascription_instances(unsigned seed, std::size_t n) {
    Report r;
    std::mt19937 rng(seed);
    std::size_t attempts = 0;
    while (r.cases < n && attempts < 50 * n) {
        ++attempts;
        auto in = make_instance(rng);
        if (!in || !in->verdict.inefficient)
            continue;
        ++r.cases;
        const auto& rec = in->rec;
        const Plan& po = *in->verdict.plan_o;
        std::string tag = "instance " + std::to_string(r.cases) + ": ";

        auto conj = ascribe_conjunctive(in->store, rec, in->verdict, in->domain.goal_library, in->domain);
        if (conj) {
            ++r.fired;
            const auto& rep = conj->report;
            if (unifies_with_any(rep.exclusive_state, asserted(po)))
                r.fail(tag + "conjunctive exclusive state " + rep.exclusive_state.str() + " is asserted in Po");
            if (!unifies_with_any(rep.exclusive_state, asserted(rec.plan)))
                r.fail(tag + "conjunctive exclusive state not asserted in Pr");
            std::size_t target = cost(rec.plan) + rep.completion->size();
            auto joint = oracle::lifted_bfs_min(rec.initial, {rec.spec.content, rep.goal.arg(1)},
                                                in->domain.operators, rec.context, in->domain.config.bound + 2);
            if (!joint || *joint != target)
                r.fail(tag + "efficiency recheck: joint optimum " + (joint ? std::to_string(*joint) : "none") +
                       " vs " + std::to_string(target));
        }

        auto avoid = ascribe_avoidance(in->store, rec, in->verdict, in->domain.avoid_library, in->domain);
        if (avoid) {
            ++r.fired;
            const auto& rep = avoid->report;
            for (const auto& a : rep.completion->actions)
                if (a.actor == atom("s"))
                    r.fail(tag + "avoidance completion step " + a.head().str() + " is by the speaker");
            if (unifies_with_any(rep.exclusive_state, asserted(rec.plan)))
                r.fail(tag + "avoidance exclusive state is asserted in Pr");
            if (!unifies_with_any(rep.exclusive_state, asserted(po)))
                r.fail(tag + "avoidance exclusive state not asserted in Po");
        }
    }
    if (r.cases < n)
        r.fail("only " + std::to_string(r.cases) + " inefficient instances generated");
    return r;
}

// ---------------------------------------------------------------------------
// Update rules for every builtin act on random contents.

inline Term random_content(std::mt19937& rng) {
    const char* fns[] = {"p", "q", "cause", "permission", "damage"};
    const char* args[] = {"a", "b", "hard_drive", "computer_off"};
    std::uniform_int_distribution<int> f(0, 4), a(0, 3), n(0, 2), neg(0, 3);
    Term t = n(rng) == 0 ? atom(fns[f(rng)]) : fn(fns[f(rng)], atom(args[a(rng)]), atom(args[a(rng)]));
    return neg(rng) == 0 ? negate(t) : t;
}

inline void put(BeliefStore& s, const ViewpointPath& p, const Attitude& a) {
    auto [path, att] = normalize(p, a);
    s.insert_raw(path, att);
}

inline Report update_rules(unsigned seed, std::size_t per_act) {
    Report r;
    std::mt19937 rng(seed);
    const char* agents[] = {"system", "expert", "novice"};
    std::uniform_int_distribution<int> pick(0, 2);
    for (const auto& [name, schema] : builtin_schemas()) {
        for (std::size_t i = 0; i < per_act; ++i) {
            int s = pick(rng), h = (s + 1 + pick(rng) % 2) % 3;
            ActInstance act{name, agents[s], agents[h], random_content(rng)};
            std::string tag = act.str() + ": ";
            ++r.cases;
            BeliefStore sp = apply_speaker_update({}, act);
            BeliefStore hp = apply_hearer_update({}, act);
            // speaker: bel(C) for each precondition C, in the speaker's view of the hearer
            BeliefStore want_sp;
            for (const auto& c : instantiated_preconditions(act))
                put(want_sp, {act.speaker, act.hearer}, Attitude::bel(c));
            BeliefStore want_hp;
            // hearer: each precondition C in the hearer's view of the speaker
            for (const auto& c : instantiated_preconditions(act)) {
                if (!c.is_compound() || c.arity() != 2 || !(c.arg(0) == atom(act.speaker)))
                    r.fail(tag + "precondition not about the speaker: " + c.str());
                auto k = kind_from_name(c.name());
                if (k)
                    put(want_hp, {act.hearer, act.speaker}, Attitude{*k, c.arg(1)});
            }
            // effects bel(H, X) asserted from the hearer's own view
            for (const auto& e : instantiated_effects(act)) {
                if (!e.is("bel", 2) || !(e.arg(0) == atom(act.hearer)))
                    r.fail(tag + "effect not a hearer belief: " + e.str());
                put(want_hp, {act.hearer}, Attitude::bel(e.arg(1)));
            }
            auto same = [&](const BeliefStore& got, const BeliefStore& want, const char* which) {
                for (const auto& [path, space] : want.spaces())
                    for (const auto& a : space)
                        if (!holds(got, path, a))
                            r.fail(tag + which + " update missing " + render(path, a).str());
                for (const auto& [path, space] : got.spaces())
                    for (const auto& a : space)
                        if (!holds(want, path, a))
                            r.fail(tag + which + " update added " + render(path, a).str());
            };
            same(sp, want_sp, "speaker");
            same(hp, want_hp, "hearer");
            if (!(apply_speaker_update(sp, act) == sp))
                r.fail(tag + "speaker update not idempotent");
            if (!(apply_hearer_update(hp, act) == hp))
                r.fail(tag + "hearer update not idempotent");
        }
    }
    return r;
}

// ---------------------------------------------------------------------------

inline std::string trace_json(const std::string& name) { return emit_json(run(support::shipped(name)).trace); }

inline Report determinism() {
    Report r;
    for (const char* name : {"computer_off", "swim_waves", "burnt_cakes"}) {
        ++r.cases;
        if (trace_json(name) != trace_json(name))
            r.fail(std::string(name) + ": traces differ between runs");
    }
    return r;
}

} // namespace checks
