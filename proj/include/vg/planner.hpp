#pragma once

// Partial-order causal-link planner over sets of ground terms.
//
// Search is systematic backward refinement of partial plans (open
// conditions resolved by new or existing steps, threats resolved by
// promotion/demotion), run under iterative deepening on the number of action
// steps so the first depth with a solution is the minimum cost. Inference
// operators (domain rules) are zero-cost steps bounded separately.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "vg/term.hpp"
#include "vg/trace.hpp"

namespace vg {

enum class OperatorKind { action, inference };

/// A STRIPS-style schema. Variables in conditions and effects must appear in
/// `params`. `constraints` are builtin guards over the parameters:
///   distinct(A, B), reliable_source(Agent, P), no_contrary(Agent, P)
/// evaluated once their arguments are ground.
struct Operator {
    std::string name;
    std::vector<Term> params;
    std::vector<Term> pre;
    std::vector<Term> add;
    std::vector<Term> del;
    std::vector<Term> constraints;
    Term actor;  // empty for inference rules
    OperatorKind kind = OperatorKind::action;

    bool is_action() const noexcept { return kind == OperatorKind::action; }

    Term head() const { return params.empty() ? Term::atom(name) : Term::compound(name, params); }

    Operator instantiate(const Substitution& s) const {
        Operator o = *this;
        o.params = apply(s, params);
        o.pre = apply(s, pre);
        o.add = apply(s, add);
        o.del = apply(s, del);
        o.constraints = apply(s, constraints);
        if (!actor.empty())
            o.actor = apply(s, actor);
        return o;
    }

    Operator renamed(Renamer& r) const {
        Operator o = *this;
        auto map = [&r](std::vector<Term>& v) {
            for (auto& t : v)
                t = r(t);
        };
        map(o.params);
        map(o.pre);
        map(o.add);
        map(o.del);
        map(o.constraints);
        if (!o.actor.empty())
            o.actor = r(o.actor);
        return o;
    }

    bool is_ground() const {
        auto g = [](const std::vector<Term>& v) {
            return std::all_of(v.begin(), v.end(), [](const Term& t) { return t.is_ground(); });
        };
        return g(params) && g(pre) && g(add) && g(del) && (actor.empty() || actor.is_ground());
    }

    void validate() const {
        Term::atom(name);
        std::vector<std::string> declared;
        for (const auto& p : params) {
            if (!p.is_var())
                throw std::invalid_argument("operator " + name + ": parameters must be variables");
            declared.push_back(p.name());
        }
        auto check = [&](const std::vector<Term>& ts, const char* where) {
            for (const auto& t : ts)
                for (const auto& v : vars_of(t))
                    if (std::find(declared.begin(), declared.end(), v) == declared.end())
                        throw std::invalid_argument("operator " + name + ": variable ?" + v + " in " + where +
                                                    " is not a parameter");
        };
        check(pre, "preconditions");
        check(add, "add effects");
        check(del, "delete effects");
        check(constraints, "constraints");
        if (!actor.empty())
            check({actor}, "actor");
        for (const auto& c : constraints)
            if (!(c.is("distinct", 2) || c.is("reliable_source", 2) || c.is("no_contrary", 2)))
                throw std::invalid_argument("operator " + name + ": unknown constraint " + c.str());
        if (kind == OperatorKind::inference && !del.empty())
            throw std::invalid_argument("inference rule " + name + " may not delete facts");
        if (add.empty())
            throw std::invalid_argument("operator " + name + " has no add effects");
    }

    friend bool operator==(const Operator&, const Operator&) = default;
};

/// Builds an inference rule; its parameters are the variables of its
/// conditions in first-occurrence order.
inline Operator make_rule(std::string name, std::vector<Term> conditions, std::vector<Term> conclusions) {
    Operator o;
    o.name = std::move(name);
    o.kind = OperatorKind::inference;
    std::vector<std::string> names;
    for (const auto& t : conditions)
        collect_vars(t, names);
    for (const auto& t : conclusions)
        collect_vars(t, names);
    for (const auto& n : names)
        o.params.push_back(Term::var(n));
    o.pre = std::move(conditions);
    o.add = std::move(conclusions);
    return o;
}

/// Static facts consulted by operator constraints.
struct ConstraintContext {
    std::set<std::pair<std::string, std::string>> reliable;  // (agent, topic functor)
};

/// Topic of a proposition for the reliable-source check: its functor, with
/// any negation stripped.
inline std::string topic_of(const Term& p) {
    const Term& q = strip_not(p);
    return q.is_var() ? std::string() : q.name();
}

/// std::nullopt when the constraint is not ground yet.
inline std::optional<bool> check_constraint(const Term& c, const std::set<Term>& initial,
                                            const ConstraintContext& ctx) {
    if (!c.is_ground())
        return std::nullopt;
    if (c.is("distinct", 2))
        return !(c.arg(0) == c.arg(1));
    if (c.is("reliable_source", 2))
        return c.arg(0).is_atom() && ctx.reliable.count({c.arg(0).name(), topic_of(c.arg(1))}) > 0;
    if (c.is("no_contrary", 2)) {
        const Term& agent = c.arg(0);
        const Term& p = c.arg(1);
        if (initial.count(fn("bel", agent, negate(p))))
            return false;
        if (p.is("not", 1) && initial.count(fn("bel", agent, p.arg(0))))
            return false;
        return true;
    }
    throw std::invalid_argument("unknown constraint " + c.str());
}

using StepId = std::size_t;
inline constexpr StepId kInitStep = 0;
inline constexpr StepId kGoalStep = std::numeric_limits<StepId>::max();

inline std::string step_name(StepId id) {
    if (id == kInitStep)
        return "init";
    if (id == kGoalStep)
        return "goal";
    return "s" + std::to_string(id);
}

struct PlanStep {
    StepId id = 0;
    Operator op;  // ground

    Term action() const { return op.head(); }
    friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

struct CausalLink {
    StepId producer = kInitStep;
    Term condition;
    StepId consumer = kGoalStep;

    friend bool operator==(const CausalLink&, const CausalLink&) = default;
};

class PlanError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A partial-order plan. Init and goal are implicit pseudo-steps (ids
/// kInitStep and kGoalStep); `ordering` holds the explicit constraints
/// between the other steps.
struct Plan {
    std::vector<Term> initial;
    std::vector<Term> goals;
    std::vector<PlanStep> steps;
    std::set<std::pair<StepId, StepId>> ordering;
    std::vector<CausalLink> links;
    std::vector<std::pair<StepId, Term>> open;

    bool complete() const { return open.empty(); }

    const PlanStep* step(StepId id) const {
        for (const auto& s : steps)
            if (s.id == id)
                return &s;
        return nullptr;
    }

    std::size_t action_count() const {
        return static_cast<std::size_t>(
            std::count_if(steps.begin(), steps.end(), [](const PlanStep& s) { return s.op.is_action(); }));
    }

    friend bool operator==(const Plan&, const Plan&) = default;
};

/// Number of action steps. Pseudo-steps and inference steps cost nothing.
inline std::size_t cost(const Plan& p) {
    if (!p.complete())
        throw PlanError("cost of an incomplete plan");
    return p.action_count();
}

/// Total order consistent with the plan's ordering and causal links; among
/// unordered steps the smaller id goes first.
inline std::vector<StepId> linearize(const Plan& p) {
    std::map<StepId, std::set<StepId>> succ;
    std::map<StepId, std::size_t> indeg;
    for (const auto& s : p.steps)
        indeg[s.id] = 0;
    auto edge = [&](StepId a, StepId b) {
        if (a == kInitStep || b == kGoalStep || a == b)
            return;
        if (!indeg.count(a) || !indeg.count(b))
            throw PlanError("ordering mentions unknown step");
        if (succ[a].insert(b).second)
            ++indeg[b];
    };
    for (const auto& [a, b] : p.ordering)
        edge(a, b);
    for (const auto& l : p.links)
        edge(l.producer, l.consumer);
    std::set<StepId> ready;
    for (const auto& [id, d] : indeg)
        if (d == 0)
            ready.insert(id);
    std::vector<StepId> out;
    while (!ready.empty()) {
        StepId id = *ready.begin();
        ready.erase(ready.begin());
        out.push_back(id);
        for (StepId n : succ[id])
            if (--indeg[n] == 0)
                ready.insert(n);
    }
    if (out.size() != p.steps.size())
        throw PlanError("plan ordering has a cycle");
    return out;
}

inline std::vector<Operator> linearized_ops(const Plan& p) {
    std::vector<Operator> ops;
    for (StepId id : linearize(p))
        ops.push_back(p.step(id)->op);
    return ops;
}

struct SimulationFailure {
    std::size_t index = 0;
    Term missing;
};

/// Applies each operator in order: preconditions must be present, then
/// deletes are removed and adds inserted.
inline std::variant<std::set<Term>, SimulationFailure> simulate(const std::vector<Term>& initial,
                                                                const std::vector<Operator>& seq) {
    std::set<Term> state(initial.begin(), initial.end());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        for (const auto& c : seq[i].pre)
            if (!state.count(c))
                return SimulationFailure{i, c};
        for (const auto& d : seq[i].del)
            state.erase(d);
        for (const auto& a : seq[i].add)
            state.insert(a);
    }
    return state;
}

struct TaggedState {
    StepId producer = kInitStep;
    Term state;
};

/// Init facts, then every step's add effects in linearized order.
inline std::vector<TaggedState> asserted_states(const Plan& p) {
    std::vector<TaggedState> out;
    for (const auto& f : p.initial)
        out.push_back({kInitStep, f});
    for (StepId id : linearize(p))
        for (const auto& a : p.step(id)->op.add)
            out.push_back({id, a});
    return out;
}

/// States asserted in `a` that unify with no state asserted in `b`, in
/// discovery order, without duplicates.
inline std::vector<TaggedState> exclusive_states(const Plan& a, const Plan& b) {
    auto sb = asserted_states(b);
    std::vector<TaggedState> out;
    std::set<Term> seen;
    for (const auto& s : asserted_states(a)) {
        if (seen.count(s.state))
            continue;
        seen.insert(s.state);
        bool shared = std::any_of(sb.begin(), sb.end(), [&](const TaggedState& t) { return unifiable(s.state, t.state); });
        if (!shared)
            out.push_back(s);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Forward machinery: matching conditions against a fact set, rule closure.

/// Facts indexed by functor/arity for condition matching.
class FactIndex {
public:
    FactIndex() = default;
    explicit FactIndex(const std::set<Term>& facts) {
        for (const auto& f : facts)
            insert(f);
    }

    bool insert(const Term& f) {
        if (!all_.insert(f).second)
            return false;
        buckets_[key(f)].push_back(f);
        return true;
    }

    bool contains(const Term& f) const { return all_.count(f) > 0; }
    const std::set<Term>& all() const noexcept { return all_; }

    /// Facts that could match `pattern` (same functor/arity, or all facts
    /// when the pattern is a variable).
    template <class F>
    void candidates(const Term& pattern, F&& f) const {
        if (pattern.is_var()) {
            for (const auto& t : all_)
                f(t);
            return;
        }
        auto it = buckets_.find(key(pattern));
        if (it == buckets_.end())
            return;
        for (const auto& t : it->second)
            f(t);
    }

private:
    static std::pair<std::string, std::size_t> key(const Term& t) {
        return {t.is_var() ? std::string("?") : t.name(), t.is_compound() ? t.arity() : 0};
    }

    std::set<Term> all_;
    std::map<std::pair<std::string, std::size_t>, std::vector<Term>> buckets_;
};

/// Calls `f` for every substitution (extending `s`) that maps all
/// `conds` onto facts of `index`.
template <class F>
void for_each_match(const std::vector<Term>& conds, std::size_t i, const FactIndex& index, const Substitution& s,
                    F&& f) {
    if (i == conds.size()) {
        f(s);
        return;
    }
    Term c = apply(s, conds[i]);
    if (c.is_ground()) {
        if (index.contains(c))
            for_each_match(conds, i + 1, index, s, f);
        return;
    }
    index.candidates(c, [&](const Term& fact) {
        if (auto u = unify(c, fact, s))
            for_each_match(conds, i + 1, index, *u, f);
    });
}

/// Ground instances of `op` applicable in `index`, sorted by action term.
inline std::vector<Operator> applicable(const Operator& op, const FactIndex& index, const std::set<Term>& initial,
                                        const ConstraintContext& ctx) {
    std::set<Term> seen;
    std::vector<Operator> out;
    for_each_match(op.pre, 0, index, Substitution{}, [&](const Substitution& s) {
        Operator g = op.instantiate(s);
        if (!g.is_ground())
            return;
        for (const auto& c : g.constraints)
            if (!check_constraint(c, initial, ctx).value_or(false))
                return;
        if (seen.insert(g.head()).second)
            out.push_back(std::move(g));
    });
    std::sort(out.begin(), out.end(), [](const Operator& a, const Operator& b) { return a.head() < b.head(); });
    return out;
}

/// Adds the conclusions of every applicable inference rule until fixpoint.
/// Returns false if `max_facts` was exceeded.
inline bool close_under_rules(FactIndex& facts, const std::vector<Operator>& ops, const std::set<Term>& initial,
                              const ConstraintContext& ctx, std::size_t max_facts = 20000) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& op : ops) {
            if (op.is_action())
                continue;
            for (const auto& g : applicable(op, facts, initial, ctx))
                for (const auto& a : g.add)
                    if (facts.insert(a)) {
                        changed = true;
                        if (facts.all().size() > max_facts)
                            return false;
                    }
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Planning

struct PlanningProblem {
    std::vector<Term> initial;  // ground facts
    std::vector<Term> goals;    // may contain variables
    std::vector<Operator> operators;
    ConstraintContext context;
    /// Ground action terms that must appear as steps and feed the goal
    /// through causal links.
    std::vector<Term> required;
    /// Guards over goal variables, e.g. distinct(?x, expert).
    std::vector<Term> goal_constraints;
};

struct SearchLimits {
    std::size_t bound = 8;            // max action steps
    std::size_t max_inferences = 8;   // max inference steps
    std::size_t node_limit = 4'000'000;
};

struct PlanResult {
    std::optional<Plan> plan;
    bool node_limit_hit = false;
    std::size_t nodes = 0;
    std::size_t depth = 0;  // last action bound searched

    explicit operator bool() const noexcept { return plan.has_value(); }
};

namespace pocl {

inline constexpr std::size_t kMaxSteps = 62;
inline constexpr StepId kInit = 0;
inline constexpr StepId kGoal = 1;

struct Node {
    struct Step {
        StepId id;
        Operator op;  // renamed apart, bindings not applied
    };
    struct Link {
        StepId producer;
        Term condition;
        StepId consumer;
    };
    struct Open {
        StepId step;
        Term condition;
    };

    std::vector<Step> steps;          // real steps, ids 2..
    std::vector<std::uint64_t> after; // after[i]: bitset of steps forced after i
    std::vector<Link> links;
    std::vector<Open> open;
    Substitution bindings;
    std::size_t actions = 0;
    std::size_t inferences = 0;
    std::size_t var_counter = 0;
    StepId next_id = 2;

    bool precedes(StepId a, StepId b) const { return (after[a] >> b) & 1U; }

    /// Adds a < b (transitively). False if it would create a cycle.
    bool order(StepId a, StepId b) {
        if (a == b || precedes(b, a))
            return false;
        if (precedes(a, b))
            return true;
        std::uint64_t add = after[b] | (std::uint64_t{1} << b);
        for (StepId x = 0; x < after.size(); ++x)
            if (x == a || precedes(x, a))
                after[x] |= add;
        return true;
    }

    const Step* step(StepId id) const {
        for (const auto& s : steps)
            if (s.id == id)
                return &s;
        return nullptr;
    }
};

class Search {
public:
    Search(const PlanningProblem& problem, const SearchLimits& limits)
        : problem_(problem), limits_(limits), init_set_(problem.initial.begin(), problem.initial.end()) {
        for (const auto& op : problem_.operators)
            op.validate();
        for (const auto& f : problem_.initial)
            if (!f.is_ground())
                throw std::invalid_argument("initial fact is not ground: " + f.str());
        build_relaxed_layers();
    }

    PlanResult run() {
        PlanResult result;
        std::optional<Node> root = make_root();
        if (!root)
            return result;
        for (std::size_t depth = 0; depth <= limits_.bound; ++depth) {
            limit_ = depth;
            best_.reset();
            search(*root);
            result.depth = depth;
            if (best_) {
                result.plan = finalize(best_->node);
                break;
            }
            if (node_limit_hit_)
                break;
        }
        result.nodes = nodes_;
        result.node_limit_hit = node_limit_hit_;
        return result;
    }

private:
    struct Candidate {
        std::vector<std::string> key_names;
        std::vector<Term> key_terms;
        Node node;
    };

    std::optional<Node> make_root() {
        Node n;
        n.after.assign(kMaxSteps + 2, 0);
        n.after[kInit] = std::uint64_t{1} << kGoal;
        Renamer goal_renamer(0);
        for (const auto& g : problem_.goals)
            n.open.push_back({kGoal, goal_renamer(g)});
        for (const auto& c : problem_.goal_constraints)
            goal_constraints_.push_back(goal_renamer(c));
        n.var_counter = goal_renamer.counter();
        for (const auto& r : problem_.required) {
            bool placed = false;
            for (const auto& op : problem_.operators) {
                if (op.name != r.name() || op.params.size() != (r.is_compound() ? r.arity() : 0))
                    continue;
                Renamer rn(n.var_counter);
                Operator fresh = op.renamed(rn);
                auto u = unify(fresh.head(), r, n.bindings);
                if (!u)
                    continue;
                n.var_counter = rn.counter();
                n.bindings = *u;
                add_step(n, std::move(fresh));
                required_ids_.push_back(n.steps.back().id);
                placed = true;
                break;
            }
            if (!placed)
                return std::nullopt;
        }
        if (!constraints_ok(n))
            return std::nullopt;
        return n;
    }

    static void add_step(Node& n, Operator op) {
        StepId id = n.next_id++;
        if (op.is_action())
            ++n.actions;
        else
            ++n.inferences;
        n.order(kInit, id);
        n.order(id, kGoal);
        for (const auto& c : op.pre)
            n.open.push_back({id, c});
        n.steps.push_back({id, std::move(op)});
    }

    bool constraints_ok(const Node& n) const {
        for (const auto& c : goal_constraints_)
            if (auto r = check_constraint(apply(n.bindings, c), init_set_, problem_.context); r && !*r)
                return false;
        for (const auto& s : n.steps)
            for (const auto& c : s.op.constraints)
                if (auto r = check_constraint(apply(n.bindings, c), init_set_, problem_.context); r && !*r)
                    return false;
        return true;
    }

    struct Threat {
        StepId threat;
        std::size_t link;
    };

    std::optional<Threat> first_threat(const Node& n) const {
        for (std::size_t li = 0; li < n.links.size(); ++li) {
            const auto& l = n.links[li];
            Term cond = apply(n.bindings, l.condition);
            for (const auto& s : n.steps) {
                if (s.op.del.empty() || s.id == l.producer || s.id == l.consumer)
                    continue;
                if (n.precedes(s.id, l.producer) || n.precedes(l.consumer, s.id))
                    continue;
                for (const auto& d : s.op.del)
                    if (unifiable(apply(n.bindings, d), cond, n.bindings))
                        return Threat{s.id, li};
            }
        }
        return std::nullopt;
    }

    /// Admissible lower bound on further action steps.
    std::size_t lower_bound(const Node& n) const {
        if (!relaxed_ok_)
            return 0;
        std::size_t lb = 0;
        for (const auto& o : n.open) {
            Term c = apply(n.bindings, o.condition);
            bool existing = false;
            for (const auto& s : n.steps) {
                if (s.id == o.step || n.precedes(o.step, s.id))
                    continue;
                for (const auto& a : s.op.add)
                    if (unifiable(apply(n.bindings, a), c, n.bindings)) {
                        existing = true;
                        break;
                    }
                if (existing)
                    break;
            }
            if (existing)
                continue;
            std::size_t best = kUnreachable;
            if (c.is_ground()) {
                auto it = relaxed_.find(c);
                if (it != relaxed_.end())
                    best = it->second;
            } else {
                for (const auto& [f, layer] : relaxed_)
                    if (layer < best && unifiable(c, f, n.bindings))
                        best = layer;
            }
            if (best == kUnreachable)
                return best;
            lb = std::max<std::size_t>(lb, best > 0 ? 1 : 0);
        }
        return lb;
    }

    void search(const Node& n) {
        if (node_limit_hit_)
            return;
        if (++nodes_ > limits_.node_limit) {
            node_limit_hit_ = true;
            return;
        }
        if (n.actions > limit_ || n.inferences > limits_.max_inferences)
            return;
        if (auto t = first_threat(n)) {
            const auto& l = n.links[t->link];
            if (l.producer != kInit) {
                Node m = n;
                if (m.order(t->threat, l.producer))
                    search(m);
            }
            if (l.consumer != kGoal) {
                Node m = n;
                if (m.order(l.consumer, t->threat))
                    search(m);
            }
            return;
        }
        if (n.open.empty()) {
            consider_solution(n);
            return;
        }
        std::size_t lb = lower_bound(n);
        if (lb == kUnreachable || n.actions + lb > limit_)
            return;

        // Flaw selection: the open condition with the fewest resolvers.
        std::size_t pick = 0;
        std::vector<Node> best_children;
        bool first = true;
        for (std::size_t i = 0; i < n.open.size(); ++i) {
            auto children = resolve(n, i);
            if (first || children.size() < best_children.size()) {
                best_children = std::move(children);
                pick = i;
                first = false;
                if (best_children.empty())
                    break;
            }
        }
        (void)pick;
        for (const auto& c : best_children)
            search(c);
    }

    std::vector<Node> resolve(const Node& n, std::size_t oi) const {
        std::vector<Node> out;
        const auto open = n.open[oi];
        Term cond = apply(n.bindings, open.condition);

        auto link_to = [&](Node m, StepId producer) -> std::optional<Node> {
            m.open.erase(m.open.begin() + static_cast<std::ptrdiff_t>(oi));
            if (producer != kInit && !m.order(producer, open.step))
                return std::nullopt;
            m.links.push_back({producer, open.condition, open.step});
            if (!constraints_ok(m))
                return std::nullopt;
            return m;
        };

        // Existing support: init facts, then existing steps in id order.
        for (const auto& f : problem_.initial) {
            if (auto u = unify(cond, f, n.bindings)) {
                Node m = n;
                m.bindings = std::move(*u);
                if (auto r = link_to(std::move(m), kInit))
                    out.push_back(std::move(*r));
            }
        }
        for (const auto& s : n.steps) {
            if (s.id == open.step || n.precedes(open.step, s.id))
                continue;
            for (const auto& a : s.op.add) {
                if (auto u = unify(cond, apply(n.bindings, a), n.bindings)) {
                    Node m = n;
                    m.bindings = std::move(*u);
                    if (auto r = link_to(std::move(m), s.id))
                        out.push_back(std::move(*r));
                }
            }
        }
        // New steps.
        if (n.steps.size() + 2 >= kMaxSteps)
            return out;
        for (const auto& op : problem_.operators) {
            if (op.is_action() ? n.actions >= limit_ : n.inferences >= limits_.max_inferences)
                continue;
            for (std::size_t ai = 0; ai < op.add.size(); ++ai) {
                Renamer rn(n.var_counter);
                Operator fresh = op.renamed(rn);
                auto u = unify(cond, fresh.add[ai], n.bindings);
                if (!u)
                    continue;
                Node m = n;
                m.var_counter = rn.counter();
                m.bindings = std::move(*u);
                add_step(m, std::move(fresh));
                StepId id = m.steps.back().id;
                if (auto r = link_to(std::move(m), id))
                    out.push_back(std::move(*r));
            }
        }
        return out;
    }

    /// True if step `id` reaches the goal through causal links.
    static bool feeds_goal(const Node& n, StepId id) {
        std::set<StepId> seen{id};
        std::vector<StepId> stack{id};
        while (!stack.empty()) {
            StepId s = stack.back();
            stack.pop_back();
            if (s == kGoal)
                return true;
            for (const auto& l : n.links)
                if (l.producer == s && seen.insert(l.consumer).second)
                    stack.push_back(l.consumer);
        }
        return false;
    }

    void consider_solution(const Node& n) {
        for (const auto& s : n.steps)
            if (!apply(n.bindings, s.op.head()).is_ground())
                return;
        for (const auto& s : n.steps)
            for (const auto& c : s.op.constraints)
                if (!check_constraint(apply(n.bindings, c), init_set_, problem_.context).value_or(false))
                    return;
        for (const auto& c : goal_constraints_)
            if (!check_constraint(apply(n.bindings, c), init_set_, problem_.context).value_or(false))
                return;
        for (StepId r : required_ids_)
            if (!feeds_goal(n, r))
                return;
        Candidate c{{}, {}, n};
        for (StepId id : canonical_order(n)) {
            const auto* s = n.step(id);
            if (s->op.is_action())
                c.key_names.push_back(s->op.name);
            c.key_terms.push_back(apply(n.bindings, s->op.head()));
        }
        if (!best_ || std::tie(c.key_names, c.key_terms) < std::tie(best_->key_names, best_->key_terms))
            best_ = std::move(c);
    }

    /// Topological order choosing the smallest action term among ready steps.
    std::vector<StepId> canonical_order(const Node& n) const {
        std::vector<StepId> out;
        std::set<StepId> done;
        while (out.size() < n.steps.size()) {
            const Node::Step* pick = nullptr;
            Term pick_term;
            for (const auto& s : n.steps) {
                if (done.count(s.id))
                    continue;
                bool ready = std::all_of(n.steps.begin(), n.steps.end(), [&](const Node::Step& o) {
                    return done.count(o.id) || o.id == s.id || !n.precedes(o.id, s.id);
                });
                if (!ready)
                    continue;
                Term t = apply(n.bindings, s.op.head());
                if (!pick || t < pick_term || (t == pick_term && s.id < pick->id)) {
                    pick = &s;
                    pick_term = t;
                }
            }
            done.insert(pick->id);
            out.push_back(pick->id);
        }
        return out;
    }

    Plan finalize(const Node& n) const {
        Plan p;
        p.initial = problem_.initial;
        std::sort(p.initial.begin(), p.initial.end());
        p.initial.erase(std::unique(p.initial.begin(), p.initial.end()), p.initial.end());
        std::map<StepId, StepId> ids{{kInit, kInitStep}, {kGoal, kGoalStep}};
        StepId next = 1;
        for (StepId id : canonical_order(n))
            ids[id] = next++;
        for (StepId id : canonical_order(n))
            p.steps.push_back({ids[id], n.step(id)->op.instantiate(n.bindings)});
        for (const auto& g : problem_.goals)
            p.goals.push_back(g);
        // Goals as achieved: apply bindings to the renamed goal conditions.
        std::vector<Term> achieved;
        for (const auto& l : n.links) {
            CausalLink cl{ids.at(l.producer), apply(n.bindings, l.condition), ids.at(l.consumer)};
            p.links.push_back(cl);
            if (l.consumer == kGoal)
                achieved.push_back(cl.condition);
        }
        std::sort(p.links.begin(), p.links.end(), [](const CausalLink& a, const CausalLink& b) {
            return std::tie(a.consumer, a.producer, a.condition) < std::tie(b.consumer, b.producer, b.condition);
        });
        if (achieved.size() == p.goals.size())
            p.goals = goals_in_order(n);
        for (const auto& a : n.steps)
            for (const auto& b : n.steps)
                if (a.id != b.id && n.precedes(a.id, b.id)) {
                    bool implied_by_link = false;
                    for (const auto& l : n.links)
                        if (l.producer == a.id && l.consumer == b.id)
                            implied_by_link = true;
                    if (!implied_by_link && direct_order(n, a.id, b.id))
                        p.ordering.insert({ids[a.id], ids[b.id]});
                }
        return p;
    }

    std::vector<Term> goals_in_order(const Node& n) const {
        // Open goal conditions were created in order; their links carry the
        // renamed condition, which we resolve through the final bindings.
        std::vector<Term> out;
        Renamer goal_renamer(0);
        for (const auto& g : problem_.goals)
            out.push_back(apply(n.bindings, goal_renamer(g)));
        return out;
    }

    /// a < b is not implied by a chain through another step.
    static bool direct_order(const Node& n, StepId a, StepId b) {
        for (const auto& s : n.steps)
            if (s.id != a && s.id != b && n.precedes(a, s.id) && n.precedes(s.id, b))
                return false;
        return true;
    }

    void build_relaxed_layers() {
        relaxed_ok_ = true;
        FactIndex facts;
        for (const auto& f : problem_.initial)
            facts.insert(f);
        if (!close_under_rules(facts, problem_.operators, init_set_, problem_.context)) {
            relaxed_ok_ = false;
            return;
        }
        for (const auto& f : facts.all())
            relaxed_.emplace(f, 0);
        for (std::size_t layer = 1; layer <= limits_.bound; ++layer) {
            std::vector<Term> fresh;
            for (const auto& op : problem_.operators) {
                if (!op.is_action())
                    continue;
                bool ungroundable = false;
                for_each_match(op.pre, 0, facts, Substitution{}, [&](const Substitution& s) {
                    Operator g = op.instantiate(s);
                    if (!g.is_ground()) {
                        ungroundable = true;
                        return;
                    }
                    for (const auto& c : g.constraints)
                        if (!check_constraint(c, init_set_, problem_.context).value_or(false))
                            return;
                    for (const auto& a : g.add)
                        if (!facts.contains(a))
                            fresh.push_back(a);
                });
                if (ungroundable) {
                    relaxed_ok_ = false;
                    return;
                }
            }
            if (fresh.empty())
                break;
            for (const auto& f : fresh)
                facts.insert(f);
            if (!close_under_rules(facts, problem_.operators, init_set_, problem_.context)) {
                relaxed_ok_ = false;
                return;
            }
            for (const auto& f : facts.all())
                relaxed_.emplace(f, layer);
            if (facts.all().size() > 20000) {
                relaxed_ok_ = false;
                return;
            }
        }
    }

    static constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max() / 2;

    const PlanningProblem& problem_;
    SearchLimits limits_;
    std::set<Term> init_set_;
    std::vector<StepId> required_ids_;
    std::vector<Term> goal_constraints_;
    std::size_t limit_ = 0;
    std::size_t nodes_ = 0;
    bool node_limit_hit_ = false;
    std::optional<Candidate> best_;
    std::map<Term, std::size_t> relaxed_;
    bool relaxed_ok_ = false;
};

} // namespace pocl

/// Minimal-cost complete plan with at most `limits.bound` action steps.
/// Among equal-cost plans the lexicographically smallest operator-name
/// sequence (in canonical linear order) wins.
inline PlanResult plan(const PlanningProblem& problem, const SearchLimits& limits = {}) {
    if (limits.bound < 1)
        throw std::invalid_argument("planning bound must be at least 1");
    pocl::Search s(problem, limits);
    return s.run();
}

inline nlohmann::json plan_to_json(const Plan& p) {
    nlohmann::json steps = nlohmann::json::array();
    for (StepId id : linearize(p)) {
        const auto* s = p.step(id);
        steps.push_back({{"id", step_name(id)},
                         {"action", s->action().str()},
                         {"kind", s->op.is_action() ? "action" : "inference"}});
    }
    nlohmann::json links = nlohmann::json::array();
    for (const auto& l : p.links)
        links.push_back({{"producer", step_name(l.producer)}, {"condition", l.condition.str()}, {"consumer", step_name(l.consumer)}});
    nlohmann::json goals = nlohmann::json::array();
    for (const auto& g : p.goals)
        goals.push_back(g.str());
    return {{"steps", steps}, {"links", links}, {"goals", goals}, {"cost", cost(p)}};
}

// ---------------------------------------------------------------------------
// Completions

/// An ordered sub-plan grafted onto a plan's state.
struct Completion {
    std::vector<Operator> actions;  // ground, in execution order
    Term entry_state;
    Term achieved_goal;

    std::size_t size() const noexcept { return actions.size(); }

    std::vector<Term> actors() const {
        std::vector<Term> out;
        for (const auto& a : actions)
            out.push_back(a.actor);
        return out;
    }

    friend bool operator==(const Completion&, const Completion&) = default;
};

struct CompletionRequest {
    std::set<Term> context;          // ambient state the completion starts from
    std::vector<Operator> operators;
    ConstraintContext constraints;
    std::set<Term> initial;          // facts the no_contrary guard consults
    std::size_t bound = 8;
    std::optional<std::string> forbidden_actor;
    std::vector<Term> goal_constraints;
};

/// First fact of `facts` unifying with `goal` (and passing the goal
/// constraints), instantiated.
inline std::optional<Term> satisfies(const std::set<Term>& facts, const Term& goal,
                                     const std::vector<Term>& constraints = {},
                                     const std::set<Term>& initial = {}, const ConstraintContext& ctx = {}) {
    for (const auto& f : facts) {
        auto u = unify(goal, f);
        if (!u)
            continue;
        bool ok = true;
        for (const auto& c : constraints)
            ok = ok && check_constraint(apply(*u, c), initial, ctx).value_or(false);
        if (ok)
            return apply(*u, goal);
    }
    return std::nullopt;
}

/// Shortest nonempty action sequence from the ambient context whose first
/// action has a precondition unifying with `state` and after which `goal`
/// holds. Rules are closed over after every action. Breadth-first, so the
/// result is minimal; ties go to the smaller action-term sequence.
inline std::optional<Completion> complete_from(const Term& state, const Term& goal, const CompletionRequest& req) {
    if (req.bound < 1)
        throw std::invalid_argument("completion bound must be at least 1");
    struct Frontier {
        FactIndex facts;
        std::vector<Operator> actions;
    };
    FactIndex start(req.context);
    close_under_rules(start, req.operators, req.initial, req.constraints);
    std::vector<Frontier> layer{{start, {}}};
    std::set<std::set<Term>> visited{start.all()};
    for (std::size_t depth = 1; depth <= req.bound; ++depth) {
        std::vector<Frontier> next;
        for (const auto& node : layer) {
            std::vector<Operator> moves;
            for (const auto& op : req.operators) {
                if (!op.is_action())
                    continue;
                for (auto& g : applicable(op, node.facts, req.initial, req.constraints)) {
                    if (req.forbidden_actor && g.actor.is_atom() && g.actor.name() == *req.forbidden_actor)
                        continue;
                    if (node.actions.empty() &&
                        std::none_of(g.pre.begin(), g.pre.end(), [&](const Term& c) { return unifiable(c, state); }))
                        continue;
                    moves.push_back(std::move(g));
                }
            }
            std::sort(moves.begin(), moves.end(), [](const Operator& a, const Operator& b) { return a.head() < b.head(); });
            for (const auto& m : moves) {
                std::set<Term> s = node.facts.all();
                for (const auto& d : m.del)
                    s.erase(d);
                for (const auto& a : m.add)
                    s.insert(a);
                FactIndex idx(s);
                close_under_rules(idx, req.operators, req.initial, req.constraints);
                auto actions = node.actions;
                actions.push_back(m);
                if (auto g = satisfies(idx.all(), goal, req.goal_constraints, req.initial, req.constraints))
                    return Completion{std::move(actions), state, *g};
                if (visited.insert(idx.all()).second)
                    next.push_back({std::move(idx), std::move(actions)});
            }
        }
        layer = std::move(next);
        if (layer.empty())
            break;
    }
    return std::nullopt;
}

} // namespace vg
