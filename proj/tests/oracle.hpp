#pragma once

// Brute-force reference implementations used to check the planner. These
// share only the term layer with the library: matching, constraint checks,
// rule closure and search are written out again here.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vg/planner.hpp"
#include "vg/term.hpp"

namespace oracle {

using vg::Term;

// ---------------------------------------------------------------------------
// Ground STRIPS over at most 32 atoms, states as bitmasks.

struct GroundOp {
    std::string name;
    std::uint32_t pre = 0, add = 0, del = 0;
};

struct GroundProblem {
    std::size_t atoms = 0;
    std::uint32_t init = 0;
    std::uint32_t goal = 0;
    std::vector<GroundOp> ops;
};

inline std::uint32_t step(std::uint32_t s, const GroundOp& o) { return (s & ~o.del) | o.add; }

/// Length of the shortest action sequence reaching the goal, if any
/// within `bound`.
inline std::optional<std::size_t> bfs_min(const GroundProblem& p, std::size_t bound) {
    if ((p.init & p.goal) == p.goal)
        return 0;
    std::map<std::uint32_t, std::size_t> dist{{p.init, 0}};
    std::queue<std::uint32_t> q;
    q.push(p.init);
    while (!q.empty()) {
        auto s = q.front();
        q.pop();
        std::size_t d = dist[s];
        if (d == bound)
            continue;
        for (const auto& o : p.ops) {
            if ((s & o.pre) != o.pre)
                continue;
            auto n = step(s, o);
            if (dist.count(n))
                continue;
            if ((n & p.goal) == p.goal)
                return d + 1;
            dist[n] = d + 1;
            q.push(n);
        }
    }
    return std::nullopt;
}

inline Term atom_term(std::size_t i) { return vg::atom("a" + std::to_string(i)); }

inline std::vector<Term> mask_terms(std::uint32_t m) {
    std::vector<Term> out;
    for (std::size_t i = 0; i < 32; ++i)
        if (m >> i & 1U)
            out.push_back(atom_term(i));
    return out;
}

/// The same problem in the library's representation.
inline vg::PlanningProblem to_problem(const GroundProblem& g) {
    vg::PlanningProblem p;
    p.initial = mask_terms(g.init);
    p.goals = mask_terms(g.goal);
    for (const auto& o : g.ops) {
        vg::Operator op;
        op.name = o.name;
        op.pre = mask_terms(o.pre);
        op.add = mask_terms(o.add);
        op.del = mask_terms(o.del);
        op.actor = vg::atom("agent");
        p.operators.push_back(op);
    }
    return p;
}

inline std::uint32_t random_mask(std::mt19937& rng, std::size_t atoms, std::size_t max_bits) {
    std::uniform_int_distribution<std::size_t> count(0, max_bits), pick(0, atoms - 1);
    std::uint32_t m = 0;
    for (std::size_t k = count(rng); k > 0; --k)
        m |= 1U << pick(rng);
    return m;
}

/// Random domain with at most `max_atoms` atoms and `max_ops` operators.
inline GroundProblem random_problem(std::mt19937& rng, std::size_t max_atoms = 8, std::size_t max_ops = 6) {
    GroundProblem p;
    p.atoms = std::uniform_int_distribution<std::size_t>(3, max_atoms)(rng);
    std::size_t n_ops = std::uniform_int_distribution<std::size_t>(1, max_ops)(rng);
    p.init = random_mask(rng, p.atoms, 3);
    do {
        p.goal = random_mask(rng, p.atoms, 3);
    } while (p.goal == 0);
    for (std::size_t i = 0; i < n_ops; ++i) {
        GroundOp o;
        o.name = "op" + std::to_string(i);
        o.pre = random_mask(rng, p.atoms, 2);
        do {
            o.add = random_mask(rng, p.atoms, 2);
        } while (o.add == 0);
        o.del = random_mask(rng, p.atoms, 2) & ~o.add;
        p.ops.push_back(o);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Lifted operators over ground facts, with inference rules closed after
// every action.

using Facts = std::set<Term>;

inline void match_all(const std::vector<Term>& conds, std::size_t i, const Facts& facts, const vg::Substitution& s,
                      std::vector<vg::Substitution>& out) {
    if (i == conds.size()) {
        out.push_back(s);
        return;
    }
    for (const auto& f : facts)
        if (auto u = vg::unify(conds[i], f, s))
            match_all(conds, i + 1, facts, *u, out);
}

inline bool constraint_holds(const Term& c, const Facts& initial, const vg::ConstraintContext& ctx) {
    if (c.is("distinct", 2))
        return !(c.arg(0) == c.arg(1));
    if (c.is("reliable_source", 2)) {
        Term p = c.arg(1).is("not", 1) ? c.arg(1).arg(0) : c.arg(1);
        return ctx.reliable.count({c.arg(0).name(), p.name()}) > 0;
    }
    if (c.is("no_contrary", 2)) {
        Term a = c.arg(0), p = c.arg(1);
        if (initial.count(vg::fn("bel", a, vg::fn("not", p))))
            return false;
        return !(p.is("not", 1) && initial.count(vg::fn("bel", a, p.arg(0))));
    }
    return false;
}

struct GroundAction {
    Term head;
    Term actor;
    std::vector<Term> pre, add, del;
};

inline std::vector<GroundAction> ground(const vg::Operator& op, const Facts& facts, const Facts& initial,
                                        const vg::ConstraintContext& ctx) {
    std::vector<vg::Substitution> subs;
    match_all(op.pre, 0, facts, {}, subs);
    std::vector<GroundAction> out;
    std::set<Term> seen;
    for (const auto& s : subs) {
        bool ok = true;
        for (const auto& c : op.constraints)
            ok = ok && constraint_holds(vg::apply(s, c), initial, ctx);
        if (!ok)
            continue;
        Term head = vg::apply(s, op.head());
        if (!head.is_ground() || !seen.insert(head).second)
            continue;
        out.push_back({head, op.actor.empty() ? Term() : vg::apply(s, op.actor), vg::apply(s, op.pre), vg::apply(s, op.add),
                       vg::apply(s, op.del)});
    }
    return out;
}

inline Facts close(Facts facts, const std::vector<vg::Operator>& ops, const Facts& initial,
                   const vg::ConstraintContext& ctx) {
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& op : ops)
            if (!op.is_action())
                for (const auto& g : ground(op, facts, initial, ctx))
                    for (const auto& a : g.add)
                        changed = facts.insert(a).second || changed;
    }
    return facts;
}

inline bool satisfied(const Facts& facts, const std::vector<Term>& goals) {
    std::vector<vg::Substitution> subs;
    match_all(goals, 0, facts, {}, subs);
    return !subs.empty();
}

/// Shortest action sequence (rules free) reaching all goals. If `must_use`
/// is set, only sequences containing that action count.
inline std::optional<std::size_t> lifted_bfs_min(const std::vector<Term>& initial, const std::vector<Term>& goals,
                                                 const std::vector<vg::Operator>& ops,
                                                 const vg::ConstraintContext& ctx, std::size_t bound,
                                                 std::optional<Term> must_use = std::nullopt) {
    Facts init(initial.begin(), initial.end());
    struct Node {
        Facts facts;
        bool used;
    };
    Node start{close(init, ops, init, ctx), !must_use};
    if (start.used && satisfied(start.facts, goals))
        return 0;
    std::vector<Node> layer{start};
    std::set<std::pair<Facts, bool>> seen{{start.facts, start.used}};
    for (std::size_t d = 1; d <= bound; ++d) {
        std::vector<Node> next;
        for (const auto& n : layer)
            for (const auto& op : ops) {
                if (!op.is_action())
                    continue;
                for (const auto& g : ground(op, n.facts, init, ctx)) {
                    Facts f = n.facts;
                    for (const auto& x : g.del)
                        f.erase(x);
                    for (const auto& x : g.add)
                        f.insert(x);
                    f = close(std::move(f), ops, init, ctx);
                    bool used = n.used || (must_use && g.head == *must_use);
                    if (used && satisfied(f, goals))
                        return d;
                    if (seen.insert({f, used}).second)
                        next.push_back({std::move(f), used});
                }
            }
        layer = std::move(next);
    }
    return std::nullopt;
}

/// Facts after running `seq` from `initial` with rule closure, or nothing
/// when some precondition is missing.
inline std::optional<Facts> run(const std::vector<Term>& initial, const std::vector<GroundAction>& seq,
                                const std::vector<vg::Operator>& ops, const vg::ConstraintContext& ctx) {
    Facts init(initial.begin(), initial.end());
    Facts f = close(init, ops, init, ctx);
    for (const auto& a : seq) {
        for (const auto& c : a.pre)
            if (!f.count(c))
                return std::nullopt;
        for (const auto& x : a.del)
            f.erase(x);
        for (const auto& x : a.add)
            f.insert(x);
        f = close(std::move(f), ops, init, ctx);
    }
    return f;
}

/// Shortest sequence reaching the goals that contains `needed` and stops
/// reaching them once every occurrence of `needed` is dropped.
inline std::optional<std::size_t> lifted_min_needing(const std::vector<Term>& initial, const std::vector<Term>& goals,
                                                     const std::vector<vg::Operator>& ops,
                                                     const vg::ConstraintContext& ctx, std::size_t bound,
                                                     const Term& needed) {
    Facts init(initial.begin(), initial.end());
    std::vector<GroundAction> seq;
    auto essential = [&] {
        std::vector<GroundAction> without;
        for (const auto& a : seq)
            if (!(a.head == needed))
                without.push_back(a);
        if (without.size() == seq.size())
            return false;
        auto f = run(initial, without, ops, ctx);
        return !f || !satisfied(*f, goals);
    };
    std::function<bool(const Facts&, std::size_t)> dfs = [&](const Facts& f, std::size_t left) {
        if (left == 0)
            return satisfied(f, goals) && essential();
        for (const auto& op : ops) {
            if (!op.is_action())
                continue;
            for (const auto& g : ground(op, f, init, ctx)) {
                Facts n = f;
                for (const auto& x : g.del)
                    n.erase(x);
                for (const auto& x : g.add)
                    n.insert(x);
                seq.push_back(g);
                bool hit = dfs(close(std::move(n), ops, init, ctx), left - 1);
                seq.pop_back();
                if (hit)
                    return true;
            }
        }
        return false;
    };
    Facts start = close(init, ops, init, ctx);
    for (std::size_t d = 1; d <= bound; ++d)
        if (dfs(start, d))
            return d;
    return std::nullopt;
}

} // namespace oracle
