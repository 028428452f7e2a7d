#pragma once

// Nested belief environments.
//
// A store maps viewpoint paths to sets of attitudes. The path [system, expert]
// is the system's view of the expert; an attitude stored there omits its
// agent, so `bel(p)` at [system, expert] renders as bel(system, bel(expert, p)).
// Nested bel/goal/int with an atom agent inside a belief are pushed into the
// path on the way in, giving every fact a single stored form.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vg/term.hpp"
#include "vg/trace.hpp"

namespace vg {

inline constexpr std::size_t kMaxNestingDepth = 4;

enum class AttitudeKind { bel, goal, intention };

inline const char* kind_name(AttitudeKind k) {
    switch (k) {
    case AttitudeKind::bel:
        return "bel";
    case AttitudeKind::goal:
        return "goal";
    case AttitudeKind::intention:
        return "int";
    }
    return "?";
}

inline std::optional<AttitudeKind> kind_from_name(const std::string& s) {
    if (s == "bel")
        return AttitudeKind::bel;
    if (s == "goal")
        return AttitudeKind::goal;
    if (s == "int")
        return AttitudeKind::intention;
    return std::nullopt;
}

/// A bel/goal/int stance in agent-less stored form.
struct Attitude {
    AttitudeKind kind = AttitudeKind::bel;
    Term content;

    static Attitude bel(Term c) { return {AttitudeKind::bel, std::move(c)}; }
    static Attitude goal(Term c) { return {AttitudeKind::goal, std::move(c)}; }
    static Attitude intention(Term c) { return {AttitudeKind::intention, std::move(c)}; }

    /// kind(content), e.g. bel(p).
    Term term() const { return Term::compound(kind_name(kind), {content}); }

    /// Parses the stored form kind(content).
    static Attitude from_term(const Term& t) {
        if (!t.is_compound() || t.arity() != 1)
            throw std::invalid_argument("attitude must be bel(X), goal(X) or int(X): " + t.str());
        auto k = kind_from_name(t.name());
        if (!k)
            throw std::invalid_argument("unknown attitude kind: " + t.name());
        return {*k, t.arg(0)};
    }

    /// Renders with an explicit agent: kind(agent, content).
    Term with_agent(const std::string& agent) const { return Term::compound(kind_name(kind), {Term::atom(agent), content}); }

    std::string str() const { return term().str(); }

    friend bool operator==(const Attitude&, const Attitude&) = default;
    friend std::strong_ordering operator<=>(const Attitude& a, const Attitude& b) {
        if (auto c = a.kind <=> b.kind; c != 0)
            return c;
        return a.content <=> b.content;
    }
};

/// Nonempty agent nesting; element 0 is the outermost environment.
class ViewpointPath {
public:
    ViewpointPath() = default;
    ViewpointPath(std::initializer_list<std::string> agents) : agents_(agents) { validate(); }
    explicit ViewpointPath(std::vector<std::string> agents) : agents_(std::move(agents)) { validate(); }

    const std::vector<std::string>& agents() const noexcept { return agents_; }
    std::size_t depth() const noexcept { return agents_.size(); }
    bool empty() const noexcept { return agents_.empty(); }
    const std::string& front() const { return agents_.front(); }
    const std::string& back() const { return agents_.back(); }

    ViewpointPath extend(const std::string& agent) const {
        auto a = agents_;
        a.push_back(agent);
        return ViewpointPath(std::move(a));
    }

    /// True if `other` starts with this path.
    bool is_prefix_of(const ViewpointPath& other) const {
        return agents_.size() <= other.agents_.size() &&
               std::equal(agents_.begin(), agents_.end(), other.agents_.begin());
    }

    ViewpointPath suffix_after(std::size_t n) const {
        return ViewpointPath(std::vector<std::string>(agents_.begin() + static_cast<std::ptrdiff_t>(n), agents_.end()));
    }

    std::string str() const {
        std::string out = "[";
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            if (i)
                out += ", ";
            out += agents_[i];
        }
        return out + "]";
    }

    nlohmann::json to_json() const { return agents_; }

    friend bool operator==(const ViewpointPath&, const ViewpointPath&) = default;
    friend auto operator<=>(const ViewpointPath&, const ViewpointPath&) = default;

private:
    void validate() {
        if (agents_.empty())
            throw std::invalid_argument("viewpoint path must be nonempty");
        for (auto& a : agents_)
            a = Term::atom(a).name();
    }

    std::vector<std::string> agents_;
};

class ContradictionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DepthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidAttitude : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// True for bel(A, X), goal(A, X), int(A, X) with an atom agent.
inline bool is_agent_attitude(const Term& t) {
    return t.is_compound() && t.arity() == 2 && kind_from_name(t.name()) && t.arg(0).is_atom();
}

/// Pushes nested agent attitudes inside a belief into the path:
/// ([s], bel(bel(e, p))) -> ([s, e], bel(p)).
inline std::pair<ViewpointPath, Attitude> normalize(ViewpointPath path, Attitude a) {
    while (a.kind == AttitudeKind::bel && is_agent_attitude(a.content)) {
        const Term inner = a.content;
        path = path.extend(inner.arg(0).name());
        a = Attitude{*kind_from_name(inner.name()), inner.arg(1)};
    }
    return {std::move(path), std::move(a)};
}

/// bel(a1, bel(a2, ... kind(an, content))).
inline Term render(const ViewpointPath& path, const Attitude& a) {
    const auto& ags = path.agents();
    Term t = a.with_agent(ags.back());
    for (std::size_t i = ags.size() - 1; i-- > 0;)
        t = fn("bel", Term::atom(ags[i]), t);
    return t;
}

/// Inverse of `render` for a term of the form kind(agent, X).
inline std::pair<ViewpointPath, Attitude> from_rendered(const Term& t) {
    if (!is_agent_attitude(t))
        throw std::invalid_argument("not an agent attitude: " + t.str());
    return normalize(ViewpointPath{t.arg(0).name()}, Attitude{*kind_from_name(t.name()), t.arg(1)});
}

/// Discourse expectation left by a yes/no question: `asker` expects
/// `addressee` to answer whether `proposition` holds.
struct Expectation {
    std::string asker;
    std::string addressee;
    Term proposition;

    friend bool operator==(const Expectation&, const Expectation&) = default;
    friend auto operator<=>(const Expectation&, const Expectation&) = default;
};

/// Stereotype trigger: `planned` stereotypes are offered to the planner's
/// ascribe operator; `immediate` ones are ascribed when the scenario loads.
enum class StereotypeTrigger { planned, immediate };

/// Templates may use ?self for the member agent.
struct Stereotype {
    std::string name;
    std::vector<std::string> members;
    StereotypeTrigger trigger = StereotypeTrigger::planned;
    std::vector<Attitude> attitudes;
    std::vector<Term> goal_library;  // goal(?self, X) templates

    bool has_member(const std::string& agent) const {
        return std::find(members.begin(), members.end(), agent) != members.end();
    }

    friend bool operator==(const Stereotype&, const Stereotype&) = default;
};

class BeliefStore {
public:
    using Space = std::set<Attitude>;

    const std::map<ViewpointPath, Space>& spaces() const noexcept { return spaces_; }
    const std::vector<Expectation>& expectations() const noexcept { return expectations_; }
    const std::set<std::pair<std::string, std::string>>& reliable_sources() const noexcept { return reliable_; }
    const std::set<std::string>& actions() const noexcept { return actions_; }

    const Space* at(const ViewpointPath& p) const {
        auto it = spaces_.find(p);
        return it == spaces_.end() ? nullptr : &it->second;
    }

    std::size_t attitude_count() const {
        std::size_t n = 0;
        for (const auto& [p, s] : spaces_)
            n += s.size();
        return n;
    }

    bool is_reliable(const std::string& agent, const std::string& topic) const {
        return reliable_.count({agent, topic}) > 0;
    }

    bool is_action(const std::string& name) const { return actions_.count(name) > 0; }

    [[nodiscard]] BeliefStore with_reliable(const std::string& agent, const std::string& topic, Trace* trace = nullptr) const {
        BeliefStore out = *this;
        if (out.reliable_.insert({agent, topic}).second)
            emit(trace, "belief-spaces", "declare-reliable", {{"agent", agent}, {"topic", topic}});
        return out;
    }

    [[nodiscard]] BeliefStore with_action(const std::string& name, Trace* trace = nullptr) const {
        BeliefStore out = *this;
        if (out.actions_.insert(name).second)
            emit(trace, "belief-spaces", "declare-action", {{"name", name}});
        return out;
    }

    [[nodiscard]] BeliefStore with_expectation(const Expectation& e, Trace* trace = nullptr) const {
        BeliefStore out = *this;
        if (std::find(out.expectations_.begin(), out.expectations_.end(), e) == out.expectations_.end()) {
            out.expectations_.push_back(e);
            emit(trace, "dialogue-acts", "expect",
                 {{"asker", e.asker}, {"addressee", e.addressee}, {"proposition", e.proposition.str()}});
        }
        return out;
    }

    friend bool operator==(const BeliefStore&, const BeliefStore&) = default;

    /// Inserts an already-normalized attitude. Returns false if present.
    /// Bypasses all checks; `assert_attitude` is the checked entry point.
    bool insert_raw(const ViewpointPath& p, const Attitude& a) { return spaces_[p].insert(a).second; }

private:
    std::map<ViewpointPath, Space> spaces_;
    std::vector<Expectation> expectations_;
    std::set<std::pair<std::string, std::string>> reliable_;
    std::set<std::string> actions_;
};

namespace detail {

inline bool space_has(const BeliefStore& store, const ViewpointPath& path, const Attitude& a) {
    const auto* space = store.at(path);
    if (!space)
        return false;
    if (space->count(a))
        return true;
    for (const auto& s : *space)
        if (s.kind == a.kind && unifiable(s.content, a.content))
            return true;
    return false;
}

inline void check_depth(const ViewpointPath& p) {
    if (p.depth() > kMaxNestingDepth)
        throw DepthError("nesting depth " + std::to_string(p.depth()) + " exceeds cap of " +
                         std::to_string(kMaxNestingDepth) + " at " + p.str());
}

} // namespace detail

/// True iff `a` (after normalization) is stored at `path`, or unifies with a
/// stored attitude of the same kind.
inline bool holds(const BeliefStore& store, const ViewpointPath& path, const Attitude& a) {
    auto [p, n] = normalize(path, a);
    return detail::space_has(store, p, n);
}

/// Syntactic contrary evidence: not(content) holds at path, or content is
/// not(q) and q holds there. Checked for attitudes of the given kind.
inline bool contrary_evidence(const BeliefStore& store, const ViewpointPath& path, const Term& content,
                              AttitudeKind kind = AttitudeKind::bel) {
    if (holds(store, path, Attitude{kind, negate(content)}))
        return true;
    if (content.is("not", 1) && holds(store, path, Attitude{kind, content.arg(0)}))
        return true;
    return false;
}

/// Adds `a` at `path`. Throws ContradictionError when a belief's negation is
/// already present, DepthError past the nesting cap, InvalidAttitude for an
/// intention over an unregistered action.
[[nodiscard]] inline BeliefStore assert_attitude(const BeliefStore& store, const ViewpointPath& path,
                                                 const Attitude& a, Trace* trace = nullptr,
                                                 const std::string& rule = "assert") {
    auto [p, n] = normalize(path, a);
    detail::check_depth(p);
    if (n.kind == AttitudeKind::intention) {
        const Term& act = strip_not(n.content);
        if (act.is_var() || !store.is_action(act.name()))
            throw InvalidAttitude("intention content is not a registered action: " + n.content.str());
    }
    if (store.at(p) && store.at(p)->count(n))
        return store;
    if (n.kind == AttitudeKind::bel && contrary_evidence(store, p, n.content))
        throw ContradictionError("contradiction at " + p.str() + ": " + n.str());
    BeliefStore out = store;
    out.insert_raw(p, n);
    emit(trace, "belief-spaces", "assert",
         {{"path", p.to_json()}, {"attitude", n.str()}, {"rendered", render(p, n).str()}, {"rule", rule}});
    return out;
}

/// Single-level default ascription from `from` into `to` (= from + one
/// agent). std::nullopt means blocked by contrary evidence at the target;
/// the block is traced.
[[nodiscard]] inline std::optional<BeliefStore> default_ascribe(const BeliefStore& store, const ViewpointPath& from,
                                                                const ViewpointPath& to, const Attitude& a,
                                                                Trace* trace = nullptr,
                                                                const std::string& rule = "default-ascription") {
    if (to.depth() != from.depth() + 1 || !from.is_prefix_of(to))
        throw std::invalid_argument("ascription target " + to.str() + " must extend " + from.str() + " by one agent");
    auto [p, n] = normalize(to, a);
    if (contrary_evidence(store, p, n.content, n.kind)) {
        emit(trace, "belief-spaces", "block",
             {{"path", p.to_json()}, {"attitude", n.str()}, {"rule", rule}, {"reason", "contrary_evidence"}});
        return std::nullopt;
    }
    detail::check_depth(p);
    if (store.at(p) && store.at(p)->count(n))
        return store;
    BeliefStore out = assert_attitude(store, p, n, nullptr);
    emit(trace, "belief-spaces", "ascribe",
         {{"from", from.to_json()},
          {"path", p.to_json()},
          {"attitude", n.str()},
          {"rendered", render(p, n).str()},
          {"rule", rule}});
    return out;
}

/// Instantiates each stereotype attitude with `bindings` and asserts it at
/// `path`, skipping (and tracing) those blocked by contrary evidence.
[[nodiscard]] inline BeliefStore stereotype_ascribe(const BeliefStore& store, const ViewpointPath& path,
                                                    const Stereotype& st, const Substitution& bindings,
                                                    Trace* trace = nullptr) {
    BeliefStore out = store;
    const std::string rule = "stereotype:" + st.name;
    for (const auto& tmpl : st.attitudes) {
        Attitude a{tmpl.kind, apply(bindings, tmpl.content)};
        auto [p, n] = normalize(path, a);
        if (contrary_evidence(out, p, n.content, n.kind)) {
            emit(trace, "belief-spaces", "block",
                 {{"path", p.to_json()}, {"attitude", n.str()}, {"rule", rule}, {"reason", "contrary_evidence"}});
            continue;
        }
        out = assert_attitude(out, p, n, trace, rule);
    }
    return out;
}

/// Rebuilds a store from the store-mutating events of a trace.
inline BeliefStore replay_store(const Trace& trace) {
    BeliefStore out;
    for (const auto& e : trace.events()) {
        if (e.kind == "assert" || e.kind == "ascribe") {
            ViewpointPath p(e.data.at("path").get<std::vector<std::string>>());
            out.insert_raw(p, Attitude::from_term(parse_term(e.data.at("attitude").get<std::string>())));
        } else if (e.kind == "declare-reliable") {
            out = out.with_reliable(e.data.at("agent"), e.data.at("topic"));
        } else if (e.kind == "declare-action") {
            out = out.with_action(e.data.at("name"));
        } else if (e.kind == "expect") {
            out = out.with_expectation(Expectation{e.data.at("asker"), e.data.at("addressee"),
                                                   parse_term(e.data.at("proposition").get<std::string>())});
        }
    }
    return out;
}

} // namespace vg
