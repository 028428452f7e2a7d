#pragma once

// First-order terms, substitutions and unification.
//
// Terms are immutable handles onto shared nodes, so copying a Term is a
// pointer copy. All atom, functor and variable names are normalized to
// lowercase on construction.

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vg {

enum class TermKind { atom, compound, variable };

/// Raised for malformed text input. Line and column are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : std::runtime_error(std::to_string(line) + ":" + std::to_string(column) + ": " + what),
          line_(line), column_(column), message_(what) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string message_;
};

namespace detail {

inline std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

inline void check_name(std::string_view name, const char* what) {
    if (name.empty())
        throw std::invalid_argument(std::string(what) + " name must be nonempty");
    for (char c : name)
        if (!is_name_char(c))
            throw std::invalid_argument(std::string(what) + " name has invalid character: " + std::string(name));
}

inline std::size_t hash_combine(std::size_t seed, std::size_t v) {
    return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

} // namespace detail

class Term {
public:
    /// The empty term. Only useful as a "no value" marker; most operations
    /// reject it.
    Term() = default;

    static Term atom(std::string_view name) {
        if (!name.empty() && name.front() == '?')
            throw std::invalid_argument("atoms may not begin with '?': " + std::string(name));
        detail::check_name(name, "atom");
        return Term(std::make_shared<const Node>(TermKind::atom, detail::lowercase(name), std::vector<Term>{}));
    }

    /// `name` is given without the leading '?'.
    static Term var(std::string_view name) {
        if (!name.empty() && name.front() == '?')
            name.remove_prefix(1);
        detail::check_name(name, "variable");
        return Term(std::make_shared<const Node>(TermKind::variable, detail::lowercase(name), std::vector<Term>{}));
    }

    static Term compound(std::string_view functor, std::vector<Term> args) {
        if (args.empty())
            throw std::invalid_argument("compound terms need at least one argument: " + std::string(functor));
        if (!functor.empty() && functor.front() == '?')
            throw std::invalid_argument("functors may not begin with '?'");
        detail::check_name(functor, "functor");
        for (const auto& a : args)
            if (a.empty())
                throw std::invalid_argument("compound argument is the empty term");
        return Term(std::make_shared<const Node>(TermKind::compound, detail::lowercase(functor), std::move(args)));
    }

    bool empty() const noexcept { return node_ == nullptr; }
    TermKind kind() const { return node().kind; }
    bool is_atom() const { return !empty() && node_->kind == TermKind::atom; }
    bool is_var() const { return !empty() && node_->kind == TermKind::variable; }
    bool is_compound() const { return !empty() && node_->kind == TermKind::compound; }

    /// Atom name, functor, or variable name (without '?').
    const std::string& name() const { return node().name; }
    const std::vector<Term>& args() const { return node().args; }
    std::size_t arity() const { return node().args.size(); }
    const Term& arg(std::size_t i) const { return node().args.at(i); }

    bool is_ground() const { return node().ground; }
    std::size_t hash() const { return empty() ? 0 : node_->hash; }

    /// True for compound terms with the given functor and arity.
    bool is(std::string_view functor, std::size_t n) const {
        return is_compound() && node_->args.size() == n && node_->name == functor;
    }

    friend bool operator==(const Term& a, const Term& b) {
        if (a.node_ == b.node_)
            return true;
        if (!a.node_ || !b.node_)
            return false;
        if (a.node_->hash != b.node_->hash || a.node_->kind != b.node_->kind || a.node_->name != b.node_->name)
            return false;
        return a.node_->args == b.node_->args;
    }

    /// Total order: empty < atom < compound < variable, then name, arity, args.
    friend std::strong_ordering operator<=>(const Term& a, const Term& b) {
        if (a.node_ == b.node_)
            return std::strong_ordering::equal;
        if (!a.node_)
            return std::strong_ordering::less;
        if (!b.node_)
            return std::strong_ordering::greater;
        if (auto c = a.node_->kind <=> b.node_->kind; c != 0)
            return c;
        if (auto c = a.node_->name.compare(b.node_->name); c != 0)
            return c < 0 ? std::strong_ordering::less : std::strong_ordering::greater;
        if (auto c = a.node_->args.size() <=> b.node_->args.size(); c != 0)
            return c;
        for (std::size_t i = 0; i < a.node_->args.size(); ++i)
            if (auto c = a.node_->args[i] <=> b.node_->args[i]; c != 0)
                return c;
        return std::strong_ordering::equal;
    }

    /// Canonical text: functor(arg1, arg2); variables as ?name.
    std::string str() const {
        std::string out;
        write(out);
        return out;
    }

    void write(std::string& out) const {
        if (empty()) {
            out += "<empty>";
            return;
        }
        switch (node_->kind) {
        case TermKind::atom:
            out += node_->name;
            break;
        case TermKind::variable:
            out += '?';
            out += node_->name;
            break;
        case TermKind::compound:
            out += node_->name;
            out += '(';
            for (std::size_t i = 0; i < node_->args.size(); ++i) {
                if (i)
                    out += ", ";
                node_->args[i].write(out);
            }
            out += ')';
            break;
        }
    }

private:
    struct Node {
        Node(TermKind k, std::string n, std::vector<Term> a) : kind(k), name(std::move(n)), args(std::move(a)) {
            ground = kind != TermKind::variable;
            hash = detail::hash_combine(std::hash<std::string>{}(name), static_cast<std::size_t>(kind));
            for (const auto& t : args) {
                ground = ground && t.is_ground();
                hash = detail::hash_combine(hash, t.hash());
            }
        }
        TermKind kind;
        std::string name;
        std::vector<Term> args;
        bool ground = true;
        std::size_t hash = 0;
    };

    explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    const Node& node() const {
        if (!node_)
            throw std::logic_error("operation on the empty term");
        return *node_;
    }

    std::shared_ptr<const Node> node_;
};

inline std::ostream& operator<<(std::ostream& os, const Term& t) {
    return os << t.str();
}

// Convenience builders used throughout the engine and tests.
inline Term atom(std::string_view n) { return Term::atom(n); }
inline Term var(std::string_view n) { return Term::var(n); }
template <class... Args>
Term fn(std::string_view functor, Args&&... args) {
    return Term::compound(functor, std::vector<Term>{std::forward<Args>(args)...});
}
inline Term negate(const Term& t) { return Term::compound("not", {t}); }

/// `not(x)` -> x, anything else unchanged.
inline const Term& strip_not(const Term& t) { return t.is("not", 1) ? t.arg(0) : t; }

/// Variable bindings, kept in triangular form: a bound value may mention
/// other bound variables. `apply` resolves to a fixpoint.
class Substitution {
public:
    Substitution() = default;

    bool empty() const noexcept { return bindings_.empty(); }
    std::size_t size() const noexcept { return bindings_.size(); }
    const std::map<std::string, Term>& bindings() const noexcept { return bindings_; }

    const Term* lookup(const std::string& var_name) const {
        auto it = bindings_.find(var_name);
        return it == bindings_.end() ? nullptr : &it->second;
    }

    /// Adds a binding without an occurs-check. Callers that need the check
    /// go through `unify`.
    void bind(const std::string& var_name, Term value) { bindings_.insert_or_assign(var_name, std::move(value)); }

    /// Follows variable chains until reaching a non-variable or unbound var.
    Term walk(Term t) const {
        while (t.is_var()) {
            const Term* next = lookup(t.name());
            if (!next)
                break;
            t = *next;
        }
        return t;
    }

    friend bool operator==(const Substitution&, const Substitution&) = default;

private:
    std::map<std::string, Term> bindings_;
};

inline Term apply(const Substitution& s, const Term& t) {
    if (t.empty() || s.empty() || t.is_ground())
        return t;
    if (t.is_var()) {
        Term w = s.walk(t);
        return w.is_var() ? w : apply(s, w);
    }
    if (t.is_atom())
        return t;
    std::vector<Term> args;
    args.reserve(t.arity());
    bool changed = false;
    for (const auto& a : t.args()) {
        args.push_back(apply(s, a));
        changed = changed || !(args.back() == a);
    }
    return changed ? Term::compound(t.name(), std::move(args)) : t;
}

inline std::vector<Term> apply(const Substitution& s, const std::vector<Term>& ts) {
    std::vector<Term> out;
    out.reserve(ts.size());
    for (const auto& t : ts)
        out.push_back(apply(s, t));
    return out;
}

namespace detail {

inline bool occurs(const std::string& v, const Term& t, const Substitution& s) {
    Term w = s.walk(t);
    if (w.is_var())
        return w.name() == v;
    if (w.is_compound())
        for (const auto& a : w.args())
            if (!a.is_ground() && occurs(v, a, s))
                return true;
    return false;
}

inline bool unify_into(const Term& a, const Term& b, Substitution& s) {
    Term x = s.walk(a);
    Term y = s.walk(b);
    if (x == y)
        return true;
    if (x.is_var()) {
        if (occurs(x.name(), y, s))
            return false;
        s.bind(x.name(), y);
        return true;
    }
    if (y.is_var()) {
        if (occurs(y.name(), x, s))
            return false;
        s.bind(y.name(), x);
        return true;
    }
    if (x.kind() != y.kind() || x.name() != y.name() || x.arity() != y.arity())
        return false;
    for (std::size_t i = 0; i < x.arity(); ++i)
        if (!unify_into(x.arg(i), y.arg(i), s))
            return false;
    return true;
}

} // namespace detail

/// Most general unifier of `a` and `b` extending `s`, with occurs-check.
/// std::nullopt means the terms do not unify; that is an ordinary outcome.
inline std::optional<Substitution> unify(const Term& a, const Term& b, Substitution s = {}) {
    if (a.empty() || b.empty())
        return std::nullopt;
    if (!detail::unify_into(a, b, s))
        return std::nullopt;
    return s;
}

inline bool unifiable(const Term& a, const Term& b, const Substitution& s = {}) {
    return unify(a, b, s).has_value();
}

/// One-way matching: binds only variables of `pattern`; `target` is treated
/// as fixed (its variables behave like constants).
inline std::optional<Substitution> match(const Term& pattern, const Term& target, Substitution s = {}) {
    const Term& p = pattern;
    if (p.is_var()) {
        if (const Term* bound = s.lookup(p.name()))
            return *bound == target ? std::optional<Substitution>(std::move(s)) : std::nullopt;
        s.bind(p.name(), target);
        return s;
    }
    if (p.kind() != target.kind() || p.name() != target.name() || p.arity() != target.arity())
        return std::nullopt;
    for (std::size_t i = 0; i < p.arity(); ++i) {
        auto r = match(p.arg(i), target.arg(i), std::move(s));
        if (!r)
            return std::nullopt;
        s = std::move(*r);
    }
    return s;
}

/// Collects variable names in first-occurrence (left-to-right) order.
inline void collect_vars(const Term& t, std::vector<std::string>& out) {
    if (t.empty() || t.is_ground())
        return;
    if (t.is_var()) {
        if (std::find(out.begin(), out.end(), t.name()) == out.end())
            out.push_back(t.name());
        return;
    }
    for (const auto& a : t.args())
        collect_vars(a, out);
}

inline std::vector<std::string> vars_of(const Term& t) {
    std::vector<std::string> out;
    collect_vars(t, out);
    return out;
}

/// Renames variables to ?v<counter>, ?v<counter+1>, ... in first-occurrence
/// order. A single Renamer applied to several terms keeps shared variables
/// shared across them.
class Renamer {
public:
    explicit Renamer(std::size_t counter = 0) : counter_(counter) {}

    Term operator()(const Term& t) {
        if (t.empty() || t.is_ground())
            return t;
        if (t.is_var()) {
            auto it = names_.find(t.name());
            if (it == names_.end())
                it = names_.emplace(t.name(), Term::var("v" + std::to_string(counter_++))).first;
            return it->second;
        }
        std::vector<Term> args;
        args.reserve(t.arity());
        for (const auto& a : t.args())
            args.push_back((*this)(a));
        return Term::compound(t.name(), std::move(args));
    }

    std::size_t counter() const noexcept { return counter_; }

private:
    std::size_t counter_;
    std::map<std::string, Term> names_;
};

inline std::pair<Term, std::size_t> rename_apart(const Term& t, std::size_t counter) {
    Renamer r(counter);
    Term out = r(t);
    return {out, r.counter()};
}

// ---------------------------------------------------------------------------
// Text syntax

namespace detail {

class TermReader {
public:
    TermReader(std::string_view text, std::size_t line, std::size_t column, std::size_t* anon_counter)
        : text_(text), line_(line), column_(column), anon_(anon_counter) {}

    Term read_term() {
        skip_ws();
        if (at_end())
            fail("expected a term");
        char c = text_[pos_];
        if (c == '?') {
            advance();
            std::string name = read_name(false);
            if (name.empty()) {
                std::size_t n = (*anon_)++;
                return Term::var("_" + std::to_string(n));
            }
            return Term::var(name);
        }
        std::size_t l = line_, col = column_;
        std::string name = read_name(true);
        skip_ws();
        if (!at_end() && text_[pos_] == '(') {
            advance();
            std::vector<Term> args;
            skip_ws();
            if (!at_end() && text_[pos_] == ')')
                fail_at(l, col, "compound '" + name + "' has no arguments");
            for (;;) {
                args.push_back(read_term());
                skip_ws();
                if (at_end())
                    fail("unterminated argument list for '" + name + "'");
                if (text_[pos_] == ',') {
                    advance();
                    continue;
                }
                if (text_[pos_] == ')') {
                    advance();
                    break;
                }
                fail(std::string("expected ',' or ')' but found '") + text_[pos_] + "'");
            }
            return Term::compound(name, std::move(args));
        }
        return Term::atom(name);
    }

    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            advance();
    }

    bool at_end() const { return pos_ >= text_.size(); }
    std::size_t pos() const { return pos_; }
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, column_, msg); }
    [[noreturn]] static void fail_at(std::size_t l, std::size_t c, const std::string& msg) { throw ParseError(l, c, msg); }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            column_ = 1;
        } else {
            ++column_;
        }
        ++pos_;
    }

    std::string read_name(bool required) {
        std::size_t start = pos_;
        while (!at_end() && is_name_char(text_[pos_]))
            advance();
        if (required && start == pos_) {
            if (at_end())
                fail("expected a name");
            fail(std::string("unexpected character '") + text_[pos_] + "'");
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_;
    std::size_t column_;
    std::size_t* anon_;
};

} // namespace detail

/// Parses one term in canonical syntax. Each bare "?" becomes a distinct
/// anonymous variable (?_0, ?_1, ...). Trailing non-whitespace is an error.
/// `line`/`column` locate the text inside a larger file for diagnostics.
inline Term parse_term(std::string_view text, std::size_t line = 1, std::size_t column = 1,
                       std::size_t* anon_counter = nullptr) {
    std::size_t local = 0;
    detail::TermReader r(text, line, column, anon_counter ? anon_counter : &local);
    Term t;
    try {
        t = r.read_term();
    } catch (const std::invalid_argument& e) {
        throw ParseError(r.line(), r.column(), e.what());
    }
    r.skip_ws();
    if (!r.at_end())
        r.fail("trailing input after term");
    return t;
}

} // namespace vg

template <>
struct std::hash<vg::Term> {
    std::size_t operator()(const vg::Term& t) const noexcept { return t.hash(); }
};
