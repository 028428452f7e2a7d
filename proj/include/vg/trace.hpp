#pragma once

// Ordered event log shared by every stage of the engine, plus its canonical
// JSON form ("vgtrace/1").

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace vg {

inline constexpr const char* kTraceSchema = "vgtrace/1";

struct Event {
    std::size_t index = 0;
    std::string module;  // belief-spaces, dialogue-acts, planner, implicature, scenario
    std::string kind;    // act, assert, ascribe, block, refuse, expect, plan-found, ...
    nlohmann::json data = nlohmann::json::object();

    friend bool operator==(const Event&, const Event&) = default;
};

class Trace {
public:
    const std::vector<Event>& events() const noexcept { return events_; }
    std::size_t size() const noexcept { return events_.size(); }
    bool empty() const noexcept { return events_.empty(); }

    const Event& emit(std::string module, std::string kind, nlohmann::json data = nlohmann::json::object()) {
        events_.push_back(Event{events_.size(), std::move(module), std::move(kind), std::move(data)});
        return events_.back();
    }

    /// Appends the events of `other`, re-indexing them after ours.
    void append(const Trace& other) {
        for (const auto& e : other.events_)
            emit(e.module, e.kind, e.data);
    }

    std::vector<const Event*> of_kind(const std::string& kind) const {
        std::vector<const Event*> out;
        for (const auto& e : events_)
            if (e.kind == kind)
                out.push_back(&e);
        return out;
    }

    friend bool operator==(const Trace&, const Trace&) = default;

private:
    std::vector<Event> events_;
};

/// Optional sink: most operations accept a nullable Trace*.
inline void emit(Trace* t, std::string module, std::string kind, nlohmann::json data) {
    if (t)
        t->emit(std::move(module), std::move(kind), std::move(data));
}

inline nlohmann::json to_json(const Trace& t) {
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : t.events())
        events.push_back({{"index", e.index}, {"module", e.module}, {"kind", e.kind}, {"data", e.data}});
    return {{"schema", kTraceSchema}, {"events", std::move(events)}};
}

/// Canonical text: keys sorted, two-space indent, trailing newline.
/// Byte-stable for equal traces.
inline std::string emit_json(const Trace& t) {
    return to_json(t).dump(2) + "\n";
}

inline Trace trace_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("schema", "") != kTraceSchema)
        throw std::runtime_error("not a vgtrace/1 document");
    Trace t;
    std::size_t expected = 0;
    for (const auto& e : j.at("events")) {
        if (e.at("index").get<std::size_t>() != expected++)
            throw std::runtime_error("trace event indices must be consecutive from 0");
        t.emit(e.at("module").get<std::string>(), e.at("kind").get<std::string>(), e.at("data"));
    }
    return t;
}

inline Trace parse_json_trace(const std::string& text) {
    return trace_from_json(nlohmann::json::parse(text));
}

} // namespace vg
