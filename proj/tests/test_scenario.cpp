#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "support.hpp"
#include "vg/dot.hpp"
#include "vg/repl.hpp"
#include "vg/scenario.hpp"

using namespace vg;
using support::T;

namespace {

std::string kind_of(const std::string& text) {
    try {
        load_scenario(text);
    } catch (const ScenarioError& e) {
        return e.kind();
    } catch (const ParseError&) {
        return "parse";
    }
    return "ok";
}

int vgi(const std::string& args) {
    int rc = std::system((std::string(VG_VGI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST(Load, ShippedScenariosLoad) {
    for (const char* name : {"computer_off", "swim_waves", "burnt_cakes"}) {
        Scenario s;
        ASSERT_NO_THROW(s = support::shipped(name)) << name;
        EXPECT_EQ(s.turns.size(), 2u) << name;
    }
    Scenario s = support::shipped("computer_off");
    EXPECT_EQ(s.agents, (std::vector<std::string>{"system", "expert"}));
    ASSERT_EQ(s.stereotypes.size(), 1u);
    EXPECT_EQ(s.stereotypes[0].trigger, StereotypeTrigger::planned);
    EXPECT_EQ(s.rules.size(), 2u);
}

TEST(Load, Errors) {
    EXPECT_EQ(kind_of("(turn inform(a, b, p))"), "parse");
    EXPECT_EQ(kind_of("(agents a b)\n(turn inform(a, c, p))"), "undeclared-agent");
    EXPECT_EQ(kind_of("(agents a b a)"), "duplicate-agent");
    EXPECT_EQ(kind_of("(agents a b)\n(turn inform(a, a, p))"), "malformed-turn");
    EXPECT_EQ(kind_of("(agents a b)\n(turn inform(a, b, p))\n(turn inform(a, b, q))"), "turn-order");
    EXPECT_EQ(kind_of("(agents a b)\n(config alternate false)\n(turn inform(a, b, p))\n(turn inform(a, b, q))"), "ok");
    EXPECT_EQ(kind_of("(agents a b)\n(config bound 0)"), "config");
    EXPECT_EQ(kind_of("(agents a b)\n(goal bel(a, p))"), "malformed-goal");
    EXPECT_EQ(kind_of("(agents a b"), "parse");
    EXPECT_EQ(kind_of("(agents a b)\n(frobnicate x)"), "parse");
}

TEST(Load, ParseErrorPosition) {
    try {
        load_scenario("(agents a b)\n\n  (turn inform(a, b,))");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Load, RenderRoundTrip) {
    for (const char* name : {"computer_off", "swim_waves", "burnt_cakes"}) {
        Scenario s = support::shipped(name);
        Scenario back = load_scenario(render_scenario(s));
        EXPECT_EQ(render_scenario(back), render_scenario(s)) << name;
        EXPECT_EQ(back.turns, s.turns) << name;
        EXPECT_EQ(back.agents, s.agents) << name;
    }
}

TEST(Run, EmptyTurnListGivesSetupOnlyTrace) {
    auto r = run(load_scenario("(agents a b)"));
    EXPECT_TRUE(r.outcomes.empty());
    EXPECT_FALSE(r.halted);
    auto j = nlohmann::json::parse(emit_json(r.trace));
    EXPECT_EQ(j["schema"], kTraceSchema);
    for (const auto& e : j["events"])
        EXPECT_EQ(e["kind"], "declare-action");
}

TEST(Run, StrictHaltsOnRecognitionFailure) {
    std::string text = "(agents a b)\n(turn inform(b, a, p))\n(turn inform(a, b, q))";
    auto lax = run(load_scenario(text));
    EXPECT_TRUE(lax.had_errors);
    EXPECT_FALSE(lax.halted);
    EXPECT_EQ(lax.outcomes.size(), 2u);
    auto strict = run(load_scenario(text), {std::nullopt, true});
    EXPECT_TRUE(strict.halted);
    EXPECT_EQ(strict.outcomes.size(), 1u);
    EXPECT_EQ(strict.trace.of_kind("halt").size(), 1u);
}

TEST(Run, ContradictionInTurnIsReported) {
    std::string text = "(agents a b)\n(believes (a b) bel(not(p)))\n(turn inform(b, a, p))";
    auto r = run(load_scenario(text));
    EXPECT_FALSE(r.trace.of_kind("block").empty());
    EXPECT_FALSE(holds(r.store, {"a", "b"}, Attitude::bel(T("p"))));
}

TEST(Trace, JsonRoundTrip) {
    auto r = run(support::shipped("computer_off"));
    std::string once = emit_json(r.trace);
    Trace back = parse_json_trace(once);
    EXPECT_EQ(emit_json(back), once);
    EXPECT_EQ(replay_store(back), r.store);
}

TEST(Trace, MatchesFrozenGolden) {
    std::string golden = support::read_file(std::string(VG_GOLDEN_DIR) + "/computer_off.trace.json");
    ASSERT_FALSE(golden.empty());
    EXPECT_EQ(checks::trace_json("computer_off"), golden);
}

TEST(Trace, Deterministic) {
    auto r = checks::determinism();
    for (const auto& f : r.failures)
        ADD_FAILURE() << f;
}

TEST(Dot, PlanWithoutOverlayHasNoDashedEdges) {
    auto r = run(support::shipped("computer_off"));
    const auto& rec = *r.outcomes[1].recognition;
    std::string dot = emit_dot(rec.plan);
    EXPECT_EQ(dot.rfind("digraph", 0), 0u);
    EXPECT_EQ(dot.find("dashed"), std::string::npos);
    EXPECT_NE(dot.find("inform"), std::string::npos);
    std::string with = emit_dot(rec.plan, r.outcomes[1].report.completion);
    EXPECT_NE(with.find("dashed"), std::string::npos);
    EXPECT_NE(with.find("accept_belief"), std::string::npos);
}

TEST(Repl, RunsTurnsThenCommands) {
    std::istringstream in(":store\n\nfoo(\n:bogus\ninform(system, novice, p)\n:quit\nignored\n");
    std::ostringstream out;
    EXPECT_EQ(repl(support::shipped("computer_off"), in, out, false), 0);
    std::string text = out.str();
    EXPECT_NE(text.find("inefficient (3 vs 2)"), std::string::npos) << text;
    EXPECT_NE(text.find("conjunctive goal ascribed"), std::string::npos) << text;
    EXPECT_NE(text.find("[system, expert]"), std::string::npos) << text;
    EXPECT_NE(text.find("parse error:"), std::string::npos) << text;
    EXPECT_NE(text.find("unknown command :bogus"), std::string::npos) << text;
    EXPECT_NE(text.find("error: "), std::string::npos) << text;
}

TEST(Repl, NewActsAreInferred) {
    std::istringstream in("inform(system, expert, p)\n:trace\n");
    std::ostringstream out;
    repl(load_scenario("(agents system expert)"), in, out, false);
    EXPECT_NE(out.str().find("not addressed to system"), std::string::npos) << out.str();
    EXPECT_NE(out.str().find(kTraceSchema), std::string::npos);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(vgi("check " + support::scenario_path("computer_off")), 0);
    EXPECT_EQ(vgi("check /nonexistent.vgs"), 1);
    EXPECT_NE(vgi("frobnicate"), 0);
    auto tmp = std::filesystem::temp_directory_path() / "vg_cli_test";
    std::filesystem::create_directories(tmp);
    auto bad = tmp / "bad.vgs";
    { std::ofstream(bad) << "(agents a b)\n(turn inform(a, c, p))\n"; }
    EXPECT_EQ(vgi("check " + bad.string()), 1);
    auto trace = tmp / "t.json", dot = tmp / "p.dot";
    EXPECT_EQ(vgi("run " + support::scenario_path("computer_off") + " --trace " + trace.string() + " --dot " + dot.string()), 0);
    EXPECT_EQ(support::read_file(trace.string()), checks::trace_json("computer_off"));
    EXPECT_NE(support::read_file(dot.string()).find("digraph"), std::string::npos);
    std::filesystem::remove_all(tmp);
}
