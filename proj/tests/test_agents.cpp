#include "catch2/catch_amalgamated.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mafia/agents.hpp"
#include "mafia/game.hpp"
#include "mafia/llm_client.hpp"

using namespace mafia;
namespace fs = std::filesystem;

namespace {

GameState night_game(std::uint64_t seed = 11) {
    GameConfig cfg;
    cfg.rng_seed = seed;
    GameState g = new_game(cfg);
    append_event(g, Chat{alive_bystanders(g)[0], "good morning table"}, 5.0);
    advance_phase(g, 150.0);  // day vote
    advance_phase(g, 151.0);  // night discussion, both mafia alive
    append_event(g, Chat{alive_mafia(g)[0], "secret plan"}, 155.0);
    return g;
}

}  // namespace

TEST_CASE("string helpers") {
    CHECK(trim("  padded\t\n") == "padded");
    CHECK(trim("") == "");
    CHECK(trim(" \n ") == "");
    CHECK(to_lower("MiXeD") == "mixed");
    CHECK(ci_contains("The Quick FOX", "quick fox"));
    CHECK(!ci_contains("short", "longer than the haystack"));
}

TEST_CASE("template rendering binds placeholders") {
    std::map<std::string, std::string> vars{{"a", "1"}, {"long_name", "2"}};
    CHECK(render_template("x {a} y {long_name} z {a}", vars) == "x 1 y 2 z 1");
    CHECK(render_template("no placeholders", vars) == "no placeholders");
    CHECK_THROWS_AS(render_template("{missing}", vars), TemplateError);
    CHECK_THROWS_WITH(render_template("{missing}", vars), "unbound placeholder 'missing'");
    CHECK_THROWS_WITH(render_template("broken {a", vars), "unterminated placeholder");
}

TEST_CASE("default templates keep the voting verbs out of shared text") {
    auto t = PromptTemplates::defaults();
    for (const std::string* text : {&t.rules, &t.objectives, &t.scheduler, &t.generator}) {
        CHECK(!ci_contains(*text, "lynch"));
        CHECK(!ci_contains(*text, "kill"));
    }
    CHECK(t.vote.find("{phase_verb}") != std::string::npos);
    CHECK(t.scheduler.find("<send>") != std::string::npos);
    CHECK(t.scheduler.find("<wait>") != std::string::npos);
}

TEST_CASE("templates round trip through a directory") {
    auto dir = fs::temp_directory_path() / "mafia_test_templates";
    fs::remove_all(dir);
    auto t = PromptTemplates::defaults();
    t.save_dir(dir);
    for (const char* f : {"rules.txt", "objectives.txt", "scheduler.txt", "generator.txt",
                          "vote.txt"})
        CHECK(fs::exists(dir / f));
    auto back = PromptTemplates::load_dir(dir);
    CHECK(back.rules == t.rules);
    CHECK(back.objectives == t.objectives);
    CHECK(back.scheduler == t.scheduler);
    CHECK(back.generator == t.generator);
    CHECK(back.vote == t.vote);
    fs::remove_all(dir);
    CHECK_THROWS_AS(PromptTemplates::load_dir(dir), IoError);
}

TEST_CASE("views are filtered by role") {
    GameState g = night_game();
    auto mafia = alive_mafia(g);
    auto bystander = alive_bystanders(g)[0];

    auto mv = make_view(g, mafia[0]);
    CHECK(mv.self_name == mafia[0]);
    CHECK(mv.self_role == Role::Mafia);
    CHECK(mv.known_roles.size() == 10);  // mafia know every role
    CHECK(mv.visible_log.find("secret plan") != std::string::npos);
    CHECK(mv.alive_players.size() == 10);
    CHECK(mv.phase.kind == PhaseKind::NightDiscussion);

    auto bv = make_view(g, bystander);
    CHECK(bv.self_role == Role::Bystander);
    CHECK(bv.known_roles.empty());  // nobody eliminated yet
    CHECK(bv.visible_log.find("secret plan") == std::string::npos);
    CHECK(bv.visible_log.find("good morning table") != std::string::npos);

    apply_elimination(g, alive_bystanders(g)[1], EliminationCause::NightKill, 160.0);
    auto bv2 = make_view(g, bystander);
    CHECK(bv2.known_roles.size() == 1);  // the dead player's role is public

    CHECK_THROWS_AS(make_view(g, "Zebra"), UnknownViewer);
}

TEST_CASE("role and transcript bindings") {
    GameState g = night_game();
    auto mafia = alive_mafia(g);

    auto mv = make_view(g, mafia[0]);
    auto mb = role_binding(mv);
    CHECK(mb.find("Your secret role: mafia.") == 0);
    CHECK(mb.find(mafia[0]) != std::string::npos);
    CHECK(mb.find(mafia[1]) != std::string::npos);

    auto bv = make_view(g, alive_bystanders(g)[0]);
    CHECK(role_binding(bv).find("Your secret role: bystander.") == 0);

    auto tb = transcript_binding(mv);
    CHECK(tb.find("It is now Nighttime (day 1)") != std::string::npos);

    AgentView empty_view;
    empty_view.phase = Phase{PhaseKind::DayDiscussion, 1, std::nullopt};
    auto eb = transcript_binding(empty_view);
    CHECK(eb.find("(no messages yet)") == 0);
    CHECK(eb.find("It is now Daytime (day 1)") != std::string::npos);
}

TEST_CASE("prompts assemble identity, rules, transcript and roster in order") {
    GameState g = night_game();
    auto bystander = alive_bystanders(g)[0];
    GameState day = new_game(g.config);
    auto view = make_view(day, bystander);
    auto t = PromptTemplates::defaults();

    auto prompt = build_scheduler_prompt(view, t);
    auto p_identity = prompt.find("You are " + bystander + ", a player in a game of Mafia.");
    auto p_rules = prompt.find("Mafia is a social deduction game");
    auto p_role = prompt.find("Your secret role:");
    auto p_transcript = prompt.find("Game transcript so far:");
    auto p_roster = prompt.find("All players: ");
    auto p_instr = prompt.find("Reply with exactly one token");
    REQUIRE(p_identity != std::string::npos);
    REQUIRE(p_rules != std::string::npos);
    REQUIRE(p_role != std::string::npos);
    REQUIRE(p_transcript != std::string::npos);
    REQUIRE(p_roster != std::string::npos);
    REQUIRE(p_instr != std::string::npos);
    CHECK(p_identity == 0);
    CHECK(p_identity < p_rules);
    CHECK(p_rules < p_role);
    CHECK(p_role < p_transcript);
    CHECK(p_transcript < p_roster);
    CHECK(p_roster < p_instr);

    auto gen = build_generator_prompt(view, t);
    CHECK(gen.find("Compose the one chat message") != std::string::npos);
}

TEST_CASE("vote prompts use exactly one verb for exactly one phase") {
    // a game with a night elimination, so the transcript embeds every
    // announcement flavor a real prompt would carry
    GameConfig cfg;
    cfg.rng_seed = 11;
    GameState g = new_game(cfg);
    advance_phase(g, 150.0);  // day vote
    apply_elimination(g, alive_bystanders(g)[0], EliminationCause::DayVote, 151.0);
    advance_phase(g, 152.0);  // night discussion
    advance_phase(g, 212.0);  // night vote
    apply_elimination(g, alive_bystanders(g)[0], EliminationCause::NightKill, 213.0);
    advance_phase(g, 214.0);  // day 2
    advance_phase(g, 364.0);  // day 2 vote
    auto t = PromptTemplates::defaults();

    auto voter = alive_players(g)[0];
    auto view = make_view(g, voter);
    auto day_candidates = legal_vote_targets(g, voter, g.phase);
    auto day_prompt = build_vote_prompt(view, day_candidates, PhaseKind::DayVote, t);
    CHECK(view.visible_log.find("was eliminated during the night") != std::string::npos);
    CHECK(ci_contains(day_prompt, "lynch"));
    CHECK(!ci_contains(day_prompt, "kill"));

    auto mafia = alive_mafia(g);
    auto mview = make_view(g, mafia[0]);
    auto night_prompt = build_vote_prompt(mview, alive_bystanders(g), PhaseKind::NightVote, t);
    CHECK(ci_contains(night_prompt, "kill"));
    CHECK(!ci_contains(night_prompt, "lynch"));

    CHECK(day_prompt.find("Candidates: ") != std::string::npos);
    CHECK_THROWS_AS(build_vote_prompt(view, day_candidates, PhaseKind::DayDiscussion, t),
                    NotVotingPhase);
    CHECK_THROWS_AS(build_vote_prompt(view, {}, PhaseKind::DayVote, t), EmptyCandidates);
}

TEST_CASE("decision parsing takes the first tag and defaults to waiting") {
    CHECK(parse_decision("<send>").decision == AgentDecision::Send);
    CHECK(parse_decision("<send>").parsed);
    CHECK(parse_decision("<WAIT>").decision == AgentDecision::Wait);
    CHECK(parse_decision("<WAIT>").parsed);
    CHECK(parse_decision("I will speak now: <Send> because it matters").decision ==
          AgentDecision::Send);
    CHECK(parse_decision("<wait> ... or maybe <send>").decision == AgentDecision::Wait);
    CHECK(parse_decision("<send> not <wait>").decision == AgentDecision::Send);
    auto none = parse_decision("silence is golden");
    CHECK(none.decision == AgentDecision::Wait);
    CHECK(!none.parsed);
    CHECK(!parse_decision("").parsed);
}

TEST_CASE("vote reply parsing") {
    std::vector<std::string> cands{"Alex", "Brook", "Finley"};
    CHECK(parse_vote_reply("Brook", cands) == "Brook");
    CHECK(parse_vote_reply("  Brook \n", cands) == "Brook");
    CHECK(parse_vote_reply("I vote for FINLEY today", cands) == "Finley");
    CHECK(!parse_vote_reply("Alex or Brook, hard to say", cands).has_value());
    CHECK(!parse_vote_reply("abstain", cands).has_value());
    CHECK(!parse_vote_reply("", cands).has_value());

    // exact match beats substring ambiguity when names overlap
    std::vector<std::string> overlap{"Alex", "Alexis"};
    CHECK(parse_vote_reply("Alexis", overlap) == "Alexis");
    CHECK(parse_vote_reply("definitely alex!", overlap) == "Alex");  // only Alex substring-matches
}

TEST_CASE("scripted agents follow their scripts") {
    GameState g = new_game(GameConfig{});
    auto view = make_view(g, player_names(g)[0]);

    SECTION("poll queue") {
        ScriptedAgent a;
        a.polls = {std::nullopt, std::string("hello"), std::nullopt};
        CHECK(a.decide(view) == AgentDecision::Wait);
        CHECK(a.decide(view) == AgentDecision::Send);
        CHECK(a.compose_message(view) == "hello");
        CHECK(a.decide(view) == AgentDecision::Wait);
        CHECK(a.decide(view) == AgentDecision::Wait);  // exhausted scripts wait forever
    }

    SECTION("schedule keyed by day, phase and tick") {
        ScriptedAgent a;
        a.schedule[{1, PhaseKind::DayDiscussion, 1}] = "timed words";
        CHECK(a.decide(view) == AgentDecision::Wait);   // tick 0
        CHECK(a.decide(view) == AgentDecision::Send);   // tick 1
        CHECK(a.compose_message(view) == "timed words");
        CHECK(a.decide(view) == AgentDecision::Wait);
    }

    SECTION("vote answers then rule then alphabetical fallback") {
        ScriptedAgent a;
        a.vote_answers = {"Brook", "@first"};
        std::vector<std::string> cands{"Casey", "Brook", "Alex"};
        CHECK(a.choose_vote(view, cands, PhaseKind::DayVote) == "Brook");
        CHECK(a.choose_vote(view, cands, PhaseKind::DayVote) == "Alex");  // @first
        CHECK(a.choose_vote(view, cands, PhaseKind::DayVote) == "Alex");  // fallback
        ScriptedAgent b;
        b.vote_rule = [](const AgentView&, const std::vector<std::string>& c) { return c.back(); };
        CHECK(b.choose_vote(view, cands, PhaseKind::DayVote) == "Alex");  // rule: last element
    }
}

TEST_CASE("script text parses into an agent") {
    auto a = agent_from_script(
        "# opening\n"
        "wait\n"
        "send I have a hunch.\n"
        "vote Brook\n"
        "vote @first\n"
        "\n");
    REQUIRE(a.polls.size() == 2);
    CHECK(!a.polls[0].has_value());
    CHECK(*a.polls[1] == "I have a hunch.");
    REQUIRE(a.vote_answers.size() == 2);
    CHECK(a.vote_answers[0] == "Brook");
    CHECK(a.vote_answers[1] == "@first");

    try {
        agent_from_script("wait\nshout loudly\n");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("unknown script directive 'shout loudly'") !=
              std::string::npos);
        CHECK(std::string(e.what()).find("(line 2)") != std::string::npos);
    }
}

TEST_CASE("random chatter agent is seed deterministic") {
    GameState g = new_game(GameConfig{});
    auto view = make_view(g, player_names(g)[0]);
    RandomChatterAgent a(99), b(99);
    for (int i = 0; i < 200; ++i) CHECK(a.decide(view) == b.decide(view));
    auto msg = a.compose_message(view);
    CHECK(!msg.empty());
    std::vector<std::string> cands{"Alex", "Brook"};
    for (int i = 0; i < 50; ++i) {
        auto v = a.choose_vote(view, cands, PhaseKind::DayVote);
        REQUIRE(v.has_value());
        CHECK((*v == "Alex" || *v == "Brook"));
    }
    CHECK(!RandomChatterAgent(1).choose_vote(view, {}, PhaseKind::DayVote).has_value());
}

TEST_CASE("model-backed agent round trip through a mock backend") {
    GameState g = new_game(GameConfig{});
    auto name = player_names(g)[0];
    auto view = make_view(g, name);
    auto templates = PromptTemplates::defaults();

    SECTION("decide parses the scheduler reply") {
        MockBackend mock(std::vector<std::string>{"<send>", "<wait>", "who, me?"});
        LlmAgent agent(name, mock, "test-model", templates);
        CHECK(agent.decide(view) == AgentDecision::Send);
        CHECK(agent.decide(view) == AgentDecision::Wait);
        CHECK(agent.decide(view) == AgentDecision::Wait);  // unparseable waits
        CHECK(agent.diagnostics().unparseable_decisions == 1);

        auto seen = mock.requests();
        REQUIRE(seen.size() == 3);
        const auto& req = seen[0];
        CHECK(req.model == "test-model");
        REQUIRE(req.messages.size() == 1);
        CHECK(req.messages[0].role == "user");
        CHECK(req.messages[0].content.find("Reply with exactly one token") != std::string::npos);
        // players run at provider-default temperature
        CHECK(!req.temperature.has_value());
    }

    SECTION("compose trims the reply") {
        MockBackend mock(std::vector<std::string>{"  a considered thought \n"});
        LlmAgent agent(name, mock, "test-model", templates);
        CHECK(agent.compose_message(view) == "a considered thought");
    }

    SECTION("vote parsing and diagnostics") {
        std::vector<std::string> cands{"Alex", "Brook"};
        MockBackend mock(std::vector<std::string>{"Brook", "no comment"});
        LlmAgent agent(name, mock, "test-model", templates);
        CHECK(agent.choose_vote(view, cands, PhaseKind::DayVote) == "Brook");
        CHECK(!agent.choose_vote(view, cands, PhaseKind::DayVote).has_value());
        CHECK(agent.diagnostics().unparseable_votes == 1);
        CHECK(agent.name() == name);
    }
}
