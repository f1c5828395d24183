#pragma once

// Shared corpus builders used by the unit tests and the acceptance runner.
//
// Two synthetic corpora are produced:
//   * a 35-game scripted "llm" corpus played through the real engine, with
//     fixed per-game lengths (3x2 + 23x3 + 9x4 days -> 111 transcript-days),
//     utterance counts (22x269 + 13x268) and word counts (188x109 + rest 110),
//     giving mean length 3.17, mean utterances 268.63, mean words 109.98;
//   * a 44-file "human" corpus in the documented ingest layout, of which 28
//     are valid (sizes 2x7, 2x8, 11x9, 8x10, 4x11, 1x12; lengths 5x2 + 15x3 +
//     8x4 -> 87 transcript-days) and 16 are excluded (9 with technical issues,
//     7 that never vote).

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mafia/agents.hpp"
#include "mafia/engine.hpp"
#include "mafia/game.hpp"
#include "mafia/human_ingest.hpp"
#include "mafia/metrics.hpp"
#include "mafia/transcript.hpp"

namespace fixtures {

using namespace mafia;

// Deterministic filler text with an exact whitespace-separated word count.
inline std::string word_text(int n_words, std::uint64_t salt) {
    static const std::vector<std::string> pool = {
        "signal", "pattern", "uneasy",  "quiet",  "deflect", "motive", "timing",
        "glance", "pressure", "thread", "detail", "shift",   "angle",  "story"};
    std::string out;
    for (int i = 0; i < n_words; ++i) {
        if (i) out += ' ';
        out += pool[(salt + static_cast<std::uint64_t>(i) * 7) % pool.size()];
    }
    return out;
}

// One scripted elimination plan: who gets voted out each day and who dies
// each night, computed against the actual role assignment of the game.
struct EliminationPlan {
    std::map<std::pair<int, PhaseKind>, std::string> target;  // (day, vote phase) -> name
};

// Recipe entry per day: true = vote out a mafia, false = vote out a bystander.
inline EliminationPlan make_plan(const GameState& state, const std::vector<bool>& lynch_mafia) {
    std::map<std::string, Role> roles;
    std::map<std::string, bool> alive;
    for (const auto& p : state.players) {
        roles[p.name] = p.role;
        alive[p.name] = true;
    }
    auto first_alive = [&](Role r) {
        for (const auto& [name, is_alive] : alive)  // std::map keeps names sorted
            if (is_alive && roles[name] == r) return name;
        throw std::logic_error("plan ran out of players");
    };
    EliminationPlan plan;
    int mafia_left = 0;
    for (const auto& [_, r] : roles) mafia_left += r == Role::Mafia;
    for (std::size_t d = 0; d < lynch_mafia.size(); ++d) {
        int day = static_cast<int>(d) + 1;
        std::string out = first_alive(lynch_mafia[d] ? Role::Mafia : Role::Bystander);
        plan.target[{day, PhaseKind::DayVote}] = out;
        alive[out] = false;
        if (lynch_mafia[d]) --mafia_left;
        bool last_day = d + 1 == lynch_mafia.size();
        if (!last_day && mafia_left > 0) {
            std::string victim = first_alive(Role::Bystander);
            plan.target[{day, PhaseKind::NightVote}] = victim;
            alive[victim] = false;
        }
    }
    return plan;
}

inline ScriptedAgent::VoteRule plan_vote_rule(const EliminationPlan& plan, std::string self) {
    return [plan, self](const AgentView& view, const std::vector<std::string>& candidates) {
        auto it = plan.target.find({view.phase.day, view.phase.kind});
        if (it == plan.target.end() || it->second == self) return candidates.front();
        return it->second;
    };
}

struct LlmGameSpec {
    int length = 3;       // game length in days
    int utterances = 269; // all spoken during day 1 discussion
    int short_words = 0;  // this many utterances get 109 words, the rest 110
};

inline std::vector<LlmGameSpec> llm_corpus_specs() {
    std::vector<LlmGameSpec> specs;
    for (int g = 0; g < 35; ++g) {
        LlmGameSpec s;
        s.length = g < 3 ? 2 : g < 26 ? 3 : 4;
        s.utterances = g < 22 ? 269 : 268;
        s.short_words = g == 0 ? 188 : 0;
        specs.push_back(s);
    }
    return specs;
}

inline std::vector<bool> lynch_recipe(int length) {
    // Always ends in a bystander win: the last two days remove the two mafia.
    std::vector<bool> recipe(static_cast<std::size_t>(length), false);
    recipe[static_cast<std::size_t>(length) - 2] = true;
    recipe[static_cast<std::size_t>(length) - 1] = true;
    return recipe;
}

inline EventLog build_llm_game(int index, const LlmGameSpec& spec) {
    GameConfig cfg;
    cfg.rng_seed = 1000 + static_cast<std::uint64_t>(index);
    GameState probe = new_game(cfg);
    EliminationPlan plan = make_plan(probe, lynch_recipe(spec.length));

    std::vector<std::string> names = player_names(probe);
    std::vector<std::unique_ptr<ScriptedAgent>> storage;
    std::map<std::string, Agent*> agents;
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto a = std::make_unique<ScriptedAgent>();
        a->vote_rule = plan_vote_rule(plan, names[i]);
        storage.push_back(std::move(a));
        agents[names[i]] = storage.back().get();
    }
    // Utterance u is spoken by player u%10 on tick u/10 of day 1; word counts
    // are 109 for the first `short_words` utterances and 110 after.
    for (int u = 0; u < spec.utterances; ++u) {
        auto* a = static_cast<ScriptedAgent*>(agents[names[static_cast<std::size_t>(u % 10)]]);
        int words = u < spec.short_words ? 109 : 110;
        a->schedule[{1, PhaseKind::DayDiscussion, u / 10}] =
            word_text(words, static_cast<std::uint64_t>(index) * 1000 + static_cast<std::uint64_t>(u));
    }

    char id[24];
    std::snprintf(id, sizeof(id), "llm-%03d", index + 1);
    GameOutcome outcome = run_game(agents, cfg, EngineConfig{}, id, {{"players", "fixture-scripted"}});
    return std::move(outcome.log);
}

inline std::vector<EventLog> llm_corpus() {
    std::vector<EventLog> logs;
    auto specs = llm_corpus_specs();
    for (int g = 0; g < static_cast<int>(specs.size()); ++g)
        logs.push_back(build_llm_game(g, specs[g]));
    return logs;
}

// --- human corpus -------------------------------------------------------------------

struct HumanGameSpec {
    int n_players = 9;
    int length = 3;
    int utterances = 72;
    int short_words = 0;  // this many utterances get 5 words, the rest 6
};

inline std::vector<HumanGameSpec> human_corpus_specs() {
    std::vector<int> sizes = {7, 7, 8, 8, 9,             // lengths 2 (any size works)
                              9, 9, 9, 9, 9, 9, 9, 9, 9, 9, 11, 11, 11, 11, 12,  // lengths 3
                              10, 10, 10, 10, 10, 10, 10, 10};                    // lengths 4
    std::vector<HumanGameSpec> specs;
    for (int g = 0; g < 28; ++g) {
        HumanGameSpec s;
        s.n_players = sizes[static_cast<std::size_t>(g)];
        s.length = g < 5 ? 2 : g < 20 ? 3 : 4;
        s.utterances = g < 14 ? 72 : 73;
        s.short_words = g == 0 ? 72 : g == 1 ? 70 : 0;
        specs.push_back(s);
    }
    return specs;
}

inline json human_game_json(int index, const HumanGameSpec& spec) {
    std::vector<std::string> pool = default_name_pool();
    std::vector<std::string> roster(pool.begin(), pool.begin() + spec.n_players);
    // Mafia sit at roster slots 0 and 3 so every recipe length stays reachable.
    std::map<std::string, Role> roles;
    for (std::size_t i = 0; i < roster.size(); ++i)
        roles[roster[i]] = (i == 0 || i == 3) ? Role::Mafia : Role::Bystander;

    json players = json::array();
    for (const auto& name : roster)
        players.push_back({{"name", name}, {"role", roles[name] == Role::Mafia ? "mafia" : "bystander"}});

    std::map<std::string, bool> alive;
    for (const auto& name : roster) alive[name] = true;
    auto first_alive = [&](Role r, const std::string& skip = "") {
        for (const auto& name : roster)
            if (alive[name] && roles[name] == r && name != skip) return name;
        throw std::logic_error("human fixture ran out of players");
    };

    json events = json::array();
    int spoken = 0;
    auto chat = [&](int day, const std::string& speaker, int words) {
        events.push_back({{"type", "chat"},
                          {"day", day},
                          {"phase", "day"},
                          {"speaker", speaker},
                          {"text", word_text(words, static_cast<std::uint64_t>(index) * 500 +
                                                        static_cast<std::uint64_t>(spoken))}});
        ++spoken;
    };
    auto next_words = [&] { return spoken < spec.short_words ? 5 : 6; };

    std::vector<bool> recipe = lynch_recipe(spec.length);
    int mafia_left = 2;
    for (int day = 1; day <= spec.length; ++day) {
        // Day 1 speakers cycle the full roster; later days use a player who is
        // still alive, so transcripts never show chatter from the eliminated.
        int day_chats = day == 1 ? spec.utterances - (spec.length - 1) : 1;
        for (int c = 0; c < day_chats; ++c)
            chat(day,
                 day == 1 ? roster[static_cast<std::size_t>(spoken) % roster.size()]
                          : first_alive(Role::Bystander),
                 next_words());

        std::string out = first_alive(recipe[static_cast<std::size_t>(day) - 1] ? Role::Mafia
                                                                                : Role::Bystander);
        for (const auto& voter : roster) {
            if (!alive[voter]) continue;
            std::string target = voter == out ? (roles[out] == Role::Mafia && mafia_left == 2
                                                     ? first_alive(Role::Mafia, out)
                                                     : first_alive(Role::Bystander, out))
                                              : out;
            events.push_back({{"type", "vote"},
                              {"day", day},
                              {"phase", "day"},
                              {"voter", voter},
                              {"target", target}});
        }
        events.push_back({{"type", "elimination"}, {"day", day}, {"phase", "day"}, {"name", out}});
        alive[out] = false;
        if (roles[out] == Role::Mafia) --mafia_left;

        if (day < spec.length && mafia_left > 0) {
            std::string killer = first_alive(Role::Mafia);
            std::string victim = first_alive(Role::Bystander);
            events.push_back({{"type", "vote"},
                              {"day", day},
                              {"phase", "night"},
                              {"voter", killer},
                              {"target", victim}});
            events.push_back(
                {{"type", "elimination"}, {"day", day}, {"phase", "night"}, {"name", victim}});
            alive[victim] = false;
        }
    }

    char id[24];
    std::snprintf(id, sizeof(id), "human-%02d", index + 1);
    json game{{"game_id", id},
              {"players", players},
              {"technical_issues", false},
              {"events", events}};
    // Half the files carry an explicit winner; the rest exercise derivation.
    if (index % 2 == 0) game["winner"] = "bystander_win";
    return game;
}

inline json human_invalid_json(int index) {
    std::vector<std::string> pool = default_name_pool();
    json players = json::array();
    for (int i = 0; i < 8; ++i)
        players.push_back({{"name", pool[static_cast<std::size_t>(i)]},
                           {"role", i == 0 || i == 3 ? "mafia" : "bystander"}});
    char id[24];
    std::snprintf(id, sizeof(id), "human-%02d", index + 1);
    bool technical = index < 28 + 9;  // first nine invalid files: technical issues
    json events = json::array();
    events.push_back({{"type", "chat"},
                      {"day", 1},
                      {"phase", "day"},
                      {"speaker", pool[1]},
                      {"text", "hello all"}});
    if (technical)
        events.push_back({{"type", "vote"},
                          {"day", 1},
                          {"phase", "day"},
                          {"voter", pool[1]},
                          {"target", pool[2]}});
    return json{{"game_id", id},
                {"players", players},
                {"technical_issues", technical},
                {"events", events}};
}

// Writes the 44-file corpus (28 valid + 16 invalid) into `dir`.
inline void write_human_corpus(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto specs = human_corpus_specs();
    for (int g = 0; g < 44; ++g) {
        json game = g < 28 ? human_game_json(g, specs[static_cast<std::size_t>(g)])
                           : human_invalid_json(g);
        char name[32];
        std::snprintf(name, sizeof(name), "human-%02d.json", g + 1);
        std::ofstream f(dir / name, std::ios::binary);
        f << game.dump(2) << '\n';
    }
}

// Published per-day accuracy tables, reconstructed as raw hit counts from the
// percentages and their denominators; used to drive the metrics goldens.
inline std::vector<std::pair<int, MatchScore>> hit_datapoints(
    const std::vector<std::tuple<int, int, int, int>>& rows) {  // day, n, single_hits, exact_hits
    std::vector<std::pair<int, MatchScore>> out;
    for (const auto& [day, n, singles, exacts] : rows)
        for (int i = 0; i < n; ++i) {
            MatchScore s;
            s.exact = i < exacts;
            s.single = i < singles;
            out.emplace_back(day, s);
        }
    return out;
}

inline std::vector<std::pair<int, MatchScore>> llm_published_datapoints() {
    return hit_datapoints({{1, 35, 11, 0}, {2, 35, 18, 3}, {3, 32, 22, 4}, {4, 9, 7, 2}});
}

inline std::vector<std::pair<int, MatchScore>> human_published_datapoints() {
    return hit_datapoints({{1, 28, 13, 3}, {2, 28, 16, 3}, {3, 23, 17, 4}, {4, 8, 5, 1}});
}

inline std::vector<int> human_game_sizes() {
    std::vector<int> sizes;
    for (const auto& s : human_corpus_specs()) sizes.push_back(s.n_players);
    return sizes;
}

}  // namespace fixtures
