#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mafia/errors.hpp"
#include "mafia/game.hpp"
#include "mafia/llm_client.hpp"
#include "mafia/rng.hpp"
#include "mafia/transcript.hpp"

namespace mafia {

enum class AgentDecision { Send, Wait };

struct AgentView {
    std::string self_name;
    Role self_role = Role::Bystander;
    std::vector<std::string> alive_players;
    std::vector<std::string> all_players;
    std::string visible_log;  // rendered, role-filtered transcript
    Phase phase;
    std::map<std::string, Role> known_roles;  // mafia: everyone; bystander: the eliminated
};

inline AgentView make_view(const GameState& state, const std::string& name) {
    const Player* self = find_player(state, name);
    if (self == nullptr) throw UnknownViewer("no player named '" + name + "'");
    AgentView v;
    v.self_name = name;
    v.self_role = self->role;
    v.alive_players = alive_players(state);
    v.all_players = player_names(state);
    v.visible_log = render_text(visible_events(state, Viewer::player(name)));
    v.phase = state.phase;
    for (const auto& p : state.players)
        if (self->role == Role::Mafia || !p.alive) v.known_roles[p.name] = p.role;
    return v;
}

// --- small text utilities ------------------------------------------------------

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline bool ci_contains(const std::string& haystack, const std::string& needle) {
    return to_lower(haystack).find(to_lower(needle)) != std::string::npos;
}

// --- prompt templates ------------------------------------------------------------

// {name} placeholders; every placeholder in a template must be bound.
inline std::string render_template(const std::string& tmpl,
                                   const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] != '{') {
            out += tmpl[i++];
            continue;
        }
        std::size_t end = tmpl.find('}', i);
        if (end == std::string::npos) throw TemplateError("unterminated placeholder");
        std::string name = tmpl.substr(i + 1, end - i - 1);
        auto it = bindings.find(name);
        if (it == bindings.end()) throw TemplateError("unbound placeholder '" + name + "'");
        out += it->second;
        i = end + 1;
    }
    return out;
}

struct PromptTemplates {
    std::string rules;
    std::string objectives;
    std::string scheduler;
    std::string generator;
    std::string vote;

    static PromptTemplates defaults();
    static PromptTemplates load_dir(const std::filesystem::path& dir);
    void save_dir(const std::filesystem::path& dir) const;
};

// Wording note: announcement and rules text never uses the voting verbs, which
// are reserved for the vote prompt so day and night prompts stay verb-exclusive.
inline PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.rules =
        "Mafia is a social deduction game between two hidden factions: the mafia and the "
        "bystanders. Roles are secret and fixed for the whole game. Play alternates between "
        "Daytime and Nighttime. During the Daytime, all surviving players discuss openly, then "
        "every surviving player votes, and the player with the most votes is eliminated; that "
        "player's role is revealed to everyone, along with how many mafia remain in the game. "
        "During the Nighttime, the surviving mafia confer in secret and choose one bystander to "
        "eliminate; everyone learns who was eliminated during the night. Eliminated players "
        "leave the game and may no longer speak or vote. The mafia win once they make up half "
        "or more of the surviving players. The bystanders win once every mafia has been "
        "eliminated.";
    t.objectives =
        "Objectives: a mafia player wants to avoid suspicion and steer the day votes toward "
        "bystanders until the mafia make up half of the surviving players. A bystander wants "
        "to study the discussion, work out who the mafia are, and have them voted out first.";
    t.scheduler =
        "{identity}\n\nRules of the game:\n{rules}\n\n{objectives}\n\n{role}\n\n"
        "Game transcript so far:\n{transcript}\n\n{player_list}\n\n"
        "Decide whether to contribute a message to the discussion at this moment or to stay "
        "silent for now. Reply with exactly one token: <send> to contribute a message, or "
        "<wait> to remain silent.";
    t.generator =
        "{identity}\n\nRules of the game:\n{rules}\n\n{objectives}\n\n{role}\n\n"
        "Game transcript so far:\n{transcript}\n\n{player_list}\n\n"
        "You chose to speak. Compose the one chat message you will send next. The message must "
        "reflect the perspective of the assigned player. Reply with the message text only.";
    t.vote =
        "{identity}\n\nRules of the game:\n{rules}\n\n{objectives}\n\n{role}\n\n"
        "Game transcript so far:\n{transcript}\n\n{player_list}\n\n"
        "It is time to vote. Choose one player to {phase_verb}. Candidates: {candidates}.\n"
        "Reply with exactly one name from the candidates.";
    return t;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream out;
    out << f.rdbuf();
    return out.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f << text;
}

inline PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir) {
    PromptTemplates t;
    t.rules = read_text_file(dir / "rules.txt");
    t.objectives = read_text_file(dir / "objectives.txt");
    t.scheduler = read_text_file(dir / "scheduler.txt");
    t.generator = read_text_file(dir / "generator.txt");
    t.vote = read_text_file(dir / "vote.txt");
    return t;
}

inline void PromptTemplates::save_dir(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    write_text_file(dir / "rules.txt", rules);
    write_text_file(dir / "objectives.txt", objectives);
    write_text_file(dir / "scheduler.txt", scheduler);
    write_text_file(dir / "generator.txt", generator);
    write_text_file(dir / "vote.txt", vote);
}

// --- prompt builders ---------------------------------------------------------------

inline std::string role_binding(const AgentView& view) {
    if (view.self_role == Role::Mafia) {
        std::vector<std::string> mafia;
        for (const auto& [name, role] : view.known_roles)
            if (role == Role::Mafia) mafia.push_back(name);
        return "Your secret role: mafia. The mafia this game are: " + join_names(mafia) +
               ". Everyone else is a bystander.";
    }
    return "Your secret role: bystander. You do not know anyone else's role; you only learn "
           "the roles of players once they are eliminated.";
}

inline std::string transcript_binding(const AgentView& view) {
    std::string text = view.visible_log.empty() ? "(no messages yet)\n" : view.visible_log;
    std::string note;
    if (is_night(view.phase.kind))
        note = "It is now Nighttime (day " + std::to_string(view.phase.day) +
               "): only the mafia can read and send messages right now.";
    else
        note = "It is now Daytime (day " + std::to_string(view.phase.day) +
               "): all surviving players can read and send messages.";
    return text + note;
}

inline std::map<std::string, std::string> common_bindings(const AgentView& view,
                                                          const PromptTemplates& templates) {
    return {{"identity", "You are " + view.self_name + ", a player in a game of Mafia."},
            {"rules", templates.rules},
            {"objectives", templates.objectives},
            {"role", role_binding(view)},
            {"transcript", transcript_binding(view)},
            {"player_list", "All players: " + join_names(view.all_players) +
                                ". Surviving players: " + join_names(view.alive_players) + "."}};
}

inline std::string build_scheduler_prompt(const AgentView& view, const PromptTemplates& templates) {
    return render_template(templates.scheduler, common_bindings(view, templates));
}

inline std::string build_generator_prompt(const AgentView& view, const PromptTemplates& templates) {
    return render_template(templates.generator, common_bindings(view, templates));
}

inline std::string build_vote_prompt(const AgentView& view, const std::vector<std::string>& candidates,
                                     PhaseKind phase, const PromptTemplates& templates) {
    if (!is_voting(phase)) throw NotVotingPhase("vote prompt requested outside a voting phase");
    if (candidates.empty()) throw EmptyCandidates("no candidates to vote for");
    auto bindings = common_bindings(view, templates);
    bindings["candidates"] = join_names(candidates);
    bindings["phase_verb"] = phase == PhaseKind::DayVote ? "lynch" : "kill";
    return render_template(templates.vote, bindings);
}

// --- reply parsing -------------------------------------------------------------------

struct DecisionParse {
    AgentDecision decision = AgentDecision::Wait;
    bool parsed = false;
};

// First "<send>"/"<wait>" token wins; anything else is a safe Wait.
inline DecisionParse parse_decision(const std::string& reply) {
    std::string low = to_lower(reply);
    auto send_pos = low.find("<send>");
    auto wait_pos = low.find("<wait>");
    if (send_pos == std::string::npos && wait_pos == std::string::npos) return {AgentDecision::Wait, false};
    if (wait_pos == std::string::npos || send_pos < wait_pos) return {AgentDecision::Send, true};
    return {AgentDecision::Wait, true};
}

// Exact candidate match, else unique case-insensitive substring; ambiguity fails.
inline std::optional<std::string> parse_vote_reply(const std::string& reply,
                                                   const std::vector<std::string>& candidates) {
    std::string t = trim(reply);
    for (const auto& c : candidates)
        if (t == c) return c;
    std::vector<std::string> hits;
    for (const auto& c : candidates)
        if (ci_contains(reply, c)) hits.push_back(c);
    if (hits.size() == 1) return hits.front();
    return std::nullopt;
}

// --- the agent interface ----------------------------------------------------------------

class Agent {
  public:
    virtual ~Agent() = default;
    // Scheduler decision point: speak this tick or not.
    virtual AgentDecision decide(const AgentView& view) = 0;
    // Generator decision point: called only after decide() returned Send.
    virtual std::string compose_message(const AgentView& view) = 0;
    // Voting decision point: nullopt means no parseable answer; the engine
    // validates the name and re-prompts on bad or missing answers.
    virtual std::optional<std::string> choose_vote(const AgentView& view,
                                                   const std::vector<std::string>& candidates,
                                                   PhaseKind phase) = 0;
};

// --- deterministic test doubles ------------------------------------------------------------

inline std::string first_alphabetical(const std::vector<std::string>& candidates) {
    return *std::min_element(candidates.begin(), candidates.end());
}

// Replays a fixed plan. Polls come from `schedule` (keyed by day, phase, tick
// within the phase) when present, else from the `polls` queue; exhausted agents
// wait. Vote answers are consumed one per request (invalid ones deliberately
// exercise the engine's re-prompt path); when exhausted, `vote_rule` or the
// first alphabetical candidate decides.
class ScriptedAgent : public Agent {
  public:
    using VoteRule = std::function<std::string(const AgentView&, const std::vector<std::string>&)>;

    std::vector<std::optional<std::string>> polls;  // nullopt = wait, text = send
    std::map<std::tuple<int, PhaseKind, int>, std::string> schedule;
    std::vector<std::string> vote_answers;  // literal name, or "@first"
    VoteRule vote_rule;

    AgentDecision decide(const AgentView& view) override {
        int tick = phase_tick_[{view.phase.day, view.phase.kind}]++;
        if (!schedule.empty()) {
            auto it = schedule.find({view.phase.day, view.phase.kind, tick});
            if (it != schedule.end()) {
                pending_ = it->second;
                return AgentDecision::Send;
            }
        }
        if (poll_idx_ < polls.size()) {
            const auto& step = polls[poll_idx_++];
            if (step) {
                pending_ = *step;
                return AgentDecision::Send;
            }
            return AgentDecision::Wait;
        }
        return AgentDecision::Wait;
    }

    std::string compose_message(const AgentView&) override { return pending_; }

    std::optional<std::string> choose_vote(const AgentView& view,
                                           const std::vector<std::string>& candidates,
                                           PhaseKind) override {
        if (vote_idx_ < vote_answers.size()) {
            std::string a = vote_answers[vote_idx_++];
            if (a == "@first") return first_alphabetical(candidates);
            return a;
        }
        if (vote_rule) return vote_rule(view, candidates);
        return first_alphabetical(candidates);
    }

  private:
    std::map<std::pair<int, PhaseKind>, int> phase_tick_;
    std::size_t poll_idx_ = 0;
    std::size_t vote_idx_ = 0;
    std::string pending_;
};

// Line-oriented script format: "wait" | "send <text>" | "vote <name or @first>",
// '#' starts a comment.
inline ScriptedAgent agent_from_script(const std::string& script) {
    ScriptedAgent a;
    std::istringstream in(script);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        if (line == "wait") {
            a.polls.push_back(std::nullopt);
        } else if (line.rfind("send ", 0) == 0) {
            a.polls.push_back(line.substr(5));
        } else if (line.rfind("vote ", 0) == 0) {
            a.vote_answers.push_back(trim(line.substr(5)));
        } else {
            throw SchemaError("unknown script directive '" + line + "'", line_no);
        }
    }
    return a;
}

// Self-contained chatty agent for mock simulations: speaks with fixed
// probability per tick and votes uniformly among the candidates.
class RandomChatterAgent : public Agent {
  public:
    explicit RandomChatterAgent(std::uint64_t seed, double send_prob = 0.08)
        : rng_(seed), send_prob_(send_prob) {}

    AgentDecision decide(const AgentView&) override {
        return rng_.chance(send_prob_) ? AgentDecision::Send : AgentDecision::Wait;
    }

    std::string compose_message(const AgentView&) override {
        static const std::vector<std::string> phrases = {
            "I'm not sure who to trust yet.",
            "Has anyone else noticed something odd about the last vote?",
            "I was quiet because I was listening, not hiding.",
            "Let's hear from the people who haven't said much today.",
            "I have a feeling we are missing something obvious.",
            "Can everyone share who they suspect, and why?",
            "The quiet ones worry me more than the loud ones.",
            "I'll go along with the group unless someone objects.",
        };
        return rng_.pick(phrases);
    }

    std::optional<std::string> choose_vote(const AgentView&,
                                           const std::vector<std::string>& candidates,
                                           PhaseKind) override {
        if (candidates.empty()) return std::nullopt;
        return candidates[static_cast<std::size_t>(rng_.below(candidates.size()))];
    }

  private:
    Rng rng_;
    double send_prob_;
};

// --- the model-backed agent ------------------------------------------------------------------

struct AgentDiagnostics {
    int unparseable_decisions = 0;
    int unparseable_votes = 0;
};

// Player agents run at the provider's default temperature, so the request
// deliberately carries no temperature field.
class LlmAgent : public Agent {
  public:
    LlmAgent(std::string name, ChatBackend& backend, std::string model, PromptTemplates templates)
        : name_(std::move(name)),
          backend_(backend),
          model_(std::move(model)),
          templates_(std::move(templates)) {}

    AgentDecision decide(const AgentView& view) override {
        std::string reply = ask(build_scheduler_prompt(view, templates_));
        DecisionParse p = parse_decision(reply);
        if (!p.parsed) ++diagnostics_.unparseable_decisions;
        return p.decision;
    }

    std::string compose_message(const AgentView& view) override {
        return trim(ask(build_generator_prompt(view, templates_)));
    }

    std::optional<std::string> choose_vote(const AgentView& view,
                                           const std::vector<std::string>& candidates,
                                           PhaseKind phase) override {
        std::string reply = ask(build_vote_prompt(view, candidates, phase, templates_));
        auto name = parse_vote_reply(reply, candidates);
        if (!name) ++diagnostics_.unparseable_votes;
        return name;
    }

    const AgentDiagnostics& diagnostics() const { return diagnostics_; }
    const std::string& name() const { return name_; }

  private:
    std::string ask(const std::string& prompt) {
        ChatRequest req;
        req.model = model_;
        req.messages = {{"user", prompt}};
        return backend_.complete(req);
    }

    std::string name_;
    ChatBackend& backend_;
    std::string model_;
    PromptTemplates templates_;
    AgentDiagnostics diagnostics_;
};

}  // namespace mafia
