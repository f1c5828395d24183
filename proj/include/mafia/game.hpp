#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "mafia/errors.hpp"
#include "mafia/rng.hpp"

namespace mafia {

enum class Role { Mafia, Bystander };

inline const char* to_string(Role r) { return r == Role::Mafia ? "mafia" : "bystander"; }

inline Role role_from_string(const std::string& s) {
    if (s == "mafia") return Role::Mafia;
    if (s == "bystander") return Role::Bystander;
    throw SchemaError("unknown role '" + s + "'");
}

enum class Winner { MafiaWin, BystanderWin };

inline const char* to_string(Winner w) { return w == Winner::MafiaWin ? "mafia_win" : "bystander_win"; }

inline Winner winner_from_string(const std::string& s) {
    if (s == "mafia_win") return Winner::MafiaWin;
    if (s == "bystander_win") return Winner::BystanderWin;
    throw SchemaError("unknown winner '" + s + "'");
}

enum class PhaseKind { DayDiscussion, DayVote, NightDiscussion, NightVote, Ended };

inline const char* to_string(PhaseKind k) {
    switch (k) {
        case PhaseKind::DayDiscussion: return "day_discussion";
        case PhaseKind::DayVote: return "day_vote";
        case PhaseKind::NightDiscussion: return "night_discussion";
        case PhaseKind::NightVote: return "night_vote";
        case PhaseKind::Ended: return "ended";
    }
    return "?";
}

inline PhaseKind phase_kind_from_string(const std::string& s) {
    if (s == "day_discussion") return PhaseKind::DayDiscussion;
    if (s == "day_vote") return PhaseKind::DayVote;
    if (s == "night_discussion") return PhaseKind::NightDiscussion;
    if (s == "night_vote") return PhaseKind::NightVote;
    if (s == "ended") return PhaseKind::Ended;
    throw SchemaError("unknown phase '" + s + "'");
}

inline bool is_night(PhaseKind k) {
    return k == PhaseKind::NightDiscussion || k == PhaseKind::NightVote;
}

inline bool is_voting(PhaseKind k) {
    return k == PhaseKind::DayVote || k == PhaseKind::NightVote;
}

struct Phase {
    PhaseKind kind = PhaseKind::DayDiscussion;
    int day = 1;                    // for Ended: the day the game finished on
    std::optional<Winner> winner;   // set iff kind == Ended
    bool operator==(const Phase&) const = default;
};

struct Player {
    std::string name;
    Role role = Role::Bystander;
    bool alive = true;
    bool operator==(const Player&) const = default;
};

// Eleven names from the paper's figures plus five more to reach 16.
inline std::vector<std::string> default_name_pool() {
    return {"Finley", "Sidney", "Kennedy", "Parker", "Ronny",   "River",
            "Elliot", "Alex",   "Brook",   "Noah",   "Stevie",  "Quinn",
            "Rowan",  "Sage",   "Emerson", "Hayden"};
}

struct GameConfig {
    int n_players = 10;
    int n_mafia = 2;
    double day_discussion_duration_s = 150.0;
    double night_discussion_duration_s = 60.0;
    std::vector<std::string> name_pool = default_name_pool();
    std::uint64_t rng_seed = 0;
    bool operator==(const GameConfig&) const = default;
};

// --- event bodies ----------------------------------------------------------

enum class VoteKind { Lynch, Kill };

inline const char* to_string(VoteKind k) { return k == VoteKind::Lynch ? "lynch" : "kill"; }

inline VoteKind vote_kind_from_string(const std::string& s) {
    if (s == "lynch") return VoteKind::Lynch;
    if (s == "kill") return VoteKind::Kill;
    throw SchemaError("unknown vote kind '" + s + "'");
}

enum class EliminationCause { DayVote, NightKill };

inline const char* to_string(EliminationCause c) {
    return c == EliminationCause::DayVote ? "day_vote" : "night_kill";
}

inline EliminationCause cause_from_string(const std::string& s) {
    if (s == "day_vote") return EliminationCause::DayVote;
    if (s == "night_kill") return EliminationCause::NightKill;
    throw SchemaError("unknown elimination cause '" + s + "'");
}

struct GameStart {
    std::vector<std::string> players;
    bool operator==(const GameStart&) const = default;
};
struct Chat {
    std::string speaker;
    std::string text;
    bool operator==(const Chat&) const = default;
};
struct VoteCast {
    std::string voter;
    std::string target;
    VoteKind kind = VoteKind::Lynch;
    bool operator==(const VoteCast&) const = default;
};
struct Elimination {
    std::string name;
    Role role = Role::Bystander;
    EliminationCause cause = EliminationCause::DayVote;
    bool operator==(const Elimination&) const = default;
};
struct MafiaCountAnnouncement {
    int count = 0;
    bool operator==(const MafiaCountAnnouncement&) const = default;
};
struct PhaseChange {
    Phase to;
    bool operator==(const PhaseChange&) const = default;
};
struct GameEnd {
    Winner winner = Winner::MafiaWin;
    bool operator==(const GameEnd&) const = default;
};

using EventBody = std::variant<GameStart, Chat, VoteCast, Elimination, MafiaCountAnnouncement,
                               PhaseChange, GameEnd>;

struct GameEvent {
    std::int64_t seq = 0;
    double sim_time = 0.0;   // seconds since game start
    int day = 1;
    PhaseKind phase = PhaseKind::DayDiscussion;
    EventBody body;
    bool operator==(const GameEvent&) const = default;
};

struct GameState {
    GameConfig config;
    std::vector<Player> players;
    Phase phase;
    std::vector<GameEvent> log;
    Rng rng{0};
    bool operator==(const GameState&) const = default;
};

// --- queries ----------------------------------------------------------------

inline const Player* find_player(const GameState& state, const std::string& name) {
    for (const auto& p : state.players)
        if (p.name == name) return &p;
    return nullptr;
}

inline Player* find_player(GameState& state, const std::string& name) {
    for (auto& p : state.players)
        if (p.name == name) return &p;
    return nullptr;
}

inline int alive_count(const GameState& state) {
    int n = 0;
    for (const auto& p : state.players) n += p.alive ? 1 : 0;
    return n;
}

inline int alive_mafia_count(const GameState& state) {
    int n = 0;
    for (const auto& p : state.players) n += (p.alive && p.role == Role::Mafia) ? 1 : 0;
    return n;
}

inline std::vector<std::string> alive_players(const GameState& state) {
    std::vector<std::string> out;
    for (const auto& p : state.players)
        if (p.alive) out.push_back(p.name);
    return out;
}

inline std::vector<std::string> alive_mafia(const GameState& state) {
    std::vector<std::string> out;
    for (const auto& p : state.players)
        if (p.alive && p.role == Role::Mafia) out.push_back(p.name);
    return out;
}

inline std::vector<std::string> alive_bystanders(const GameState& state) {
    std::vector<std::string> out;
    for (const auto& p : state.players)
        if (p.alive && p.role == Role::Bystander) out.push_back(p.name);
    return out;
}

inline std::vector<std::string> player_names(const GameState& state) {
    std::vector<std::string> out;
    for (const auto& p : state.players) out.push_back(p.name);
    return out;
}

// --- event appending --------------------------------------------------------

inline void append_event(GameState& state, EventBody body, double sim_time) {
    GameEvent ev;
    ev.seq = static_cast<std::int64_t>(state.log.size());
    ev.sim_time = sim_time;
    ev.day = state.phase.day;
    ev.phase = state.phase.kind;
    ev.body = std::move(body);
    state.log.push_back(std::move(ev));
}

// --- operations -------------------------------------------------------------

inline void validate_config(const GameConfig& config) {
    if (config.n_players < 1) throw InvalidConfig("n_players must be positive");
    if (config.n_mafia < 1) throw InvalidConfig("n_mafia must be positive");
    // mafia must start strictly below half the table or the game is already won
    if (2 * config.n_mafia >= config.n_players)
        throw InvalidConfig("n_mafia must be less than n_players/2 (got " +
                            std::to_string(config.n_mafia) + " of " +
                            std::to_string(config.n_players) + ")");
    if (config.name_pool.size() < static_cast<std::size_t>(config.n_players))
        throw InvalidConfig("name_pool smaller than n_players");
    std::set<std::string> uniq(config.name_pool.begin(), config.name_pool.end());
    if (uniq.size() != config.name_pool.size()) throw InvalidConfig("name_pool has duplicates");
    if (config.day_discussion_duration_s < 0 || config.night_discussion_duration_s < 0)
        throw InvalidConfig("discussion durations must be non-negative");
}

inline GameState new_game(const GameConfig& config) {
    validate_config(config);

    GameState state;
    state.config = config;
    state.rng = Rng(config.rng_seed);
    state.phase = Phase{PhaseKind::DayDiscussion, 1, std::nullopt};

    // Draw names without replacement, then assign mafia seats, all from the
    // game seed so identical configs produce identical states.
    std::vector<std::string> pool = config.name_pool;
    for (int i = 0; i < config.n_players; ++i) {
        std::size_t j = static_cast<std::size_t>(i) +
                        static_cast<std::size_t>(state.rng.below(pool.size() - static_cast<std::size_t>(i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        state.players.push_back(Player{pool[static_cast<std::size_t>(i)], Role::Bystander, true});
    }
    std::vector<int> seats(static_cast<std::size_t>(config.n_players));
    for (int i = 0; i < config.n_players; ++i) seats[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < config.n_mafia; ++i) {
        std::size_t j = static_cast<std::size_t>(i) +
                        static_cast<std::size_t>(state.rng.below(seats.size() - static_cast<std::size_t>(i)));
        std::swap(seats[static_cast<std::size_t>(i)], seats[j]);
        state.players[static_cast<std::size_t>(seats[static_cast<std::size_t>(i)])].role = Role::Mafia;
    }

    append_event(state, GameStart{player_names(state)}, 0.0);
    append_event(state, PhaseChange{state.phase}, 0.0);
    return state;
}

// Player names a fresh game with this config would get, in seating order.
inline std::vector<std::string> assigned_names(const GameConfig& config) {
    return player_names(new_game(config));
}

inline std::vector<std::string> legal_vote_targets(const GameState& state, const std::string& voter,
                                                   const Phase& phase) {
    if (!is_voting(phase.kind)) throw NotVotingPhase("phase is not a voting phase");
    const Player* p = find_player(state, voter);
    if (p == nullptr) throw UnknownViewer("no player named '" + voter + "'");
    if (!p->alive) throw VoterNotAlive("voter '" + voter + "' is not alive");
    if (phase.kind == PhaseKind::DayVote) {
        std::vector<std::string> out;
        for (const auto& q : state.players)
            if (q.alive && q.name != voter) out.push_back(q.name);
        return out;
    }
    // Night: mafia pick which bystander to eliminate.
    return alive_bystanders(state);
}

// Plurality winner; ties broken uniformly at random, an empty ballot picks
// uniformly among the candidates.
inline std::string tally_votes(const std::map<std::string, std::string>& votes,
                               const std::vector<std::string>& candidates, Rng& rng) {
    std::set<std::string> candidate_set(candidates.begin(), candidates.end());
    std::map<std::string, int> counts;
    for (const auto& [voter, target] : votes) {
        if (candidate_set.count(target) == 0)
            throw IllegalTarget("vote target '" + target + "' is not a legal candidate");
        counts[target] += 1;
    }
    if (counts.empty()) {
        std::vector<std::string> sorted(candidate_set.begin(), candidate_set.end());
        return sorted[static_cast<std::size_t>(rng.below(sorted.size()))];
    }
    int best = 0;
    for (const auto& [_, c] : counts) best = std::max(best, c);
    std::vector<std::string> tied;  // std::map iteration keeps this sorted, hence deterministic
    for (const auto& [name, c] : counts)
        if (c == best) tied.push_back(name);
    if (tied.size() == 1) return tied.front();
    return tied[static_cast<std::size_t>(rng.below(tied.size()))];
}

inline std::optional<Winner> check_win(const GameState& state) {
    int mafia = alive_mafia_count(state);
    int total = alive_count(state);
    if (mafia == 0) return Winner::BystanderWin;
    if (2 * mafia >= total) return Winner::MafiaWin;
    return std::nullopt;
}

inline void apply_elimination(GameState& state, const std::string& name, EliminationCause cause,
                              double sim_time) {
    Player* p = find_player(state, name);
    if (p == nullptr) throw UnknownViewer("no player named '" + name + "'");
    if (!p->alive) throw PlayerNotAlive("player '" + name + "' is already dead");
    p->alive = false;
    append_event(state, Elimination{name, p->role, cause}, sim_time);
    if (cause == EliminationCause::DayVote)
        append_event(state, MafiaCountAnnouncement{alive_mafia_count(state)}, sim_time);
}

inline void advance_phase(GameState& state, double sim_time) {
    if (state.phase.kind == PhaseKind::Ended) throw GameAlreadyEnded("game already ended");

    auto end_game = [&](Winner w) {
        state.phase = Phase{PhaseKind::Ended, state.phase.day, w};
        append_event(state, PhaseChange{state.phase}, sim_time);
        append_event(state, GameEnd{w}, sim_time);
    };

    switch (state.phase.kind) {
        case PhaseKind::DayDiscussion:
            state.phase = Phase{PhaseKind::DayVote, state.phase.day, std::nullopt};
            break;
        case PhaseKind::DayVote: {
            if (auto w = check_win(state)) {
                end_game(*w);
                return;
            }
            PhaseKind next = alive_mafia_count(state) >= 2 ? PhaseKind::NightDiscussion
                                                           : PhaseKind::NightVote;
            state.phase = Phase{next, state.phase.day, std::nullopt};
            break;
        }
        case PhaseKind::NightDiscussion:
            state.phase = Phase{PhaseKind::NightVote, state.phase.day, std::nullopt};
            break;
        case PhaseKind::NightVote: {
            if (auto w = check_win(state)) {
                end_game(*w);
                return;
            }
            state.phase = Phase{PhaseKind::DayDiscussion, state.phase.day + 1, std::nullopt};
            break;
        }
        case PhaseKind::Ended:
            return;  // unreachable
    }
    append_event(state, PhaseChange{state.phase}, sim_time);
}

// --- visibility --------------------------------------------------------------

struct Viewer {
    static Viewer public_observer() { return Viewer{true, ""}; }
    static Viewer player(std::string name) { return Viewer{false, std::move(name)}; }
    bool is_public = true;
    std::string name;
};

// Night chatter and night ballots are private to the mafia.
inline bool night_private(const GameEvent& ev) {
    if (!is_night(ev.phase)) return false;
    return std::holds_alternative<Chat>(ev.body) || std::holds_alternative<VoteCast>(ev.body);
}

inline std::vector<GameEvent> filter_public(const std::vector<GameEvent>& events) {
    std::vector<GameEvent> out;
    for (const auto& ev : events)
        if (!night_private(ev)) out.push_back(ev);
    return out;
}

inline std::vector<GameEvent> visible_events(const GameState& state, const Viewer& viewer) {
    if (viewer.is_public) return filter_public(state.log);
    const Player* p = find_player(state, viewer.name);
    if (p == nullptr) throw UnknownViewer("no player named '" + viewer.name + "'");
    if (p->role == Role::Mafia) return state.log;
    return filter_public(state.log);
}

}  // namespace mafia
