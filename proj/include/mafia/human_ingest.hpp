#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mafia/errors.hpp"
#include "mafia/game.hpp"
#include "mafia/transcript.hpp"

namespace mafia {

// Third-party human games arrive as one JSON document per game:
//   {
//     "game_id": "human-001",
//     "players": [{"name": "...", "role": "mafia"|"bystander"}, ...],
//     "technical_issues": false,
//     "winner": "mafia_win"|"bystander_win",        (optional)
//     "events": [
//       {"type": "chat",        "day": 1, "phase": "day"|"night", "speaker": "...", "text": "..."},
//       {"type": "vote",        "day": 1, "phase": "day"|"night", "voter": "...", "target": "..."},
//       {"type": "elimination", "day": 1, "phase": "day"|"night", "name": "..."}
//     ]
//   }
// This adapter is the only place that layout is interpreted.

inline std::optional<std::string> human_exclusion_reason(const json& game) {
    if (game.value("technical_issues", false)) return "technical issues";
    bool any_vote = false;
    for (const auto& ev : game.value("events", json::array()))
        if (ev.value("type", "") == "vote") any_vote = true;
    if (!any_vote) return "no voting";
    return std::nullopt;
}

// Converts one human game into the canonical event-log shape, synthesizing the
// phase-change markers and the post-day-vote mafia-count announcements the
// live engine would have emitted.
inline EventLog convert_human_game(const json& game) {
    EventLog log;
    try {
        log.header.game_id = game.at("game_id").get<std::string>();
        for (const auto& pj : game.at("players")) {
            std::string name = pj.at("name").get<std::string>();
            log.header.players.push_back(name);
            log.header.roles[name] = role_from_string(pj.at("role").get<std::string>());
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad human game header: ") + e.what());
    }
    if (log.header.players.empty()) throw SchemaError("human game has no players");

    GameConfig cfg;
    cfg.n_players = static_cast<int>(log.header.players.size());
    cfg.n_mafia = static_cast<int>(mafia_names(log.header).size());
    cfg.name_pool = log.header.players;
    log.header.config = cfg;
    log.header.models["players"] = "human";

    std::map<std::string, bool> alive;
    for (const auto& name : log.header.players) alive[name] = true;
    int alive_mafia = cfg.n_mafia;

    Phase current{PhaseKind::DayDiscussion, 1, std::nullopt};
    double t = 0.0;
    auto push = [&](EventBody body) {
        GameEvent ev;
        ev.seq = static_cast<std::int64_t>(log.events.size());
        ev.sim_time = t;
        ev.day = current.day;
        ev.phase = current.kind;
        ev.body = std::move(body);
        log.events.push_back(std::move(ev));
        t += 10.0;
    };
    auto move_to = [&](PhaseKind kind, int day) {
        if (current.kind == kind && current.day == day) return;
        current = Phase{kind, day, std::nullopt};
        push(PhaseChange{current});
    };

    push(GameStart{log.header.players});
    push(PhaseChange{current});

    try {
        for (const auto& ej : game.at("events")) {
            const std::string type = ej.at("type").get<std::string>();
            const int day = ej.at("day").get<int>();
            const std::string phase_str = ej.at("phase").get<std::string>();
            if (phase_str != "day" && phase_str != "night")
                throw SchemaError("unknown phase '" + phase_str + "'");
            const bool night = phase_str == "night";

            if (type == "chat") {
                move_to(night ? PhaseKind::NightDiscussion : PhaseKind::DayDiscussion, day);
                push(Chat{ej.at("speaker").get<std::string>(), ej.at("text").get<std::string>()});
            } else if (type == "vote") {
                move_to(night ? PhaseKind::NightVote : PhaseKind::DayVote, day);
                push(VoteCast{ej.at("voter").get<std::string>(), ej.at("target").get<std::string>(),
                              night ? VoteKind::Kill : VoteKind::Lynch});
            } else if (type == "elimination") {
                move_to(night ? PhaseKind::NightVote : PhaseKind::DayVote, day);
                const std::string name = ej.at("name").get<std::string>();
                auto role_it = log.header.roles.find(name);
                if (role_it == log.header.roles.end())
                    throw SchemaError("elimination of unknown player '" + name + "'");
                if (!alive[name]) throw SchemaError("elimination of dead player '" + name + "'");
                alive[name] = false;
                if (role_it->second == Role::Mafia) --alive_mafia;
                push(Elimination{name, role_it->second,
                                 night ? EliminationCause::NightKill : EliminationCause::DayVote});
                if (!night) push(MafiaCountAnnouncement{alive_mafia});
            } else {
                throw SchemaError("unknown event type '" + type + "'");
            }
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad human game event: ") + e.what());
    }

    Winner winner;
    if (game.contains("winner"))
        winner = winner_from_string(game.at("winner").get<std::string>());
    else
        winner = alive_mafia == 0 ? Winner::BystanderWin : Winner::MafiaWin;
    current = Phase{PhaseKind::Ended, current.day, winner};
    push(PhaseChange{current});
    push(GameEnd{winner});

    validate_log(log);
    return log;
}

struct HumanIngestOutcome {
    std::vector<EventLog> accepted;
    struct Exclusion {
        std::string game_id;
        std::string reason;
    };
    std::vector<Exclusion> excluded;
    struct FileError {
        std::string file;
        std::string message;
    };
    std::vector<FileError> errors;
};

inline HumanIngestOutcome ingest_human_dir(const std::filesystem::path& in_dir) {
    if (!std::filesystem::is_directory(in_dir))
        throw IoError("'" + in_dir.string() + "' is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(in_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    HumanIngestOutcome outcome;
    for (const auto& file : files) {
        try {
            std::ifstream f(file);
            if (!f) throw IoError("cannot open '" + file.string() + "'");
            json game;
            try {
                f >> game;
            } catch (const json::exception& e) {
                throw SchemaError(std::string("invalid JSON: ") + e.what());
            }
            if (auto reason = human_exclusion_reason(game)) {
                outcome.excluded.push_back(
                    {game.value("game_id", file.stem().string()), *reason});
                continue;
            }
            outcome.accepted.push_back(convert_human_game(game));
        } catch (const Error& e) {
            outcome.errors.push_back({file.filename().string(), e.what()});
        }
    }
    return outcome;
}

}  // namespace mafia
