#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mafia/errors.hpp"
#include "mafia/game.hpp"

namespace mafia {

using json = nlohmann::json;

struct LogHeader {
    std::string game_id;
    GameConfig config;
    std::map<std::string, std::string> models;  // purpose tag -> model id, e.g. "players" -> "gpt-4o"
    std::vector<std::string> players;           // seating order
    std::map<std::string, Role> roles;          // ground truth, all players
    bool operator==(const LogHeader&) const = default;
};

struct EventLog {
    LogHeader header;
    std::vector<GameEvent> events;
    bool operator==(const EventLog&) const = default;
};

inline EventLog make_log(std::string game_id, const GameState& state,
                         std::map<std::string, std::string> models = {}) {
    EventLog log;
    log.header.game_id = std::move(game_id);
    log.header.config = state.config;
    log.header.models = std::move(models);
    log.header.players = player_names(state);
    for (const auto& p : state.players) log.header.roles[p.name] = p.role;
    log.events = state.log;
    return log;
}

inline std::vector<std::string> mafia_names(const LogHeader& header) {
    std::vector<std::string> out;  // std::map order makes this sorted
    for (const auto& [name, role] : header.roles)
        if (role == Role::Mafia) out.push_back(name);
    return out;
}

// Days started, i.e. the paper-style game length.
inline int game_length_days(const EventLog& log) {
    int days = 0;
    for (const auto& ev : log.events)
        if (const auto* pc = std::get_if<PhaseChange>(&ev.body))
            if (pc->to.kind == PhaseKind::DayDiscussion) ++days;
    return days;
}

inline void validate_log(const EventLog& log) {
    if (log.events.empty()) throw MalformedLog("event log is empty");
    if (!std::holds_alternative<GameStart>(log.events.front().body))
        throw MalformedLog("log does not begin with a game-start event");
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        if (log.events[i].seq != static_cast<std::int64_t>(i))
            throw MalformedLog("event seq not contiguous at index " + std::to_string(i));
        if (const auto* el = std::get_if<Elimination>(&log.events[i].body)) {
            auto it = log.header.roles.find(el->name);
            if (it == log.header.roles.end() || it->second != el->role)
                throw MalformedLog("elimination role for '" + el->name +
                                   "' contradicts the header roles");
        }
    }
}

// --- rendering ---------------------------------------------------------------

// All clocks in rendered transcripts start from this fixed wall time.
inline constexpr long long kTranscriptEpochSeconds = 10LL * 3600;  // 10:00:00

inline std::string format_timestamp(double sim_time) {
    long long t = kTranscriptEpochSeconds + static_cast<long long>(std::llround(sim_time));
    t = ((t % (24LL * 3600)) + 24LL * 3600) % (24LL * 3600);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "[%02lld:%02lld:%02lld]", t / 3600, (t / 60) % 60, t % 60);
    return buf;
}

inline std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ", ";
        out += names[i];
    }
    return out;
}

// One rendered line per event, or nullopt for events with no announcement.
// Wording is chosen so no announcement ever contains a voting verb: announcement
// text gets embedded into prompts for both phases, which must stay verb-exclusive.
inline std::optional<std::string> render_announcement(const GameEvent& ev, bool redact_roles) {
    if (const auto* gs = std::get_if<GameStart>(&ev.body))
        return "Welcome to Mafia! Players this game: " + join_names(gs->players) + ".";
    if (std::holds_alternative<Chat>(ev.body)) return std::nullopt;  // chat is not an announcement
    if (const auto* v = std::get_if<VoteCast>(&ev.body)) return v->voter + " voted for " + v->target;
    if (const auto* el = std::get_if<Elimination>(&ev.body)) {
        std::string role_word = redact_roles ? "[REDACTED]" : to_string(el->role);
        std::string when = el->cause == EliminationCause::NightKill ? " during the night" : "";
        return el->name + " was eliminated" + when + ". " + el->name + " was a " + role_word + ".";
    }
    if (const auto* mc = std::get_if<MafiaCountAnnouncement>(&ev.body)) {
        if (mc->count == 1) return std::string("There is 1 mafia left in the game.");
        return "There are " + std::to_string(mc->count) + " mafias left in the game.";
    }
    if (const auto* pc = std::get_if<PhaseChange>(&ev.body)) {
        switch (pc->to.kind) {
            case PhaseKind::DayDiscussion:
                return "Day " + std::to_string(pc->to.day) +
                       " has started! Everyone, discuss amongst yourselves.";
            case PhaseKind::DayVote:
                return std::string(
                    "Daytime has ended, now it's time to vote! Waiting for all players to vote...");
            case PhaseKind::NightDiscussion:
                return std::string("Nighttime has started! Mafia, discuss amongst yourselves.");
            case PhaseKind::NightVote:
                return std::string(
                    "Nighttime has ended, now it's time to vote! Waiting for all players to "
                    "vote...");
            case PhaseKind::Ended:
                return std::nullopt;  // the game-end event carries the closing line
        }
    }
    if (const auto* ge = std::get_if<GameEnd>(&ev.body))
        return ge->winner == Winner::MafiaWin ? std::string("The game is over, the mafia win!")
                                              : std::string("The game is over, the bystanders win!");
    return std::nullopt;
}

inline std::optional<std::string> render_line(const GameEvent& ev, bool redact_roles = false) {
    if (const auto* c = std::get_if<Chat>(&ev.body))
        return format_timestamp(ev.sim_time) + " " + c->speaker + ": " + c->text;
    if (auto a = render_announcement(ev, redact_roles))
        return format_timestamp(ev.sim_time) + " Game-Manager: " + *a;
    return std::nullopt;
}

// Every line ends with '\n' so truncating events truncates the text at a line
// boundary, which keeps day-prefix renderings string-prefixes of the full one.
inline std::string render_text(const std::vector<GameEvent>& events, bool redact_roles = false) {
    std::string out;
    for (const auto& ev : events)
        if (auto line = render_line(ev, redact_roles)) {
            out += *line;
            out += '\n';
        }
    return out;
}

// --- cleansing and truncation --------------------------------------------------

struct CleansedTranscript {
    std::string game_id;
    int day_limit = 0;
    std::string text;
    std::vector<std::string> player_list;
    std::vector<std::string> ground_truth_mafia;  // sorted; kept out of text
    bool operator==(const CleansedTranscript&) const = default;
};

inline CleansedTranscript cleanse(const EventLog& log) {
    validate_log(log);
    CleansedTranscript t;
    t.game_id = log.header.game_id;
    t.day_limit = game_length_days(log);
    t.text = render_text(filter_public(log.events), /*redact_roles=*/true);
    t.player_list = log.header.players;
    t.ground_truth_mafia = mafia_names(log.header);
    return t;
}

inline EventLog truncate_to_day(const EventLog& log, int d) {
    int length = game_length_days(log);
    if (d < 1 || d > length)
        throw DayOutOfRange("day " + std::to_string(d) + " out of range 1.." +
                            std::to_string(length));
    EventLog out;
    out.header = log.header;
    for (const auto& ev : log.events)
        if (ev.day <= d) out.events.push_back(ev);
    return out;
}

// --- event-log persistence (one JSON record per line) ---------------------------

inline json config_to_json(const GameConfig& c) {
    return json{{"n_players", c.n_players},
                {"n_mafia", c.n_mafia},
                {"day_discussion_duration_s", c.day_discussion_duration_s},
                {"night_discussion_duration_s", c.night_discussion_duration_s},
                {"name_pool", c.name_pool},
                {"rng_seed", c.rng_seed}};
}

inline GameConfig config_from_json(const json& j) {
    GameConfig c;
    c.n_players = j.at("n_players").get<int>();
    c.n_mafia = j.at("n_mafia").get<int>();
    c.day_discussion_duration_s = j.at("day_discussion_duration_s").get<double>();
    c.night_discussion_duration_s = j.at("night_discussion_duration_s").get<double>();
    c.name_pool = j.at("name_pool").get<std::vector<std::string>>();
    c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return c;
}

inline json header_to_json(const LogHeader& h) {
    json roles = json::object();
    for (const auto& [name, role] : h.roles) roles[name] = to_string(role);
    return json{{"type", "header"},       {"game_id", h.game_id}, {"config", config_to_json(h.config)},
                {"models", h.models},     {"players", h.players}, {"roles", roles}};
}

inline json event_to_json(const GameEvent& ev) {
    json j{{"type", "event"},
           {"seq", ev.seq},
           {"sim_time", ev.sim_time},
           {"day", ev.day},
           {"phase", to_string(ev.phase)}};
    if (const auto* gs = std::get_if<GameStart>(&ev.body)) {
        j["kind"] = "game_start";
        j["players"] = gs->players;
    } else if (const auto* c = std::get_if<Chat>(&ev.body)) {
        j["kind"] = "chat";
        j["speaker"] = c->speaker;
        j["text"] = c->text;
    } else if (const auto* v = std::get_if<VoteCast>(&ev.body)) {
        j["kind"] = "vote_cast";
        j["voter"] = v->voter;
        j["target"] = v->target;
        j["vote_kind"] = to_string(v->kind);
    } else if (const auto* el = std::get_if<Elimination>(&ev.body)) {
        j["kind"] = "elimination";
        j["name"] = el->name;
        j["role"] = to_string(el->role);
        j["cause"] = to_string(el->cause);
    } else if (const auto* mc = std::get_if<MafiaCountAnnouncement>(&ev.body)) {
        j["kind"] = "mafia_count";
        j["count"] = mc->count;
    } else if (const auto* pc = std::get_if<PhaseChange>(&ev.body)) {
        j["kind"] = "phase_change";
        j["to_phase"] = to_string(pc->to.kind);
        j["to_day"] = pc->to.day;
        if (pc->to.winner) j["winner"] = to_string(*pc->to.winner);
    } else if (const auto* ge = std::get_if<GameEnd>(&ev.body)) {
        j["kind"] = "game_end";
        j["winner"] = to_string(ge->winner);
    }
    return j;
}

inline EventBody body_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "game_start") return GameStart{j.at("players").get<std::vector<std::string>>()};
    if (kind == "chat")
        return Chat{j.at("speaker").get<std::string>(), j.at("text").get<std::string>()};
    if (kind == "vote_cast")
        return VoteCast{j.at("voter").get<std::string>(), j.at("target").get<std::string>(),
                        vote_kind_from_string(j.at("vote_kind").get<std::string>())};
    if (kind == "elimination")
        return Elimination{j.at("name").get<std::string>(),
                           role_from_string(j.at("role").get<std::string>()),
                           cause_from_string(j.at("cause").get<std::string>())};
    if (kind == "mafia_count") return MafiaCountAnnouncement{j.at("count").get<int>()};
    if (kind == "phase_change") {
        Phase to;
        to.kind = phase_kind_from_string(j.at("to_phase").get<std::string>());
        to.day = j.at("to_day").get<int>();
        if (j.contains("winner")) to.winner = winner_from_string(j.at("winner").get<std::string>());
        return PhaseChange{to};
    }
    if (kind == "game_end") return GameEnd{winner_from_string(j.at("winner").get<std::string>())};
    throw SchemaError("unknown event kind '" + kind + "'");
}

inline GameEvent event_from_json(const json& j) {
    GameEvent ev;
    ev.seq = j.at("seq").get<std::int64_t>();
    ev.sim_time = j.at("sim_time").get<double>();
    ev.day = j.at("day").get<int>();
    ev.phase = phase_kind_from_string(j.at("phase").get<std::string>());
    ev.body = body_from_json(j);
    return ev;
}

inline std::string serialize_log(const EventLog& log) {
    std::string out = header_to_json(log.header).dump();
    out += '\n';
    for (const auto& ev : log.events) {
        out += event_to_json(ev).dump();
        out += '\n';
    }
    return out;
}

inline void save_log(const EventLog& log, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f << serialize_log(log);
    if (!f) throw IoError("write failed for '" + path.string() + "'");
}

inline EventLog parse_log(std::istream& in) {
    EventLog log;
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaError(std::string("invalid record: ") + e.what(), line_no);
        }
        try {
            const std::string type = j.at("type").get<std::string>();
            if (type == "header") {
                if (have_header) throw SchemaError("duplicate header", line_no);
                log.header.game_id = j.at("game_id").get<std::string>();
                log.header.config = config_from_json(j.at("config"));
                log.header.models = j.at("models").get<std::map<std::string, std::string>>();
                log.header.players = j.at("players").get<std::vector<std::string>>();
                for (const auto& [name, role] : j.at("roles").items())
                    log.header.roles[name] = role_from_string(role.get<std::string>());
                have_header = true;
            } else if (type == "event") {
                if (!have_header) throw SchemaError("event record before header", line_no);
                log.events.push_back(event_from_json(j));
            } else {
                throw SchemaError("unknown record type '" + type + "'", line_no);
            }
        } catch (const json::exception& e) {
            throw SchemaError(std::string("bad field: ") + e.what(), line_no);
        }
    }
    if (!have_header) throw SchemaError("missing header record", line_no);
    return log;
}

inline EventLog load_log(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
    return parse_log(f);
}

// --- cleansed-transcript persistence (text file + metadata sidecar) -------------

inline void save_cleansed(const CleansedTranscript& t, const std::filesystem::path& text_path) {
    std::ofstream f(text_path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + text_path.string() + "' for writing");
    f << t.text;
    json meta{{"game_id", t.game_id},
              {"day_limit", t.day_limit},
              {"player_list", t.player_list},
              {"ground_truth_mafia", t.ground_truth_mafia}};
    std::filesystem::path meta_path = text_path;
    meta_path += ".meta.json";
    std::ofstream m(meta_path, std::ios::binary);
    if (!m) throw IoError("cannot open '" + meta_path.string() + "' for writing");
    m << meta.dump(2) << '\n';
}

inline CleansedTranscript load_cleansed(const std::filesystem::path& text_path) {
    std::ifstream f(text_path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + text_path.string() + "' for reading");
    std::ostringstream body;
    body << f.rdbuf();
    std::filesystem::path meta_path = text_path;
    meta_path += ".meta.json";
    std::ifstream m(meta_path, std::ios::binary);
    if (!m) throw IoError("cannot open '" + meta_path.string() + "' for reading");
    json meta;
    try {
        m >> meta;
        CleansedTranscript t;
        t.game_id = meta.at("game_id").get<std::string>();
        t.day_limit = meta.at("day_limit").get<int>();
        t.text = body.str();
        t.player_list = meta.at("player_list").get<std::vector<std::string>>();
        t.ground_truth_mafia = meta.at("ground_truth_mafia").get<std::vector<std::string>>();
        return t;
    } catch (const json::exception& e) {
        throw SchemaError("bad transcript metadata: " + std::string(e.what()));
    }
}

// --- dataset statistics ----------------------------------------------------------

struct DatasetStats {
    int games = 0;
    double mean_participants = 0.0;
    int min_participants = 0;
    int max_participants = 0;
    double mean_length_days = 0.0;
    int min_length_days = 0;
    int max_length_days = 0;
    double ratio_length_at_most_3 = 0.0;
    double mean_utterances_per_game = 0.0;
    double mean_words_per_utterance = 0.0;
};

inline int count_words(const std::string& text) {
    std::istringstream in(text);
    std::string w;
    int n = 0;
    while (in >> w) ++n;
    return n;
}

// Utterances are all Chat events in the log, night chatter included.
inline DatasetStats compute_dataset_stats(const std::vector<EventLog>& logs) {
    if (logs.empty()) throw EmptyResults("no logs to summarize");
    DatasetStats s;
    s.games = static_cast<int>(logs.size());
    long long participants = 0, length_sum = 0, short_games = 0;
    long long utterances = 0, words = 0;
    s.min_participants = static_cast<int>(logs.front().header.players.size());
    s.max_participants = s.min_participants;
    s.min_length_days = game_length_days(logs.front());
    s.max_length_days = s.min_length_days;
    for (const auto& log : logs) {
        int n = static_cast<int>(log.header.players.size());
        participants += n;
        s.min_participants = std::min(s.min_participants, n);
        s.max_participants = std::max(s.max_participants, n);
        int len = game_length_days(log);
        length_sum += len;
        s.min_length_days = std::min(s.min_length_days, len);
        s.max_length_days = std::max(s.max_length_days, len);
        if (len <= 3) ++short_games;
        for (const auto& ev : log.events)
            if (const auto* c = std::get_if<Chat>(&ev.body)) {
                ++utterances;
                words += count_words(c->text);
            }
    }
    s.mean_participants = static_cast<double>(participants) / s.games;
    s.mean_length_days = static_cast<double>(length_sum) / s.games;
    s.ratio_length_at_most_3 = static_cast<double>(short_games) / s.games;
    s.mean_utterances_per_game = static_cast<double>(utterances) / s.games;
    s.mean_words_per_utterance =
        utterances == 0 ? 0.0 : static_cast<double>(words) / static_cast<double>(utterances);
    return s;
}

}  // namespace mafia
