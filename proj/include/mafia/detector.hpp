#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mafia/agents.hpp"
#include "mafia/errors.hpp"
#include "mafia/llm_client.hpp"
#include "mafia/transcript.hpp"

namespace mafia {

struct DetectorConfig {
    std::string model = "gpt-4-turbo";
    std::string prompt_template;  // empty = built-in default
    std::string rules;            // empty = shared default rules text
};

inline std::string default_detector_template() {
    return "You are observing a game of Mafia from the outside.\n\n"
           "Rules of the game:\n{rules}\n\n"
           "Players this game: {player_list}.\n\n"
           "Game transcript (role reveals redacted):\n{transcript}\n"
           "Exactly two of the players were mafia. Based only on the transcript, predict who "
           "the two mafia were. Any player may be named, whether eliminated or not. Reply in "
           "exactly this format:\nMafia Prediction: <name>, <name>\nReason: <your reasoning>";
}

inline std::string build_detector_prompt(const CleansedTranscript& t,
                                         const DetectorConfig& config = {}) {
    std::string tmpl = config.prompt_template.empty() ? default_detector_template()
                                                      : config.prompt_template;
    std::string rules = config.rules.empty() ? PromptTemplates::defaults().rules : config.rules;
    return render_template(tmpl, {{"rules", rules},
                                  {"player_list", join_names(t.player_list)},
                                  {"transcript", t.text.empty() ? "(empty)\n" : t.text}});
}

struct ParsedPrediction {
    std::vector<std::string> names;  // exactly two, sorted
    std::string reasoning;
};

namespace detail {

inline bool word_boundary_at(const std::string& text, std::size_t pos, std::size_t len) {
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    if (pos > 0 && alnum(text[pos - 1])) return false;
    if (pos + len < text.size() && alnum(text[pos + len])) return false;
    return true;
}

// Earliest case-insensitive whole-word occurrence of `name` in `text`.
inline std::optional<std::size_t> find_name(const std::string& text, const std::string& name) {
    std::string low_text = to_lower(text);
    std::string low_name = to_lower(name);
    for (std::size_t pos = low_text.find(low_name); pos != std::string::npos;
         pos = low_text.find(low_name, pos + 1))
        if (word_boundary_at(text, pos, name.size())) return pos;
    return std::nullopt;
}

}  // namespace detail

// Reads the "Mafia Prediction:" line; exactly two distinct roster names must
// resolve from it or the reply is a parse failure.
inline ParsedPrediction parse_prediction(const std::string& reply,
                                         const std::vector<std::string>& roster) {
    if (roster.empty()) throw ParseFailure("empty roster");
    const std::string marker = "mafia prediction:";
    std::string low = to_lower(reply);
    std::size_t at = low.find(marker);
    if (at == std::string::npos) throw ParseFailure("reply has no 'Mafia Prediction:' line");
    std::size_t start = at + marker.size();
    std::size_t end = reply.find('\n', start);
    std::string line = reply.substr(start, end == std::string::npos ? std::string::npos
                                                                    : end - start);

    std::vector<std::pair<std::size_t, std::string>> found;
    for (const auto& name : roster)
        if (auto pos = detail::find_name(line, name)) found.emplace_back(*pos, name);
    if (found.size() != 2)
        throw ParseFailure("expected exactly 2 roster names on the prediction line, found " +
                           std::to_string(found.size()));

    ParsedPrediction out;
    out.names = {found[0].second, found[1].second};
    std::sort(out.names.begin(), out.names.end());

    std::size_t reason_at = low.find("reason:");
    if (reason_at != std::string::npos) out.reasoning = trim(reply.substr(reason_at + 7));
    return out;
}

struct Prediction {
    std::string game_id;
    int day_limit = 0;
    std::vector<std::string> predicted;  // two sorted names when parse_ok
    std::string reasoning;
    std::string raw_reply;
    bool parse_ok = false;
    int attempts = 0;
};

// One detection: a single temperature-0 request, one re-query on a parse
// failure, then the transcript-day is recorded as failed rather than guessed.
inline Prediction detect(const CleansedTranscript& t, ChatBackend& backend,
                         const DetectorConfig& config = {}) {
    ChatRequest req;
    req.model = config.model;
    req.messages = {{"user", build_detector_prompt(t, config)}};
    req.temperature = 0.0;

    Prediction p;
    p.game_id = t.game_id;
    p.day_limit = t.day_limit;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        p.attempts = attempt;
        p.raw_reply = backend.complete(req);
        try {
            ParsedPrediction parsed = parse_prediction(p.raw_reply, t.player_list);
            p.predicted = parsed.names;
            p.reasoning = parsed.reasoning;
            p.parse_ok = true;
            return p;
        } catch (const ParseFailure&) {
            // fall through to the single re-query
        }
    }
    p.parse_ok = false;
    return p;
}

}  // namespace mafia
