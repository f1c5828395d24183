#pragma once

#include <stdexcept>
#include <string>

namespace mafia {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// game-core
struct InvalidConfig : Error { using Error::Error; };
struct NotVotingPhase : Error { using Error::Error; };
struct VoterNotAlive : Error { using Error::Error; };
struct IllegalTarget : Error { using Error::Error; };
struct PlayerNotAlive : Error { using Error::Error; };
struct GameAlreadyEnded : Error { using Error::Error; };
struct UnknownViewer : Error { using Error::Error; };

// engine
struct ConfigMismatch : Error { using Error::Error; };
struct AgentFailure : Error {
    AgentFailure(std::string agent_name, const std::string& cause)
        : Error("agent '" + agent_name + "' failed: " + cause), agent(std::move(agent_name)) {}
    std::string agent;
};

// agents / detector
struct TemplateError : Error { using Error::Error; };
struct EmptyCandidates : Error { using Error::Error; };
struct ParseFailure : Error { using Error::Error; };

// transcript
struct MalformedLog : Error { using Error::Error; };
struct DayOutOfRange : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct SchemaError : Error {
    explicit SchemaError(const std::string& msg, int line_number = -1)
        : Error(line_number >= 0 ? msg + " (line " + std::to_string(line_number) + ")" : msg),
          line(line_number) {}
    int line;
};

// metrics
struct EmptyResults : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };

// llm client
struct LlmError : Error {
    enum class Kind { Auth, RateLimited, Timeout, BadResponse };
    LlmError(Kind k, const std::string& msg) : Error(msg), kind(k) {}
    Kind kind;
    // HTTP 5xx is worth retrying; a malformed 200 body or unexpected 4xx is not.
    bool transient = kind == Kind::RateLimited || kind == Kind::Timeout;
};

}  // namespace mafia
