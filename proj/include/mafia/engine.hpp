#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mafia/agents.hpp"
#include "mafia/errors.hpp"
#include "mafia/game.hpp"
#include "mafia/rng.hpp"
#include "mafia/transcript.hpp"

namespace mafia {

enum class ClockMode { LogicalTicks, WallClock };

class Clock {
  public:
    virtual ~Clock() = default;
    virtual double now() const = 0;
    virtual void advance(double seconds) = 0;
};

// Simulated time: advances only when the engine steps it.
class LogicalClock : public Clock {
  public:
    double now() const override { return t_; }
    void advance(double seconds) override { t_ += seconds; }

  private:
    double t_ = 0.0;
};

// Real elapsed time since construction; advance() waits it out.
class SteadyWallClock : public Clock {
  public:
    double now() const override {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    void advance(double seconds) override {
        if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    }

  private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct EngineConfig {
    ClockMode clock_mode = ClockMode::LogicalTicks;
    double tick_interval_s = 5.0;
    int vote_reprompt_limit = 2;
    int max_concurrent_agent_calls = 1;
    // 0 disables the guard and runs agent calls inline on the engine thread.
    double per_call_timeout_s = 0.0;
};

inline void validate_engine_config(const EngineConfig& c) {
    if (c.tick_interval_s <= 0) throw InvalidConfig("tick_interval must be positive");
    if (c.vote_reprompt_limit < 0) throw InvalidConfig("vote_reprompt_limit must be >= 0");
    if (c.max_concurrent_agent_calls < 1)
        throw InvalidConfig("max_concurrent_agent_calls must be >= 1");
    if (c.per_call_timeout_s < 0) throw InvalidConfig("per_call_timeout must be >= 0");
}

struct EngineDiagnostics {
    long long scheduler_polls = 0;
    int vote_abstentions = 0;
    int call_timeouts = 0;
    int empty_messages_dropped = 0;
    std::map<std::string, std::string> agent_failures;  // player -> first failure
};

template <typename R>
struct CallResult {
    std::optional<R> value;
    bool timed_out = false;
    std::string error;  // non-empty when the call threw
};

// Runs jobs with at most `max_concurrent` in flight and a per-call timeout.
// Results come back in input order; `completion_order` (when supplied) records
// the indices of finished jobs in the order they finished. A timed-out job's
// thread is abandoned and its result discarded.
template <typename R>
std::vector<CallResult<R>> run_calls(const std::vector<std::function<R()>>& jobs,
                                     int max_concurrent, double timeout_s,
                                     std::vector<std::size_t>* completion_order = nullptr) {
    std::vector<CallResult<R>> results(jobs.size());
    if (jobs.empty()) return results;

    if (max_concurrent <= 1 && timeout_s <= 0) {
        for (std::size_t i = 0; i < jobs.size(); ++i) {
            try {
                results[i].value = jobs[i]();
            } catch (const std::exception& e) {
                results[i].error = e.what();
            }
            if (completion_order) completion_order->push_back(i);
        }
        return results;
    }

    std::size_t next = 0;
    while (next < jobs.size()) {
        std::size_t wave = std::min<std::size_t>(static_cast<std::size_t>(max_concurrent),
                                                 jobs.size() - next);
        std::vector<std::future<R>> futures(wave);
        for (std::size_t k = 0; k < wave; ++k) {
            std::promise<R> prom;
            futures[k] = prom.get_future();
            std::thread(
                [job = jobs[next + k]](std::promise<R> p) {
                    try {
                        p.set_value(job());
                    } catch (...) {
                        p.set_exception(std::current_exception());
                    }
                },
                std::move(prom))
                .detach();
        }
        auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_s > 0 ? timeout_s : 3600.0));
        std::set<std::size_t> pending;
        for (std::size_t k = 0; k < wave; ++k) pending.insert(k);
        while (!pending.empty()) {
            bool progressed = false;
            for (auto it = pending.begin(); it != pending.end();) {
                if (futures[*it].wait_for(std::chrono::milliseconds(0)) ==
                    std::future_status::ready) {
                    std::size_t i = next + *it;
                    try {
                        results[i].value = futures[*it].get();
                    } catch (const std::exception& e) {
                        results[i].error = e.what();
                    }
                    if (completion_order) completion_order->push_back(i);
                    it = pending.erase(it);
                    progressed = true;
                } else {
                    ++it;
                }
            }
            if (pending.empty()) break;
            if (std::chrono::steady_clock::now() >= deadline) {
                for (std::size_t k : pending) results[next + k].timed_out = true;
                break;
            }
            if (!progressed) std::this_thread::sleep_for(std::chrono::microseconds(200));
        }
        next += wave;
    }
    return results;
}

// Drives one game from DayDiscussion(1) to Ended. The engine is the only
// writer of the game state; agents see read-only views.
class Engine {
  public:
    Engine(GameState state, std::map<std::string, Agent*> agents, EngineConfig config)
        : state_(std::move(state)),
          agents_(std::move(agents)),
          config_(config),
          order_rng_(mix_seed(state_.config.rng_seed, 0x656e67696e65ULL)) {
        validate_engine_config(config_);
        if (config_.clock_mode == ClockMode::LogicalTicks)
            clock_ = std::make_unique<LogicalClock>();
        else
            clock_ = std::make_unique<SteadyWallClock>();
        for (const auto& p : state_.players) {
            auto it = agents_.find(p.name);
            if (it == agents_.end() || it->second == nullptr)
                throw ConfigMismatch("no agent supplied for player '" + p.name + "'");
        }
        if (agents_.size() != state_.players.size())
            throw ConfigMismatch("agent map names do not match the game's players");
    }

    void run() {
        while (state_.phase.kind != PhaseKind::Ended) {
            switch (state_.phase.kind) {
                case PhaseKind::DayDiscussion:
                    run_discussion(alive_players(state_), state_.config.day_discussion_duration_s);
                    break;
                case PhaseKind::DayVote:
                    run_vote_round(alive_players(state_), PhaseKind::DayVote);
                    break;
                case PhaseKind::NightDiscussion:
                    run_discussion(alive_mafia(state_), state_.config.night_discussion_duration_s);
                    break;
                case PhaseKind::NightVote:
                    run_vote_round(alive_mafia(state_), PhaseKind::NightVote);
                    break;
                case PhaseKind::Ended:
                    break;
            }
            if (state_.phase.kind != PhaseKind::Ended) advance_phase(state_, clock_->now());
        }
    }

    // One timed discussion phase: ceil(duration/tick) scheduler polls per
    // participant; each Send is followed by one generator call.
    void run_discussion(const std::vector<std::string>& participants, double duration) {
        if (duration <= 0) return;
        const double tick = config_.tick_interval_s;
        const int ticks = static_cast<int>(std::ceil(duration / tick));
        const double phase_start = clock_->now();
        for (int k = 0; k < ticks; ++k) {
            std::vector<std::string> active;
            for (const auto& name : participants)
                if (disabled_.count(name) == 0) active.push_back(name);

            std::vector<std::function<AgentDecision()>> decide_jobs;
            for (const auto& name : active) {
                AgentView view = make_view(state_, name);
                Agent* agent = agents_.at(name);
                decide_jobs.push_back([agent, view = std::move(view)] { return agent->decide(view); });
            }
            diag_.scheduler_polls += static_cast<long long>(active.size());
            auto decisions = run_calls<AgentDecision>(decide_jobs, config_.max_concurrent_agent_calls,
                                                      config_.per_call_timeout_s);

            std::vector<std::string> senders;
            for (std::size_t i = 0; i < active.size(); ++i) {
                if (!decisions[i].error.empty()) {
                    fail_agent(active[i], decisions[i].error);
                } else if (decisions[i].timed_out) {
                    ++diag_.call_timeouts;  // silently waits this tick
                } else if (decisions[i].value == AgentDecision::Send) {
                    senders.push_back(active[i]);
                }
            }

            std::vector<std::function<std::string()>> compose_jobs;
            for (const auto& name : senders) {
                AgentView view = make_view(state_, name);
                Agent* agent = agents_.at(name);
                compose_jobs.push_back(
                    [agent, view = std::move(view)] { return agent->compose_message(view); });
            }
            std::vector<std::size_t> completion;
            auto messages = run_calls<std::string>(compose_jobs, config_.max_concurrent_agent_calls,
                                                   config_.per_call_timeout_s, &completion);

            // Logical mode owes its determinism to a seeded shuffle; wall mode
            // appends in true completion order.
            std::vector<std::size_t> order;
            if (config_.clock_mode == ClockMode::LogicalTicks) {
                order.resize(senders.size());
                for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
                order_rng_.shuffle(order);
            } else {
                order = completion;
            }
            for (std::size_t i : order) {
                if (!messages[i].error.empty()) {
                    fail_agent(senders[i], messages[i].error);
                    continue;
                }
                if (messages[i].timed_out) {
                    ++diag_.call_timeouts;
                    continue;
                }
                if (messages[i].value->empty()) {
                    ++diag_.empty_messages_dropped;
                    continue;
                }
                append_event(state_, Chat{senders[i], *messages[i].value}, clock_->now());
            }

            double target = std::min(static_cast<double>(k + 1) * tick, duration);
            double remaining = phase_start + target - clock_->now();
            if (remaining > 0) clock_->advance(remaining);
        }
    }

    // One voting round: votes are appended publicly as they are accepted; a
    // voter whose answers stay invalid through the re-prompt budget abstains.
    void run_vote_round(const std::vector<std::string>& voters, PhaseKind kind) {
        VoteKind vote_kind = kind == PhaseKind::DayVote ? VoteKind::Lynch : VoteKind::Kill;
        EliminationCause cause =
            kind == PhaseKind::DayVote ? EliminationCause::DayVote : EliminationCause::NightKill;
        std::map<std::string, std::string> votes;
        for (const auto& voter : voters) {
            if (disabled_.count(voter)) {
                ++diag_.vote_abstentions;
                continue;
            }
            std::vector<std::string> legal = legal_vote_targets(state_, voter, state_.phase);
            std::optional<std::string> accepted;
            for (int attempt = 0; attempt <= config_.vote_reprompt_limit && !accepted; ++attempt) {
                AgentView view = make_view(state_, voter);
                Agent* agent = agents_.at(voter);
                std::vector<std::function<std::optional<std::string>()>> job{
                    [agent, view = std::move(view), &legal, kind] {
                        return agent->choose_vote(view, legal, kind);
                    }};
                auto res = run_calls<std::optional<std::string>>(job, 1, config_.per_call_timeout_s);
                if (!res[0].error.empty()) {
                    fail_agent(voter, res[0].error);
                    break;
                }
                if (res[0].timed_out) {
                    ++diag_.call_timeouts;
                    continue;
                }
                const auto& answer = *res[0].value;
                if (answer && std::find(legal.begin(), legal.end(), *answer) != legal.end())
                    accepted = *answer;
            }
            if (accepted) {
                votes[voter] = *accepted;
                append_event(state_, VoteCast{voter, *accepted, vote_kind}, clock_->now());
            } else {
                ++diag_.vote_abstentions;
            }
        }
        std::vector<std::string> domain = kind == PhaseKind::DayVote ? alive_players(state_)
                                                                     : alive_bystanders(state_);
        std::string victim = tally_votes(votes, domain, state_.rng);
        apply_elimination(state_, victim, cause, clock_->now());
    }

    const GameState& state() const { return state_; }
    const EngineDiagnostics& diagnostics() const { return diag_; }

  private:
    void fail_agent(const std::string& name, const std::string& message) {
        diag_.agent_failures.emplace(name, message);  // keeps the first failure
        disabled_.insert(name);
    }

    GameState state_;
    std::map<std::string, Agent*> agents_;
    EngineConfig config_;
    Rng order_rng_;
    std::unique_ptr<Clock> clock_;
    EngineDiagnostics diag_;
    std::set<std::string> disabled_;
};

struct GameOutcome {
    EventLog log;
    EngineDiagnostics diagnostics;
};

inline GameOutcome run_game(const std::map<std::string, Agent*>& agents, const GameConfig& game_config,
                            const EngineConfig& engine_config, const std::string& game_id = "game",
                            const std::map<std::string, std::string>& models = {}) {
    GameState state = new_game(game_config);
    Engine engine(std::move(state), agents, engine_config);
    engine.run();
    return {make_log(game_id, engine.state(), models), engine.diagnostics()};
}

}  // namespace mafia
