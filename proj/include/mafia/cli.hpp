#pragma once

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mafia/agents.hpp"
#include "mafia/detector.hpp"
#include "mafia/engine.hpp"
#include "mafia/errors.hpp"
#include "mafia/game.hpp"
#include "mafia/human_ingest.hpp"
#include "mafia/llm_client.hpp"
#include "mafia/metrics.hpp"
#include "mafia/transcript.hpp"

namespace mafia::cli {

namespace fs = std::filesystem;

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kPartial = 1;  // some per-item failures, recorded and reported
inline constexpr int kUsage = 2;    // configuration or usage problem

inline std::string now_iso() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Every directory of outputs gets exactly one manifest describing the run.
class ManifestWriter {
  public:
    explicit ManifestWriter(std::string command) : started_(now_iso()) {
        j_["command"] = std::move(command);
    }
    json& fields() { return j_; }
    void write(const fs::path& dir) {
        j_["run_id"] = j_["command"].get<std::string>() + "-" + started_;
        j_["started_at"] = started_;
        j_["finished_at"] = now_iso();
        std::ofstream f(dir / "manifest.json", std::ios::binary);
        if (!f) throw IoError("cannot write manifest in '" + dir.string() + "'");
        f << j_.dump(2) << '\n';
    }

  private:
    std::string started_;
    json j_;
};

inline std::string game_id_for(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "game-%03d", index);
    return buf;
}

// Player-count lists are accepted inline ("[10,10,7]") or as a path to a file
// holding the same JSON array.
inline std::vector<int> parse_counts_arg(const std::string& arg) {
    std::string text = arg.find_first_not_of(" \t") != std::string::npos &&
                               arg[arg.find_first_not_of(" \t")] == '['
                           ? arg
                           : read_text_file(arg);
    return json::parse(text).get<std::vector<int>>();
}

inline std::vector<fs::path> sorted_files(const fs::path& dir, const std::string& extension) {
    if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == extension)
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

// --- simulate ---------------------------------------------------------------------

struct SimulateOptions {
    int games = 1;
    std::uint64_t seed = 1;
    std::string out;
    bool mock = false;
    int players = 10;
    int mafia = 2;
    double day_duration = 150.0;
    double night_duration = 60.0;
    double tick_interval = 5.0;
    std::string model = "gpt-4o";
    std::string templates_dir;
    int max_concurrent = 4;
    double call_timeout = 120.0;
};

inline int cmd_simulate(const SimulateOptions& opt) {
    GameConfig base;
    base.n_players = opt.players;
    base.n_mafia = opt.mafia;
    base.day_discussion_duration_s = opt.day_duration;
    base.night_discussion_duration_s = opt.night_duration;
    validate_config(base);

    std::unique_ptr<LlmClient> client;
    if (!opt.mock) {
        ClientConfig cc = ClientConfig::from_env();
        if (cc.api_key.empty()) {
            std::cerr << "error: LLM_API_KEY is not set (use --mock for offline runs)\n";
            return kUsage;
        }
        client = std::make_unique<LlmClient>(cc);
    }
    PromptTemplates templates =
        opt.templates_dir.empty() ? PromptTemplates::defaults()
                                  : PromptTemplates::load_dir(opt.templates_dir);

    EngineConfig ecfg;
    if (opt.mock) {
        ecfg.clock_mode = ClockMode::LogicalTicks;
        ecfg.tick_interval_s = opt.tick_interval;
        ecfg.max_concurrent_agent_calls = 1;
        ecfg.per_call_timeout_s = 0.0;
    } else {
        ecfg.clock_mode = ClockMode::WallClock;
        ecfg.tick_interval_s = opt.tick_interval;
        ecfg.max_concurrent_agent_calls = opt.max_concurrent;
        ecfg.per_call_timeout_s = opt.call_timeout;
    }

    fs::create_directories(opt.out);
    ManifestWriter manifest("simulate");
    json failures = json::array();
    int ok = 0;
    for (int i = 0; i < opt.games; ++i) {
        GameConfig gcfg = base;
        gcfg.rng_seed = opt.seed + static_cast<std::uint64_t>(i);
        std::string id = game_id_for(i + 1);
        try {
            std::vector<std::unique_ptr<Agent>> storage;
            std::map<std::string, Agent*> agents;
            for (const auto& name : assigned_names(gcfg)) {
                if (opt.mock)
                    storage.push_back(std::make_unique<RandomChatterAgent>(
                        mix_seed(gcfg.rng_seed, hash_name(name))));
                else
                    storage.push_back(
                        std::make_unique<LlmAgent>(name, *client, opt.model, templates));
                agents[name] = storage.back().get();
            }
            std::string player_model = opt.mock ? "mock-random" : opt.model;
            GameOutcome outcome =
                run_game(agents, gcfg, ecfg, id, {{"players", player_model}});
            save_log(outcome.log, fs::path(opt.out) / (id + ".jsonl"));
            ++ok;
        } catch (const Error& e) {
            failures.push_back({{"game_id", id}, {"error", e.what()}});
            std::cerr << "game " << id << " failed: " << e.what() << "\n";
        }
    }
    manifest.fields()["mock"] = opt.mock;
    manifest.fields()["model"] = opt.mock ? "mock-random" : opt.model;
    manifest.fields()["config"] = config_to_json(base);
    manifest.fields()["seed"] = opt.seed;
    manifest.fields()["counts"] = {{"games", ok}, {"failures", failures.size()}};
    manifest.fields()["failures"] = failures;
    manifest.fields()["complete"] = failures.empty();
    manifest.write(opt.out);
    std::cout << "wrote " << ok << " game log(s) to " << opt.out << "\n";
    return failures.empty() ? kOk : kPartial;
}

// --- ingest-human ------------------------------------------------------------------

inline int cmd_ingest_human(const std::string& in, const std::string& out) {
    HumanIngestOutcome outcome = ingest_human_dir(in);
    fs::create_directories(out);
    for (const auto& log : outcome.accepted)
        save_log(log, fs::path(out) / (log.header.game_id + ".jsonl"));

    json excluded = json::array();
    for (const auto& e : outcome.excluded)
        excluded.push_back({{"game_id", e.game_id}, {"reason", e.reason}});
    json errors = json::array();
    for (const auto& e : outcome.errors)
        errors.push_back({{"file", e.file}, {"error", e.message}});
    json accepted = json::array();
    for (const auto& log : outcome.accepted) accepted.push_back(log.header.game_id);

    {
        std::ofstream f(fs::path(out) / "validity_report.json", std::ios::binary);
        if (!f) throw IoError("cannot write validity report");
        f << json{{"accepted", accepted}, {"excluded", excluded}, {"errors", errors}}.dump(2)
          << '\n';
    }
    ManifestWriter manifest("ingest-human");
    manifest.fields()["input"] = in;
    manifest.fields()["counts"] = {{"accepted", outcome.accepted.size()},
                                   {"excluded", outcome.excluded.size()},
                                   {"errors", outcome.errors.size()}};
    manifest.fields()["complete"] = outcome.errors.empty();
    manifest.write(out);

    if (outcome.accepted.empty() && outcome.excluded.empty())
        std::cerr << "warning: no input games found in " << in << "\n";
    std::cout << "accepted " << outcome.accepted.size() << " game(s), excluded "
              << outcome.excluded.size() << ", errors " << outcome.errors.size() << "\n";
    for (const auto& e : outcome.excluded)
        std::cout << "  excluded " << e.game_id << ": " << e.reason << "\n";
    return outcome.errors.empty() ? kOk : kPartial;
}

// --- cleanse ------------------------------------------------------------------------

inline int cmd_cleanse(const std::string& in, const std::string& out, const std::string& days) {
    std::optional<int> only_day;
    if (days != "all") only_day = std::stoi(days);

    fs::create_directories(out);
    ManifestWriter manifest("cleanse");
    json errors = json::array();
    int games = 0, transcripts = 0;
    for (const auto& file : sorted_files(in, ".jsonl")) {
        try {
            EventLog log = load_log(file);
            ++games;
            int length = game_length_days(log);
            std::vector<int> day_list;
            if (only_day)
                day_list.push_back(*only_day);
            else
                for (int d = 1; d <= length; ++d) day_list.push_back(d);
            for (int d : day_list) {
                CleansedTranscript t = cleanse(truncate_to_day(log, d));
                save_cleansed(t, fs::path(out) /
                                     (log.header.game_id + "_day" + std::to_string(d) + ".txt"));
                ++transcripts;
            }
        } catch (const Error& e) {
            errors.push_back({{"file", file.filename().string()}, {"error", e.what()}});
            std::cerr << file.filename().string() << ": " << e.what() << "\n";
        }
    }
    manifest.fields()["counts"] = {{"games", games}, {"transcripts", transcripts},
                                   {"errors", errors.size()}};
    manifest.fields()["errors"] = errors;
    manifest.fields()["complete"] = errors.empty();
    manifest.write(out);
    std::cout << "wrote " << transcripts << " cleansed transcript(s) from " << games
              << " game(s)\n";
    return errors.empty() ? kOk : kPartial;
}

// --- detect -------------------------------------------------------------------------

struct DetectOptions {
    std::string transcripts;
    std::string out;
    std::string model = "gpt-4-turbo";
    bool mock = false;
    std::string mock_replies;  // optional JSON table "game_id:day" -> reply
};

inline std::string builtin_mock_reply(const CleansedTranscript& t) {
    Rng rng(mix_seed(hash_name(t.game_id), static_cast<std::uint64_t>(t.day_limit)));
    std::size_t n = t.player_list.size();
    std::uint64_t a = rng.below(n);
    std::uint64_t b = rng.below(n - 1);
    if (b >= a) b += 1;
    return "Mafia Prediction: " + t.player_list[a] + ", " + t.player_list[b] +
           "\nReason: Their voting patterns lined up across the days.";
}

inline int cmd_detect(const DetectOptions& opt) {
    std::map<std::string, std::string> reply_table;
    if (!opt.mock_replies.empty()) {
        json table = json::parse(read_text_file(opt.mock_replies));
        for (const auto& [key, value] : table.items())
            reply_table[key] = value.get<std::string>();
    }

    std::string current_reply;
    std::unique_ptr<ChatBackend> backend;
    if (opt.mock) {
        backend = std::make_unique<MockBackend>(
            [&current_reply](const ChatRequest&) { return current_reply; });
    } else {
        ClientConfig cc = ClientConfig::from_env();
        if (cc.api_key.empty()) {
            std::cerr << "error: LLM_API_KEY is not set (use --mock for offline runs)\n";
            return kUsage;
        }
        backend = std::make_unique<LlmClient>(cc);
    }
    DetectorConfig dcfg;
    dcfg.model = opt.model;

    fs::path out_path(opt.out);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    std::ofstream results(out_path, std::ios::binary);
    if (!results) throw IoError("cannot open '" + opt.out + "' for writing");

    int scored = 0, parse_failures = 0, hard_failures = 0;
    for (const auto& file : sorted_files(opt.transcripts, ".txt")) {
        CleansedTranscript t = load_cleansed(file);
        json rec{{"game_id", t.game_id},
                 {"day_limit", t.day_limit},
                 {"n_players", t.player_list.size()},
                 {"ground_truth", t.ground_truth_mafia}};
        try {
            if (opt.mock) {
                std::string key = t.game_id + ":" + std::to_string(t.day_limit);
                auto it = reply_table.find(key);
                current_reply = it != reply_table.end() ? it->second : builtin_mock_reply(t);
            }
            Prediction p = detect(t, *backend, dcfg);
            rec["predicted"] = p.predicted;
            rec["parse_ok"] = p.parse_ok;
            rec["attempts"] = p.attempts;
            rec["reasoning"] = p.reasoning;
            rec["raw_reply"] = p.raw_reply;
            if (p.parse_ok && t.ground_truth_mafia.size() == 2) {
                MatchScore s = score_prediction(p.predicted, t.ground_truth_mafia);
                rec["single"] = s.single;
                rec["exact"] = s.exact;
                ++scored;
            } else {
                ++parse_failures;
            }
        } catch (const Error& e) {
            rec["parse_ok"] = false;
            rec["error"] = e.what();
            ++hard_failures;
            std::cerr << file.filename().string() << ": " << e.what() << "\n";
        }
        results << rec.dump() << '\n';
    }
    results.close();

    ManifestWriter manifest("detect");
    manifest.fields()["model"] = opt.model;
    manifest.fields()["mock"] = opt.mock;
    manifest.fields()["counts"] = {{"detections", scored},
                                   {"parse_failures", parse_failures},
                                   {"errors", hard_failures}};
    manifest.fields()["results_file"] = out_path.filename().string();
    manifest.fields()["complete"] = hard_failures == 0;
    manifest.write(out_path.has_parent_path() ? out_path.parent_path() : fs::path("."));

    std::cout << "scored " << scored << " transcript-day(s), " << parse_failures
              << " parse failure(s), " << hard_failures << " error(s)\n";
    return parse_failures == 0 && hard_failures == 0 ? kOk : kPartial;
}

// --- report -------------------------------------------------------------------------

inline int cmd_report(const std::string& results_path, const std::string& baseline_counts_path,
                      const std::string& csv_path) {
    std::ifstream in(results_path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + results_path + "' for reading");

    std::vector<std::pair<int, MatchScore>> scored;
    std::map<std::string, int> game_sizes;
    int excluded = 0, total = 0;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaError(std::string("invalid result record: ") + e.what(), line_no);
        }
        ++total;
        game_sizes[rec.value("game_id", "?")] = rec.value("n_players", 0);
        if (!rec.value("parse_ok", false)) {
            ++excluded;
            continue;
        }
        MatchScore s = score_prediction(rec.at("predicted").get<std::vector<std::string>>(),
                                        rec.at("ground_truth").get<std::vector<std::string>>());
        scored.emplace_back(rec.at("day_limit").get<int>(), s);
    }
    if (scored.empty()) {
        std::cerr << "error: no scorable records in " << results_path << "\n";
        return kUsage;
    }

    MetricsReport report = aggregate(scored);

    std::vector<int> counts;
    if (!baseline_counts_path.empty()) {
        counts = parse_counts_arg(baseline_counts_path);
    } else {
        for (const auto& [_, n] : game_sizes)
            if (n >= 4) counts.push_back(n);
    }
    std::optional<BaselinePair> baseline;
    if (!counts.empty()) baseline = closed_form_mixture(counts);

    std::cout << render_report({{"Results", &report, baseline}});
    std::cout << "\nDatapoints: " << report.total_n << " scored, " << excluded
              << " excluded as parse failures (of " << total << " records)\n";

    if (!csv_path.empty()) {
        write_text_file(csv_path, render_csv(report, baseline));
        std::cout << "wrote CSV to " << csv_path << "\n";
    }
    return kOk;
}

// --- baseline ------------------------------------------------------------------------

inline int cmd_baseline(int players, const std::string& counts_path, long long trials,
                        std::uint64_t seed) {
    std::vector<int> counts;
    if (players > 0) counts.push_back(players);
    if (!counts_path.empty()) counts = parse_counts_arg(counts_path);
    if (counts.empty()) {
        std::cerr << "error: provide --players or --counts\n";
        return kUsage;
    }
    BaselineEstimate mc = random_baseline_mc(counts, trials, seed);
    BaselinePair cf = closed_form_mixture(counts);
    std::cout << "Random-guess baseline: " << trials << " trials, seed " << seed << "\n";
    std::cout << "Single-match: MC " << fmt_pct(100 * mc.single) << " (stderr "
              << fmt_pct(100 * mc.single_stderr) << "), closed form " << fmt_pct(100 * cf.single)
              << ", diff " << fmt_pct(100 * std::abs(mc.single - cf.single)) << "\n";
    std::cout << "Exact-match:  MC " << fmt_pct(100 * mc.exact) << " (stderr "
              << fmt_pct(100 * mc.exact_stderr) << "), closed form " << fmt_pct(100 * cf.exact)
              << ", diff " << fmt_pct(100 * std::abs(mc.exact - cf.exact)) << "\n";
    return kOk;
}

// --- stats ---------------------------------------------------------------------------

inline int cmd_stats(const std::string& in) {
    std::vector<EventLog> logs;
    for (const auto& file : sorted_files(in, ".jsonl")) logs.push_back(load_log(file));
    if (logs.empty()) {
        std::cerr << "error: no game logs in " << in << "\n";
        return kUsage;
    }
    std::cout << render_dataset_stats(compute_dataset_stats(logs));
    return kOk;
}

// --- templates -------------------------------------------------------------------------

inline int cmd_templates(const std::string& out) {
    PromptTemplates::defaults().save_dir(out);
    write_text_file(fs::path(out) / "detector.txt", default_detector_template());
    ManifestWriter manifest("templates");
    manifest.fields()["counts"] = {{"files", 6}};
    manifest.fields()["complete"] = true;
    manifest.write(out);
    std::cout << "wrote prompt templates to " << out << "\n";
    return kOk;
}

// --- wiring ------------------------------------------------------------------------------

inline int run(int argc, const char* const* argv) {
    CLI::App app{"Mafia game simulator and deception-evaluation toolkit"};
    app.require_subcommand(1);
    int rc = kOk;

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Play games and record event logs");
    simulate->add_option("--games", sim.games, "Number of games")->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim.seed, "Base seed; game i uses seed+i");
    simulate->add_option("--out", sim.out, "Output directory")->required();
    simulate->add_flag("--mock", sim.mock, "Use built-in offline agents");
    simulate->add_option("--players", sim.players, "Players per game");
    simulate->add_option("--mafia", sim.mafia, "Mafia per game");
    simulate->add_option("--day-duration", sim.day_duration, "Day discussion seconds");
    simulate->add_option("--night-duration", sim.night_duration, "Night discussion seconds");
    simulate->add_option("--tick-interval", sim.tick_interval, "Scheduler tick seconds");
    simulate->add_option("--model", sim.model, "Player model identifier");
    simulate->add_option("--templates", sim.templates_dir, "Prompt template directory");
    simulate->add_option("--max-concurrent", sim.max_concurrent, "Concurrent agent calls");
    simulate->add_option("--call-timeout", sim.call_timeout, "Per-call timeout seconds");
    simulate->callback([&] { rc = cmd_simulate(sim); });

    std::string ingest_in, ingest_out;
    auto* ingest = app.add_subcommand("ingest-human", "Convert a human game dataset");
    ingest->add_option("--in", ingest_in, "Input directory of human game JSON files")->required();
    ingest->add_option("--out", ingest_out, "Output directory")->required();
    ingest->callback([&] { rc = cmd_ingest_human(ingest_in, ingest_out); });

    std::string cleanse_in, cleanse_out, cleanse_days = "all";
    auto* cl = app.add_subcommand("cleanse", "Produce detector-ready day-prefix transcripts");
    cl->add_option("--in", cleanse_in, "Directory of event logs")->required();
    cl->add_option("--out", cleanse_out, "Output directory")->required();
    cl->add_option("--days", cleanse_days, "'all' or a single day number");
    cl->callback([&] { rc = cmd_cleanse(cleanse_in, cleanse_out, cleanse_days); });

    DetectOptions det;
    auto* detect_cmd = app.add_subcommand("detect", "Predict the mafia from transcripts");
    detect_cmd->add_option("--transcripts", det.transcripts, "Cleansed transcript directory")
        ->required();
    detect_cmd->add_option("--out", det.out, "Results file (one JSON record per line)")
        ->required();
    detect_cmd->add_option("--model", det.model, "Detector model identifier");
    detect_cmd->add_flag("--mock", det.mock, "Use deterministic offline replies");
    detect_cmd->add_option("--mock-replies", det.mock_replies,
                           "JSON table of replies keyed by 'game_id:day'");
    detect_cmd->callback([&] { rc = cmd_detect(det); });

    std::string rep_results, rep_counts, rep_csv;
    auto* rep = app.add_subcommand("report", "Render accuracy tables from detection results");
    rep->add_option("--results", rep_results, "Detection results file")->required();
    rep->add_option("--baseline-counts", rep_counts, "Per-game player counts, inline JSON array or a file");
    rep->add_option("--csv", rep_csv, "Also write CSV here");
    rep->callback([&] { rc = cmd_report(rep_results, rep_counts, rep_csv); });

    int base_players = 0;
    std::string base_counts;
    long long base_trials = 1000000;
    std::uint64_t base_seed = 1;
    auto* base = app.add_subcommand("baseline", "Random-guess baseline (Monte Carlo + closed form)");
    base->add_option("--players", base_players, "Single game size");
    base->add_option("--counts", base_counts, "Per-game player counts, inline JSON array or a file");
    base->add_option("--trials", base_trials, "Monte Carlo trials");
    base->add_option("--seed", base_seed, "Monte Carlo seed");
    base->callback([&] { rc = cmd_baseline(base_players, base_counts, base_trials, base_seed); });

    std::string stats_in;
    auto* st = app.add_subcommand("stats", "Summarize a directory of game logs");
    st->add_option("--in", stats_in, "Directory of event logs")->required();
    st->callback([&] { rc = cmd_stats(stats_in); });

    std::string templates_out;
    auto* tpl = app.add_subcommand("templates", "Write the default prompt templates");
    tpl->add_option("--out", templates_out, "Output directory")->required();
    tpl->callback([&] { rc = cmd_templates(templates_out); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    } catch (const InvalidConfig& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return rc;
}

}  // namespace mafia::cli
