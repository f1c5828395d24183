#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mafia/errors.hpp"
#include "mafia/rng.hpp"
#include "mafia/transcript.hpp"

namespace mafia {

struct MatchScore {
    bool single = false;  // at least one of the two predicted names is mafia
    bool exact = false;   // both are
};

inline MatchScore score_prediction(const std::vector<std::string>& predicted,
                                   const std::vector<std::string>& truth) {
    if (predicted.size() != 2 || truth.size() != 2)
        throw DomainError("predictions and ground truth are pairs of names");
    if (predicted[0] == predicted[1] || truth[0] == truth[1])
        throw DomainError("pair names must be distinct");
    int overlap = 0;
    for (const auto& name : predicted)
        overlap += std::count(truth.begin(), truth.end(), name) > 0 ? 1 : 0;
    return {overlap >= 1, overlap == 2};
}

struct DayRow {
    int day = 0;
    int n = 0;
    int single_hits = 0;
    int exact_hits = 0;
    double single_pct() const { return 100.0 * single_hits / n; }
    double exact_pct() const { return 100.0 * exact_hits / n; }
};

struct MetricsReport {
    std::vector<DayRow> rows;  // ascending day
    int total_n = 0;
    int total_single_hits = 0;
    int total_exact_hits = 0;
    // Count-weighted pooling: totals over every transcript-day datapoint.
    double pooled_single_pct() const { return 100.0 * total_single_hits / total_n; }
    double pooled_exact_pct() const { return 100.0 * total_exact_hits / total_n; }
};

inline MetricsReport aggregate(const std::vector<std::pair<int, MatchScore>>& results) {
    if (results.empty()) throw EmptyResults("no scored predictions to aggregate");
    std::map<int, DayRow> by_day;
    for (const auto& [day, score] : results) {
        DayRow& row = by_day[day];
        row.day = day;
        row.n += 1;
        row.single_hits += score.single ? 1 : 0;
        row.exact_hits += score.exact ? 1 : 0;
    }
    MetricsReport report;
    for (const auto& [_, row] : by_day) {
        report.rows.push_back(row);
        report.total_n += row.n;
        report.total_single_hits += row.single_hits;
        report.total_exact_hits += row.exact_hits;
    }
    return report;
}

// --- random-guess baselines -----------------------------------------------------

struct BaselinePair {
    double single = 0.0;  // fractions, not percentages
    double exact = 0.0;
};

// Guessing 2 of n uniformly: exact = 1/C(n,2); a miss on both needs both picks
// among the n-2 non-mafia, so single = 1 - C(n-2,2)/C(n,2).
inline BaselinePair random_baseline_closed_form(int n_players, int n_mafia = 2) {
    if (n_mafia != 2) throw DomainError("closed form covers two-mafia games");
    if (n_players < 4) throw DomainError("need at least 4 players");
    double pairs = n_players * (n_players - 1) / 2.0;
    double both_wrong = (n_players - 2.0) * (n_players - 3.0) / 2.0;
    return {1.0 - both_wrong / pairs, 1.0 / pairs};
}

// Equal-weight mixture over games of varying size.
inline BaselinePair closed_form_mixture(const std::vector<int>& player_counts, int n_mafia = 2) {
    if (player_counts.empty()) throw DomainError("no player counts");
    BaselinePair sum;
    for (int n : player_counts) {
        BaselinePair p = random_baseline_closed_form(n, n_mafia);
        sum.single += p.single;
        sum.exact += p.exact;
    }
    return {sum.single / player_counts.size(), sum.exact / player_counts.size()};
}

struct BaselineEstimate {
    long long trials = 0;
    double single = 0.0;
    double exact = 0.0;
    double single_stderr = 0.0;
    double exact_stderr = 0.0;
};

// Each trial picks a game size uniformly from the list, then guesses two of its
// players; the mafia can sit anywhere, so fixing them at two seats is exact.
inline BaselineEstimate random_baseline_mc(const std::vector<int>& player_counts, long long trials,
                                           std::uint64_t seed) {
    if (player_counts.empty()) throw DomainError("no player counts");
    if (trials < 1) throw DomainError("trials must be >= 1");
    for (int n : player_counts)
        if (n < 4) throw DomainError("need at least 4 players");
    Rng rng(seed);
    long long single_hits = 0, exact_hits = 0;
    for (long long t = 0; t < trials; ++t) {
        int n = player_counts[static_cast<std::size_t>(rng.below(player_counts.size()))];
        std::uint64_t a = rng.below(static_cast<std::uint64_t>(n));
        std::uint64_t b = rng.below(static_cast<std::uint64_t>(n - 1));
        if (b >= a) b += 1;
        int overlap = (a < 2 ? 1 : 0) + (b < 2 ? 1 : 0);
        if (overlap >= 1) ++single_hits;
        if (overlap == 2) ++exact_hits;
    }
    BaselineEstimate est;
    est.trials = trials;
    est.single = static_cast<double>(single_hits) / static_cast<double>(trials);
    est.exact = static_cast<double>(exact_hits) / static_cast<double>(trials);
    est.single_stderr = std::sqrt(est.single * (1.0 - est.single) / static_cast<double>(trials));
    est.exact_stderr = std::sqrt(est.exact * (1.0 - est.exact) / static_cast<double>(trials));
    return est;
}

// --- rendering --------------------------------------------------------------------

inline std::string fmt_fixed(double value, int decimals = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

inline std::string fmt_pct(double percent) { return fmt_fixed(percent) + "%"; }

inline std::string pad_right(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

struct ReportColumn {
    std::string label;
    const MetricsReport* report = nullptr;
    std::optional<BaselinePair> baseline;  // random-guess rates for this dataset
};

// Per-day accuracy table: one labelled column per dataset, a count-weighted
// average row, and a random-guess row when a baseline is supplied.
inline std::string render_accuracy_table(const std::string& title,
                                         const std::vector<ReportColumn>& columns, bool exact) {
    constexpr std::size_t kDayWidth = 9;
    constexpr std::size_t kColWidth = 16;
    std::string out = title + "\n";
    out += std::string(kDayWidth + kColWidth * columns.size(), '-') + "\n";
    out += pad_right("Day", kDayWidth);
    for (const auto& c : columns) out += pad_right(c.label, kColWidth);
    out += "\n";

    std::vector<int> days;
    for (const auto& c : columns)
        for (const auto& row : c.report->rows)
            if (std::find(days.begin(), days.end(), row.day) == days.end())
                days.push_back(row.day);
    std::sort(days.begin(), days.end());

    for (int day : days) {
        out += pad_right(std::to_string(day), kDayWidth);
        for (const auto& c : columns) {
            auto it = std::find_if(c.report->rows.begin(), c.report->rows.end(),
                                   [day](const DayRow& r) { return r.day == day; });
            if (it == c.report->rows.end()) {
                out += pad_right("-", kColWidth);
            } else {
                double pct = exact ? it->exact_pct() : it->single_pct();
                out += pad_right("(" + std::to_string(it->n) + ") " + fmt_pct(pct), kColWidth);
            }
        }
        out += "\n";
    }

    out += pad_right("Average", kDayWidth);
    for (const auto& c : columns) {
        double pct = exact ? c.report->pooled_exact_pct() : c.report->pooled_single_pct();
        out += pad_right("(" + std::to_string(c.report->total_n) + ") " + fmt_pct(pct), kColWidth);
    }
    out += "\n";

    bool any_baseline = std::any_of(columns.begin(), columns.end(),
                                    [](const ReportColumn& c) { return c.baseline.has_value(); });
    if (any_baseline) {
        out += pad_right("Random", kDayWidth);
        for (const auto& c : columns) {
            if (!c.baseline) {
                out += pad_right("-", kColWidth);
                continue;
            }
            double pct = 100.0 * (exact ? c.baseline->exact : c.baseline->single);
            out += pad_right(fmt_pct(pct), kColWidth);
        }
        out += "\n";
    }
    return out;
}

inline std::string render_report(const std::vector<ReportColumn>& columns) {
    return render_accuracy_table("Single-Match Accuracies", columns, /*exact=*/false) + "\n" +
           render_accuracy_table("Exact-Match Accuracies", columns, /*exact=*/true);
}

// metric,day,n,hits,pct rows; the trailing rows carry the pooled average and,
// when present, the random baseline.
inline std::string render_csv(const MetricsReport& report,
                              std::optional<BaselinePair> baseline = std::nullopt) {
    std::string out = "metric,day,n,hits,pct\n";
    auto add = [&out](const std::string& metric, const std::string& day, int n, int hits,
                      double pct) {
        out += metric + "," + day + "," + std::to_string(n) + "," + std::to_string(hits) + "," +
               fmt_fixed(pct) + "\n";
    };
    for (const auto& row : report.rows)
        add("single", std::to_string(row.day), row.n, row.single_hits, row.single_pct());
    add("single", "average", report.total_n, report.total_single_hits,
        report.pooled_single_pct());
    for (const auto& row : report.rows)
        add("exact", std::to_string(row.day), row.n, row.exact_hits, row.exact_pct());
    add("exact", "average", report.total_n, report.total_exact_hits, report.pooled_exact_pct());
    if (baseline) {
        out += "single,random,,," + fmt_fixed(100.0 * baseline->single) + "\n";
        out += "exact,random,,," + fmt_fixed(100.0 * baseline->exact) + "\n";
    }
    return out;
}

inline std::string render_dataset_stats(const DatasetStats& s) {
    auto line = [](const std::string& label, const std::string& value) {
        return pad_right(label, 28) + value + "\n";
    };
    std::string out;
    out += line("Games", std::to_string(s.games));
    out += line("Mean Participants", fmt_fixed(s.mean_participants));
    out += line("Min Participants", std::to_string(s.min_participants));
    out += line("Max Participants", std::to_string(s.max_participants));
    out += line("Mean Game Length (days)", fmt_fixed(s.mean_length_days));
    out += line("Min Game Length (days)", std::to_string(s.min_length_days));
    out += line("Max Game Length (days)", std::to_string(s.max_length_days));
    out += line("Ratio of Games <= 3 Days", fmt_fixed(s.ratio_length_at_most_3));
    out += line("Mean Utterances per Game", fmt_fixed(s.mean_utterances_per_game));
    out += line("Mean Words per Utterance", fmt_fixed(s.mean_words_per_utterance));
    return out;
}

}  // namespace mafia
