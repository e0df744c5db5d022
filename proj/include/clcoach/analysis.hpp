#pragma once
// Rank statistics and questionnaire scoring.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "clcoach/dialogue.hpp"

namespace clcoach {

enum class Alternative { TwoSided, Less, Greater };
enum class TestMethod { Exact, NormalApprox, ChiSquared };

std::string_view to_string(Alternative a) noexcept;
Alternative alternative_from_string(std::string_view s);
std::string_view to_string(TestMethod m) noexcept;

struct TestResult {
    double statistic = 0.0;  // U of the first sample, or H
    double p = 1.0;
    TestMethod method = TestMethod::Exact;
    Alternative alternative = Alternative::TwoSided;
};

inline constexpr std::size_t kExactLimit = 10;

// Midranks (1-based) of the pooled values, in input order.
std::vector<double> midranks(std::span<const double> values);

// "Less" means x tends to be smaller than y. Exact null distribution when
// both sizes are <= 10 and there are no ties; otherwise normal approximation
// with tie and continuity correction.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          Alternative alternative = Alternative::TwoSided);

// Number of ways (out of C(n+m, n)) the first sample's U equals u, for u in [0, n*m].
std::vector<double> mann_whitney_counts(std::size_t n, std::size_t m);

// Tie-corrected H; p from chi-squared with k-1 degrees of freedom.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

std::vector<double> bonferroni(std::span<const double> p_values, std::size_t m);

// ---- questionnaires ----

struct Subscale {
    std::string name;
    std::vector<std::string> items;
    bool higher_is_better = true;
};

struct Instrument {
    std::string name;
    int min = 1;
    int max = 5;
    std::vector<Subscale> subscales;
};

struct InstrumentSet {
    std::vector<Instrument> instruments;

    // Item columns in survey-file order.
    std::vector<std::string> items() const;
    const Instrument& instrument_of_item(std::string_view item) const;
    const Subscale& subscale(std::string_view name) const;
    std::vector<std::string> subscale_names() const;

    static InstrumentSet from_json(const nlohmann::json& j);
};

InstrumentSet load_instruments(const std::filesystem::path& path);
std::filesystem::path default_instruments();

struct SurveyRecord {
    std::string participant;
    Condition condition = Condition::C1;
    std::map<std::string, int> ratings;  // item id -> rating; absent = missing
};

// Header: participant,condition,<item>... Empty cells are missing items.
// Ratings outside the instrument's scale are a DataError naming participant and item.
std::vector<SurveyRecord> parse_survey_csv(std::string_view text, const InstrumentSet& instruments);

struct SubscaleScores {
    std::string participant;
    Condition condition = Condition::C1;
    std::map<std::string, double> scores;
};

// Mean of each subscale's items. A missing item is a DataError naming the
// participant and the item. Discomfort keeps its raw direction.
std::vector<SubscaleScores> score_subscales(const std::vector<SurveyRecord>& records, const InstrumentSet& instruments);

struct PairTest {
    Condition first = Condition::C1;
    Condition second = Condition::C2;
    Alternative alternative = Alternative::Less;  // first vs second
    TestResult result;
    double p_adjusted = 1.0;
    bool significant = false;
};

struct DimensionReport {
    std::string dimension;
    std::map<Condition, std::size_t> n;
    std::map<Condition, double> median;
    TestResult kruskal;
    bool omnibus_significant = false;
    std::vector<PairTest> pairs;  // empty unless the omnibus test passes
};

struct ComparisonReport {
    double alpha = 0.05;
    std::vector<DimensionReport> rows;

    std::string to_text() const;
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

struct PairDirection {
    Condition first;
    Condition second;
    Alternative alternative;
};

// The expectation declared up front: C1 < C2, C2 < C3, C1 < C3 when higher
// ratings are better, reversed otherwise.
std::vector<PairDirection> default_directions(bool higher_is_better);

// Kruskal-Wallis per dimension; when p < alpha, the three one-tailed pairwise
// tests in the declared directions with Bonferroni m = 3. An empty `directions`
// map entry falls back to default_directions for that subscale.
ComparisonReport compare_conditions(const std::vector<SubscaleScores>& scores, const std::vector<std::string>& dimensions,
                                    const InstrumentSet& instruments,
                                    const std::map<std::string, std::vector<PairDirection>>& directions = {},
                                    double alpha = 0.05);

}  // namespace clcoach
