#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"

#include "clcoach/analysis.hpp"
#include "clcoach/error.hpp"

using namespace clcoach;

namespace {

// n+m distinct values shuffled into two samples.
std::pair<std::vector<double>, std::vector<double>> tie_free(std::mt19937_64& rng, std::size_t n, std::size_t m) {
    std::vector<double> pool(n + m);
    std::iota(pool.begin(), pool.end(), 1.0);
    for (auto& v : pool) v = v * 0.37 - 3.0;
    std::shuffle(pool.begin(), pool.end(), rng);
    return {std::vector<double>(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n)),
            std::vector<double>(pool.begin() + static_cast<std::ptrdiff_t>(n), pool.end())};
}

std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(CLCOACH_TEST_DATA_DIR) + "/" + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("midranks average ties") {
    const std::vector<double> v{3.0, 1.0, 3.0, 2.0, 3.0};
    CHECK(midranks(v) == std::vector<double>{4.0, 1.0, 4.0, 2.0, 4.0});
}

TEST_CASE("exact Mann-Whitney agrees with full enumeration") {
    std::mt19937_64 rng(2024);
    for (std::size_t n = 1; n <= 8; ++n) {
        for (std::size_t m = 1; m <= 8; ++m) {
            for (int rep = 0; rep < 3; ++rep) {
                const auto [x, y] = tie_free(rng, n, m);
                const double u = oracle::u_pairs(x, y);
                const auto ref = oracle::mann_whitney_enumerated(n, m, u);
                const auto less = mann_whitney_u(x, y, Alternative::Less);
                const auto greater = mann_whitney_u(x, y, Alternative::Greater);
                const auto two = mann_whitney_u(x, y, Alternative::TwoSided);
                REQUIRE(less.method == TestMethod::Exact);
                REQUIRE(less.statistic == u);
                REQUIRE(std::abs(less.p - ref.less) <= 1e-12);
                REQUIRE(std::abs(greater.p - ref.greater) <= 1e-12);
                REQUIRE(std::abs(two.p - ref.two_sided) <= 1e-12);
            }
        }
    }
}

TEST_CASE("U distribution counts sum to the binomial coefficient and are symmetric") {
    for (std::size_t n = 1; n <= 10; ++n) {
        for (std::size_t m = 1; m <= 10; ++m) {
            const auto c = mann_whitney_counts(n, m);
            REQUIRE(c.size() == n * m + 1);
            double total = std::accumulate(c.begin(), c.end(), 0.0);
            double binom = 1;
            for (std::size_t k = 1; k <= n; ++k) binom = binom * static_cast<double>(m + k) / static_cast<double>(k);
            REQUIRE(total == doctest::Approx(binom).epsilon(1e-12));
            for (std::size_t u = 0; u < c.size(); ++u) REQUIRE(c[u] == c[c.size() - 1 - u]);
        }
    }
}

TEST_CASE("Mann-Whitney reference values and identities") {
    const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
    const auto r = mann_whitney_u(x, y, Alternative::Less);
    CHECK(r.statistic == 0.0);
    CHECK(r.p == doctest::Approx(0.05));
    CHECK(mann_whitney_u(y, x, Alternative::Greater).p == doctest::Approx(0.05));
    CHECK(mann_whitney_u(x, y).p == doctest::Approx(0.1));

    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> a(7 + rep % 9), b(5 + rep % 13);
        for (auto& v : a) v = std::round(g(rng) * 2) / 2;  // plenty of ties
        for (auto& v : b) v = std::round(g(rng) * 2) / 2;
        const auto ua = mann_whitney_u(a, b).statistic;
        const auto ub = mann_whitney_u(b, a).statistic;
        REQUIRE(ua + ub == doctest::Approx(static_cast<double>(a.size() * b.size())));
        const auto p = mann_whitney_u(a, b, Alternative::Less).p;
        REQUIRE(p >= 0.0);
        REQUIRE(p <= 1.0);
    }
}

TEST_CASE("large or tied samples use the normal approximation") {
    std::vector<double> x(12), y(12);
    std::iota(x.begin(), x.end(), 0.0);
    std::iota(y.begin(), y.end(), 6.0);
    const auto r = mann_whitney_u(x, y, Alternative::Less);
    CHECK(r.method == TestMethod::NormalApprox);
    CHECK(r.p < 0.05);
    const std::vector<double> tx{1, 1, 2}, ty{2, 3, 3};
    CHECK(mann_whitney_u(tx, ty).method == TestMethod::NormalApprox);
    const std::vector<double> same{2, 2, 2};
    CHECK(mann_whitney_u(same, same).p == 1.0);
}

TEST_CASE("Mann-Whitney input errors") {
    const std::vector<double> empty, one{1.0}, bad{1.0, NAN};
    CHECK_THROWS_AS(mann_whitney_u(empty, one), EmptyInputError);
    CHECK_THROWS_AS(mann_whitney_u(one, empty), EmptyInputError);
    CHECK_THROWS_AS(mann_whitney_u(bad, one), ParameterError);
}

TEST_CASE("Kruskal-Wallis direct formula") {
    const std::vector<std::vector<double>> g{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    const auto r = kruskal_wallis(g);
    CHECK(r.statistic == doctest::Approx(7.2));
    CHECK(r.p == doctest::Approx(std::exp(-3.6)));  // chi-squared, 2 df
    CHECK(r.method == TestMethod::ChiSquared);

    // H depends on ranks only
    auto t = g;
    for (auto& grp : t)
        for (auto& v : grp) v = std::exp(v) * 3.0 + 1.0;
    CHECK(kruskal_wallis(t).statistic == doctest::Approx(7.2));

    // direct formula with ties, recomputed by hand
    const std::vector<std::vector<double>> tied{{1, 2, 2}, {2, 3, 4, 4}};
    // pooled ranks: 1 -> 1; 2,2,2 -> 3; 3 -> 5; 4,4 -> 6.5
    const double r1 = 1 + 3 + 3, r2 = 3 + 5 + 6.5 + 6.5, big_n = 7;
    double h = 12.0 / (big_n * (big_n + 1)) * (r1 * r1 / 3 + r2 * r2 / 4) - 3 * (big_n + 1);
    h /= 1.0 - ((27.0 - 3) + (8.0 - 2)) / (big_n * big_n * big_n - big_n);
    CHECK(kruskal_wallis(tied).statistic == doctest::Approx(h).epsilon(1e-12));

    CHECK(kruskal_wallis({{1, 1}, {1, 1}}).p == 1.0);
    CHECK_THROWS_AS(kruskal_wallis({{1, 2}}), ParameterError);
    CHECK_THROWS_AS(kruskal_wallis({{1, 2}, {}}), EmptyInputError);
}

TEST_CASE("Bonferroni") {
    const std::vector<double> p{0.01, 0.2, 0.5};
    const auto adj = bonferroni(p, 3);
    CHECK(adj[0] == doctest::Approx(0.03));
    CHECK(adj[1] == doctest::Approx(0.6));
    CHECK(adj[2] == 1.0);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(adj[i] >= p[i]);
    CHECK(bonferroni(p, 6)[0] == doctest::Approx(0.06));
    CHECK_THROWS_AS(bonferroni(p, 2), ParameterError);
    CHECK_THROWS_AS(bonferroni(std::vector<double>{1.5}, 1), ParameterError);
    CHECK_THROWS_AS(bonferroni(std::vector<double>{}, 0), ParameterError);
    CHECK(bonferroni(std::vector<double>{}, 1).empty());
}

TEST_CASE("instrument definitions") {
    const auto inst = load_instruments(default_instruments());
    const auto names = inst.subscale_names();
    for (const char* s : {"anthropomorphism", "animacy", "likeability", "perceived_intelligence", "perceived_safety",
                          "warmth", "competence", "discomfort"}) {
        CHECK(std::find(names.begin(), names.end(), s) != names.end());
    }
    CHECK_FALSE(inst.subscale("discomfort").higher_is_better);
    CHECK(inst.instrument_of_item("warmth_1").max == 9);
    CHECK(inst.instrument_of_item("animacy_1").max == 5);
    CHECK_THROWS_AS(inst.subscale("nope"), DataError);
    CHECK_THROWS_AS(InstrumentSet::from_json(nlohmann::json{{"format", "x"}}), DataError);
}

TEST_CASE("survey parsing and scoring") {
    const auto inst = load_instruments(default_instruments());
    const auto records = parse_survey_csv(read_fixture("survey.csv"), inst);
    CHECK(records.size() == 15);
    const auto scores = score_subscales(records, inst);
    REQUIRE(scores.size() == 15);
    double manual = 0;
    for (const auto& item : inst.subscale("warmth").items) manual += records[0].ratings.at(item);
    CHECK(scores[0].scores.at("warmth") == doctest::Approx(manual / 6));

    std::string header = "participant,condition";
    for (const auto& i : inst.items()) header += "," + i;
    auto row = [&](const std::string& id, const std::string& cond, int value, const std::string& override_item = "",
                   const std::string& override_value = "") {
        std::string r = id + "," + cond;
        for (const auto& i : inst.items()) r += "," + (i == override_item ? override_value : std::to_string(value));
        return r;
    };
    try {
        parse_survey_csv(header + "\n" + row("P9", "C2", 3, "warmth_2", "12") + "\n", inst);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string w = e.what();
        CHECK(w.find("P9") != std::string::npos);
        CHECK(w.find("warmth_2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_survey_csv(header + "\n" + row("P9", "C2", 3, "animacy_1", "2.5") + "\n", inst), DataError);
    CHECK_THROWS_AS(parse_survey_csv(header + "\n" + row("P9", "C7", 3) + "\n", inst), DataError);
    CHECK_THROWS_AS(parse_survey_csv("participant,condition,mystery\nP1,C1,3\n", inst), DataError);

    const auto missing = parse_survey_csv(header + "\n" + row("P8", "C1", 3, "safety_2", "") + "\n", inst);
    REQUIRE(missing.size() == 1);
    CHECK_FALSE(missing[0].ratings.contains("safety_2"));
    try {
        score_subscales(missing, inst);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string w = e.what();
        CHECK(w.find("P8") != std::string::npos);
        CHECK(w.find("safety_2") != std::string::npos);
    }
}

TEST_CASE("condition comparison gates pairwise tests on the omnibus result") {
    const auto inst = load_instruments(default_instruments());
    std::vector<SubscaleScores> scores;
    int k = 0;
    for (auto c : {Condition::C1, Condition::C2, Condition::C3}) {
        for (int i = 0; i < 8; ++i) {
            SubscaleScores s;
            s.participant = "P" + std::to_string(k++);
            s.condition = c;
            const double level = static_cast<double>(c == Condition::C1 ? 0 : c == Condition::C2 ? 1 : 2);
            s.scores["likeability"] = 1.0 + level + 0.1 * i;      // clear ordering
            s.scores["animacy"] = 3.0 + 0.1 * ((i * 7 + k) % 5);  // no signal
            s.scores["discomfort"] = 8.0 - level * 2 - 0.1 * i;   // falls with condition
            scores.push_back(s);
        }
    }
    const auto rep = compare_conditions(scores, {"likeability", "animacy", "discomfort"}, inst);
    REQUIRE(rep.rows.size() == 3);
    const auto& like = rep.rows[0];
    CHECK(like.omnibus_significant);
    REQUIRE(like.pairs.size() == 3);
    for (const auto& p : like.pairs) {
        CHECK(p.alternative == Alternative::Less);
        CHECK(p.p_adjusted == doctest::Approx(std::min(1.0, p.result.p * 3)));
        CHECK(p.significant);
    }
    CHECK(like.n.at(Condition::C2) == 8);
    CHECK_FALSE(rep.rows[1].omnibus_significant);
    CHECK(rep.rows[1].pairs.empty());
    const auto& dis = rep.rows[2];
    CHECK(dis.omnibus_significant);
    for (const auto& p : dis.pairs) {
        CHECK(p.alternative == Alternative::Greater);
        CHECK(p.significant);
    }
    CHECK_FALSE(rep.to_text().empty());
    CHECK(rep.to_json()["rows"].size() == 3);
    const auto csv = rep.to_csv();
    CHECK(std::count(csv.begin(), csv.end(), '\n') >= 4);

    // declared directions override the default
    std::map<std::string, std::vector<PairDirection>> dirs;
    dirs["likeability"] = {{Condition::C1, Condition::C3, Alternative::Greater}};
    const auto flipped = compare_conditions(scores, {"likeability"}, inst, dirs);
    REQUIRE(flipped.rows[0].pairs.size() == 1);
    CHECK_FALSE(flipped.rows[0].pairs[0].significant);

    std::vector<SubscaleScores> only_two;
    for (const auto& s : scores)
        if (s.condition != Condition::C2) only_two.push_back(s);
    CHECK_THROWS_AS(compare_conditions(only_two, {"likeability"}, inst), EmptyInputError);
}
