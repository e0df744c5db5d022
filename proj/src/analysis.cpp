#include "clcoach/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

#include "clcoach/error.hpp"
#include "clcoach/persistence.hpp"

namespace clcoach {

using nlohmann::json;

std::string_view to_string(Alternative a) noexcept {
    switch (a) {
        case Alternative::TwoSided: return "two_sided";
        case Alternative::Less: return "less";
        case Alternative::Greater: return "greater";
    }
    return "?";
}

Alternative alternative_from_string(std::string_view s) {
    if (s == "two_sided" || s == "two-sided") return Alternative::TwoSided;
    if (s == "less") return Alternative::Less;
    if (s == "greater") return Alternative::Greater;
    throw ParameterError("unknown alternative '" + std::string(s) + "'");
}

std::string_view to_string(TestMethod m) noexcept {
    switch (m) {
        case TestMethod::Exact: return "exact";
        case TestMethod::NormalApprox: return "normal_approx";
        case TestMethod::ChiSquared: return "chi_squared";
    }
    return "?";
}

namespace {

void check_sample(std::span<const double> s, const char* what) {
    if (s.empty()) throw EmptyInputError(std::string(what) + " is empty");
    for (const double v : s) {
        if (!std::isfinite(v)) throw ParameterError(std::string(what) + " contains a non-finite value");
    }
}

// Sum of t^3 - t over tie groups.
double tie_term(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double t_sum = 0.0;
    for (std::size_t i = 0; i < values.size();) {
        std::size_t j = i;
        while (j < values.size() && values[j] == values[i]) ++j;
        const double t = static_cast<double>(j - i);
        t_sum += t * t * t - t;
        i = j;
    }
    return t_sum;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

std::vector<double> midranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

std::vector<double> mann_whitney_counts(std::size_t n, std::size_t m) {
    // f[i][j] = distribution of U for sizes (i, j); f(i,j)[u] = f(i-1,j)[u-j] + f(i,j-1)[u].
    std::vector<std::vector<std::vector<double>>> f(n + 1, std::vector<std::vector<double>>(m + 1));
    for (std::size_t i = 0; i <= n; ++i) {
        for (std::size_t j = 0; j <= m; ++j) {
            auto& d = f[i][j];
            d.assign(i * j + 1, 0.0);
            if (i == 0 || j == 0) {
                d[0] = 1.0;
                continue;
            }
            const auto& a = f[i - 1][j];
            for (std::size_t u = 0; u < a.size(); ++u) d[u + j] += a[u];
            const auto& b = f[i][j - 1];
            for (std::size_t u = 0; u < b.size(); ++u) d[u] += b[u];
        }
    }
    return f[n][m];
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, Alternative alternative) {
    check_sample(x, "first sample");
    check_sample(y, "second sample");
    const std::size_t n = x.size();
    const std::size_t m = y.size();
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto ranks = midranks(pooled);
    const double rx = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
    const double nd = static_cast<double>(n);
    const double md = static_cast<double>(m);
    const double u = rx - nd * (nd + 1.0) / 2.0;
    const double ties = tie_term(pooled);

    TestResult r;
    r.statistic = u;
    r.alternative = alternative;
    if (n <= kExactLimit && m <= kExactLimit && ties == 0.0) {
        r.method = TestMethod::Exact;
        const auto counts = mann_whitney_counts(n, m);
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        const auto ui = static_cast<std::size_t>(std::llround(u));
        double le = 0.0;
        double ge = 0.0;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (k <= ui) le += counts[k];
            if (k >= ui) ge += counts[k];
        }
        le /= total;
        ge /= total;
        switch (alternative) {
            case Alternative::Less: r.p = le; break;
            case Alternative::Greater: r.p = ge; break;
            case Alternative::TwoSided: r.p = std::min(1.0, 2.0 * std::min(le, ge)); break;
        }
        return r;
    }

    r.method = TestMethod::NormalApprox;
    const double big_n = nd + md;
    const double mu = nd * md / 2.0;
    const double var = nd * md / 12.0 * ((big_n + 1.0) - ties / (big_n * (big_n - 1.0)));
    if (!(var > 0.0)) {
        r.p = 1.0;
        return r;
    }
    const double sd = std::sqrt(var);
    switch (alternative) {
        case Alternative::Less: r.p = normal_cdf((u - mu + 0.5) / sd); break;
        case Alternative::Greater: r.p = 1.0 - normal_cdf((u - mu - 0.5) / sd); break;
        case Alternative::TwoSided: {
            const double z = std::max(0.0, std::abs(u - mu) - 0.5) / sd;
            r.p = std::min(1.0, 2.0 * (1.0 - normal_cdf(z)));
            break;
        }
    }
    r.p = std::clamp(r.p, 0.0, 1.0);
    return r;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ParameterError("Kruskal-Wallis needs at least two groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        check_sample(g, "group");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const auto ranks = midranks(pooled);
    const double big_n = static_cast<double>(pooled.size());
    double sum = 0.0;
    std::size_t at = 0;
    for (const auto& g : groups) {
        double r = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) r += ranks[at + i];
        at += g.size();
        sum += r * r / static_cast<double>(g.size());
    }
    double h = 12.0 / (big_n * (big_n + 1.0)) * sum - 3.0 * (big_n + 1.0);
    const double correction = 1.0 - tie_term(pooled) / (big_n * big_n * big_n - big_n);

    TestResult r;
    r.method = TestMethod::ChiSquared;
    if (!(correction > 0.0)) {
        r.statistic = 0.0;
        r.p = 1.0;
        return r;
    }
    h = std::max(0.0, h / correction);
    r.statistic = h;
    const double df = static_cast<double>(groups.size() - 1);
    r.p = h > 0.0 ? boost::math::gamma_q(df / 2.0, h / 2.0) : 1.0;
    return r;
}

std::vector<double> bonferroni(std::span<const double> p_values, std::size_t m) {
    if (m < std::max<std::size_t>(1, p_values.size())) {
        throw ParameterError("Bonferroni m must be at least max(1, number of p-values)");
    }
    std::vector<double> out;
    out.reserve(p_values.size());
    for (const double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("p-values must lie in [0,1]");
        out.push_back(std::min(1.0, p * static_cast<double>(m)));
    }
    return out;
}

// ---- questionnaires ----

std::vector<std::string> InstrumentSet::items() const {
    std::vector<std::string> out;
    for (const auto& inst : instruments) {
        for (const auto& s : inst.subscales) out.insert(out.end(), s.items.begin(), s.items.end());
    }
    return out;
}

const Instrument& InstrumentSet::instrument_of_item(std::string_view item) const {
    for (const auto& inst : instruments) {
        for (const auto& s : inst.subscales) {
            if (std::find(s.items.begin(), s.items.end(), item) != s.items.end()) return inst;
        }
    }
    throw DataError("unknown survey item '" + std::string(item) + "'");
}

const Subscale& InstrumentSet::subscale(std::string_view name) const {
    for (const auto& inst : instruments) {
        for (const auto& s : inst.subscales) {
            if (s.name == name) return s;
        }
    }
    throw DataError("unknown dimension '" + std::string(name) + "'");
}

std::vector<std::string> InstrumentSet::subscale_names() const {
    std::vector<std::string> out;
    for (const auto& inst : instruments) {
        for (const auto& s : inst.subscales) out.push_back(s.name);
    }
    return out;
}

InstrumentSet InstrumentSet::from_json(const json& j) {
    InstrumentSet set;
    try {
        if (j.at("format") != "clcoach-instruments") throw DataError("not an instrument file");
        if (j.at("version") != 1) throw VersionError("unsupported instrument file version " + j.at("version").dump());
        for (const auto& ji : j.at("instruments")) {
            Instrument inst;
            inst.name = ji.at("name").get<std::string>();
            inst.min = ji.at("min").get<int>();
            inst.max = ji.at("max").get<int>();
            if (inst.min >= inst.max) throw DataError("instrument " + inst.name + " has an empty scale");
            for (const auto& js : ji.at("subscales")) {
                Subscale s;
                s.name = js.at("name").get<std::string>();
                s.items = js.at("items").get<std::vector<std::string>>();
                s.higher_is_better = js.value("higher_is_better", true);
                if (s.items.empty()) throw DataError("subscale " + s.name + " has no items");
                inst.subscales.push_back(std::move(s));
            }
            set.instruments.push_back(std::move(inst));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid instrument file: ") + e.what());
    }
    auto items = set.items();
    std::sort(items.begin(), items.end());
    if (std::adjacent_find(items.begin(), items.end()) != items.end()) throw DataError("duplicate survey item id");
    return set;
}

InstrumentSet load_instruments(const std::filesystem::path& path) {
    try {
        return InstrumentSet::from_json(json::parse(read_file(path)));
    } catch (const json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::filesystem::path default_instruments() { return std::filesystem::path(CLCOACH_DATA_DIR) / "instruments.json"; }

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

std::vector<SurveyRecord> parse_survey_csv(std::string_view text, const InstrumentSet& instruments) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw DataError("survey file is empty");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "participant" || header[1] != "condition") {
        throw DataError("survey header must start with participant,condition");
    }
    for (std::size_t c = 2; c < header.size(); ++c) instruments.instrument_of_item(header[c]);

    std::vector<SurveyRecord> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError("survey line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(cells.size()));
        }
        SurveyRecord rec;
        rec.participant = cells[0];
        try {
            rec.condition = condition_from_string(cells[1]);
        } catch (const Error& e) {
            throw DataError("survey line " + std::to_string(line_no) + ": " + e.what());
        }
        for (std::size_t c = 2; c < cells.size(); ++c) {
            if (cells[c].empty()) continue;
            const auto& inst = instruments.instrument_of_item(header[c]);
            int v = 0;
            std::size_t used = 0;
            try {
                v = std::stoi(cells[c], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cells[c].size()) {
                throw DataError("participant " + rec.participant + ", item " + header[c] + ": '" + cells[c] +
                                "' is not an integer rating");
            }
            if (v < inst.min || v > inst.max) {
                throw DataError("participant " + rec.participant + ", item " + header[c] + ": rating " +
                                std::to_string(v) + " outside " + std::to_string(inst.min) + ".." +
                                std::to_string(inst.max));
            }
            rec.ratings[header[c]] = v;
        }
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<SubscaleScores> score_subscales(const std::vector<SurveyRecord>& records,
                                            const InstrumentSet& instruments) {
    std::vector<SubscaleScores> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        SubscaleScores s{rec.participant, rec.condition, {}};
        for (const auto& inst : instruments.instruments) {
            for (const auto& sub : inst.subscales) {
                double sum = 0.0;
                for (const auto& item : sub.items) {
                    const auto it = rec.ratings.find(item);
                    if (it == rec.ratings.end()) {
                        throw DataError("participant " + rec.participant + " is missing item " + item);
                    }
                    if (it->second < inst.min || it->second > inst.max) {
                        throw DataError("participant " + rec.participant + ", item " + item + ": rating out of range");
                    }
                    sum += it->second;
                }
                s.scores[sub.name] = sum / static_cast<double>(sub.items.size());
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<PairDirection> default_directions(bool higher_is_better) {
    const auto alt = higher_is_better ? Alternative::Less : Alternative::Greater;
    return {{Condition::C1, Condition::C2, alt}, {Condition::C2, Condition::C3, alt}, {Condition::C1, Condition::C3, alt}};
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

constexpr Condition kConditions[] = {Condition::C1, Condition::C2, Condition::C3};

}  // namespace

ComparisonReport compare_conditions(const std::vector<SubscaleScores>& scores, const std::vector<std::string>& dimensions,
                                    const InstrumentSet& instruments,
                                    const std::map<std::string, std::vector<PairDirection>>& directions, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0,1)");
    ComparisonReport report;
    report.alpha = alpha;
    for (const auto& dim : dimensions) {
        const auto& sub = instruments.subscale(dim);
        std::map<Condition, std::vector<double>> groups;
        for (const auto& s : scores) {
            const auto it = s.scores.find(dim);
            if (it == s.scores.end()) throw DataError("participant " + s.participant + " has no score for " + dim);
            groups[s.condition].push_back(it->second);
        }
        DimensionReport row;
        row.dimension = dim;
        std::vector<std::vector<double>> ordered;
        for (const auto c : kConditions) {
            const auto& g = groups[c];
            if (g.empty()) {
                throw EmptyInputError("no " + std::string(to_string(c)) + " participants for " + dim);
            }
            row.n[c] = g.size();
            row.median[c] = median_of(g);
            ordered.push_back(g);
        }
        row.kruskal = kruskal_wallis(ordered);
        row.omnibus_significant = row.kruskal.p < alpha;
        if (row.omnibus_significant) {
            const auto found = directions.find(dim);
            const auto pairs = found != directions.end() && !found->second.empty()
                                   ? found->second
                                   : default_directions(sub.higher_is_better);
            std::vector<double> raw;
            for (const auto& d : pairs) {
                PairTest t;
                t.first = d.first;
                t.second = d.second;
                t.alternative = d.alternative;
                t.result = mann_whitney_u(groups[d.first], groups[d.second], d.alternative);
                raw.push_back(t.result.p);
                row.pairs.push_back(t);
            }
            const auto adjusted = bonferroni(raw, std::max<std::size_t>(3, raw.size()));
            for (std::size_t i = 0; i < row.pairs.size(); ++i) {
                row.pairs[i].p_adjusted = adjusted[i];
                row.pairs[i].significant = adjusted[i] < alpha;
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string ComparisonReport::to_text() const {
    std::ostringstream out;
    out << std::fixed;
    out << std::left << std::setw(24) << "dimension" << std::right << std::setw(8) << "H" << std::setw(9) << "p"
        << "   pairwise (one-tailed U, Bonferroni-adjusted p)\n";
    for (const auto& r : rows) {
        out << std::left << std::setw(24) << r.dimension << std::right << std::setprecision(3) << std::setw(8)
            << r.kruskal.statistic << std::setw(9) << r.kruskal.p << "   ";
        if (!r.omnibus_significant) {
            out << "n.s. (no post-hoc)";
        } else {
            for (std::size_t i = 0; i < r.pairs.size(); ++i) {
                const auto& p = r.pairs[i];
                if (i > 0) out << "; ";
                out << to_string(p.first) << (p.alternative == Alternative::Less ? "<" : p.alternative == Alternative::Greater ? ">" : "~")
                    << to_string(p.second) << " U=" << std::setprecision(1) << p.result.statistic
                    << " p=" << std::setprecision(3) << p.p_adjusted << (p.significant ? "*" : "");
            }
        }
        out << "\n";
    }
    return out.str();
}

std::string ComparisonReport::to_csv() const {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "dimension,test,first,second,alternative,method,statistic,p,p_adjusted,significant\n";
    for (const auto& r : rows) {
        out << r.dimension << ",kruskal_wallis,,,," << to_string(r.kruskal.method) << "," << r.kruskal.statistic << ","
            << r.kruskal.p << "," << r.kruskal.p << "," << (r.omnibus_significant ? 1 : 0) << "\n";
        for (const auto& p : r.pairs) {
            out << r.dimension << ",mann_whitney_u," << to_string(p.first) << "," << to_string(p.second) << ","
                << to_string(p.alternative) << "," << to_string(p.result.method) << "," << p.result.statistic << ","
                << p.result.p << "," << p.p_adjusted << "," << (p.significant ? 1 : 0) << "\n";
        }
    }
    return out.str();
}

json ComparisonReport::to_json() const {
    json rows_j = json::array();
    for (const auto& r : rows) {
        json n = json::object();
        json med = json::object();
        for (const auto& [c, v] : r.n) n[std::string(to_string(c))] = v;
        for (const auto& [c, v] : r.median) med[std::string(to_string(c))] = v;
        json pairs = json::array();
        for (const auto& p : r.pairs) {
            pairs.push_back({{"first", std::string(to_string(p.first))},
                             {"second", std::string(to_string(p.second))},
                             {"alternative", std::string(to_string(p.alternative))},
                             {"method", std::string(to_string(p.result.method))},
                             {"U", p.result.statistic},
                             {"p", p.result.p},
                             {"p_adjusted", p.p_adjusted},
                             {"significant", p.significant}});
        }
        rows_j.push_back({{"dimension", r.dimension},
                          {"n", n},
                          {"median", med},
                          {"H", r.kruskal.statistic},
                          {"p", r.kruskal.p},
                          {"omnibus_significant", r.omnibus_significant},
                          {"pairs", pairs}});
    }
    return {{"alpha", alpha}, {"rows", rows_j}};
}

}  // namespace clcoach
