#include "mlret/evaluation.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "mlret/errors.hpp"

namespace mlret::evaluation {

namespace {

using nlohmann::json;

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        fields.push_back(line.substr(i, j - i));
        i = j;
    }
    return fields;
}

double gain(int grade, GainMode mode) {
    if (mode == GainMode::linear) return static_cast<double>(grade);
    return std::exp2(static_cast<double>(grade)) - 1.0;
}

double dcg(const std::vector<int>& grades, std::size_t k, GainMode mode) {
    double sum = 0.0;
    const std::size_t limit = std::min(k, grades.size());
    for (std::size_t i = 0; i < limit; ++i)
        sum += gain(grades[i], mode) / std::log2(static_cast<double>(i) + 2.0);
    return sum;
}

}  // namespace

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
    auto q = by_query.find(query_id);
    if (q == by_query.end()) return 0;
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

bool Qrels::judged(const std::string& query_id, const std::string& doc_id) const {
    auto q = by_query.find(query_id);
    return q != by_query.end() && q->second.count(doc_id) != 0;
}

std::string format_score(double score) {
    const double rounded = std::nearbyint(score);
    if (rounded == score && std::abs(score) < 1e15) {
        std::ostringstream out;
        out << static_cast<long long>(rounded);
        return out.str();
    }
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), score);
    (void)ec;
    return std::string(buf, end);
}

std::vector<RunEntry> read_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open run file: " + path);

    std::vector<RunEntry> entries;
    std::unordered_map<std::string, std::unordered_set<std::string>> seen_docs;
    std::unordered_map<std::string, int> last_rank;
    std::unordered_map<std::string, double> last_score;
    std::unordered_set<std::string> finished;  // queries whose block has ended
    std::string current_query;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto fields = split_fields(line);
        if (fields.size() != 6)
            throw parse_error(path, lineno,
                              "expected 6 fields (qid Q0 docid rank score tag), got " +
                                  std::to_string(fields.size()));
        RunEntry e;
        e.query_id = fields[0];
        if (fields[1] != "Q0")
            throw parse_error(path, lineno, "second field must be \"Q0\", got \"" + fields[1] +
                                                "\"");
        e.doc_id = fields[2];
        try {
            std::size_t used = 0;
            e.rank = std::stoi(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw parse_error(path, lineno, "rank is not an integer: \"" + fields[3] + "\"");
        }
        try {
            std::size_t used = 0;
            e.score = std::stod(fields[4], &used);
            if (used != fields[4].size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw parse_error(path, lineno, "score is not a number: \"" + fields[4] + "\"");
        }
        e.run_tag = fields[5];

        if (e.query_id != current_query) {
            if (!current_query.empty()) finished.insert(current_query);
            if (finished.count(e.query_id))
                throw parse_error(path, lineno,
                                  "entries for query \"" + e.query_id + "\" are not contiguous");
            current_query = e.query_id;
        }
        if (!seen_docs[e.query_id].insert(e.doc_id).second)
            throw parse_error(path, lineno, "duplicate doc \"" + e.doc_id + "\" for query \"" +
                                                e.query_id + "\"");
        const int expected = ++last_rank.try_emplace(e.query_id, 0).first->second;
        if (e.rank != expected)
            throw parse_error(path, lineno, "rank " + std::to_string(e.rank) +
                                                " breaks 1..n contiguity (expected " +
                                                std::to_string(expected) + ")");
        auto [score_it, first_for_query] = last_score.try_emplace(e.query_id, e.score);
        if (!first_for_query && e.score > score_it->second)
            throw parse_error(path, lineno, "score increases with rank for query \"" +
                                                e.query_id + "\"");
        score_it->second = e.score;

        entries.push_back(std::move(e));
    }
    return entries;
}

void write_run(const std::vector<RunEntry>& entries, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open run file for writing: " + path);
    for (const auto& e : entries)
        out << e.query_id << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << format_score(e.score)
            << ' ' << e.run_tag << '\n';
    if (!out) throw data_error("error writing run file: " + path);
}

Qrels read_qrels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open qrels file: " + path);

    Qrels qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto fields = split_fields(line);
        if (fields.size() != 4)
            throw parse_error(path, lineno, "expected 4 fields (qid 0 docid grade), got " +
                                                std::to_string(fields.size()));
        int grade = 0;
        try {
            std::size_t used = 0;
            grade = std::stoi(fields[3], &used);
            if (used != fields[3].size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw parse_error(path, lineno, "grade is not an integer: \"" + fields[3] + "\"");
        }
        if (grade < 0) throw parse_error(path, lineno, "negative grade");
        if (!qrels.by_query[fields[0]].emplace(fields[2], grade).second)
            throw parse_error(path, lineno, "duplicate judgment for query \"" + fields[0] +
                                                "\" doc \"" + fields[2] + "\"");
    }
    return qrels;
}

void write_qrels(const Qrels& qrels, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open qrels file for writing: " + path);

    std::vector<std::string> qids;
    qids.reserve(qrels.by_query.size());
    for (const auto& [qid, _] : qrels.by_query) qids.push_back(qid);
    std::sort(qids.begin(), qids.end());
    for (const auto& qid : qids) {
        const auto& docs = qrels.by_query.at(qid);
        std::vector<std::string> dids;
        dids.reserve(docs.size());
        for (const auto& [did, _] : docs) dids.push_back(did);
        std::sort(dids.begin(), dids.end());
        for (const auto& did : dids) out << qid << " 0 " << did << ' ' << docs.at(did) << '\n';
    }
    if (!out) throw data_error("error writing qrels file: " + path);
}

double ndcg_at_k(const std::vector<RunEntry>& query_run, const Qrels& qrels, std::size_t k,
                 GainMode gain_mode) {
    if (query_run.empty()) return 0.0;
    const std::string& qid = query_run.front().query_id;

    std::vector<int> run_grades;
    run_grades.reserve(std::min(k, query_run.size()));
    for (std::size_t i = 0; i < query_run.size() && i < k; ++i)
        run_grades.push_back(qrels.grade(qid, query_run[i].doc_id));

    std::vector<int> ideal;
    auto q = qrels.by_query.find(qid);
    if (q != qrels.by_query.end())
        for (const auto& [_, grade] : q->second)
            if (grade > 0) ideal.push_back(grade);
    std::sort(ideal.rbegin(), ideal.rend());

    const double idcg = dcg(ideal, k, gain_mode);
    if (idcg == 0.0) return 0.0;
    return dcg(run_grades, k, gain_mode) / idcg;
}

double judged_at_k(const std::vector<RunEntry>& query_run, const Qrels& qrels, std::size_t k) {
    if (query_run.empty()) return 0.0;
    const std::string& qid = query_run.front().query_id;
    const std::size_t limit = std::min(k, query_run.size());
    if (limit == 0) return 0.0;
    std::size_t judged = 0;
    for (std::size_t i = 0; i < limit; ++i)
        if (qrels.judged(qid, query_run[i].doc_id)) ++judged;
    return static_cast<double>(judged) / static_cast<double>(limit);
}

double recall_at_n(const std::vector<RunEntry>& query_run, const Qrels& qrels, std::size_t n) {
    if (query_run.empty()) return 0.0;
    const std::string& qid = query_run.front().query_id;
    auto q = qrels.by_query.find(qid);
    if (q == qrels.by_query.end()) return 0.0;

    std::size_t relevant = 0;
    for (const auto& [_, grade] : q->second)
        if (grade > 0) ++relevant;
    if (relevant == 0) return 0.0;

    std::size_t retrieved = 0;
    for (std::size_t i = 0; i < query_run.size() && i < n; ++i)
        if (qrels.grade(qid, query_run[i].doc_id) > 0) ++retrieved;
    return static_cast<double>(retrieved) / static_cast<double>(relevant);
}

MetricReport evaluate_run(const std::vector<RunEntry>& run, const Qrels& qrels, std::size_t k,
                          std::size_t n, GainMode gain_mode) {
    MetricReport report;
    report.k = k;
    report.n = n;
    report.gain_mode = gain_mode;

    // Group by query, preserving within-query order (read_run validated it).
    std::map<std::string, std::vector<RunEntry>> by_query;
    for (const auto& e : run) by_query[e.query_id].push_back(e);

    double sum_ndcg = 0.0, sum_judged = 0.0, sum_recall = 0.0;
    for (const auto& [qid, entries] : by_query) {
        bool has_positive = false;
        auto q = qrels.by_query.find(qid);
        if (q != qrels.by_query.end())
            for (const auto& [_, grade] : q->second)
                if (grade > 0) { has_positive = true; break; }
        if (!has_positive) {
            report.skipped.push_back(qid);
            continue;
        }
        QueryMetrics m;
        m.ndcg_at_k = ndcg_at_k(entries, qrels, k, gain_mode);
        m.judged_at_k = judged_at_k(entries, qrels, k);
        m.recall_at_n = recall_at_n(entries, qrels, n);
        sum_ndcg += m.ndcg_at_k;
        sum_judged += m.judged_at_k;
        sum_recall += m.recall_at_n;
        report.per_query.emplace(qid, m);
    }
    const auto count = static_cast<double>(report.per_query.size());
    if (count > 0) {
        report.mean.ndcg_at_k = sum_ndcg / count;
        report.mean.judged_at_k = sum_judged / count;
        report.mean.recall_at_n = sum_recall / count;
    }
    return report;
}

std::string report_to_json(const MetricReport& report) {
    json per_query = json::object();
    for (const auto& [qid, m] : report.per_query)
        per_query[qid] = {{"ndcg_at_k", m.ndcg_at_k},
                          {"judged_at_k", m.judged_at_k},
                          {"recall_at_n", m.recall_at_n}};
    const json doc = {
        {"k", report.k},
        {"n", report.n},
        {"gain_mode", report.gain_mode == GainMode::exponential ? "exponential" : "linear"},
        {"evaluated_queries", report.per_query.size()},
        {"skipped_queries", report.skipped},
        {"mean",
         {{"ndcg_at_k", report.mean.ndcg_at_k},
          {"judged_at_k", report.mean.judged_at_k},
          {"recall_at_n", report.mean.recall_at_n}}},
        {"per_query", per_query},
    };
    return doc.dump(2) + "\n";
}

namespace {

std::string fixed4(double v) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << v;
    return out.str();
}

}  // namespace

std::string report_to_table(const MetricReport& report, bool per_query) {
    const std::string k = std::to_string(report.k);
    const std::string n = std::to_string(report.n);
    std::vector<std::array<std::string, 4>> rows;
    rows.push_back({"query", "nDCG@" + k, "Judged@" + k, "R@" + n});
    if (per_query)
        for (const auto& [qid, m] : report.per_query)
            rows.push_back(
                {qid, fixed4(m.ndcg_at_k), fixed4(m.judged_at_k), fixed4(m.recall_at_n)});
    rows.push_back({"mean", fixed4(report.mean.ndcg_at_k), fixed4(report.mean.judged_at_k),
                    fixed4(report.mean.recall_at_n)});

    std::array<std::size_t, 4> width{};
    for (const auto& row : rows)
        for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());

    std::ostringstream out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < 4; ++c) {
            if (c) out << "  ";
            out << rows[r][c];
            if (c + 1 < 4) out << std::string(width[c] - rows[r][c].size(), ' ');
        }
        out << '\n';
        if (r == 0 || (per_query && r + 2 == rows.size())) {
            for (std::size_t c = 0; c < 4; ++c) {
                if (c) out << "  ";
                out << std::string(width[c], '-');
            }
            out << '\n';
        }
    }
    if (!report.skipped.empty()) {
        out << "skipped (no positive judgments):";
        for (const auto& qid : report.skipped) out << ' ' << qid;
        out << '\n';
    }
    return out.str();
}

}  // namespace mlret::evaluation
