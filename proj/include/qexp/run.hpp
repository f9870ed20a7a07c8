#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "qexp/bm25.hpp"
#include "qexp/error.hpp"

namespace qexp {

/// Per-query rankings in the order queries were added. Rank is implicit in
/// entry position.
class Run {
public:
    void add(RankedList list) {
        std::unordered_set<std::string> docs;
        for (const auto& e : list.entries) {
            if (!docs.insert(e.doc_id).second) {
                throw DataError("duplicate doc_id '" + e.doc_id + "' for query '" + list.query_id + "'");
            }
        }
        if (!positions_.emplace(list.query_id, lists_.size()).second) {
            throw DataError("duplicate query '" + list.query_id + "' in run");
        }
        lists_.push_back(std::move(list));
    }

    const std::vector<RankedList>& queries() const { return lists_; }

    const RankedList* find(const std::string& query_id) const {
        auto it = positions_.find(query_id);
        return it == positions_.end() ? nullptr : &lists_[it->second];
    }

    bool operator==(const Run& other) const { return lists_ == other.lists_; }

private:
    std::vector<RankedList> lists_;
    std::unordered_map<std::string, std::size_t> positions_;
};

/// Nine significant digits; shortest form that still round-trips sensibly.
inline std::string format_score(double score) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", score);
    return buf;
}

/// TREC run lines: `qid Q0 docid rank score tag`, rank starting at 1.
inline void write_trec_run(std::ostream& out, const RankedList& list, const std::string& tag) {
    std::size_t rank = 1;
    for (const auto& e : list.entries) {
        out << list.query_id << " Q0 " << e.doc_id << ' ' << rank++ << ' ' << format_score(e.score) << ' ' << tag
            << '\n';
    }
}

inline void write_trec_run(std::ostream& out, const Run& run, const std::string& tag) {
    for (const auto& q : run.queries()) write_trec_run(out, q, tag);
}

/// Reads a TREC run. Entries keep file order per query (file order wins over
/// scores); queries appear in order of first occurrence.
inline Run read_trec_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open run file " + path);
    std::vector<RankedList> lists;
    std::unordered_map<std::string, std::size_t> pos;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream fields(line);
        std::string qid, q0, docid, rank, score_str, tag, extra;
        if (!(fields >> qid >> q0 >> docid >> rank >> score_str >> tag) || (fields >> extra)) {
            throw DataError(path + ": malformed run line " + std::to_string(line_no));
        }
        double score = 0.0;
        try {
            std::size_t used = 0;
            score = std::stod(score_str, &used);
            if (used != score_str.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw DataError(path + ": bad score '" + score_str + "' at line " + std::to_string(line_no));
        }
        auto [it, inserted] = pos.emplace(qid, lists.size());
        if (inserted) lists.push_back({qid, {}});
        lists[it->second].entries.push_back({docid, score});
    }
    Run run;
    for (auto& l : lists) {
        try {
            run.add(std::move(l));
        } catch (const DataError& e) {
            throw DataError(path + ": " + e.what());
        }
    }
    return run;
}

}  // namespace qexp
