#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <set>
#include <string>
#include <vector>

#include "cgqa/condition_graph.hpp"
#include "cgqa/errors.hpp"
#include "cgqa/text.hpp"

namespace cgqa {

// --- sources --------------------------------------------------------------

struct TableSource {
    std::vector<std::string> header;           // row 1
    std::vector<std::vector<std::string>> records; // rows 2..m
    size_t row_count() const { return records.size() + 1; } // m, header included
    size_t column_count() const { return header.size(); }   // n, before insertion
};

struct KgFact {
    std::string head, relation, tail;
    bool operator<(const KgFact& o) const {
        return std::tie(head, relation, tail) < std::tie(o.head, o.relation, o.tail);
    }
};

struct KgSource {
    std::vector<KgFact> facts;
};

struct TkgQuintuple {
    std::string head, relation, tail;
    long long tau_start = 0;
    long long tau_end = 0;
};

struct TkgSource {
    std::vector<TkgQuintuple> quintuples;
    std::string granularity = "year"; // integer timeline; years by default
};

// --- translators ------------------------------------------------------------

// Duplicate header names get #2, #3... suffixes: node identity is textual.
inline std::vector<std::string> dedup_headers(const std::vector<std::string>& header) {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& raw : header) {
        std::string name = trim(raw);
        if (name.empty()) name = "column";
        std::string candidate = name;
        int suffix = 2;
        while (!seen.insert(candidate).second)
            candidate = name + "#" + std::to_string(suffix++);
        out.push_back(candidate);
    }
    return out;
}

// Emits, per record row i (counting the header as row 1) and original
// column j: (line_i, header_j, []) and (header_j, v_ij, [line_i]).
// Exactly 2*(m-1)*n triples for a fresh table. When line_prefix is given,
// markers read "prefix:line_i" so pooled graphs keep tables apart.
inline void translate_table(const TableSource& source, ConditionGraph& graph,
                            const std::string& line_prefix = "") {
    const size_t n = source.column_count();
    auto headers = dedup_headers(source.header);
    for (size_t r = 0; r < source.records.size(); ++r) {
        if (source.records[r].size() != n)
            throw_error(Errc::ragged_table,
                        "record " + std::to_string(r + 2) + " has " +
                            std::to_string(source.records[r].size()) + " cells, expected " +
                            std::to_string(n));
        LineMarker marker{line_prefix, static_cast<long>(r + 2)};
        const std::string line = render_line_marker(marker);
        for (size_t j = 0; j < n; ++j) {
            graph.insert_triple(line, headers[j], {});
            graph.insert_triple(headers[j], source.records[r][j], {line});
        }
    }
}

// Per fact (h, r, t): (h, r, []) and (r, t, [h]).
inline void translate_kg(const KgSource& source, ConditionGraph& graph) {
    for (const auto& f : source.facts) {
        graph.insert_triple(f.head, f.relation, {});
        graph.insert_triple(f.relation, f.tail, {f.head});
    }
}

inline constexpr long long kMaxTimeExpansions = 1'000'000;

// Per quintuple (h, r, t, ts, te): the KG pair plus start/end markers and
// one "time" triple per integer step of the interval, all conditioned on
// [h, r, t].
inline void translate_tkg(const TkgSource& source, ConditionGraph& graph) {
    long long expansions = 0;
    for (const auto& q : source.quintuples) {
        if (q.tau_start > q.tau_end)
            throw_error(Errc::invalid_interval,
                        "start " + std::to_string(q.tau_start) + " after end " +
                            std::to_string(q.tau_end));
        expansions += q.tau_end - q.tau_start + 1;
        if (expansions >= kMaxTimeExpansions)
            throw_error(Errc::interval_too_large,
                        "time expansion exceeds " + std::to_string(kMaxTimeExpansions));
        Condition fact{q.head, q.relation, q.tail};
        graph.insert_triple(q.head, q.relation, {});
        graph.insert_triple(q.relation, q.tail, {q.head});
        graph.insert_triple("start time", std::to_string(q.tau_start), fact);
        graph.insert_triple("end time", std::to_string(q.tau_end), fact);
        for (long long t = q.tau_start; t <= q.tau_end; ++t)
            graph.insert_triple("time", std::to_string(t), fact);
    }
}

// --- loaders ----------------------------------------------------------------

// RFC-style CSV: quoted fields may hold commas, newlines and doubled quotes.
inline TableSource load_csv(std::istream& is) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false, field_started = false;
    size_t line_no = 1;
    auto end_field = [&] {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
    };
    char c;
    while (is.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (is.peek() == '"') {
                    field += '"';
                    is.get();
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_no;
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            ++line_no;
            end_row();
        } else if (c == '\r') {
            // swallow; \r\n handled by the \n branch
        } else {
            field += c;
            field_started = true;
        }
    }
    if (in_quotes)
        throw_error(Errc::parse_error, "line " + std::to_string(line_no) + ": unterminated quote");
    if (!field.empty() || !row.empty()) end_row();

    TableSource src;
    if (rows.empty()) return src;
    src.header = rows.front();
    src.records.assign(rows.begin() + 1, rows.end());
    return src;
}

inline TableSource load_csv_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw_error(Errc::io_error, "cannot open '" + path + "'");
    return load_csv(is);
}

// TAB-separated facts, one per line: head <TAB> relation <TAB> tail.
inline KgSource load_triples(std::istream& is) {
    KgSource src;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto parts = split(line, '\t');
        if (parts.size() != 3)
            throw_error(Errc::parse_error,
                        "line " + std::to_string(line_no) + ": expected 3 fields");
        if (trim(parts[0]).empty() || trim(parts[1]).empty() || trim(parts[2]).empty())
            throw_error(Errc::parse_error,
                        "line " + std::to_string(line_no) + ": empty fact component");
        src.facts.push_back({parts[0], parts[1], parts[2]});
    }
    return src;
}

inline KgSource load_triples_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw_error(Errc::io_error, "cannot open '" + path + "'");
    return load_triples(is);
}

// TAB-separated quintuples: head <TAB> relation <TAB> tail <TAB> start <TAB> end.
// Inverted intervals surface at translate time, not here.
inline TkgSource load_quintuples(std::istream& is) {
    TkgSource src;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto parts = split(line, '\t');
        if (parts.size() != 5)
            throw_error(Errc::parse_error,
                        "line " + std::to_string(line_no) + ": expected 5 fields");
        TkgQuintuple q;
        q.head = parts[0];
        q.relation = parts[1];
        q.tail = parts[2];
        try {
            q.tau_start = std::stoll(trim(parts[3]));
            q.tau_end = std::stoll(trim(parts[4]));
        } catch (const std::exception&) {
            throw_error(Errc::parse_error,
                        "line " + std::to_string(line_no) + ": non-integer time stamp");
        }
        src.quintuples.push_back(std::move(q));
    }
    return src;
}

inline TkgSource load_quintuples_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw_error(Errc::io_error, "cannot open '" + path + "'");
    return load_quintuples(is);
}

} // namespace cgqa
