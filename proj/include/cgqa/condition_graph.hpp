#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "cgqa/errors.hpp"
#include "cgqa/result_set.hpp"
#include "cgqa/text.hpp"
#include "cgqa/values.hpp"

namespace cgqa {

using Condition = std::vector<std::string>;

// One edge: node1 connects to node2 under an ordered (possibly empty)
// condition list.
struct ConditionTriple {
    std::string node1;
    std::string node2;
    Condition condition;

    bool operator==(const ConditionTriple& o) const = default;
    bool operator<(const ConditionTriple& o) const {
        return std::tie(node1, node2, condition) < std::tie(o.node1, o.node2, o.condition);
    }
};

// In-memory condition graph. Built once through insert_triple, then frozen;
// a frozen graph is immutable and safe to share across readers. The three
// indices answer the search primitives without rescanning the triple set:
//
//   node1            -> triple slice, sorted by condition  (search_condition,
//                       prefix-range condition matches)
//   (node1, cond)    -> triples with exactly that condition (search_node)
//   (node1, node2)   -> triples with that edge              (scoped matches)
//
// Condition matching for an explicit search_node condition accepts stored
// lists where one side is a (non-empty) prefix of the other, so a query
// condition [h] reaches facts stored under [h, r, t] and a constructed
// [h, r, t] reaches attributes stored under [h]. An explicitly empty
// condition matches only empty-condition triples.
//
// Scope tuples additionally match through fact provenance: a tuple produced
// by search_condition remembers its (node1, node2), and a stored condition c
// matches a scope tuple t when c == t, c == t ++ t.fact, or
// t == c ++ (node1, node2) of the candidate triple. That is what lets the
// output of one search step pick the exact same fact back out of the graph
// even when the stored condition is the richer [h, r, t] form.
class ConditionGraph {
public:
    ConditionGraph() = default;

    // --- building phase -------------------------------------------------

    void insert_triple(const std::string& node1, const std::string& node2,
                       const Condition& condition = {}) {
        insert_triple(ConditionTriple{node1, node2, condition});
    }

    void insert_triple(ConditionTriple triple) {
        if (frozen_)
            throw_error(Errc::frozen_graph, "insert into a frozen graph");
        triple.node1 = checked_label(triple.node1);
        triple.node2 = checked_label(triple.node2);
        for (auto& c : triple.condition) c = checked_label(c);
        if (!triple_keys_.insert(triple).second) return; // idempotent
        nodes_.insert(triple.node1);
        nodes_.insert(triple.node2);
        for (const auto& c : triple.condition) nodes_.insert(c);
        triples_.push_back(std::move(triple));
    }

    void freeze() {
        if (frozen_) return;
        std::sort(triples_.begin(), triples_.end());
        build_indices();
        frozen_ = true;
    }

    bool frozen() const { return frozen_; }

    // --- enumeration ----------------------------------------------------

    const std::set<std::string>& all_nodes() const { return nodes_; }
    const std::vector<ConditionTriple>& triples() const { return triples_; }
    size_t triple_count() const { return triples_.size(); }
    bool contains_node(const std::string& label) const {
        return nodes_.count(trim(label)) > 0;
    }

    bool operator==(const ConditionGraph& o) const {
        return nodes_ == o.nodes_ && triple_keys_ == o.triple_keys_;
    }

    // --- search primitives (frozen graph only) ---------------------------

    ResultSet search_node(const std::string& node1,
                          const std::optional<Condition>& condition = std::nullopt,
                          const ResultSet* scope = nullptr) const {
        require_frozen();
        const std::string key = trim(node1);
        if (!nodes_.count(key))
            throw_error(Errc::unknown_node, "'" + key + "' is not a node of the graph");
        auto slice = idx_n1_.find(key);
        ResultSet out;
        if (slice == idx_n1_.end()) return out;

        std::vector<uint32_t> ids;
        if (scope) {
            ids = scope_matches(key, *scope);
            if (condition) {
                std::vector<uint32_t> kept;
                for (auto id : ids)
                    if (condition_matches(triples_[id].condition, *condition))
                        kept.push_back(id);
                ids = std::move(kept);
            }
        } else if (condition) {
            ids = condition_matches_ids(key, *condition);
        } else {
            ids = slice->second;
        }
        for (auto id : ids) out.insert(ResultTuple(triples_[id].node2));
        return out;
    }

    // Triples with the given subject, ordered by (condition, node2). Used by
    // the executor to materialize data for LLM-function prompts.
    std::vector<const ConditionTriple*> subject_triples(const std::string& node1) const {
        require_frozen();
        std::vector<const ConditionTriple*> out;
        auto slice = idx_n1_.find(trim(node1));
        if (slice == idx_n1_.end()) return out;
        out.reserve(slice->second.size());
        for (auto id : slice->second) out.push_back(&triples_[id]);
        return out;
    }

    ResultSet search_condition(const std::string& node1, const std::string& node2_value,
                               ComparisonOp op) const {
        require_frozen();
        const std::string key = trim(node1);
        if (!nodes_.count(key))
            throw_error(Errc::unknown_node, "'" + key + "' is not a node of the graph");
        ResultSet out;
        auto slice = idx_n1_.find(key);
        if (slice == idx_n1_.end()) return out;
        for (auto id : slice->second) {
            const auto& t = triples_[id];
            if (t.condition.empty()) continue; // nothing to return
            if (compare_values(op, t.node2, node2_value)) {
                ResultTuple tuple(t.condition);
                tuple.fact = std::make_pair(t.node1, t.node2);
                out.insert(std::move(tuple));
            }
        }
        return out;
    }

private:
    static std::string checked_label(const std::string& raw) {
        std::string t = trim(raw);
        if (t.empty())
            throw_error(Errc::invalid_label, "node label empty after trimming");
        return t;
    }

    void require_frozen() const {
        if (!frozen_)
            throw_error(Errc::graph_not_frozen, "freeze the graph before searching");
    }

    static std::string index_key(const std::string& node1, const Condition& cond) {
        // length-prefixed join: collision-free for any label content
        std::string k = std::to_string(node1.size()) + ':' + node1;
        for (const auto& c : cond) k += std::to_string(c.size()) + ':' + c;
        return k;
    }

    static std::string edge_key(const std::string& node1, const std::string& node2) {
        return std::to_string(node1.size()) + ':' + node1 + node2;
    }

    void build_indices() {
        idx_n1_.clear();
        idx_n1_cond_.clear();
        idx_n1_n2_.clear();
        for (uint32_t i = 0; i < triples_.size(); ++i) {
            const auto& t = triples_[i];
            idx_n1_[t.node1].push_back(i);
            idx_n1_cond_[index_key(t.node1, t.condition)].push_back(i);
            idx_n1_n2_[edge_key(t.node1, t.node2)].push_back(i);
        }
        // order each node1 slice by condition so prefix ranges are contiguous
        for (auto& [n1, ids] : idx_n1_) {
            std::sort(ids.begin(), ids.end(), [&](uint32_t a, uint32_t b) {
                return std::tie(triples_[a].condition, triples_[a].node2) <
                       std::tie(triples_[b].condition, triples_[b].node2);
            });
        }
    }

    static bool is_prefix(const Condition& prefix, const Condition& full) {
        if (prefix.size() > full.size()) return false;
        return std::equal(prefix.begin(), prefix.end(), full.begin());
    }

    // mutual-prefix rule for an explicit condition argument
    static bool condition_matches(const Condition& stored, const Condition& given) {
        if (given.empty()) return stored.empty();
        if (stored.empty()) return false;
        return is_prefix(stored, given) || is_prefix(given, stored);
    }

    std::vector<uint32_t> condition_matches_ids(const std::string& node1,
                                                const Condition& given) const {
        std::vector<uint32_t> ids;
        auto add_exact = [&](const Condition& c) {
            auto it = idx_n1_cond_.find(index_key(node1, c));
            if (it != idx_n1_cond_.end())
                ids.insert(ids.end(), it->second.begin(), it->second.end());
        };
        if (given.empty()) {
            add_exact(given);
            return dedup(ids);
        }
        // stored == given, and every shorter non-empty prefix of given
        Condition prefix;
        for (const auto& part : given) {
            prefix.push_back(part);
            add_exact(prefix);
        }
        // stored strictly longer, with given as prefix: contiguous range in
        // the condition-sorted node1 slice
        auto slice = idx_n1_.find(node1);
        if (slice != idx_n1_.end()) {
            const auto& v = slice->second;
            auto lo = std::lower_bound(v.begin(), v.end(), given,
                                       [&](uint32_t id, const Condition& g) {
                                           return triples_[id].condition < g;
                                       });
            for (auto it = lo; it != v.end(); ++it) {
                const auto& stored = triples_[*it].condition;
                if (!is_prefix(given, stored)) break;
                if (stored.size() > given.size()) ids.push_back(*it);
            }
        }
        return dedup(ids);
    }

    std::vector<uint32_t> scope_matches(const std::string& node1,
                                        const ResultSet& scope) const {
        std::vector<uint32_t> ids;
        auto add_exact = [&](const Condition& c) {
            auto it = idx_n1_cond_.find(index_key(node1, c));
            if (it != idx_n1_cond_.end())
                ids.insert(ids.end(), it->second.begin(), it->second.end());
        };
        for (const auto& t : scope) {
            // (a) stored condition equals the tuple itself
            add_exact(t.values);
            // (b) stored condition equals tuple ++ its fact identity
            if (t.fact) {
                Condition full = t.values;
                full.push_back(t.fact->first);
                full.push_back(t.fact->second);
                add_exact(full);
            }
            // (c) tuple spells out condition ++ (node1, node2) of the
            //     candidate triple, i.e. it names the full fact
            if (t.values.size() >= 3 && t.values[t.values.size() - 2] == node1) {
                Condition head(t.values.begin(), t.values.end() - 2);
                auto it = idx_n1_cond_.find(index_key(node1, head));
                if (it != idx_n1_cond_.end()) {
                    for (auto id : it->second)
                        if (triples_[id].node2 == t.values.back()) ids.push_back(id);
                }
            }
        }
        return dedup(ids);
    }

    static std::vector<uint32_t> dedup(std::vector<uint32_t> ids) {
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return ids;
    }

    bool frozen_ = false;
    std::vector<ConditionTriple> triples_;
    std::set<ConditionTriple> triple_keys_;
    std::set<std::string> nodes_;
    std::unordered_map<std::string, std::vector<uint32_t>> idx_n1_;
    std::unordered_map<std::string, std::vector<uint32_t>> idx_n1_cond_;
    std::unordered_map<std::string, std::vector<uint32_t>> idx_n1_n2_;
};

// --- flat-file serialization --------------------------------------------
// One triple per line: node1 <TAB> node2 <TAB> cond_a|cond_b|...
// Empty condition list encodes as an empty third field. Backslash, tab,
// pipe and newline inside labels escape as \\ \t \| \n.

namespace cg_format {

inline std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\t': out += "\\t"; break;
            case '|': out += "\\|"; break;
            case '\n': out += "\\n"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string unescape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            char n = s[++i];
            switch (n) {
                case 't': out += '\t'; break;
                case 'n': out += '\n'; break;
                default: out += n;
            }
        } else {
            out += s[i];
        }
    }
    return out;
}

// split on a separator, honoring backslash escapes
inline std::vector<std::string> split_escaped(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            cur += s[i];
            cur += s[++i];
        } else if (s[i] == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += s[i];
        }
    }
    parts.push_back(cur);
    return parts;
}

} // namespace cg_format

inline void save_cg(const ConditionGraph& graph, std::ostream& os) {
    std::vector<ConditionTriple> sorted(graph.triples());
    std::sort(sorted.begin(), sorted.end());
    for (const auto& t : sorted) {
        os << cg_format::escape(t.node1) << '\t' << cg_format::escape(t.node2) << '\t';
        for (size_t i = 0; i < t.condition.size(); ++i) {
            if (i) os << '|';
            os << cg_format::escape(t.condition[i]);
        }
        os << '\n';
    }
}

inline ConditionGraph load_cg(std::istream& is) {
    ConditionGraph g;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto fields = cg_format::split_escaped(line, '\t');
        if (fields.size() != 3)
            throw_error(Errc::parse_error,
                        "line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
        Condition cond;
        if (!fields[2].empty())
            for (const auto& part : cg_format::split_escaped(fields[2], '|'))
                cond.push_back(cg_format::unescape(part));
        g.insert_triple(cg_format::unescape(fields[0]), cg_format::unescape(fields[1]), cond);
    }
    g.freeze();
    return g;
}

inline void save_cg_file(const ConditionGraph& graph, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw_error(Errc::io_error, "cannot open '" + path + "' for writing");
    save_cg(graph, os);
}

inline ConditionGraph load_cg_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw_error(Errc::io_error, "cannot open '" + path + "'");
    return load_cg(is);
}

} // namespace cgqa
