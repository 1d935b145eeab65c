#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace cgqa {

// One entry of a result: a node tuple. Scalars are length-1 tuples,
// condition lists keep their stored order. Tuples produced by
// search_condition additionally remember which fact they came from
// (the triple's node1/node2); that provenance lets a later scoped
// search_node or intersection line a short condition up against the
// full [h, r, t] identity of the fact. Provenance never participates
// in ordering or equality.
struct ResultTuple {
    std::vector<std::string> values;
    std::optional<std::pair<std::string, std::string>> fact; // (node1, node2)

    ResultTuple() = default;
    explicit ResultTuple(std::string scalar) { values.push_back(std::move(scalar)); }
    explicit ResultTuple(std::vector<std::string> v) : values(std::move(v)) {}

    bool operator<(const ResultTuple& o) const { return values < o.values; }
    bool operator==(const ResultTuple& o) const { return values == o.values; }
};

class ResultSet {
public:
    using Storage = std::set<ResultTuple>;
    using const_iterator = Storage::const_iterator;

    ResultSet() = default;

    static ResultSet scalar(std::string value) {
        ResultSet rs;
        rs.insert(ResultTuple(std::move(value)));
        return rs;
    }

    static ResultSet of_labels(const std::vector<std::string>& labels) {
        ResultSet rs;
        for (const auto& l : labels) rs.insert(ResultTuple(l));
        return rs;
    }

    bool insert(ResultTuple t) { return tuples_.insert(std::move(t)).second; }

    bool contains(const std::vector<std::string>& values) const {
        ResultTuple probe;
        probe.values = values;
        return tuples_.count(probe) > 0;
    }

    size_t size() const { return tuples_.size(); }
    bool empty() const { return tuples_.empty(); }
    const_iterator begin() const { return tuples_.begin(); }
    const_iterator end() const { return tuples_.end(); }

    // Scalar projection: a tuple stands for its first label in
    // calculations and comparisons.
    std::vector<std::string> scalars() const {
        std::vector<std::string> out;
        out.reserve(tuples_.size());
        for (const auto& t : tuples_)
            if (!t.values.empty()) out.push_back(t.values.front());
        return out;
    }

    // Rendering for answers and prompts: scalars print bare, longer
    // tuples comma-join their labels. Iteration order is lexicographic,
    // which is the deterministic answer order.
    std::vector<std::string> rendered() const {
        std::vector<std::string> out;
        out.reserve(tuples_.size());
        for (const auto& t : tuples_) out.push_back(render_tuple(t));
        return out;
    }

    static std::string render_tuple(const ResultTuple& t) {
        std::string s;
        for (size_t i = 0; i < t.values.size(); ++i) {
            if (i) s += ", ";
            s += t.values[i];
        }
        return s;
    }

    bool operator==(const ResultSet& o) const { return tuples_ == o.tuples_; }

private:
    Storage tuples_;
};

} // namespace cgqa
