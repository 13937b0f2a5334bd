#pragma once

// Undirected co-offending graph over resolved persons.
//
// Two persons are adjacent when they share at least one event; the edge
// weight is the number of distinct shared events. Groups are the connected
// components of the full graph.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "vipar/error.hpp"
#include "vipar/ingest.hpp"

namespace vipar {

struct Edge {
    PersonId u = 0; // u < v
    PersonId v = 0;
    std::uint32_t event_count = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Frozen adjacency in compressed sparse row form. Neighbor lists are sorted.
class CoOffendingGraph {
public:
    CoOffendingGraph() = default;

    std::size_t node_count() const noexcept { return event_count_.size(); }
    std::size_t edge_count() const noexcept { return neighbors_.size() / 2; }

    std::span<const PersonId> neighbors(PersonId v) const {
        return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
    }
    std::span<const std::uint32_t> edge_weights(PersonId v) const {
        return {weights_.data() + offsets_[v], weights_.data() + offsets_[v + 1]};
    }

    // Distinct immediate neighbors.
    std::size_t degree(PersonId v) const { return offsets_[v + 1] - offsets_[v]; }
    // Distinct events the person appears in, including solo events.
    std::uint32_t event_count(PersonId v) const { return event_count_[v]; }

    // 0 when u and v are not adjacent.
    std::uint32_t shared_events(PersonId u, PersonId v) const {
        const auto nb = neighbors(u);
        const auto it = std::lower_bound(nb.begin(), nb.end(), v);
        if (it == nb.end() || *it != v) return 0;
        return weights_[offsets_[u] + static_cast<std::size_t>(it - nb.begin())];
    }

    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        out.reserve(edge_count());
        for (PersonId u = 0; u < node_count(); ++u) {
            const auto nb = neighbors(u);
            const auto w = edge_weights(u);
            for (std::size_t i = 0; i < nb.size(); ++i)
                if (u < nb[i]) out.push_back({u, nb[i], w[i]});
        }
        return out;
    }

    bool contains(PersonId v) const noexcept { return v < node_count(); }

private:
    friend class GraphBuilder;

    std::vector<std::size_t> offsets_{0};
    std::vector<PersonId> neighbors_;
    std::vector<std::uint32_t> weights_;
    std::vector<std::uint32_t> event_count_;
};

// Single-writer accumulator; freeze() produces the immutable graph.
class GraphBuilder {
public:
    explicit GraphBuilder(std::size_t node_count) : event_count_(node_count, 0) {}

    // Adds one event. Repeated persons within the event count once.
    void add_event(std::span<const PersonId> participants) {
        scratch_.assign(participants.begin(), participants.end());
        std::sort(scratch_.begin(), scratch_.end());
        scratch_.erase(std::unique(scratch_.begin(), scratch_.end()), scratch_.end());
        for (auto p : scratch_) {
            if (p >= event_count_.size()) throw NetworkError("person id " + std::to_string(p) + " out of range");
            ++event_count_[p];
        }
        for (std::size_t i = 0; i < scratch_.size(); ++i)
            for (std::size_t j = i + 1; j < scratch_.size(); ++j) ++pairs_[key(scratch_[i], scratch_[j])];
    }

    CoOffendingGraph freeze() const {
        const std::size_t n = event_count_.size();
        std::vector<std::pair<std::uint64_t, std::uint32_t>> sorted(pairs_.begin(), pairs_.end());
        std::sort(sorted.begin(), sorted.end());

        CoOffendingGraph g;
        g.event_count_ = event_count_;
        std::vector<std::size_t> deg(n, 0);
        for (const auto& [k, w] : sorted) {
            ++deg[k >> 32];
            ++deg[k & 0xffffffffu];
        }
        g.offsets_.assign(n + 1, 0);
        for (std::size_t v = 0; v < n; ++v) g.offsets_[v + 1] = g.offsets_[v] + deg[v];
        g.neighbors_.resize(g.offsets_[n]);
        g.weights_.resize(g.offsets_[n]);
        std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
        // Each list gets its lower neighbors, then its higher ones, both ascending.
        std::vector<std::vector<std::pair<PersonId, std::uint32_t>>> lower(n);
        for (const auto& [k, w] : sorted) {
            const auto u = static_cast<PersonId>(k >> 32), v = static_cast<PersonId>(k & 0xffffffffu);
            lower[v].emplace_back(u, w);
        }
        for (std::size_t v = 0; v < n; ++v) {
            for (const auto& [u, w] : lower[v]) {
                g.neighbors_[cursor[v]] = u;
                g.weights_[cursor[v]++] = w;
            }
        }
        for (const auto& [k, w] : sorted) {
            const auto u = static_cast<PersonId>(k >> 32), v = static_cast<PersonId>(k & 0xffffffffu);
            g.neighbors_[cursor[u]] = v;
            g.weights_[cursor[u]++] = w;
        }
        return g;
    }

private:
    static std::uint64_t key(PersonId a, PersonId b) {
        return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
    }

    std::vector<std::uint32_t> event_count_;
    std::unordered_map<std::uint64_t, std::uint32_t> pairs_;
    std::vector<PersonId> scratch_;
};

// Every event with two or more distinct persons adds one to each pair among them.
inline CoOffendingGraph build_graph(const PersonStore& store) {
    GraphBuilder builder(store.persons.size());
    std::vector<PersonId> ids;
    for (const auto& parts : store.event_participants) {
        ids.clear();
        for (const auto& [id, role] : parts) ids.push_back(id);
        builder.add_event(ids);
    }
    return builder.freeze();
}

// Breadth-first expansion truncated at a fixed depth. Reuses its visit
// buffers across calls; one scanner per thread.
class NeighborhoodScanner {
public:
    explicit NeighborhoodScanner(const CoOffendingGraph& g) : graph_(g), stamp_(g.node_count(), 0) {}

    // Calls visit(node, depth) for every node at distance 1..max_depth from
    // source, in BFS order. Stops early when visit returns false.
    template <class Visit>
    void scan(PersonId source, int max_depth, Visit&& visit) {
        if (++epoch_ == 0) {
            std::fill(stamp_.begin(), stamp_.end(), 0);
            epoch_ = 1;
        }
        stamp_[source] = epoch_;
        frontier_.assign(1, source);
        for (int depth = 1; depth <= max_depth && !frontier_.empty(); ++depth) {
            next_.clear();
            for (auto u : frontier_) {
                for (auto w : graph_.neighbors(u)) {
                    if (stamp_[w] == epoch_) continue;
                    stamp_[w] = epoch_;
                    if (!visit(w, depth)) return;
                    next_.push_back(w);
                }
            }
            frontier_.swap(next_);
        }
    }

private:
    const CoOffendingGraph& graph_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t epoch_ = 0;
    std::vector<PersonId> frontier_, next_;
};

inline constexpr int kMaxNeighborhoodDepth = 3;

// All persons within path distance k (1..3) of `person`, excluding itself; sorted.
inline std::vector<PersonId> k_neighborhood(const CoOffendingGraph& g, PersonId person, int k) {
    if (!g.contains(person)) throw NetworkError("unknown person id " + std::to_string(person));
    if (k < 1 || k > kMaxNeighborhoodDepth)
        throw NetworkError("neighborhood depth must be in 1..3, got " + std::to_string(k));
    std::vector<PersonId> out;
    NeighborhoodScanner scanner(g);
    scanner.scan(person, k, [&](PersonId v, int) {
        out.push_back(v);
        return true;
    });
    std::sort(out.begin(), out.end());
    return out;
}

// Union by size with path halving.
class DisjointSet {
public:
    explicit DisjointSet(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0u); }

    std::uint32_t find(std::uint32_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
        return true;
    }

private:
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> size_;
};

struct Group {
    std::uint32_t group_id = 0;     // lowest member id
    std::vector<PersonId> members;  // ascending

    friend bool operator==(const Group&, const Group&) = default;
};

struct Partition {
    std::vector<Group> groups;           // ascending group_id
    std::vector<std::uint32_t> group_of; // person -> index into groups

    const Group& group_for(PersonId p) const { return groups[group_of[p]]; }
};

inline Partition components(const CoOffendingGraph& g) {
    const std::size_t n = g.node_count();
    DisjointSet ds(n);
    for (PersonId u = 0; u < n; ++u)
        for (auto v : g.neighbors(u))
            if (u < v) ds.unite(u, v);

    Partition part;
    part.group_of.assign(n, 0);
    std::vector<std::uint32_t> root_index(n, UINT32_MAX);
    // Ascending scan: the first member seen of each component is its lowest id.
    for (PersonId v = 0; v < n; ++v) {
        const auto r = ds.find(v);
        if (root_index[r] == UINT32_MAX) {
            root_index[r] = static_cast<std::uint32_t>(part.groups.size());
            part.groups.push_back({v, {}});
        }
        part.group_of[v] = root_index[r];
        part.groups[root_index[r]].members.push_back(v);
    }
    return part;
}

inline void write_edges_csv(std::ostream& out, const CoOffendingGraph& g) {
    out << "u,v,event_count\n";
    for (const auto& e : g.edges()) out << e.u << ',' << e.v << ',' << e.event_count << '\n';
}

inline void write_components_csv(std::ostream& out, const Partition& part) {
    out << "person_id,group_id\n";
    for (PersonId v = 0; v < part.group_of.size(); ++v) out << v << ',' << part.group_for(v).group_id << '\n';
}

} // namespace vipar
