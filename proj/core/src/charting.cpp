#include "atlas/charting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "atlas/error.hpp"

namespace atlas {

RhoPolicy RhoPolicy::parse(const std::string& text) {
    try {
        std::size_t used = 0;
        if (!text.empty() && (text[0] == 'p' || text[0] == 'P')) {
            auto p = std::stod(text.substr(1), &used);
            if (used + 1 != text.size() || !(p > 0.0 && p < 100.0)) throw std::invalid_argument("range");
            return percentile(p);
        }
        auto v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument("format");
        return fixed(v);
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidArgument, "rho policy must look like 'p60' or '0.6', got '" + text + "'");
    }
}

std::string RhoPolicy::to_string() const {
    auto v = value;
    auto s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return kind == Kind::Percentile ? "p" + s : s;
}

void ChartingConfig::validate() const {
    if (K < 2) fail(ErrorCode::InvalidArgument, "K must be at least 2");
    if (!(K_th > 0.0)) fail(ErrorCode::InvalidArgument, "K_th must be positive");
    if (rho_policy.kind == RhoPolicy::Kind::Percentile && !(rho_policy.value > 0.0 && rho_policy.value < 100.0)) {
        fail(ErrorCode::InvalidArgument, "rho percentile must lie in (0, 100)");
    }
    if (duplicate_epsilon < 0.0) fail(ErrorCode::InvalidArgument, "duplicate epsilon must be non-negative");
}

std::string_view to_string(PatternLabel label) { return label == PatternLabel::Snake ? "Snake" : "Fan"; }

std::string_view to_string(Decision decision) {
    switch (decision) {
        case Decision::Source: return "Source";
        case Decision::Duplicate: return "Duplicate";
        case Decision::KnownParents: return "KnownParents";
        case Decision::QuantizedNearest: return "QuantizedNearest";
        case Decision::Spread: return "Spread";
        case Decision::Nearest: return "Nearest";
        case Decision::Snake: return "Snake";
        case Decision::Fan: return "Fan";
        case Decision::TooFewNeighbors: return "TooFewNeighbors";
    }
    return "Unknown";
}

double pattern_correlation(const std::vector<double>& d, const std::vector<double>& times, double query_time) {
    if (d.size() != times.size()) fail(ErrorCode::InvalidArgument, "distance and time series differ in length");
    if (d.size() < 2) fail(ErrorCode::TooFewNeighbors, "need at least 2 neighbours, got " + std::to_string(d.size()));
    const auto n = static_cast<double>(d.size());
    std::vector<double> gap(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) gap[i] = std::abs(times[i] - query_time);
    const double md = std::accumulate(d.begin(), d.end(), 0.0) / n;
    const double mg = std::accumulate(gap.begin(), gap.end(), 0.0) / n;
    double sdg = 0.0, sdd = 0.0, sgg = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        sdg += (d[i] - md) * (gap[i] - mg);
        sdd += (d[i] - md) * (d[i] - md);
        sgg += (gap[i] - mg) * (gap[i] - mg);
    }
    if (sdd <= 0.0 || sgg <= 0.0) return 0.0;
    return sdg / std::sqrt(sdd * sgg);
}

PatternLabel classify_pattern(const std::vector<double>& d, const std::vector<double>& times, double query_time,
                              double rho_th) {
    if (!std::is_sorted(d.begin(), d.end())) fail(ErrorCode::InvalidArgument, "neighbour distances must be ascending");
    return pattern_correlation(d, times, query_time) > rho_th ? PatternLabel::Snake : PatternLabel::Fan;
}

double rho_threshold(std::vector<double> correlations, const RhoPolicy& policy) {
    if (policy.kind == RhoPolicy::Kind::Fixed) return policy.value;
    if (correlations.empty()) return 0.6;
    std::sort(correlations.begin(), correlations.end());
    // Nearest rank: the smallest value with at least p% of the data at or below it.
    const auto n = correlations.size();
    auto rank = static_cast<std::size_t>(std::ceil(policy.value / 100.0 * static_cast<double>(n) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, n);
    return correlations[rank - 1];
}

std::vector<std::vector<ModelId>> find_components(const DistanceMatrix& matrix, double linkage_threshold) {
    const auto n = matrix.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = matrix.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (row[j] < linkage_threshold) {
                auto a = root(i), b = root(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
        }
    }
    std::vector<std::vector<ModelId>> groups(n);
    for (std::size_t i = 0; i < n; ++i) groups[root(i)].push_back(matrix.id(i));
    std::vector<std::vector<ModelId>> out;
    for (auto& g : groups) {
        if (!g.empty()) out.push_back(std::move(g));
    }
    return out;
}

namespace {

constexpr auto kNone = std::numeric_limits<std::size_t>::max();

// Working state for one chart() call. Positions index nodes in (created_at, id) order.
class Charter {
public:
    Charter(const std::vector<ModelNode>& nodes, const DistanceMatrix& matrix, const ChartingConfig& config)
        : matrix_(matrix), config_(config) {
        config.validate();
        if (nodes.empty()) fail(ErrorCode::EmptyInput, "chart() needs at least one node");
        if (matrix.normalization() != config.distance_normalization) {
            fail(ErrorCode::InvalidArgument, "distance matrix normalization differs from the charting config");
        }
        std::vector<const ModelNode*> sorted;
        for (const auto& n : nodes) sorted.push_back(&n);
        std::sort(sorted.begin(), sorted.end(), [](const ModelNode* a, const ModelNode* b) { return earlier(*a, *b); });
        n_ = sorted.size();
        for (std::size_t p = 0; p < n_; ++p) {
            auto mi = matrix.find(sorted[p]->id);
            if (!mi) fail(ErrorCode::MissingFingerprint, "no fingerprint for '" + sorted[p]->id.str() + "'");
            nodes_.push_back(sorted[p]);
            mi_.push_back(*mi);
            pos_of_id_.emplace(sorted[p]->id, p);
            atlas_.add_node(*sorted[p]);
        }
        masked_.assign(n_, 0);
        rep_.assign(n_, kNone);
        known_.resize(n_);
        declared_source_.assign(n_, 0);
    }

    ChartResult run() {
        mark_duplicates();
        mark_quantized();
        collect_known_parents();

        std::vector<double> correlations;
        for (std::size_t p = 0; p < n_; ++p) {
            if (!chartable(p)) continue;
            auto hood = neighbourhood(p);
            if (hood.size() >= 2) correlations.push_back(correlation(p, hood));
        }
        rho_ = rho_threshold(correlations, config_.rho_policy);

        ChartResult result;
        for (std::size_t p = 0; p < n_; ++p) result.decisions[nodes_[p]->id] = place(p);
        result.rho_threshold = rho_;
        result.atlas = std::move(atlas_);
        return result;
    }

private:
    double dist(std::size_t p, std::size_t q) const { return matrix_(mi_[p], mi_[q]); }

    void mark_duplicates() {
        if (!config_.deduplicate) return;
        std::vector<std::size_t> root(n_);
        std::iota(root.begin(), root.end(), 0);
        auto find = [&](std::size_t x) {
            while (root[x] != x) x = root[x] = root[root[x]];
            return x;
        };
        for (std::size_t p = 0; p < n_; ++p) {
            const double* row = matrix_.row(mi_[p]);
            for (std::size_t q = p + 1; q < n_; ++q) {
                if (row[mi_[q]] <= config_.duplicate_epsilon) {
                    auto a = find(p), b = find(q);
                    if (a != b) root[std::max(a, b)] = std::min(a, b);
                }
            }
        }
        for (std::size_t p = 0; p < n_; ++p) {
            auto r = find(p);
            if (r != p) {
                rep_[p] = r;
                masked_[p] = 1;
            }
        }
    }

    void mark_quantized() {
        if (!config_.quantized_are_leaves) return;
        for (std::size_t p = 0; p < n_; ++p) {
            if (nodes_[p]->quantized) masked_[p] = 1;
        }
    }

    void collect_known_parents() {
        if (!config_.honor_known_parents) return;
        for (std::size_t p = 0; p < n_; ++p) {
            if (!nodes_[p]->known_parents) continue;
            // A documented empty parent list pins the node as a source.
            if (nodes_[p]->known_parents->empty()) declared_source_[p] = 1;
            for (const auto& id : *nodes_[p]->known_parents) {
                auto it = pos_of_id_.find(id);
                // Parents outside this component cannot be expressed here.
                if (it == pos_of_id_.end() || it->second == p) continue;
                if (std::find(known_[p].begin(), known_[p].end(), it->second) == known_[p].end()) {
                    known_[p].push_back(it->second);
                }
            }
        }
    }

    bool chartable(std::size_t p) const {
        if (rep_[p] != kNone || !known_[p].empty() || declared_source_[p]) return false;
        if (nodes_[p]->quantized && config_.quantized_attach_nearest) return false;
        return true;
    }

    // K nearest unmasked positions (other than p), optionally only earlier ones.
    std::vector<std::size_t> nearest(std::size_t p, std::size_t K, bool earlier_only) const {
        std::vector<std::size_t> best;
        const double* row = matrix_.row(mi_[p]);
        const std::size_t end = earlier_only ? p : n_;
        for (std::size_t q = 0; q < end; ++q) {
            if (q == p || masked_[q]) continue;
            const double d = row[mi_[q]];
            if (best.size() == K && !(d < row[mi_[best.back()]])) continue;
            auto it = best.end();
            while (it != best.begin() && d < row[mi_[*(it - 1)]]) --it;
            best.insert(it, q);
            if (best.size() > K) best.pop_back();
        }
        return best;
    }

    std::vector<std::size_t> candidates(std::size_t p) const {
        if (config_.temporal_filter) return nearest(p, config_.K, true);
        // Without the time order any node may be a parent; skip the ones that would close a cycle.
        std::vector<std::size_t> all = nearest(p, n_, false);
        std::vector<std::size_t> out;
        for (auto q : all) {
            if (out.size() == config_.K) break;
            if (!atlas_.would_create_cycle(q, p)) out.push_back(q);
        }
        return out;
    }

    std::vector<std::size_t> neighbourhood(std::size_t p) const {
        if (config_.pattern_scope == PatternScope::AllNodes) return nearest(p, config_.K, false);
        return nearest(p, config_.K, config_.temporal_filter);
    }

    double correlation(std::size_t p, const std::vector<std::size_t>& hood) const {
        std::vector<double> d, t;
        for (auto q : hood) {
            d.push_back(dist(p, q));
            t.push_back(static_cast<double>(nodes_[q]->created_at));
        }
        return pattern_correlation(d, t, static_cast<double>(nodes_[p]->created_at));
    }

    std::size_t fan_origin(std::size_t p, const std::vector<std::size_t>& cands) const {
        if (config_.fan_origin == FanOrigin::EarliestCandidate) {
            return *std::min_element(cands.begin(), cands.end());
        }
        const double limit = dist(p, cands.front()) + config_.K_th;
        std::size_t best = kNone;
        auto consider = [&](std::size_t q) {
            if (q == p || masked_[q] || dist(p, q) > limit) return;
            if (config_.temporal_filter && q > p) return;
            if (q < best && !atlas_.would_create_cycle(q, p)) best = q;
        };
        for (auto c : cands) {
            consider(c);
            for (const auto& link : atlas_.in_links(c)) consider(link.node);
        }
        return best == kNone ? *std::min_element(cands.begin(), cands.end()) : best;
    }

    void link(std::size_t parent, std::size_t child, EdgeKind kind) {
        atlas_.add_edge(nodes_[parent]->id, nodes_[child]->id, kind);
    }

    Decision place(std::size_t p) {
        const bool quantized = nodes_[p]->quantized;
        if (!known_[p].empty()) {
            std::vector<std::size_t> accepted;
            for (auto q : known_[p]) {
                if (!atlas_.would_create_cycle(q, p)) accepted.push_back(q);
            }
            EdgeKind kind = accepted.size() >= 2 ? EdgeKind::Merge
                            : quantized           ? EdgeKind::Quantization
                                                  : EdgeKind::Unknown;
            for (auto q : accepted) link(q, p, kind);
            if (!accepted.empty()) return Decision::KnownParents;
        }
        if (declared_source_[p]) return Decision::Source;
        if (rep_[p] != kNone) {
            const auto r = rep_[p];
            if (config_.duplicate_policy == DuplicatePolicy::SameParentAsRepresentative && atlas_.in_degree(r) > 0) {
                auto parents = atlas_.parent_indices(r);
                auto kind = parents.size() >= 2 ? EdgeKind::Merge : EdgeKind::Duplicate;
                for (auto q : parents) {
                    atlas_.add_edge(atlas_.node_at(q).id, nodes_[p]->id, kind);
                }
            } else {
                link(r, p, EdgeKind::Duplicate);
            }
            return Decision::Duplicate;
        }

        auto cands = candidates(p);
        if (cands.empty()) return Decision::Source;
        const auto kind = quantized ? EdgeKind::Quantization : EdgeKind::Unknown;
        const auto nearest_parent = cands.front();

        if (quantized && config_.quantized_attach_nearest) {
            link(nearest_parent, p, kind);
            return Decision::QuantizedNearest;
        }
        if (!config_.snake_fan) {
            link(nearest_parent, p, kind);
            return Decision::Nearest;
        }
        auto hood = config_.pattern_scope == PatternScope::AllNodes ? neighbourhood(p) : cands;
        if (hood.size() < 2) {
            link(nearest_parent, p, kind);
            return Decision::TooFewNeighbors;
        }
        if (dist(p, hood.back()) - dist(p, hood.front()) > config_.K_th) {
            link(nearest_parent, p, kind);
            return Decision::Spread;
        }
        if (correlation(p, hood) > rho_) {
            link(nearest_parent, p, kind);
            return Decision::Snake;
        }
        link(fan_origin(p, cands), p, kind);
        return Decision::Fan;
    }

    const DistanceMatrix& matrix_;
    const ChartingConfig& config_;
    std::size_t n_ = 0;
    std::vector<const ModelNode*> nodes_;
    std::vector<std::size_t> mi_;
    std::unordered_map<ModelId, std::size_t> pos_of_id_;
    std::vector<char> masked_;
    std::vector<std::size_t> rep_;
    std::vector<std::vector<std::size_t>> known_;
    std::vector<char> declared_source_;
    double rho_ = 0.0;
    Atlas atlas_;
};

}  // namespace

ChartResult chart_detailed(const std::vector<ModelNode>& nodes, const DistanceMatrix& matrix,
                           const ChartingConfig& config) {
    return Charter(nodes, matrix, config).run();
}

Atlas chart(const std::vector<ModelNode>& nodes, const DistanceMatrix& matrix, const ChartingConfig& config) {
    return chart_detailed(nodes, matrix, config).atlas;
}

Atlas chart(const std::vector<ModelNode>& nodes, const std::vector<Fingerprint>& fingerprints,
            const ChartingConfig& config) {
    std::unordered_map<ModelId, const Fingerprint*> by_id;
    for (const auto& fp : fingerprints) by_id[fp.id] = &fp;
    std::vector<Fingerprint> used;
    std::unordered_map<ModelId, std::int64_t> times;
    for (const auto& n : nodes) {
        auto it = by_id.find(n.id);
        if (it == by_id.end()) fail(ErrorCode::MissingFingerprint, "no fingerprint for '" + n.id.str() + "'");
        used.push_back(*it->second);
        times[n.id] = n.created_at;
    }
    DistanceOptions options;
    options.normalization = config.distance_normalization;
    auto matrix = compute_distance_matrix(used, times, options);
    return chart(nodes, matrix, config);
}

void apply_quantization_detection(std::vector<ModelNode>& nodes, const std::vector<Fingerprint>& fingerprints,
                                  double threshold) {
    std::unordered_map<ModelId, const Fingerprint*> by_id;
    for (const auto& fp : fingerprints) by_id[fp.id] = &fp;
    for (auto& n : nodes) {
        auto it = by_id.find(n.id);
        if (it != by_id.end() && detect_quantization(*it->second, threshold).quantized) n.quantized = true;
    }
}

}  // namespace atlas
