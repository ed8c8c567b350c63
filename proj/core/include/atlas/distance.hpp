#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "atlas/fingerprint.hpp"

namespace atlas {

enum class Normalization { None, UnitNorm };

struct DistanceOptions {
    Normalization normalization = Normalization::None;
    std::size_t threads = 0;          // 0 = hardware concurrency
    std::size_t dense_limit = 20000;  // above this the values live in a memory-mapped spill file
    std::filesystem::path spill_dir;  // empty = $ATLAS_CACHE_DIR, else the system temp dir
};

// Squared Euclidean distances between fingerprints, indexed in
// (created_at, id) order. The diagonal reads as +infinity.
class DistanceMatrix {
public:
    DistanceMatrix();
    DistanceMatrix(std::vector<ModelId> ids, std::vector<std::int64_t> created_at, Normalization normalization,
                   const DistanceOptions& options = {});
    ~DistanceMatrix();
    DistanceMatrix(DistanceMatrix&&) noexcept;
    DistanceMatrix& operator=(DistanceMatrix&&) noexcept;

    std::size_t size() const noexcept { return ids_.size(); }
    const std::vector<ModelId>& ids() const noexcept { return ids_; }
    const ModelId& id(std::size_t i) const { return ids_[i]; }
    std::int64_t created_at(std::size_t i) const { return created_at_[i]; }
    std::size_t index_of(const ModelId& id) const;
    std::optional<std::size_t> find(const ModelId& id) const;
    Normalization normalization() const noexcept { return normalization_; }
    bool disk_backed() const noexcept;

    double operator()(std::size_t i, std::size_t j) const {
        return i == j ? std::numeric_limits<double>::infinity() : row(i)[j];
    }
    double at(const ModelId& a, const ModelId& b) const { return (*this)(index_of(a), index_of(b)); }

    // Raw row; entry i of row(i) is unspecified (use operator() for the diagonal).
    const double* row(std::size_t i) const;
    void set(std::size_t i, std::size_t j, double value);

    bool masked(std::size_t i) const { return mask_[i] != 0; }
    void set_masked(std::size_t i, bool masked) { mask_[i] = masked ? 1 : 0; }
    void set_masked(const ModelId& id, bool masked) { set_masked(index_of(id), masked); }
    void clear_mask();
    std::vector<ModelId> masked_ids() const;

    bool same_values(const DistanceMatrix& other) const;  // id-indexed comparison

private:
    struct Storage;
    std::vector<ModelId> ids_;
    std::vector<std::int64_t> created_at_;
    std::unordered_map<ModelId, std::size_t> index_;
    std::vector<char> mask_;
    Normalization normalization_ = Normalization::None;
    std::unique_ptr<Storage> storage_;
};

// Fingerprints must share (dim, selector, seed). Times come from the map when
// given (missing ids count as 0); without it the order is by id alone.
DistanceMatrix compute_distance_matrix(const std::vector<Fingerprint>& fingerprints,
                                       const std::unordered_map<ModelId, std::int64_t>& created_at = {},
                                       const DistanceOptions& options = {});

std::vector<double> normalized_values(const Fingerprint& fp, Normalization normalization);

struct Neighbor {
    ModelId id;
    std::size_t index;
    double distance;
};

struct CandidateFilter {
    bool earlier_only = false;  // strictly earlier in (created_at, id) order
    const std::vector<char>* allowed = nullptr;  // optional per-index allow list
};

// K unmasked candidates with the smallest distance, ascending; ties by matrix order.
std::vector<Neighbor> knn(const DistanceMatrix& matrix, const ModelId& id, std::size_t K,
                          CandidateFilter filter = {});
std::vector<std::size_t> knn_indices(const DistanceMatrix& matrix, std::size_t query, std::size_t K,
                                     CandidateFilter filter = {});

struct DuplicateGroup {
    ModelId representative;
    std::vector<ModelId> members;  // includes the representative, in matrix order
};

// Connected groups under D <= epsilon (exact zero by default), size >= 2.
std::vector<DuplicateGroup> find_exact_duplicates(const DistanceMatrix& matrix, double epsilon = 0.0);

// Cache file: "MATL1", u64 n, per id (u32 length, bytes), then the strict upper
// triangle row-major as little-endian f64. Times and normalization are not
// stored; the loader takes them from the caller.
void save_matrix_cache(const DistanceMatrix& matrix, const std::filesystem::path& path);
DistanceMatrix load_matrix_cache(const std::filesystem::path& path,
                                 const std::unordered_map<ModelId, std::int64_t>& created_at,
                                 Normalization normalization, const DistanceOptions& options = {});

}  // namespace atlas
