#include "atlas/distance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>
#include <thread>

#include <fcntl.h>
#include <sys/mman.h>
#include <unistd.h>

#include "atlas/error.hpp"

namespace atlas {

struct DistanceMatrix::Storage {
    std::size_t n = 0;
    std::vector<double> dense;
    double* mapped = nullptr;
    std::size_t mapped_bytes = 0;

    Storage(std::size_t n_, const DistanceOptions& options) : n(n_) {
        if (n <= options.dense_limit) {
            dense.assign(n * n, 0.0);
            return;
        }
        auto dir = options.spill_dir;
        if (dir.empty()) {
            const char* env = std::getenv("ATLAS_CACHE_DIR");
            dir = env && *env ? std::filesystem::path(env) : std::filesystem::temp_directory_path();
        }
        std::filesystem::create_directories(dir);
        auto tmpl = (dir / "atlas-matrix-XXXXXX").string();
        std::vector<char> name(tmpl.begin(), tmpl.end());
        name.push_back('\0');
        int fd = ::mkstemp(name.data());
        if (fd < 0) fail(ErrorCode::IoError, "cannot create spill file in '" + dir.string() + "'");
        ::unlink(name.data());  // the mapping keeps the file alive
        mapped_bytes = n * n * sizeof(double);
        if (::ftruncate(fd, static_cast<off_t>(mapped_bytes)) != 0) {
            ::close(fd);
            fail(ErrorCode::IoError, "cannot size spill file");
        }
        void* p = ::mmap(nullptr, mapped_bytes, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
        ::close(fd);
        if (p == MAP_FAILED) fail(ErrorCode::IoError, "cannot map spill file");
        mapped = static_cast<double*>(p);
    }

    ~Storage() {
        if (mapped) ::munmap(mapped, mapped_bytes);
    }

    double* data() { return mapped ? mapped : dense.data(); }
    const double* data() const { return mapped ? mapped : dense.data(); }
};

DistanceMatrix::DistanceMatrix() = default;
DistanceMatrix::~DistanceMatrix() = default;
DistanceMatrix::DistanceMatrix(DistanceMatrix&&) noexcept = default;
DistanceMatrix& DistanceMatrix::operator=(DistanceMatrix&&) noexcept = default;

DistanceMatrix::DistanceMatrix(std::vector<ModelId> ids, std::vector<std::int64_t> created_at,
                               Normalization normalization, const DistanceOptions& options)
    : normalization_(normalization) {
    if (ids.size() != created_at.size()) fail(ErrorCode::InvalidArgument, "ids and times differ in length");
    std::vector<std::size_t> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (created_at[a] != created_at[b]) return created_at[a] < created_at[b];
        return ids[a] < ids[b];
    });
    for (auto k : order) {
        if (!index_.emplace(ids[k], ids_.size()).second) {
            fail(ErrorCode::DuplicateId, "fingerprint id '" + ids[k].str() + "' appears twice");
        }
        ids_.push_back(ids[k]);
        created_at_.push_back(created_at[k]);
    }
    mask_.assign(ids_.size(), 0);
    storage_ = std::make_unique<Storage>(ids_.size(), options);
}

std::size_t DistanceMatrix::index_of(const ModelId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) fail(ErrorCode::UnknownId, "no matrix row for '" + id.str() + "'");
    return it->second;
}

std::optional<std::size_t> DistanceMatrix::find(const ModelId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool DistanceMatrix::disk_backed() const noexcept { return storage_ && storage_->mapped != nullptr; }

const double* DistanceMatrix::row(std::size_t i) const { return storage_->data() + i * storage_->n; }

void DistanceMatrix::set(std::size_t i, std::size_t j, double value) {
    auto* d = storage_->data();
    d[i * storage_->n + j] = value;
    d[j * storage_->n + i] = value;
}

void DistanceMatrix::clear_mask() { std::fill(mask_.begin(), mask_.end(), 0); }

std::vector<ModelId> DistanceMatrix::masked_ids() const {
    std::vector<ModelId> out;
    for (std::size_t i = 0; i < size(); ++i) {
        if (mask_[i]) out.push_back(ids_[i]);
    }
    return out;
}

bool DistanceMatrix::same_values(const DistanceMatrix& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        auto oi = other.find(ids_[i]);
        if (!oi) return false;
        for (std::size_t j = 0; j < size(); ++j) {
            if (i == j) continue;
            if ((*this)(i, j) != other(*oi, other.index_of(ids_[j]))) return false;
        }
    }
    return true;
}

std::vector<double> normalized_values(const Fingerprint& fp, Normalization normalization) {
    std::vector<double> v = fp.values;
    if (normalization == Normalization::UnitNorm) {
        double sq = 0.0;
        for (auto x : v) sq += x * x;
        // An all-zero fingerprint stays zero rather than turning into NaNs.
        if (sq > 0.0) {
            double inv = 1.0 / std::sqrt(sq);
            for (auto& x : v) x *= inv;
        }
    }
    return v;
}

DistanceMatrix compute_distance_matrix(const std::vector<Fingerprint>& fingerprints,
                                       const std::unordered_map<ModelId, std::int64_t>& created_at,
                                       const DistanceOptions& options) {
    if (!fingerprints.empty()) {
        const auto& ref = fingerprints.front();
        for (const auto& fp : fingerprints) {
            if (fp.dim != ref.dim || fp.values.size() != ref.dim || fp.selector != ref.selector || fp.seed != ref.seed) {
                fail(ErrorCode::MixedFingerprintSchema,
                     "fingerprint '" + fp.id.str() + "' differs from '" + ref.id.str() + "' in dim, selector or seed");
            }
        }
    }
    std::vector<ModelId> ids;
    std::vector<std::int64_t> times;
    for (const auto& fp : fingerprints) {
        ids.push_back(fp.id);
        auto it = created_at.find(fp.id);
        times.push_back(it == created_at.end() ? 0 : it->second);
    }
    DistanceMatrix m(ids, times, options.normalization, options);
    const auto n = m.size();
    if (n == 0) return m;
    const auto dim = fingerprints.front().dim;

    // Packed values in matrix order.
    std::vector<double> w(n * dim);
    for (const auto& fp : fingerprints) {
        auto v = normalized_values(fp, options.normalization);
        std::copy(v.begin(), v.end(), w.begin() + static_cast<std::ptrdiff_t>(m.index_of(fp.id) * dim));
    }

    auto worker = [&](std::size_t t, std::size_t nthreads) {
        // Interleaved rows balance the triangular workload.
        for (std::size_t i = t; i < n; i += nthreads) {
            const double* wi = &w[i * dim];
            for (std::size_t j = i + 1; j < n; ++j) {
                const double* wj = &w[j * dim];
                double acc = 0.0;
                for (std::size_t k = 0; k < dim; ++k) {
                    double d = wi[k] - wj[k];
                    acc += d * d;
                }
                m.set(i, j, acc);
            }
        }
    };
    auto nthreads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min<std::size_t>(nthreads, n);
    if (nthreads <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker, t, nthreads);
    }
    return m;
}

std::vector<std::size_t> knn_indices(const DistanceMatrix& matrix, std::size_t query, std::size_t K,
                                     CandidateFilter filter) {
    std::vector<std::size_t> best;
    if (K == 0) return best;
    best.reserve(K + 1);
    const double* row = matrix.row(query);
    const std::size_t end = filter.earlier_only ? query : matrix.size();
    for (std::size_t j = 0; j < end; ++j) {
        if (j == query || matrix.masked(j)) continue;
        if (filter.allowed && !(*filter.allowed)[j]) continue;
        const double d = row[j];
        // Insertion into a short sorted list; strict comparison keeps lower indices first on ties.
        if (best.size() == K && !(d < row[best.back()])) continue;
        auto pos = best.end();
        while (pos != best.begin() && d < row[*(pos - 1)]) --pos;
        best.insert(pos, j);
        if (best.size() > K) best.pop_back();
    }
    return best;
}

std::vector<Neighbor> knn(const DistanceMatrix& matrix, const ModelId& id, std::size_t K, CandidateFilter filter) {
    if (K == 0) fail(ErrorCode::InvalidArgument, "K must be at least 1");
    auto q = matrix.index_of(id);
    std::vector<Neighbor> out;
    for (auto j : knn_indices(matrix, q, K, filter)) out.push_back({matrix.id(j), j, matrix(q, j)});
    return out;
}

namespace {

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t root(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = root(a);
        b = root(b);
        // Lower index becomes the root so roots are group minima.
        if (a < b) parent[b] = a;
        else if (b < a) parent[a] = b;
    }
};

}  // namespace

std::vector<DuplicateGroup> find_exact_duplicates(const DistanceMatrix& matrix, double epsilon) {
    const auto n = matrix.size();
    UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = matrix.row(i);
        for (std::size_t j = i + 1; j < n; ++j) {
            if (row[j] <= epsilon) uf.unite(i, j);
        }
    }
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t i = 0; i < n; ++i) members[uf.root(i)].push_back(i);
    std::vector<DuplicateGroup> out;
    for (std::size_t r = 0; r < n; ++r) {
        if (members[r].size() < 2) continue;
        DuplicateGroup g;
        g.representative = matrix.id(members[r].front());
        for (auto i : members[r]) g.members.push_back(matrix.id(i));
        out.push_back(std::move(g));
    }
    return out;
}

void save_matrix_cache(const DistanceMatrix& matrix, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write matrix cache '" + path.string() + "'");
    out.write("MATL1", 5);
    const std::uint64_t n = matrix.size();
    out.write(reinterpret_cast<const char*>(&n), 8);
    for (const auto& id : matrix.ids()) {
        const auto len = static_cast<std::uint32_t>(id.str().size());
        out.write(reinterpret_cast<const char*>(&len), 4);
        out.write(id.str().data(), len);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = matrix.row(i);
        if (i + 1 < n) out.write(reinterpret_cast<const char*>(row + i + 1), static_cast<std::streamsize>((n - i - 1) * 8));
    }
    if (!out) fail(ErrorCode::IoError, "write failed for matrix cache '" + path.string() + "'");
}

DistanceMatrix load_matrix_cache(const std::filesystem::path& path,
                                 const std::unordered_map<ModelId, std::int64_t>& created_at,
                                 Normalization normalization, const DistanceOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open matrix cache '" + path.string() + "'");
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "MATL1", 5) != 0) fail(ErrorCode::MalformedContainer, "matrix cache has a bad magic");
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 8);
    if (!in) fail(ErrorCode::MalformedContainer, "truncated matrix cache");
    std::vector<ModelId> ids;
    std::vector<std::int64_t> times;
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint32_t len = 0;
        in.read(reinterpret_cast<char*>(&len), 4);
        std::string s(len, '\0');
        in.read(s.data(), len);
        if (!in || s.empty()) fail(ErrorCode::MalformedContainer, "truncated matrix cache id table");
        ids.emplace_back(std::move(s));
        auto it = created_at.find(ids.back());
        times.push_back(it == created_at.end() ? 0 : it->second);
    }
    DistanceMatrix m(ids, times, normalization, options);
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = m.index_of(ids[i]);
    std::vector<double> buf;
    for (std::size_t i = 0; i < n; ++i) {
        buf.resize(n - i - 1);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
        if (!in) fail(ErrorCode::MalformedContainer, "truncated matrix cache values");
        for (std::size_t j = i + 1; j < n; ++j) m.set(pos[i], pos[j], buf[j - i - 1]);
    }
    return m;
}

}  // namespace atlas
