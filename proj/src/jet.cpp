#include "cma/jet.hpp"

#include <algorithm>
#include <map>
#include <mutex>

namespace cma {

uint64_t JetLayout::pack(const uint8_t* e, int dim) {
    uint64_t key = 0;
    for (int i = 0; i < dim; ++i) key |= uint64_t(e[i] & 0xF) << (4 * i);
    return key;
}

namespace {

void enumerate(int dim, int deg, int slot, uint8_t* cur, std::vector<uint8_t>& out) {
    if (slot == dim - 1) {
        cur[slot] = uint8_t(deg);
        out.insert(out.end(), cur, cur + dim);
        return;
    }
    for (int e = deg; e >= 0; --e) {
        cur[slot] = uint8_t(e);
        enumerate(dim, deg - e, slot + 1, cur, out);
    }
}

} // namespace

JetLayout::JetLayout(int dim, int order) : dim_(dim), order_(order) {
    if (dim < 1 || dim > kMaxDim) throw Error(errc::config, "jet dimension outside [1, 16]");
    if (order < 0 || order > kMaxOrder) throw Error(errc::config, "jet order outside [0, 8]");

    uint8_t cur[kMaxDim] = {};
    offsets_.resize(order + 2);
    for (int deg = 0; deg <= order; ++deg) {
        offsets_[deg] = int(exps_.size()) / dim_;
        enumerate(dim, deg, 0, cur, exps_);
    }
    offsets_[order + 1] = int(exps_.size()) / dim_;

    int n = size();
    degree_.resize(n);
    rank_.reserve(std::size_t(n) * 2);
    for (int i = 0; i < n; ++i) {
        const uint8_t* e = exponents(i);
        int d = 0;
        for (int v = 0; v < dim_; ++v) d += e[v];
        degree_[i] = d;
        rank_.emplace(pack(e, dim_), i);
    }

    // product triples: all (i, j) with deg(i) + deg(j) <= order
    uint8_t sum[kMaxDim];
    for (int i = 0; i < n; ++i) {
        const uint8_t* ei = exponents(i);
        int di = degree_[i];
        int jmax = offsets_[order - di + 1];
        for (int j = 0; j < jmax; ++j) {
            const uint8_t* ej = exponents(j);
            for (int v = 0; v < dim_; ++v) sum[v] = uint8_t(ei[v] + ej[v]);
            auto it = rank_.find(pack(sum, dim_));
            triples_.push_back({uint32_t(it->second), uint32_t(i), uint32_t(j)});
        }
    }
    std::sort(triples_.begin(), triples_.end(), [](const Triple& a, const Triple& b) {
        if (a.k != b.k) return a.k < b.k;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    });
}

int JetLayout::rank(const uint8_t* e) const {
    auto it = rank_.find(pack(e, dim_));
    return it == rank_.end() ? -1 : it->second;
}

std::shared_ptr<const JetLayout> JetLayout::get(int dim, int order) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetLayout>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(dim, order);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto lay = std::shared_ptr<const JetLayout>(new JetLayout(dim, order));
    cache.emplace(key, lay);
    return lay;
}

} // namespace cma
