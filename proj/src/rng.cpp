#include "gowid/rng.hpp"

#include <algorithm>
#include <numeric>

namespace gowid {

std::vector<size_t> Rng::sample_without_replacement(size_t n, size_t k) {
    std::vector<size_t> pool(n);
    std::iota(pool.begin(), pool.end(), size_t{0});
    // partial Fisher-Yates: the first k slots end up holding the sample
    for (size_t i = 0; i < k && i + 1 < n; ++i) {
        size_t j = i + static_cast<size_t>(bounded(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<size_t> make_permutation(size_t n, uint64_t seed) {
    std::vector<size_t> perm(n);
    std::iota(perm.begin(), perm.end(), size_t{0});
    Rng rng(seed);
    rng.shuffle(perm);
    return perm;
}

}  // namespace gowid
