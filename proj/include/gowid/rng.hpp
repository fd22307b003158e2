#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace gowid {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent seed streams derived from (seed, tag, ...) tuples. Every stream
// a run consumes is derived this way, which is what makes runs replayable and
// safe to parallelize.
inline uint64_t derive_seed(std::initializer_list<uint64_t> parts) {
    uint64_t h = 0x6a09e667f3bcc909ULL;
    for (uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
    return h;
}

// mt19937_64 with explicit value mappings. The standard fully specifies the
// engine's output sequence; the distributions it does not, so we never use
// std::uniform_*_distribution or std::shuffle here.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    // uniform in [0, n); modulo bias is ~n/2^64, irrelevant for simulation use
    uint64_t bounded(uint64_t n) { return next_u64() % n; }

    // uniform in [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n), returned in ascending order
    std::vector<size_t> sample_without_replacement(size_t n, size_t k);

private:
    std::mt19937_64 gen_;
};

std::vector<size_t> make_permutation(size_t n, uint64_t seed);

// Stream tags. Fixed forever: changing one changes every run's outputs.
namespace seed_tag {
inline constexpr uint64_t init_model = 0xA1;
inline constexpr uint64_t epoch = 0xA2;
inline constexpr uint64_t client_sample = 0xA3;
inline constexpr uint64_t balance = 0xA4;
inline constexpr uint64_t split = 0xA5;
inline constexpr uint64_t partition = 0xA6;
inline constexpr uint64_t synth = 0xA7;
}  // namespace seed_tag

// Per-epoch training stream. stream_id is the agent id in federated runs and
// 0 in centralized ones; epoch_index counts all epochs the stream has run
// (round * local_epochs + e for a federated client). A single node training
// R rounds of E epochs therefore consumes the exact seed sequence a
// centralized run of R*E epochs does.
inline uint64_t epoch_seed(uint64_t run_seed, uint64_t stream_id, uint64_t epoch_index) {
    return derive_seed({run_seed, seed_tag::epoch, stream_id, epoch_index});
}

inline uint64_t init_seed(uint64_t run_seed) {
    return derive_seed({run_seed, seed_tag::init_model});
}

}  // namespace gowid
