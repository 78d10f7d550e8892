#include "sharpreplay/rng.hpp"

namespace sharpreplay {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view stream) {
    return splitmix64(splitmix64(master) ^ fnv1a(stream));
}

Rng make_stream(std::uint64_t master, std::string_view stream) {
    return Rng(derive_seed(master, stream));
}

} // namespace sharpreplay
