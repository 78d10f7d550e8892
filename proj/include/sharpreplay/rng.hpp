#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sharpreplay {

using Rng = std::mt19937_64;

// One experiment seed fans out into independent named substreams ("init",
// "data-order", "buffer", "transform", ...) so that e.g. changing the SAM
// radius never perturbs the data order. Derivation is splitmix64 over the
// master seed xor an FNV-1a hash of the stream name.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream);

Rng make_stream(std::uint64_t master, std::string_view stream);

} // namespace sharpreplay
