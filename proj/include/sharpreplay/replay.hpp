#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sharpreplay/rng.hpp"
#include "sharpreplay/tensor.hpp"

namespace sharpreplay {

// One rehearsal example: the input, its label, the soft logits frozen at
// insertion time, and the task it was seen in. z is never refreshed.
struct MemoryItem {
    std::vector<double> x;
    int y = 0;
    std::vector<double> z;
    int task_id = 0;
};

// Reservoir-sampled rehearsal store. After n >= capacity offered items every
// offered item is resident with probability capacity/n. Single writer per
// buffer; movable between threads between uses.
class MemoryBuffer {
public:
    MemoryBuffer(std::size_t capacity, std::size_t class_count);

    // Reservoir step: appends while below capacity, afterwards replaces a
    // uniformly random resident slot with probability capacity/stream_count.
    // Returns whether the item was kept.
    bool offer(MemoryItem item, Rng& rng);

    // min(k, size) distinct items drawn uniformly without replacement.
    [[nodiscard]] std::vector<MemoryItem> sample(std::size_t k, Rng& rng) const;

    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t class_count() const { return class_count_; }
    std::uint64_t stream_count() const { return stream_count_; }
    const std::vector<MemoryItem>& items() const { return items_; }

    // Snapshot for experiment checkpointing. Versioned binary format,
    // little-endian 64-bit floats.
    void save(const std::filesystem::path& path) const;
    static MemoryBuffer load(const std::filesystem::path& path);

private:
    std::size_t capacity_;
    std::size_t class_count_;
    std::uint64_t stream_count_ = 0;
    std::size_t input_dim_ = 0; // fixed by the first offered item
    std::vector<MemoryItem> items_;
};

} // namespace sharpreplay
