#include "sharpreplay/replay.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>

namespace sharpreplay {

MemoryBuffer::MemoryBuffer(std::size_t capacity, std::size_t class_count)
    : capacity_(capacity), class_count_(class_count) {
    if (capacity < 1) throw ConfigError("MemoryBuffer: capacity must be >= 1");
    if (class_count < 1) throw ConfigError("MemoryBuffer: class_count must be >= 1");
}

bool MemoryBuffer::offer(MemoryItem item, Rng& rng) {
    if (item.z.size() != class_count_) {
        throw InputError("MemoryBuffer::offer: logit vector has " +
                         std::to_string(item.z.size()) + " entries, buffer expects " +
                         std::to_string(class_count_));
    }
    if (input_dim_ == 0) {
        input_dim_ = item.x.size();
    } else if (item.x.size() != input_dim_) {
        throw InputError("MemoryBuffer::offer: input has " + std::to_string(item.x.size()) +
                         " features, buffer holds " + std::to_string(input_dim_));
    }
    ++stream_count_;
    if (items_.size() < capacity_) {
        items_.push_back(std::move(item));
        return true;
    }
    std::uniform_int_distribution<std::uint64_t> slot(0, stream_count_ - 1);
    const std::uint64_t j = slot(rng);
    if (j < capacity_) {
        items_[static_cast<std::size_t>(j)] = std::move(item);
        return true;
    }
    return false;
}

std::vector<MemoryItem> MemoryBuffer::sample(std::size_t k, Rng& rng) const {
    const std::size_t n = items_.size();
    const std::size_t take = std::min(k, n);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<MemoryItem> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out.push_back(items_[idx[i]]);
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'S', 'R', 'B', 'F'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n, const char* field) {
        if (pos + n > buf.size()) {
            throw FormatError(std::string("buffer snapshot truncated while reading ") + field);
        }
    }
    std::uint64_t u64(const char* field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        }
        pos += 8;
        return v;
    }
    std::uint32_t u32(const char* field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        }
        pos += 4;
        return v;
    }
    double f64(const char* field) { return std::bit_cast<double>(u64(field)); }
};

} // namespace

void MemoryBuffer::save(const std::filesystem::path& path) const {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, capacity_);
    put_u64(out, class_count_);
    put_u64(out, stream_count_);
    put_u64(out, input_dim_);
    put_u64(out, items_.size());
    for (const MemoryItem& it : items_) {
        put_u32(out, static_cast<std::uint32_t>(it.y));
        put_u32(out, static_cast<std::uint32_t>(it.task_id));
        for (double v : it.x) put_f64(out, v);
        for (double v : it.z) put_f64(out, v);
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

MemoryBuffer MemoryBuffer::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path.string());
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{buf};
    r.need(4, "magic");
    if (std::memcmp(buf.data(), kMagic, 4) != 0) {
        throw FormatError("buffer snapshot: bad magic in " + path.string());
    }
    r.pos = 4;
    const std::uint32_t version = r.u32("version");
    if (version != kVersion) {
        throw FormatError("buffer snapshot: unsupported version " + std::to_string(version));
    }
    const std::uint64_t capacity = r.u64("capacity");
    const std::uint64_t class_count = r.u64("class_count");
    const std::uint64_t stream_count = r.u64("stream_count");
    const std::uint64_t input_dim = r.u64("input_dim");
    const std::uint64_t count = r.u64("item_count");
    if (count > capacity) throw FormatError("buffer snapshot: item count exceeds capacity");

    MemoryBuffer b(static_cast<std::size_t>(capacity), static_cast<std::size_t>(class_count));
    b.stream_count_ = stream_count;
    b.input_dim_ = static_cast<std::size_t>(input_dim);
    b.items_.reserve(static_cast<std::size_t>(count));
    for (std::uint64_t i = 0; i < count; ++i) {
        MemoryItem it;
        it.y = static_cast<int>(r.u32("item label"));
        it.task_id = static_cast<int>(r.u32("item task_id"));
        it.x.resize(static_cast<std::size_t>(input_dim));
        for (double& v : it.x) v = r.f64("item input");
        it.z.resize(static_cast<std::size_t>(class_count));
        for (double& v : it.z) v = r.f64("item logits");
        b.items_.push_back(std::move(it));
    }
    return b;
}

} // namespace sharpreplay
