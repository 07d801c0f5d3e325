#include "ran/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "ran/errors.hpp"

namespace ran {

namespace {

constexpr char kMagic[8] = {'R', 'A', 'N', 'C', 'K', 'P', 'T', '\n'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

template <typename T>
void put_raw(std::vector<std::uint8_t>& out, T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get_raw(const std::vector<std::uint8_t>& in, std::size_t& off) {
    if (off + sizeof(T) > in.size())
        throw ParseError("checkpoint: truncated input");
    T v;
    std::memcpy(&v, in.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

}  // namespace

void Checkpoint::put(const std::string& name, std::uint64_t rows,
                     std::uint64_t cols, Vec data) {
    if (rows * cols != data.size())
        throw DimensionError("checkpoint: shape does not match data length");
    if (contains(name))
        throw ParseError("checkpoint: duplicate entry '" + name + "'");
    entries_.push_back({name, rows, cols, std::move(data)});
}

bool Checkpoint::contains(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const auto& e) { return e.name == name; });
}

const CheckpointEntry& Checkpoint::get(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return e;
    throw ParseError("checkpoint: missing entry '" + name + "'");
}

void Checkpoint::load_into(Parameter& p) const {
    const CheckpointEntry& e = get(p.name);
    if (e.rows != p.rows || e.cols != p.cols)
        throw DimensionError("checkpoint: shape mismatch for '" + p.name + "'");
    p.value = e.data;
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 8);
    put_raw(out, kVersion);
    put_raw(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
        put_raw(out, static_cast<std::uint32_t>(e.name.size()));
        out.insert(out.end(), e.name.begin(), e.name.end());
        put_raw(out, e.rows);
        put_raw(out, e.cols);
        const auto* p = reinterpret_cast<const std::uint8_t*>(e.data.data());
        out.insert(out.end(), p, p + e.data.size() * sizeof(double));
    }
    return out;
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& bytes) {
    std::size_t off = 0;
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 8) != 0)
        throw ParseError("checkpoint: bad magic");
    off = 8;
    const auto version = get_raw<std::uint32_t>(bytes, off);
    if (version != kVersion)
        throw ParseError("checkpoint: unsupported version " +
                         std::to_string(version));
    const auto count = get_raw<std::uint32_t>(bytes, off);
    Checkpoint ck;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto name_len = get_raw<std::uint32_t>(bytes, off);
        if (off + name_len > bytes.size())
            throw ParseError("checkpoint: truncated name");
        std::string name(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                         bytes.begin() + static_cast<std::ptrdiff_t>(off + name_len));
        off += name_len;
        const auto rows = get_raw<std::uint64_t>(bytes, off);
        const auto cols = get_raw<std::uint64_t>(bytes, off);
        const std::uint64_t n = rows * cols;
        if (off + n * sizeof(double) > bytes.size())
            throw ParseError("checkpoint: truncated data for '" + name + "'");
        Vec data(n);
        std::memcpy(data.data(), bytes.data() + off, n * sizeof(double));
        off += n * sizeof(double);
        ck.put(name, rows, cols, std::move(data));
    }
    return ck;
}

void Checkpoint::save(const std::string& path) const {
    const auto bytes = serialize();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("checkpoint: write failed for '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

}  // namespace ran
