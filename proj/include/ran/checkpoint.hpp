#pragma once

// Flat binary container mapping name -> shaped double array. Round trips are
// bit-exact. Layout (all integers and doubles little-endian):
//
//   bytes 0..7   magic "RANCKPT\n"
//   u32          format version (1)
//   u32          entry count
//   per entry:
//     u32        name length, then that many name bytes
//     u64        rows
//     u64        cols
//     f64[rows*cols]  data, raw IEEE-754 bit patterns
//
// Entries preserve insertion order; duplicate names are rejected on load.

#include <cstdint>
#include <string>
#include <vector>

#include "ran/tensor.hpp"

namespace ran {

struct CheckpointEntry {
    std::string name;
    std::uint64_t rows = 0;
    std::uint64_t cols = 1;
    Vec data;
};

class Checkpoint {
  public:
    void put(const std::string& name, std::uint64_t rows, std::uint64_t cols,
             Vec data);
    void put(const Parameter& p) { put(p.name, p.rows, p.cols, p.value); }

    bool contains(const std::string& name) const;
    const CheckpointEntry& get(const std::string& name) const;

    // Copies values into p; throws DimensionError if shapes disagree.
    void load_into(Parameter& p) const;

    const std::vector<CheckpointEntry>& entries() const { return entries_; }

    std::vector<std::uint8_t> serialize() const;
    static Checkpoint deserialize(const std::vector<std::uint8_t>& bytes);

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

  private:
    std::vector<CheckpointEntry> entries_;
};

}  // namespace ran
