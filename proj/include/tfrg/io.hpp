#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tfrg/components.hpp"

namespace tfrg {

// Voxel file: magic "TFRG", version u16, d u32, N u32, then 4*N^d bytes of
// u32 component labels in row-major site order (0 = occupied). Everything
// little-endian.
constexpr std::uint16_t kVoxelFormatVersion = 1;

struct VoxelData {
    int d = 0;
    std::int64_t N = 0;
    std::vector<std::uint32_t> labels;
};

void dump_voxels(const ComponentStats& stats, const std::string& path);
VoxelData load_voxels(const std::string& path);

// Frozen capacity values keyed by set description (for example "d3_ball_r2"),
// with the solver parameters that produced them.
struct GoldenEntry {
    double capacity = 0.0;
    std::string method;
    std::int64_t R1 = 0;
    std::int64_t R2 = 0;
};

class GoldenTable {
public:
    static GoldenTable load(const std::string& path);  // missing file -> empty table

    std::optional<GoldenEntry> get(const std::string& key) const;
    void set(const std::string& key, const GoldenEntry& entry);
    void save(const std::string& path) const;
    std::size_t size() const { return keys_.size(); }
    const std::vector<std::string>& keys() const { return keys_; }

    static std::string ball_key(int d, std::int64_t r);

private:
    std::vector<std::string> keys_;  // sorted
    std::vector<GoldenEntry> entries_;
};

}  // namespace tfrg
