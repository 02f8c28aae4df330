#include "tfrg/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tfrg {

namespace {

void put_u16(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint16_t get_u16(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void dump_voxels(const ComponentStats& stats, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("dump_voxels: cannot open " + path);
    os.write("TFRG", 4);
    put_u16(os, kVoxelFormatVersion);
    put_u32(os, static_cast<std::uint32_t>(stats.geom.d));
    put_u32(os, static_cast<std::uint32_t>(stats.geom.N));
    for (std::uint32_t lab : stats.labels) put_u32(os, lab);
    if (!os) throw std::runtime_error("dump_voxels: write failed for " + path);
}

VoxelData load_voxels(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_voxels: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != "TFRG")
        throw std::runtime_error("load_voxels: bad magic in " + path);
    std::uint16_t version = get_u16(is);
    if (version != kVoxelFormatVersion)
        throw std::runtime_error("load_voxels: unsupported format version in " + path);
    VoxelData v;
    v.d = static_cast<int>(get_u32(is));
    v.N = static_cast<std::int64_t>(get_u32(is));
    std::uint64_t total = 1;
    for (int i = 0; i < v.d; ++i) total *= static_cast<std::uint64_t>(v.N);
    v.labels.resize(total);
    for (std::uint64_t i = 0; i < total; ++i) v.labels[i] = get_u32(is);
    if (!is) throw std::runtime_error("load_voxels: truncated payload in " + path);
    return v;
}

GoldenTable GoldenTable::load(const std::string& path) {
    GoldenTable t;
    std::ifstream is(path);
    if (!is) return t;
    nlohmann::json j;
    is >> j;
    for (auto it = j.at("capacities").begin(); it != j.at("capacities").end(); ++it) {
        GoldenEntry e;
        e.capacity = it.value().at("capacity").get<double>();
        e.method = it.value().value("method", std::string{});
        e.R1 = it.value().value("R1", std::int64_t{0});
        e.R2 = it.value().value("R2", std::int64_t{0});
        t.set(it.key(), e);
    }
    return t;
}

std::optional<GoldenEntry> GoldenTable::get(const std::string& key) const {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    if (it == keys_.end() || *it != key) return std::nullopt;
    return entries_[static_cast<std::size_t>(it - keys_.begin())];
}

void GoldenTable::set(const std::string& key, const GoldenEntry& entry) {
    auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
    std::size_t pos = static_cast<std::size_t>(it - keys_.begin());
    if (it != keys_.end() && *it == key) {
        entries_[pos] = entry;
    } else {
        keys_.insert(it, key);
        entries_.insert(entries_.begin() + static_cast<std::ptrdiff_t>(pos), entry);
    }
}

void GoldenTable::save(const std::string& path) const {
    nlohmann::json caps = nlohmann::json::object();
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        caps[keys_[i]] = {{"capacity", entries_[i].capacity},
                          {"method", entries_[i].method},
                          {"R1", entries_[i].R1},
                          {"R2", entries_[i].R2}};
    }
    nlohmann::json j = {{"capacities", caps}};
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("GoldenTable::save: cannot open " + path);
    os << j.dump(2) << "\n";
}

std::string GoldenTable::ball_key(int d, std::int64_t r) {
    return "d" + std::to_string(d) + "_ball_r" + std::to_string(r);
}

}  // namespace tfrg
