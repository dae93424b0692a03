#include "bat/voxel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace bat {

namespace {

inline void put_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

inline uint16_t get_u16(const uint8_t* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

double VoxelGrid::sum() const { return std::accumulate(data.begin(), data.end(), 0.0); }

VoxelGrid voxelize(const EventStream& stream, uint64_t t0, uint64_t t1, int bins) {
    if (t0 >= t1) throw InvalidInterval("voxelize requires t0 < t1");
    if (bins < 2) throw BinCountTooSmall("voxelize requires at least 2 bins");

    VoxelGrid grid;
    grid.bins = static_cast<uint16_t>(bins);
    grid.width = stream.geom.width;
    grid.height = stream.geom.height;
    grid.t0 = t0;
    grid.t1 = t1;
    grid.data.assign(static_cast<size_t>(bins) * grid.height * grid.width, 0.0);

    const double span = static_cast<double>(t1 - t0);
    for (const Event& e : stream.events) {
        if (e.t < t0 || e.t > t1) continue;
        double ts = (bins - 1) * (static_cast<double>(e.t - t0) / span);
        // Events carry integer pixel coordinates, so the spatial kernel is a
        // point mass; only the temporal kernel spreads weight.
        int b0 = static_cast<int>(std::floor(ts));
        for (int b = b0; b <= b0 + 1; ++b) {
            if (b < 0 || b >= bins) continue;
            double w = 1.0 - std::abs(ts - b);
            if (w <= 0.0) continue;
            grid.at(b, e.x, e.y) += e.p * w;
        }
    }
    return grid;
}

std::vector<VoxelGrid> split_groups(const VoxelGrid& grid, int n) {
    if (n < 1 || grid.bins % n != 0)
        throw NotDivisible("bin count " + std::to_string(grid.bins) +
                           " not divisible into " + std::to_string(n) + " groups");
    const int per = grid.bins / n;
    const size_t plane = static_cast<size_t>(grid.height) * grid.width;
    std::vector<VoxelGrid> groups;
    groups.reserve(n);
    for (int g = 0; g < n; ++g) {
        VoxelGrid sub;
        sub.bins = static_cast<uint16_t>(per);
        sub.width = grid.width;
        sub.height = grid.height;
        sub.t0 = grid.t0;
        sub.t1 = grid.t1;
        sub.data.assign(grid.data.begin() + static_cast<size_t>(g) * per * plane,
                        grid.data.begin() + static_cast<size_t>(g + 1) * per * plane);
        groups.push_back(std::move(sub));
    }
    return groups;
}

std::vector<uint8_t> write_voxels(const VoxelGrid& grid) {
    std::vector<uint8_t> out;
    out.reserve(10 + grid.data.size() * 4);
    out.insert(out.end(), {'V', 'X', 'G', '1'});
    put_u16(out, grid.bins);
    put_u16(out, grid.height);
    put_u16(out, grid.width);
    for (double v : grid.data) {
        float f = static_cast<float>(v);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(bits >> (8 * i)));
    }
    return out;
}

VoxelGrid parse_voxels(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 10 || std::memcmp(bytes.data(), "VXG1", 4) != 0)
        throw MalformedRecord("not a VXG1 payload");
    VoxelGrid grid;
    grid.bins = get_u16(bytes.data() + 4);
    grid.height = get_u16(bytes.data() + 6);
    grid.width = get_u16(bytes.data() + 8);
    size_t count = static_cast<size_t>(grid.bins) * grid.height * grid.width;
    if (bytes.size() != 10 + count * 4)
        throw MalformedRecord("VXG1 payload size mismatch");
    grid.data.resize(count);
    for (size_t i = 0; i < count; ++i) {
        uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<uint32_t>(bytes[10 + i * 4 + b]) << (8 * b);
        float f;
        std::memcpy(&f, &bits, 4);
        grid.data[i] = f;
    }
    return grid;
}

void save_voxels(const VoxelGrid& grid, const std::string& path) {
    auto bytes = write_voxels(grid);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to '" + path + "'");
}

VoxelGrid load_voxels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_voxels(bytes);
}

}  // namespace bat
