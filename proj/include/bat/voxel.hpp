#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bat/errors.hpp"
#include "bat/events.hpp"

namespace bat {

// B temporal bins of bilinearly splatted event polarity, bin-major then
// row-major. Total mass equals the polarity sum of the splatted events.
struct VoxelGrid {
    uint16_t bins = 0;
    uint16_t width = 0;
    uint16_t height = 0;
    uint64_t t0 = 0;
    uint64_t t1 = 0;
    std::vector<double> data;

    double& at(int b, int x, int y) {
        return data[(static_cast<size_t>(b) * height + y) * width + x];
    }
    double at(int b, int x, int y) const {
        return data[(static_cast<size_t>(b) * height + y) * width + x];
    }
    double sum() const;
};

// Splats events with t in [t0, t1] onto B bins: each event lands at
// t* = (B-1)(t - t0)/(t1 - t0) under the triangular kernel max(0, 1-|a|),
// applied along time and (degenerately, for integer coordinates) space.
VoxelGrid voxelize(const EventStream& stream, uint64_t t0, uint64_t t1, int bins);

// Cuts the grid into N contiguous temporal groups of B/N bins each.
std::vector<VoxelGrid> split_groups(const VoxelGrid& grid, int n);

std::vector<uint8_t> write_voxels(const VoxelGrid& grid);
VoxelGrid parse_voxels(const std::vector<uint8_t>& bytes);
void save_voxels(const VoxelGrid& grid, const std::string& path);
VoxelGrid load_voxels(const std::string& path);

}  // namespace bat
