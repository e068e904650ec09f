#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "mimic/tensor.hpp"

namespace mimic {

/// Flat binary weight container: "MIMW" magic, u32 version, u32 tensor count,
/// then per tensor a u32 rank, u32 dims, and the payload as little-endian
/// 64-bit floats. Round trips are bit-exact.
void save_tensors(const std::filesystem::path& path, std::span<const Tensor> tensors);
std::vector<Tensor> load_tensors(const std::filesystem::path& path);

} // namespace mimic
