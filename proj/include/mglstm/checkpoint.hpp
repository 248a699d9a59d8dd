#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mglstm/nnet.hpp"

namespace mglstm {

struct Checkpoint {
    Model model;
    std::uint32_t steps = 0;  ///< sequence length the model was trained on
};

/// "MGCK" container: magic, version u16, variant u8, H u32, D u32, T u32,
/// every tensor of `tensors()` as float64 little-endian, then CRC32 (u32)
/// of the tensor payload.
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ck);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& name);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mglstm
