#pragma once

#include <filesystem>
#include <string>

#include "ad/parameters.hpp"

// Checkpoint container, version 1. All integers little-endian.
//
//   magic    8 bytes  "CDCKPT01"
//   version  u32      1
//   count    u32      number of entries
//   entry*   count times, in lexicographic name order:
//     name_len u32, name bytes (UTF-8)
//     rank     u32, dims u64[rank]
//     payload  f64[prod(dims)], little-endian IEEE-754
namespace cd::ad {

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_parameters(const ParameterStore& store);
ParameterStore deserialize_parameters(const std::string& bytes, const std::string& source);

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path);
ParameterStore load_checkpoint(const std::filesystem::path& path);

// Copies values from `loaded` into `target`; names and shapes must match.
void assign_parameters(ParameterStore& target, const ParameterStore& loaded);

}  // namespace cd::ad
