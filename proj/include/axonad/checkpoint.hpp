#pragma once

#include "axonad/data.hpp"
#include "axonad/model.hpp"
#include "axonad/run_config.hpp"
#include "axonad/scoring.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace axonad {

/// Trained detector as persisted on disk.
///
/// Layout: the 5 bytes "AXAD1", the JSON header length as u64 little-endian,
/// the JSON header, then every online and target array as little-endian
/// float32 in manifest order. The header carries the run config, the
/// calibration, the input normalizer, the split and the array manifest
/// (set, name, shape, decay, offset, count); offsets count bytes from the
/// start of the payload.
struct Checkpoint {
    RunConfig config;
    Model model;
    Calibration calibration;
    Normalizer normalizer;
    SplitSpec split;
};

inline constexpr std::string_view kCheckpointMagic = "AXAD1";
inline constexpr int kCheckpointFormatVersion = 1;

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws `E_CHECKPOINT` on bad magic, truncation, or an inconsistent manifest.
Checkpoint parse_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Rounds every parameter to float32 precision, matching what a save/load
/// round-trip produces.
void round_to_float32(Model& m);

}  // namespace axonad
