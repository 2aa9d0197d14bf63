#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ppgbp/data/types.hpp"

namespace ppgbp::data {

inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::uint32_t kDefaultSamplesPerWindow = 625;
/// Store header: magic, version, n_samp, n_records, then reserved zero bytes.
inline constexpr std::size_t kStoreHeaderBytes = 32;

/// Ingest format ("PPGR"): one subject per file.
void write_record(const SubjectRecord& record, const std::filesystem::path& path);
SubjectRecord read_record(const std::filesystem::path& path);

/// Window sample store ("PPGW"). Every sample must carry exactly n_samp values;
/// an empty list is written with the given n_samp.
void write_store(std::span<const WindowSample> samples, const std::filesystem::path& path,
                 std::uint32_t n_samp = kDefaultSamplesPerWindow);
std::vector<WindowSample> read_store(const std::filesystem::path& path);

/// In-memory encode/decode used by the file functions.
std::vector<std::uint8_t> encode_store(std::span<const WindowSample> samples, std::uint32_t n_samp);
std::vector<WindowSample> decode_store(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_record(const SubjectRecord& record);
SubjectRecord decode_record(std::span<const std::uint8_t> bytes);

}  // namespace ppgbp::data
