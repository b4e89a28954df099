#pragma once

#include <filesystem>
#include <string>

#include "triad/types.hpp"

#include <nlohmann/json.hpp>

namespace triad::map_io {

enum class MapFormat { png16, f32raw };

/// png16: 16-bit grayscale PNG, values mapped to [0,1] by v/65535, normalized=true.
/// f32raw: little-endian float32 payload, dimensions from a JSON sidecar
/// ("<path>.json", {"width","height","dtype":"f32le"}), normalized=false.
AnomalyMap load_anomaly_map(const std::filesystem::path& path, MapFormat format);
void write_anomaly_map(const AnomalyMap& map, const std::filesystem::path& path, MapFormat format);

/// 8-bit grayscale PNG; nonzero pixel -> true.
BinaryMask load_mask(const std::filesystem::path& path);
void write_mask(const BinaryMask& mask, const std::filesystem::path& path);

Raster load_raster(const std::filesystem::path& path);
void write_raster(const Raster& raster, const std::filesystem::path& path);

/// Canonical JSON: sorted keys, 2-space indent, trailing newline. Repeated
/// writes of an equal value are byte-identical.
void write_manifest(const nlohmann::json& record, const std::filesystem::path& path);
nlohmann::json read_manifest(const std::filesystem::path& path);

}  // namespace triad::map_io
