#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "skipgan/gan.hpp"
#include "skipgan/hash.hpp"

namespace skipgan {

inline constexpr char kModelMagic[8] = {'S', 'K', 'I', 'P', 'G', 'A', 'N', '1'};
inline constexpr std::uint32_t kModelVersion = 1;

/// Canonical JSON of a training configuration (every field present).
std::string train_config_to_json(const TrainConfig& config);
/// Fields absent from `document` keep their value in `base`; unknown fields
/// raise ParseError naming the field. The result is validated.
TrainConfig train_config_from_json(std::string_view document, const TrainConfig& base = {});
/// Hash of the canonical JSON; embedded in every downstream artifact.
std::uint64_t config_hash(const TrainConfig& config);

/// Model file: magic, u32 version, u64 header length, JSON header (schema,
/// schema hash, layout, normalizer, config, config hash, training state,
/// target counts), u64 tensor count, tensors (u64 rows, u64 cols, float32
/// row-major), u64 FNV-1a checksum of all preceding bytes.
void save_model(GanModel& model, const std::string& path);
/// Throws FormatError on a bad magic, version, or checksum.
GanModel load_model(const std::string& path);
/// As load_model, and throws SchemaMismatchError unless the stored schema
/// hash equals `expected_schema_hash`.
GanModel load_model(const std::string& path, std::uint64_t expected_schema_hash);

}  // namespace skipgan
