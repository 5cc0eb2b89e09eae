#pragma once

#include <string>

#include "cfpr/net.hpp"

namespace cfpr {

/// Binary model format, all multi-byte values little-endian:
///   magic "CFPR", format version u32
///   arch descriptor: input_h, input_w, input_c, layer count (each u32),
///   then per layer: kind u32 (0 conv, 1 pool, 2 dense), channels u32,
///   kernel u32
///   then per layer in declaration order: weights then bias as f64
/// Training metadata is not stored; load_model returns default meta.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

/// Exact byte size a serialized model will occupy.
std::size_t serialized_size(const ArchSpec& arch);

}  // namespace cfpr
