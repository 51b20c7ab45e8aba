#pragma once

#include <filesystem>

#include "duplex/trace.hpp"

namespace duplex {

// Trace container: a directory holding manifest.json plus raw per-participant
// payloads. Activations are row-major little-endian float32 (act_A.f32,
// act_B.f32), tokens little-endian uint32 (tok_A.u32, tok_B.u32) with
// tokens_per_frame entries per frame, VAD one 0/1 byte per frame (vad_A.u8,
// vad_B.u8). The same layout is accepted for externally produced activations.
inline constexpr int kTraceFormatVersion = 1;

void write_trace(const DialogueTrace& trace, const std::filesystem::path& dir);

DialogueTrace read_trace(const std::filesystem::path& dir);

}  // namespace duplex
