#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "termforge/nmt/model.hpp"

namespace termforge::nmt {

inline constexpr std::string_view kCheckpointMagic = "termforge-nmt-v1";

/// Text checkpoint: magic line, config keys, vocabularies, optional merge
/// lists, then every tensor with a `tensor name rows cols` header and values
/// in hexadecimal floating point (exact round trip).
std::string format_checkpoint(const Seq2SeqModel& model);
Seq2SeqModel parse_checkpoint(std::string_view text);

void save_checkpoint(const Seq2SeqModel& model, const std::filesystem::path& path);
Seq2SeqModel load_checkpoint(const std::filesystem::path& path);

}  // namespace termforge::nmt
