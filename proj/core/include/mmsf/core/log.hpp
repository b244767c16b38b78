// Copyright (c) 2026 the mmsf authors. Licensed under the Apache License 2.0.
#pragma once

namespace mmsf::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Threshold comes from MMSF_LOG_LEVEL (error|warn|info|debug), default warn.
Level threshold();
bool enabled(Level level);
void write(Level level, const char* fmt, ...) __attribute__((format(printf, 2, 3)));

}  // namespace mmsf::log
