#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gapfill/series.hpp"

namespace gapfill {

/// 0/1 flag per index; 1 marks a removed (masked) sample.
using Mask = std::vector<std::uint8_t>;

/// Shortest exact decimal representation (%.17g); used wherever a file must
/// round-trip doubles byte-stably.
std::string format_double(double v);

/// Write `content` to `path` via a temp file + rename, so readers never see
/// a partially written file.
void write_text_atomic(const std::string& path, const std::string& content);

/**
 * Series CSV contract: two columns `index,value`, no header unless
 * `skip_header`; missing encoded as an empty value field or the literal NaN;
 * LF or CRLF accepted, LF emitted. Malformed rows raise a parse error naming
 * the 1-based line number; an empty file is an error. Infinities are rejected.
 */
TimeSeries read_series_csv(const std::string& path, bool skip_header = false);
void write_series_csv(const TimeSeries& series, const std::string& path);

Mask read_mask_csv(const std::string& path, bool skip_header = false);
void write_mask_csv(const Mask& mask, std::int64_t origin_index, const std::string& path);

/// Convergence trace as `generation,best_fitness`.
void write_trace_csv(const std::vector<double>& trace, const std::string& path);

}  // namespace gapfill
