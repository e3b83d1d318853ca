#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "keysynth/types.hpp"

namespace keysynth::io {

// Shortest representation that parses back to the same double. Used for
// every number we write so reruns produce byte-identical files.
std::string format_double(double v);

double parse_double(const std::string& s); // throws IoError on garbage

struct LoadStats {
    std::size_t samples_ok = 0;
    std::size_t samples_skipped = 0; // malformed, counted not fatal
};

// Event-log format: header
//   subject_id,sample_id,key_code,press_time_ms,release_time_ms
// one row per key event, rows of a sample contiguous and press-ordered.
// Ids must not contain commas or newlines. Samples violating the event
// invariants are skipped and counted in stats.
std::vector<KeystrokeSequence> read_events_csv(const std::string& path,
                                               LoadStats* stats = nullptr);

void write_events_csv(const std::string& path,
                      const std::vector<KeystrokeSequence>& samples);

std::string read_file(const std::string& path); // throws IoError
void write_file(const std::string& path, const std::string& content);

} // namespace keysynth::io
