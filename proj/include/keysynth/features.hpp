#pragma once

#include <optional>

#include "keysynth/types.hpp"

namespace keysynth {

// code / 255.0; throws InvalidKeyCode outside [0, 255]
double normalize_key(int code);

// Throws MalformedSequence / InvalidKeyCode if the event invariants do not
// hold (strictly increasing press times, release > press, codes in range).
void validate_sequence(const KeystrokeSequence& seq);

// K events -> K-1 feature steps. Throws SequenceTooShort for K < 2.
FeatureSequence extract_features(const KeystrokeSequence& seq);

// Inverse of extraction restricted to holds and inter-key latencies:
//   press[0]    = 0
//   release[j]  = press[j] + holds[j]
//   press[j+1]  = release[j] + inter_keys[j]
// Inter-press and inter-release values are implied and need not be given.
// Throws NonCausalSequence when holds[j] + inter_keys[j] <= 0 (press times
// would not increase); callers that draw the inputs resample on that error.
KeystrokeSequence reconstruct_timestamps(const std::vector<int>& key_codes,
                                         const std::vector<double>& holds,
                                         const std::vector<double>& inter_keys,
                                         std::string subject_id = "synth",
                                         std::string sample_id = "s0");

// Keeps the first max_keys - 1 steps; nullopt when the sequence is shorter
// than max_keys keys. max_keys must be >= 2.
std::optional<FeatureSequence> truncate(const FeatureSequence& fs,
                                        std::size_t max_keys);

} // namespace keysynth
