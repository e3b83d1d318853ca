#pragma once

#include <string>
#include <vector>

namespace keysynth {

// One key press/release pair. Times are milliseconds from an arbitrary
// per-sample origin; release_time must be strictly greater than press_time.
struct KeyEvent {
    int key_code = 0; // [0, 255]
    double press_time = 0.0;
    double release_time = 0.0;
};

// Events ordered by strictly increasing press_time. Overlapping holds
// (rollover) are legal: the next press may precede the previous release.
struct KeystrokeSequence {
    std::string subject_id;
    std::string sample_id;
    std::vector<KeyEvent> events;
};

// Timing features for the transition between key j and key j+1 plus the
// hold and code of key j. A sequence of K keys yields K-1 steps; the final
// key contributes only its release time (through inter_release).
struct FeatureStep {
    double hold = 0.0;          // press j -> release j, > 0
    double inter_press = 0.0;   // press j -> press j+1, >= 0
    double inter_release = 0.0; // release j -> release j+1
    double inter_key = 0.0;     // release j -> press j+1, < 0 under rollover
    double key_norm = 0.0;      // key_code j / 255
};

struct FeatureSequence {
    std::string subject_id;
    std::string sample_id;
    std::vector<FeatureStep> steps;
};

} // namespace keysynth
