#pragma once

#include <string>
#include <variant>

#include "keysynth/detectors.hpp"
#include "keysynth/gnn.hpp"
#include "keysynth/kde.hpp"

namespace keysynth {

using GeneratorModel =
    std::variant<UniversalModel, UserDependentModel, GnnModel>;

// "universal", "userdep" or "gnn"
const char* generator_model_name(const GeneratorModel& m);

// Models persist as versioned JSON. Numbers are written in shortest
// round-trip form, so save/load/save is byte-stable and every double comes
// back bit-exact. load_* throws IoError for unreadable files, foreign
// formats or future versions.
void save_generator(const GeneratorModel& m, const std::string& path);
GeneratorModel load_generator(const std::string& path);

void save_detector(const DetectorModel& m, const std::string& path);
DetectorModel load_detector(const std::string& path);

} // namespace keysynth
