#pragma once

#include <stdexcept>
#include <string>

namespace keysynth {

// Base class for all library errors. name() is the stable identifier the
// CLI prints on stderr, so renaming a subclass is a breaking change.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual const char* name() const noexcept = 0;
};

#define KEYSYNTH_ERROR(ClassName)                                              \
    class ClassName : public Error {                                           \
    public:                                                                    \
        explicit ClassName(const std::string& msg = #ClassName)                \
            : Error(msg) {}                                                    \
        const char* name() const noexcept override { return #ClassName; }      \
    }

// sequence / feature extraction
KEYSYNTH_ERROR(SequenceTooShort);
KEYSYNTH_ERROR(MalformedSequence);
KEYSYNTH_ERROR(NonCausalSequence);
KEYSYNTH_ERROR(InvalidKeyCode);
KEYSYNTH_ERROR(InvalidParameters);

// density models / synthesis
KEYSYNTH_ERROR(EmptyTrainingSet);
KEYSYNTH_ERROR(InvalidBandwidth);
KEYSYNTH_ERROR(SamplingExhausted);

// neural kit
KEYSYNTH_ERROR(ShapeError);
KEYSYNTH_ERROR(NumericalError);
KEYSYNTH_ERROR(TrainingDiverged);

// detectors
KEYSYNTH_ERROR(EmptyClass);
KEYSYNTH_ERROR(ProtocolViolation);
KEYSYNTH_ERROR(EmptyEvalSet);

// io / harness
KEYSYNTH_ERROR(IoError);
KEYSYNTH_ERROR(EmptyCorpus);

#undef KEYSYNTH_ERROR

} // namespace keysynth
