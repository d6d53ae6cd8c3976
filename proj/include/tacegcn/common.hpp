#pragma once

#include <stdexcept>
#include <string>

namespace tacegcn {

// Binary treatment-response class. Class index 0 is the tie-break winner
// everywhere a prediction tie can occur.
enum class Label : int { NonResponder = 0, Responder = 1 };

inline const char* label_name(Label l) {
    return l == Label::Responder ? "R" : "NR";
}

enum class ErrorCode {
    MalformedRecord,
    IoError,
    InvalidConfig,
    TooFewSamples,
    EmptyTumor,
    EmptyList,
    NonPositiveBaseline,
    MissingVolume,
    DivergedLoss,
    DimMismatch,
    LengthMismatch,
    MissingFeatureVector,
    UnknownAttribute,
    AsymmetricInput,
    NegativeWeight,
    ShapeMismatch,
    NonFiniteInput,
    EmptyMask,
    StaleTrace,
    InvalidSampleCount,
    EmptyPredictions,
    SingleClass,
    MissingMeasurements,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
    if (!cond) fail(code, message);
}

}  // namespace tacegcn
