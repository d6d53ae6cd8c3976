#include "tacegcn/common.hpp"

namespace tacegcn {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::EmptyTumor: return "EmptyTumor";
        case ErrorCode::EmptyList: return "EmptyList";
        case ErrorCode::NonPositiveBaseline: return "NonPositiveBaseline";
        case ErrorCode::MissingVolume: return "MissingVolume";
        case ErrorCode::DivergedLoss: return "DivergedLoss";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::MissingFeatureVector: return "MissingFeatureVector";
        case ErrorCode::UnknownAttribute: return "UnknownAttribute";
        case ErrorCode::AsymmetricInput: return "AsymmetricInput";
        case ErrorCode::NegativeWeight: return "NegativeWeight";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::EmptyMask: return "EmptyMask";
        case ErrorCode::StaleTrace: return "StaleTrace";
        case ErrorCode::InvalidSampleCount: return "InvalidSampleCount";
        case ErrorCode::EmptyPredictions: return "EmptyPredictions";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::MissingMeasurements: return "MissingMeasurements";
    }
    return "UnknownError";
}

}  // namespace tacegcn
