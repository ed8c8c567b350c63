#include "atlas/error.hpp"

namespace atlas {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
        case ErrorCode::CycleCreated: return "CycleCreated";
        case ErrorCode::IllegalMultiParent: return "IllegalMultiParent";
        case ErrorCode::DuplicateEdge: return "DuplicateEdge";
        case ErrorCode::UnknownId: return "UnknownId";
        case ErrorCode::SelectorTooNarrow: return "SelectorTooNarrow";
        case ErrorCode::MalformedContainer: return "MalformedContainer";
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::HttpError: return "HttpError";
        case ErrorCode::MixedFingerprintSchema: return "MixedFingerprintSchema";
        case ErrorCode::TooFewNeighbors: return "TooFewNeighbors";
        case ErrorCode::MissingFingerprint: return "MissingFingerprint";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::DisconnectedInput: return "DisconnectedInput";
        case ErrorCode::EmptyLabelSet: return "EmptyLabelSet";
        case ErrorCode::NoLabeledNodes: return "NoLabeledNodes";
        case ErrorCode::KeyMismatch: return "KeyMismatch";
        case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
        case ErrorCode::NodeSetMismatch: return "NodeSetMismatch";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace atlas
