#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace atlas {

enum class ErrorCode {
    DuplicateId,
    UnknownEndpoint,
    CycleCreated,
    IllegalMultiParent,
    DuplicateEdge,
    UnknownId,
    SelectorTooNarrow,
    MalformedContainer,
    MalformedRecord,
    HttpError,
    MixedFingerprintSchema,
    TooFewNeighbors,
    MissingFingerprint,
    EmptyInput,
    DisconnectedInput,
    EmptyLabelSet,
    NoLabeledNodes,
    KeyMismatch,
    InfeasibleSpec,
    NodeSetMismatch,
    IoError,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Every library failure is reported as an Error carrying a code; callers that
// need to branch (the CLI maps IoError to exit status 2) switch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace atlas
