#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cktfed {

enum class ErrorCode {
    // netlist
    SyntaxError,
    UnknownDeviceKind,
    DuplicateDeviceId,
    ArityMismatch,
    EmptyCircuit,
    InvalidSize,
    InvalidCircuit,
    // graph / sequence
    DisconnectedGraph,
    NotEulerian,
    StartNotInGraph,
    UnknownToken,
    SelfLoopToken,
    EmptySequence,
    // mining
    EmptyCorpus,
    InvalidArgument,
    NoOccurrences,
    AllNodesIsolated,
    // vocab / lm
    IdOutOfRange,
    InvalidConfig,
    SequenceTooLong,
    EmptyBatch,
    InvalidTemperature,
    // fed / threat
    TooFewSamples,
    ManifestMismatch,
    NoUpdates,
    HistoryEmpty,
    AllClientsFlagged,
    EmptyClient,
    EmptySet,
    // io
    IoError,
    FormatError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Parse failure with a 1-based source position.
class SyntaxError : public Error {
public:
    SyntaxError(int line, int column, const std::string& message);

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Receives non-fatal diagnostics such as a non-optimal eulerization. The
/// default handler writes to std::clog; returns the previous handler.
using WarningHandler = std::function<void(std::string_view)>;
WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

} // namespace cktfed
