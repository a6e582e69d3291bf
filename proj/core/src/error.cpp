#include "cktfed/error.hpp"

#include <iostream>
#include <mutex>

namespace cktfed {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnknownDeviceKind: return "UnknownDeviceKind";
    case ErrorCode::DuplicateDeviceId: return "DuplicateDeviceId";
    case ErrorCode::ArityMismatch: return "ArityMismatch";
    case ErrorCode::EmptyCircuit: return "EmptyCircuit";
    case ErrorCode::InvalidSize: return "InvalidSize";
    case ErrorCode::InvalidCircuit: return "InvalidCircuit";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::NotEulerian: return "NotEulerian";
    case ErrorCode::StartNotInGraph: return "StartNotInGraph";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::SelfLoopToken: return "SelfLoopToken";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoOccurrences: return "NoOccurrences";
    case ErrorCode::AllNodesIsolated: return "AllNodesIsolated";
    case ErrorCode::IdOutOfRange: return "IdOutOfRange";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::SequenceTooLong: return "SequenceTooLong";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::InvalidTemperature: return "InvalidTemperature";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::NoUpdates: return "NoUpdates";
    case ErrorCode::HistoryEmpty: return "HistoryEmpty";
    case ErrorCode::AllClientsFlagged: return "AllClientsFlagged";
    case ErrorCode::EmptyClient: return "EmptyClient";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

SyntaxError::SyntaxError(int line, int column, const std::string& message)
    : Error(ErrorCode::SyntaxError,
            "line " + std::to_string(line) + ", col " + std::to_string(column) + ": " + message),
      line_(line), column_(column) {}

namespace {

std::mutex warn_mutex;

WarningHandler& handler_slot() {
    static WarningHandler h = [](std::string_view m) { std::clog << "warning: " << m << '\n'; };
    return h;
}

} // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
    std::lock_guard lock(warn_mutex);
    auto previous = std::move(handler_slot());
    handler_slot() = std::move(handler);
    return previous;
}

void warn(std::string_view message) {
    std::lock_guard lock(warn_mutex);
    if (handler_slot()) handler_slot()(message);
}

} // namespace cktfed
