#pragma once

#include <stdexcept>
#include <string>

namespace convogen {

// Error taxonomy mirrors the CLI exit codes: config errors (1),
// upstream-artifact errors (2), backend errors (3).

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class UpstreamArtifactError : public std::runtime_error {
public:
    explicit UpstreamArtifactError(const std::string& what) : std::runtime_error(what) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class BackendError : public std::runtime_error {
public:
    explicit BackendError(const std::string& what) : std::runtime_error(what) {}
};

// Retryable failure (timeouts, 429/5xx, injected faults).
class TransientBackendError : public BackendError {
public:
    explicit TransientBackendError(const std::string& what) : BackendError(what) {}
};

// Backend does not implement a required capability (e.g. scoring).
class CapabilityError : public BackendError {
public:
    explicit CapabilityError(const std::string& what) : BackendError(what) {}
};

// Prompt rejected before dispatch (empty or oversize).
class PromptRejectedError : public BackendError {
public:
    explicit PromptRejectedError(const std::string& what) : BackendError(what) {}
};

// Strict mock has no score entry for the requested (context, continuation).
class ScoreLookupError : public BackendError {
public:
    explicit ScoreLookupError(const std::string& what) : BackendError(what) {}
};

// Safety classifier unavailable. Deliberately not a BackendError: scoring
// failures quarantine a record, safety failures halt the pipeline.
class SafetyClientError : public std::runtime_error {
public:
    explicit SafetyClientError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace convogen
