#pragma once

#include <stdexcept>
#include <string>

namespace trisk {

// Base class for all errors raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration value; message names the offending field.
struct ConfigError : Error {
    using Error::Error;
};

// Reward expression failed to parse. Carries source position.
struct DslParseError : Error {
    DslParseError(const std::string& msg, int line, int col)
        : Error(msg + " (line " + std::to_string(line) + ", col " + std::to_string(col) + ")"),
          line(line),
          col(col) {}
    int line;
    int col;
};

// Reward expression failed at evaluation time (division by zero, log domain, ...).
struct DslEvalError : Error {
    using Error::Error;
};

// A single episode could not be completed (e.g. the reward function raised).
struct EpisodeError : Error {
    using Error::Error;
};

// Training aborted (non-finite gradient, episode failure, ...).
struct TrainError : Error {
    using Error::Error;
};

// Evaluation could not produce a result (unreachable recall target, ...).
struct EvalError : Error {
    using Error::Error;
};

// LLM client failure after retries, malformed response, or exhausted fixtures.
struct ClientError : Error {
    using Error::Error;
};

// Prompt template could not be loaded or assembled.
struct PromptError : Error {
    using Error::Error;
};

// Dataset or policy file could not be read or written.
struct IoError : Error {
    using Error::Error;
};

}  // namespace trisk
