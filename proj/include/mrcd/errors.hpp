#pragma once

#include <stdexcept>
#include <string>

namespace mrcd {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input data (bad JSONL line, bad provider payload).
struct ParseError : Error {
    using Error::Error;
};

// Input violates a documented contract (duplicate id, single-class training set).
struct ValidationError : Error {
    using Error::Error;
};

// Bad or contradictory configuration.
struct ConfigError : Error {
    using Error::Error;
};

// External provider cannot serve a request and no cached response exists.
struct ProviderUnavailable : Error {
    using Error::Error;
};

// Round-1 demonstration retrieval failed on every configured source.
struct RetrievalError : Error {
    using Error::Error;
};

// LLM transport failure after retries.
struct BackendError : Error {
    using Error::Error;
};

// Checkpoint or cache record fails its integrity check.
struct IntegrityError : Error {
    using Error::Error;
};

}  // namespace mrcd
