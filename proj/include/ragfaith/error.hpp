#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ragfaith {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fatal problem with the knowledge-base input (e.g. a duplicate document id).
class IngestionError : public Error {
public:
    using Error::Error;
};

/// Input that violates a documented schema or invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Transport or vendor failure while talking to a model endpoint.
class ProviderError : public Error {
public:
    using Error::Error;
};

/// Embedding failed after retries; carries how many items had been embedded.
class EmbeddingError : public ProviderError {
public:
    EmbeddingError(const std::string& what, std::size_t embedded)
        : ProviderError(what), embedded_(embedded) {}
    std::size_t embedded() const noexcept { return embedded_; }

private:
    std::size_t embedded_;
};

/// A judge reply that could not be turned into the expected structure.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string raw)
        : Error(what), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

/// Verification reply with a different number of verdicts than claims sent.
class CountMismatchError : public ParseError {
public:
    CountMismatchError(std::size_t expected, std::size_t got, std::string raw)
        : ParseError("expected " + std::to_string(expected) + " verdicts, got " +
                         std::to_string(got),
                     std::move(raw)),
          expected_(expected),
          got_(got) {}
    std::size_t expected() const noexcept { return expected_; }
    std::size_t got() const noexcept { return got_; }

private:
    std::size_t expected_;
    std::size_t got_;
};

/// Judge call that exhausted its retry budget.
class JudgeFailure : public Error {
public:
    using Error::Error;
};

}  // namespace ragfaith
