#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oblimon {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed LTL text. `offset()` is the byte offset of the offending token.
class ParseError : public Error {
public:
    ParseError(std::size_t offset, const std::string &what)
        : Error("syntax error at offset " + std::to_string(offset) + ": " + what), offset_(offset)
    {
    }

    std::size_t offset() const noexcept
    {
        return offset_;
    }

private:
    std::size_t offset_;
};

/// Bounded operator with n > m, or a bound that is not a number.
class BoundError : public ParseError {
public:
    using ParseError::ParseError;
};

/// A letter or formula references an atom outside the declared AP list.
class UnknownAtomError : public Error {
public:
    using Error::Error;
};

/// An automaton construction exceeded its configured state budget.
class StateLimitError : public Error {
public:
    StateLimitError(std::size_t limit, const std::string &what)
        : Error(what + " exceeded its limit of " + std::to_string(limit)), limit_(limit)
    {
    }

    std::size_t limit() const noexcept
    {
        return limit_;
    }

private:
    std::size_t limit_;
};

/// Symbol outside the alphabet, malformed automaton file, and similar misuse.
class AutomatonError : public Error {
public:
    using Error::Error;
};

/// Ciphertexts (or keys) bound to different secret keys were combined.
class KeyMismatchError : public Error {
public:
    using Error::Error;
};

/// A ciphertext's noise reached the decryption threshold.
class NoiseOverflowError : public Error {
public:
    using Error::Error;
};

/// Invalid backend or engine configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Block's reachable-set index no longer fits in one TRLWE payload.
class BlockCapacityError : public Error {
public:
    using Error::Error;
};

/// Framing or message-level protocol violation.
class ProtocolError : public Error {
public:
    ProtocolError(std::string code, const std::string &what) : Error(what), code_(std::move(code))
    {
    }

    const std::string &code() const noexcept
    {
        return code_;
    }

private:
    std::string code_;
};

} // namespace oblimon
