#pragma once

#include <stdexcept>
#include <string>

namespace privgate {

// Base of every library exception. Each subclass corresponds to one named
// failure mode so callers (and the CLI exit-code mapping) can dispatch on type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PRIVGATE_DEFINE_ERROR(Name, Base)                 \
    class Name : public Base {                            \
    public:                                               \
        explicit Name(const std::string& what) : Base(what) {} \
    }

// policy
PRIVGATE_DEFINE_ERROR(SchemaError, Error);
PRIVGATE_DEFINE_ERROR(DuplicateCode, Error);
PRIVGATE_DEFINE_ERROR(EmptyCatalog, Error);

// detector
PRIVGATE_DEFINE_ERROR(UnsupportedCategory, Error);

// fpe
PRIVGATE_DEFINE_ERROR(FpeError, Error);
PRIVGATE_DEFINE_ERROR(DomainTooSmall, FpeError);
PRIVGATE_DEFINE_ERROR(LengthOutOfRange, FpeError);
PRIVGATE_DEFINE_ERROR(AlphabetViolation, FpeError);
PRIVGATE_DEFINE_ERROR(FormatTooShort, FpeError);
PRIVGATE_DEFINE_ERROR(KeyError, Error);

// anonymizer
PRIVGATE_DEFINE_ERROR(SpanMismatch, Error);

// dlms client
PRIVGATE_DEFINE_ERROR(MalformedOutput, Error);
PRIVGATE_DEFINE_ERROR(MissingLines, MalformedOutput);
PRIVGATE_DEFINE_ERROR(TransportError, Error);
PRIVGATE_DEFINE_ERROR(TimeoutError, TransportError);

class UpstreamError : public Error {
public:
    UpstreamError(int status, std::string body)
        : Error("upstream returned status " + std::to_string(status)),
          status_(status), body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

// gateway
PRIVGATE_DEFINE_ERROR(DetectorUnavailable, Error);
PRIVGATE_DEFINE_ERROR(ConfigError, Error);

// metrics
PRIVGATE_DEFINE_ERROR(EmptyRun, Error);
PRIVGATE_DEFINE_ERROR(NoPositives, Error);
PRIVGATE_DEFINE_ERROR(MissingScores, Error);
PRIVGATE_DEFINE_ERROR(NoEntities, Error);

// dataset
PRIVGATE_DEFINE_ERROR(EntityNotInMessage, SchemaError);

#undef PRIVGATE_DEFINE_ERROR

}  // namespace privgate
