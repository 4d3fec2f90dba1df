#pragma once

#include <stdexcept>
#include <string>

namespace arf {

// Exit codes shared by the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIntegrity = 2;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return kExitUsage; }
};

#define ARF_DEFINE_ERROR(Name, Base)          \
    class Name : public Base {                \
    public:                                   \
        using Base::Base;                     \
    }

ARF_DEFINE_ERROR(ConfigError, Error);
ARF_DEFINE_ERROR(ContractViolation, Error);
ARF_DEFINE_ERROR(InjectionError, Error);
ARF_DEFINE_ERROR(EventError, Error);
ARF_DEFINE_ERROR(PairingError, Error);
ARF_DEFINE_ERROR(RenderError, Error);
ARF_DEFINE_ERROR(HarnessError, Error);
ARF_DEFINE_ERROR(SerializationError, Error);
ARF_DEFINE_ERROR(TransportError, Error);
ARF_DEFINE_ERROR(SchemaError, Error);
ARF_DEFINE_ERROR(FilesystemError, Error);
ARF_DEFINE_ERROR(UndefinedStatistic, Error);
ARF_DEFINE_ERROR(ParseError, Error);

#undef ARF_DEFINE_ERROR

// Integrity failures (answer-key mismatch, digest mismatch, misaligned
// results) map to a distinct exit code.
class IntegrityError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return kExitIntegrity; }
};

class AlignmentError : public IntegrityError {
public:
    using IntegrityError::IntegrityError;
};

}  // namespace arf
