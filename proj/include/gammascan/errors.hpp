#pragma once

#include <stdexcept>
#include <string>

namespace gammascan {

// Exit-code classes surfaced by the CLI: transport=2, validation=3, math=4.
enum class ErrorClass { Other = 1, Transport = 2, Validation = 3, Math = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& what) : Error(ErrorClass::Validation, what) {}
};

class ZeroVector : public Error {
public:
    explicit ZeroVector(const std::string& what) : Error(ErrorClass::Math, what) {}
};

class InvalidValue : public Error {
public:
    explicit InvalidValue(const std::string& what) : Error(ErrorClass::Validation, what) {}
};

class EmptyInput : public Error {
public:
    explicit EmptyInput(const std::string& what) : Error(ErrorClass::Validation, what) {}
};

class AlphabetEmpty : public Error {
public:
    explicit AlphabetEmpty(const std::string& what) : Error(ErrorClass::Validation, what) {}
};

class ExhaustedDistinct : public Error {
public:
    explicit ExhaustedDistinct(const std::string& what) : Error(ErrorClass::Validation, what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorClass::Validation, what) {}
};

class TransportError : public Error {
public:
    explicit TransportError(const std::string& what) : Error(ErrorClass::Transport, what) {}
};

class ProviderRefusal : public Error {
public:
    ProviderRefusal(int status, const std::string& body)
        : Error(ErrorClass::Transport, "provider refused request (HTTP " + std::to_string(status) + "): " + body),
          status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_ = 0;
};

class EmptyResponse : public Error {
public:
    explicit EmptyResponse(const std::string& what) : Error(ErrorClass::Transport, what) {}
};

class StoreCorrupt : public Error {
public:
    explicit StoreCorrupt(const std::string& what) : Error(ErrorClass::Validation, what) {}
};

class InsufficientBins : public Error {
public:
    explicit InsufficientBins(const std::string& what) : Error(ErrorClass::Math, what) {}
};

class DegenerateAgreement : public Error {
public:
    explicit DegenerateAgreement(const std::string& what) : Error(ErrorClass::Math, what) {}
};

}  // namespace gammascan
