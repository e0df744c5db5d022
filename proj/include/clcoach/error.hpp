#pragma once

#include <stdexcept>
#include <string>

namespace clcoach {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument or configuration value.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Malformed, missing or incompatible input data (files, CSV rows, banks).
class DataError : public Error {
public:
    using Error::Error;
};

// Model or log file written by an incompatible format version.
class VersionError : public DataError {
public:
    using DataError::DataError;
};

class DimensionError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

// Event not legal for the session's current dialogue state.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Query made before any neuron carries a label.
class NoLabelsError : public Error {
public:
    using Error::Error;
};

class EmptyInputError : public Error {
public:
    using Error::Error;
};

class OrderingError : public Error {
public:
    using Error::Error;
};

// Annotator produced a value outside its contract.
class AnnotatorFault : public Error {
public:
    using Error::Error;
};

// An imagination generator failed for a specific seed and target.
class GeneratorError : public Error {
public:
    using Error::Error;
};

class NotAvailableError : public Error {
public:
    using Error::Error;
};

class UnknownSessionError : public Error {
public:
    using Error::Error;
};

class SessionClosedError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

}  // namespace clcoach
