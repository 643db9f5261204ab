#pragma once

#include <stdexcept>
#include <string>

namespace drlab {

// Every library failure derives from Error so the CLI can map it to an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ResourceError : public Error {
public:
    using Error::Error;
};

class ConsistencyError : public Error {
public:
    using Error::Error;
};

// Raised when a permutation query falls outside the resolved horizon.
class HorizonError : public Error {
public:
    using Error::Error;
};

class ParametersError : public Error {
public:
    using Error::Error;
};

class HypothesisError : public Error {
public:
    using Error::Error;
};

class ModelError : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

}  // namespace drlab
