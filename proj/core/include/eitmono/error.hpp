#pragma once

#include <stdexcept>
#include <string>

namespace eitmono {

// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated (bad geometry, bad phantom, shape mismatch).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Configuration or file-format problem. The CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Failed factorization, indefinite matrix where definiteness is required, ill-conditioning.
// The CLI maps this to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace eitmono
