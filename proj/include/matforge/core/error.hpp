#pragma once

#include <stdexcept>
#include <string>

namespace matforge {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor extents or image dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A value is outside its documented range, or a configuration is invalid.
class ValueError : public Error {
public:
    using Error::Error;
};

// File missing, unreadable, truncated or of the wrong format.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace matforge
