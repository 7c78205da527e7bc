#pragma once

#include <stdexcept>
#include <string>

namespace calibforge {

// Bad input from the caller: malformed files, violated preconditions,
// unusable data. The CLI maps these to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input is well-formed but carries too little information to solve.
class DegenerateError : public InputError {
public:
    using InputError::InputError;
};

// Filesystem failures. The message always names the path.
class IoError : public InputError {
public:
    IoError(const std::string& path, const std::string& what)
        : InputError(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Numerical breakdown (singular systems and the like).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace calibforge
