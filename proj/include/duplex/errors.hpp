#pragma once

#include <stdexcept>

namespace duplex {

// Error families map onto CLI exit codes: usage 1, data 2, numeric 3.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericFault : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Trace container diagnostics: a bad manifest, a truncated payload file and a
// corrupt float payload must stay distinguishable for callers.
class ManifestError : public DataError {
public:
    using DataError::DataError;
};

class SizeMismatchError : public DataError {
public:
    using DataError::DataError;
};

class NonFiniteError : public DataError {
public:
    using DataError::DataError;
};

class ValidationError : public DataError {
public:
    using DataError::DataError;
};

class InvalidVocabError : public DataError {
public:
    using DataError::DataError;
};

// similarity
class InsufficientFramesError : public DataError {
public:
    using DataError::DataError;
};

class DegenerateInputError : public DataError {
public:
    using DataError::DataError;
};

class GridMismatchError : public DataError {
public:
    using DataError::DataError;
};

// probe
class EmptyMaskError : public DataError {
public:
    using DataError::DataError;
};

class UndefinedAucError : public DataError {
public:
    using DataError::DataError;
};

}  // namespace duplex
