#pragma once

#include <stdexcept>
#include <string>

namespace hsdid {

/// Bad or unreadable input: files, columns, enumerations, config values.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A model could not be estimated (rank, separation, convergence, empty groups).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structural invariant of the data was violated (e.g. housing stress without hardship).
class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hsdid
