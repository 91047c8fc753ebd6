#pragma once

#include <stdexcept>
#include <string>

namespace stepwise {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A theorem statement the backend could not turn into a root state.
class InitError : public Error {
public:
  using Error::Error;
};

// Misuse of a SearchDag (unknown node, expanding a terminal, corrupt paths).
class DagError : public Error {
public:
  using Error::Error;
};

// A remote endpoint could not be reached or answered garbage. Retriable.
class TransportError : public Error {
public:
  using Error::Error;
};

// Malformed configuration, corpus or table files.
class FormatError : public Error {
public:
  using Error::Error;
};

} // namespace stepwise
