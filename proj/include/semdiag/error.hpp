#pragma once

#include <stdexcept>
#include <string>

namespace semdiag {

// Base for every error the library throws. Subsystems derive their own kinds
// so callers can map them onto exit codes and HTTP statuses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KnowledgeBaseError : public Error {
 public:
  using Error::Error;
};

class TmsError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class AnswerError : public Error {
 public:
  using Error::Error;
};

class SessionError : public Error {
 public:
  using Error::Error;
};

}  // namespace semdiag
