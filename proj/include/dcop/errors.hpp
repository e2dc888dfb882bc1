#pragma once

#include <stdexcept>
#include <string>

namespace dcop {

/// Caller supplied something outside an operation's preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed instance, dataset or checkpoint document.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configured size cap (enumeration, utility table, search nodes) was exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An agent received a message that the embedding protocol forbids.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The message simulator stopped without the target producing a prediction.
class LivenessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dcop
