#ifndef ROLLNET_ERRORS_HPP
#define ROLLNET_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rollnet {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// pianoroll
class MalformedMidi : public Error {
 public:
  using Error::Error;
};
class UnsupportedFormat : public Error {
 public:
  using Error::Error;
};
class EmptyAfterQuantization : public Error {
 public:
  using Error::Error;
};
class TooShort : public Error {
 public:
  using Error::Error;
};
class EmptyCorpus : public Error {
 public:
  using Error::Error;
};
class InvalidRoll : public Error {
 public:
  using Error::Error;
};

// network / bptt / optim
class InvalidConfig : public Error {
 public:
  using Error::Error;
};
class LengthMismatch : public Error {
 public:
  using Error::Error;
};
class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared in the forward pass. `timestep` is the
/// offending step index, or -1 when raised outside a sequence.
class NonFiniteActivation : public Error {
 public:
  NonFiniteActivation(const std::string& what, long timestep)
      : Error(what), timestep_(timestep) {}
  long timestep() const noexcept { return timestep_; }

 private:
  long timestep_;
};

class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss at `epoch` (1-based).
class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// persistence
class VersionMismatch : public Error {
 public:
  using Error::Error;
};
class ChecksumMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace rollnet

#endif  // ROLLNET_ERRORS_HPP
