#pragma once

#include <stdexcept>
#include <string>

namespace fogsim {

// Base class for everything the library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid scenario/experiment configuration; message names the offending field.
struct ConfigError : Error {
  using Error::Error;
};

// Out-of-range argument to a numeric routine.
struct ParamError : Error {
  using Error::Error;
};

// Input dimensions do not match the model's configuration.
struct ShapeError : Error {
  using Error::Error;
};

// Dataset construction failed (e.g. series shorter than the window).
struct DatasetError : Error {
  using Error::Error;
};

// Training diverged or could not run; message carries the epoch index.
struct TrainError : Error {
  using Error::Error;
};

// Environment rejected an action or a step failed.
struct EnvError : Error {
  using Error::Error;
};

// Config text could not be parsed; message carries the line number.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace fogsim
