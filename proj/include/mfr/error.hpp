#pragma once

#include <stdexcept>
#include <string>

namespace mfr {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error { public: using Error::Error; };
class FormatError : public Error { public: using Error::Error; };
class DimensionError : public Error { public: using Error::Error; };
class UnavailableDepthError : public Error { public: using Error::Error; };
class EmptyAccumulatorError : public Error { public: using Error::Error; };
class RangeError : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class EmptyTemplateError : public Error { public: using Error::Error; };
class VersionError : public FormatError { public: using FormatError::FormatError; };
class ChecksumError : public FormatError { public: using FormatError::FormatError; };
class LocalizationError : public Error { public: using Error::Error; };
class SceneSpecError : public Error { public: using Error::Error; };

}  // namespace mfr
