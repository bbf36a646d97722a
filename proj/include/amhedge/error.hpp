// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace amh {

/// Error categories. Values line up with the C API status codes.
enum class ErrorCode : int {
  kParameter = 1,
  kDomain = 2,
  kFormat = 3,
  kData = 4,
  kLookup = 5,
  kConfig = 6,
  kSource = 7,
  kIo = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define AMH_DEFINE_ERROR(Name, Code)                                          \
  class Name : public Error {                                                 \
   public:                                                                    \
    explicit Name(const std::string& what) : Error(ErrorCode::Code, what) {} \
  };

AMH_DEFINE_ERROR(ParameterError, kParameter)
AMH_DEFINE_ERROR(DomainError, kDomain)
AMH_DEFINE_ERROR(FormatError, kFormat)
AMH_DEFINE_ERROR(DataError, kData)
AMH_DEFINE_ERROR(LookupError, kLookup)
AMH_DEFINE_ERROR(ConfigError, kConfig)
AMH_DEFINE_ERROR(SourceError, kSource)
AMH_DEFINE_ERROR(IoError, kIo)

#undef AMH_DEFINE_ERROR

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ParameterError(msg);
}

}  // namespace amh
