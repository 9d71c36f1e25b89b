#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pmspace {

/// Domain error raised by every pmspace module.
///
/// `code` is a stable machine-readable tag (e.g. "nonplanar_face") and `ids`
/// lists the offending faces or vertices, so callers such as the session
/// service can highlight them without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, std::vector<int> ids = {})
      : std::runtime_error(message), code_(std::move(code)), ids_(std::move(ids)) {}

  const std::string& code() const { return code_; }
  const std::vector<int>& ids() const { return ids_; }

 private:
  std::string code_;
  std::vector<int> ids_;
};

}  // namespace pmspace
