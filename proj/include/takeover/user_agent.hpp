#pragma once

#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace takeover {

class EmptyUserAgent : public std::invalid_argument {
 public:
  EmptyUserAgent() : std::invalid_argument("empty user agent") {}
};

/// A user agent with version numbers removed. Two raw strings that differ
/// only in versions ("iPhone9C4/1706.56", "iPhone9C4/1708.57") compare equal.
class NormalizedUA {
 public:
  NormalizedUA() = default;
  const std::string& value() const { return value_; }

  friend auto operator<=>(const NormalizedUA&, const NormalizedUA&) = default;

 private:
  friend NormalizedUA normalize_ua(std::string_view raw);
  explicit NormalizedUA(std::string v) : value_(std::move(v)) {}
  std::string value_;
};

/// Device strings without whitespace keep the token before the first '/'.
/// Browser-style strings lose their "/<version>" suffixes and standalone
/// version tokens ("10.0", "10_15_7"), with whitespace re-collapsed:
///
///   "Mozilla/5.0 (Windows NT 10.0; Win64; x64) Gecko/20100101 Firefox/70.0"
///     -> "Mozilla (Windows NT; Win64; x64) Gecko Firefox"
///
/// Idempotent. Throws EmptyUserAgent for empty or all-blank input.
NormalizedUA normalize_ua(std::string_view raw);

/// True for digit runs optionally joined by '.' or '_' to alphanumeric runs,
/// e.g. "70.0", "20100101", "10_15_7".
bool is_version_token(std::string_view token);

}  // namespace takeover
