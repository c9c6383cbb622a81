#include "hjm/extended_real.hpp"

#include <charconv>
#include <system_error>

namespace hjm {

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  if (value == 0.0) value = 0.0;  // drop the sign of -0
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) throw InternalError("format_double: to_chars failed");
  return std::string(buffer, end);
}

std::string ExtendedReal::to_string() const { return format_double(value_); }

ExtendedReal ExtendedReal::parse(const std::string& text) {
  if (text == "inf" || text == "+inf") return infinity();
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) throw InputError("ExtendedReal: cannot parse '" + text + "'");
  return ExtendedReal(value);
}

}  // namespace hjm
