#include "tension/errors.hpp"

#include <sstream>

namespace tension {

namespace {

std::string window_message(double force_n, double gap_m) {
  std::ostringstream os;
  os << "reflector gap " << gap_m * 1e3 << " mm left the operating window at force " << force_n
     << " N";
  return os.str();
}

} // namespace

OutOfWindowError::OutOfWindowError(double force_n, double gap_m)
    : DomainError(window_message(force_n, gap_m)), force_n_(force_n), gap_m_(gap_m) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

} // namespace tension
