// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/ids.hpp"

namespace d2dsim {

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace d2dsim
