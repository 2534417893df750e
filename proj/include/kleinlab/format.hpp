#pragma once

#include <string>

namespace kleinlab {

/// 17 significant digits, enough to round-trip a double.
std::string fmt17(double v);

}  // namespace kleinlab
