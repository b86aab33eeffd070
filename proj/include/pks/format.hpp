#pragma once

#include <string>

#include "json.hpp"

namespace pks {

// Decimal text with 15 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string fmt15(double v);

// The value rounded to 15 significant digits as a JSON number; null when non-finite.
nlohmann::ordered_json num15(double v);

}  // namespace pks
