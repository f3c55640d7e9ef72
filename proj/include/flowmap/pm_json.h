#pragma once

#include "flowmap/program_model.h"

#include <string>
#include <string_view>

// Canonical JSON interchange for program models (.pm.json).

namespace flowmap::pm {

/// Canonical bytes: collections sorted by id, object keys sorted, two-space
/// indentation, trailing newline.
std::string save_pm(const ProgramModel& pm);

/// Parses and validates; throws SchemaError on malformed input, missing or
/// extra keys, wrong value types or dangling ids.
ProgramModel load_pm(std::string_view bytes);

} // namespace flowmap::pm
