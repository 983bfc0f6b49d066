#pragma once

#include "aloha/trace.hpp"
#include "json_io.hpp"

namespace aloha::detail {

ojson to_json(const TraceStep& s);
TraceStep trace_step_from_json(const ojson& j);

}  // namespace aloha::detail
