#pragma once

// JSON schemas of the file formats. Parsers throw InputError naming the
// offending field.

#include <json.hpp>
#include <string>

#include "bmo/construct.hpp"
#include "bmo/martingale.hpp"
#include "bmo/measure.hpp"
#include "bmo/search.hpp"

namespace bmo {

using Json = nlohmann::json;

Json to_json(const StepFunction& f);
StepFunction step_function_from_json(const Json& j);

Json to_json(const Distribution& d);
Distribution distribution_from_json(const Json& j);

Json to_json(const Expr& e);
ExprPtr expr_from_json(const Json& j);

Json to_json(const MartingaleTree& m);
MartingaleTree martingale_from_json(const Json& j);

Json to_json(const SearchReport& r);
Json to_json(const ValidationReport& r);

// A document holding either a step function or a construction expression.
bool is_expr_json(const Json& j);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace bmo
