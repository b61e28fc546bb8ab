#pragma once

#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "takeover/analytics.hpp"
#include "takeover/session.hpp"

namespace takeover {

using Json = nlohmann::ordered_json;

/// Ratios are written with at most 4 decimal digits.
double round4(double x);

/// Shortest round-trip text for a double ("0.25", "86400", "1").
std::string format_number(double x);

/// {tp,fp,fn,tn,precision,fpr,fnr,recall}; undefined ratios are null.
Json to_json(const EvalMetrics& m);
Json to_json(const CaseReport& r);
Json to_json(const AggregateReport& a);
Json to_json(const BreachOverlap& b);

/// "value,fraction" CSV; an empty series yields the header only.
void write_ecdf_csv(std::ostream& out, std::span<const double> values);

}  // namespace takeover
