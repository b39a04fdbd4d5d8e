#pragma once

#include <cstdint>
#include <string>

#include "popfolio/errors.hpp"

namespace popfolio {

// ISO-8601 calendar dates. Panels store dates as "YYYY-MM-DD" strings
// (lexicographic order == chronological order); these helpers exist for
// the synthetic generator, which needs weekday arithmetic.

// Days since 1970-01-01 (Howard Hinnant's civil-days algorithm).
std::int64_t days_from_civil(int y, int m, int d);
void civil_from_days(std::int64_t z, int& y, int& m, int& d);

// Parses "YYYY-MM-DD"; throws DataError on malformed input.
std::int64_t parse_date(const std::string& iso);
std::string format_date(std::int64_t days);

// 0 = Monday ... 6 = Sunday.
int weekday(std::int64_t days);

// Next date that falls on Mon-Fri, strictly after `days`.
std::int64_t next_weekday(std::int64_t days);

} // namespace popfolio
