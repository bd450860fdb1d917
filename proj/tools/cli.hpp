#pragma once

#include <iosfwd>

namespace cgdec::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kParse = 2, kContract = 3 };

// Entry point of the cgdec executable; streams are injectable for tests.
int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace cgdec::cli
