#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace jslight {

// Entry point behind the jslight binary. Results go to `out` as JSON lines;
// failures print {"error": ...} to `err` and return 1; usage errors return 2.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

// "host:port", "[v6]:port" or a bare port (host 127.0.0.1).
std::pair<std::string, int> parse_host_port(const std::string& text);

}  // namespace jslight
