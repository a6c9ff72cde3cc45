#include "jslight/cli.hpp"

int main(int argc, char** argv) { return jslight::run(argc, argv); }
