#include "privmech/harness.hpp"

int main(int argc, char** argv) { return privmech::cli_main(argc, argv); }
