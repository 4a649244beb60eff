#include "cli.hpp"

int main(int argc, char** argv) { return lexsel::cli::run(argc, argv); }
