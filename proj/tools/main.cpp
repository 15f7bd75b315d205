#include "cli.hpp"

int main(int argc, char** argv) { return ctxplace::cli::run(argc, argv); }
