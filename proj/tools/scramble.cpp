#include "scramble/cli_app.hpp"

int main(int argc, char** argv) { return scramble::cli::run(argc, argv); }
