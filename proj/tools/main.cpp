#include "cli_app.hpp"

int main(int argc, char** argv) { return heterseed::cli::run(argc, argv); }
