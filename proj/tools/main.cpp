#include "cli_app.hpp"

int main(int argc, char** argv) { return risekit::cli::Run(argc, argv); }
