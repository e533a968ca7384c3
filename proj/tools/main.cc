#include "cli.h"

int main(int argc, char** argv) { return kbc::cli::Run(argc, argv); }
