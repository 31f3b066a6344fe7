// corlab command line: run corridor experiments from a config file.
//
//   corlab run <config>      execute the experiment named in the config
//   corlab check <config>    run the model sanity checks for the config
//   corlab list-presets      show the built-in models and their knobs
//   corlab version           print the tool version

#include <exception>
#include <iostream>
#include <string>

#include "corlab/cli.hpp"

namespace {

int usage(std::ostream& os, int code) {
  os << "usage: corlab run <config>\n"
     << "       corlab check <config>\n"
     << "       corlab list-presets\n"
     << "       corlab version\n"
     << "\n"
     << "exit codes: 0 pass, 2 bad config, 3 guard violation, 4 threshold failure\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage(std::cerr, 2);
  const std::string verb = argv[1];

  try {
    if (verb == "version") {
      std::cout << "corlab " << corlab::cli::version_string() << '\n';
      return 0;
    }
    if (verb == "list-presets") {
      corlab::cli::list_presets(std::cout);
      return 0;
    }
    if (verb == "run" || verb == "check") {
      if (argc != 3) return usage(std::cerr, 2);
      return corlab::cli::run(argv[2], verb == "check");
    }
    if (verb == "-h" || verb == "--help" || verb == "help")
      return usage(std::cout, 0);
    std::cerr << "error: unknown command '" << verb << "'\n";
    return usage(std::cerr, 2);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
